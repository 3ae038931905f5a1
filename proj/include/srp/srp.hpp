#pragma once

#include "srp/experiment.hpp"
#include "srp/hydro.hpp"
#include "srp/ranking_sim.hpp"
#include "srp/rate_law.hpp"
#include "srp/report.hpp"
#include "srp/rng.hpp"
#include "srp/search_cost.hpp"
#include "srp/specfun.hpp"
