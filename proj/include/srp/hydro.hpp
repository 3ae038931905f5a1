#pragma once

// Hydrodynamic-limit engine. The boundary curve
//   y_c(t) = 1 - int e^{-wt} lambda(dw)
// separates items that have jumped at least once (the "renewed" region,
// where the limit measure is stationary) from items still in their initial
// placement. Its inverse t_0, the y-indexed generalization y_c(y,t) with
// inverse y-hat, and the per-atom tail masses U_alpha(y,t) give the closed
// form of the limit measure; pde_residual verifies that closed form against
// the nonlinear transport system
//   dU_a/dt + (sum_b f_b U_b) dU_a/dy = -f_a U_a.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "srp/rate_law.hpp"
#include "srp/specfun.hpp"

namespace srp {

class LimitModel {
public:
    explicit LimitModel(RateLaw law)
        : law_(std::move(law)),
          t_cap_(1e6 / law_.min_rate()) {}

    const RateLaw& law() const { return law_; }

    /// Scaled boundary position at time t; strictly increasing from 0
    /// toward 1.
    double y_c(double t) const {
        if (!(t >= 0.0))
            throw std::invalid_argument("y_c: t must be >= 0");
        return 1.0 - law_.laplace_moment(t, 0);
    }

    /// Distance from stationarity, 1 - y_c(t).
    double relaxation(double t) const { return 1.0 - y_c(t); }

    struct T0Result {
        double t = 0.0;
        bool saturated = false;  // bracket growth hit the time cap
    };

    /// Inverse of y_c. The bracket is grown from [0,1] by doubling; growth
    /// is capped at 1e6 / min_rate, reported through the flag instead of
    /// looping on a flat tail.
    T0Result t0_checked(double y) const {
        if (!(y >= 0.0) || y >= 1.0)
            throw std::domain_error("t0: y must lie in [0, 1)");
        if (y == 0.0)
            return {0.0, false};
        double hi = 1.0;
        while (y_c(hi) < y) {
            hi *= 2.0;
            if (hi >= t_cap_) {
                if (y_c(t_cap_) < y)
                    return {t_cap_, true};
                hi = t_cap_;
                break;
            }
        }
        double lo = hi * 0.5 >= 1.0 && y_c(hi * 0.5) < y ? hi * 0.5 : 0.0;
        double root = find_root([this, y](double t) { return y_c(t) - y; },
                                lo, hi, 1e-13 * std::max(1.0, hi));
        return {root, false};
    }

    double t0(double y) const { return t0_checked(y).t; }

private:
    RateLaw law_;
    double t_cap_;
};

// ---------------------------------------------------------------------------
// Initial profiles: mu_0(dw, dy) = mu_{y,0}(dw) dy with mu_{y,0} constant
// on finitely many blocks partitioning [0,1).
// ---------------------------------------------------------------------------

class InitialProfile {
public:
    struct Block {
        double y_lo;
        double y_hi;
        RateLaw mix;  // Discrete
    };

    explicit InitialProfile(std::vector<Block> blocks)
        : blocks_(std::move(blocks)) {
        if (blocks_.empty())
            throw std::invalid_argument("InitialProfile: no blocks");
        double cursor = 0.0;
        for (const auto& b : blocks_) {
            if (b.mix.kind() != RateLaw::Kind::Discrete)
                throw std::invalid_argument(
                    "InitialProfile: block mixes must be discrete laws");
            if (std::abs(b.y_lo - cursor) > 1e-12 || !(b.y_hi > b.y_lo))
                throw std::invalid_argument(
                    "InitialProfile: blocks must partition [0,1) in order");
            cursor = b.y_hi;
        }
        if (std::abs(cursor - 1.0) > 1e-12)
            throw std::invalid_argument(
                "InitialProfile: blocks must cover [0,1)");
    }

    /// Uniform placement of the law's own mixture: the profile whose tails
    /// are U0_a(y) = rho_a (1 - y).
    static InitialProfile uniform(const RateLaw& law) {
        return InitialProfile({Block{0.0, 1.0, law}});
    }

    const std::vector<Block>& blocks() const { return blocks_; }

    /// y_c(y,t) = 1 - int_y^1 int e^{-wt} mu_{z,0}(dw) dz, evaluated as an
    /// exact block sum.
    double y_c_from(double y, double t) const {
        check_args(y, t);
        NeumaierSum mass;
        for (const auto& b : blocks_) {
            double lo = std::max(b.y_lo, y);
            if (lo >= b.y_hi)
                continue;
            mass.add((b.y_hi - lo) * b.mix.laplace_moment(t, 0));
        }
        return 1.0 - mass.value();
    }

    /// Inverse of y' -> y_c_from(y', t): the initial position of the
    /// particle found at scaled position y at time t, provided it has not
    /// jumped. Defined for y in [y_c_from(0,t), 1); exact per-block since
    /// the map is piecewise affine in y.
    double y_hat(double y, double t) const {
        check_args(y, t);
        double target = 1.0 - y;  // mass that must sit above y-hat
        NeumaierSum acc;
        for (std::size_t i = blocks_.size(); i-- > 0;) {
            const auto& b = blocks_[i];
            double density = b.mix.laplace_moment(t, 0);
            double mass = (b.y_hi - b.y_lo) * density;
            double below = target - acc.value();
            if (mass >= below || i == 0) {
                if (below > mass + 1e-12)
                    throw std::domain_error(
                        "y_hat: y below the boundary y_c(t)");
                double z = b.y_hi - below / density;
                return std::min(std::max(z, 0.0), 1.0);
            }
            acc.add(mass);
        }
        return 0.0;  // unreachable
    }

    /// U0 for the atom with this rate: mu_0({rate}, [y,1)).
    double initial_tail(double rate, double y) const {
        NeumaierSum mass;
        for (const auto& b : blocks_) {
            double lo = std::max(b.y_lo, y);
            if (lo >= b.y_hi)
                continue;
            mass.add((b.y_hi - lo) * weight_of(b.mix, rate));
        }
        return mass.value();
    }

    /// First marginal sum_blocks len * mix, as a discrete law.
    RateLaw marginal_law() const {
        std::vector<std::pair<double, double>> atoms;
        for (const auto& b : blocks_) {
            double len = b.y_hi - b.y_lo;
            const auto& r = b.mix.atom_rates();
            const auto& p = b.mix.atom_weights();
            for (std::size_t i = 0; i < r.size(); ++i)
                atoms.emplace_back(r[i], len * p[i]);
        }
        return RateLaw::discrete(std::move(atoms));
    }

private:
    static void check_args(double y, double t) {
        if (!(y >= 0.0) || y >= 1.0)
            throw std::invalid_argument("InitialProfile: y must be in [0,1)");
        if (!(t >= 0.0))
            throw std::invalid_argument("InitialProfile: t must be >= 0");
    }

    static double weight_of(const RateLaw& mix, double rate) {
        const auto& r = mix.atom_rates();
        const auto& p = mix.atom_weights();
        for (std::size_t i = 0; i < r.size(); ++i)
            if (std::abs(r[i] - rate) <= 1e-12 * std::max(1.0, rate))
                return p[i];
        return 0.0;
    }

    std::vector<Block> blocks_;
};

// ---------------------------------------------------------------------------
// Evolved per-atom tails U_alpha(y,t).
// ---------------------------------------------------------------------------

enum class TailRegime { Renewed, Initial, Boundary };

struct EvolvedTail {
    double y = 0.0;
    double t = 0.0;
    TailRegime regime = TailRegime::Renewed;
    std::vector<double> rates;    // atom rates f_alpha of the law
    std::vector<double> renewed;  // rho_a e^{-f_a t0(y)}; empty in Initial
    std::vector<double> initial;  // U0_a(y-hat) e^{-f_a t}; empty in Renewed

    const std::vector<double>& values() const {
        return regime == TailRegime::Initial ? initial : renewed;
    }
};

namespace detail {

inline void require_discrete(const RateLaw& law, const char* who) {
    if (law.kind() != RateLaw::Kind::Discrete)
        throw std::invalid_argument(std::string(who) +
                                    ": requires a discrete rate law");
}

inline void require_consistent(const LimitModel& model,
                               const InitialProfile& profile,
                               const char* who) {
    auto marginal = profile.marginal_law();
    const auto& lr = model.law().atom_rates();
    const auto& lw = model.law().atom_weights();
    const auto& mr = marginal.atom_rates();
    const auto& mw = marginal.atom_weights();
    if (lr.size() != mr.size())
        throw std::invalid_argument(
            std::string(who) + ": profile atoms do not match the law");
    for (std::size_t i = 0; i < lr.size(); ++i) {
        if (std::abs(lr[i] - mr[i]) > 1e-12 * std::max(1.0, lr[i]) ||
            std::abs(lw[i] - mw[i]) > 1e-9)
            throw std::invalid_argument(
                std::string(who) + ": profile marginal does not match the law");
    }
}

}  // namespace detail

/// The per-atom tail masses of the limit measure at (y,t). Within 1e-12 of
/// the characteristic y = y_c(t) both one-sided values are reported and the
/// regime is flagged Boundary; the formula itself splits there.
inline EvolvedTail evolved_tail(const LimitModel& model,
                                const InitialProfile& profile, double y,
                                double t) {
    detail::require_discrete(model.law(), "evolved_tail");
    detail::require_consistent(model, profile, "evolved_tail");
    if (!(y >= 0.0) || y >= 1.0)
        throw std::invalid_argument("evolved_tail: y must be in [0,1)");
    if (!(t >= 0.0))
        throw std::invalid_argument("evolved_tail: t must be >= 0");

    const auto& rates = model.law().atom_rates();
    const auto& weights = model.law().atom_weights();
    EvolvedTail out;
    out.y = y;
    out.t = t;
    out.rates = rates;

    double yc = model.y_c(t);
    bool at_boundary = std::abs(y - yc) <= 1e-12;

    if (at_boundary || y < yc) {
        double tt = at_boundary ? t : model.t0(y);
        out.renewed.resize(rates.size());
        for (std::size_t a = 0; a < rates.size(); ++a)
            out.renewed[a] = weights[a] * std::exp(-rates[a] * tt);
    }
    if (at_boundary || y > yc) {
        double yh = at_boundary ? 0.0 : profile.y_hat(y, t);
        out.initial.resize(rates.size());
        for (std::size_t a = 0; a < rates.size(); ++a)
            out.initial[a] =
                profile.initial_tail(rates[a], yh) * std::exp(-rates[a] * t);
    }
    out.regime = at_boundary ? TailRegime::Boundary
                 : y < yc    ? TailRegime::Renewed
                             : TailRegime::Initial;
    return out;
}

// ---------------------------------------------------------------------------
// Residual of the transport system on a grid.
// ---------------------------------------------------------------------------

struct PdeGrid {
    double y_min, y_max;
    int ny;
    double t_min, t_max;
    int nt;
};

struct PdeResidualReport {
    std::vector<double> rates;
    std::vector<double> max_abs_residual;  // per atom, over evaluated points
    long evaluated = 0;
    long excluded = 0;  // stencil touched the characteristic margin
    double hy = 0.0;
    double ht = 0.0;
};

/// Central-difference residual of the closed-form tails on the grid.
/// Stencils whose points come within `margin` of the characteristic, or
/// that straddle it, are excluded (the solution is only piecewise smooth
/// across y = y_c(t)). margin <= 0 selects 3 * max(hy, ht).
inline PdeResidualReport pde_residual(const LimitModel& model,
                                      const InitialProfile& profile,
                                      const PdeGrid& grid,
                                      double margin = 0.0) {
    detail::require_discrete(model.law(), "pde_residual");
    detail::require_consistent(model, profile, "pde_residual");
    if (grid.ny < 3 || grid.nt < 3)
        throw std::invalid_argument("pde_residual: grid too small");
    if (!(grid.y_min >= 0.0) || !(grid.y_max < 1.0) ||
        !(grid.y_min < grid.y_max) || !(grid.t_min >= 0.0) ||
        !(grid.t_min < grid.t_max))
        throw std::invalid_argument("pde_residual: bad grid bounds");

    const auto& rates = model.law().atom_rates();
    const std::size_t na = rates.size();
    const int ny = grid.ny, nt = grid.nt;
    const double hy = (grid.y_max - grid.y_min) / (ny - 1);
    const double ht = (grid.t_max - grid.t_min) / (nt - 1);
    if (margin <= 0.0)
        margin = 3.0 * std::max(hy, ht);

    std::vector<double> ys(ny), ts(nt), ycs(nt);
    for (int i = 0; i < ny; ++i)
        ys[i] = grid.y_min + i * hy;
    for (int j = 0; j < nt; ++j) {
        ts[j] = grid.t_min + j * ht;
        ycs[j] = model.y_c(ts[j]);
    }

    // Tabulate U_a over the grid. t0 depends on y only and y-hat on (y,t).
    const auto& weights = model.law().atom_weights();
    std::vector<double> u(na * std::size_t(ny) * nt);
    auto at = [&](std::size_t a, int i, int j) -> double& {
        return u[(a * ny + i) * nt + j];
    };
    for (int i = 0; i < ny; ++i) {
        double t0y = -1.0;  // lazy: only needed in the renewed region
        for (int j = 0; j < nt; ++j) {
            if (ys[i] < ycs[j]) {
                if (t0y < 0.0)
                    t0y = model.t0(ys[i]);
                for (std::size_t a = 0; a < na; ++a)
                    at(a, i, j) = weights[a] * std::exp(-rates[a] * t0y);
            } else {
                double yh = profile.y_hat(ys[i], ts[j]);
                for (std::size_t a = 0; a < na; ++a)
                    at(a, i, j) = profile.initial_tail(rates[a], yh) *
                                  std::exp(-rates[a] * ts[j]);
            }
        }
    }

    PdeResidualReport report;
    report.rates = rates;
    report.max_abs_residual.assign(na, 0.0);
    report.hy = hy;
    report.ht = ht;

    for (int i = 1; i + 1 < ny; ++i) {
        for (int j = 1; j + 1 < nt; ++j) {
            bool ok = true;
            int side = 0;
            const int stencil[5][2] = {
                {i, j}, {i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (auto [si, sj] : stencil) {
                double d = ys[si] - ycs[sj];
                if (std::abs(d) <= margin) {
                    ok = false;
                    break;
                }
                int s = d < 0.0 ? -1 : 1;
                if (side == 0)
                    side = s;
                else if (side != s) {
                    ok = false;
                    break;
                }
            }
            if (!ok) {
                ++report.excluded;
                continue;
            }
            double flux = 0.0;  // sum_b f_b U_b at the center
            for (std::size_t a = 0; a < na; ++a)
                flux += rates[a] * at(a, i, j);
            for (std::size_t a = 0; a < na; ++a) {
                double dudt =
                    (at(a, i, j + 1) - at(a, i, j - 1)) / (2.0 * ht);
                double dudy =
                    (at(a, i + 1, j) - at(a, i - 1, j)) / (2.0 * hy);
                double res =
                    dudt + flux * dudy + rates[a] * at(a, i, j);
                report.max_abs_residual[a] =
                    std::max(report.max_abs_residual[a], std::abs(res));
            }
            ++report.evaluated;
        }
    }
    return report;
}

}  // namespace srp
