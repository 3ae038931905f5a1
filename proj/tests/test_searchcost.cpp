#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "srp/rng.hpp"
#include "srp/search_cost.hpp"

using Catch::Approx;
using srp::CostModel;
using srp::InitialProfile;
using srp::RateLaw;

namespace {

RateLaw two_point() { return RateLaw::discrete({{1.0, 0.5}, {2.0, 0.5}}); }

RateLaw random_discrete(srp::SplitMix64& rng) {
    int n = 3 + int(srp::uniform_index(rng, 18));
    std::vector<std::pair<double, double>> atoms;
    double total = 0.0;
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        w[i] = srp::uniform_in_0_1(rng);
        total += w[i];
    }
    for (int i = 0; i < n; ++i)
        atoms.emplace_back(0.1 + 9.9 * srp::uniform_in_0_1(rng), w[i] / total);
    return RateLaw::discrete(std::move(atoms));
}

}  // namespace

TEST_CASE("stationary_tail: stated examples") {
    CostModel delta{RateLaw::point_mass(1.0)};
    for (double x : {0.0, 0.2, 0.5, 0.9})
        CHECK(delta.stationary_tail(x) == Approx(1.0 - x).margin(1e-10));

    CostModel tp{two_point()};
    CHECK(tp.stationary_tail(0.0) == 1.0);
    double u = (std::sqrt(5.0) - 1.0) / 2.0;
    CHECK(tp.stationary_tail(0.5) ==
          Approx((u + 2.0 * u * u) / 3.0).margin(1e-10));

    CostModel heavy{RateLaw::pareto(1.0, 0.5)};
    CHECK_THROWS_AS(heavy.stationary_tail(0.3), srp::DivergentMeanError);
}

TEST_CASE("stationary_tail is a valid survival function") {
    for (const auto& law : {two_point(), RateLaw::pareto(1.0, 2.0)}) {
        CostModel cm{law};
        double prev = 1.0 + 1e-15;
        for (double x = 0.0; x < 0.999; x += 0.005) {
            double v = cm.stationary_tail(x);
            CHECK(v <= prev + 1e-12);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            prev = v;
        }
        CHECK(cm.stationary_tail(0.998) < 0.02);
    }
}

TEST_CASE("stationary_expectation: stated examples") {
    CostModel delta{RateLaw::point_mass(1.0)};
    CHECK(delta.stationary_expectation([](double y) { return y; }) ==
          Approx(0.5).margin(1e-8));
    CHECK(delta.stationary_expectation([](double) { return 1.0; }) ==
          Approx(1.0).margin(1e-9));

    CostModel tp{two_point()};
    CHECK(tp.stationary_expectation([](double y) { return y; }) ==
          Approx(17.0 / 36.0).margin(1e-8));
    CHECK(tp.stationary_expectation([](double) { return 1.0; }) ==
          Approx(1.0).margin(1e-9));
}

TEST_CASE("stationary_expectation: Pareto gamma reduction cross-check") {
    CostModel cm{RateLaw::pareto(1.0, 2.0)};
    auto id = [](double y) { return y; };
    double general = cm.stationary_expectation(id, 1e-9);
    double reduced = cm.stationary_expectation_gamma(id, 1e-10);
    CHECK(general == Approx(reduced).margin(1e-7));
}

TEST_CASE("mean_search_cost: stated examples") {
    for (double w : {0.5, 1.0, 7.0}) {
        CostModel cm{RateLaw::point_mass(w)};
        CHECK(cm.mean_search_cost() == Approx(0.5).margin(1e-12));
    }
    CostModel tp{two_point()};
    CHECK(tp.mean_search_cost() == Approx(17.0 / 36.0).margin(1e-10));

    CostModel pareto{RateLaw::pareto(1.0, 2.0)};
    double m = pareto.mean_search_cost(1e-9);
    CHECK(m > 0.0);
    CHECK(m < 1.0);
    CHECK(m == Approx(0.409137092586740).margin(1e-7));
    CHECK(m == Approx(pareto.stationary_expectation([](double y) { return y; },
                                                    1e-9))
                   .margin(1e-6));
    CHECK_THROWS_AS(CostModel{RateLaw::pareto(1.0, 1.0)}.mean_search_cost(),
                    srp::DivergentMeanError);
}

TEST_CASE("optimal ordering: stated examples") {
    CostModel pareto{RateLaw::pareto(1.0, 2.0)};
    for (double x : {0.04, 0.25, 0.81})
        CHECK(pareto.optimal_tail(x) ==
              Approx(1.0 - std::sqrt(x)).margin(1e-12));
    CHECK(pareto.optimal_tail(1e-12) == Approx(1.0).margin(1e-5));
    // (b-1)/(2b-1) at b=2
    CHECK(pareto.optimal_mean() == Approx(1.0 / 3.0).margin(1e-9));

    CostModel tp{two_point()};
    CHECK(tp.optimal_mean() == Approx(5.0 / 12.0).margin(1e-12));
    CHECK(tp.optimal_tail(0.25) == Approx((2.0 * 0.25 + 1.0 * 0.5) / 1.5)
                                       .margin(1e-12));
}

TEST_CASE("cost_ratio: generic and closed Pareto paths agree") {
    for (double b : {0.5, 0.81, 1.5, 2.0, 3.0}) {
        CostModel cm{RateLaw::pareto(1.0, b)};
        for (double x : {0.05, 0.25, 0.7}) {
            INFO("b=" << b << " x=" << x);
            CHECK(cm.cost_ratio(x) ==
                  Approx(cm.cost_ratio_closed_form(x)).epsilon(1e-8));
        }
    }
    CostModel cm{RateLaw::pareto(1.0, 2.0)};
    CHECK(cm.cost_ratio(0.25) == Approx(1.24913422190365202).epsilon(1e-9));
}

TEST_CASE("cost_ratio: finite-mean laws approach 1 at small x") {
    CostModel tp{two_point()};
    CHECK(std::abs(tp.cost_ratio(1e-4) - 1.0) < 1e-2);
    CHECK(tp.cost_ratio_limit_x0() == 1.0);
}

TEST_CASE("cost_ratio: heavy-tail limit (1-b) Gamma(1-b)^(1/b)") {
    CostModel half{RateLaw::pareto(1.0, 0.5)};
    CHECK(half.cost_ratio_limit_x0() ==
          Approx(M_PI / 2.0).margin(1e-8));
    // Ratio itself stays finite in spite of the divergent mean.
    CHECK(std::isfinite(half.cost_ratio(0.3)));

    for (double b : {0.61, 0.81}) {
        CostModel cm{RateLaw::pareto(1.0, b)};
        double expected = (1.0 - b) * std::pow(std::tgamma(1.0 - b), 1.0 / b);
        INFO("b=" << b);
        CHECK(cm.cost_ratio_limit_x0() == Approx(expected).margin(1e-8));
    }
}

TEST_CASE("cost_ratio: finite-x values approach the heavy-tail limit") {
    CostModel cm{RateLaw::pareto(1.0, 0.61)};
    double limit = cm.cost_ratio_limit_x0();
    double prev_gap = srp::kInf;
    for (double x : {1e-1, 1e-2, 1e-3, 1e-4}) {
        double gap = std::abs(cm.cost_ratio(x) - limit);
        INFO("x=" << x);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 0.01 * limit);
}

TEST_CASE("transient_tail: reductions and continuity") {
    CostModel tp{two_point()};
    auto fresh = InitialProfile::uniform(tp.law());

    // Inside the renewed region the value is exactly the stationary tail.
    double t = 1.0;
    double yc = tp.model().y_c(t);
    for (double x : {0.0, 0.2, yc * 0.99})
        CHECK(tp.transient_tail(fresh, x, t) == tp.stationary_tail(x));

    // At t = 0 with fresh data the tail is 1 - x.
    for (double x : {0.1, 0.5, 0.9})
        CHECK(tp.transient_tail(fresh, x, 0.0) ==
              Approx(1.0 - x).margin(1e-10));

    // Large t covers every x by the stationary regime.
    CHECK(tp.transient_tail(fresh, 0.9, 50.0) == tp.stationary_tail(0.9));

    // Continuity in x across the characteristic (fresh data).
    double lo = tp.transient_tail(fresh, yc - 1e-9, t);
    double hi = tp.transient_tail(fresh, yc + 1e-9, t);
    CHECK(lo == Approx(hi).margin(1e-7));
}

TEST_CASE("transient_tail: agrees with the per-atom evolved tails") {
    CostModel tp{two_point()};
    auto split = InitialProfile({{0.0, 0.5, RateLaw::point_mass(1.0)},
                                 {0.5, 1.0, RateLaw::point_mass(2.0)}});
    for (double t : {0.2, 0.8}) {
        for (double x : {0.1, 0.55, 0.9}) {
            auto et = srp::evolved_tail(tp.model(), split, x, t);
            double num = 0.0;
            for (std::size_t a = 0; a < et.rates.size(); ++a)
                num += et.rates[a] * et.values()[a];
            INFO("t=" << t << " x=" << x);
            CHECK(tp.transient_tail(split, x, t) ==
                  Approx(num / tp.mean_rate()).margin(1e-12));
        }
    }
}

TEST_CASE("miss_probability: stated examples") {
    CostModel delta{RateLaw::point_mass(2.0)};
    for (double t : {0.1, 0.9, 3.0})
        CHECK(delta.miss_probability(t) ==
              Approx(std::exp(-2.0 * t)).epsilon(1e-12));

    CostModel tp{two_point()};
    CHECK(tp.miss_probability(0.0) == 1.0);
    CHECK(tp.miss_probability(1.0) ==
          Approx((std::exp(-1.0) + 2.0 * std::exp(-2.0)) / 3.0)
              .margin(1e-12));
    double prev = 1.0 + 1e-15;
    for (double t : {0.2, 0.5, 1.0, 2.0, 8.0}) {
        double m = tp.miss_probability(t);
        CHECK(m < prev);
        prev = m;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("miss_probability: small-t asymptote error is first order") {
    CostModel cm{RateLaw::pareto(1.0, 1.5)};
    double at = 1e-3;
    CHECK(cm.miss_asymptote_error(at) < 10.0 * at);
    double e2 = cm.miss_asymptote_error(1e-2);
    double e3 = cm.miss_asymptote_error(1e-3);
    double e4 = cm.miss_asymptote_error(1e-4);
    CHECK(e2 / e3 == Approx(10.0).margin(5.0));
    CHECK(e3 / e4 == Approx(10.0).margin(5.0));
    CHECK_THROWS_AS(CostModel{RateLaw::pareto(1.0, 2.5)}.miss_asymptote_error(
                        1e-3),
                    std::invalid_argument);
}

TEST_CASE("conditional_mean_given_rate: stated examples") {
    CostModel delta{RateLaw::point_mass(1.0)};
    CHECK(delta.conditional_mean_given_rate(1.0) == Approx(0.5).margin(1e-12));
    CHECK(delta.conditional_mean_given_rate(1e9) < 1e-6);

    CostModel tp{two_point()};
    CHECK(tp.conditional_mean_given_rate(1.0) ==
          Approx(7.0 / 12.0).margin(1e-12));
    double prev = 1.0;
    for (double w : {0.5, 1.0, 2.0, 8.0, 50.0}) {
        double c = tp.conditional_mean_given_rate(w);
        CHECK(c < prev);
        CHECK(c > 0.0);
        prev = c;
    }
}

TEST_CASE("conditional mean satisfies the tower property") {
    // int cond(w) (size-biased law)(dw) = mean_search_cost
    CostModel tp{two_point()};
    auto sb = tp.law().size_biased();
    double tower = 0.0;
    for (std::size_t i = 0; i < sb.atom_rates().size(); ++i)
        tower += sb.atom_weights()[i] *
                 tp.conditional_mean_given_rate(sb.atom_rates()[i]);
    CHECK(tower == Approx(tp.mean_search_cost()).margin(1e-10));

    CostModel pareto{RateLaw::pareto(1.0, 2.0)};
    auto sbp = pareto.law().size_biased();  // Pareto(1,1)
    auto q = sbp.pareto_expectation(
        [&pareto](double w) {
            return pareto.conditional_mean_given_rate(w, 1e-11);
        },
        1e-9);
    REQUIRE(q.converged);
    CHECK(q.value == Approx(pareto.mean_search_cost(1e-9)).margin(1e-6));
}

TEST_CASE("hit_ratio_exponent: slope approaches b - 1") {
    // The subleading term of 1 - M is O(at), so the window where the
    // log-log slope settles scales like (at)^(2-b); b close to 2 needs a
    // much smaller decade of R.
    struct Case { double b, r_lo; };
    for (auto [b, r_lo] : {Case{1.2, 1e-4}, Case{1.5, 1e-4}, Case{1.9, 1e-8}}) {
        CostModel cm{RateLaw::pareto(1.0, b)};
        std::vector<double> grid;
        for (double r = r_lo; r <= 10.5 * r_lo; r *= std::pow(10.0, 0.25))
            grid.push_back(r);
        auto fit = cm.hit_ratio_exponent(grid);
        INFO("b=" << b);
        CHECK(fit.window_ok);
        CHECK(fit.slope == Approx(b - 1.0).margin(0.05));
    }
    // Grid outside the asymptotic window is flagged.
    CostModel cm{RateLaw::pareto(1.0, 1.5)};
    auto fit = cm.hit_ratio_exponent({0.5, 1.0, 2.0});
    CHECK_FALSE(fit.window_ok);
}

TEST_CASE("universal bounds hold across random laws") {
    srp::SplitMix64 rng(0xb07edULL);
    std::vector<CostModel> models;
    for (int i = 0; i < 15; ++i)
        models.emplace_back(random_discrete(rng));
    for (double b : {1.2, 1.5, 2.0, 3.0})
        models.emplace_back(RateLaw::pareto(1.0, b));
    for (const auto& cm : models) {
        double c = cm.mean_search_cost(1e-9);
        double r = cm.optimal_mean(1e-10);
        CHECK(r <= c + 1e-9);
        CHECK(c <= 2.0 * r - 1e-12);
        CHECK(c <= M_PI / 2.0 * r - 1e-12);
    }
}

TEST_CASE("pointwise min/harmonic inequality") {
    srp::SplitMix64 rng(17);
    for (int i = 0; i < 1000; ++i) {
        double x = 10.0 * srp::uniform_in_0_1(rng);
        double y = 10.0 * srp::uniform_in_0_1(rng);
        double h = x * y / (x + y);
        CHECK(0.5 * std::min(x, y) <= h + 1e-15);
        CHECK(h <= std::min(x, y) + 1e-15);
    }
}

TEST_CASE("divergent-mean rejections carry the dedicated error type") {
    CostModel heavy{RateLaw::pareto(1.0, 0.5)};
    CHECK_THROWS_AS(heavy.miss_probability(1.0), srp::DivergentMeanError);
    CHECK_THROWS_AS(heavy.optimal_mean(), srp::DivergentMeanError);
    CHECK_THROWS_AS(heavy.mean_search_cost(), srp::DivergentMeanError);
    CHECK_THROWS_AS(heavy.stationary_expectation([](double) { return 1.0; }),
                    srp::DivergentMeanError);
    auto fresh = InitialProfile::uniform(two_point());
    CHECK_THROWS_AS(heavy.transient_tail(fresh, 0.5, 1.0),
                    srp::DivergentMeanError);
}
