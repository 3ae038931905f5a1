#pragma once

// Limit laws of the search cost C_N/N (position of the requested item just
// before its move to the front), the comparison against the optimal static
// ordering R_N, cache-miss probability, conditional means, and the Pareto
// closed forms. Everything here is a deterministic functional of a
// LimitModel; the sim module provides the matching finite-N estimators.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "srp/hydro.hpp"
#include "srp/rate_law.hpp"
#include "srp/specfun.hpp"

namespace srp {

class CostModel {
public:
    explicit CostModel(RateLaw law)
        : model_(std::move(law)), mean_(model_.law().mean()) {}

    explicit CostModel(LimitModel model)
        : model_(std::move(model)), mean_(model_.law().mean()) {}

    const LimitModel& model() const { return model_; }
    const RateLaw& law() const { return model_.law(); }
    double mean_rate() const { return mean_; }
    bool divergent_mean() const { return std::isinf(mean_); }

    /// lim P(C_N/N > x) under stationarity:
    ///   int e^{-w t0(x)} w lambda(dw) / int w lambda(dw).
    double stationary_tail(double x) const {
        require_finite_mean("stationary_tail");
        if (!(x >= 0.0) || x >= 1.0)
            throw std::invalid_argument(
                "stationary_tail: x must lie in [0,1)");
        if (x == 0.0)
            return 1.0;
        return law().laplace_moment(model_.t0(x), 1) / mean_;
    }

    /// lim E[f(C_N/N)] under stationarity, by nested quadrature: outer over
    /// the rate law, inner over t with the e^{-wt} w^2 weight.
    double stationary_expectation(const std::function<double(double)>& f,
                                  double tol = 1e-9) const {
        require_finite_mean("stationary_expectation");
        auto inner = [this, &f, tol](double w) {
            auto q = integrate_to_inf(
                [this, &f, w](double t) {
                    return f(model_.y_c(t)) * std::exp(-w * t) * w * w;
                },
                0.0, tol * 0.1);
            if (!q.converged)
                throw std::runtime_error(
                    "stationary_expectation: inner quadrature did not "
                    "converge");
            return q.value;
        };
        if (law().is_atomic()) {
            const auto& r = law().atom_rates();
            const auto& p = law().atom_weights();
            std::vector<double> terms(r.size());
            for (std::size_t i = 0; i < r.size(); ++i)
                terms[i] = p[i] * inner(r[i]);
            return sum_descending(terms) / mean_;
        }
        auto q = law().pareto_expectation(inner, tol);
        if (!q.converged)
            throw std::runtime_error(
                "stationary_expectation: outer quadrature did not converge");
        return q.value / mean_;
    }

    /// Pareto-only reduction of the same expectation through the
    /// incomplete gamma; cross-check for the nested-quadrature path:
    ///   (b-1) a int f(y_c(t)) (at)^{b-2} G(2-b, at) dt.
    double stationary_expectation_gamma(
        const std::function<double(double)>& f, double tol = 1e-10) const {
        require_pareto("stationary_expectation_gamma");
        require_finite_mean("stationary_expectation_gamma");
        double a = law().pareto_a(), b = law().pareto_b();
        auto q = integrate_to_inf(
            [this, &f, a, b](double t) {
                double at = a * t;
                return f(model_.y_c(t)) * std::pow(at, b - 2.0) *
                       upper_gamma(2.0 - b, at);
            },
            0.0, tol);
        if (!q.converged)
            throw std::runtime_error(
                "stationary_expectation_gamma: quadrature did not converge");
        return (b - 1.0) * a * q.value;
    }

    /// lim E[C_N/N] = (1/mean) int int w w~/(w+w~) lambda lambda; exact
    /// double sum for atomic laws, nested quadrature for Pareto.
    double mean_search_cost(double tol = 1e-9) const {
        require_finite_mean("mean_search_cost");
        if (law().is_atomic()) {
            const auto& r = law().atom_rates();
            const auto& p = law().atom_weights();
            std::vector<double> terms;
            terms.reserve(r.size() * r.size());
            for (std::size_t i = 0; i < r.size(); ++i)
                for (std::size_t j = 0; j < r.size(); ++j)
                    terms.push_back(p[i] * p[j] * r[i] * r[j] /
                                    (r[i] + r[j]));
            return sum_descending(terms) / mean_;
        }
        auto outer = law().pareto_expectation(
            [this, tol](double w) {
                auto q = law().pareto_expectation(
                    [w](double v) { return w * v / (w + v); }, tol * 0.1);
                if (!q.converged)
                    throw std::runtime_error(
                        "mean_search_cost: inner quadrature did not converge");
                return q.value;
            },
            tol);
        if (!q_ok(outer))
            throw std::runtime_error(
                "mean_search_cost: outer quadrature did not converge");
        return outer.value / mean_;
    }

    /// Unnormalized mass of the optimal ordering's tail,
    /// int_0^{w(x)} w lambda(dw) with atoms at the cut split fractionally
    /// (equivalently int_x^1 w(u} du over the decreasing rearrangement).
    /// Finite for every law, including divergent-mean ones.
    double optimal_tail_mass(double x) const {
        if (!(x > 0.0) || x >= 1.0)
            throw std::invalid_argument(
                "optimal_tail_mass: x must lie in (0,1)");
        if (law().kind() == RateLaw::Kind::Pareto) {
            double a = law().pareto_a(), b = law().pareto_b();
            if (b == 1.0)
                return -a * std::log(x);
            return a * b / (1.0 - b) * (std::pow(x, 1.0 - 1.0 / b) - 1.0);
        }
        // Decreasing rearrangement: atoms from the largest rate down,
        // the atom containing depth x contributing only its part.
        const auto& r = law().atom_rates();
        const auto& p = law().atom_weights();
        NeumaierSum mass;
        double depth = 0.0;
        for (std::size_t i = r.size(); i-- > 0;) {
            double lo = depth, hi = depth + p[i];
            double covered = std::max(0.0, hi - std::max(lo, x));
            mass.add(covered * r[i]);
            depth = hi;
        }
        return mass.value();
    }

    /// lim P(R_N/N > x) for the optimal static ordering.
    double optimal_tail(double x) const {
        require_finite_mean("optimal_tail");
        if (x == 0.0)
            return 1.0;
        return optimal_tail_mass(x) / mean_;
    }

    /// lim E[R_N/N] = (1/2 mean) int int min(w,w~) lambda lambda.
    double optimal_mean(double tol = 1e-10) const {
        require_finite_mean("optimal_mean");
        if (law().is_atomic()) {
            const auto& r = law().atom_rates();
            const auto& p = law().atom_weights();
            std::vector<double> terms;
            terms.reserve(r.size() * r.size());
            for (std::size_t i = 0; i < r.size(); ++i)
                for (std::size_t j = 0; j < r.size(); ++j)
                    terms.push_back(p[i] * p[j] * std::min(r[i], r[j]));
            return sum_descending(terms) / (2.0 * mean_);
        }
        // min(w,w~) integrates against the continuous law as
        // 2 int w lambda([w,inf)) lambda(dw); for Pareto the tail is
        // (a/w)^b.
        double a = law().pareto_a(), b = law().pareto_b();
        auto q = law().pareto_expectation(
            [a, b](double w) { return w * std::pow(a / w, b); }, tol);
        if (!q_ok(q))
            throw std::runtime_error(
                "optimal_mean: quadrature did not converge");
        return q.value / mean_;
    }

    /// lim P(C_N > xN)/P(R_N > xN); defined for every x in (0,1) with no
    /// finite-mean requirement.
    double cost_ratio(double x) const {
        if (!(x > 0.0) || x >= 1.0)
            throw std::invalid_argument("cost_ratio: x must lie in (0,1)");
        double num = law().laplace_moment(model_.t0(x), 1);
        return num / optimal_tail_mass(x);
    }

    /// Pareto closed form of the same ratio,
    ///   (1-b)/(a t0(x)) (e^{-a t0(x)} - 1 + x) / (x^{1-1/b} - 1),
    /// valid for all b > 0.
    double cost_ratio_closed_form(double x) const {
        require_pareto("cost_ratio_closed_form");
        if (!(x > 0.0) || x >= 1.0)
            throw std::invalid_argument(
                "cost_ratio_closed_form: x must lie in (0,1)");
        double a = law().pareto_a(), b = law().pareto_b();
        if (b == 1.0)
            throw std::invalid_argument(
                "cost_ratio_closed_form: b = 1 has a removable singularity; "
                "use cost_ratio");
        double at0 = a * model_.t0(x);
        return (1.0 - b) / at0 * (std::expm1(-at0) + x) /
               (std::pow(x, 1.0 - 1.0 / b) - 1.0);
    }

    /// Analytic x -> 0+ limit of cost_ratio: 1 for finite-mean laws, and
    /// (1-b) Gamma(1-b)^(1/b) for Pareto with b < 1. Evaluated directly,
    /// not by numerical extrapolation (t0(x) is ill-conditioned at 0+ for
    /// b < 1).
    double cost_ratio_limit_x0() const {
        if (!divergent_mean())
            return 1.0;
        if (law().kind() == RateLaw::Kind::Pareto && law().pareto_b() < 1.0) {
            double b = law().pareto_b();
            return (1.0 - b) * std::pow(complete_gamma(1.0 - b), 1.0 / b);
        }
        throw DivergentMeanError(
            "cost_ratio_limit_x0: no closed limit for this divergent law");
    }

    /// lim P(C_N(t)/N > x) from initial data `profile`. For x <= y_c(t)
    /// the limit measure is already stationary there and the value reduces
    /// exactly to stationary_tail(x); beyond the characteristic the
    /// y-integral collapses, after the change of variable z = y-hat(y,t),
    /// to the exact block sum
    ///   sum_a f_a e^{-f_a t} U0_a(y-hat(x,t)) / mean.
    double transient_tail(const InitialProfile& profile, double x,
                          double t) const {
        require_finite_mean("transient_tail");
        detail::require_discrete(law(), "transient_tail");
        detail::require_consistent(model_, profile, "transient_tail");
        if (!(x >= 0.0) || x >= 1.0)
            throw std::invalid_argument("transient_tail: x must be in [0,1)");
        if (!(t >= 0.0))
            throw std::invalid_argument("transient_tail: t must be >= 0");
        if (x <= model_.y_c(t))
            return stationary_tail(x);
        double yh = profile.y_hat(x, t);
        const auto& r = law().atom_rates();
        std::vector<double> terms(r.size());
        for (std::size_t a = 0; a < r.size(); ++a)
            terms[a] = r[a] * std::exp(-r[a] * t) *
                       profile.initial_tail(r[a], yh);
        return sum_descending(terms) / mean_;
    }

    /// Cache-miss probability M(t) = int e^{-wt} w lambda(dw) / mean:
    /// the probability that the request at time t hits an item never
    /// requested since time zero. Independent of the initial configuration.
    double miss_probability(double t) const {
        require_finite_mean("miss_probability");
        if (!(t >= 0.0))
            throw std::invalid_argument("miss_probability: t must be >= 0");
        return law().laplace_moment(t, 1) / mean_;
    }

    /// |M(t) - (1 - Gamma(2-b) (at)^{b-1})| for Pareto with 1 < b < 2;
    /// the small-t expansion truncates at O(at).
    double miss_asymptote_error(double t) const {
        require_pareto("miss_asymptote_error");
        double b = law().pareto_b();
        if (!(b > 1.0) || !(b < 2.0))
            throw std::invalid_argument(
                "miss_asymptote_error: requires 1 < b < 2");
        double at = law().pareto_a() * t;
        double asymptote = 1.0 - complete_gamma(2.0 - b) * std::pow(at, b - 1.0);
        return std::abs(miss_probability(t) - asymptote);
    }

    /// lim E[C_N/N | rate of the jumped item = w]
    ///   = int w~/(w+w~) lambda(dw~).
    double conditional_mean_given_rate(double w, double tol = 1e-10) const {
        if (!(w > 0.0))
            throw std::invalid_argument(
                "conditional_mean_given_rate: w must be > 0");
        if (law().is_atomic()) {
            const auto& r = law().atom_rates();
            const auto& p = law().atom_weights();
            std::vector<double> terms(r.size());
            for (std::size_t i = 0; i < r.size(); ++i)
                terms[i] = p[i] * r[i] / (w + r[i]);
            return sum_descending(terms);
        }
        auto q = law().pareto_expectation(
            [w](double v) { return v / (w + v); }, tol);
        if (!q_ok(q))
            throw std::runtime_error(
                "conditional_mean_given_rate: quadrature did not converge");
        return q.value;
    }

    struct HitRatioFit {
        double slope = 0.0;     // fitted log-log exponent of 1 - M
        bool window_ok = true;  // R-grid inside the small-t asymptotic window
        std::vector<double> hit_ratio;  // 1 - M(R/mean) per grid point
    };

    /// Log-log slope of the hit ratio H(R) = 1 - M(R / mean) over a grid of
    /// scaled request counts. The time conversion t = R / mean comes from
    /// the law of large numbers for the total-event clock. For Pareto with
    /// 1 < b < 2 the slope approaches b - 1 as the window shrinks.
    HitRatioFit hit_ratio_exponent(const std::vector<double>& r_grid) const {
        require_pareto("hit_ratio_exponent");
        double b = law().pareto_b();
        if (!(b > 1.0) || !(b < 2.0))
            throw std::invalid_argument(
                "hit_ratio_exponent: requires 1 < b < 2");
        if (r_grid.size() < 2)
            throw std::invalid_argument(
                "hit_ratio_exponent: need at least two grid points");
        HitRatioFit fit;
        std::vector<double> lx, ly;
        for (double R : r_grid) {
            if (!(R > 0.0))
                throw std::invalid_argument(
                    "hit_ratio_exponent: R must be > 0");
            double t = R / mean_;
            if (law().pareto_a() * t > 0.1)
                fit.window_ok = false;
            double h = 1.0 - miss_probability(t);
            fit.hit_ratio.push_back(h);
            lx.push_back(std::log(R));
            ly.push_back(std::log(h));
        }
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= double(lx.size());
        my /= double(ly.size());
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        fit.slope = sxy / sxx;
        return fit;
    }

private:
    static bool q_ok(const QuadResult& q) { return q.converged; }

    void require_finite_mean(const char* who) const {
        if (divergent_mean())
            throw DivergentMeanError(std::string(who) +
                                     ": law has divergent mean rate");
    }

    void require_pareto(const char* who) const {
        if (law().kind() != RateLaw::Kind::Pareto)
            throw std::logic_error(std::string(who) +
                                   ": requires a Pareto law");
    }

    LimitModel model_;
    double mean_;
};

}  // namespace srp
