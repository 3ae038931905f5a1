#pragma once

// Jump-rate distributions: a discrete mixture, a generalized Pareto tail
// lambda([0,w]) = 1 - (a/w)^b for w >= a, or an empirical rate vector
// interpreted as (1/N) sum of unit point masses. Provides the Laplace-type
// moment transforms, upper quantiles, size biasing, and discretization
// used by all the limit formulas downstream.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "srp/rng.hpp"
#include "srp/specfun.hpp"

namespace srp {

/// Thrown by operations that require a finite mean rate when the law's
/// mean diverges. Divergence itself is not an error: transforms report it
/// as a +inf sentinel, and only the operations whose defining integral
/// actually needs the mean reject it.
class DivergentMeanError : public std::domain_error {
public:
    explicit DivergentMeanError(const std::string& what)
        : std::domain_error(what) {}
};

class RateLaw {
public:
    enum class Kind { Discrete, Pareto, Empirical };

    /// Discrete mixture from (rate, probability) pairs. Weights must sum to
    /// one within 1e-12; duplicate rates are merged.
    static RateLaw discrete(std::vector<std::pair<double, double>> atoms) {
        RateLaw law;
        law.kind_ = Kind::Discrete;
        law.set_atoms(std::move(atoms), /*weight_tol=*/1e-12);
        return law;
    }

    static RateLaw point_mass(double rate) { return discrete({{rate, 1.0}}); }

    static RateLaw pareto(double a, double b) {
        if (!(a > 0.0) || !(b > 0.0))
            throw std::invalid_argument("RateLaw::pareto: a and b must be > 0");
        RateLaw law;
        law.kind_ = Kind::Pareto;
        law.a_ = a;
        law.b_ = b;
        return law;
    }

    static RateLaw empirical(std::vector<double> rates) {
        if (rates.empty())
            throw std::invalid_argument("RateLaw::empirical: no rates");
        for (double w : rates)
            if (!(w > 0.0))
                throw std::invalid_argument(
                    "RateLaw::empirical: rates must be > 0");
        RateLaw law;
        law.kind_ = Kind::Empirical;
        law.raw_ = std::move(rates);
        double p = 1.0 / static_cast<double>(law.raw_.size());
        std::vector<std::pair<double, double>> atoms;
        atoms.reserve(law.raw_.size());
        for (double w : law.raw_)
            atoms.emplace_back(w, p);
        law.set_atoms(std::move(atoms), /*weight_tol=*/1e-9);
        return law;
    }

    Kind kind() const { return kind_; }
    bool is_atomic() const { return kind_ != Kind::Pareto; }

    double pareto_a() const { return a_; }
    double pareto_b() const { return b_; }

    /// Distinct atom rates, ascending (atomic laws only).
    const std::vector<double>& atom_rates() const { return rates_; }
    const std::vector<double>& atom_weights() const { return weights_; }

    /// The raw rate vector of an Empirical law, in construction order.
    const std::vector<double>& empirical_rates() const {
        if (kind_ != Kind::Empirical)
            throw std::logic_error("RateLaw: not an empirical law");
        return raw_;
    }

    double min_rate() const {
        return kind_ == Kind::Pareto ? a_ : rates_.front();
    }

    /// int w lambda(dw); +inf sentinel when divergent.
    double mean() const { return laplace_moment(0.0, 1); }

    // int w^k e^{-wt} lambda(dw) for k in {0,1,2}. Exact compensated sums
    // for atomic laws; the incomplete-gamma reduction
    //   b (at)^b t^{-k} G(k-b, at)
    // for Pareto. Divergent cases (Pareto, t = 0, k >= b) return +inf.
    double laplace_moment(double t, int k) const {
        check_laplace_args(t, k);
        if (kind_ == Kind::Pareto) {
            if (t == 0.0) {
                if (k == 0) return 1.0;
                double kk = k;
                if (b_ <= kk) return kInf;
                return std::pow(a_, kk) * b_ / (b_ - kk);
            }
            double at = a_ * t;
            double g = upper_gamma(static_cast<double>(k) - b_, at);
            return b_ * std::pow(at, b_) * std::pow(t, -double(k)) * g;
        }
        std::vector<double> terms(rates_.size());
        for (std::size_t i = 0; i < rates_.size(); ++i)
            terms[i] = weights_[i] * std::pow(rates_[i], double(k)) *
                       std::exp(-rates_[i] * t);
        return sum_descending(terms);
    }

    /// Verification path for the Pareto transform: direct adaptive
    /// quadrature against the density, sharing no code with the gamma
    /// reduction. Atomic laws fall through to the exact sum.
    double laplace_moment_by_quadrature(double t, int k,
                                        double tol = 1e-10) const {
        check_laplace_args(t, k);
        if (kind_ != Kind::Pareto)
            return laplace_moment(t, k);
        auto q = pareto_expectation(
            [t, k](double w) {
                return std::pow(w, double(k)) * std::exp(-w * t);
            },
            tol);
        if (!q.converged)
            throw std::runtime_error(
                "laplace_moment_by_quadrature: did not converge");
        return q.value;
    }

    /// int h(w) lambda(dw) for Pareto by quadrature, using the uniform
    /// substitution u = (a/w)^b.
    template <class H>
    QuadResult pareto_expectation(H&& h, double tol = 1e-10) const {
        if (kind_ != Kind::Pareto)
            throw std::logic_error("pareto_expectation: not a Pareto law");
        double a = a_, b = b_;
        return integrate(
            [&h, a, b](double u) { return h(a * std::pow(u, -1.0 / b)); },
            0.0, 1.0, tol);
    }

    /// Upper quantile w(x): lambda([0,w(x)]) = 1 - x, i.e. the rate at
    /// scaled depth x from the popular end. Atomic laws use the
    /// generalized inverse with ties resolved toward the larger rate;
    /// x = 1 yields the support infimum.
    double quantile_upper(double x) const {
        if (!(x > 0.0) || !(x <= 1.0))
            throw std::invalid_argument(
                "quantile_upper: x must lie in (0, 1]");
        if (kind_ == Kind::Pareto)
            return a_ * std::pow(x, -1.0 / b_);
        // Largest atom whose tail mass (weights of atoms >= it) reaches x.
        double tail = 0.0;
        for (std::size_t i = rates_.size(); i-- > 0;) {
            tail += weights_[i];
            if (tail >= x - 1e-15)
                return rates_[i];
        }
        return rates_.front();
    }

    /// Law of the jumped particle's rate: w lambda(dw) / mean. For Pareto
    /// this is again Pareto with the exponent reduced by one.
    RateLaw size_biased() const {
        double m = mean();
        if (std::isinf(m))
            throw DivergentMeanError(
                "size_biased: law has divergent mean rate");
        if (kind_ == Kind::Pareto)
            return pareto(a_, b_ - 1.0);
        std::vector<std::pair<double, double>> atoms;
        atoms.reserve(rates_.size());
        for (std::size_t i = 0; i < rates_.size(); ++i)
            atoms.emplace_back(rates_[i], rates_[i] * weights_[i] / m);
        return discrete(std::move(atoms));
    }

    /// Deterministic n-point discretization through the upper quantile at
    /// depths i/n; for Pareto this is the classic w_i = a (n/i)^(1/b).
    RateLaw make_empirical_quantile(long n) const {
        if (n < 1)
            throw std::invalid_argument("make_empirical_quantile: n >= 1");
        std::vector<double> w(n);
        for (long i = 1; i <= n; ++i)
            w[i - 1] = quantile_upper(double(i) / double(n));
        return empirical(std::move(w));
    }

    /// n i.i.d. draws by inverse-transform sampling, reproducible from the
    /// seed.
    RateLaw make_empirical_iid(long n, std::uint64_t seed) const {
        if (n < 1)
            throw std::invalid_argument("make_empirical_iid: n >= 1");
        SplitMix64 rng(seed);
        std::vector<double> w(n);
        for (long i = 0; i < n; ++i)
            w[i] = quantile_upper(uniform_in_0_1(rng));
        return empirical(std::move(w));
    }

private:
    RateLaw() = default;

    void set_atoms(std::vector<std::pair<double, double>> atoms,
                   double weight_tol) {
        if (atoms.empty())
            throw std::invalid_argument("RateLaw: no atoms");
        NeumaierSum total;
        for (auto& [f, rho] : atoms) {
            if (!(f > 0.0) || !std::isfinite(f))
                throw std::invalid_argument("RateLaw: rates must be > 0");
            if (!(rho > 0.0))
                throw std::invalid_argument("RateLaw: weights must be > 0");
            total.add(rho);
        }
        if (std::abs(total.value() - 1.0) > weight_tol)
            throw std::invalid_argument(
                "RateLaw: weights must sum to 1 (got " +
                std::to_string(total.value()) + ")");
        std::sort(atoms.begin(), atoms.end());
        rates_.reserve(atoms.size());
        weights_.reserve(atoms.size());
        for (const auto& [f, rho] : atoms) {
            if (!rates_.empty() && f == rates_.back())
                weights_.back() += rho;
            else {
                rates_.push_back(f);
                weights_.push_back(rho);
            }
        }
    }

    static void check_laplace_args(double t, int k) {
        if (!(t >= 0.0))
            throw std::invalid_argument("laplace_moment: t must be >= 0");
        if (k < 0 || k > 2)
            throw std::invalid_argument("laplace_moment: k must be 0, 1 or 2");
    }

    Kind kind_ = Kind::Discrete;
    std::vector<double> rates_;    // distinct, ascending
    std::vector<double> weights_;  // aligned with rates_
    std::vector<double> raw_;      // Empirical only: original order
    double a_ = 0.0, b_ = 0.0;     // Pareto only
};

}  // namespace srp
