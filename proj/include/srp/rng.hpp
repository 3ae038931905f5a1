#pragma once

// Seedable, splittable randomness. Every public sampler in the library
// takes an explicit seed; replica r runs on derive_seed(seed, r), so
// results are reproducible bit-for-bit for a given build regardless of
// how replicas are scheduled.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <cmath>

namespace srp {

/// SplitMix64 engine. Satisfies uniform_random_bit_generator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Statistically independent child seed for a numbered stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mix(seed ^ (0x6a09e667f3bcc909ULL + stream));
    mix();
    return mix() ^ (stream * 0x9e3779b97f4a7c15ULL);
}

/// Uniform on (0, 1]; never returns 0, so -log stays finite.
template <class Rng>
double uniform_in_0_1(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

/// Uniform on [0, 1).
template <class Rng>
double uniform_01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exponential variate with the given rate.
template <class Rng>
double exponential_variate(Rng& rng, double rate) {
    return -std::log(uniform_in_0_1(rng)) / rate;
}

/// Unbiased-enough integer in [0, n) via 128-bit multiply.
template <class Rng>
std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Walker/Vose alias table for O(1) categorical sampling with
/// probabilities proportional to the construction weights.
class AliasTable {
public:
    explicit AliasTable(const std::vector<double>& weights) {
        const std::size_t n = weights.size();
        if (n == 0)
            throw std::invalid_argument("AliasTable: empty weights");
        double total = 0.0;
        for (double w : weights) {
            if (!(w > 0.0))
                throw std::invalid_argument("AliasTable: weights must be > 0");
            total += w;
        }
        prob_.resize(n);
        alias_.resize(n, 0);
        std::vector<double> scaled(n);
        std::vector<std::size_t> small, large;
        small.reserve(n);
        large.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * n / total;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            std::size_t s = small.back();
            small.pop_back();
            std::size_t l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (std::size_t i : large)
            prob_[i] = 1.0;
        for (std::size_t i : small)
            prob_[i] = 1.0;
    }

    template <class Rng>
    std::size_t sample(Rng& rng) const {
        std::size_t idx = uniform_index(rng, prob_.size());
        return uniform_01(rng) < prob_[idx] ? idx : alias_[idx];
    }

    std::size_t size() const { return prob_.size(); }

private:
    std::vector<double> prob_;
    std::vector<std::size_t> alias_;
};

}  // namespace srp
