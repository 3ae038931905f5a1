#pragma once

// Exact finite-N stochastic ranking process. N items hold positions
// 1..N; item i is requested at the points of an independent Poisson
// process with rate w_i and moves to position 1, shifting the items in
// between down by one. The simulation runs the superposed process: one
// Exp(sum w) clock and an alias-table categorical for the jumper, which
// is equivalent in law to per-item clocks by the competing-exponentials
// identity. Positions are kept in an order-statistic index (Fenwick tree
// over slots) so each jump costs O(log n).

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "srp/hydro.hpp"
#include "srp/rate_law.hpp"
#include "srp/rng.hpp"

namespace srp {

namespace detail {

/// Positions as prefix counts of occupied slots. Items move to the front
/// by taking the next smaller free slot; slots are recompacted when the
/// front cursor runs out, which costs O(n) every n jumps.
class OrderIndex {
public:
    explicit OrderIndex(const std::vector<int>& items_in_order) {
        n_ = static_cast<int>(items_in_order.size());
        cap_ = 2 * n_;
        bit_.assign(cap_ + 1, 0);
        slot_of_.assign(n_, -1);
        item_of_.assign(cap_, -1);
        for (int pos = 0; pos < n_; ++pos)
            place(items_in_order[pos], n_ + pos);
        front_ = n_ - 1;
    }

    int size() const { return n_; }

    /// 1-based position of an item.
    int position_of(int item) const { return prefix(slot_of_[item] + 1); }

    /// Item at a 1-based position, by Fenwick descent.
    int item_at(int pos) const {
        int idx = 0, rem = pos;
        int log = 1;
        while ((log << 1) <= cap_)
            log <<= 1;
        for (int step = log; step > 0; step >>= 1) {
            if (idx + step <= cap_ && bit_[idx + step] < rem) {
                idx += step;
                rem -= bit_[idx];
            }
        }
        return item_of_[idx];  // idx is the 0-based slot
    }

    void move_to_front(int item) {
        if (front_ < 0)
            recompact();
        remove(item);
        place(item, front_--);
    }

    /// Items in queue order (position 1 first).
    std::vector<int> snapshot() const {
        std::vector<int> out;
        out.reserve(n_);
        for (int slot = 0; slot < cap_; ++slot)
            if (item_of_[slot] >= 0)
                out.push_back(item_of_[slot]);
        return out;
    }

    bool is_bijective() const {
        std::vector<char> seen(n_, 0);
        int count = 0;
        for (int slot = 0; slot < cap_; ++slot) {
            int it = item_of_[slot];
            if (it < 0)
                continue;
            if (it >= n_ || seen[it] || slot_of_[it] != slot)
                return false;
            seen[it] = 1;
            ++count;
        }
        return count == n_;
    }

private:
    void add(int slot, int delta) {
        for (int i = slot + 1; i <= cap_; i += i & -i)
            bit_[i] += delta;
    }
    int prefix(int count) const {  // occupied slots with index < count
        int s = 0;
        for (int i = count; i > 0; i -= i & -i)
            s += bit_[i];
        return s;
    }
    void place(int item, int slot) {
        slot_of_[item] = slot;
        item_of_[slot] = item;
        add(slot, 1);
    }
    void remove(int item) {
        int slot = slot_of_[item];
        item_of_[slot] = -1;
        add(slot, -1);
    }
    void recompact() {
        std::vector<int> order = snapshot();
        std::fill(bit_.begin(), bit_.end(), 0);
        std::fill(item_of_.begin(), item_of_.end(), -1);
        for (int pos = 0; pos < n_; ++pos)
            place(order[pos], n_ + pos);
        front_ = n_ - 1;
    }

    int n_ = 0, cap_ = 0, front_ = -1;
    std::vector<int> bit_;
    std::vector<int> slot_of_;
    std::vector<int> item_of_;
};

}  // namespace detail

class RankingState {
public:
    /// Identity initial order: item i starts at position i+1.
    explicit RankingState(std::vector<double> rates)
        : RankingState(std::move(rates), std::vector<int>{}) {}

    /// order[pos] is the item at 1-based position pos+1; an empty order
    /// means the identity.
    RankingState(std::vector<double> rates, std::vector<int> order)
        : rates_(std::move(rates)),
          order_(validated(order.empty() ? identity(rates_.size()) : order,
                           rates_.size())),
          alias_(rates_),
          jumped_(rates_.size(), 0),
          jump_count_(rates_.size(), 0) {
        for (double w : rates_)
            if (!(w > 0.0))
                throw std::invalid_argument(
                    "RankingState: rates must be > 0");
        NeumaierSum s;
        for (double w : rates_)
            s.add(w);
        rate_sum_ = s.value();
    }

    /// Positions in block [ceil(n y_lo), ceil(n y_hi)) get rates drawn
    /// i.i.d. from the block's mixture; the initial order is by position.
    static RankingState from_profile(const InitialProfile& profile, int n,
                                     std::uint64_t seed) {
        if (n < 1)
            throw std::invalid_argument("from_profile: n must be >= 1");
        SplitMix64 rng(derive_seed(seed, 0x9f0f11e5ULL));
        std::vector<double> rates(n);
        for (const auto& block : profile.blocks()) {
            int lo = static_cast<int>(std::ceil(block.y_lo * n));
            int hi = static_cast<int>(std::ceil(block.y_hi * n));
            const auto& r = block.mix.atom_rates();
            AliasTable pick(block.mix.atom_weights());
            for (int pos = lo; pos < hi && pos < n; ++pos)
                rates[pos] = r[pick.sample(rng)];
        }
        return RankingState(std::move(rates));
    }

    int size() const { return static_cast<int>(rates_.size()); }
    double clock() const { return clock_; }
    double rate_sum() const { return rate_sum_; }
    const std::vector<double>& rates() const { return rates_; }

    int position_of(int item) const { return order_.position_of(item); }
    int item_at(int position) const { return order_.item_at(position); }
    std::vector<int> order_snapshot() const { return order_.snapshot(); }

    bool has_jumped(int item) const { return jumped_[item] != 0; }
    long jump_count(int item) const { return jump_count_[item]; }

    /// Fraction of items that have jumped at least once: y_C^(N)(clock).
    double first_jump_fraction() const {
        return double(jumped_total_) / double(size());
    }

    /// Advances the superposed Poisson clock to t_end; returns the number
    /// of jumps executed. Deterministic given the generator state.
    long step_until(double t_end, SplitMix64& rng) {
        if (t_end < clock_)
            throw std::invalid_argument("step_until: t_end before the clock");
        long events = 0;
        while (true) {
            double wait = exponential_variate(rng, rate_sum_);
            if (clock_ + wait > t_end) {
                clock_ = t_end;
                return events;
            }
            clock_ += wait;
            int item = static_cast<int>(alias_.sample(rng));
            if (!jumped_[item]) {
                jumped_[item] = 1;
                ++jumped_total_;
            }
            ++jump_count_[item];
            order_.move_to_front(item);
            ++events;
            assert(events % 4096 != 0 || order_.is_bijective());
        }
    }

    /// Draws the next requested item (the jumper of the next event)
    /// without advancing the state; request probability w_i / sum w.
    int sample_request(SplitMix64& rng) const {
        return static_cast<int>(alias_.sample(rng));
    }

private:
    static std::size_t rates_size_of(const std::vector<double>& r) {
        return r.size();
    }
    static std::vector<int> identity(std::size_t n) {
        std::vector<int> v(n);
        std::iota(v.begin(), v.end(), 0);
        return v;
    }
    static detail::OrderIndex validated(const std::vector<int>& order,
                                        std::size_t n) {
        if (order.size() != n)
            throw std::invalid_argument("RankingState: order size mismatch");
        std::vector<char> seen(n, 0);
        for (int item : order) {
            if (item < 0 || std::size_t(item) >= n || seen[item])
                throw std::invalid_argument(
                    "RankingState: initial order is not a permutation");
            seen[item] = 1;
        }
        return detail::OrderIndex(order);
    }

    std::vector<double> rates_;
    detail::OrderIndex order_;
    AliasTable alias_;
    std::vector<char> jumped_;
    std::vector<long> jump_count_;
    long jumped_total_ = 0;
    double rate_sum_ = 0.0;
    double clock_ = 0.0;
};

// ---------------------------------------------------------------------------
// Replica fan-out.
// ---------------------------------------------------------------------------

/// Runs fn(rep) for rep in [0, reps) on up to `threads` workers. Each
/// replica derives its own seed, so the result of a replica never depends
/// on the scheduling; reductions over replica-indexed slots are
/// deterministic. The first exception thrown by any replica is rethrown
/// on the calling thread after all workers join.
template <class Fn>
void for_each_replica(long reps, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || reps < 2) {
        for (long r = 0; r < reps; ++r)
            fn(r);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    long chunk = (reps + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        long lo = w * chunk, hi = std::min(reps, lo + chunk);
        if (lo >= hi)
            break;
        pool.emplace_back([lo, hi, &fn, &error, &error_mutex] {
            try {
                for (long r = lo; r < hi; ++r)
                    fn(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Exact stationary-order sampling.
// ---------------------------------------------------------------------------

/// Exact sample from the stationary distribution of the order: each item
/// draws an independent Exp(w_i) variate and the queue is sorted by those
/// first arrival times. By memorylessness this realizes size-biased
/// sampling without replacement (the classical stationary law) in
/// O(n log n). Returns items in position order.
inline std::vector<int> sample_stationary_order(
    const std::vector<double>& rates, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> key(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i)
        key[i] = exponential_variate(rng, rates[i]);
    std::vector<int> order(rates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&key](int a, int b) { return key[a] < key[b]; });
    return order;
}

// ---------------------------------------------------------------------------
// Search-cost sampling.
// ---------------------------------------------------------------------------

struct SearchCostSamples {
    long n = 0;
    std::uint64_t seed = 0;
    double t = -1.0;               // -1 for stationary mode
    std::vector<int> costs;        // positions in 1..n
    std::vector<double> rates;     // rate of the requested item per draw

    double tail_at(double x) const {
        long cut = static_cast<long>(x * double(n));
        long hits = 0;
        for (int c : costs)
            if (c > cut)
                ++hits;
        return double(hits) / double(costs.size());
    }
    double mean_scaled() const {
        double s = 0.0;
        for (int c : costs)
            s += double(c);
        return s / double(costs.size()) / double(n);
    }
};

namespace detail {

struct RateGroups {
    std::vector<double> value;  // distinct rates
    std::vector<long> count;
    std::vector<int> group_of;  // item -> group index
};

inline RateGroups group_rates(const std::vector<double>& rates) {
    RateGroups g;
    std::vector<int> idx(rates.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&rates](int a, int b) { return rates[a] < rates[b]; });
    g.group_of.resize(rates.size());
    for (int i : idx) {
        if (g.value.empty() || rates[i] != g.value.back()) {
            g.value.push_back(rates[i]);
            g.count.push_back(0);
        }
        g.group_of[i] = static_cast<int>(g.value.size()) - 1;
        ++g.count.back();
    }
    return g;
}

/// # of successes among m independent trials with probability p.
template <class Rng>
long binomial_draw(Rng& rng, long m, double p) {
    if (m <= 0 || p <= 0.0)
        return 0;
    if (p >= 1.0)
        return m;
    if (m <= 16) {
        long k = 0;
        for (long i = 0; i < m; ++i)
            k += uniform_01(rng) < p ? 1 : 0;
        return k;
    }
    std::binomial_distribution<long> dist(m, p);
    return dist(rng);
}

}  // namespace detail

/// Stationary search costs: per replicate, the requested item Q is drawn
/// with probability w_Q / sum w independently of the order, and its
/// position is realized from the competing-exponentials representation of
/// the stationary order: cost - 1 counts the items whose Exp(w_j) arrival
/// beats E ~ Exp(w_Q). Items with equal rates are aggregated into one
/// binomial count, so single-atom and few-atom laws cost O(1) per draw.
inline SearchCostSamples sample_search_costs_stationary(
    const std::vector<double>& rates, long reps, std::uint64_t seed,
    int threads = 1) {
    if (reps < 1)
        throw std::invalid_argument("sample_search_costs: reps >= 1");
    auto groups = detail::group_rates(rates);
    AliasTable alias(rates);
    SearchCostSamples out;
    out.n = static_cast<long>(rates.size());
    out.seed = seed;
    out.costs.resize(reps);
    out.rates.resize(reps);
    for_each_replica(reps, threads, [&](long rep) {
        SplitMix64 rng(derive_seed(seed, rep));
        int q = static_cast<int>(alias.sample(rng));
        double wq = rates[q];
        double e = exponential_variate(rng, wq);
        long cost = 1;
        for (std::size_t gi = 0; gi < groups.value.size(); ++gi) {
            long m = groups.count[gi] -
                     (groups.group_of[q] == static_cast<int>(gi) ? 1 : 0);
            double p = -std::expm1(-groups.value[gi] * e);
            cost += detail::binomial_draw(rng, m, p);
        }
        out.costs[rep] = static_cast<int>(cost);
        out.rates[rep] = wq;
    });
    return out;
}

/// Transient search costs at time t: each replicate evolves an
/// independent copy of the state from the given initial order to time t,
/// then samples one request by the categorical law (equivalent to taking
/// the next jump after t, by memorylessness) and records its position.
inline SearchCostSamples sample_search_costs_transient(
    const std::vector<double>& rates, double t, long reps, std::uint64_t seed,
    int threads = 1) {
    if (reps < 1)
        throw std::invalid_argument("sample_search_costs: reps >= 1");
    if (!(t >= 0.0))
        throw std::invalid_argument("sample_search_costs: t must be >= 0");
    SearchCostSamples out;
    out.n = static_cast<long>(rates.size());
    out.seed = seed;
    out.t = t;
    out.costs.resize(reps);
    out.rates.resize(reps);
    for_each_replica(reps, threads, [&](long rep) {
        SplitMix64 rng(derive_seed(seed, rep));
        RankingState state(rates);
        state.step_until(t, rng);
        int q = state.sample_request(rng);
        out.costs[rep] = state.position_of(q);
        out.rates[rep] = rates[q];
    });
    return out;
}

/// Same, but each replicate also draws its rates from the initial
/// profile's block mixtures (positions in a block share the block's mix).
inline SearchCostSamples sample_search_costs_transient(
    const InitialProfile& profile, int n, double t, long reps,
    std::uint64_t seed, int threads = 1) {
    if (reps < 1)
        throw std::invalid_argument("sample_search_costs: reps >= 1");
    SearchCostSamples out;
    out.n = n;
    out.seed = seed;
    out.t = t;
    out.costs.resize(reps);
    out.rates.resize(reps);
    for_each_replica(reps, threads, [&](long rep) {
        std::uint64_t rep_seed = derive_seed(seed, rep);
        RankingState state =
            RankingState::from_profile(profile, n, rep_seed);
        SplitMix64 rng(derive_seed(rep_seed, 1));
        state.step_until(t, rng);
        int q = state.sample_request(rng);
        out.costs[rep] = state.position_of(q);
        out.rates[rep] = state.rates()[q];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Empirical estimators of the limit quantities.
// ---------------------------------------------------------------------------

/// y_C^(N) traces: one row per replica, one column per grid time, holding
/// the fraction of items that have jumped by that time.
inline std::vector<std::vector<double>> empirical_boundary(
    const std::vector<double>& rates, const std::vector<double>& t_grid,
    long reps, std::uint64_t seed, int threads = 1) {
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument(
                "empirical_boundary: t_grid must be strictly increasing");
    std::vector<std::vector<double>> traces(
        reps, std::vector<double>(t_grid.size(), 0.0));
    for_each_replica(reps, threads, [&](long rep) {
        SplitMix64 rng(derive_seed(seed, rep));
        RankingState state(rates);
        for (std::size_t j = 0; j < t_grid.size(); ++j) {
            state.step_until(t_grid[j], rng);
            traces[rep][j] = state.first_jump_fraction();
        }
    });
    return traces;
}

struct AtomTailEstimate {
    std::vector<double> mass;  // per atom, mass at scaled positions >= y
    long unmatched = 0;        // items whose rate is not an atom of the law
};

/// Buckets the items at scaled positions >= y into the atoms of a
/// discrete law: the empirical counterpart of the per-atom tails.
inline AtomTailEstimate empirical_atom_tail(const RankingState& state,
                                            double y,
                                            const std::vector<double>& atoms) {
    AtomTailEstimate out;
    out.mass.assign(atoms.size(), 0.0);
    int n = state.size();
    int first_pos = static_cast<int>(std::floor(y * n)) + 1;
    for (int item = 0; item < n; ++item) {
        if (state.position_of(item) < first_pos)
            continue;
        double w = state.rates()[item];
        bool matched = false;
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            if (std::abs(w - atoms[a]) <= 1e-12 * std::max(1.0, atoms[a])) {
                out.mass[a] += 1.0 / double(n);
                matched = true;
                break;
            }
        }
        if (!matched)
            ++out.unmatched;
    }
    return out;
}

/// M^(N)(t) estimate: the fraction of replicas whose request at time t
/// falls on an item that has not jumped in [0, t].
inline double empirical_miss(const std::vector<double>& rates, double t,
                             long reps, std::uint64_t seed, int threads = 1) {
    if (reps < 1)
        throw std::invalid_argument("empirical_miss: reps >= 1");
    std::vector<char> miss(reps, 0);
    for_each_replica(reps, threads, [&](long rep) {
        SplitMix64 rng(derive_seed(seed, rep));
        RankingState state(rates);
        state.step_until(t, rng);
        int q = state.sample_request(rng);
        miss[rep] = state.has_jumped(q) ? 0 : 1;
    });
    long hits = 0;
    for (char m : miss)
        hits += m;
    return double(hits) / double(reps);
}

}  // namespace srp
