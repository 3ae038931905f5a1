#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "srp/ranking_sim.hpp"

using Catch::Approx;
using srp::RankingState;
using srp::RateLaw;
using srp::SplitMix64;

namespace {

// Reference implementation: items in position order, O(n) shifting.
struct NaiveOrder {
    std::vector<int> items;  // items[pos] = item at position pos+1
    explicit NaiveOrder(int n) : items(n) {
        std::iota(items.begin(), items.end(), 0);
    }
    void move_to_front(int item) {
        auto it = std::find(items.begin(), items.end(), item);
        items.erase(it);
        items.insert(items.begin(), item);
    }
};

double chi2_two_sample(const std::vector<long>& a, const std::vector<long>& b) {
    double stat = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double tot = double(a[k] + b[k]);
        if (tot == 0.0)
            continue;
        double d = double(a[k] - b[k]);
        stat += d * d / tot;
    }
    return stat;
}

}  // namespace

TEST_CASE("state construction and validation") {
    RankingState st({1.0, 1.0, 1.0});
    CHECK(st.size() == 3);
    CHECK(st.rate_sum() == Approx(3.0));
    CHECK(st.clock() == 0.0);
    for (int i = 0; i < 3; ++i)
        CHECK(st.position_of(i) == i + 1);

    CHECK_THROWS_AS(RankingState({1.0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(RankingState({1.0, 1.0}, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(RankingState({1.0, 1.0}, {0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(RankingState({1.0, 1.0}, {0}), std::invalid_argument);
}

TEST_CASE("from_profile assigns block mixtures to position ranges") {
    auto split = srp::InitialProfile({{0.0, 0.5, RateLaw::point_mass(1.0)},
                                      {0.5, 1.0, RateLaw::point_mass(2.0)}});
    auto st = RankingState::from_profile(split, 100, 11);
    for (int i = 0; i < 50; ++i)
        CHECK(st.rates()[i] == 1.0);
    for (int i = 50; i < 100; ++i)
        CHECK(st.rates()[i] == 2.0);
    CHECK(st.rate_sum() == Approx(150.0));

    auto fresh = srp::InitialProfile::uniform(RateLaw::point_mass(1.0));
    auto st2 = RankingState::from_profile(fresh, 64, 3);
    for (double w : st2.rates())
        CHECK(w == 1.0);
}

TEST_CASE("single item stays at the top forever") {
    RankingState st({2.5});
    SplitMix64 rng(9);
    st.step_until(50.0, rng);
    CHECK(st.position_of(0) == 1);
    CHECK(st.clock() == 50.0);
    CHECK(st.jump_count(0) > 0);
}

TEST_CASE("a jump moves the item to the front and shifts the span") {
    // Item 2 carries essentially all the rate, so the first events are its.
    RankingState st({1e-9, 1e-9, 1e9});
    SplitMix64 rng(4);
    long events = st.step_until(1e-6, rng);
    REQUIRE(events > 0);
    CHECK(st.position_of(2) == 1);
    CHECK(st.position_of(0) == 2);
    CHECK(st.position_of(1) == 3);
}

TEST_CASE("order-statistic index matches the naive trace") {
    for (int n : {3, 17, 64}) {
        std::vector<double> rates(n);
        SplitMix64 seeder(1000 + n);
        for (double& w : rates)
            w = 0.2 + 3.0 * srp::uniform_in_0_1(seeder);

        RankingState st(rates);
        NaiveOrder naive(n);
        // Replay the same event stream through the naive structure.
        srp::AliasTable alias(rates);
        double rate_sum = 0.0;
        for (double w : rates)
            rate_sum += w;

        SplitMix64 rng_state(77);
        SplitMix64 rng_naive(77);
        double horizon = 1500.0 / rate_sum;  // ~1500 events
        long events = st.step_until(horizon, rng_state);
        double clock = 0.0;
        long naive_events = 0;
        while (true) {
            double wait = srp::exponential_variate(rng_naive, rate_sum);
            if (clock + wait > horizon)
                break;
            clock += wait;
            naive.move_to_front(int(alias.sample(rng_naive)));
            ++naive_events;
        }
        REQUIRE(events == naive_events);
        CHECK(st.order_snapshot() == naive.items);
        for (int i = 0; i < n; ++i)
            CHECK(st.position_of(naive.items[i]) == i + 1);
        for (int p = 1; p <= n; ++p)
            CHECK(st.item_at(p) == naive.items[p - 1]);
    }
}

TEST_CASE("snapshot stays a permutation after many events") {
    std::vector<double> rates(128, 1.0);
    RankingState st(rates);
    SplitMix64 rng(5);
    st.step_until(200.0, rng);  // ~25k events, multiple recompactions
    auto snap = st.order_snapshot();
    std::sort(snap.begin(), snap.end());
    for (int i = 0; i < 128; ++i)
        CHECK(snap[i] == i);
}

TEST_CASE("per-item jump counts are Poisson(w T)") {
    const int n = 12;
    const double T = 4.0;
    const long reps = 500;
    std::vector<double> rates(n);
    SplitMix64 seeder(2024);
    for (double& w : rates)
        w = 0.3 + 2.0 * srp::uniform_in_0_1(seeder);
    std::vector<double> mean(n, 0.0);
    srp::for_each_replica(reps, 1, [&](long rep) {
        SplitMix64 rng(srp::derive_seed(99, rep));
        RankingState st(rates);
        st.step_until(T, rng);
        for (int i = 0; i < n; ++i)
            mean[i] += double(st.jump_count(i));
    });
    for (int i = 0; i < n; ++i) {
        mean[i] /= double(reps);
        double lambda = rates[i] * T;
        double sigma = std::sqrt(lambda / double(reps));
        INFO("item " << i);
        CHECK(std::abs(mean[i] - lambda) < 3.5 * sigma);
    }
}

TEST_CASE("scale covariance: rates x c with time / c replays the same events") {
    std::vector<double> rates = {0.5, 1.0, 2.0, 4.0, 0.25};
    const double c = 7.0;
    std::vector<double> scaled(rates);
    for (double& w : scaled)
        w *= c;

    RankingState a(rates), b(scaled);
    SplitMix64 rng_a(31), rng_b(31);
    long ea = a.step_until(40.0, rng_a);
    long eb = b.step_until(40.0 / c, rng_b);
    CHECK(ea == eb);
    CHECK(a.order_snapshot() == b.order_snapshot());
    for (std::size_t i = 0; i < rates.size(); ++i)
        CHECK(a.jump_count(int(i)) == b.jump_count(int(i)));
}

TEST_CASE("sample_stationary_order: edge cases and exact weights") {
    CHECK(srp::sample_stationary_order({3.0}, 1) == std::vector<int>{0});

    // P(item 0 first) = 2/3 for rates (2,1).
    long first0 = 0;
    const long draws = 100000;
    for (long d = 0; d < draws; ++d) {
        auto ord = srp::sample_stationary_order({2.0, 1.0},
                                                srp::derive_seed(8, d));
        first0 += ord[0] == 0 ? 1 : 0;
    }
    double p = double(first0) / double(draws);
    double sigma = std::sqrt(2.0 / 9.0 / double(draws));
    CHECK(std::abs(p - 2.0 / 3.0) < 3.5 * sigma);
}

TEST_CASE("sample_stationary_order: equal rates are uniform over orders") {
    const long draws = 60000;
    std::map<std::vector<int>, long> counts;
    for (long d = 0; d < draws; ++d)
        ++counts[srp::sample_stationary_order({1.0, 1.0, 1.0},
                                              srp::derive_seed(55, d))];
    REQUIRE(counts.size() == 6);
    double expected = double(draws) / 6.0;
    double stat = 0.0;
    for (const auto& [ord, c] : counts)
        stat += (double(c) - expected) * (double(c) - expected) / expected;
    // chi-square, 5 dof, 99%: 15.086
    CHECK(stat < 15.086);
}

TEST_CASE("stationary sampler is invariant under further evolution") {
    // Evolving a stationary sample for extra time must not change the law;
    // two-sample chi-square on the position of item 0, n = 8.
    std::vector<double> rates = {1.0, 0.4, 2.2, 0.9, 3.1, 1.7, 0.6, 1.3};
    const long draws = 40000;
    std::vector<long> direct(8, 0), evolved(8, 0);
    double rate_sum = 0.0;
    for (double w : rates)
        rate_sum += w;
    for (long d = 0; d < draws; ++d) {
        auto ord = srp::sample_stationary_order(rates,
                                                srp::derive_seed(123, d));
        RankingState st(rates, ord);
        auto pos_direct =
            std::find(ord.begin(), ord.end(), 0) - ord.begin();
        ++direct[pos_direct];
        SplitMix64 rng(srp::derive_seed(321, d));
        st.step_until(10.0 / rate_sum, rng);
        ++evolved[st.position_of(0) - 1];
    }
    double stat = chi2_two_sample(direct, evolved);
    // chi-square, 7 dof, 99%: 18.475
    CHECK(stat < 18.475);
}

TEST_CASE("sample_search_costs: degenerate cases") {
    auto one = srp::sample_search_costs_stationary({5.0}, 200, 9);
    for (int c : one.costs)
        CHECK(c == 1);

    // Equal rates: cost uniform on {1..n}.
    const int n = 10;
    const long reps = 40000;
    auto s = srp::sample_search_costs_stationary(
        std::vector<double>(n, 1.0), reps, 77);
    std::vector<long> counts(n, 0);
    for (int c : s.costs)
        ++counts[c - 1];
    double expected = double(reps) / n;
    double stat = 0.0;
    for (long c : counts)
        stat += (double(c) - expected) * (double(c) - expected) / expected;
    // chi-square, 9 dof, 99%: 21.666
    CHECK(stat < 21.666);
}

TEST_CASE("grouped-binomial cost sampler matches materialized orders") {
    // Same law two ways: the O(#groups) reduction versus explicitly
    // sampling a stationary permutation and reading the request's position.
    std::vector<double> rates = {1.0, 1.0, 2.0, 2.0, 4.0, 1.0};
    const long reps = 50000;
    auto fast = srp::sample_search_costs_stationary(rates, reps, 2025);

    srp::AliasTable alias(rates);
    std::vector<long> a(rates.size(), 0), b(rates.size(), 0);
    for (int c : fast.costs)
        ++a[c - 1];
    for (long rep = 0; rep < reps; ++rep) {
        SplitMix64 rng(srp::derive_seed(52025, rep));
        int q = int(alias.sample(rng));
        auto ord = srp::sample_stationary_order(
            rates, srp::derive_seed(62025, rep));
        int cost =
            int(std::find(ord.begin(), ord.end(), q) - ord.begin()) + 1;
        ++b[cost - 1];
    }
    double stat = chi2_two_sample(a, b);
    // chi-square, 5 dof, 99%: 15.086
    CHECK(stat < 15.086);
}

TEST_CASE("transient costs at t=0 read the initial order") {
    // With the identity order, P(cost = k) is the request probability of
    // item k-1.
    std::vector<double> rates = {4.0, 2.0, 1.0, 1.0};
    const long reps = 40000;
    auto s = srp::sample_search_costs_transient(rates, 0.0, reps, 5);
    std::vector<long> counts(rates.size(), 0);
    for (int c : s.costs)
        ++counts[c - 1];
    for (std::size_t k = 0; k < rates.size(); ++k) {
        double p = rates[k] / 8.0;
        double freq = double(counts[k]) / double(reps);
        double sigma = std::sqrt(p * (1 - p) / double(reps));
        CHECK(std::abs(freq - p) < 3.5 * sigma);
    }
}

TEST_CASE("samplers are reproducible from the seed") {
    std::vector<double> rates = {1.0, 2.0, 3.0};
    auto s1 = srp::sample_search_costs_stationary(rates, 500, 42);
    auto s2 = srp::sample_search_costs_stationary(rates, 500, 42);
    CHECK(s1.costs == s2.costs);
    CHECK(s1.rates == s2.rates);
    auto t1 = srp::sample_search_costs_transient(rates, 0.5, 200, 42);
    auto t2 = srp::sample_search_costs_transient(rates, 0.5, 200, 42);
    CHECK(t1.costs == t2.costs);
    // Thread fan-out does not change the result.
    auto s3 = srp::sample_search_costs_stationary(rates, 500, 42, 4);
    CHECK(s1.costs == s3.costs);
}

TEST_CASE("empirical_boundary: starts at zero, tracks the limit curve") {
    CHECK(srp::empirical_boundary({1.0, 1.0}, {1e-12}, 3, 1)[0][0] ==
          Approx(0.0).margin(1e-9));

    const int n = 2048;
    const long reps = 200;
    auto traces = srp::empirical_boundary(std::vector<double>(n, 1.0), {1.0},
                                          reps, 1234);
    double mean = 0.0;
    for (const auto& row : traces)
        mean += row[0];
    mean /= double(reps);
    double var = 0.0;
    for (const auto& row : traces)
        var += (row[0] - mean) * (row[0] - mean);
    double se = std::sqrt(var / double(reps - 1) / double(reps));
    CHECK(std::abs(mean - (1.0 - std::exp(-1.0))) < 3.5 * se);
}

TEST_CASE("empirical_miss tracks the analytic miss probability") {
    const int n = 512;
    const long reps = 4000;
    std::vector<double> rates(n);
    for (int i = 0; i < n; ++i)
        rates[i] = i % 2 == 0 ? 1.0 : 2.0;
    double m = srp::empirical_miss(rates, 1.0, reps, 888);
    double expected = (std::exp(-1.0) + 2.0 * std::exp(-2.0)) / 3.0;
    double sigma = std::sqrt(expected * (1.0 - expected) / double(reps));
    CHECK(std::abs(m - expected) < 3.5 * sigma);
}

TEST_CASE("empirical_atom_tail buckets by atom and flags strangers") {
    std::vector<double> rates = {1.0, 2.0, 1.0, 2.0, 1.0, 2.0};
    RankingState st(rates);
    auto est = srp::empirical_atom_tail(st, 0.5, {1.0, 2.0});
    CHECK(est.unmatched == 0);
    CHECK(est.mass[0] + est.mass[1] == Approx(0.5).margin(1e-12));

    std::vector<double> alien = {1.0, 3.3};
    RankingState st2(alien);
    auto est2 = srp::empirical_atom_tail(st2, 0.0, {1.0, 2.0});
    CHECK(est2.unmatched == 1);
}

TEST_CASE("step_until rejects a horizon before the clock") {
    RankingState st({1.0});
    SplitMix64 rng(3);
    st.step_until(1.0, rng);
    CHECK_THROWS_AS(st.step_until(0.5, rng), std::invalid_argument);
}

TEST_CASE("empirical per-atom tails track the evolved limit tails") {
    // Ladder rates put the rate-2 items in positions 1..n/2, i.e. the
    // block profile [0,.5)->2, [.5,1)->1; compare the per-atom mass beyond
    // y with the closed-form tails after evolving to t.
    const int n = 4096;
    const long reps = 100;
    const double t = 0.7;
    auto law = RateLaw::discrete({{1.0, 0.5}, {2.0, 0.5}});
    auto rates = law.make_empirical_quantile(n).empirical_rates();
    srp::LimitModel model(law);
    auto profile =
        srp::InitialProfile({{0.0, 0.5, RateLaw::point_mass(2.0)},
                             {0.5, 1.0, RateLaw::point_mass(1.0)}});
    for (double y : {0.2, 0.6}) {
        std::vector<std::vector<double>> mass(2, std::vector<double>(reps));
        srp::for_each_replica(reps, 1, [&](long rep) {
            SplitMix64 rng(srp::derive_seed(0xa70e5ULL, rep));
            RankingState st(rates);
            st.step_until(t, rng);
            auto est = srp::empirical_atom_tail(st, y, law.atom_rates());
            REQUIRE(est.unmatched == 0);
            mass[0][rep] = est.mass[0];
            mass[1][rep] = est.mass[1];
        });
        auto limit = srp::evolved_tail(model, profile, y, t);
        for (int a = 0; a < 2; ++a) {
            double mean = 0.0;
            for (double v : mass[a])
                mean += v;
            mean /= double(reps);
            double var = 0.0;
            for (double v : mass[a])
                var += (v - mean) * (v - mean);
            double se = std::sqrt(var / double(reps - 1) / double(reps));
            INFO("y=" << y << " atom " << a);
            CHECK(std::abs(mean - limit.values()[a]) <
                  std::max(3.5 * se, 2e-4));
        }
    }
}
