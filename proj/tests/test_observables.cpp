#include "doctest.h"

#include <cmath>
#include <map>

#include "wiresoup/gibbs.hpp"
#include "wiresoup/mcmc.hpp"
#include "wiresoup/observables.hpp"

using namespace wiresoup;

namespace {

// path2 with two links per edge, each edge's links closed into its own 2-loop
WireConfig two_disjoint_loops(const Graph& g) {
    std::vector<std::pair<Endpoint, Endpoint>> pairs{
        {{0, 1, 0}, {0, 2, 0}}, {{0, 1, 1}, {0, 2, 1}}, {{1, 1, 0}, {1, 2, 0}}, {{1, 1, 1}, {1, 2, 1}}};
    return WireConfig::from_pairs(g, LinkConfig{{2, 2}}, pairs);
}

WireConfig straight_pairs(const Graph& g, std::uint32_t m) {
    std::vector<std::pair<Endpoint, Endpoint>> pairs;
    for (std::uint8_t side = 0; side < 2; ++side)
        for (std::uint32_t p = 1; p < m; p += 2) pairs.push_back({{0, p, side}, {0, p + 1, side}});
    return WireConfig::from_pairs(g, LinkConfig{{m}}, pairs);
}

}  // namespace

TEST_CASE("loop partitions") {
    const auto e = single_edge_graph();
    auto p = loop_partition(WireConfig(e));
    CHECK(p.lengths.empty());
    CHECK(p.V == 0);

    const auto sq = square_graph();
    std::mt19937_64 rng(1);
    p = loop_partition(sample_uniform_pairing(sq, LinkConfig{{1, 1, 1, 1}}, rng));
    CHECK(p.lengths == std::vector<std::uint32_t>{4});
    CHECK(p.normalized == std::vector<double>{1.0});

    p = loop_partition(straight_pairs(e, 4));
    CHECK(p.lengths == std::vector<std::uint32_t>{2, 2});
    CHECK(p.V == 4);
    CHECK(p.normalized == std::vector<double>{0.5, 0.5});
}

TEST_CASE("set partition enumeration") {
    const std::uint64_t bell[] = {1, 1, 2, 5, 15, 52, 203};
    for (std::uint32_t n = 0; n <= 6; ++n) CHECK(enumerate_set_partitions(n).size() == bell[n]);
    CHECK(enumerate_even_partitions(2).size() == 1);
    CHECK(enumerate_even_partitions(4).size() == 4);
    // {6}, {4,2} in C(6,2) ways, {2,2,2} in 15 ways
    CHECK(enumerate_even_partitions(6).size() == 31);
    for (auto& X : enumerate_set_partitions(5)) {
        auto copy = X;
        CHECK_NOTHROW(copy.canonicalize());
        CHECK(copy == X);
        CHECK(X.ground_size() == 5);
    }
    SetPartition bad{{{0, 1}, {1}}};
    CHECK_THROWS_AS(bad.canonicalize(), std::invalid_argument);
    CHECK(SetPartition{{{0, 2}, {1}}}.to_string() == "{{1,3},{2}}");
}

TEST_CASE("induced partitions") {
    const auto sq = square_graph();
    std::mt19937_64 rng(2);
    const auto loop = sample_uniform_pairing(sq, LinkConfig{{1, 1, 1, 1}}, rng);
    auto X = induced_partition(loop, {{0, 1}, {2, 1}});
    REQUIRE(X);
    CHECK(X->blocks == std::vector<std::vector<std::uint32_t>>{{0, 1}});
    CHECK_FALSE(induced_partition(loop, {{0, 2}}));
    X = induced_partition(loop, {{1, 1}});
    REQUIRE(X);
    CHECK(X->blocks.size() == 1);

    const auto path = path_graph(2);
    const auto w = two_disjoint_loops(path);
    X = induced_partition(w, {{0, 1}, {2, 1}});
    REQUIRE(X);
    CHECK(X->blocks == std::vector<std::vector<std::uint32_t>>{{0}, {1}});
}

TEST_CASE("even correlation estimator examples") {
    const auto e = single_edge_graph();
    CHECK(even_corr_estimator(straight_pairs(e, 2), {0, 1}) == doctest::Approx(0.25));
    CHECK(even_corr_estimator(WireConfig(e), {0, 1}) == 0.0);
    const auto path = path_graph(2);
    CHECK(even_corr_estimator(two_disjoint_loops(path), {0, 2}) == 0.0);
    CHECK_THROWS_AS(even_corr_estimator(straight_pairs(e, 2), {0, 0}), std::invalid_argument);
    // m = 4 on one edge, two 2-loops: q pairs (1,1),(2,2) share a loop, the other two do not
    CHECK(even_corr_estimator(straight_pairs(e, 4), {0, 1}) == doctest::Approx(2.0 / 9.0));
}

TEST_CASE("estimators agree with direct enumeration on chain samples") {
    for (const auto& g : {square_graph(), build_hypercubic(1, 2)}) {
        ChainSettings s;
        s.seed = 4;
        Chain chain(g, ModelParams::constant(g, 2.0, 0.8, Potential::factorial()), s);
        const std::vector<std::vector<VertexId>> site_sets{{0, 2}, {0, 1, 2, 3}};
        for (int sample = 0; sample < 150; ++sample) {
            for (int i = 0; i < 30; ++i) chain.step();
            const auto& w = chain.state();
            const auto loops = trace_loops(w);
            for (const auto& sites : site_sets) {
                const double est = even_corr_estimator(w, loops, sites);
                CHECK(est >= 0.0);
                CHECK(est <= 1.0);

                // direct: every label tuple through induced_partition
                double direct = 0.0, defined = 0.0, weight = 1.0;
                std::vector<std::uint32_t> n;
                for (VertexId x : sites) {
                    n.push_back(w.occupancy(x));
                    weight /= n.back() + 1.0;
                }
                bool empty = false;
                for (auto k : n) empty = empty || k == 0;
                if (!empty) {
                    std::vector<std::uint32_t> q(sites.size(), 1);
                    for (;;) {
                        std::vector<MarkedPoint> pts;
                        for (std::size_t j = 0; j < sites.size(); ++j) pts.push_back({sites[j], q[j]});
                        const auto X = induced_partition(w, loops, pts);
                        REQUIRE(X);
                        direct += X->is_even() ? weight : 0.0;
                        defined += weight;
                        std::size_t j = 0;
                        for (; j < q.size(); ++j) {
                            if (++q[j] <= n[j]) break;
                            q[j] = 1;
                        }
                        if (j == q.size()) break;
                    }
                }
                CHECK(est == doctest::Approx(direct).epsilon(1e-12));

                double even_sum = 0.0, all_sum = 0.0;
                for (const auto& X : enumerate_set_partitions(static_cast<std::uint32_t>(sites.size()))) {
                    const auto r = per_partition_estimator(w, loops, sites, X);
                    all_sum += r.weighted;
                    if (X.is_even()) even_sum += r.weighted;
                }
                CHECK(even_sum == doctest::Approx(est).epsilon(1e-12));
                CHECK(all_sum == doctest::Approx(defined).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("tilde-m estimator") {
    const auto free_graph = single_edge_graph();
    CHECK_THROWS_AS(tilde_m_value(WireConfig(free_graph), trace_loops(WireConfig(free_graph)), 0), std::invalid_argument);

    const auto g = build_hypercubic_with_boundary(0, 1);
    const auto zero = ModelParams::constant(g, 2.0, 0.0, Potential::factorial());
    ChainSettings s;
    s.sweeps = 100;
    run_chain(g, zero, s, [&](const ChainSample& x) { CHECK(tilde_m_value(*x.w, trace_loops(*x.w), 0) == 0.0); });

    // single site between two boundary edges: every loop is open, so ñ = n
    const double J = 0.2;
    const auto params = ModelParams::constant(g, 2.0, J, Potential::factorial());
    double num = 0.0, den = 0.0;
    for (const auto& [links, weight] : link_config_weights(g, params, 30)) {
        const double n = (links.m[0] + links.m[1]) / 2.0;
        num += weight * n / (n + 1.0);
        den += weight;
    }
    const double exact = num / den;
    s.seed = 17;
    s.sweeps = 200000;
    s.burn_in = 1000;
    std::vector<double> values;
    run_chain(g, params, s, [&](const ChainSample& x) {
        const auto loops = trace_loops(*x.w);
        CHECK(open_loop_occupancy(*x.w, loops, 0) == x.w->occupancy(0));
        values.push_back(tilde_m_value(*x.w, loops, 0));
    });
    const auto est = tilde_m_estimator(values);
    INFO("exact " << exact << " mc " << est.mean << " ± " << est.error);
    CHECK(std::abs(est.mean - exact) < 3 * est.error);
}

TEST_CASE("longest loop survival") {
    const auto e = single_edge_graph();
    CHECK(lmax_at(WireConfig(e), trace_loops(WireConfig(e)), 0) == 0);
    const auto w = straight_pairs(e, 4);
    CHECK(lmax_at(w, trace_loops(w), 0) == 2);
    const auto sq = square_graph();
    std::mt19937_64 rng(3);
    const auto loop = sample_uniform_pairing(sq, LinkConfig{{1, 1, 1, 1}}, rng);
    CHECK(lmax_at(loop, trace_loops(loop), 2) == 4);

    LmaxSurvival surv;
    for (std::uint32_t v : {0u, 0u, 2u, 4u, 4u, 6u}) surv.add(v);
    CHECK(surv.samples() == 6);
    CHECK(surv.survival(0) == 1.0);
    CHECK(surv.survival(1) == doctest::Approx(4.0 / 6));
    CHECK(surv.survival(5) == doctest::Approx(1.0 / 6));
    CHECK(surv.survival(7) == 0.0);
    for (std::uint32_t n = 0; n < 8; ++n) {
        CHECK(surv.survival(n + 1) <= surv.survival(n));
        const auto b = surv.band(n);
        CHECK(b.lower <= surv.survival(n));
        CHECK(b.upper >= surv.survival(n));
    }
    LmaxSurvival empty;
    CHECK(empty.survival(1) == 0.0);
}

TEST_CASE("cutoff length") {
    CHECK(cutoff_length(1, 2) == 3);
    CHECK(cutoff_length(1, 1) == 2);
    CHECK(cutoff_length(1, 3) == 6);
    CHECK(cutoff_length(2, 3) == 12);
    CHECK(cutoff_length(4, 2) == 9);
    std::uint64_t prev = 0;
    for (std::uint32_t L = 1; L < 200; ++L) {
        const auto c = cutoff_length(L, 3);
        CHECK(c >= prev);
        prev = c;
    }
    CHECK(double(cutoff_length(1000, 3)) / std::pow(2001.0, 3) < 1e-4);
    CHECK_THROWS_AS(cutoff_length(0, 2), std::invalid_argument);

    LoopPartitionSample p;
    p.lengths = {6, 2, 2};
    p.V = 10;
    CHECK(long_loop_fraction(p, 3) == doctest::Approx(0.6));
    CHECK(long_loop_fraction({}, 3) == 0.0);
}
