#include "doctest.h"

#include <map>

#include "wiresoup/wires.hpp"

using namespace wiresoup;

namespace {

LinkConfig uniform_links(const Graph& g, std::uint32_t m) {
    LinkConfig l;
    l.m.assign(g.num_edges(), m);
    return l;
}

}  // namespace

TEST_CASE("local occupancy and pairing counts") {
    auto edge = single_edge_graph();
    auto tri = triangle_graph();
    CHECK(local_occupancy(tri, uniform_links(tri, 0), 0) == 0);
    CHECK(local_occupancy(edge, uniform_links(edge, 4), 0) == 2);
    CHECK(local_occupancy(edge, uniform_links(edge, 4), 1) == 2);
    for (VertexId x = 0; x < 3; ++x) CHECK(local_occupancy(tri, uniform_links(tri, 1), x) == 1);

    CHECK(count_pairings(tri, uniform_links(tri, 0)) == 1);
    CHECK(count_pairings(edge, uniform_links(edge, 4)) == 9);
    CHECK(count_pairings(tri, uniform_links(tri, 1)) == 1);
    CHECK(log_count_pairings(edge, uniform_links(edge, 4)) == doctest::Approx(std::log(9.0)));

    auto path = path_graph(2);
    LinkConfig bad{{1, 2}};
    CHECK_THROWS_AS(local_occupancy(path, bad, 1), InvalidConfig);
    CHECK_THROWS_AS(validate_links(path, bad), InvalidConfig);
}

TEST_CASE("single edge with four links") {
    auto g = single_edge_graph();
    auto all = enumerate_pairings(g, uniform_links(g, 4));
    REQUIRE(all.size() == 9);
    int two = 0, one = 0;
    for (const auto& w : all) {
        w.validate();
        auto loops = trace_loops(w);
        CHECK(loops.open_loops.empty());
        std::size_t total = 0;
        for (const auto& l : loops.loops) total += l.size();
        CHECK(total == 4);
        CHECK(loops.lambda <= 2);
        (loops.lambda == 2 ? two : one)++;
    }
    CHECK(two == 3);
    CHECK(one == 6);
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = 0; j < all.size(); ++j) CHECK((all[i] == all[j]) == (i == j));
}

TEST_CASE("loop tracing on small fixtures") {
    auto g = single_edge_graph();
    auto w = enumerate_pairings(g, uniform_links(g, 2)).at(0);
    auto loops = trace_loops(w);
    CHECK(loops.lambda == 1);
    CHECK(loops.loops.at(0).size() == 2);

    auto sq = square_graph();
    w = enumerate_pairings(sq, uniform_links(sq, 1)).at(0);
    loops = trace_loops(w);
    CHECK(loops.lambda == 1);
    CHECK(loops.loops.at(0).size() == 4);
    CHECK(loops.loops.at(0).front() == LabeledLink{0, 1});

    // Canonical form does not depend on how the pairing was entered.
    auto pairs = w.all_pairs();
    std::vector<std::pair<Endpoint, Endpoint>> swapped;
    for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) swapped.emplace_back(it->second, it->first);
    auto w2 = WireConfig::from_pairs(sq, uniform_links(sq, 1), swapped);
    CHECK(w2 == w);
    CHECK(trace_loops(w2).loops == loops.loops);

    CHECK_THROWS_AS(WireConfig::from_pairs(sq, uniform_links(sq, 1), {}), InvalidConfig);
}

TEST_CASE("dangling endpoints are reported") {
    auto g = single_edge_graph();
    WireConfig w(g);
    w.add_link(0);
    w.add_link(0);
    w.pair(w.id_of({0, 1, 0}), w.id_of({0, 2, 0}));
    CHECK_FALSE(w.is_complete());
    CHECK_THROWS_AS(trace_loops(w), InvalidConfig);
    CHECK_THROWS_AS(w.validate(), InvalidConfig);
}

TEST_CASE("open loops and open loop occupancy") {
    auto g = build_hypercubic_with_boundary(0, 1);
    LinkConfig l{{1, 1}};
    auto w = enumerate_pairings(g, l).at(0);
    auto loops = trace_loops(w);
    CHECK(loops.loops.empty());
    CHECK(loops.open_loops.size() == 1);
    CHECK(loops.lambda == 1);
    CHECK(open_loop_occupancy(w, 0) == 1);

    LinkConfig none{{0, 0}};
    CHECK(open_loop_occupancy(enumerate_pairings(g, none).at(0), 0) == 0);

    CHECK_THROWS_AS(open_loop_occupancy(enumerate_pairings(single_edge_graph(), LinkConfig{{2}}).at(0), 0),
                    std::invalid_argument);

    // Path -1,0,1 with boundary: a closed 2-loop on edge {0,1} through x = 0
    // and an open trajectory through the whole path.
    auto h = build_hypercubic_with_boundary(1, 1);
    const VertexId x = *h.vertex_at({0});
    const VertexId left = *h.vertex_at({-1});
    const VertexId right = *h.vertex_at({1});
    EdgeId e_left = 0, e_right = 0, b_left = 0, b_right = 0;
    for (EdgeId e = 0; e < h.num_edges(); ++e) {
        auto [u, v] = h.edge(e);
        if (h.is_boundary_edge(e))
            (u == left ? b_left : b_right) = e;
        else
            ((u == left || v == left) ? e_left : e_right) = e;
    }
    LinkConfig m;
    m.m.assign(h.num_edges(), 0);
    m.m[e_left] = 1;
    m.m[b_left] = 1;
    m.m[e_right] = 3;
    m.m[b_right] = 1;
    const bool right_first = h.edge(e_right).first == right;
    const std::uint8_t side_x = right_first ? 1 : 0, side_r = 1 - side_x;
    std::vector<std::pair<Endpoint, Endpoint>> pairs;
    // at x: the left link continues on copy 1 of the right edge; copies 2,3 close up
    pairs.push_back({Endpoint{e_left, 1, static_cast<std::uint8_t>(h.edge(e_left).first == x ? 0 : 1)},
                     Endpoint{e_right, 1, side_x}});
    pairs.push_back({Endpoint{e_right, 2, side_x}, Endpoint{e_right, 3, side_x}});
    pairs.push_back({Endpoint{e_right, 2, side_r}, Endpoint{e_right, 3, side_r}});
    pairs.push_back({Endpoint{e_right, 1, side_r}, Endpoint{b_right, 1, 0}});
    pairs.push_back({Endpoint{e_left, 1, static_cast<std::uint8_t>(h.edge(e_left).first == left ? 0 : 1)},
                     Endpoint{b_left, 1, 0}});
    auto mixed = WireConfig::from_pairs(h, m, pairs);
    auto dec = trace_loops(mixed);
    CHECK(dec.loops.size() == 1);
    CHECK(dec.open_loops.size() == 1);
    CHECK(dec.open_loops[0].size() == 4);
    CHECK(mixed.occupancy(x) == 2);
    CHECK(open_loop_occupancy(mixed, x) == 1);
}

TEST_CASE("uniform pairing sampler") {
    auto g = single_edge_graph();
    auto links = uniform_links(g, 4);
    auto all = enumerate_pairings(g, links);
    std::map<std::vector<std::pair<Endpoint, Endpoint>>, std::size_t> index;
    for (std::size_t i = 0; i < all.size(); ++i) index[all[i].all_pairs()] = i;

    std::mt19937_64 rng(7);
    const int n = 1000000;
    std::vector<int> counts(9, 0);
    for (int i = 0; i < n; ++i) ++counts.at(index.at(sample_uniform_pairing(g, links, rng).all_pairs()));
    const double p = 1.0 / 9.0, sigma = std::sqrt(n * p * (1 - p));
    for (int c : counts) CHECK(std::abs(c - n * p) < 3 * sigma);

    std::mt19937_64 a(42), b(42);
    CHECK(sample_uniform_pairing(g, links, a) == sample_uniform_pairing(g, links, b));

    auto tri = triangle_graph();
    std::mt19937_64 r(1);
    auto w = sample_uniform_pairing(tri, uniform_links(tri, 1), r);
    CHECK(w == enumerate_pairings(tri, uniform_links(tri, 1)).at(0));
}

TEST_CASE("loop count invariants on random configurations") {
    auto g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        LinkConfig l;
        l.m.assign(g.num_edges(), 0);
        // random even configuration: a sum of random cycles
        const std::vector<std::vector<EdgeId>> cycles{{0, 1, 2, 3}, {0, 1, 4}, {2, 3, 4}};
        for (int k = 0; k < 4; ++k)
            for (EdgeId e : cycles[rng() % 3]) ++l.m[e];
        auto w = sample_uniform_pairing(g, l, rng);
        auto dec = trace_loops(w);
        std::size_t total = 0;
        for (const auto& loop : dec.loops) total += loop.size();
        CHECK(total == l.total());
        CHECK(2 * dec.lambda <= l.total());
        std::uint64_t occ = 0;
        for (VertexId x = 0; x < 4; ++x) occ += local_occupancy(g, l, x);
        CHECK(occ == l.total());
        for (EdgeId e = 0; e < g.num_edges(); ++e)
            for (std::uint32_t p = 1; p <= l[e]; ++p) CHECK(dec.loop_of({e, p}) < dec.lambda);
        CHECK(trace_loops(w).loops == dec.loops);
    }
}
