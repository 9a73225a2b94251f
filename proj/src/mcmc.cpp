#include "wiresoup/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>

namespace wiresoup {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t kind_index(MoveKind k) { return static_cast<std::size_t>(k); }

std::uint8_t side_at(const Graph& g, EdgeId e, VertexId v) { return g.edge(e).first == v ? 0 : 1; }

VertexId shared_vertex(const Graph& g, EdgeId a, EdgeId b) {
    const auto [a0, a1] = g.edge(a);
    const auto [b0, b1] = g.edge(b);
    if (a0 == b0 || a0 == b1) return a0;
    if (a1 == b0 || a1 == b1) return a1;
    throw std::logic_error("consecutive cycle edges do not meet");
}

Cycle closed_cycle(const Graph& g, std::vector<EdgeId> edges) {
    Cycle c;
    c.edges = std::move(edges);
    const auto k = static_cast<std::uint32_t>(c.edges.size());
    for (std::uint32_t i = 0; i < k; ++i) {
        const std::uint32_t j = (i + 1) % k;
        c.corners.push_back({shared_vertex(g, c.edges[i], c.edges[j]), i, j});
    }
    return c;
}

// BFS tree over interior edges: parent edge per vertex (kNone at roots).
struct Tree {
    std::vector<EdgeId> parent_edge;
    std::vector<VertexId> parent;
    std::vector<std::uint32_t> depth;
    std::vector<VertexId> root;
};

constexpr std::uint32_t kNone = 0xffffffffu;

Tree bfs_forest(const Graph& g) {
    const VertexId V = g.num_interior();
    Tree t{std::vector<EdgeId>(V, kNone), std::vector<VertexId>(V, kNone), std::vector<std::uint32_t>(V, 0),
           std::vector<VertexId>(V, kNone)};
    for (VertexId r = 0; r < V; ++r) {
        if (t.root[r] != kNone) continue;
        t.root[r] = r;
        std::deque<VertexId> queue{r};
        while (!queue.empty()) {
            const VertexId x = queue.front();
            queue.pop_front();
            for (EdgeId e : g.incident_edges(x)) {
                if (g.is_boundary_edge(e)) continue;
                const VertexId y = g.edge(e).first == x ? g.edge(e).second : g.edge(e).first;
                if (t.root[y] != kNone) continue;
                t.root[y] = r;
                t.parent[y] = x;
                t.parent_edge[y] = e;
                t.depth[y] = t.depth[x] + 1;
                queue.push_back(y);
            }
        }
    }
    return t;
}

// Tree edges on the path x -> y, in order.
std::vector<EdgeId> tree_path(const Tree& t, VertexId x, VertexId y) {
    std::vector<EdgeId> up, down;
    while (x != y) {
        if (t.depth[x] >= t.depth[y]) {
            up.push_back(t.parent_edge[x]);
            x = t.parent[x];
        } else {
            down.push_back(t.parent_edge[y]);
            y = t.parent[y];
        }
    }
    up.insert(up.end(), down.rbegin(), down.rend());
    return up;
}

}  // namespace

std::vector<Cycle> move_cycles(const Graph& g) {
    std::vector<Cycle> out;
    const Tree tree = bfs_forest(g);
    if (g.is_lattice()) {
        for (const auto& p : g.plaquettes()) out.push_back(closed_cycle(g, p));
    } else {
        for (EdgeId e = 0; e < g.num_interior_edges(); ++e) {
            const auto [x, y] = g.edge(e);
            if (tree.parent_edge[x] == e || tree.parent_edge[y] == e) continue;
            std::vector<EdgeId> edges{e};
            const auto path = tree_path(tree, y, x);
            edges.insert(edges.end(), path.begin(), path.end());
            out.push_back(closed_cycle(g, edges));
        }
    }
    // Boundary paths: reference boundary edge, interior path, boundary edge.
    const EdgeId first_boundary = g.num_interior_edges();
    for (EdgeId b = first_boundary + 1; b < g.num_edges(); ++b) {
        const VertexId u0 = g.edge(first_boundary).first, u = g.edge(b).first;
        if (tree.root[u0] != tree.root[u]) continue;
        Cycle c;
        c.edges.push_back(first_boundary);
        const auto path = tree_path(tree, u0, u);
        c.edges.insert(c.edges.end(), path.begin(), path.end());
        c.edges.push_back(b);
        for (std::uint32_t i = 0; i + 1 < c.edges.size(); ++i)
            c.corners.push_back({shared_vertex(g, c.edges[i], c.edges[i + 1]), i, i + 1});
        out.push_back(std::move(c));
    }
    return out;
}

std::string to_string(MoveKind kind) {
    switch (kind) {
        case MoveKind::Rewire: return "rewire";
        case MoveKind::EdgeAdd: return "edge-add";
        case MoveKind::EdgeRemove: return "edge-remove";
        case MoveKind::CycleAdd: return "cycle-add";
        case MoveKind::CycleRemove: return "cycle-remove";
    }
    return "unknown";
}

void ChainSettings::validate(const ModelParams& params) const {
    if (!(link_move_mix >= 0.0 && link_move_mix <= 1.0)) throw std::invalid_argument("link_move_mix must lie in [0,1]");
    if (!(rewire_const_C > 0.0 && rewire_const_C <= 1.0)) throw std::invalid_argument("rewire_const_C must lie in (0,1]");
    if (thinning == 0) throw std::invalid_argument("thinning must be positive");
    if (m_cap == 0) throw std::invalid_argument("m_cap must be positive");
    const double worst = rewire_const_C * std::max(std::sqrt(params.alpha), 1.0 / std::sqrt(params.alpha));
    if (worst > 1.0 + 1e-12)
        throw std::invalid_argument("rewire_const_C * max(sqrt(alpha), 1/sqrt(alpha)) must not exceed 1");
}

Chain::Chain(const Graph& g, ModelParams params, ChainSettings settings)
    : g_(&g), params_(std::move(params)), settings_(settings), w_(g), cycles_(move_cycles(g)), rng_(settings.seed) {
    params_.validate(g);
    settings_.validate(params_);
}

void Chain::reset(WireConfig w) {
    if (&w.graph() != g_) throw std::invalid_argument("configuration belongs to another graph");
    w.validate();
    w_ = std::move(w);
    lambda_ = trace_loops(w_).lambda;
}

std::uint64_t Chain::steps_per_sweep() const { return std::max<std::uint64_t>(1, g_->num_interior() + g_->num_edges()); }

double Chain::log_link_factor(EdgeId e, std::uint32_t m) const {
    if (m == 0) return 0.0;
    if (params_.J[e] == 0.0) return kNegInf;
    return m * std::log(params_.J[e]) - std::lgamma(m + 1.0);
}

double Chain::potential(VertexId, std::uint32_t n) const { return params_.potential(n); }

std::uint32_t Chain::rank_of(VertexId v, WireConfig::EndpointId id) const {
    for (std::uint32_t r = 0; r < w_.ends_at(v); ++r)
        if (w_.endpoint_at(v, r) == id) return r;
    throw std::logic_error("endpoint not found at vertex");
}

std::uint32_t Chain::count_trajectories(const std::vector<std::uint32_t>& seed_links) {
    if (stamp_.size() < w_.link_capacity()) stamp_.resize(w_.link_capacity(), 0);
    ++stamp_value_;
    std::uint32_t count = 0;
    for (std::uint32_t link : seed_links) {
        if (stamp_[link] == stamp_value_) continue;
        walk_trajectory(w_, 2 * link, [&](std::uint32_t l) { stamp_[l] = stamp_value_; });
        ++count;
    }
    return count;
}

void Chain::shape(const Proposal& p, std::vector<EdgeId>& edges, std::vector<Cycle::Corner>& corners) const {
    edges.clear();
    corners.clear();
    if (p.kind == MoveKind::EdgeAdd || p.kind == MoveKind::EdgeRemove) {
        if (p.target >= g_->num_edges()) throw std::out_of_range("edge index out of range");
        edges = {p.target, p.target};
        for (std::uint8_t side = 0; side < 2; ++side) {
            const VertexId v = g_->end(p.target, side);
            if (g_->is_interior(v)) corners.push_back({v, 0, 1});
        }
    } else {
        if (p.target >= cycles_.size()) throw std::out_of_range("cycle index out of range");
        edges = cycles_[p.target].edges;
        corners = cycles_[p.target].corners;
    }
}

double Chain::log_proposal(const Proposal& p) const {
    const double mix = settings_.link_move_mix;
    if (p.kind == MoveKind::Rewire) {
        const double n = w_.occupancy(p.site);
        return std::log(1.0 - mix) - std::log(double(g_->num_interior())) - std::log(n * (2.0 * n - 1.0)) + std::log(2.0);
    }
    const bool cycle = p.kind == MoveKind::CycleAdd || p.kind == MoveKind::CycleRemove;
    double lq = std::log(mix) - std::log(2.0);
    lq += cycle ? std::log(p_cycle()) - std::log(double(cycles_.size()))
                : std::log(1.0 - p_cycle()) - std::log(double(g_->num_edges()));
    if (p.kind == MoveKind::EdgeAdd || p.kind == MoveKind::CycleAdd) {
        std::vector<EdgeId> edges;
        std::vector<Cycle::Corner> corners;
        shape(p, edges, corners);
        for (const auto& c : corners) lq -= std::log(2.0 * w_.occupancy(c.v) + 1.0);
    }
    return lq;
}

Proposal Chain::draw_proposal() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Proposal p;
    if (g_->num_edges() > 0 && unit(rng_) < settings_.link_move_mix) {
        const bool cycle = unit(rng_) < p_cycle();
        const bool add = unit(rng_) < 0.5;
        const std::size_t count = cycle ? cycles_.size() : g_->num_edges();
        p.target = static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, count - 1)(rng_));
        p.kind = cycle ? (add ? MoveKind::CycleAdd : MoveKind::CycleRemove) : (add ? MoveKind::EdgeAdd : MoveKind::EdgeRemove);
        if (add) {
            std::vector<EdgeId> edges;
            std::vector<Cycle::Corner> corners;
            shape(p, edges, corners);
            for (const auto& c : corners)
                p.choices.push_back(std::uniform_int_distribution<std::uint32_t>(0, w_.ends_at(c.v))(rng_));
        }
        return p;
    }
    if (g_->num_interior() == 0) return p;
    p.kind = MoveKind::Rewire;
    p.site = std::uniform_int_distribution<VertexId>(0, g_->num_interior() - 1)(rng_);
    const std::uint32_t ends = w_.ends_at(p.site);
    if (ends >= 4) {
        p.first = std::uniform_int_distribution<std::uint32_t>(0, ends - 1)(rng_);
        p.second = std::uniform_int_distribution<std::uint32_t>(0, ends - 2)(rng_);
        if (p.second >= p.first) ++p.second;
    }
    return p;
}

MoveRecord Chain::apply(const Proposal& p) {
    if (p.kind == MoveKind::Rewire) return apply_rewire(p);
    std::vector<EdgeId> edges;
    std::vector<Cycle::Corner> corners;
    shape(p, edges, corners);
    if (p.kind == MoveKind::EdgeAdd || p.kind == MoveKind::CycleAdd) return apply_add(p, edges, corners);
    return apply_remove(p, edges, corners);
}

MoveRecord Chain::apply_rewire(const Proposal& p) {
    MoveRecord r;
    r.forward = p;
    if (p.site >= g_->num_interior()) return r;
    const std::uint32_t ends = w_.ends_at(p.site);
    if (ends < 4 || p.first == p.second || p.first >= ends || p.second >= ends) return r;
    const auto a = w_.endpoint_at(p.site, p.first), b = w_.endpoint_at(p.site, p.second);
    const auto pa = w_.partner_id(a), pb = w_.partner_id(b);
    if (pa == b) return r;
    const std::vector<std::uint32_t> seeds{WireConfig::link_of(a), WireConfig::link_of(b), WireConfig::link_of(pa),
                                           WireConfig::link_of(pb)};
    const std::uint32_t before = count_trajectories(seeds);
    r.log_q_forward = log_proposal(p);
    w_.unpair(a);
    w_.unpair(b);
    w_.pair(a, b);
    w_.pair(pa, pb);
    const std::uint32_t after = count_trajectories(seeds);
    r.applicable = true;
    r.delta_lambda = static_cast<int>(after) - static_cast<int>(before);
    lambda_ += r.delta_lambda;
    r.inverse.kind = MoveKind::Rewire;
    r.inverse.site = p.site;
    r.inverse.first = p.first;
    r.inverse.second = rank_of(p.site, pa);
    r.log_q_reverse = log_proposal(r.inverse);
    const double log_alpha = std::log(params_.alpha);
    r.delta_log_pi = r.delta_lambda * log_alpha;
    r.log_accept = std::min(0.0, std::log(settings_.rewire_const_C) + 0.5 * r.delta_lambda * log_alpha);
    return r;
}

MoveRecord Chain::apply_add(const Proposal& p, const std::vector<EdgeId>& edges,
                            const std::vector<Cycle::Corner>& corners) {
    MoveRecord r;
    r.forward = p;
    if (p.choices.size() != corners.size()) throw std::invalid_argument("one choice per corner required");
    std::map<EdgeId, std::uint32_t> mult;
    for (EdgeId e : edges) ++mult[e];
    for (const auto& [e, k] : mult)
        if (w_.links_on(e) + k > settings_.m_cap) return r;
    for (std::size_t k = 0; k < corners.size(); ++k)
        if (p.choices[k] > w_.ends_at(corners[k].v)) throw std::out_of_range("corner choice out of range");

    r.log_q_forward = log_proposal(p);
    double dlog = 0.0;
    for (const auto& [e, k] : mult) dlog += log_link_factor(e, w_.links_on(e) + k) - log_link_factor(e, w_.links_on(e));
    for (const auto& c : corners) {
        const std::uint32_t n = w_.occupancy(c.v);
        dlog -= potential(c.v, n + 1) - potential(c.v, n);
    }

    std::vector<WireConfig::EndpointId> old_c(corners.size(), WireConfig::kNone), old_d(corners.size(), WireConfig::kNone);
    std::vector<std::uint32_t> seeds;
    for (std::size_t k = 0; k < corners.size(); ++k) {
        if (p.choices[k] == 0) continue;
        old_c[k] = w_.endpoint_at(corners[k].v, p.choices[k] - 1);
        old_d[k] = w_.partner_id(old_c[k]);
        seeds.push_back(WireConfig::link_of(old_c[k]));
        seeds.push_back(WireConfig::link_of(old_d[k]));
    }
    const std::uint32_t before = count_trajectories(seeds);

    std::vector<std::uint32_t> links;
    for (EdgeId e : edges) links.push_back(WireConfig::link_of(w_.add_link(e)));
    for (std::size_t k = 0; k < corners.size(); ++k) {
        const auto& c = corners[k];
        const auto a = 2 * links[c.i] + side_at(*g_, edges[c.i], c.v);
        const auto b = 2 * links[c.j] + side_at(*g_, edges[c.j], c.v);
        if (p.choices[k] == 0) {
            w_.pair(a, b);
        } else {
            w_.unpair(old_c[k]);
            w_.pair(a, old_c[k]);
            w_.pair(b, old_d[k]);
        }
    }
    seeds.insert(seeds.end(), links.begin(), links.end());
    const std::uint32_t after = count_trajectories(seeds);

    r.applicable = true;
    r.delta_lambda = static_cast<int>(after) - static_cast<int>(before);
    lambda_ += r.delta_lambda;
    r.delta_log_pi = dlog + r.delta_lambda * std::log(params_.alpha);
    r.inverse.kind = p.kind == MoveKind::EdgeAdd ? MoveKind::EdgeRemove : MoveKind::CycleRemove;
    r.inverse.target = p.target;
    r.log_q_reverse = log_proposal(r.inverse);
    r.log_accept = std::isinf(r.delta_log_pi) ? kNegInf
                                              : std::min(0.0, r.delta_log_pi + r.log_q_reverse - r.log_q_forward);
    return r;
}

MoveRecord Chain::apply_remove(const Proposal& p, const std::vector<EdgeId>& edges,
                               const std::vector<Cycle::Corner>& corners) {
    MoveRecord r;
    r.forward = p;
    std::map<EdgeId, std::uint32_t> mult;
    for (EdgeId e : edges) ++mult[e];
    for (const auto& [e, k] : mult)
        if (w_.links_on(e) < k) return r;

    r.log_q_forward = log_proposal(p);
    double dlog = 0.0;
    for (const auto& [e, k] : mult) dlog += log_link_factor(e, w_.links_on(e) - k) - log_link_factor(e, w_.links_on(e));
    for (const auto& c : corners) {
        const std::uint32_t n = w_.occupancy(c.v);
        dlog -= potential(c.v, n - 1) - potential(c.v, n);
    }

    // The i-th listed edge occurrence owns the copy counted from the top.
    std::vector<std::uint32_t> links(edges.size());
    std::map<EdgeId, std::uint32_t> seen;
    for (std::size_t i = edges.size(); i-- > 0;) {
        const EdgeId e = edges[i];
        const std::uint32_t copy = w_.links_on(e) - seen[e]++;
        links[i] = WireConfig::link_of(w_.id_of({e, copy, 0}));
    }
    std::vector<std::uint32_t> seeds(links);
    std::vector<WireConfig::EndpointId> old_c(corners.size(), WireConfig::kNone), old_d(corners.size(), WireConfig::kNone);
    for (std::size_t k = 0; k < corners.size(); ++k) {
        const auto& c = corners[k];
        const auto a = 2 * links[c.i] + side_at(*g_, edges[c.i], c.v);
        const auto b = 2 * links[c.j] + side_at(*g_, edges[c.j], c.v);
        if (w_.partner_id(a) == b) continue;
        old_c[k] = w_.partner_id(a);
        old_d[k] = w_.partner_id(b);
        seeds.push_back(WireConfig::link_of(old_c[k]));
        seeds.push_back(WireConfig::link_of(old_d[k]));
    }
    const std::uint32_t before = count_trajectories(seeds);

    for (std::size_t k = 0; k < corners.size(); ++k) {
        const auto& c = corners[k];
        const auto a = 2 * links[c.i] + side_at(*g_, edges[c.i], c.v);
        const auto b = 2 * links[c.j] + side_at(*g_, edges[c.j], c.v);
        w_.unpair(a);
        w_.unpair(b);
        if (old_c[k] != WireConfig::kNone) w_.pair(old_c[k], old_d[k]);
    }
    for (std::size_t i = edges.size(); i-- > 0;) w_.remove_top_link(edges[i]);

    std::vector<std::uint32_t> remaining;
    for (std::size_t k = 0; k < corners.size(); ++k)
        if (old_c[k] != WireConfig::kNone) remaining.push_back(WireConfig::link_of(old_c[k]));
    const std::uint32_t after = count_trajectories(remaining);

    r.applicable = true;
    r.delta_lambda = static_cast<int>(after) - static_cast<int>(before);
    lambda_ += r.delta_lambda;
    r.delta_log_pi = dlog + r.delta_lambda * std::log(params_.alpha);
    r.inverse.kind = p.kind == MoveKind::EdgeRemove ? MoveKind::EdgeAdd : MoveKind::CycleAdd;
    r.inverse.target = p.target;
    for (std::size_t k = 0; k < corners.size(); ++k)
        r.inverse.choices.push_back(old_c[k] == WireConfig::kNone ? 0 : rank_of(corners[k].v, old_c[k]) + 1);
    r.log_q_reverse = log_proposal(r.inverse);
    r.log_accept = std::isinf(r.delta_log_pi) ? kNegInf
                                              : std::min(0.0, r.delta_log_pi + r.log_q_reverse - r.log_q_forward);
    return r;
}

MoveRecord Chain::step() {
    const Proposal p = draw_proposal();
    MoveRecord r = apply(p);
    ++counters_.proposed[kind_index(p.kind)];
    if (r.applicable) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        r.accepted = std::log(u) < r.log_accept;
        if (r.accepted)
            ++counters_.accepted[kind_index(p.kind)];
        else
            apply(r.inverse);
    }
    ++step_count_;
    if (settings_.lambda_check_interval && step_count_ % settings_.lambda_check_interval == 0 &&
        trace_loops(w_).lambda != lambda_)
        throw std::logic_error("incremental loop count diverged from trace");
    return r;
}

void Chain::sweep() {
    const std::uint64_t n = steps_per_sweep();
    for (std::uint64_t i = 0; i < n; ++i) step();
}

Chain::Counters run_chain(const Graph& g, const ModelParams& params, const ChainSettings& settings,
                          const std::function<void(const ChainSample&)>& hook) {
    Chain chain(g, params, settings);
    for (std::uint64_t s = 0; s < settings.burn_in; ++s) chain.sweep();
    for (std::uint64_t s = 1; s <= settings.sweeps; ++s) {
        chain.sweep();
        if (s % settings.thinning == 0 && hook) hook({s, chain.lambda(), chain.sum_m(), &chain.state()});
    }
    return chain.counters();
}

namespace {

// Partner rank of every endpoint, vertex by vertex.
std::vector<std::uint32_t> pairing_key(const WireConfig& w) {
    std::vector<std::uint32_t> key;
    const Graph& g = w.graph();
    for (VertexId x = 0; x < g.num_interior(); ++x) {
        const std::uint32_t ends = w.ends_at(x);
        std::vector<WireConfig::EndpointId> ids(ends);
        for (std::uint32_t r = 0; r < ends; ++r) ids[r] = w.endpoint_at(x, r);
        for (std::uint32_t r = 0; r < ends; ++r)
            key.push_back(static_cast<std::uint32_t>(std::find(ids.begin(), ids.end(), w.partner_id(ids[r])) - ids.begin()));
    }
    return key;
}

}  // namespace

StationarityReport stationarity_check_fixed_m(const Graph& g, const LinkConfig& links, double alpha,
                                              std::uint64_t steps, std::mt19937_64& rng, double C) {
    validate_links(g, links);
    const auto all = enumerate_pairings(g, links, 100000);
    std::map<std::vector<std::uint32_t>, std::size_t> index;
    StationarityReport rep;
    rep.states = all.size();
    rep.steps = steps;
    double total = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        index[pairing_key(all[i])] = i;
        rep.exact.push_back(std::pow(alpha, trace_loops(all[i]).lambda));
        total += rep.exact.back();
    }
    for (double& p : rep.exact) p /= total;

    ChainSettings s;
    s.seed = rng();
    s.rewire_const_C = C;
    s.link_move_mix = 0.0;
    Chain chain(g, ModelParams::constant(g, alpha, 0.0, Potential::factorial()), s);
    chain.reset(sample_uniform_pairing(g, links, chain.rng()));
    std::vector<std::uint64_t> counts(all.size(), 0);
    for (std::uint64_t t = 0; t < steps; ++t) {
        chain.step();
        ++counts[index.at(pairing_key(chain.state()))];
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        const double emp = steps ? double(counts[i]) / steps : 0.0;
        rep.empirical.push_back(emp);
        rep.tv += 0.5 * std::abs(emp - rep.exact[i]);
        const double sd = std::sqrt(rep.exact[i] * (1.0 - rep.exact[i]) / std::max<std::uint64_t>(steps, 1));
        rep.z.push_back(sd > 0 ? (emp - rep.exact[i]) / sd : 0.0);
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(rep.z.back()));
    }
    return rep;
}

}  // namespace wiresoup
