#include "wiresoup/wires.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace wiresoup {

std::uint64_t LinkConfig::total() const {
    return std::accumulate(m.begin(), m.end(), std::uint64_t{0});
}

void validate_links(const Graph& g, const LinkConfig& links) {
    if (links.m.size() != g.num_edges()) throw InvalidConfig("link configuration size does not match edge count");
    for (VertexId x = 0; x < g.num_interior(); ++x) local_occupancy(g, links, x);
}

std::uint32_t local_occupancy(const Graph& g, const LinkConfig& links, VertexId x) {
    if (!g.is_interior(x)) throw std::out_of_range("local occupancy needs an interior vertex");
    std::uint64_t ends = 0;
    for (EdgeId e : g.incident_edges(x)) ends += links.m.at(e);
    if (ends % 2 != 0) throw InvalidConfig("odd number of link endpoints at vertex " + std::to_string(x));
    return static_cast<std::uint32_t>(ends / 2);
}

double log_count_pairings(const Graph& g, const LinkConfig& links) {
    double total = 0.0;
    for (VertexId x = 0; x < g.num_interior(); ++x) {
        const std::uint32_t n = local_occupancy(g, links, x);
        // log (2n-1)!! = log (2n)! - n log 2 - log n!
        total += std::lgamma(2.0 * n + 1.0) - n * std::log(2.0) - std::lgamma(n + 1.0);
    }
    return total;
}

double count_pairings(const Graph& g, const LinkConfig& links) {
    double total = 1.0;
    for (VertexId x = 0; x < g.num_interior(); ++x) {
        const std::uint32_t n = local_occupancy(g, links, x);
        for (std::uint32_t k = 2 * n; k > 1; k -= 2) total *= static_cast<double>(k - 1);
    }
    return total;
}

WireConfig::WireConfig(const Graph& g)
    : graph_(&g), edge_links_(g.num_edges()), ends_at_(g.num_vertices(), 0) {}

WireConfig WireConfig::from_pairs(const Graph& g, const LinkConfig& links,
                                  const std::vector<std::pair<Endpoint, Endpoint>>& pairs) {
    validate_links(g, links);
    WireConfig w(g);
    for (EdgeId e = 0; e < g.num_edges(); ++e)
        for (std::uint32_t p = 0; p < links.m[e]; ++p) w.add_link(e);
    for (const auto& [a, b] : pairs) {
        for (const Endpoint& p : {a, b})
            if (p.edge >= g.num_edges() || p.copy == 0 || p.copy > links.m[p.edge] || p.side > 1)
                throw InvalidConfig("pair refers to a link that does not exist");
        if (w.vertex_of(a) != w.vertex_of(b)) throw InvalidConfig("paired endpoints sit at different vertices");
        if (!g.is_interior(w.vertex_of(a))) throw InvalidConfig("endpoints at boundary vertices are never paired");
        if (a == b) throw InvalidConfig("endpoint paired with itself");
        const EndpointId ia = w.id_of(a), ib = w.id_of(b);
        if (w.partner_[ia] != kNone || w.partner_[ib] != kNone) throw InvalidConfig("endpoint paired twice");
        w.pair(ia, ib);
    }
    if (!w.is_complete()) throw InvalidConfig("pairing leaves unmatched endpoints");
    return w;
}

LinkConfig WireConfig::links() const {
    LinkConfig out;
    out.m.reserve(edge_links_.size());
    for (const auto& v : edge_links_) out.m.push_back(static_cast<std::uint32_t>(v.size()));
    return out;
}

std::optional<Endpoint> WireConfig::partner(const Endpoint& p) const {
    const EndpointId q = partner_[id_of(p)];
    if (q == kNone) return std::nullopt;
    return endpoint(q);
}

std::vector<std::pair<Endpoint, Endpoint>> WireConfig::pairs_at(VertexId x) const {
    std::vector<std::pair<Endpoint, Endpoint>> out;
    for (std::uint32_t r = 0; r < ends_at_[x]; ++r) {
        const EndpointId a = endpoint_at(x, r);
        const EndpointId b = partner_[a];
        if (b == kNone) continue;
        Endpoint ea = endpoint(a), eb = endpoint(b);
        if (eb < ea) continue;
        out.emplace_back(ea, eb);
    }
    // endpoint_at enumerates in ascending order, so out is sorted by first element.
    return out;
}

std::vector<std::pair<Endpoint, Endpoint>> WireConfig::all_pairs() const {
    std::vector<std::pair<Endpoint, Endpoint>> out;
    for (VertexId x = 0; x < graph_->num_interior(); ++x) {
        auto at = pairs_at(x);
        out.insert(out.end(), at.begin(), at.end());
    }
    return out;
}

bool WireConfig::is_complete() const {
    for (EdgeId e = 0; e < edge_links_.size(); ++e)
        for (std::uint32_t side = 0; side < 2; ++side) {
            if (!graph_->is_interior(graph_->end(e, side))) continue;
            for (std::uint32_t link : edge_links_[e])
                if (partner_[2 * link + side] == kNone) return false;
        }
    return true;
}

WireConfig::EndpointId WireConfig::add_link(EdgeId e) {
    std::uint32_t link;
    if (!free_links_.empty()) {
        link = free_links_.back();
        free_links_.pop_back();
    } else {
        link = static_cast<std::uint32_t>(link_edge_.size());
        link_edge_.push_back(0);
        link_copy_.push_back(0);
        partner_.push_back(kNone);
        partner_.push_back(kNone);
    }
    link_edge_[link] = e;
    edge_links_[e].push_back(link);
    link_copy_[link] = static_cast<std::uint32_t>(edge_links_[e].size());
    partner_[2 * link] = partner_[2 * link + 1] = kNone;
    ++ends_at_[graph_->edge(e).first];
    ++ends_at_[graph_->edge(e).second];
    ++total_links_;
    return 2 * link;
}

void WireConfig::remove_top_link(EdgeId e) {
    if (edge_links_[e].empty()) throw std::logic_error("no link to remove");
    const std::uint32_t link = edge_links_[e].back();
    if (partner_[2 * link] != kNone || partner_[2 * link + 1] != kNone)
        throw std::logic_error("removing a link that is still paired");
    edge_links_[e].pop_back();
    free_links_.push_back(link);
    --ends_at_[graph_->edge(e).first];
    --ends_at_[graph_->edge(e).second];
    --total_links_;
}

void WireConfig::pair(EndpointId a, EndpointId b) {
    partner_[a] = b;
    partner_[b] = a;
}

void WireConfig::unpair(EndpointId a) {
    const EndpointId b = partner_[a];
    partner_[a] = kNone;
    if (b != kNone) partner_[b] = kNone;
}

void WireConfig::validate() const {
    validate_links(*graph_, links());
    for (EdgeId e = 0; e < edge_links_.size(); ++e)
        for (std::uint32_t link : edge_links_[e])
            for (std::uint32_t side = 0; side < 2; ++side) {
                const EndpointId a = 2 * link + side;
                const EndpointId b = partner_[a];
                const bool interior = graph_->is_interior(vertex_of_id(a));
                if (!interior) {
                    if (b != kNone) throw InvalidConfig("boundary endpoint is paired");
                    continue;
                }
                if (b == kNone) throw InvalidConfig("unpaired endpoint at interior vertex");
                if (partner_[b] != a || vertex_of_id(b) != vertex_of_id(a) || b == a)
                    throw InvalidConfig("inconsistent pairing");
            }
}

WireConfig::EndpointId WireConfig::endpoint_at(VertexId x, std::uint32_t r) const {
    for (EdgeId e : graph_->incident_edges(x)) {
        const auto& copies = edge_links_[e];
        if (r < copies.size()) return 2 * copies[r] + (graph_->edge(e).first == x ? 0u : 1u);
        r -= static_cast<std::uint32_t>(copies.size());
    }
    throw std::out_of_range("endpoint index out of range");
}

bool WireConfig::operator==(const WireConfig& other) const {
    if (graph_ != other.graph_ || links() != other.links()) return false;
    for (EdgeId e = 0; e < edge_links_.size(); ++e)
        for (std::uint32_t p = 0; p < edge_links_[e].size(); ++p)
            for (std::uint32_t side = 0; side < 2; ++side) {
                const EndpointId a = 2 * edge_links_[e][p] + side;
                const EndpointId b = 2 * other.edge_links_[e][p] + side;
                const EndpointId pa = partner_[a], pb = other.partner_[b];
                if ((pa == kNone) != (pb == kNone)) return false;
                if (pa != kNone && endpoint(pa) != other.endpoint(pb)) return false;
            }
    return true;
}

namespace {

std::vector<LabeledLink> canonical_cycle(std::vector<LabeledLink> seq) {
    const auto it = std::min_element(seq.begin(), seq.end());
    std::rotate(seq.begin(), it, seq.end());
    if (seq.size() > 2 && seq.back() < seq[1]) std::reverse(seq.begin() + 1, seq.end());
    return seq;
}

std::vector<LabeledLink> canonical_path(std::vector<LabeledLink> seq) {
    std::vector<LabeledLink> rev(seq.rbegin(), seq.rend());
    return rev < seq ? rev : seq;
}

}  // namespace

LoopDecomposition trace_loops(const WireConfig& w) {
    const Graph& g = w.graph();
    std::vector<char> seen(w.link_capacity(), 0);
    std::vector<std::vector<LabeledLink>> closed, open;

    std::vector<std::uint32_t> forward, backward;
    for (EdgeId e = 0; e < g.num_edges(); ++e)
        for (std::uint32_t p = 1; p <= w.links_on(e); ++p) {
            const WireConfig::EndpointId start = w.id_of({e, p, 0});
            if (seen[WireConfig::link_of(start)]) continue;
            // Record links in walk order: the forward direction first, then the
            // backward direction (only non-empty for open trajectories).
            std::vector<LabeledLink> seq;
            bool in_backward = false;
            forward.clear();
            backward.clear();
            const std::uint32_t first = WireConfig::link_of(start);
            const bool is_open = walk_trajectory(w, start, [&](std::uint32_t link) {
                if (seen[link]) {
                    if (link != first) throw InvalidConfig("link visited twice while tracing");
                }
                seen[link] = 1;
                if (link == first && !forward.empty()) in_backward = true;
                if (in_backward)
                    backward.push_back(link);
                else
                    forward.push_back(link);
            });
            (void)is_open;
            // walk_trajectory visits the first link once; the backward walk starts after it.
            auto label = [&](std::uint32_t link) {
                const Endpoint ep = w.endpoint(2 * link);
                return LabeledLink{ep.edge, ep.copy};
            };
            if (!is_open) {
                for (std::uint32_t link : forward) seq.push_back(label(link));
                closed.push_back(canonical_cycle(std::move(seq)));
            } else {
                for (auto it = backward.rbegin(); it != backward.rend(); ++it) seq.push_back(label(*it));
                for (std::uint32_t link : forward) seq.push_back(label(link));
                open.push_back(canonical_path(std::move(seq)));
            }
        }

    std::sort(closed.begin(), closed.end());
    std::sort(open.begin(), open.end());
    LoopDecomposition out;
    out.loop_id.resize(g.num_edges());
    for (EdgeId e = 0; e < g.num_edges(); ++e) out.loop_id[e].assign(w.links_on(e), 0);
    for (std::uint32_t i = 0; i < closed.size(); ++i)
        for (const auto& l : closed[i]) out.loop_id[l.edge][l.copy - 1] = i;
    for (std::uint32_t i = 0; i < open.size(); ++i)
        for (const auto& l : open[i]) out.loop_id[l.edge][l.copy - 1] = static_cast<std::uint32_t>(closed.size() + i);
    out.lambda = static_cast<std::uint32_t>(closed.size() + open.size());
    out.loops = std::move(closed);
    out.open_loops = std::move(open);
    return out;
}

std::uint32_t open_loop_occupancy(const WireConfig& w, const LoopDecomposition& loops, VertexId x) {
    const Graph& g = w.graph();
    if (!g.has_boundary()) throw std::invalid_argument("open loop occupancy needs a graph with boundary");
    if (!g.is_interior(x)) throw std::out_of_range("open loop occupancy needs an interior vertex");
    std::uint32_t count = 0;
    for (EdgeId e : g.incident_edges(x))
        for (std::uint32_t p = 1; p <= w.links_on(e); ++p)
            if (loops.is_open(loops.loop_of({e, p}))) ++count;
    return count / 2;
}

std::uint32_t open_loop_occupancy(const WireConfig& w, VertexId x) {
    if (!w.graph().has_boundary()) throw std::invalid_argument("open loop occupancy needs a graph with boundary");
    return open_loop_occupancy(w, trace_loops(w), x);
}

WireConfig sample_uniform_pairing(const Graph& g, const LinkConfig& links, std::mt19937_64& rng) {
    validate_links(g, links);
    WireConfig w(g);
    for (EdgeId e = 0; e < g.num_edges(); ++e)
        for (std::uint32_t p = 0; p < links.m[e]; ++p) w.add_link(e);
    std::vector<WireConfig::EndpointId> ends;
    for (VertexId x = 0; x < g.num_interior(); ++x) {
        ends.clear();
        for (std::uint32_t r = 0; r < w.ends_at(x); ++r) ends.push_back(w.endpoint_at(x, r));
        // Fisher-Yates with our own index draws keeps the stream platform independent.
        for (std::size_t i = ends.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(ends[i - 1], ends[pick(rng)]);
        }
        for (std::size_t i = 0; i + 1 < ends.size(); i += 2) w.pair(ends[i], ends[i + 1]);
    }
    return w;
}

std::vector<WireConfig> enumerate_pairings(const Graph& g, const LinkConfig& links, std::size_t limit) {
    if (count_pairings(g, links) > static_cast<double>(limit))
        throw std::length_error("pairing space exceeds enumeration limit");
    WireConfig base(g);
    for (EdgeId e = 0; e < g.num_edges(); ++e)
        for (std::uint32_t p = 0; p < links.m[e]; ++p) base.add_link(e);

    std::vector<std::vector<WireConfig::EndpointId>> site_ends(g.num_interior());
    for (VertexId x = 0; x < g.num_interior(); ++x)
        for (std::uint32_t r = 0; r < base.ends_at(x); ++r) site_ends[x].push_back(base.endpoint_at(x, r));

    std::vector<WireConfig> out;
    // Recursive matching: pair the lowest unmatched endpoint of the current site.
    std::function<void(WireConfig&, VertexId)> recurse = [&](WireConfig& w, VertexId x) {
        while (x < g.num_interior()) {
            const auto& ends = site_ends[x];
            auto first = std::find_if(ends.begin(), ends.end(),
                                      [&](auto id) { return w.partner_id(id) == WireConfig::kNone; });
            if (first == ends.end()) {
                ++x;
                continue;
            }
            for (auto it = first + 1; it != ends.end(); ++it) {
                if (w.partner_id(*it) != WireConfig::kNone) continue;
                w.pair(*first, *it);
                recurse(w, x);
                w.unpair(*first);
            }
            return;
        }
        out.push_back(w);
    };
    recurse(base, 0);
    return out;
}

}  // namespace wiresoup
