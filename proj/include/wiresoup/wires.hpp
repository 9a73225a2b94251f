#ifndef WIRESOUP_WIRES_HPP
#define WIRESOUP_WIRES_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wiresoup/graph.hpp"

namespace wiresoup {

/// Raised for link or pairing configurations that violate the model constraints.
class InvalidConfig : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Number of links per edge id (boundary edges included).
struct LinkConfig {
    std::vector<std::uint32_t> m;

    std::uint32_t operator[](EdgeId e) const { return m[e]; }
    std::uint64_t total() const;
    bool operator==(const LinkConfig&) const = default;
};

/// One end of a labeled link: copy is 1-based, side 0 sits at edge(e).first.
struct Endpoint {
    EdgeId edge = 0;
    std::uint32_t copy = 0;
    std::uint8_t side = 0;

    auto operator<=>(const Endpoint&) const = default;
};

struct LabeledLink {
    EdgeId edge = 0;
    std::uint32_t copy = 0;

    auto operator<=>(const LabeledLink&) const = default;
};

/// Throws InvalidConfig when some interior vertex has odd link parity.
void validate_links(const Graph& g, const LinkConfig& links);

/// n_x(m); throws InvalidConfig on a parity violation at x.
std::uint32_t local_occupancy(const Graph& g, const LinkConfig& links, VertexId x);

/// |P_G(m)| = prod_x (2 n_x - 1)!!, as a double (exact below 2^53).
double count_pairings(const Graph& g, const LinkConfig& links);
double log_count_pairings(const Graph& g, const LinkConfig& links);

/// Wire configuration w = (m, pi).
///
/// Links live in a pool; link i owns endpoint ids 2i (side 0) and 2i+1
/// (side 1). Adding a link on an edge always creates the highest copy and
/// only the highest copy can be removed, so the copy labels of an edge never
/// change while that edge is untouched.
class WireConfig {
public:
    using EndpointId = std::uint32_t;
    static constexpr EndpointId kNone = 0xffffffffu;

    explicit WireConfig(const Graph& g);

    /// Build from links plus an explicit list of endpoint pairs; validates completeness.
    static WireConfig from_pairs(const Graph& g, const LinkConfig& links,
                                 const std::vector<std::pair<Endpoint, Endpoint>>& pairs);

    const Graph& graph() const { return *graph_; }

    std::uint32_t links_on(EdgeId e) const { return static_cast<std::uint32_t>(edge_links_[e].size()); }
    LinkConfig links() const;
    std::uint64_t total_links() const { return total_links_; }

    /// Half the number of endpoints at x (floor while a move is half applied).
    std::uint32_t occupancy(VertexId x) const { return ends_at_[x] / 2; }
    std::uint32_t ends_at(VertexId x) const { return ends_at_[x]; }

    VertexId vertex_of(const Endpoint& p) const { return graph_->end(p.edge, p.side); }
    std::optional<Endpoint> partner(const Endpoint& p) const;

    /// Pairs at x with canonical labels: each pair ordered (smaller, larger),
    /// pairs sorted by their smaller endpoint; label q is index + 1.
    std::vector<std::pair<Endpoint, Endpoint>> pairs_at(VertexId x) const;
    std::vector<std::pair<Endpoint, Endpoint>> all_pairs() const;

    /// True when every endpoint at an interior vertex is paired.
    bool is_complete() const;

    // Mutation. Callers keep parity and pairing consistent; validate() checks.
    EndpointId add_link(EdgeId e);
    void remove_top_link(EdgeId e);
    void pair(EndpointId a, EndpointId b);
    void unpair(EndpointId a);
    void validate() const;

    // Fast-path access by endpoint id.
    EndpointId id_of(const Endpoint& p) const { return 2 * edge_links_[p.edge][p.copy - 1] + p.side; }
    Endpoint endpoint(EndpointId id) const { return {link_edge_[id / 2], link_copy_[id / 2], static_cast<std::uint8_t>(id & 1u)}; }
    EndpointId partner_id(EndpointId id) const { return partner_[id]; }
    static EndpointId across(EndpointId id) { return id ^ 1u; }
    static std::uint32_t link_of(EndpointId id) { return id / 2; }
    VertexId vertex_of_id(EndpointId id) const { return graph_->end(link_edge_[id / 2], id & 1u); }
    EndpointId top_endpoint(EdgeId e, std::uint32_t side) const { return 2 * edge_links_[e].back() + side; }
    EdgeId edge_of_link(std::uint32_t link) const { return link_edge_[link]; }

    /// r-th endpoint at x (incident edges ascending, copies ascending), r < ends_at(x).
    EndpointId endpoint_at(VertexId x, std::uint32_t r) const;

    /// Upper bound on link ids, for per-link scratch arrays.
    std::uint32_t link_capacity() const { return static_cast<std::uint32_t>(link_edge_.size()); }

    bool operator==(const WireConfig& other) const;

private:
    const Graph* graph_;
    std::vector<std::vector<std::uint32_t>> edge_links_;  // per edge: link id of copy p at [p-1]
    std::vector<EdgeId> link_edge_;
    std::vector<std::uint32_t> link_copy_;
    std::vector<EndpointId> partner_;
    std::vector<std::uint32_t> free_links_;
    std::vector<std::uint32_t> ends_at_;
    std::uint64_t total_links_ = 0;
};

/// Walk the trajectory through the link of `start`, calling visit(link id)
/// once per link. Returns true if the trajectory is open (reaches the boundary).
template <class Visit>
bool walk_trajectory(const WireConfig& w, WireConfig::EndpointId start, Visit&& visit) {
    const std::uint32_t first = WireConfig::link_of(start);
    visit(first);
    const Graph& g = w.graph();
    // Direction one: leave through the far side of the start link.
    WireConfig::EndpointId at = WireConfig::across(start);
    for (;;) {
        if (!g.is_interior(w.vertex_of_id(at))) break;
        const WireConfig::EndpointId p = w.partner_id(at);
        if (p == WireConfig::kNone) throw InvalidConfig("dangling endpoint");
        if (WireConfig::link_of(p) == first) return false;
        visit(WireConfig::link_of(p));
        at = WireConfig::across(p);
    }
    // Open: walk the other direction from the start endpoint itself.
    at = start;
    for (;;) {
        if (!g.is_interior(w.vertex_of_id(at))) break;
        const WireConfig::EndpointId p = w.partner_id(at);
        if (p == WireConfig::kNone) throw InvalidConfig("dangling endpoint");
        visit(WireConfig::link_of(p));
        at = WireConfig::across(p);
    }
    return true;
}

/// Loops traced from a wire configuration.
struct LoopDecomposition {
    std::vector<std::vector<LabeledLink>> loops;       // canonical cyclic form, sorted
    std::vector<std::vector<LabeledLink>> open_loops;  // boundary to boundary, canonical direction, sorted
    std::uint32_t lambda = 0;
    /// loop_id[e][p-1]: index into loops, or loops.size() + index into open_loops.
    std::vector<std::vector<std::uint32_t>> loop_id;

    std::uint32_t loop_of(const LabeledLink& l) const { return loop_id[l.edge][l.copy - 1]; }
    bool is_open(std::uint32_t id) const { return id >= loops.size(); }
    std::size_t length(std::uint32_t id) const {
        return is_open(id) ? open_loops[id - loops.size()].size() : loops[id].size();
    }
};

LoopDecomposition trace_loops(const WireConfig& w);

/// ñ_x: number of pairs at x that lie on boundary-connected trajectories.
std::uint32_t open_loop_occupancy(const WireConfig& w, VertexId x);
std::uint32_t open_loop_occupancy(const WireConfig& w, const LoopDecomposition& loops, VertexId x);

/// Uniform pairing configuration compatible with the given links.
WireConfig sample_uniform_pairing(const Graph& g, const LinkConfig& links, std::mt19937_64& rng);

/// All pairing configurations for the given links, in a fixed order.
/// Throws std::length_error when there are more than `limit`.
std::vector<WireConfig> enumerate_pairings(const Graph& g, const LinkConfig& links, std::size_t limit = 100000);

}  // namespace wiresoup

#endif
