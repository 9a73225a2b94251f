#ifndef WIRESOUP_GRAPH_HPP
#define WIRESOUP_GRAPH_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wiresoup {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Finite graph with an optional set of boundary vertices.
///
/// Interior vertices are 0..num_interior()-1 and boundary vertices follow.
/// Interior edges come first in the edge numbering, boundary edges (always
/// stored as (interior, boundary)) after them, so every per-edge array of the
/// model covers both kinds with one contiguous id range.
class Graph {
public:
    Graph() = default;

    /// Build from explicit lists. Throws std::invalid_argument on self loops,
    /// duplicate edges, undeclared endpoints or malformed boundary edges.
    static Graph from_edges(std::uint32_t num_interior,
                            std::vector<std::pair<VertexId, VertexId>> edges,
                            std::uint32_t num_boundary = 0,
                            std::vector<std::pair<VertexId, VertexId>> boundary_edges = {});

    std::uint32_t num_interior() const { return num_interior_; }
    std::uint32_t num_boundary() const { return num_boundary_; }
    std::uint32_t num_vertices() const { return num_interior_ + num_boundary_; }
    std::uint32_t num_interior_edges() const { return num_interior_edges_; }
    std::uint32_t num_edges() const { return static_cast<std::uint32_t>(edges_.size()); }
    bool has_boundary() const { return num_boundary_ > 0; }

    bool is_interior(VertexId v) const { return v < num_interior_; }
    bool is_boundary_edge(EdgeId e) const { return e >= num_interior_edges_; }

    const std::pair<VertexId, VertexId>& edge(EdgeId e) const { return edges_[e]; }
    std::span<const std::pair<VertexId, VertexId>> edges() const { return edges_; }

    /// Endpoint of edge e on the given side (0 = first, 1 = second).
    VertexId end(EdgeId e, unsigned side) const { return side == 0 ? edges_[e].first : edges_[e].second; }

    /// Edge ids containing x (interior and boundary edges), ascending.
    std::span<const EdgeId> incident_edges(VertexId x) const;
    std::uint32_t degree(VertexId x) const { return static_cast<std::uint32_t>(incident_edges(x).size()); }

    // Lattice metadata; empty for graphs built from explicit lists.
    std::uint32_t dimension() const { return dim_; }
    bool is_lattice() const { return dim_ > 0; }
    const std::vector<int>& coords(VertexId v) const { return coords_[v]; }
    std::optional<VertexId> vertex_at(const std::vector<int>& coord) const;

    /// Unit squares of a lattice box, each as its four interior edges in cyclic order.
    const std::vector<std::vector<EdgeId>>& plaquettes() const { return plaquettes_; }

    std::string describe() const;

private:
    friend Graph build_box(std::uint32_t side, std::uint32_t d, int offset, bool with_boundary);

    void finalize();

    std::uint32_t num_interior_ = 0;
    std::uint32_t num_boundary_ = 0;
    std::uint32_t num_interior_edges_ = 0;
    std::vector<std::pair<VertexId, VertexId>> edges_;
    std::vector<std::uint32_t> incidence_offsets_;
    std::vector<EdgeId> incidence_;

    std::uint32_t dim_ = 0;
    std::vector<std::vector<int>> coords_;
    std::vector<std::vector<EdgeId>> plaquettes_;
};

/// Box {offset, ..., offset+side-1}^d with nearest-neighbour edges, vertices
/// numbered by mixed radix (first coordinate fastest). With boundary, every
/// exterior site at distance 1 gets its own boundary vertex.
Graph build_box(std::uint32_t side, std::uint32_t d, int offset, bool with_boundary);

/// Λ_L = {-L,...,L}^d.
Graph build_hypercubic(std::uint32_t L, std::uint32_t d);
Graph build_hypercubic_with_boundary(std::uint32_t L, std::uint32_t d);

// Small fixtures for exact oracles.
Graph single_edge_graph();
Graph path_graph(std::uint32_t num_edges);
Graph cycle_graph(std::uint32_t n);
inline Graph triangle_graph() { return cycle_graph(3); }
inline Graph square_graph() { return cycle_graph(4); }

/// Named fixture lookup: "single_edge", "path2", "triangle", "square".
Graph fixture_graph(const std::string& name);

/// Vertex of a lattice box closest to the coordinate origin (ties: lowest id).
VertexId central_vertex(const Graph& g);

/// Greedy farthest-point placement of `count` interior sites (graph distance).
std::vector<VertexId> spread_sites(const Graph& g, std::uint32_t count);

}  // namespace wiresoup

#endif
