#include "wiresoup/graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wiresoup {

Graph Graph::from_edges(std::uint32_t num_interior,
                        std::vector<std::pair<VertexId, VertexId>> edges,
                        std::uint32_t num_boundary,
                        std::vector<std::pair<VertexId, VertexId>> boundary_edges) {
    Graph g;
    g.num_interior_ = num_interior;
    g.num_boundary_ = num_boundary;
    const std::uint32_t nv = num_interior + num_boundary;

    std::set<std::pair<VertexId, VertexId>> seen;
    auto key = [](VertexId a, VertexId b) { return a < b ? std::pair{a, b} : std::pair{b, a}; };
    for (const auto& [a, b] : edges) {
        if (a >= num_interior || b >= num_interior)
            throw std::invalid_argument("edge endpoint is not an interior vertex");
        if (a == b) throw std::invalid_argument("self-loop edges are not allowed");
        if (!seen.insert(key(a, b)).second) throw std::invalid_argument("duplicate edge");
    }
    for (const auto& [x, b] : boundary_edges) {
        if (x >= num_interior || b < num_interior || b >= nv)
            throw std::invalid_argument("boundary edge must join an interior and a boundary vertex");
        if (!seen.insert(key(x, b)).second) throw std::invalid_argument("duplicate boundary edge");
    }
    g.num_interior_edges_ = static_cast<std::uint32_t>(edges.size());
    g.edges_ = std::move(edges);
    g.edges_.insert(g.edges_.end(), boundary_edges.begin(), boundary_edges.end());
    g.finalize();
    return g;
}

void Graph::finalize() {
    const std::uint32_t nv = num_vertices();
    std::vector<std::uint32_t> count(nv + 1, 0);
    for (const auto& [a, b] : edges_) {
        ++count[a + 1];
        ++count[b + 1];
    }
    for (std::uint32_t v = 0; v < nv; ++v) count[v + 1] += count[v];
    incidence_offsets_ = count;
    incidence_.assign(count[nv], 0);
    std::vector<std::uint32_t> fill(count.begin(), count.end() - 1);
    for (EdgeId e = 0; e < num_edges(); ++e) {
        incidence_[fill[edges_[e].first]++] = e;
        incidence_[fill[edges_[e].second]++] = e;
    }
    // Edge ids were inserted in increasing order, so each slice is sorted.
}

std::span<const EdgeId> Graph::incident_edges(VertexId x) const {
    if (x >= num_vertices()) throw std::out_of_range("unknown vertex " + std::to_string(x));
    return {incidence_.data() + incidence_offsets_[x], incidence_.data() + incidence_offsets_[x + 1]};
}

std::optional<VertexId> Graph::vertex_at(const std::vector<int>& coord) const {
    for (VertexId v = 0; v < coords_.size(); ++v)
        if (coords_[v] == coord) return v;
    return std::nullopt;
}

std::string Graph::describe() const {
    std::ostringstream os;
    os << "graph(V=" << num_interior_ << ", E=" << num_interior_edges_;
    if (has_boundary()) os << ", boundary V=" << num_boundary_ << ", boundary E=" << num_edges() - num_interior_edges_;
    os << ")";
    return os.str();
}

Graph build_box(std::uint32_t side, std::uint32_t d, int offset, bool with_boundary) {
    if (d == 0) throw std::invalid_argument("lattice dimension must be positive");
    if (side == 0) throw std::invalid_argument("box side must be positive");

    std::uint64_t n = 1;
    for (std::uint32_t i = 0; i < d; ++i) {
        n *= side;
        if (n > (1u << 26)) throw std::invalid_argument("lattice box too large");
    }

    Graph g;
    g.dim_ = d;
    g.num_interior_ = static_cast<std::uint32_t>(n);
    g.coords_.resize(n, std::vector<int>(d));
    std::vector<std::uint64_t> stride(d, 1);
    for (std::uint32_t i = 1; i < d; ++i) stride[i] = stride[i - 1] * side;
    for (std::uint64_t v = 0; v < n; ++v)
        for (std::uint32_t i = 0; i < d; ++i)
            g.coords_[v][i] = offset + static_cast<int>((v / stride[i]) % side);

    std::vector<std::pair<VertexId, VertexId>> edges;
    // edge_index[v][i] = edge from v in +direction i, if any.
    std::vector<std::vector<std::int64_t>> edge_index(n, std::vector<std::int64_t>(d, -1));
    for (std::uint64_t v = 0; v < n; ++v)
        for (std::uint32_t i = 0; i < d; ++i)
            if ((v / stride[i]) % side + 1 < side) {
                edge_index[v][i] = static_cast<std::int64_t>(edges.size());
                edges.emplace_back(static_cast<VertexId>(v), static_cast<VertexId>(v + stride[i]));
            }
    g.num_interior_edges_ = static_cast<std::uint32_t>(edges.size());

    for (std::uint64_t v = 0; v < n; ++v)
        for (std::uint32_t i = 0; i < d; ++i)
            for (std::uint32_t j = i + 1; j < d; ++j) {
                if (edge_index[v][i] < 0 || edge_index[v][j] < 0) continue;
                const std::uint64_t vi = v + stride[i], vj = v + stride[j];
                if (edge_index[vi][j] < 0 || edge_index[vj][i] < 0) continue;
                g.plaquettes_.push_back({static_cast<EdgeId>(edge_index[v][i]), static_cast<EdgeId>(edge_index[vi][j]),
                                         static_cast<EdgeId>(edge_index[vj][i]), static_cast<EdgeId>(edge_index[v][j])});
            }

    if (with_boundary) {
        for (std::uint64_t v = 0; v < n; ++v)
            for (std::uint32_t i = 0; i < d; ++i)
                for (int dir : {-1, +1}) {
                    const int c = g.coords_[v][i] + dir;
                    if (c >= offset && c < offset + static_cast<int>(side)) continue;
                    std::vector<int> bc = g.coords_[v];
                    bc[i] = c;
                    const VertexId b = g.num_interior_ + g.num_boundary_++;
                    g.coords_.push_back(std::move(bc));
                    edges.emplace_back(static_cast<VertexId>(v), b);
                }
    }
    g.edges_ = std::move(edges);
    g.finalize();
    return g;
}

Graph build_hypercubic(std::uint32_t L, std::uint32_t d) {
    return build_box(2 * L + 1, d, -static_cast<int>(L), false);
}

Graph build_hypercubic_with_boundary(std::uint32_t L, std::uint32_t d) {
    return build_box(2 * L + 1, d, -static_cast<int>(L), true);
}

Graph single_edge_graph() { return Graph::from_edges(2, {{0, 1}}); }

Graph path_graph(std::uint32_t num_edges) {
    std::vector<std::pair<VertexId, VertexId>> edges;
    for (VertexId v = 0; v < num_edges; ++v) edges.emplace_back(v, v + 1);
    return Graph::from_edges(num_edges + 1, std::move(edges));
}

Graph cycle_graph(std::uint32_t n) {
    if (n < 3) throw std::invalid_argument("cycle graph needs at least 3 vertices");
    std::vector<std::pair<VertexId, VertexId>> edges;
    for (VertexId v = 0; v < n; ++v) edges.emplace_back(v, (v + 1) % n);
    return Graph::from_edges(n, std::move(edges));
}

Graph fixture_graph(const std::string& name) {
    if (name == "single_edge") return single_edge_graph();
    if (name == "path2") return path_graph(2);
    if (name == "triangle") return triangle_graph();
    if (name == "square") return square_graph();
    throw std::invalid_argument("unknown fixture graph '" + name + "'");
}

VertexId central_vertex(const Graph& g) {
    if (!g.is_lattice()) return 0;
    VertexId best = 0;
    long best_norm = std::numeric_limits<long>::max();
    for (VertexId v = 0; v < g.num_interior(); ++v) {
        long norm = 0;
        for (int c : g.coords(v)) norm += static_cast<long>(c) * c;
        if (norm < best_norm) {
            best_norm = norm;
            best = v;
        }
    }
    return best;
}

namespace {

std::vector<std::uint32_t> bfs_distances(const Graph& g, VertexId src) {
    std::vector<std::uint32_t> dist(g.num_interior(), std::numeric_limits<std::uint32_t>::max());
    std::deque<VertexId> queue{src};
    dist[src] = 0;
    while (!queue.empty()) {
        const VertexId v = queue.front();
        queue.pop_front();
        for (EdgeId e : g.incident_edges(v)) {
            if (g.is_boundary_edge(e)) continue;
            const VertexId w = g.edge(e).first == v ? g.edge(e).second : g.edge(e).first;
            if (dist[w] == std::numeric_limits<std::uint32_t>::max()) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    return dist;
}

}  // namespace

std::vector<VertexId> spread_sites(const Graph& g, std::uint32_t count) {
    if (count > g.num_interior()) throw std::invalid_argument("more sites requested than interior vertices");
    std::vector<VertexId> chosen;
    if (count == 0) return chosen;
    chosen.push_back(0);
    std::vector<std::uint32_t> nearest = bfs_distances(g, 0);
    while (chosen.size() < count) {
        VertexId best = 0;
        std::uint32_t best_d = 0;
        for (VertexId v = 0; v < g.num_interior(); ++v)
            if (nearest[v] > best_d) {
                best_d = nearest[v];
                best = v;
            }
        if (best_d == 0) throw std::invalid_argument("graph too small for distinct spread sites");
        chosen.push_back(best);
        const auto d = bfs_distances(g, best);
        for (VertexId v = 0; v < g.num_interior(); ++v) nearest[v] = std::min(nearest[v], d[v]);
    }
    return chosen;
}

}  // namespace wiresoup
