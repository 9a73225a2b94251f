#ifndef WIRESOUP_IO_HPP
#define WIRESOUP_IO_HPP

#include "json.hpp"
#include "wiresoup/graph.hpp"
#include "wiresoup/wires.hpp"

namespace wiresoup {

/// {vertices, edges, boundary_vertices, boundary_edges}; boundary vertex ids follow the interior ones.
nlohmann::json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);

/// {m: [...], pairings: [[[edge, copy, side], [edge, copy, side]], ...]}.
nlohmann::json wire_to_json(const WireConfig& w);
WireConfig wire_from_json(const Graph& g, const nlohmann::json& j);

}  // namespace wiresoup

#endif
