#include "wiresoup/io.hpp"

#include <stdexcept>

namespace wiresoup {

using nlohmann::json;

json graph_to_json(const Graph& g) {
    json edges = json::array(), boundary = json::array();
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
        const auto [u, v] = g.edge(e);
        (g.is_boundary_edge(e) ? boundary : edges).push_back({u, v});
    }
    return {{"vertices", g.num_interior()},
            {"edges", edges},
            {"boundary_vertices", g.num_boundary()},
            {"boundary_edges", boundary}};
}

Graph graph_from_json(const json& j) {
    try {
        auto pairs = [](const json& list) {
            std::vector<std::pair<VertexId, VertexId>> out;
            for (const auto& e : list) {
                if (!e.is_array() || e.size() != 2) throw std::invalid_argument("edges must be [u, v] pairs");
                out.emplace_back(e[0].get<VertexId>(), e[1].get<VertexId>());
            }
            return out;
        };
        return Graph::from_edges(j.at("vertices").get<std::uint32_t>(), pairs(j.at("edges")),
                                 j.value("boundary_vertices", 0u), pairs(j.value("boundary_edges", json::array())));
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed graph JSON: ") + e.what());
    }
}

json wire_to_json(const WireConfig& w) {
    json pairs = json::array();
    for (const auto& [a, b] : w.all_pairs())
        pairs.push_back({{a.edge, a.copy, a.side}, {b.edge, b.copy, b.side}});
    return {{"m", w.links().m}, {"pairings", pairs}};
}

WireConfig wire_from_json(const Graph& g, const json& j) {
    try {
        LinkConfig links{j.at("m").get<std::vector<std::uint32_t>>()};
        std::vector<std::pair<Endpoint, Endpoint>> pairs;
        auto endpoint = [](const json& e) {
            if (!e.is_array() || e.size() != 3) throw std::invalid_argument("endpoints must be [edge, copy, side]");
            return Endpoint{e[0].get<EdgeId>(), e[1].get<std::uint32_t>(), e[2].get<std::uint8_t>()};
        };
        for (const auto& p : j.at("pairings")) {
            if (!p.is_array() || p.size() != 2) throw std::invalid_argument("pairings must hold two endpoints");
            pairs.emplace_back(endpoint(p[0]), endpoint(p[1]));
        }
        return WireConfig::from_pairs(g, links, pairs);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed wire configuration JSON: ") + e.what());
    }
}

}  // namespace wiresoup
