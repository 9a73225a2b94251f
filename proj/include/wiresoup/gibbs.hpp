#ifndef WIRESOUP_GIBBS_HPP
#define WIRESOUP_GIBBS_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wiresoup/graph.hpp"
#include "wiresoup/wires.hpp"

namespace wiresoup {

inline constexpr double kForbidden = -std::numeric_limits<double>::infinity();

/// Site potential U(n) with U(0) = 0; +infinity marks forbidden occupancies.
class Potential {
public:
    enum class Kind { GammaN, Factorial, Table };

    /// e^{-U(n)} = Γ(N/2) / Γ(n + N/2).
    static Potential gamma_n(double N);
    /// e^{-U(n)} = 1 / n!.
    static Potential factorial();
    /// Explicit values U(0..size-1), +infinity beyond. Requires U(0) = 0.
    static Potential table(std::vector<double> values);

    double operator()(std::uint32_t n) const;
    Kind kind() const { return kind_; }
    double N() const { return N_; }
    const std::vector<double>& values() const { return table_; }

    /// sup over n >= n0 of (2n+1) e^{U(n) - U(n+1)}.
    double tail_ratio_sup(std::uint32_t n0) const;

    std::string describe() const;

private:
    Kind kind_ = Kind::Factorial;
    double N_ = 2.0;
    std::vector<double> table_;
};

struct ModelParams {
    double alpha = 1.0;
    std::vector<double> J;  // per edge id, boundary edges included
    Potential potential = Potential::factorial();

    static ModelParams constant(const Graph& g, double alpha, double J, Potential potential);
    /// Throws std::invalid_argument when alpha <= 0, some J_e < 0 or J has the wrong size.
    void validate(const Graph& g) const;
};

struct BoundParams {
    double C = 2.0;
    double alpha_bar = 1.0;
    double eta = 0.0;

    /// Smallest C the certificate scan can establish for the potential.
    static BoundParams certified(const ModelParams& params, double eta = 0.0);
};

/// Smallest C with (2n-1)!! e^{-U(n)} <= C^n for all n: explicit scan for
/// n <= n_max (or the table length) plus the tail ratio beyond it.
double certify_C(const Potential& U, std::uint32_t n_max = 64);
bool check_certificate(const Potential& U, double C, std::uint32_t n_max = 64);

/// Σ_e (m_e log J_e - log m_e!) - Σ_{interior x} U(n_x); kForbidden when zero.
double log_link_weight(const Graph& g, const LinkConfig& links, const ModelParams& params);

/// λ log α plus log_link_weight.
double log_weight(const WireConfig& w, const ModelParams& params);
double log_weight(const WireConfig& w, const ModelParams& params, std::uint32_t lambda);

/// Generic strand-contraction sum over link and pairing configurations.
///
/// Computes Σ_m Π_e c_e(m_e) Σ_π Π_x s(x, n_x) Π_loops ω(marks, open) where
/// marked sites (bit j for marked[j]) each select one of their pairs and
/// attach their bit to the loop through it. Sites are contracted one at a
/// time; the state is the multiset of partial trajectories still open.
struct StrandSum {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> edge_options;  // per edge: (m_e, c_e(m_e))
    std::function<double(VertexId, std::uint32_t)> site_weight;
    std::function<double(std::uint32_t, bool)> loop_weight;
    std::vector<VertexId> marked;
};
double strand_sum(const Graph& g, const StrandSum& spec);

/// Σ_π α^{λ(m,π)} for a fixed link configuration.
double loop_sum(const Graph& g, const LinkConfig& links, double alpha);

struct PartitionResult {
    double value = 0.0;
    double truncation_bound = 0.0;  // Z - value lies in [0, truncation_bound]
};

/// Z restricted to m_e <= m_cap, plus the rigorous tail bound.
PartitionResult partition_exact(const Graph& g, const ModelParams& params, std::uint32_t m_cap = 16,
                                std::uint32_t max_edges = 6);

/// Same sum by explicit enumeration of link configurations and pairings (small caps only).
double partition_by_enumeration(const Graph& g, const ModelParams& params, std::uint32_t m_cap);

/// Every parity-valid link configuration with m_e <= m_cap and its summed weight.
std::vector<std::pair<LinkConfig, double>> link_config_weights(const Graph& g, const ModelParams& params,
                                                               std::uint32_t m_cap, std::size_t limit = 1000000);

/// E[Σ_q Σ_{X even} (2/N)^{|X|} 2^{-2k} 1_{E_X} Π_j 1/(n_{x_j} + N/2)] at α = N, GammaN(N).
PartitionResult wire_even_correlation(const Graph& g, double N, const std::vector<double>& J,
                                      const std::vector<VertexId>& sites, std::uint32_t m_cap = 16);

/// (1/N) E[ñ_x / (n_x + N/2)] on a graph with boundary at α = N, GammaN(N).
PartitionResult wire_open_loop_density(const Graph& g, double N, const std::vector<double>& J, VertexId x,
                                       std::uint32_t m_cap = 16);

double partition_upper_bound(const Graph& g, const ModelParams& params, const BoundParams& bound);

/// Π_e e^{μ_e} - Π_e Σ_{m <= cap} μ_e^m / m!, μ_e = ᾱ C J_e.
double truncation_bound(const std::vector<double>& J, const BoundParams& bound, std::uint32_t m_cap);

struct TailBound {
    bool divergent = false;
    double value = 0.0;
    double rho = 0.0;
};
/// e^{-ηn} Σ_k ρ^k with ρ = 2d (e^{e^η ᾱ C J} - 1)^{1/2}.
TailBound lmax_tail_bound(std::uint32_t d, double J, std::uint32_t n, const BoundParams& bound);

/// 2^{-3/2} log(1 + (2d)^{-2}).
double small_J_threshold(std::uint32_t d);

}  // namespace wiresoup

#endif
