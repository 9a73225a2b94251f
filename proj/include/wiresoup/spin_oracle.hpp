#ifndef WIRESOUP_SPIN_ORACLE_HPP
#define WIRESOUP_SPIN_ORACLE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wiresoup/graph.hpp"
#include "wiresoup/stats.hpp"

namespace wiresoup {

/// O(N) spins with energy -Σ 2J_e φ_x·φ_y on interior edges and
/// -Σ √2 J_e φ_x·h on boundary edges (h defaults to (1,...,1)).
struct SpinSpec {
    std::uint32_t N = 2;
    std::vector<double> J;
    std::vector<double> field;

    std::vector<double> boundary_vector() const;
};

struct SpinSettings {
    std::uint32_t max_vertices = 6;
    double quadrature_tol = 1e-10;
    std::uint32_t quadrature_start = 8;
    std::uint32_t quadrature_max = 256;
    double series_tol = 1e-11;
    std::uint32_t series_max_order = 40;
};

struct SpinValue {
    double value = 0.0;
    double error = 0.0;  // certified for the series, last refinement change for quadrature
    std::string method;
};

/// ∫ Π_i (φ^{(i)})^{2 n_i} dφ over the normalised sphere S^{N-1} (half exponents n_i).
double sphere_moment(std::uint32_t N, const std::vector<std::uint32_t>& half_exponents);
/// Same with full exponents; zero if any exponent is odd.
double sphere_moment_full(std::uint32_t N, const std::vector<std::uint32_t>& exponents);

/// Normalised integral of Π_{x in sites} φ_x^{(1)} φ_x^{(2)} e^{-H}; empty sites give Z^spin.
/// Method: N = 1 exact sum, N = 2 trapezoid quadrature, N >= 3 series.
SpinValue spin_integral(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites = {},
                        const SpinSettings& settings = {});
SpinValue spin_series(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites = {},
                      const SpinSettings& settings = {});
SpinValue spin_quadrature(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites = {},
                          const SpinSettings& settings = {});

SpinValue spin_partition_exact(const Graph& g, const SpinSpec& spec, const SpinSettings& settings = {});
/// <Π φ^{(1)} φ^{(2)}> at the given sites.
SpinValue spin_correlation_exact(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites,
                                 const SpinSettings& settings = {});

struct VerifyReport {
    std::string instance;
    double lhs = 0.0;  // spin side
    double rhs = 0.0;  // wire side
    double rel_diff = 0.0;
    double lhs_error = 0.0;
    double rhs_error = 0.0;
    double tolerance = 1e-6;

    bool pass() const { return rel_diff < tolerance; }
};

double relative_difference(double a, double b);

VerifyReport verify_equivalence_Z(const Graph& g, std::uint32_t N, double J, std::uint32_t m_cap = 16);
VerifyReport verify_equivalence_corr(const Graph& g, std::uint32_t N, double J, const std::vector<VertexId>& sites,
                                     std::uint32_t m_cap = 16);
/// First: partition functions with boundary. Second: <φ_x^{(1)} φ_x^{(2)}> against the open-loop density.
std::pair<VerifyReport, VerifyReport> verify_boundary_identity(const Graph& g, std::uint32_t N, double J, VertexId x,
                                                               std::uint32_t m_cap = 16);

struct XYSettings {
    std::uint64_t seed = 1;
    std::uint64_t sweeps = 100000;
    std::uint64_t burn_in = 5000;
    double target_acceptance = 0.4;
    std::uint32_t batches = 32;
};

struct XYResult {
    Estimate phi12;     // boundary angle π/4, measuring cos φ_x sin φ_x
    Estimate half_cos2;  // boundary angle 0, measuring cos(2φ_x)/2
    double acceptance = 0.0;
    double step = 0.0;
};

/// Single-site Metropolis for the XY model with constant boundary angle;
/// two independent chains, one per parameterisation of the same quantity.
XYResult xy_metropolis(const Graph& g, double J, VertexId x, const XYSettings& settings);

}  // namespace wiresoup

#endif
