#ifndef WIRESOUP_PD_HPP
#define WIRESOUP_PD_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "wiresoup/observables.hpp"
#include "wiresoup/stats.hpp"

namespace wiresoup {

/// Parts sum to 1; `parts` is decreasing, `generation` keeps the order parts were created in.
struct IntervalPartition {
    std::vector<double> parts;
    std::vector<double> generation;

    double total() const;
    void sort_parts();
};

/// Y_i ~ Beta(1, θ), parts Y_1, (1-Y_1)Y_2, ... until the leftover mass is below eps,
/// which is then folded into the last part.
IntervalPartition stick_breaking_sample(double theta, std::mt19937_64& rng, double eps = 1e-12);

/// θ^ℓ Γ(θ) Π Γ(n_i) / Γ(θ + n), evaluated in log space.
double m_theta(const SetPartition& X, double theta);
/// Probability that the partition induced by 2k uniform points is even:
/// Γ(θ) Γ(2k+1) Γ(k+θ/2) / (Γ(2k+θ) Γ(k+1) Γ(θ/2)).
double m_theta_even(std::uint32_t k, double theta);

/// Partition of {0..k-1} induced by k uniform points on a PD(θ) partition.
/// Sticks are generated lazily, so points never land in a truncated remainder.
SetPartition sample_induced_partition(double theta, std::uint32_t k, std::mt19937_64& rng);

struct SeriesValue {
    double value = 0.0;
    double remainder = 0.0;  // bound on the neglected tail
    std::uint32_t terms = 0;
};

/// Φ(h) = E[Π cosh(h Z_i)] = Γ(θ)/Γ(θ/2) Σ_n Γ(n+θ/2) / (n! Γ(2n+θ)) h^{2n}.
SeriesValue phi_series(double h, double theta, double rel_tol = 1e-15, std::uint32_t max_terms = 10000);
/// Coefficient of h^{2k} in Φ.
double phi_coefficient(std::uint32_t k, double theta);
/// Monte Carlo estimate of E[Π cosh(h Z_i)] over PD(θ) samples.
Estimate phi_monte_carlo(double h, double theta, std::uint64_t samples, std::mt19937_64& rng);

/// One step of the embedded discrete split-merge chain: an ordered pair of
/// parts is drawn with probability z_i z_j; distinct parts merge with
/// probability (c/√α)/K, a part drawn twice splits uniformly with
/// probability (c√α/2)/K, K = max of the two. Returns true if the partition changed.
bool split_merge_step(IntervalPartition& p, double alpha, double c_rate, std::mt19937_64& rng);

/// Σ z_i^2: probability that two uniform points share a part.
double same_block_probability(const IntervalPartition& p);

}  // namespace wiresoup

#endif
