#ifndef WIRESOUP_OBSERVABLES_HPP
#define WIRESOUP_OBSERVABLES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wiresoup/graph.hpp"
#include "wiresoup/stats.hpp"
#include "wiresoup/wires.hpp"

namespace wiresoup {

/// Loop lengths (links per loop) in decreasing order, closed and open loops alike.
struct LoopPartitionSample {
    std::vector<std::uint32_t> lengths;
    std::uint64_t V = 0;
    std::vector<double> normalized;
};

LoopPartitionSample loop_partition(const WireConfig& w);
LoopPartitionSample loop_partition(const LoopDecomposition& loops);

/// Set partition of {0..k-1}: blocks sorted internally and by first element.
struct SetPartition {
    std::vector<std::vector<std::uint32_t>> blocks;

    std::uint32_t ground_size() const;
    bool is_even() const;
    std::vector<std::uint32_t> block_sizes() const;
    std::string to_string() const;
    /// Sort into canonical form; throws std::invalid_argument unless the blocks cover 0..k-1 disjointly.
    void canonicalize();
    bool operator==(const SetPartition&) const = default;
};

/// All set partitions of {0..n-1} (Bell number many), canonical order.
std::vector<SetPartition> enumerate_set_partitions(std::uint32_t n);
std::vector<SetPartition> enumerate_even_partitions(std::uint32_t n);

/// A marked pair: site x and 1-based pair label q (canonical labels of WireConfig::pairs_at).
struct MarkedPoint {
    VertexId x = 0;
    std::uint32_t q = 1;
};

/// Blocks = indices whose marked pairs lie on the same loop; nullopt if some n_{x_j} < q_j.
std::optional<SetPartition> induced_partition(const WireConfig& w, const LoopDecomposition& loops,
                                              const std::vector<MarkedPoint>& points);
std::optional<SetPartition> induced_partition(const WireConfig& w, const std::vector<MarkedPoint>& points);

/// Σ_q 1{induced partition even} Π_j 1/(n_{x_j} + shift); shift = 1 is the α = 2 form, N/2 in general.
double even_corr_estimator(const WireConfig& w, const LoopDecomposition& loops, const std::vector<VertexId>& sites,
                           double shift = 1.0);
double even_corr_estimator(const WireConfig& w, const std::vector<VertexId>& sites, double shift = 1.0);

struct PartitionEstimate {
    double weighted = 0.0;     // Σ_q 1{induced = X} Π 1/(n + shift)
    std::uint64_t count = 0;   // number of q with induced = X
    std::uint64_t defined = 0;  // number of q with every point defined
};
PartitionEstimate per_partition_estimator(const WireConfig& w, const LoopDecomposition& loops,
                                          const std::vector<VertexId>& sites, const SetPartition& X,
                                          double shift = 1.0);

/// ñ_x / (n_x + shift), 0 when n_x = 0. Throws std::invalid_argument on graphs without boundary.
double tilde_m_value(const WireConfig& w, const LoopDecomposition& loops, VertexId x, double shift = 1.0);
/// Batch-means mean of per-sample tilde_m values.
Estimate tilde_m_estimator(const std::vector<double>& values, std::uint32_t batches = 32);

/// Length of the longest loop through x, 0 when n_x = 0.
std::uint32_t lmax_at(const WireConfig& w, const LoopDecomposition& loops, VertexId x);

/// Empirical P(ℓ_max ≥ n) with Wilson bands.
class LmaxSurvival {
public:
    void add(std::uint32_t lmax);
    std::uint64_t samples() const { return samples_; }
    double survival(std::uint32_t n) const;
    Interval band(std::uint32_t n, double z = 1.959963984540054) const;
    std::uint32_t max_seen() const { return histogram_.empty() ? 0 : static_cast<std::uint32_t>(histogram_.size() - 1); }

private:
    std::uint64_t at_least(std::uint32_t n) const;
    std::vector<std::uint64_t> histogram_;
    std::uint64_t samples_ = 0;
};

/// ⌈(2L+1)^{d/2}⌉, the loop length separating "long" loops in diagnostics.
std::uint64_t cutoff_length(std::uint32_t L, std::uint32_t d);

/// Fraction of V carried by loops of length >= cutoff (0 when V = 0).
double long_loop_fraction(const LoopPartitionSample& p, std::uint64_t cutoff);

}  // namespace wiresoup

#endif
