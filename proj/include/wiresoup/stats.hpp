#ifndef WIRESOUP_STATS_HPP
#define WIRESOUP_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace wiresoup {

struct Estimate {
    double mean = 0.0;
    double error = 0.0;
    std::uint64_t samples = 0;
};

/// Batch-means error for a correlated series: the series is cut into
/// `batches` equal consecutive blocks (the tail that does not fill a block
/// is dropped from the error estimate but kept in the mean).
inline Estimate batch_means(const std::vector<double>& xs, std::uint32_t batches = 32) {
    Estimate est;
    est.samples = xs.size();
    if (xs.empty()) return est;
    double sum = 0.0;
    for (double x : xs) sum += x;
    est.mean = sum / xs.size();
    if (batches < 2) throw std::invalid_argument("batch means needs at least two batches");
    const std::size_t size = xs.size() / batches;
    if (size == 0) return est;
    std::vector<double> means(batches, 0.0);
    for (std::uint32_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < size; ++i) means[b] += xs[b * size + i];
        means[b] /= size;
    }
    double mbar = 0.0;
    for (double m : means) mbar += m;
    mbar /= batches;
    double var = 0.0;
    for (double m : means) var += (m - mbar) * (m - mbar);
    var /= batches - 1;
    est.error = std::sqrt(var / batches);
    return est;
}

/// Plain mean and standard error for independent draws.
inline Estimate iid_mean(const std::vector<double>& xs) {
    Estimate est;
    est.samples = xs.size();
    if (xs.empty()) return est;
    double sum = 0.0, sq = 0.0;
    for (double x : xs) {
        sum += x;
        sq += x * x;
    }
    const double n = static_cast<double>(xs.size());
    est.mean = sum / n;
    if (xs.size() > 1) est.error = std::sqrt(std::max(0.0, (sq - n * est.mean * est.mean) / (n - 1)) / n);
    return est;
}

struct Interval {
    double lower = 0.0;
    double upper = 1.0;
};

/// Wilson score interval for k successes in n trials.
inline Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054) {
    if (n == 0) return {0.0, 1.0};
    const double p = static_cast<double>(k) / n, z2 = z * z, nn = static_cast<double>(n);
    const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
    const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
    // the endpoints are exact at k = 0 and k = n
    return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

}  // namespace wiresoup

#endif
