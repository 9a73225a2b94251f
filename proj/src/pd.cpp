#include "wiresoup/pd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace wiresoup {

namespace {

void check_theta(double theta) {
    if (!(theta > 0.0) || std::isinf(theta)) throw std::invalid_argument("theta must be positive and finite");
}

// Beta(1, θ) by inversion.
double beta_one_theta(double theta, std::mt19937_64& rng) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return -std::expm1(std::log1p(-u) / theta);
}

}  // namespace

double IntervalPartition::total() const {
    double s = 0.0;
    for (double p : parts) s += p;
    return s;
}

void IntervalPartition::sort_parts() { std::sort(parts.begin(), parts.end(), std::greater<>()); }

IntervalPartition stick_breaking_sample(double theta, std::mt19937_64& rng, double eps) {
    check_theta(theta);
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
    IntervalPartition p;
    double rest = 1.0;
    while (rest >= eps) {
        const double part = rest * beta_one_theta(theta, rng);
        if (part <= 0.0) continue;
        p.generation.push_back(part);
        rest -= part;
    }
    if (p.generation.empty()) p.generation.push_back(0.0);
    p.generation.back() += rest;
    p.parts = p.generation;
    p.sort_parts();
    return p;
}

double m_theta(const SetPartition& X, double theta) {
    check_theta(theta);
    if (X.blocks.empty()) throw std::invalid_argument("partition has no blocks");
    double log_m = std::lgamma(theta);
    std::uint32_t n = 0;
    for (const auto& b : X.blocks) {
        if (b.empty()) throw std::invalid_argument("set partition has an empty block");
        log_m += std::log(theta) + std::lgamma(double(b.size()));
        n += static_cast<std::uint32_t>(b.size());
    }
    return std::exp(log_m - std::lgamma(theta + n));
}

double m_theta_even(std::uint32_t k, double theta) {
    check_theta(theta);
    if (k == 0) throw std::invalid_argument("k must be positive");
    return std::exp(std::lgamma(theta) + std::lgamma(2.0 * k + 1) + std::lgamma(k + theta / 2) -
                    std::lgamma(2.0 * k + theta) - std::lgamma(k + 1.0) - std::lgamma(theta / 2));
}

SetPartition sample_induced_partition(double theta, std::uint32_t k, std::mt19937_64& rng) {
    check_theta(theta);
    if (k == 0) throw std::invalid_argument("k must be positive");
    std::vector<double> cumulative;
    double rest = 1.0;
    std::map<std::size_t, std::vector<std::uint32_t>> blocks;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint32_t j = 0; j < k; ++j) {
        const double u = unit(rng);
        while (cumulative.empty() || u >= cumulative.back()) {
            const double part = rest * beta_one_theta(theta, rng);
            rest -= part;
            cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + part);
            if (rest <= 0.0) {
                cumulative.back() = 1.0;
                break;
            }
        }
        const auto idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        blocks[idx].push_back(j);
    }
    SetPartition X;
    for (auto& [i, b] : blocks) X.blocks.push_back(std::move(b));
    X.canonicalize();
    return X;
}

SeriesValue phi_series(double h, double theta, double rel_tol, std::uint32_t max_terms) {
    check_theta(theta);
    if (!std::isfinite(h)) throw std::invalid_argument("h must be finite");
    SeriesValue s;
    const double h2 = h * h;
    double term = 1.0;  // n = 0 term is exactly 1
    s.value = 1.0;
    s.terms = 1;
    for (std::uint32_t n = 0;; ++n) {
        // t_{n+1}/t_n = h^2 / (2 (n+1) (2n+θ+1)), decreasing in n
        const double ratio = h2 / (2.0 * (n + 1) * (2.0 * n + theta + 1));
        const double next = term * ratio;
        if (ratio < 1.0 && next <= rel_tol * s.value) {
            const double r2 = h2 / (2.0 * (n + 2) * (2.0 * n + theta + 3));
            s.remainder = next / (1.0 - r2);
            return s;
        }
        if (s.terms >= max_terms || !std::isfinite(next)) throw std::runtime_error("Φ series did not converge");
        term = next;
        s.value += term;
        ++s.terms;
    }
}

double phi_coefficient(std::uint32_t k, double theta) {
    check_theta(theta);
    return std::exp(std::lgamma(theta) - std::lgamma(theta / 2) + std::lgamma(k + theta / 2) - std::lgamma(k + 1.0) -
                    std::lgamma(2.0 * k + theta));
}

Estimate phi_monte_carlo(double h, double theta, std::uint64_t samples, std::mt19937_64& rng) {
    std::vector<double> xs;
    xs.reserve(samples);
    for (std::uint64_t i = 0; i < samples; ++i) {
        const auto p = stick_breaking_sample(theta, rng);
        double log_prod = 0.0;
        for (double z : p.parts) log_prod += std::log(std::cosh(h * z));
        xs.push_back(std::exp(log_prod));
    }
    return iid_mean(xs);
}

bool split_merge_step(IntervalPartition& p, double alpha, double c_rate, std::mt19937_64& rng) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(c_rate > 0.0)) throw std::invalid_argument("c_rate must be positive");
    if (p.parts.empty()) throw std::invalid_argument("empty interval partition");
    const double merge = c_rate / std::sqrt(alpha), split = c_rate * std::sqrt(alpha) / 2.0;
    const double K = std::max(merge, split);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&]() {
        double u = unit(rng) * p.total(), acc = 0.0;
        for (std::size_t i = 0; i < p.parts.size(); ++i) {
            acc += p.parts[i];
            if (u < acc) return i;
        }
        return p.parts.size() - 1;
    };
    const std::size_t i = pick(), j = pick();
    const double u = unit(rng);
    p.generation.clear();
    if (i != j) {
        if (u >= merge / K) return false;
        p.parts[std::min(i, j)] += p.parts[std::max(i, j)];
        p.parts.erase(p.parts.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
    } else {
        if (u >= split / K) return false;
        const double cut = unit(rng), z = p.parts[i];
        p.parts[i] = cut * z;
        p.parts.push_back(z - cut * z);
        if (p.parts[i] <= 0.0 || p.parts.back() <= 0.0) {
            p.parts[i] = z;
            p.parts.pop_back();
            return false;
        }
    }
    p.sort_parts();
    return true;
}

double same_block_probability(const IntervalPartition& p) {
    double s = 0.0;
    for (double z : p.parts) s += z * z;
    return s;
}

}  // namespace wiresoup
