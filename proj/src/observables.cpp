#include "wiresoup/observables.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace wiresoup {

LoopPartitionSample loop_partition(const LoopDecomposition& loops) {
    LoopPartitionSample p;
    for (const auto& l : loops.loops) p.lengths.push_back(static_cast<std::uint32_t>(l.size()));
    for (const auto& l : loops.open_loops) p.lengths.push_back(static_cast<std::uint32_t>(l.size()));
    std::sort(p.lengths.begin(), p.lengths.end(), std::greater<>());
    for (std::uint32_t l : p.lengths) p.V += l;
    for (std::uint32_t l : p.lengths) p.normalized.push_back(static_cast<double>(l) / p.V);
    return p;
}

LoopPartitionSample loop_partition(const WireConfig& w) { return loop_partition(trace_loops(w)); }

std::uint32_t SetPartition::ground_size() const {
    std::uint32_t n = 0;
    for (const auto& b : blocks) n += static_cast<std::uint32_t>(b.size());
    return n;
}

bool SetPartition::is_even() const {
    for (const auto& b : blocks)
        if (b.size() % 2 != 0) return false;
    return true;
}

std::vector<std::uint32_t> SetPartition::block_sizes() const {
    std::vector<std::uint32_t> s;
    for (const auto& b : blocks) s.push_back(static_cast<std::uint32_t>(b.size()));
    return s;
}

std::string SetPartition::to_string() const {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        os << (i ? ",{" : "{");
        for (std::size_t j = 0; j < blocks[i].size(); ++j) os << (j ? "," : "") << blocks[i][j] + 1;
        os << "}";
    }
    os << "}";
    return os.str();
}

void SetPartition::canonicalize() {
    for (auto& b : blocks) {
        if (b.empty()) throw std::invalid_argument("set partition has an empty block");
        std::sort(b.begin(), b.end());
    }
    std::sort(blocks.begin(), blocks.end());
    std::vector<bool> seen(ground_size(), false);
    for (const auto& b : blocks)
        for (std::uint32_t i : b) {
            if (i >= seen.size() || seen[i]) throw std::invalid_argument("blocks must cover 0..k-1 disjointly");
            seen[i] = true;
        }
}

std::vector<SetPartition> enumerate_set_partitions(std::uint32_t n) {
    std::vector<SetPartition> out;
    if (n == 0) {
        out.push_back({});
        return out;
    }
    // restricted growth strings a_0 = 0, a_i <= 1 + max(a_0..a_{i-1})
    std::vector<std::uint32_t> a(n, 0);
    for (;;) {
        SetPartition p;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (a[i] >= p.blocks.size()) p.blocks.resize(a[i] + 1);
            p.blocks[a[i]].push_back(i);
        }
        out.push_back(std::move(p));
        std::int64_t i = n - 1;
        for (; i > 0; --i) {
            const std::uint32_t mx = *std::max_element(a.begin(), a.begin() + i);
            if (a[i] <= mx) {
                ++a[i];
                std::fill(a.begin() + i + 1, a.end(), 0);
                break;
            }
        }
        if (i == 0) break;
    }
    return out;
}

std::vector<SetPartition> enumerate_even_partitions(std::uint32_t n) {
    std::vector<SetPartition> out;
    for (auto& p : enumerate_set_partitions(n))
        if (p.is_even()) out.push_back(std::move(p));
    return out;
}

namespace {

// Loop id of each labeled pair at x, in label order.
std::vector<std::uint32_t> pair_loops(const WireConfig& w, const LoopDecomposition& loops, VertexId x) {
    std::vector<std::uint32_t> out;
    for (const auto& [a, b] : w.pairs_at(x)) out.push_back(loops.loop_of({a.edge, a.copy}));
    return out;
}

SetPartition group(const std::vector<std::uint32_t>& ids) {
    std::map<std::uint32_t, std::vector<std::uint32_t>> by;
    for (std::uint32_t j = 0; j < ids.size(); ++j) by[ids[j]].push_back(j);
    SetPartition p;
    for (auto& [id, b] : by) p.blocks.push_back(std::move(b));
    std::sort(p.blocks.begin(), p.blocks.end());
    return p;
}

void check_sites(const Graph& g, const std::vector<VertexId>& sites) {
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (!g.is_interior(sites[i])) throw std::invalid_argument("marked sites must be interior");
        for (std::size_t j = 0; j < i; ++j)
            if (sites[i] == sites[j]) throw std::invalid_argument("marked sites must be distinct");
    }
}

}  // namespace

std::optional<SetPartition> induced_partition(const WireConfig& w, const LoopDecomposition& loops,
                                              const std::vector<MarkedPoint>& points) {
    std::vector<std::uint32_t> ids;
    for (const auto& p : points) {
        if (!w.graph().is_interior(p.x)) throw std::invalid_argument("marked sites must be interior");
        if (p.q == 0) throw std::invalid_argument("pair labels start at 1");
        if (w.occupancy(p.x) < p.q) return std::nullopt;
        ids.push_back(pair_loops(w, loops, p.x)[p.q - 1]);
    }
    return group(ids);
}

std::optional<SetPartition> induced_partition(const WireConfig& w, const std::vector<MarkedPoint>& points) {
    return induced_partition(w, trace_loops(w), points);
}

double even_corr_estimator(const WireConfig& w, const LoopDecomposition& loops, const std::vector<VertexId>& sites,
                           double shift) {
    check_sites(w.graph(), sites);
    double weight = 1.0;
    // state: loops hit an odd number of times so far
    std::map<std::vector<std::uint32_t>, double> states{{{}, 1.0}};
    for (VertexId x : sites) {
        const auto ids = pair_loops(w, loops, x);
        if (ids.empty()) return 0.0;
        weight /= ids.size() + shift;
        std::map<std::vector<std::uint32_t>, double> next;
        for (const auto& [odd, count] : states)
            for (std::uint32_t id : ids) {
                auto s = odd;
                auto it = std::lower_bound(s.begin(), s.end(), id);
                if (it != s.end() && *it == id)
                    s.erase(it);
                else
                    s.insert(it, id);
                next[std::move(s)] += count;
            }
        states = std::move(next);
    }
    const auto it = states.find({});
    return it == states.end() ? 0.0 : it->second * weight;
}

double even_corr_estimator(const WireConfig& w, const std::vector<VertexId>& sites, double shift) {
    return even_corr_estimator(w, trace_loops(w), sites, shift);
}

PartitionEstimate per_partition_estimator(const WireConfig& w, const LoopDecomposition& loops,
                                          const std::vector<VertexId>& sites, const SetPartition& X, double shift) {
    check_sites(w.graph(), sites);
    if (X.ground_size() != sites.size()) throw std::invalid_argument("partition ground set must match the sites");
    SetPartition target = X;
    target.canonicalize();
    PartitionEstimate out;
    std::vector<std::vector<std::uint32_t>> ids;
    double weight = 1.0, tuples = 1.0;
    for (VertexId x : sites) {
        ids.push_back(pair_loops(w, loops, x));
        if (ids.back().empty()) return out;
        weight /= ids.back().size() + shift;
        tuples *= ids.back().size();
    }
    if (tuples > 1e7) throw std::length_error("too many pair-label tuples to enumerate");
    out.defined = static_cast<std::uint64_t>(tuples);
    std::vector<std::size_t> q(sites.size(), 0);
    std::vector<std::uint32_t> chosen(sites.size());
    for (;;) {
        for (std::size_t j = 0; j < q.size(); ++j) chosen[j] = ids[j][q[j]];
        if (group(chosen) == target) ++out.count;
        std::size_t j = 0;
        for (; j < q.size(); ++j) {
            if (++q[j] < ids[j].size()) break;
            q[j] = 0;
        }
        if (j == q.size()) break;
    }
    out.weighted = out.count * weight;
    return out;
}

double tilde_m_value(const WireConfig& w, const LoopDecomposition& loops, VertexId x, double shift) {
    if (!w.graph().has_boundary()) throw std::invalid_argument("tilde-m estimator needs a graph with boundary");
    const std::uint32_t n = w.occupancy(x);
    if (n == 0) return 0.0;
    return open_loop_occupancy(w, loops, x) / (n + shift);
}

Estimate tilde_m_estimator(const std::vector<double>& values, std::uint32_t batches) {
    return batch_means(values, batches);
}

std::uint32_t lmax_at(const WireConfig& w, const LoopDecomposition& loops, VertexId x) {
    std::size_t best = 0;
    for (EdgeId e : w.graph().incident_edges(x))
        for (std::uint32_t p = 1; p <= w.links_on(e); ++p) best = std::max(best, loops.length(loops.loop_of({e, p})));
    return static_cast<std::uint32_t>(best);
}

void LmaxSurvival::add(std::uint32_t lmax) {
    if (histogram_.size() <= lmax) histogram_.resize(lmax + 1, 0);
    ++histogram_[lmax];
    ++samples_;
}

std::uint64_t LmaxSurvival::at_least(std::uint32_t n) const {
    std::uint64_t k = 0;
    for (std::size_t v = n; v < histogram_.size(); ++v) k += histogram_[v];
    return k;
}

double LmaxSurvival::survival(std::uint32_t n) const {
    return samples_ ? static_cast<double>(at_least(n)) / samples_ : 0.0;
}

Interval LmaxSurvival::band(std::uint32_t n, double z) const { return wilson_interval(at_least(n), samples_, z); }

std::uint64_t cutoff_length(std::uint32_t L, std::uint32_t d) {
    if (L < 1 || d < 1) throw std::invalid_argument("cutoff_length needs L >= 1 and d >= 1");
    const std::uint64_t side = 2ull * L + 1;
    auto power = [](std::uint64_t b, std::uint32_t e) {
        std::uint64_t r = 1;
        while (e--) {
            if (r > UINT64_MAX / b) throw std::overflow_error("cutoff length overflows");
            r *= b;
        }
        return r;
    };
    if (d % 2 == 0) return power(side, d / 2);
    const std::uint64_t s = power(side, d);
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(s)));
    while (r * r > s) --r;
    while ((r + 1) * (r + 1) <= s) ++r;
    return r * r == s ? r : r + 1;
}

double long_loop_fraction(const LoopPartitionSample& p, std::uint64_t cutoff) {
    if (p.V == 0) return 0.0;
    std::uint64_t mass = 0;
    for (std::uint32_t l : p.lengths)
        if (l >= cutoff) mass += l;
    return static_cast<double>(mass) / p.V;
}

}  // namespace wiresoup
