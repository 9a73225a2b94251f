#include "wiresoup/gibbs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace wiresoup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_double_factorial_odd(std::uint32_t n) {
    // log (2n-1)!!
    return std::lgamma(2.0 * n + 1.0) - n * std::log(2.0) - std::lgamma(n + 1.0);
}

}  // namespace

Potential Potential::gamma_n(double N) {
    if (!(N > 0.0)) throw std::invalid_argument("GammaN potential needs N > 0");
    Potential p;
    p.kind_ = Kind::GammaN;
    p.N_ = N;
    return p;
}

Potential Potential::factorial() {
    Potential p;
    p.kind_ = Kind::Factorial;
    return p;
}

Potential Potential::table(std::vector<double> values) {
    if (values.empty() || values[0] != 0.0) throw std::invalid_argument("table potential must start with U(0) = 0");
    for (double v : values)
        if (std::isnan(v) || v == -kInf) throw std::invalid_argument("table potential values must be finite or +inf");
    Potential p;
    p.kind_ = Kind::Table;
    p.table_ = std::move(values);
    return p;
}

double Potential::operator()(std::uint32_t n) const {
    switch (kind_) {
        case Kind::GammaN:
            return std::lgamma(n + N_ / 2) - std::lgamma(N_ / 2);
        case Kind::Factorial:
            return std::lgamma(n + 1.0);
        case Kind::Table:
            return n < table_.size() ? table_[n] : kInf;
    }
    return kInf;
}

double Potential::tail_ratio_sup(std::uint32_t n0) const {
    switch (kind_) {
        case Kind::GammaN:
            // (2n+1)/(n+N/2) is monotone in n with limit 2.
            return std::max((2.0 * n0 + 1.0) / (n0 + N_ / 2), 2.0);
        case Kind::Factorial:
            return 2.0;
        case Kind::Table: {
            double sup = 0.0;
            for (std::uint32_t n = n0; n + 1 < table_.size(); ++n) {
                if (table_[n] == kInf || table_[n + 1] == kInf) continue;
                sup = std::max(sup, (2.0 * n + 1.0) * std::exp(table_[n] - table_[n + 1]));
            }
            return sup;
        }
    }
    return kInf;
}

std::string Potential::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::GammaN:
            os << "GammaN(" << N_ << ")";
            break;
        case Kind::Factorial:
            os << "Factorial";
            break;
        case Kind::Table:
            os << "TableU[" << table_.size() << "]";
            break;
    }
    return os.str();
}

ModelParams ModelParams::constant(const Graph& g, double alpha, double J, Potential potential) {
    ModelParams p;
    p.alpha = alpha;
    p.J.assign(g.num_edges(), J);
    p.potential = std::move(potential);
    p.validate(g);
    return p;
}

void ModelParams::validate(const Graph& g) const {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (J.size() != g.num_edges()) throw std::invalid_argument("coupling vector size does not match edge count");
    for (double j : J)
        if (!(j >= 0.0) || std::isinf(j)) throw std::invalid_argument("couplings must be finite and nonnegative");
}

double certify_C(const Potential& U, std::uint32_t n_max) {
    const std::uint32_t n_end = std::max<std::uint32_t>(n_max, static_cast<std::uint32_t>(U.values().size()));
    // C >= 1 keeps the bound valid on graphs with boundary, where Σ n_x < Σ m_e.
    double C = 1.0;
    for (std::uint32_t n = 1; n <= n_end; ++n) {
        const double u = U(n);
        if (u == kInf) continue;
        C = std::max(C, std::exp((log_double_factorial_odd(n) - u) / n));
    }
    const double tail = U.tail_ratio_sup(n_end);
    if (!std::isfinite(tail)) throw std::invalid_argument("potential admits no finite C certificate");
    return std::max(C, tail);
}

bool check_certificate(const Potential& U, double C, std::uint32_t n_max) {
    if (!(C > 0.0)) return false;
    const std::uint32_t n_end = std::max<std::uint32_t>(n_max, static_cast<std::uint32_t>(U.values().size()));
    for (std::uint32_t n = 1; n <= n_end; ++n) {
        const double u = U(n);
        if (u == kInf) continue;
        if (log_double_factorial_odd(n) - u > n * std::log(C) + 1e-12) return false;
    }
    return U.tail_ratio_sup(n_end) <= C;
}

BoundParams BoundParams::certified(const ModelParams& params, double eta) {
    BoundParams b;
    b.C = certify_C(params.potential);
    b.alpha_bar = std::max(std::sqrt(params.alpha), 1.0);
    b.eta = eta;
    return b;
}

double log_link_weight(const Graph& g, const LinkConfig& links, const ModelParams& params) {
    // extended accumulator: many terms of large magnitude nearly cancel
    long double total = 0.0L;
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
        const std::uint32_t m = links[e];
        if (m == 0) continue;
        if (params.J[e] == 0.0) return kForbidden;
        total += m * std::log(static_cast<long double>(params.J[e])) - std::lgamma(m + 1.0L);
    }
    for (VertexId x = 0; x < g.num_interior(); ++x) {
        const double u = params.potential(local_occupancy(g, links, x));
        if (u == kInf) return kForbidden;
        total -= u;
    }
    return static_cast<double>(total);
}

double log_weight(const WireConfig& w, const ModelParams& params, std::uint32_t lambda) {
    const double base = log_link_weight(w.graph(), w.links(), params);
    if (base == kForbidden) return kForbidden;
    return base + lambda * std::log(params.alpha);
}

double log_weight(const WireConfig& w, const ModelParams& params) {
    return log_weight(w, params, trace_loops(w).lambda);
}

namespace {

// Strand and endpoint-type keys. Ports use 24 bits; kPortB stands for the
// whole boundary, whose vertices are never contracted.
constexpr std::uint32_t kPortB = 0xFFFFFFu;

std::uint64_t strand_key(std::uint32_t a, std::uint32_t b, std::uint32_t mask) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t{a} << 40) | (std::uint64_t{b} << 16) | mask;
}
std::uint32_t strand_a(std::uint64_t k) { return static_cast<std::uint32_t>(k >> 40); }
std::uint32_t strand_b(std::uint64_t k) { return static_cast<std::uint32_t>((k >> 16) & kPortB); }
std::uint32_t key_mask(std::uint64_t k) { return static_cast<std::uint32_t>(k & 0xFFFFu); }

std::uint64_t ext_key(std::uint32_t t, std::uint32_t mask) { return (std::uint64_t{t} << 16) | mask; }
std::uint32_t ext_port(std::uint64_t k) { return static_cast<std::uint32_t>(k >> 16); }

// Sorted multiset: (key, count) with count > 0.
using Multiset = std::vector<std::pair<std::uint64_t, std::uint32_t>>;

void ms_add(Multiset& s, std::uint64_t key, std::uint32_t count) {
    if (count == 0) return;
    auto it = std::lower_bound(s.begin(), s.end(), key, [](const auto& p, std::uint64_t k) { return p.first < k; });
    if (it != s.end() && it->first == key)
        it->second += count;
    else
        s.insert(it, {key, count});
}

void ms_remove(Multiset& s, std::uint64_t key, std::uint32_t count = 1) {
    auto it = std::lower_bound(s.begin(), s.end(), key, [](const auto& p, std::uint64_t k) { return p.first < k; });
    if (it == s.end() || it->first != key || it->second < count) throw std::logic_error("multiset underflow");
    it->second -= count;
    if (it->second == 0) s.erase(it);
}

std::uint32_t ms_total(const Multiset& s) {
    std::uint32_t t = 0;
    for (const auto& [k, c] : s) t += c;
    return t;
}

double factorial(std::uint32_t n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(171, 1.0);
        for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
        return t;
    }();
    if (n >= table.size()) throw std::overflow_error("factorial table exceeded");
    return table[n];
}

using Outcomes = std::map<Multiset, double>;  // new strands -> weight

class Contractor {
public:
    Contractor(const Graph& g, const StrandSum& spec) : g_(g), spec_(spec) {}

    double run() {
        std::map<Multiset, double> states{{Multiset{}, 1.0}};
        for (VertexId s = 0; s < g_.num_interior(); ++s) {
            std::map<Multiset, double> next;
            const auto groups = forward_groups(s);
            for (const auto& [state, weight] : states) process(s, state, weight, groups, next);
            states = std::move(next);
            memo_.clear();
        }
        double total = 0.0;
        for (const auto& [state, weight] : states) {
            if (!state.empty()) throw std::logic_error("strand contraction left open strands");
            total += weight;
        }
        return total;
    }

private:
    struct Group {
        std::uint32_t port;
        std::vector<std::pair<std::uint32_t, double>> options;
    };

    // Edges first seen at s, grouped by far port; boundary edges are convolved.
    std::vector<Group> forward_groups(VertexId s) const {
        std::vector<Group> groups;
        std::map<std::uint32_t, double> boundary{{0, 1.0}};
        bool has_boundary = false;
        for (EdgeId e : g_.incident_edges(s)) {
            const auto [u, v] = g_.edge(e);
            const VertexId t = u == s ? v : u;
            if (g_.is_interior(t)) {
                if (t < s) continue;
                groups.push_back({t, spec_.edge_options[e]});
            } else {
                has_boundary = true;
                std::map<std::uint32_t, double> conv;
                for (const auto& [m1, w1] : boundary)
                    for (const auto& [m2, w2] : spec_.edge_options[e]) conv[m1 + m2] += w1 * w2;
                boundary = std::move(conv);
            }
        }
        if (has_boundary) groups.push_back({kPortB, {boundary.begin(), boundary.end()}});
        return groups;
    }

    void process(VertexId s, const Multiset& state, double weight, const std::vector<Group>& groups,
                 std::map<Multiset, double>& next) {
        Multiset rest, internal, external;
        for (const auto& [k, c] : state) {
            const std::uint32_t a = strand_a(k), b = strand_b(k), mask = key_mask(k);
            if (a == s && b == s)
                ms_add(internal, mask, c);
            else if (a == s)
                ms_add(external, ext_key(b, mask), c);
            else if (b == s)
                ms_add(external, ext_key(a, mask), c);
            else
                rest.push_back({k, c});
        }
        std::vector<std::size_t> choice(groups.size(), 0);
        for (;;) {
            Multiset ext = external;
            double w = weight;
            for (std::size_t i = 0; i < groups.size(); ++i) {
                const auto& [m, c] = groups[i].options[choice[i]];
                w *= c;
                ms_add(ext, ext_key(groups[i].port, 0), m);
            }
            if (w != 0.0) contract(s, rest, internal, ext, w, next);
            std::size_t i = 0;
            for (; i < groups.size(); ++i) {
                if (++choice[i] < groups[i].options.size()) break;
                choice[i] = 0;
            }
            if (i == groups.size()) break;
        }
    }

    void contract(VertexId s, const Multiset& rest, const Multiset& internal, const Multiset& external, double w,
                  std::map<Multiset, double>& next) {
        const std::uint32_t ends = 2 * ms_total(internal) + ms_total(external);
        if (ends % 2 != 0) return;
        const double sw = spec_.site_weight(s, ends / 2);
        if (sw == 0.0) return;
        w *= sw;

        const auto marked = std::find(spec_.marked.begin(), spec_.marked.end(), s);
        if (marked == spec_.marked.end()) {
            emit(rest, {}, resolve(internal, external), w, next);
            return;
        }
        const std::uint32_t bit = 1u << (marked - spec_.marked.begin());
        for_each_marked_pair(internal, external, bit, [&](const Multiset& in, const Multiset& ex, const Multiset& extra,
                                                          double mw) { emit(rest, extra, resolve(in, ex), w * mw, next); });
    }

    void emit(const Multiset& rest, const Multiset& extra, const Outcomes& outcomes, double w,
              std::map<Multiset, double>& next) {
        for (const auto& [strands, ow] : outcomes) {
            Multiset state = rest;
            double total = w * ow;
            for (const Multiset* src : {&extra, &strands})
                for (const auto& [k, c] : *src) {
                    if (strand_a(k) == kPortB && strand_b(k) == kPortB)
                        total *= std::pow(spec_.loop_weight(key_mask(k), true), c);
                    else
                        ms_add(state, k, c);
                }
            if (total != 0.0) next[std::move(state)] += total;
        }
    }

    // Choice of the marked pair at a marked site; the pair carries `bit`.
    template <class F>
    void for_each_marked_pair(const Multiset& internal, const Multiset& external, std::uint32_t bit, F&& f) {
        for (std::size_t i = 0; i < internal.size(); ++i) {
            const auto [mu, ku] = internal[i];
            const std::uint32_t m1 = static_cast<std::uint32_t>(mu);
            {
                // both ends of one internal strand: the loop closes here
                const double lw = spec_.loop_weight(m1 | bit, false);
                if (lw != 0.0) {
                    Multiset in = internal;
                    ms_remove(in, mu);
                    f(in, external, Multiset{}, ku * lw);
                }
            }
            for (std::size_t j = i; j < internal.size(); ++j) {
                const auto [nu, kv] = internal[j];
                const double ways = i == j ? 4.0 * ku * (ku - 1) / 2.0 : 4.0 * ku * kv;
                if (ways == 0.0) continue;
                Multiset in = internal;
                ms_remove(in, mu);
                ms_remove(in, nu);
                ms_add(in, m1 | static_cast<std::uint32_t>(nu) | bit, 1);
                f(in, external, Multiset{}, ways);
            }
            for (const auto& [ek, c] : external) {
                Multiset in = internal, ex = external;
                ms_remove(in, mu);
                ms_remove(ex, ek);
                ms_add(ex, ext_key(ext_port(ek), key_mask(ek) | m1 | bit), 1);
                f(in, ex, Multiset{}, 2.0 * ku * c);
            }
        }
        for (std::size_t i = 0; i < external.size(); ++i)
            for (std::size_t j = i; j < external.size(); ++j) {
                const auto [ek, c1] = external[i];
                const auto [fk, c2] = external[j];
                const double ways = i == j ? c1 * (c1 - 1) / 2.0 : 1.0 * c1 * c2;
                if (ways == 0.0) continue;
                Multiset ex = external;
                ms_remove(ex, ek);
                ms_remove(ex, fk);
                Multiset extra;
                ms_add(extra, strand_key(ext_port(ek), ext_port(fk), key_mask(ek) | key_mask(fk) | bit), 1);
                f(internal, ex, extra, ways);
            }
    }

    // Sum over pairings of the remaining endpoints at the current site.
    const Outcomes& resolve(const Multiset& internal, const Multiset& external) {
        auto key = std::make_pair(internal, external);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        Outcomes out;
        if (internal.empty()) {
            out = match_externals(external);
        } else if (internal.size() == 1 && internal[0].first == 0) {
            // Unmarked strands: each either closes, merges with another
            // internal strand, or absorbs one external endpoint.
            const double a0 = spec_.loop_weight(0, false);
            const std::uint32_t k = internal[0].second, r = ms_total(external);
            double G = 1.0;
            for (std::uint32_t j = 0; j < k; ++j) G *= a0 + 2.0 * j + r;
            out = match_externals(external);
            for (auto& [s, w] : out) w *= G;
        } else {
            const auto [muk, ku] = internal.back();
            const std::uint32_t mu = static_cast<std::uint32_t>(muk);
            Multiset in = internal;
            ms_remove(in, muk);
            auto accumulate = [&](const Outcomes& sub, double factor) {
                if (factor == 0.0) return;
                for (const auto& [s, w] : sub) out[s] += w * factor;
            };
            accumulate(resolve(in, external), spec_.loop_weight(mu, false));
            for (const auto& [nu, c] : Multiset(in)) {
                Multiset in2 = in;
                ms_remove(in2, nu);
                ms_add(in2, mu | static_cast<std::uint32_t>(nu), 1);
                accumulate(resolve(in2, external), 2.0 * c);
            }
            for (const auto& [ek, c] : external) {
                Multiset ex = external;
                ms_remove(ex, ek);
                ms_add(ex, ext_key(ext_port(ek), key_mask(ek) | mu), 1);
                accumulate(resolve(in, ex), 1.0 * c);
            }
        }
        return memo_.emplace(std::move(key), std::move(out)).first->second;
    }

    // Perfect matchings of external endpoints grouped by type: a matching with
    // d_wz pairs between types w and z has multiplicity
    // Π c_w! / (Π_{w<z} d_wz! Π_w d_ww! 2^{d_ww}).
    static Outcomes match_externals(const Multiset& external) {
        Outcomes out;
        const std::size_t T = external.size();
        std::vector<std::uint32_t> remaining(T);
        double base = 1.0;
        for (std::size_t w = 0; w < T; ++w) {
            remaining[w] = external[w].second;
            base *= factorial(remaining[w]);
        }
        Multiset acc;
        std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t w, std::size_t z, double mult) {
            if (w == T) {
                out[acc] += mult;
                return;
            }
            if (z == T) {
                if (remaining[w] % 2 != 0) return;
                const std::uint32_t d = remaining[w] / 2;
                if (d > 0) {
                    const std::uint64_t k = strand_key(ext_port(external[w].first), ext_port(external[w].first),
                                                       key_mask(external[w].first));
                    ms_add(acc, k, d);
                    remaining[w] = 0;
                    rec(w + 1, w + 2, mult / (factorial(d) * std::ldexp(1.0, static_cast<int>(d))));
                    remaining[w] = 2 * d;
                    ms_remove(acc, k, d);
                } else {
                    rec(w + 1, w + 2, mult);
                }
                return;
            }
            const std::uint32_t hi = std::min(remaining[w], remaining[z]);
            const std::uint64_t k = strand_key(ext_port(external[w].first), ext_port(external[z].first),
                                               key_mask(external[w].first) | key_mask(external[z].first));
            for (std::uint32_t d = 0; d <= hi; ++d) {
                remaining[w] -= d;
                remaining[z] -= d;
                if (d > 0) ms_add(acc, k, d);
                rec(w, z + 1, mult / factorial(d));
                if (d > 0) ms_remove(acc, k, d);
                remaining[w] += d;
                remaining[z] += d;
            }
        };
        if (T == 0) {
            out[acc] = 1.0;
            return out;
        }
        rec(0, 1, base);
        return out;
    }

    const Graph& g_;
    const StrandSum& spec_;
    std::map<std::pair<Multiset, Multiset>, Outcomes> memo_;
};

std::vector<std::pair<std::uint32_t, double>> poisson_options(double J, std::uint32_t m_cap) {
    std::vector<std::pair<std::uint32_t, double>> opts{{0, 1.0}};
    if (J == 0.0) return opts;
    double term = 1.0;
    for (std::uint32_t m = 1; m <= m_cap; ++m) {
        term *= J / m;
        opts.emplace_back(m, term);
    }
    return opts;
}

std::function<double(VertexId, std::uint32_t)> gibbs_site_weight(const Potential& U) {
    return [U](VertexId, std::uint32_t n) {
        const double u = U(n);
        return u == kInf ? 0.0 : std::exp(-u);
    };
}

}  // namespace

double strand_sum(const Graph& g, const StrandSum& spec) {
    if (spec.edge_options.size() != g.num_edges()) throw std::invalid_argument("edge options size mismatch");
    if (spec.marked.size() > 16) throw std::invalid_argument("at most 16 marked sites");
    if (g.num_interior() >= kPortB) throw std::invalid_argument("graph too large for strand contraction");
    for (VertexId x : spec.marked)
        if (!g.is_interior(x)) throw std::invalid_argument("marked sites must be interior");
    return Contractor(g, spec).run();
}

double loop_sum(const Graph& g, const LinkConfig& links, double alpha) {
    validate_links(g, links);
    StrandSum spec;
    for (EdgeId e = 0; e < g.num_edges(); ++e) spec.edge_options.push_back({{links[e], 1.0}});
    spec.site_weight = [](VertexId, std::uint32_t) { return 1.0; };
    spec.loop_weight = [alpha](std::uint32_t, bool) { return alpha; };
    return strand_sum(g, spec);
}

double truncation_bound(const std::vector<double>& J, const BoundParams& bound, std::uint32_t m_cap) {
    double full = 1.0, partial = 1.0;
    for (double j : J) {
        const double mu = bound.alpha_bar * bound.C * j;
        double term = 1.0, sum = 1.0;
        for (std::uint32_t m = 1; m <= m_cap; ++m) {
            term *= mu / m;
            sum += term;
        }
        full *= std::exp(mu);
        partial *= sum;
    }
    return std::max(0.0, full - partial);
}

PartitionResult partition_exact(const Graph& g, const ModelParams& params, std::uint32_t m_cap,
                                std::uint32_t max_edges) {
    params.validate(g);
    if (g.num_edges() > max_edges) throw std::length_error("graph exceeds the exact partition function guard");
    StrandSum spec;
    for (EdgeId e = 0; e < g.num_edges(); ++e) spec.edge_options.push_back(poisson_options(params.J[e], m_cap));
    spec.site_weight = gibbs_site_weight(params.potential);
    const double alpha = params.alpha;
    spec.loop_weight = [alpha](std::uint32_t, bool) { return alpha; };
    PartitionResult r;
    r.value = strand_sum(g, spec);
    r.truncation_bound = truncation_bound(params.J, BoundParams::certified(params), m_cap);
    return r;
}

namespace {

template <class F>
void for_each_link_config(const Graph& g, std::uint32_t m_cap, F&& f) {
    LinkConfig links;
    links.m.assign(g.num_edges(), 0);
    for (;;) {
        bool valid = true;
        for (VertexId x = 0; x < g.num_interior() && valid; ++x) {
            std::uint32_t ends = 0;
            for (EdgeId e : g.incident_edges(x)) ends += links.m[e];
            valid = ends % 2 == 0;
        }
        if (valid) f(links);
        std::size_t e = 0;
        for (; e < links.m.size(); ++e) {
            if (++links.m[e] <= m_cap) break;
            links.m[e] = 0;
        }
        if (e == links.m.size()) break;
    }
}

}  // namespace

double partition_by_enumeration(const Graph& g, const ModelParams& params, std::uint32_t m_cap) {
    params.validate(g);
    double total = 0.0;
    for_each_link_config(g, m_cap, [&](const LinkConfig& links) {
        if (log_link_weight(g, links, params) == kForbidden) return;
        for (const WireConfig& w : enumerate_pairings(g, links)) {
            const double lw = log_weight(w, params);
            if (lw != kForbidden) total += std::exp(lw);
        }
    });
    return total;
}

std::vector<std::pair<LinkConfig, double>> link_config_weights(const Graph& g, const ModelParams& params,
                                                               std::uint32_t m_cap, std::size_t limit) {
    params.validate(g);
    if (std::pow(m_cap + 1.0, g.num_edges()) > static_cast<double>(limit))
        throw std::length_error("link configuration space exceeds enumeration limit");
    std::vector<std::pair<LinkConfig, double>> out;
    for_each_link_config(g, m_cap, [&](const LinkConfig& links) {
        const double lw = log_link_weight(g, links, params);
        if (lw == kForbidden) return;
        out.emplace_back(links, std::exp(lw) * loop_sum(g, links, params.alpha));
    });
    return out;
}

namespace {

PartitionResult correlation_ratio(const Graph& g, double N, const std::vector<double>& J, std::uint32_t m_cap,
                                  const std::vector<VertexId>& marked,
                                  std::function<double(std::uint32_t, bool)> marked_loop_weight) {
    const ModelParams params{N, J, Potential::gamma_n(N)};
    params.validate(g);
    StrandSum spec;
    for (EdgeId e = 0; e < g.num_edges(); ++e) spec.edge_options.push_back(poisson_options(J[e], m_cap));
    const Potential U = params.potential;
    spec.site_weight = gibbs_site_weight(U);
    spec.loop_weight = [N](std::uint32_t, bool) { return N; };
    const double Z = strand_sum(g, spec);

    spec.marked = marked;
    spec.site_weight = [U, marked, N](VertexId x, std::uint32_t n) {
        double w = std::exp(-U(n));
        if (std::find(marked.begin(), marked.end(), x) != marked.end()) w /= 2.0 * n + N;
        return w;
    };
    spec.loop_weight = std::move(marked_loop_weight);
    const double num = strand_sum(g, spec);

    PartitionResult r;
    r.value = num / Z;
    // Every numerator term is dominated by the matching partition function term.
    const double tail = truncation_bound(J, BoundParams::certified(params), m_cap);
    r.truncation_bound = tail * (1.0 + std::abs(r.value)) / Z;
    return r;
}

}  // namespace

PartitionResult wire_even_correlation(const Graph& g, double N, const std::vector<double>& J,
                                      const std::vector<VertexId>& sites, std::uint32_t m_cap) {
    if (N < 2.0) throw std::invalid_argument("correlation identity needs N >= 2");
    if (sites.empty() || sites.size() % 2 != 0) throw std::invalid_argument("need an even, nonzero number of sites");
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = i + 1; j < sites.size(); ++j)
            if (sites[i] == sites[j]) throw std::invalid_argument("sites must be distinct");
    // A loop carrying an even number of marks admits 2 colourings instead of N.
    return correlation_ratio(g, N, J, m_cap, sites, [N](std::uint32_t mask, bool) {
        const int marks = std::popcount(mask);
        if (marks == 0) return N;
        return marks % 2 == 0 ? 2.0 : 0.0;
    });
}

PartitionResult wire_open_loop_density(const Graph& g, double N, const std::vector<double>& J, VertexId x,
                                       std::uint32_t m_cap) {
    if (!g.has_boundary()) throw std::invalid_argument("open loop density needs a graph with boundary");
    if (N < 2.0) throw std::invalid_argument("open loop identity needs N >= 2");
    return correlation_ratio(g, N, J, m_cap, {x}, [N](std::uint32_t mask, bool open) {
        if (mask == 0) return N;
        return open ? 2.0 : 0.0;
    });
}

double partition_upper_bound(const Graph& g, const ModelParams& params, const BoundParams& bound) {
    params.validate(g);
    if (!check_certificate(params.potential, bound.C)) throw std::invalid_argument("invalid C certificate");
    if (bound.C < 1.0) throw std::invalid_argument("bound needs C >= 1");
    if (bound.alpha_bar < std::max(std::sqrt(params.alpha), 1.0))
        throw std::invalid_argument("alpha_bar must be at least max(sqrt(alpha), 1)");
    double sum = 0.0;
    for (double j : params.J) sum += j;
    return std::exp(bound.alpha_bar * bound.C * sum);
}

TailBound lmax_tail_bound(std::uint32_t d, double J, std::uint32_t n, const BoundParams& bound) {
    TailBound t;
    t.rho = 2.0 * d * std::sqrt(std::expm1(std::exp(bound.eta) * bound.alpha_bar * bound.C * J));
    if (t.rho >= 1.0) {
        t.divergent = true;
        t.value = kInf;
        return t;
    }
    t.value = std::exp(-bound.eta * n) / (1.0 - t.rho);
    return t;
}

double small_J_threshold(std::uint32_t d) {
    if (d == 0) throw std::invalid_argument("dimension must be positive");
    const double s = 2.0 * d;
    return std::pow(2.0, -1.5) * std::log1p(1.0 / (s * s));
}

}  // namespace wiresoup
