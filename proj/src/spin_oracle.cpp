#include "wiresoup/spin_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "wiresoup/gibbs.hpp"

namespace wiresoup {

std::vector<double> SpinSpec::boundary_vector() const {
    if (field.empty()) return std::vector<double>(N, 1.0);
    if (field.size() != N) throw std::invalid_argument("boundary vector must have N components");
    return field;
}

double sphere_moment(std::uint32_t N, const std::vector<std::uint32_t>& half_exponents) {
    if (N == 0) throw std::invalid_argument("N must be positive");
    if (half_exponents.size() > N) throw std::invalid_argument("more exponents than spin components");
    std::uint32_t n = 0;
    double log_df = 0.0;
    for (std::uint32_t k : half_exponents) {
        n += k;
        log_df += std::lgamma(2.0 * k + 1.0) - k * std::log(2.0) - std::lgamma(k + 1.0);
    }
    return std::exp(std::lgamma(N / 2.0) - n * std::log(2.0) - std::lgamma(n + N / 2.0) + log_df);
}

double sphere_moment_full(std::uint32_t N, const std::vector<std::uint32_t>& exponents) {
    std::vector<std::uint32_t> half;
    for (std::uint32_t k : exponents) {
        if (k % 2 != 0) return 0.0;
        half.push_back(k / 2);
    }
    return sphere_moment(N, half);
}

namespace {

void check_spec(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites, const SpinSettings& s) {
    if (spec.N == 0) throw std::invalid_argument("N must be positive");
    if (spec.J.size() != g.num_edges()) throw std::invalid_argument("coupling vector size does not match edge count");
    for (double j : spec.J)
        if (!(j >= 0.0) || std::isinf(j)) throw std::invalid_argument("couplings must be finite and nonnegative");
    if (g.num_interior() > s.max_vertices) throw std::length_error("graph exceeds the spin oracle guard");
    if (!sites.empty() && spec.N < 2) throw std::invalid_argument("φ^(1)φ^(2) insertions need N >= 2");
    for (VertexId x : sites)
        if (!g.is_interior(x)) throw std::invalid_argument("insertion sites must be interior");
}

// Exact sum over σ ∈ {±1}^V with the normalised two-point measure.
SpinValue ising_sum(const Graph& g, const SpinSpec& spec) {
    const VertexId V = g.num_interior();
    const double h = spec.boundary_vector()[0];
    double total = 0.0;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << V); ++bits) {
        auto sigma = [&](VertexId x) { return (bits >> x) & 1 ? -1.0 : 1.0; };
        double energy = 0.0;
        for (EdgeId e = 0; e < g.num_edges(); ++e) {
            const auto [u, v] = g.edge(e);
            if (g.is_boundary_edge(e))
                energy += std::sqrt(2.0) * spec.J[e] * h * sigma(u);
            else
                energy += 2.0 * spec.J[e] * sigma(u) * sigma(v);
        }
        total += std::exp(energy);
    }
    return {std::ldexp(total, -static_cast<int>(V)), 0.0, "ising-sum"};
}

struct QuadraturePair {
    double Z = 0.0;
    double num = 0.0;
};

QuadraturePair trapezoid(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites, std::uint32_t M) {
    const VertexId V = g.num_interior();
    const auto h = spec.boundary_vector();
    std::vector<double> c(M), s(M);
    for (std::uint32_t k = 0; k < M; ++k) {
        const double t = 2.0 * std::numbers::pi * k / M;
        c[k] = std::cos(t);
        s[k] = std::sin(t);
    }
    // per-site single-body exponent from boundary edges, and insertion factor
    std::vector<std::vector<double>> field(V, std::vector<double>(M, 0.0));
    std::vector<std::vector<double>> insert(V, std::vector<double>(M, 1.0));
    std::vector<std::pair<EdgeId, std::pair<VertexId, VertexId>>> inner;
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
        const auto [u, v] = g.edge(e);
        if (g.is_boundary_edge(e)) {
            for (std::uint32_t k = 0; k < M; ++k) field[u][k] += std::sqrt(2.0) * spec.J[e] * (h[0] * c[k] + h[1] * s[k]);
        } else {
            inner.push_back({e, {u, v}});
        }
    }
    for (VertexId x : sites)
        for (std::uint32_t k = 0; k < M; ++k) insert[x][k] *= c[k] * s[k];

    QuadraturePair out;
    std::vector<std::uint32_t> idx(V, 0);
    for (;;) {
        double energy = 0.0, ins = 1.0;
        for (VertexId x = 0; x < V; ++x) {
            energy += field[x][idx[x]];
            ins *= insert[x][idx[x]];
        }
        for (const auto& [e, uv] : inner) {
            const std::uint32_t d = (idx[uv.first] + M - idx[uv.second]) % M;
            energy += 2.0 * spec.J[e] * c[d];
        }
        const double w = std::exp(energy);
        out.Z += w;
        out.num += w * ins;
        VertexId x = 0;
        for (; x < V; ++x) {
            if (++idx[x] < M) break;
            idx[x] = 0;
        }
        if (x == V) break;
    }
    const double norm = std::pow(static_cast<double>(M), -static_cast<double>(V));
    out.Z *= norm;
    out.num *= norm;
    return out;
}

struct QuadratureResult {
    QuadraturePair value;
    double change_Z = 0.0;
    double change_num = 0.0;
};

QuadratureResult refine_quadrature(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites,
                                   const SpinSettings& settings) {
    if (spec.N != 2) throw std::invalid_argument("quadrature oracle is for N = 2");
    std::uint32_t M = settings.quadrature_start;
    QuadraturePair prev = trapezoid(g, spec, sites, M);
    for (;;) {
        M *= 2;
        if (M > settings.quadrature_max || std::pow(double(M), double(g.num_interior())) > 2e8)
            throw std::runtime_error("quadrature did not converge within the configured resolution");
        QuadraturePair cur = trapezoid(g, spec, sites, M);
        const double dZ = std::abs(cur.Z - prev.Z), dN = std::abs(cur.num - prev.num);
        // the insertion integral is compared on the scale of Z since it can vanish
        if (dZ <= settings.quadrature_tol * cur.Z && dN <= settings.quadrature_tol * cur.Z) return {cur, dZ, dN};
        prev = cur;
    }
}

struct VectorHash {
    std::size_t operator()(const std::vector<std::uint16_t>& v) const {
        std::size_t h = 1469598103934665603ull;
        for (std::uint16_t x : v) h = (h ^ x) * 1099511628211ull;
        return h;
    }
};

// Series expansion of Π_e e^{2J φ_x·φ_y} Π_b e^{√2 J φ_x·h}: per edge the
// colour orders k_i multiply both end sites' monomials; a site is integrated
// against the sphere as soon as its last edge has been expanded.
class SeriesExpansion {
public:
    SeriesExpansion(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites, std::uint32_t K)
        : g_(g), spec_(spec), sites_(sites), K_(K), N_(spec.N) {
        const std::uint32_t max_exp = 2 * K_ * 64 + 2;
        log_df_.assign(max_exp / 2 + 2, 0.0);
        for (std::size_t k = 1; k < log_df_.size(); ++k) log_df_[k] = log_df_[k - 1] + std::log(2.0 * k - 1.0);
        log_gamma_.resize(max_exp / 2 * N_ + 2);
        for (std::size_t n = 0; n < log_gamma_.size(); ++n) log_gamma_[n] = std::lgamma(n + N_ / 2.0);
    }

    double run() {
        const VertexId V = g_.num_interior();
        std::vector<std::int64_t> last(V, -1);
        for (EdgeId e = 0; e < g_.num_edges(); ++e) {
            const auto [u, v] = g_.edge(e);
            last[u] = std::max<std::int64_t>(last[u], e);
            if (g_.is_interior(v)) last[v] = std::max<std::int64_t>(last[v], e);
        }
        std::vector<std::uint16_t> start(static_cast<std::size_t>(N_) * V, 0);
        for (VertexId x : sites_) {
            start[x * N_] += 1;
            start[x * N_ + 1] += 1;
        }
        double prefactor = 1.0;
        for (VertexId x = 0; x < V; ++x)
            if (last[x] < 0) prefactor *= complete(start, x);
        std::unordered_map<std::vector<std::uint16_t>, double, VectorHash> states{{start, prefactor}};
        if (prefactor == 0.0) return 0.0;

        const auto h = spec_.boundary_vector();
        for (EdgeId e = 0; e < g_.num_edges(); ++e) {
            const auto [u, v] = g_.edge(e);
            const bool boundary = g_.is_boundary_edge(e);
            std::vector<double> coef(N_);
            for (std::uint32_t i = 0; i < N_; ++i) coef[i] = boundary ? std::sqrt(2.0) * spec_.J[e] * h[i] : 2.0 * spec_.J[e];
            const auto options = colour_options(coef);
            const bool done_u = last[u] == e, done_v = !boundary && last[v] == e;

            std::unordered_map<std::vector<std::uint16_t>, double, VectorHash> next;
            next.reserve(states.size() * 4);
            for (const auto& [exps, w] : states) {
                // parity the option needs so that completed sites end up even
                std::uint32_t need = 0;
                bool constrained = false, clash = false;
                auto parity_of = [&](VertexId x) {
                    std::uint32_t p = 0;
                    for (std::uint32_t i = 0; i < N_; ++i) p |= (exps[x * N_ + i] & 1u) << i;
                    return p;
                };
                if (done_u) {
                    need = parity_of(u);
                    constrained = true;
                }
                if (done_v) {
                    const std::uint32_t pv = parity_of(v);
                    if (constrained && pv != need) clash = true;
                    need = pv;
                    constrained = true;
                }
                if (clash) continue;
                for (std::uint32_t parity = 0; parity < options.size(); ++parity) {
                    if (constrained && parity != need) continue;
                    for (const auto& [k, cw] : options[parity]) {
                        std::vector<std::uint16_t> nx = exps;
                        for (std::uint32_t i = 0; i < N_; ++i) {
                            nx[u * N_ + i] += k[i];
                            if (!boundary) nx[v * N_ + i] += k[i];
                        }
                        double weight = w * cw;
                        if (done_u) weight *= complete(nx, u);
                        if (done_v) weight *= complete(nx, v);
                        if (weight != 0.0) next[std::move(nx)] += weight;
                    }
                }
            }
            states = std::move(next);
        }
        double total = 0.0;
        for (const auto& [exps, w] : states) total += w;
        return total;
    }

private:
    using Option = std::pair<std::vector<std::uint16_t>, double>;

    // Options grouped by parity pattern of k.
    std::vector<std::vector<Option>> colour_options(const std::vector<double>& coef) const {
        std::vector<std::vector<Option>> out(std::size_t{1} << N_);
        std::vector<std::uint16_t> k(N_, 0);
        std::function<void(std::uint32_t, std::uint32_t, double)> rec = [&](std::uint32_t i, std::uint32_t left,
                                                                            double w) {
            if (i == N_) {
                std::uint32_t p = 0;
                for (std::uint32_t j = 0; j < N_; ++j) p |= (k[j] & 1u) << j;
                out[p].emplace_back(k, w);
                return;
            }
            double term = 1.0;
            for (std::uint32_t t = 0; t <= left; ++t) {
                if (t > 0) term *= coef[i] / t;
                if (term == 0.0) break;
                k[i] = static_cast<std::uint16_t>(t);
                rec(i + 1, left - t, w * term);
            }
            k[i] = 0;
        };
        rec(0, K_, 1.0);
        return out;
    }

    double complete(std::vector<std::uint16_t>& exps, VertexId x) const {
        std::uint32_t n = 0;
        double log_m = 0.0;
        for (std::uint32_t i = 0; i < N_; ++i) {
            const std::uint16_t k = exps[x * N_ + i];
            if (k % 2 != 0) return 0.0;
            n += k / 2;
            log_m += log_df_.at(k / 2);
            exps[x * N_ + i] = 0;
        }
        return std::exp(log_gamma_[0] - n * std::log(2.0) - log_gamma_.at(n) + log_m);
    }

    const Graph& g_;
    const SpinSpec& spec_;
    const std::vector<VertexId>& sites_;
    std::uint32_t K_;
    std::uint32_t N_;
    std::vector<double> log_df_;
    std::vector<double> log_gamma_;
};

}  // namespace

SpinValue spin_series(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites,
                      const SpinSettings& settings) {
    check_spec(g, spec, sites, settings);
    for (VertexId x = 0; x < g.num_interior(); ++x)
        if (g.degree(x) > 64) throw std::invalid_argument("vertex degree too large for the series oracle");
    // Absolute series with |φ·φ'| <= 1 and |φ·h| <= |h| dominates every term.
    const auto h = spec.boundary_vector();
    double hnorm = 0.0;
    for (double c : h) hnorm += c * c;
    hnorm = std::sqrt(hnorm);
    std::vector<double> B;
    double floor_log = 0.0;
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
        B.push_back(g.is_boundary_edge(e) ? std::sqrt(2.0) * spec.J[e] * hnorm : 2.0 * spec.J[e]);
        floor_log -= B.back();
    }
    auto remainder = [&](std::uint32_t K) {
        double full = 1.0, partial = 1.0;
        for (double b : B) {
            double term = 1.0, sum = 1.0;
            for (std::uint32_t t = 1; t <= K; ++t) {
                term *= b / t;
                sum += term;
            }
            full *= std::exp(b);
            partial *= sum;
        }
        return std::max(0.0, full - partial);
    };
    std::uint32_t K = 1;
    // Z >= e^{-Σ B}, so this keeps the relative error below the tolerance.
    while (remainder(K) > settings.series_tol * std::exp(floor_log)) {
        if (++K > settings.series_max_order) throw std::runtime_error("series did not converge at the configured order");
    }
    SeriesExpansion s(g, spec, sites, K);
    return {s.run(), remainder(K), "series(K=" + std::to_string(K) + ")"};
}

SpinValue spin_quadrature(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites,
                          const SpinSettings& settings) {
    check_spec(g, spec, sites, settings);
    auto r = refine_quadrature(g, spec, sites, settings);
    if (sites.empty()) return {r.value.Z, r.change_Z, "trapezoid"};
    return {r.value.num, r.change_num, "trapezoid"};
}

SpinValue spin_integral(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites,
                        const SpinSettings& settings) {
    check_spec(g, spec, sites, settings);
    if (spec.N == 1) return ising_sum(g, spec);
    if (spec.N == 2) return spin_quadrature(g, spec, sites, settings);
    return spin_series(g, spec, sites, settings);
}

SpinValue spin_partition_exact(const Graph& g, const SpinSpec& spec, const SpinSettings& settings) {
    return spin_integral(g, spec, {}, settings);
}

SpinValue spin_correlation_exact(const Graph& g, const SpinSpec& spec, const std::vector<VertexId>& sites,
                                 const SpinSettings& settings) {
    check_spec(g, spec, sites, settings);
    if (spec.N == 2) {
        auto r = refine_quadrature(g, spec, sites, settings);
        const double value = r.value.num / r.value.Z;
        return {value, (r.change_num + std::abs(value) * r.change_Z) / r.value.Z, "trapezoid"};
    }
    const auto z = spin_series(g, spec, {}, settings);
    const auto num = spin_series(g, spec, sites, settings);
    const double value = num.value / z.value;
    return {value, (num.error + std::abs(value) * z.error) / z.value, num.method};
}

double relative_difference(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-300) return 0.0;
    return std::abs(a - b) / scale;
}

namespace {

std::string instance_name(const Graph& g, std::uint32_t N, double J, const std::string& extra = {}) {
    std::ostringstream os;
    os << g.describe() << " N=" << N << " J=" << J << extra;
    return os.str();
}

}  // namespace

VerifyReport verify_equivalence_Z(const Graph& g, std::uint32_t N, double J, std::uint32_t m_cap) {
    SpinSpec spec{N, std::vector<double>(g.num_edges(), J), {}};
    const auto lhs = spin_partition_exact(g, spec);
    const auto rhs = partition_exact(g, ModelParams::constant(g, N, J, Potential::gamma_n(N)), m_cap);
    VerifyReport r;
    r.instance = instance_name(g, N, J);
    r.lhs = lhs.value;
    r.rhs = rhs.value;
    r.lhs_error = lhs.error;
    r.rhs_error = rhs.truncation_bound;
    r.rel_diff = relative_difference(r.lhs, r.rhs);
    return r;
}

VerifyReport verify_equivalence_corr(const Graph& g, std::uint32_t N, double J, const std::vector<VertexId>& sites,
                                     std::uint32_t m_cap) {
    SpinSpec spec{N, std::vector<double>(g.num_edges(), J), {}};
    const auto lhs = spin_correlation_exact(g, spec, sites);
    const auto rhs = wire_even_correlation(g, N, spec.J, sites, m_cap);
    std::ostringstream extra;
    extra << " sites=";
    for (VertexId x : sites) extra << x << ",";
    VerifyReport r;
    r.instance = instance_name(g, N, J, extra.str());
    r.lhs = lhs.value;
    r.rhs = rhs.value;
    r.lhs_error = lhs.error;
    r.rhs_error = rhs.truncation_bound;
    r.rel_diff = relative_difference(r.lhs, r.rhs);
    return r;
}

std::pair<VerifyReport, VerifyReport> verify_boundary_identity(const Graph& g, std::uint32_t N, double J, VertexId x,
                                                               std::uint32_t m_cap) {
    if (!g.has_boundary()) throw std::invalid_argument("boundary identity needs a graph with boundary");
    SpinSpec spec{N, std::vector<double>(g.num_edges(), J), {}};
    VerifyReport a;
    a.instance = instance_name(g, N, J, " partition");
    const auto za = spin_partition_exact(g, spec);
    const auto zw = partition_exact(g, ModelParams::constant(g, N, J, Potential::gamma_n(N)), m_cap);
    a.lhs = za.value;
    a.rhs = zw.value;
    a.lhs_error = za.error;
    a.rhs_error = zw.truncation_bound;
    a.rel_diff = relative_difference(a.lhs, a.rhs);

    VerifyReport b;
    b.instance = instance_name(g, N, J, " site=" + std::to_string(x));
    const auto cs = spin_correlation_exact(g, spec, {x});
    const auto cw = wire_open_loop_density(g, N, spec.J, x, m_cap);
    b.lhs = cs.value;
    b.rhs = cw.value;
    b.lhs_error = cs.error;
    b.rhs_error = cw.truncation_bound;
    b.rel_diff = relative_difference(b.lhs, b.rhs);
    return {a, b};
}

namespace {

struct XYChain {
    const Graph& g;
    std::vector<std::vector<std::pair<VertexId, double>>> neighbours;
    std::vector<double> boundary_coupling;  // Σ 2J over boundary edges at x
    double psi;
    std::vector<double> theta;
    std::mt19937_64 rng;
    double step = 1.0;

    XYChain(const Graph& graph, double J, double boundary_angle, std::uint64_t seed)
        : g(graph), neighbours(graph.num_interior()), boundary_coupling(graph.num_interior(), 0.0),
          psi(boundary_angle), theta(graph.num_interior(), boundary_angle), rng(seed) {
        for (EdgeId e = 0; e < g.num_edges(); ++e) {
            const auto [u, v] = g.edge(e);
            if (g.is_boundary_edge(e)) {
                boundary_coupling[u] += 2.0 * J;
            } else {
                neighbours[u].emplace_back(v, 2.0 * J);
                neighbours[v].emplace_back(u, 2.0 * J);
            }
        }
    }

    // One sweep; returns accepted moves.
    std::uint32_t sweep() {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uint32_t accepted = 0;
        for (VertexId x = 0; x < theta.size(); ++x) {
            double hx = boundary_coupling[x] * std::cos(psi), hy = boundary_coupling[x] * std::sin(psi);
            for (const auto& [y, c] : neighbours[x]) {
                hx += c * std::cos(theta[y]);
                hy += c * std::sin(theta[y]);
            }
            const double proposal = theta[x] + step * (2.0 * unit(rng) - 1.0);
            const double delta = hx * (std::cos(proposal) - std::cos(theta[x])) + hy * (std::sin(proposal) - std::sin(theta[x]));
            if (delta >= 0.0 || unit(rng) < std::exp(delta)) {
                theta[x] = std::remainder(proposal, 2.0 * std::numbers::pi);
                ++accepted;
            }
        }
        return accepted;
    }
};

template <class F>
Estimate run_xy(const Graph& g, double J, double psi, std::uint64_t seed, const XYSettings& s, F&& measure,
                double& acceptance, double& step) {
    XYChain chain(g, J, psi, seed);
    const double n = std::max<double>(1.0, g.num_interior());
    for (std::uint64_t t = 0; t < s.burn_in; ++t) {
        const double rate = chain.sweep() / n;
        chain.step = std::clamp(chain.step * std::exp(rate - s.target_acceptance), 1e-3, std::numbers::pi);
    }
    std::vector<double> values;
    values.reserve(s.sweeps);
    std::uint64_t accepted = 0;
    for (std::uint64_t t = 0; t < s.sweeps; ++t) {
        accepted += chain.sweep();
        values.push_back(measure(chain.theta));
    }
    acceptance = s.sweeps ? accepted / (n * s.sweeps) : 0.0;
    step = chain.step;
    return batch_means(values, s.batches);
}

}  // namespace

XYResult xy_metropolis(const Graph& g, double J, VertexId x, const XYSettings& settings) {
    if (!g.is_interior(x)) throw std::invalid_argument("measurement site must be interior");
    if (!(J >= 0.0)) throw std::invalid_argument("J must be nonnegative");
    XYResult r;
    double acc1 = 0, acc2 = 0, step1 = 0, step2 = 0;
    std::seed_seq seq{settings.seed, std::uint64_t{0x5851f42d4c957f2dull}};
    std::vector<std::uint64_t> seeds(2);
    seq.generate(seeds.begin(), seeds.end());
    r.phi12 = run_xy(g, J, std::numbers::pi / 4, seeds[0], settings,
                     [x](const std::vector<double>& t) { return std::cos(t[x]) * std::sin(t[x]); }, acc1, step1);
    r.half_cos2 = run_xy(g, J, 0.0, seeds[1], settings,
                         [x](const std::vector<double>& t) { return 0.5 * std::cos(2.0 * t[x]); }, acc2, step2);
    r.acceptance = 0.5 * (acc1 + acc2);
    r.step = 0.5 * (step1 + step2);
    return r;
}

}  // namespace wiresoup
