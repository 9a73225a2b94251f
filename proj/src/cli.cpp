#include "wiresoup/cli.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include "CLI11.hpp"
#include "wiresoup/observables.hpp"
#include "wiresoup/pd.hpp"
#include "wiresoup/spin_oracle.hpp"

namespace wiresoup::cli {

using nlohmann::json;

namespace {

constexpr const char* kSchema = R"JSON({
  "$schema": "http://json-schema.org/draft-04/schema#",
  "title": "wiresoup run configuration",
  "type": "object",
  "additionalProperties": false,
  "required": ["task"],
  "properties": {
    "task": {"enum": ["verify-equivalence", "verify-bounds", "sample", "pd-table", "split-merge", "stationarity", "xy-crosscheck"]},
    "graph": {"$ref": "#/definitions/graph"},
    "model": {"$ref": "#/definitions/model"},
    "chain": {"$ref": "#/definitions/chain"},
    "observables": {
      "type": "array",
      "items": {"enum": ["lambda", "sum_m", "loop_partition", "tilde_m", "lmax", "even_corr", "long_loop_fraction"]}
    },
    "output": {"type": "string"},
    "sample": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "site": {"$ref": "#/definitions/site"},
        "sites": {"type": "array", "items": {"$ref": "#/definitions/site"}},
        "survival_max_n": {"type": "integer", "minimum": 1}
      }
    },
    "verify": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "fixtures": {"type": "array", "items": {"$ref": "#/definitions/fixture"}},
        "N": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "J": {"$ref": "#/definitions/couplings"},
        "m_cap": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "correlations": {
          "type": "array",
          "items": {
            "type": "object", "additionalProperties": false, "required": ["fixture", "N", "J", "sites"],
            "properties": {
              "fixture": {"$ref": "#/definitions/fixture"},
              "N": {"type": "integer", "minimum": 2},
              "J": {"$ref": "#/definitions/couplings"},
              "sites": {"type": "array", "items": {"type": "integer", "minimum": 0}}
            }
          }
        },
        "boundary": {
          "type": "array",
          "items": {
            "type": "object", "additionalProperties": false, "required": ["d", "N", "J"],
            "properties": {
              "L": {"type": "integer", "minimum": 0},
              "d": {"type": "integer", "minimum": 1},
              "N": {"type": "integer", "minimum": 2},
              "J": {"$ref": "#/definitions/couplings"},
              "site": {"$ref": "#/definitions/site"}
            }
          }
        }
      }
    },
    "bounds": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "fixtures": {"type": "array", "items": {"$ref": "#/definitions/fixture"}},
        "alpha": {"type": "array", "items": {"type": "number", "minimum": 0, "exclusiveMinimum": true}},
        "J": {"$ref": "#/definitions/couplings"},
        "potential": {"$ref": "#/definitions/potential"},
        "m_cap": {"type": "integer", "minimum": 1},
        "lmax": {
          "type": "object", "additionalProperties": false,
          "properties": {
            "site": {"$ref": "#/definitions/site"},
            "eta": {"type": "number", "minimum": 0},
            "max_n": {"type": "integer", "minimum": 1}
          }
        }
      }
    },
    "pd": {
      "type": "object", "additionalProperties": false, "required": ["seed"],
      "properties": {
        "theta": {"type": "array", "items": {"type": "number", "minimum": 0, "exclusiveMinimum": true}},
        "k": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "phi": {
          "type": "array",
          "items": {
            "type": "object", "additionalProperties": false, "required": ["h", "theta"],
            "properties": {
              "h": {"type": "number"},
              "theta": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
              "samples": {"type": "integer", "minimum": 1}
            }
          }
        }
      }
    },
    "split_merge": {
      "type": "object", "additionalProperties": false, "required": ["seed"],
      "properties": {
        "alpha": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "c_rate": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "samples": {"type": "integer", "minimum": 2},
        "events": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0}
      }
    },
    "stationarity": {
      "type": "object", "additionalProperties": false, "required": ["links", "seed"],
      "properties": {
        "links": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "alpha": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "steps": {"type": "integer", "minimum": 1},
        "C": {"type": "number", "minimum": 0, "exclusiveMinimum": true, "maximum": 1},
        "tv_threshold": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0}
      }
    },
    "xy": {
      "type": "object", "additionalProperties": false, "required": ["J", "seed"],
      "properties": {
        "J": {"$ref": "#/definitions/couplings"},
        "site": {"$ref": "#/definitions/site"},
        "sweeps": {"type": "integer", "minimum": 1},
        "burn_in": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0}
      }
    }
  },
  "definitions": {
    "fixture": {"enum": ["single_edge", "path2", "triangle", "square"]},
    "couplings": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    "site": {"type": ["integer", "array"], "minimum": 0, "items": {"type": "integer"}},
    "edgeList": {
      "type": "array",
      "items": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2}
    },
    "graph": {
      "type": "object", "additionalProperties": false, "required": ["type"],
      "properties": {
        "type": {"enum": ["fixture", "hypercubic", "box", "explicit"]},
        "name": {"$ref": "#/definitions/fixture"},
        "L": {"type": "integer", "minimum": 0},
        "d": {"type": "integer", "minimum": 1},
        "side": {"type": "integer", "minimum": 1},
        "offset": {"type": "integer"},
        "boundary": {"type": "boolean"},
        "vertices": {"type": "integer", "minimum": 0},
        "edges": {"$ref": "#/definitions/edgeList"},
        "boundary_vertices": {"type": "integer", "minimum": 0},
        "boundary_edges": {"$ref": "#/definitions/edgeList"}
      }
    },
    "potential": {
      "type": "object", "additionalProperties": false, "required": ["kind"],
      "properties": {
        "kind": {"enum": ["GammaN", "Factorial", "Table"]},
        "N": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "values": {"type": "array", "items": {"type": ["number", "null"]}}
      }
    },
    "model": {
      "type": "object", "additionalProperties": false, "required": ["alpha", "J"],
      "properties": {
        "alpha": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "J": {"type": ["number", "array"], "minimum": 0, "items": {"type": "number", "minimum": 0}},
        "potential": {"$ref": "#/definitions/potential"}
      }
    },
    "chain": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "sweeps": {"type": "integer", "minimum": 0},
        "burn_in": {"type": "integer", "minimum": 0},
        "thinning": {"type": "integer", "minimum": 1},
        "rewire_const_C": {"type": "number", "minimum": 0, "exclusiveMinimum": true, "maximum": 1},
        "link_move_mix": {"type": "number", "minimum": 0, "maximum": 1},
        "m_cap": {"type": "integer", "minimum": 1}
      }
    }
  }
})JSON";

std::string pointer_string(const rapidjson::Pointer& p) {
    rapidjson::StringBuffer sb;
    p.StringifyUriFragment(sb);
    return sb.GetString();
}

// rapidjson reports an additionalProperties failure at the offending member itself.
std::string unknown_field_message(const rapidjson::Pointer& at) {
    const auto n = at.GetTokenCount();
    if (n == 0) return {};
    const auto* tokens = at.GetTokens();
    std::string parent = "#";
    for (std::size_t i = 0; i + 1 < n; ++i) parent += "/" + std::string(tokens[i].name, tokens[i].length);
    return parent + ": unknown field '" + std::string(tokens[n - 1].name, tokens[n - 1].length) + "'";
}

template <class F>
void parallel_for(unsigned n, unsigned threads, F&& fn) {
    std::atomic<unsigned> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (unsigned i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"stderr", e.error}, {"samples", e.samples}}; }

// Replica estimates combined as an average of independent means.
Estimate combine(const std::vector<Estimate>& parts) {
    Estimate out;
    if (parts.empty()) return out;
    double var = 0.0;
    for (const auto& p : parts) {
        out.mean += p.mean;
        var += p.error * p.error;
        out.samples += p.samples;
    }
    out.mean /= parts.size();
    out.error = std::sqrt(var) / parts.size();
    return out;
}

VertexId resolve_site(const Graph& g, const json& spec) {
    if (spec.is_number_integer()) {
        const auto x = spec.get<VertexId>();
        if (!g.is_interior(x)) throw std::invalid_argument("site " + std::to_string(x) + " is not an interior vertex");
        return x;
    }
    const auto coords = spec.get<std::vector<int>>();
    const auto v = g.vertex_at(coords);
    if (!v || !g.is_interior(*v)) throw std::invalid_argument("site coordinates do not name an interior vertex");
    return *v;
}

double estimator_shift(const ModelParams& p) {
    return p.potential.kind() == Potential::Kind::GammaN ? p.potential.N() / 2.0 : 1.0;
}

std::string verdict(bool pass, const std::string& what) { return std::string(pass ? "PASS " : "FAIL ") + what; }

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

void note(RunResult& r, std::ostream& log, bool pass, const std::string& what) {
    r.verdicts.push_back(verdict(pass, what));
    log << r.verdicts.back() << "\n";
    r.pass = r.pass && pass;
}

json report_json(const VerifyReport& v) {
    return {{"instance", v.instance},
            {"lhs", v.lhs},
            {"rhs", v.rhs},
            {"rel_diff", v.rel_diff},
            {"bounds", {{"spin_error", v.lhs_error}, {"wire_truncation", v.rhs_error}, {"tolerance", v.tolerance}}},
            {"pass", v.pass()}};
}

// verify-equivalence
void task_verify(const RunConfig& c, RunResult& r, std::ostream& log) {
    const json& p = c.params;
    const auto fixtures = p.value("fixtures", std::vector<std::string>{"single_edge", "path2", "triangle", "square"});
    const auto Ns = p.value("N", std::vector<std::uint32_t>{1, 2, 3});
    const auto Js = p.value("J", std::vector<double>{0.1, 0.3});
    const auto m_cap = p.value("m_cap", 16u);
    const double tol = p.value("tolerance", 1e-6);
    r.report = json::array();
    auto record = [&](VerifyReport v, const std::string& kind) {
        v.tolerance = tol;
        r.report.push_back(report_json(v));
        r.report.back()["kind"] = kind;
        note(r, log, v.pass(), kind + " " + v.instance + " rel_diff=" + fmt(v.rel_diff));
    };
    for (const auto& name : fixtures)
        for (auto N : Ns)
            for (double J : Js) record(verify_equivalence_Z(fixture_graph(name), N, J, m_cap), "partition");
    for (const auto& item : p.value("correlations", json::array())) {
        const auto g = fixture_graph(item.at("fixture").get<std::string>());
        for (double J : item.at("J").get<std::vector<double>>())
            record(verify_equivalence_corr(g, item.at("N").get<std::uint32_t>(), J,
                                           item.at("sites").get<std::vector<VertexId>>(), m_cap),
                   "correlation");
    }
    for (const auto& item : p.value("boundary", json::array())) {
        const auto g = build_hypercubic_with_boundary(item.value("L", 0u), item.at("d").get<std::uint32_t>());
        const VertexId x = item.contains("site") ? resolve_site(g, item["site"]) : central_vertex(g);
        for (double J : item.at("J").get<std::vector<double>>()) {
            const auto [z, o] = verify_boundary_identity(g, item.at("N").get<std::uint32_t>(), J, x, m_cap);
            record(z, "boundary-partition");
            record(o, "boundary-open-loops");
        }
    }
    r.summary["checks"] = r.report.size();
}

// Runs replicas of the joint chain; `sink(replica, sample)` is called from worker threads,
// one replica per thread at a time.
template <class Sink>
void run_replicas(const Graph& g, const ModelParams& model, const ChainSettings& base, const RunOptions& o, Sink&& sink) {
    parallel_for(o.replicas, o.threads, [&](unsigned rep) {
        ChainSettings s = base;
        s.seed = base.seed + rep;
        run_chain(g, model, s, [&](const ChainSample& x) { sink(rep, x); });
    });
}

// verify-bounds
void task_bounds(const RunConfig& c, const RunOptions& o, RunResult& r, std::ostream& log) {
    const json& p = c.params;
    r.report = json::object();
    json rows = json::array();
    const auto fixtures = p.value("fixtures", std::vector<std::string>{"single_edge", "path2", "triangle", "square"});
    const auto alphas = p.value("alpha", std::vector<double>{1.0, 2.0, 3.0});
    const auto Js = p.value("J", std::vector<double>{0.05, 0.1, 0.3});
    const auto m_cap = p.value("m_cap", 16u);
    for (const auto& name : fixtures) {
        const auto g = fixture_graph(name);
        for (double alpha : alphas)
            for (double J : Js) {
                json pot = p.value("potential", json{{"kind", "Factorial"}});
                const auto params = make_model(g, {{"alpha", alpha}, {"J", J}, {"potential", pot}});
                const auto exact = partition_exact(g, params, m_cap);
                const auto bound = BoundParams::certified(params);
                const double upper = partition_upper_bound(g, params, bound);
                const bool ok = exact.value <= upper;
                rows.push_back({{"instance", name},
                                {"alpha", alpha},
                                {"J", J},
                                {"lhs", exact.value},
                                {"rhs", upper},
                                {"rel_diff", relative_difference(exact.value, upper)},
                                {"bounds", {{"truncation", exact.truncation_bound}, {"C", bound.C}, {"alpha_bar", bound.alpha_bar}}},
                                {"pass", ok}});
                note(r, log, ok, "Z<=bound " + name + " alpha=" + fmt(alpha) + " J=" + fmt(J) + " Z=" + fmt(exact.value) +
                                     " bound=" + fmt(upper));
            }
    }
    r.report["partition_bounds"] = rows;
    if (!p.contains("lmax")) return;

    const json& lm = p["lmax"];
    const auto g = make_graph(c.graph);
    const auto model = make_model(g, c.model);
    const auto settings = make_chain(c.chain);
    const VertexId x = lm.contains("site") ? resolve_site(g, lm["site"]) : central_vertex(g);
    const double eta = lm.value("eta", 1.0);
    const auto max_n = lm.value("max_n", 40u);
    std::vector<LmaxSurvival> per(o.replicas);
    run_replicas(g, model, settings, o, [&](unsigned rep, const ChainSample& s) {
        per[rep].add(lmax_at(*s.w, trace_loops(*s.w), x));
    });
    LmaxSurvival all;
    for (const auto& s : per)
        for (std::uint32_t v = 0; v <= s.max_seen(); ++v) {
            const auto k = static_cast<std::uint64_t>(std::llround(s.samples() * (s.survival(v) - s.survival(v + 1))));
            for (std::uint64_t i = 0; i < k; ++i) all.add(v);
        }
    const auto bp = BoundParams::certified(model, eta);
    const double J = model.J.empty() ? 0.0 : *std::max_element(model.J.begin(), model.J.end());
    json surv = json::array();
    bool ok = true;
    for (std::uint32_t n = 1; n <= max_n; ++n) {
        const auto tb = lmax_tail_bound(std::max(1u, g.dimension()), J, n, bp);
        const auto band = all.band(n);
        const bool row_ok = !tb.divergent && all.survival(n) <= tb.value && band.lower <= tb.value;
        ok = ok && row_ok;
        surv.push_back({{"n", n},
                        {"survival", all.survival(n)},
                        {"wilson_lower", band.lower},
                        {"wilson_upper", band.upper},
                        {"bound", tb.divergent ? json(nullptr) : json(tb.value)},
                        {"pass", row_ok}});
    }
    r.report["lmax_survival"] = {{"site", x}, {"samples", all.samples()}, {"rho", lmax_tail_bound(std::max(1u, g.dimension()), J, 1, bp).rho}, {"rows", surv}};
    note(r, log, ok, "lmax survival below tail bound on " + g.describe() + " (" + std::to_string(all.samples()) + " samples)");
}

// sample
void task_sample(const RunConfig& c, const RunOptions& o, RunResult& r, std::ostream& log) {
    const auto g = make_graph(c.graph);
    const auto model = make_model(g, c.model);
    const auto settings = make_chain(c.chain);
    const json sp = c.params.is_null() ? json::object() : c.params;
    std::vector<std::string> obs = c.observables;
    if (obs.empty()) obs = {"lambda", "sum_m"};
    auto wants = [&](const char* name) { return std::find(obs.begin(), obs.end(), name) != obs.end(); };
    const VertexId site = sp.contains("site") ? resolve_site(g, sp["site"]) : (g.num_interior() ? central_vertex(g) : 0);
    std::vector<VertexId> sites;
    if (sp.contains("sites"))
        for (const auto& s : sp["sites"]) sites.push_back(resolve_site(g, s));
    else if (g.num_interior() >= 2)
        sites = spread_sites(g, 2);
    const double shift = estimator_shift(model);
    if (wants("tilde_m") && !g.has_boundary()) throw std::invalid_argument("tilde_m needs a graph with boundary");
    std::uint64_t cutoff = 0;
    if (wants("long_loop_fraction")) {
        if (!c.graph.contains("L") || !g.is_lattice()) throw std::invalid_argument("long_loop_fraction needs a hypercubic graph");
        cutoff = cutoff_length(std::max(1u, c.graph["L"].get<std::uint32_t>()), g.dimension());
    }

    struct ReplicaOut {
        std::vector<std::string> lines;
        std::map<std::string, std::vector<double>> series;
        LmaxSurvival lmax;
    };
    std::vector<ReplicaOut> out(o.replicas);
    run_replicas(g, model, settings, o, [&](unsigned rep, const ChainSample& s) {
        auto& ro = out[rep];
        const auto loops = trace_loops(*s.w);
        json line{{"replica", rep}, {"sweep", s.sweep}, {"lambda", s.lambda}, {"sum_m", s.sum_m}};
        ro.series["lambda"].push_back(s.lambda);
        ro.series["sum_m"].push_back(static_cast<double>(s.sum_m));
        if (wants("loop_partition")) line["loop_partition"] = loop_partition(loops).lengths;
        if (wants("tilde_m")) {
            const double v = tilde_m_value(*s.w, loops, site, shift);
            line["tilde_m"] = v;
            ro.series["tilde_m"].push_back(v);
        }
        if (wants("lmax")) {
            const auto v = lmax_at(*s.w, loops, site);
            line["lmax"] = v;
            ro.lmax.add(v);
        }
        if (wants("even_corr")) {
            const double v = even_corr_estimator(*s.w, loops, sites, shift);
            line["even_corr"] = v;
            ro.series["even_corr"].push_back(v);
        }
        if (wants("long_loop_fraction")) {
            const double v = long_loop_fraction(loop_partition(loops), cutoff);
            line["long_loop_fraction"] = v;
            ro.series["long_loop_fraction"].push_back(v);
        }
        ro.lines.push_back(line.dump());
    });

    std::ofstream jsonl(o.out / "samples.jsonl");
    std::uint64_t count = 0;
    for (const auto& ro : out)
        for (const auto& l : ro.lines) {
            jsonl << l << "\n";
            ++count;
        }
    json estimates = json::object();
    for (const auto& [name, _] : out.front().series) {
        std::vector<Estimate> parts;
        for (const auto& ro : out) parts.push_back(batch_means(ro.series.at(name)));
        estimates[name] = estimate_json(combine(parts));
    }
    if (wants("lmax")) {
        json rows = json::array();
        std::uint64_t total = 0;
        std::uint32_t max_seen = 0;
        for (const auto& ro : out) {
            total += ro.lmax.samples();
            max_seen = std::max(max_seen, ro.lmax.max_seen());
        }
        const auto max_n = sp.value("survival_max_n", std::max<std::uint32_t>(1, max_seen));
        for (std::uint32_t n = 1; n <= max_n; ++n) {
            std::uint64_t k = 0;
            for (const auto& ro : out) k += static_cast<std::uint64_t>(std::llround(ro.lmax.survival(n) * ro.lmax.samples()));
            const auto band = wilson_interval(k, total);
            rows.push_back({{"n", n}, {"survival", total ? double(k) / total : 0.0}, {"wilson_lower", band.lower}, {"wilson_upper", band.upper}});
        }
        r.report["lmax_survival"] = rows;
    }
    r.report["estimates"] = estimates;
    r.summary["samples"] = count;
    r.summary["graph"] = g.describe();
    r.summary["estimates"] = estimates;
    note(r, log, true, "sampled " + std::to_string(count) + " configurations on " + g.describe());
}

// pd-table
void task_pd(const RunConfig& c, RunResult& r, std::ostream& log) {
    const json& p = c.params;
    const auto thetas = p.value("theta", std::vector<double>{1.0, 2.0});
    const auto ks = p.value("k", std::vector<std::uint32_t>{1, 2, 3});
    const auto n = p.value("samples", std::uint64_t{100000});
    std::mt19937_64 rng(p.at("seed").get<std::uint64_t>());
    json rows = json::array();
    auto row = [&](std::uint32_t k, double theta, const std::string& kind, double closed, const Estimate& mc) {
        const bool ok = std::abs(mc.mean - closed) <= 3 * mc.error + 1e-12;
        rows.push_back({{"k", k}, {"theta", theta}, {"kind", kind}, {"closed_form", closed}, {"mc_estimate", mc.mean},
                        {"stderr", mc.error}, {"samples", mc.samples}, {"pass", ok}});
        note(r, log, ok, kind + " k=" + std::to_string(k) + " theta=" + fmt(theta) + " closed=" + fmt(closed) +
                             " mc=" + fmt(mc.mean) + "±" + fmt(mc.error));
    };
    for (double theta : thetas)
        for (auto k : ks) {
            std::vector<double> same, even;
            for (std::uint64_t i = 0; i < n; ++i) same.push_back(sample_induced_partition(theta, k, rng).blocks.size() == 1);
            for (std::uint64_t i = 0; i < n; ++i) even.push_back(sample_induced_partition(theta, 2 * k, rng).is_even());
            SetPartition one;
            one.blocks.emplace_back();
            for (std::uint32_t i = 0; i < k; ++i) one.blocks[0].push_back(i);
            row(k, theta, "same_block", m_theta(one, theta), iid_mean(same));
            row(k, theta, "even_partition", m_theta_even(k, theta), iid_mean(even));
            double brute = 0.0;
            for (const auto& X : enumerate_even_partitions(2 * k)) brute += m_theta(X, theta);
            const double diff = std::abs(brute - m_theta_even(k, theta));
            rows.push_back({{"k", k}, {"theta", theta}, {"kind", "even_identity"}, {"closed_form", m_theta_even(k, theta)},
                            {"brute_force", brute}, {"abs_diff", diff}, {"pass", diff <= 1e-12}});
            note(r, log, diff <= 1e-12, "even identity k=" + std::to_string(k) + " theta=" + fmt(theta) + " diff=" + fmt(diff));
        }
    json phi = json::array();
    for (const auto& item : p.value("phi", json::array())) {
        const double h = item.at("h"), theta = item.at("theta");
        const auto series = phi_series(h, theta);
        const auto mc = phi_monte_carlo(h, theta, item.value("samples", n), rng);
        const bool ok = std::abs(mc.mean - series.value) <= 3 * mc.error;
        phi.push_back({{"h", h}, {"theta", theta}, {"series", series.value}, {"remainder", series.remainder},
                       {"mc_estimate", mc.mean}, {"stderr", mc.error}, {"pass", ok}});
        note(r, log, ok, "phi h=" + fmt(h) + " theta=" + fmt(theta) + " series=" + fmt(series.value) + " mc=" +
                             fmt(mc.mean) + "±" + fmt(mc.error));
    }
    r.report = {{"table", rows}, {"phi", phi}};
}

// split-merge
void task_split_merge(const RunConfig& c, RunResult& r, std::ostream& log) {
    const json& p = c.params;
    const double alpha = p.value("alpha", 2.0), c_rate = p.value("c_rate", 1.0);
    const auto n = p.value("samples", std::uint64_t{10000});
    const auto events = p.value("events", std::uint64_t{1000});
    std::mt19937_64 rng(p.at("seed").get<std::uint64_t>());
    std::vector<double> before, after;
    std::uint64_t changed = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        auto part = stick_breaking_sample(alpha / 2, rng);
        before.push_back(same_block_probability(part));
        for (std::uint64_t e = 0; e < events; ++e) changed += split_merge_step(part, alpha, c_rate, rng);
        after.push_back(same_block_probability(part));
    }
    const auto b = iid_mean(before), a = iid_mean(after);
    const double sigma = std::sqrt(b.error * b.error + a.error * a.error);
    const bool ok = std::abs(a.mean - b.mean) <= 3 * sigma;
    r.report = {{"theta", alpha / 2},
                {"closed_form", 1.0 / (1.0 + alpha / 2)},
                {"before", estimate_json(b)},
                {"after", estimate_json(a)},
                {"events_per_sample", events},
                {"accepted_events", changed},
                {"pass", ok}};
    note(r, log, ok, "split-merge same-block before=" + fmt(b.mean) + " after=" + fmt(a.mean) + " sigma=" + fmt(sigma));
}

// stationarity
void task_stationarity(const RunConfig& c, RunResult& r, std::ostream& log) {
    const json& p = c.params;
    const auto g = make_graph(c.graph);
    LinkConfig links{p.at("links").get<std::vector<std::uint32_t>>()};
    std::mt19937_64 rng(p.at("seed").get<std::uint64_t>());
    const auto rep = stationarity_check_fixed_m(g, links, p.value("alpha", 2.0), p.value("steps", std::uint64_t{1000000}),
                                                rng, p.value("C", 0.5));
    const double threshold = p.value("tv_threshold", 0.01);
    const bool ok = rep.tv < threshold;
    r.report = {{"graph", g.describe()}, {"states", rep.states}, {"steps", rep.steps}, {"tv", rep.tv},
                {"max_abs_z", rep.max_abs_z}, {"exact", rep.exact}, {"empirical", rep.empirical}, {"z", rep.z}, {"pass", ok}};
    note(r, log, ok, "stationarity " + g.describe() + " tv=" + fmt(rep.tv) + " states=" + std::to_string(rep.states));
}

// xy-crosscheck
void task_xy(const RunConfig& c, const RunOptions& o, RunResult& r, std::ostream& log) {
    const json& p = c.params;
    const auto g = make_graph(c.graph);
    if (!g.has_boundary()) throw std::invalid_argument("xy-crosscheck needs a graph with boundary");
    const auto settings = make_chain(c.chain);
    const VertexId x = p.contains("site") ? resolve_site(g, p["site"]) : central_vertex(g);
    json rows = json::array();
    for (double J : p.at("J").get<std::vector<double>>()) {
        const auto model = ModelParams::constant(g, 2.0, J, Potential::gamma_n(2.0));
        std::vector<std::vector<double>> series(o.replicas);
        run_replicas(g, model, settings, o, [&](unsigned rep, const ChainSample& s) {
            series[rep].push_back(0.5 * tilde_m_value(*s.w, trace_loops(*s.w), x, 1.0));
        });
        std::vector<Estimate> parts;
        for (const auto& sr : series) parts.push_back(batch_means(sr));
        const auto wire = combine(parts);
        XYSettings xs;
        xs.seed = p.at("seed").get<std::uint64_t>();
        xs.sweeps = p.value("sweeps", xs.sweeps);
        xs.burn_in = p.value("burn_in", xs.burn_in);
        const auto xy = xy_metropolis(g, J, x, xs);
        const double s1 = std::sqrt(wire.error * wire.error + xy.phi12.error * xy.phi12.error);
        const double s2 = std::sqrt(wire.error * wire.error + xy.half_cos2.error * xy.half_cos2.error);
        const bool ok = std::abs(wire.mean - xy.phi12.mean) <= 3 * s1 && std::abs(wire.mean - xy.half_cos2.mean) <= 3 * s2;
        rows.push_back({{"J", J}, {"site", x}, {"wire", estimate_json(wire)}, {"xy_phi12", estimate_json(xy.phi12)},
                        {"xy_half_cos2", estimate_json(xy.half_cos2)}, {"xy_acceptance", xy.acceptance}, {"pass", ok}});
        note(r, log, ok, "xy J=" + fmt(J) + " wire=" + fmt(wire.mean) + "±" + fmt(wire.error) + " xy=" + fmt(xy.phi12.mean) +
                             "±" + fmt(xy.phi12.error));
    }
    r.report = rows;
}

void require(std::vector<std::string>& errors, const json& raw, const std::string& task, const char* field) {
    if (!raw.contains(field)) errors.push_back("task '" + task + "' requires field '" + std::string(field) + "'");
}

void require_seed(std::vector<std::string>& errors, const json& raw, const std::string& task) {
    if (raw.contains("chain") && !raw["chain"].contains("seed"))
        errors.push_back("task '" + task + "' requires field 'chain.seed'");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(errors.empty() ? "invalid configuration" : errors.front()), errors_(std::move(errors)) {}

std::string schema_dump() { return json::parse(kSchema).dump(2); }

std::vector<std::string> schema_errors(const std::string& text) {
    rapidjson::Document sd;
    sd.Parse(kSchema);
    rapidjson::SchemaDocument schema(sd);
    rapidjson::Document doc;
    if (doc.Parse(text.c_str()).HasParseError())
        return {"parse error at offset " + std::to_string(doc.GetErrorOffset()) + ": " +
                rapidjson::GetParseError_En(doc.GetParseError())};
    rapidjson::SchemaValidator validator(schema);
    if (doc.Accept(validator)) return {};
    const std::string where = pointer_string(validator.GetInvalidDocumentPointer());
    const std::string keyword = validator.GetInvalidSchemaKeyword();
    std::vector<std::string> errors;
    if (keyword == "additionalProperties") {
        auto msg = unknown_field_message(validator.GetInvalidDocumentPointer());
        if (!msg.empty()) errors.push_back(std::move(msg));
    }
    if (errors.empty()) errors.push_back(where + ": violates '" + keyword + "' (schema " +
                                         pointer_string(validator.GetInvalidSchemaPointer()) + ")");
    return errors;
}

RunConfig RunConfig::parse(const std::string& text) {
    auto errors = schema_errors(text);
    if (!errors.empty()) throw ConfigError(errors);
    RunConfig c;
    c.raw = json::parse(text);
    c.task = c.raw.at("task").get<std::string>();
    c.graph = c.raw.value("graph", json());
    c.model = c.raw.value("model", json());
    c.chain = c.raw.value("chain", json());
    c.observables = c.raw.value("observables", std::vector<std::string>{});
    c.output = c.raw.value("output", std::string{});
    static const std::map<std::string, std::string> section{
        {"verify-equivalence", "verify"}, {"verify-bounds", "bounds"}, {"sample", "sample"}, {"pd-table", "pd"},
        {"split-merge", "split_merge"},   {"stationarity", "stationarity"}, {"xy-crosscheck", "xy"}};
    const std::string& sec = section.at(c.task);
    c.params = c.raw.value(sec, json());
    if (c.task == "sample") {
        for (const char* f : {"graph", "model", "chain"}) require(errors, c.raw, c.task, f);
        require_seed(errors, c.raw, c.task);
    } else if (c.task == "verify-bounds") {
        if (c.params.contains("lmax")) {
            for (const char* f : {"graph", "model", "chain"}) require(errors, c.raw, c.task, f);
            require_seed(errors, c.raw, c.task);
        }
    } else if (c.task == "stationarity") {
        require(errors, c.raw, c.task, "graph");
        require(errors, c.raw, c.task, "stationarity");
    } else if (c.task == "xy-crosscheck") {
        for (const char* f : {"graph", "chain", "xy"}) require(errors, c.raw, c.task, f);
        require_seed(errors, c.raw, c.task);
    } else if (c.task != "verify-equivalence") {
        require(errors, c.raw, c.task, sec.c_str());
    }
    if (c.params.is_null() && c.task != "sample") c.params = json::object();
    if (!errors.empty()) throw ConfigError(errors);
    return c;
}

std::string config_hash(const json& config) {
    const std::string text = config.dump();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("hashing failed");
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

Graph make_graph(const json& spec) {
    if (spec.is_null()) throw std::invalid_argument("graph spec missing");
    const std::string type = spec.at("type");
    const bool boundary = spec.value("boundary", false);
    if (type == "fixture") return fixture_graph(spec.at("name"));
    if (type == "hypercubic") {
        const auto L = spec.at("L").get<std::uint32_t>(), d = spec.at("d").get<std::uint32_t>();
        return boundary ? build_hypercubic_with_boundary(L, d) : build_hypercubic(L, d);
    }
    if (type == "box") return build_box(spec.at("side"), spec.at("d"), spec.value("offset", 0), boundary);
    return Graph::from_edges(spec.at("vertices"), spec.value("edges", std::vector<std::pair<VertexId, VertexId>>{}),
                             spec.value("boundary_vertices", 0u),
                             spec.value("boundary_edges", std::vector<std::pair<VertexId, VertexId>>{}));
}

ModelParams make_model(const Graph& g, const json& spec) {
    if (spec.is_null()) throw std::invalid_argument("model spec missing");
    Potential pot = Potential::factorial();
    if (spec.contains("potential")) {
        const auto& ps = spec["potential"];
        const std::string kind = ps.at("kind");
        if (kind == "GammaN") {
            if (!ps.contains("N")) throw std::invalid_argument("GammaN potential needs N");
            pot = Potential::gamma_n(ps["N"].get<double>());
        } else if (kind == "Table") {
            std::vector<double> values;
            for (const auto& v : ps.at("values")) values.push_back(v.is_null() ? INFINITY : v.get<double>());
            pot = Potential::table(values);
        }
    }
    ModelParams m;
    m.alpha = spec.at("alpha");
    if (spec["J"].is_array()) {
        m.J = spec["J"].get<std::vector<double>>();
    } else {
        m.J.assign(g.num_edges(), spec["J"].get<double>());
    }
    m.potential = pot;
    m.validate(g);
    return m;
}

ChainSettings make_chain(const json& spec) {
    ChainSettings s;
    if (spec.is_null()) return s;
    s.seed = spec.value("seed", s.seed);
    s.sweeps = spec.value("sweeps", s.sweeps);
    s.burn_in = spec.value("burn_in", s.burn_in);
    s.thinning = spec.value("thinning", s.thinning);
    s.rewire_const_C = spec.value("rewire_const_C", s.rewire_const_C);
    s.link_move_mix = spec.value("link_move_mix", s.link_move_mix);
    s.m_cap = spec.value("m_cap", s.m_cap);
    return s;
}

RunResult run(const RunConfig& config, const RunOptions& options, std::ostream& log) {
    if (options.replicas == 0 || options.threads == 0) throw std::invalid_argument("replicas and threads must be positive");
    std::filesystem::create_directories(options.out);
    RunResult r;
    if (config.task == "verify-equivalence")
        task_verify(config, r, log);
    else if (config.task == "verify-bounds")
        task_bounds(config, options, r, log);
    else if (config.task == "sample")
        task_sample(config, options, r, log);
    else if (config.task == "pd-table")
        task_pd(config, r, log);
    else if (config.task == "split-merge")
        task_split_merge(config, r, log);
    else if (config.task == "stationarity")
        task_stationarity(config, r, log);
    else if (config.task == "xy-crosscheck")
        task_xy(config, options, r, log);
    else
        throw std::invalid_argument("unknown task " + config.task);

    r.summary["task"] = config.task;
    r.summary["version"] = kVersion;
    r.summary["config_hash"] = config_hash(config.raw);
    r.summary["replicas"] = options.replicas;
    r.summary["threads"] = options.threads;
    r.summary["pass"] = r.pass;
    r.summary["verdicts"] = r.verdicts;
    std::ofstream(options.out / "summary.json") << r.summary.dump(2) << "\n";
    std::ofstream(options.out / "report.json") << r.report.dump(2) << "\n";
    return r;
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Random wire loop-soup simulator and verification suite"};
    std::string config_path, out;
    unsigned replicas = 1, threads = 1;
    bool schema = false;
    app.add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--out", out, "Output directory (defaults to the config's output field, then .)");
    app.add_option("--replicas", replicas, "Independent chains, seeds base + replica index")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--schema", schema, "Print the configuration schema and exit");
    app.set_version_flag("--version", kVersion);
    CLI11_PARSE(app, argc, argv);

    if (schema) {
        std::cout << schema_dump() << "\n";
        return 0;
    }
    if (config_path.empty()) {
        std::cerr << "--config is required\n";
        return 2;
    }
    std::ifstream in(config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    RunConfig config;
    try {
        config = RunConfig::parse(buffer.str());
    } catch (const ConfigError& e) {
        std::cerr << "invalid configuration:\n";
        for (const auto& msg : e.errors()) std::cerr << "  " << msg << "\n";
        return 2;
    }
    RunOptions options;
    options.out = !out.empty() ? out : (!config.output.empty() ? config.output : ".");
    options.replicas = replicas;
    options.threads = threads;
    try {
        const auto result = run(config, options, std::cout);
        std::cout << (result.pass ? "ALL PASS" : "SOME CHECKS FAILED") << " (" << result.verdicts.size() << " checks)\n";
        return result.pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace wiresoup::cli
