#ifndef WIRESOUP_MCMC_HPP
#define WIRESOUP_MCMC_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wiresoup/gibbs.hpp"
#include "wiresoup/graph.hpp"
#include "wiresoup/wires.hpp"

namespace wiresoup {

struct ChainSettings {
    std::uint64_t seed = 1;
    std::uint64_t sweeps = 1000;
    std::uint64_t burn_in = 100;
    std::uint64_t thinning = 1;
    double rewire_const_C = 0.5;
    double link_move_mix = 0.5;
    std::uint32_t m_cap = 64;
    std::uint64_t lambda_check_interval = 0;  // compare against trace_loops every k steps; 0 = never

    /// Throws std::invalid_argument for probabilities outside [0,1], C outside
    /// (0,1], thinning 0, or C·α^{±1/2} > 1 (the rewire acceptance would be capped).
    void validate(const ModelParams& params) const;
};

/// Parity-preserving cycle: ±1 link on every edge. Corners are the interior
/// vertices where consecutive edges meet; edges[i] and edges[j] each get one
/// new endpoint at vertex v.
struct Cycle {
    struct Corner {
        VertexId v;
        std::uint32_t i;
        std::uint32_t j;
    };
    std::vector<EdgeId> edges;
    std::vector<Corner> corners;
};

/// Plaquettes on lattice boxes, fundamental cycles otherwise, plus one path
/// between each boundary edge and a reference boundary edge (closed through
/// the boundary).
std::vector<Cycle> move_cycles(const Graph& g);

enum class MoveKind { Rewire, EdgeAdd, EdgeRemove, CycleAdd, CycleRemove };

std::string to_string(MoveKind kind);

struct Proposal {
    MoveKind kind = MoveKind::Rewire;
    VertexId site = 0;          // rewire
    std::uint32_t first = 0;    // rewire: endpoint rank at site
    std::uint32_t second = 0;   // rewire: endpoint rank at site
    std::uint32_t target = 0;   // edge id or cycle index
    std::vector<std::uint32_t> choices;  // add: per corner, 0 pairs the new endpoints, r+1 splices old endpoint rank r
};

struct MoveRecord {
    Proposal forward;
    Proposal inverse;
    bool applicable = false;  // false for no-ops and rejected-by-rule proposals (cap, too few links)
    bool accepted = false;
    int delta_lambda = 0;
    double delta_log_pi = 0.0;
    double log_q_forward = 0.0;
    double log_q_reverse = 0.0;
    double log_accept = 0.0;
};

/// Joint Markov chain over (m, π): pairing rewiring at fixed m plus edge-pair
/// and cycle link moves accepted by Metropolis-Hastings.
class Chain {
public:
    Chain(const Graph& g, ModelParams params, ChainSettings settings);

    const WireConfig& state() const { return w_; }
    std::uint32_t lambda() const { return lambda_; }
    std::uint64_t sum_m() const { return w_.total_links(); }
    const ModelParams& params() const { return params_; }
    const ChainSettings& settings() const { return settings_; }
    const std::vector<Cycle>& cycles() const { return cycles_; }

    /// Replace the state (links and pairing); λ is retraced.
    void reset(WireConfig w);

    /// Draw, apply, accept or undo.
    MoveRecord step();
    void sweep();
    std::uint64_t steps_per_sweep() const;

    Proposal draw_proposal();
    /// Apply unconditionally; the record carries the acceptance the chain would use.
    MoveRecord apply(const Proposal& p);

    /// log of the probability of drawing p from the current state.
    double log_proposal(const Proposal& p) const;

    struct Counters {
        std::uint64_t proposed[5] = {};
        std::uint64_t accepted[5] = {};
    };
    const Counters& counters() const { return counters_; }
    std::mt19937_64& rng() { return rng_; }

private:
    MoveRecord apply_rewire(const Proposal& p);
    MoveRecord apply_add(const Proposal& p, const std::vector<EdgeId>& edges, const std::vector<Cycle::Corner>& corners);
    MoveRecord apply_remove(const Proposal& p, const std::vector<EdgeId>& edges, const std::vector<Cycle::Corner>& corners);
    void shape(const Proposal& p, std::vector<EdgeId>& edges, std::vector<Cycle::Corner>& corners) const;
    std::uint32_t count_trajectories(const std::vector<std::uint32_t>& seed_links);
    std::uint32_t rank_of(VertexId v, WireConfig::EndpointId id) const;
    double log_link_factor(EdgeId e, std::uint32_t m) const;
    double potential(VertexId x, std::uint32_t n) const;
    double p_cycle() const { return cycles_.empty() ? 0.0 : 0.5; }

    const Graph* g_;
    ModelParams params_;
    ChainSettings settings_;
    WireConfig w_;
    std::uint32_t lambda_ = 0;
    std::vector<Cycle> cycles_;
    std::mt19937_64 rng_;
    std::vector<std::uint64_t> stamp_;
    std::uint64_t stamp_value_ = 0;
    std::uint64_t step_count_ = 0;
    Counters counters_;
};

struct ChainSample {
    std::uint64_t sweep = 0;  // 1-based post-burn-in sweep index
    std::uint32_t lambda = 0;
    std::uint64_t sum_m = 0;
    const WireConfig* w = nullptr;
};

/// Burn-in, then `sweeps` sweeps with a sample every `thinning` sweeps.
Chain::Counters run_chain(const Graph& g, const ModelParams& params, const ChainSettings& settings,
                          const std::function<void(const ChainSample&)>& hook);

struct StationarityReport {
    std::uint64_t states = 0;
    std::uint64_t steps = 0;
    double tv = 0.0;
    double max_abs_z = 0.0;
    std::vector<double> exact;
    std::vector<double> empirical;
    std::vector<double> z;
};

/// Rewire-only chain at fixed links against the exact law ∝ α^λ over all pairings.
StationarityReport stationarity_check_fixed_m(const Graph& g, const LinkConfig& links, double alpha,
                                              std::uint64_t steps, std::mt19937_64& rng, double C = 0.5);

}  // namespace wiresoup

#endif
