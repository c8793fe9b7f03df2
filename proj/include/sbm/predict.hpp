#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sbm/graph.hpp"
#include "sbm/likelihood.hpp"
#include "sbm/mcmc.hpp"
#include "sbm/partition.hpp"

namespace sbm {

// A set of candidate edge changes: delta > 0 inserts missing edges,
// delta < 0 removes spurious ones. Self-pairs use the doubled diagonal
// convention (delta must be even).
struct EdgePerturbation {
    struct Entry {
        int u, v;
        int64_t delta;
    };
    std::vector<Entry> entries;
};

struct PredictionScore {
    std::vector<double> log_score;  // log-mean likelihood ratio per candidate
    std::vector<double> lambda;     // normalized over the candidate set
    std::vector<double> std_error;  // Monte-Carlo error of lambda (batch means)
    int64_t samples = 0;
};

// ln P_G(A^O + dA | b) - ln P_G(A^O | b) for a fixed flat partition,
// touching only the terms the perturbation affects.
double log_likelihood_ratio(const Graph& g_obs, const Partition& b,
                            const ModelSpec& spec, const EdgePerturbation& pert);

// Hierarchical version: the bottom-level count changes propagate up.
double log_likelihood_ratio(const Graph& g_obs, const HierarchicalPartition& h,
                            const ModelSpec& spec, const EdgePerturbation& pert);

// applies the perturbation (throws if a multiplicity would go negative)
Graph apply_perturbation(const Graph& g, const EdgePerturbation& pert);

struct PredictConfig {
    McmcConfig mcmc;
    int batches = 10; // batch-means error estimate
    // optional noise model: log P_dA per candidate (uniform when absent)
    std::optional<std::vector<double>> log_noise;
};

// Importance sampling over the partition posterior of the observed graph:
// partitions are sampled once and reused across all candidates.
PredictionScore score_perturbations(const Graph& g_obs,
                                    const std::vector<EdgePerturbation>& candidates,
                                    const ModelSpec& spec,
                                    const PredictConfig& cfg, uint64_t seed);

} // namespace sbm
