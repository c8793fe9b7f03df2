#pragma once

#include <vector>

#include "sbm/generators.hpp"
#include "sbm/graph.hpp"
#include "sbm/partition.hpp"
#include "sbm/rng.hpp"

namespace sbm {

struct BpParams {
    SymMatrix lambda;          // B x B rates (order 1/N in the sparse regime)
    std::vector<double> gamma; // group probabilities, sum 1
    int num_groups() const { return static_cast<int>(gamma.size()); }
};

struct BpConfig {
    double tol = 1e-6;
    int max_iter = 1000;
    double damping = 0.0;       // 0.5 fallback kicks in on oscillation
    bool synchronous = false;   // in-place (asynchronous) updates by default
    bool uniform_init = false;  // otherwise Dirichlet(1) random messages
};

// Directed-edge messages, external fields, and node marginals for the SBM
// posterior with known parameters (non-edges handled through the global
// field, never an O(N^2) loop). Messages index the half-edges of 'graph',
// which is the simple collapse of the input when that had parallel edges.
struct BpState {
    Graph graph;
    int num_groups = 0;
    std::vector<double> messages;  // per directed half-edge h: [h*B + r]
    std::vector<double> marginals; // [i*B + r]
    std::vector<double> field;     // h_r
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    double damping_used = 0.0;

    double message(int64_t h, int r) const { return messages[h * num_groups + r]; }
    double marginal(int i, int r) const { return marginals[i * num_groups + r]; }
};

// Iterates the cavity equations on a simple graph (multigraphs are
// collapsed with a warning to stderr). Non-convergence is flagged on the
// returned state, not thrown.
BpState bp_iterate(const Graph& g, const BpParams& params, const BpConfig& cfg,
                   Rng& rng);

// per-node argmax of the marginals (ties to the lowest label), compressed
// to contiguous labels
Partition bp_argmax_partition(const BpState& state, int n_nodes);

// F = -sum_i ln Z^i + sum_{edges} ln Z^{ij} - E, from a converged state.
double bethe_free_energy(const BpParams& params, const BpState& state);

// epsilon* = B sqrt(<k>)
double detectability_threshold(int num_groups, double avg_degree);

struct DetectabilityPoint {
    double epsilon = 0.0;
    double mean_nmi = 0.0;
    double stderr_nmi = 0.0;
    int converged_runs = 0;
};

// For each epsilon: plant a partition, run BP from random messages, and
// compare argmax marginals against the planted groups.
std::vector<DetectabilityPoint> detectability_sweep(
    int n_nodes, int num_groups, double avg_degree,
    const std::vector<double>& epsilons, int replicates, const BpConfig& cfg,
    Rng& rng);

} // namespace sbm
