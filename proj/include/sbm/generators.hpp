#pragma once

#include <vector>

#include "sbm/graph.hpp"
#include "sbm/overlap.hpp"
#include "sbm/partition.hpp"
#include "sbm/rng.hpp"

namespace sbm {

// Symmetric B x B matrix of reals (edge probabilities or expected counts).
class SymMatrix {
  public:
    SymMatrix() = default;
    SymMatrix(int b, double fill = 0.0) : b_(b), v_(b * b, fill) {}
    int size() const { return b_; }
    double operator()(int r, int s) const { return v_[r * b_ + s]; }
    void set(int r, int s, double x) { v_[r * b_ + s] = x; v_[s * b_ + r] = x; }

  private:
    int b_ = 0;
    std::vector<double> v_;
};

struct PlantedPartitionParams {
    int num_groups = 2;
    int num_nodes = 0;
    double avg_degree = 0.0;
    double epsilon = 0.0; // N (lambda_in - lambda_out)

    double lambda_in() const;
    double lambda_out() const; // throws when epsilon is infeasible
};

// Simple graph, no self-loops: each pair present with prob p_{b_i b_j}.
Graph sample_bernoulli_sbm(const Partition& b, const SymMatrix& p, Rng& rng);

// Poisson multigraph: A_ij ~ Poisson(lambda_{b_i b_j}) for i < j, self-loop
// halves ~ Poisson(lambda_rr / 2). Sampled block-wise (edge totals are
// Poisson, endpoints uniform), which is distributionally identical and
// O(E + B^2).
Graph sample_poisson_sbm(const Partition& b, const SymMatrix& lambda, Rng& rng);

// Degree-corrected: A_ij ~ Poisson(theta_i theta_j lambda_{b_i b_j});
// theta must sum to 1 within each group.
Graph sample_dc_sbm(const Partition& b, const SymMatrix& lambda,
                    const std::vector<double>& theta, Rng& rng);

// Overlapping model: half-edge tensors G_ij^{rs} ~ Poisson(kappa_ir
// lambda_rs kappa_js); kappa columns sum to 1 over nodes.
struct OverlapSample {
    Graph graph;
    HalfEdgeLabeling labeling;
};
OverlapSample sample_overlapping_sbm(const std::vector<std::vector<double>>& kappa,
                                     const SymMatrix& lambda, int n_nodes,
                                     Rng& rng);

// gamma_r = 1/B memberships; lambda_in/out from (avg_degree, epsilon).
struct PlantedSample {
    Graph graph;
    Partition partition;
};
PlantedSample sample_planted_partition(const PlantedPartitionParams& params,
                                       Rng& rng);

} // namespace sbm
