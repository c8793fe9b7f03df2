#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "sbm/edge_counts.hpp"
#include "sbm/graph.hpp"
#include "sbm/partition.hpp"

namespace sbm {

// Overlapping-SBM state: every half-edge carries its own group label. The
// tensors G_ij^{rs}, labelled degrees k_i^r, and label-pair counts e_rs are
// maintained incrementally under single-half-edge relabelings, which is the
// move set used for MCMC on this model. sum_rs G_ij^{rs} = A_ij holds by
// construction at all times.
class HalfEdgeLabeling {
  public:
    struct RelabelEvent {
        int64_t half_edge = -1;
        int from = -1;
        int to = -1;
        bool created_label = false;
        bool removed_label = false;
        int relabeled_from = -1; // old label renamed into 'from'
    };

    HalfEdgeLabeling() = default;
    // labels: one entry per half-edge of g.
    HalfEdgeLabeling(const Graph& g, std::vector<int> labels);

    // Non-overlapping embedding: both ends of every edge take the group of
    // their node.
    static HalfEdgeLabeling from_partition(const Graph& g, const Partition& b);

    const Graph& graph() const { return *g_; }
    int num_labels() const { return e_.num_groups(); }
    int label(int64_t half_edge) const { return labels_[half_edge]; }
    const std::vector<int>& labels() const { return labels_; }
    const EdgeCounts& edge_counts() const { return e_; }
    // labelled degree k_i^r (0 when absent)
    int64_t labelled_degree(int node, int r) const;
    const std::unordered_map<int, int64_t>& labelled_degrees(int node) const {
        return k_[node];
    }
    // G count for unique pair index (into graph().edges()); (a, b) is
    // node-ordered for u < v and label-sorted for self-loops.
    int64_t g_count(int pair_idx, int a, int b) const;
    const std::map<std::pair<int, int>, int64_t>& g_counts(int pair_idx) const {
        return G_[pair_idx];
    }

    // Relabels one half-edge; to == num_labels() creates a fresh label.
    // Handles label-contiguity renaming when a label class empties.
    RelabelEvent relabel(int64_t half_edge, int to);

    // random half-edge currently carrying label s (for e_sr-proportional
    // proposals); count is e_s
    int64_t sample_half_edge_with_label(int s, uint64_t uniform_draw) const;

    void check_consistency() const; // throws on any cache divergence

  private:
    std::pair<int, int> g_key(int64_t inst, int lu, int lv) const;
    void rename_label(int from, int last);

    const Graph* g_ = nullptr;
    std::vector<int> labels_;                   // per half-edge
    std::vector<std::unordered_map<int, int64_t>> k_; // per node: label -> k_i^r
    EdgeCounts e_;
    std::vector<std::map<std::pair<int, int>, int64_t>> G_; // per unique pair
    std::vector<std::vector<int64_t>> label_he_; // half-edges per label
    std::vector<int64_t> he_pos_;                // position in its label list
};

// ln P(G|k,e): uniform labelled-configuration likelihood.
double log_micro_overlap_g(const HalfEdgeLabeling& G);

// ln P(k|e) = -sum_r ln multiset(N, e_r).
double log_prior_overlap_degrees(const HalfEdgeLabeling& G);

// The three microcanonical terms (P(G|k,e), P(k|e), P(e)).
std::tuple<double, double, double> log_micro_overlap_parts(const HalfEdgeLabeling& G);

// Closed-form marginal likelihood; cross-check oracle for the decomposition.
double log_marginal_overlap(const HalfEdgeLabeling& G);

// -log2 of the microcanonical joint.
double overlap_description_length(const HalfEdgeLabeling& G);

} // namespace sbm
