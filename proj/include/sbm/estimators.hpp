#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sbm/partition.hpp"

namespace sbm {

// Maximum-overlap relabeling of 'sample' onto 'reference' (maximum-weight
// bipartite matching on the contingency table). Unmatched sample groups
// keep fresh labels past the reference's range.
Partition align_partition(const Partition& sample, const Partition& reference);

// max over label matchings of the fraction of agreeing nodes
double partition_overlap(const Partition& a, const Partition& b);

// 2 I(a;b) / (H(a) + H(b)); 1 when both partitions are trivial.
double nmi(const Partition& a, const Partition& b);

// Posterior group-membership frequencies per node, built from samples that
// are aligned (max-weight matching) onto a running reference.
class MarginalTable {
  public:
    explicit MarginalTable(int n_nodes) : n_(n_nodes) {}

    void add_sample(const Partition& b);
    void merge(const MarginalTable& other); // partial tables from parallel chains

    int64_t num_samples() const { return samples_; }
    int num_columns() const { return cols_; }
    // row of node i, normalized to sum 1
    std::vector<double> row(int i) const;
    // argmax_r pi_i(r), ties broken by lowest label
    Partition argmax_partition() const;
    const std::map<int, int64_t>& num_groups_histogram() const { return b_hist_; }
    const Partition& reference() const { return ref_; }

  private:
    int n_;
    int cols_ = 0;
    int64_t samples_ = 0;
    std::vector<std::vector<int64_t>> counts_; // per node: per column
    std::map<int, int64_t> b_hist_;
    Partition ref_;
    bool have_ref_ = false;
};

struct SelectionReport {
    std::string label_1, label_2;
    double sigma_1 = 0.0, sigma_2 = 0.0; // bits
    double delta_sigma = 0.0;            // sigma_1 - sigma_2
    double log2_odds = 0.0;              // log2 Lambda in favor of choice 1
    double odds = 0.0;                   // 2^{-delta}; may overflow to inf
    std::string interpretation;
};

// Posterior odds ratio for two fitted (state, model) pairs on the same
// graph, from their description lengths in bits.
SelectionReport posterior_odds(const std::string& label_1, double sigma_1,
                               const std::string& label_2, double sigma_2);

} // namespace sbm
