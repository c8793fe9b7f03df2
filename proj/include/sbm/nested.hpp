#pragma once

#include <memory>
#include <vector>

#include "sbm/mcmc.hpp"

namespace sbm {

// MCMC over hierarchical partitions. Level 0 moves nodes of the base
// graph; level l > 0 moves the groups of level l-1 inside the multigraph
// induced by the level-l edge counts. A sweep works on one uniformly drawn
// level; edge-count changes propagate up the hierarchy incrementally, and
// group births/deaths cascade through the level domains.
class NestedChain : public Chain {
  public:
    NestedChain(const Graph& g, HierarchicalPartition h, const ModelSpec& spec,
                McmcConfig cfg);

    SweepStats sweep(double beta, Rng& rng) override;
    double log_joint() const override;
    double recompute_log_joint() const override;
    std::unique_ptr<Chain> clone() const override {
        return std::make_unique<NestedChain>(*this);
    }

    // current hierarchy with the trailing trivial levels trimmed to one
    HierarchicalPartition hierarchy() const;
    int num_levels() const { return static_cast<int>(levels_.size()); }
    const BlockChain& level(int l) const { return *levels_[l]; }
    int bottom_groups() const { return levels_[0]->num_groups(); }

    struct LevelMove {
        double delta = 0.0;
        Partition::MoveEvent event;
    };
    // moves one item at one level, propagating count deltas and domain
    // changes upward; returns the total log-joint change
    LevelMove apply_level_move(int level, int item, int to);

    void check_consistency() const;

    McmcConfig& config() { return cfg_; }

    NestedChain(const NestedChain& o); // deep copy
    NestedChain& operator=(const NestedChain&) = delete;

  private:
    void materialize_level(int l); // rebuild proposal structures for level l
    void append_trivial_level();
    double closing_term() const;
    bool mh_level_step(int level, int item, double beta, Rng& rng, SweepStats& st);

    ModelSpec spec_;
    McmcConfig cfg_;
    std::vector<std::unique_ptr<BlockChain>> levels_;
    std::vector<bool> graph_fresh_; // proposal structures current per level
};

// builds a graph whose adjacency matrix is the given edge-count matrix
Graph multigraph_from_counts(const EdgeCounts& e);

struct NestedFit {
    HierarchicalPartition hierarchy;
    double log_joint = 0.0;
    double sigma_bits = 0.0;
    int bottom_groups = 0;
};

// level-by-level agglomerative initialization followed by joint annealing
NestedFit map_estimate_nested(const Graph& g, const ModelSpec& spec,
                              const McmcConfig& cfg, uint64_t seed);

} // namespace sbm
