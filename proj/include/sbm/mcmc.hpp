#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sbm/edge_counts.hpp"
#include "sbm/graph.hpp"
#include "sbm/likelihood.hpp"
#include "sbm/partition.hpp"
#include "sbm/rng.hpp"

namespace sbm {

struct McmcConfig {
    double epsilon = 1.0; // proposal smoothing; must stay > 0 for ergodicity
    int sweeps = 1000;
    int burn_in = 1000;
    int thinning = 10;
    int restarts = 10;
    int merge_attempts = 5;
    int merge_sweeps = 10;
    double merge_delta_window = 1.0; // nats below the round's best merge
    double beta_max = 64.0;
    int anneal_sweeps = 200;
    int polish_sweeps = 100;
    bool allow_new_groups = true;
    int min_groups = 1;
    int max_groups = std::numeric_limits<int>::max();
    int threads = 1;
};

struct SweepStats {
    int64_t proposals = 0;
    int64_t accepted = 0;
    SweepStats& operator+=(const SweepStats& o) {
        proposals += o.proposals;
        accepted += o.accepted;
        return *this;
    }
};

// What a single level contributes to the log-joint.
enum class LevelKind { bottom_sbm, bottom_dc, bottom_dc_hist, upper };
enum class PriorMode { eq11, eq11_if_nontrivial, none };
enum class CountPrior { none, geometric, uniform };

struct LocalModel {
    LevelKind kind = LevelKind::bottom_dc;
    PriorMode prior = PriorMode::eq11;
    CountPrior count_prior = CountPrior::geometric;
};

LocalModel flat_local_model(const ModelSpec& spec);

// Per-group half-edge lists in one contiguous arena (same motivation as
// the EdgeCounts layout: group-indexed lookups must not go cache-cold as
// the number of groups grows). Supports O(1) amortized move, sample, and
// rename-last-group.
class GroupHalfEdges {
  public:
    void init(const Graph& g, const Partition& b);
    void move(int64_t h, int from, int to);
    int64_t size(int group) const { return blocks_[group].count; }
    int64_t at(int group, int64_t idx) const {
        return arena_[blocks_[group].off + idx];
    }
    void add_group();
    // moves the last group's list into 'hole' (which must be empty) and
    // drops the last slot
    void rename_last_into(int hole);

  private:
    struct Block {
        uint32_t off = 0;
        uint32_t cap = 0;
        int32_t count = 0;
    };
    void relocate(int group, uint32_t need);
    void compact();

    std::vector<int64_t> arena_;
    std::vector<Block> blocks_;
    std::vector<int32_t> pos_; // per half-edge: index within its block
    size_t garbage_ = 0;
};

// One (graph, partition, counts) level with everything the informed move
// set needs: group half-edge lists for O(1) proposals, member lists for
// merges, and an incrementally maintained local log-joint. Flat models use
// a single BlockChain; the nested sampler stacks them.
class BlockChain {
  public:
    BlockChain(Graph g, Partition b, LocalModel model, McmcConfig cfg);

    const Graph& graph() const { return g_; }
    const Partition& partition() const { return b_; }
    const EdgeCounts& counts() const { return e_; }
    int num_groups() const { return b_.num_groups(); }
    double local_log_joint() const { return log_joint_; }
    double recompute_local_log_joint() const;
    McmcConfig& config() { return cfg_; }
    const McmcConfig& config() const { return cfg_; }

    // One Metropolis-Hastings pass over all items in random order.
    SweepStats sweep(double beta, Rng& rng);

    // --- pieces exposed for the nested chain and for tests ---

    // uniform over the B+1 targets (label B = fresh group)
    int propose_random(int item, Rng& rng) const;
    // 3-step informed proposal; falls back to propose_random for k_i = 0
    int propose(int item, Rng& rng) const;
    // exact marginal probability of proposing 'target' for 'item'
    double proposal_probability(int item, int target) const;
    // probability of proposing the inverse of (item -> to), evaluated on
    // the post-move state without mutating anything
    double reverse_proposal_probability(int item, int to) const;
    // local log-joint change of a hypothetical move, without mutation
    double move_delta(int item, int to) const;
    // both of the above with the count deltas gathered once
    void evaluate_move(int item, int to, double& delta, double& rev_prob) const;

    struct MoveResult {
        double delta = 0.0; // local log-joint change
        Partition::MoveEvent event;
        std::vector<std::tuple<int, int, int64_t>> count_deltas; // canonical r<=s
    };
    // applies item -> to (to == B creates a group); returns the local
    // delta and the induced count deltas for upward propagation
    MoveResult apply_move(int item, int to);

    // local delta terms caused by external changes to this level's edge
    // multiplicities (the level below moved); graph_deltas are (x, y, d)
    // node pairs of this level's graph
    double apply_graph_delta(const std::vector<std::tuple<int, int, int64_t>>& graph_deltas,
                             std::vector<std::tuple<int, int, int64_t>>& out_count_deltas);

    // domain surgery for hierarchy bookkeeping (new/removed node of this
    // level's graph); returns the local log-joint change
    double insert_item(int group);
    double remove_item_swap(int item, Partition::MoveEvent& group_event);

    // greedy merge machinery for the agglomerative heuristic
    struct MergeCandidate {
        int from = -1, into = -1;
        double delta = -std::numeric_limits<double>::infinity();
    };
    MergeCandidate best_merge(int group, Rng& rng) const;
    double evaluate_merge(int from, int into) const;
    void apply_merge(int from, int into);

    // replaces the graph (upper levels are rebuilt between sweeps after
    // lower levels changed); partition and counts must already match
    void reset_graph(Graph g);

    void check_consistency() const;

  private:
    double reverse_probability_from_buffer(int item, int to) const;
    double partition_prior_value(int B, double sum_lnfact_sizes) const;
    double count_prior_value(int B) const;
    double level_term_pair(int a, int b, int64_t v) const; // multiset term (upper)
    void he_move(int64_t h, int from, int to);
    void rename_group_structures(int hole, int last);

    Graph g_;
    Partition b_;
    EdgeCounts e_;
    LocalModel model_;
    McmcConfig cfg_;
    DegreeHistogram eta_; // dc_hist only
    GroupHalfEdges group_he_;
    std::vector<std::vector<int>> members_;
    std::vector<int> member_pos_;
    double log_joint_ = 0.0;
    double sum_lnfact_sizes_ = 0.0;
    // flat scratch containers: hot paths must stay O(k_i) regardless of the
    // number of groups, and hash-map clears cost O(buckets)
    mutable std::vector<std::pair<int64_t, int64_t>> scratch_;
    mutable std::vector<std::tuple<int, int, int64_t>> delta_buf_;
    int64_t scratch_get(int64_t key) const {
        for (const auto& [k, v] : scratch_)
            if (k == key)
                return v;
        return 0;
    }
    void scratch_add(int64_t key, int64_t v) const {
        for (auto& [k, existing] : scratch_)
            if (k == key) {
                existing += v;
                return;
            }
        scratch_.emplace_back(key, v);
    }
    bool scratch_insert(int64_t key) const { // returns false if present
        for (const auto& [k, v] : scratch_)
            if (k == key)
                return false;
        scratch_.emplace_back(key, 1);
        return true;
    }
};

// Metropolis-Hastings acceptance on a BlockChain (flat model); exposed for
// the detailed-balance and enumeration tests.
bool mh_step(BlockChain& chain, int item, double beta, Rng& rng,
             SweepStats& stats);

// --- drivers -----------------------------------------------------------

class Chain {
  public:
    virtual ~Chain() = default;
    virtual SweepStats sweep(double beta, Rng& rng) = 0;
    virtual double log_joint() const = 0;
    virtual double recompute_log_joint() const = 0;
    virtual std::unique_ptr<Chain> clone() const = 0;
};

class FlatChain : public Chain {
  public:
    FlatChain(const Graph& g, Partition b, const ModelSpec& spec, McmcConfig cfg);
    SweepStats sweep(double beta, Rng& rng) override { return block_.sweep(beta, rng); }
    double log_joint() const override { return block_.local_log_joint(); }
    double recompute_log_joint() const override {
        return block_.recompute_local_log_joint();
    }
    std::unique_ptr<Chain> clone() const override {
        return std::make_unique<FlatChain>(*this);
    }
    const Partition& partition() const { return block_.partition(); }
    BlockChain& block() { return block_; }
    const BlockChain& block() const { return block_; }

  private:
    BlockChain block_;
};

// Simulated annealing: geometric beta ladder followed by a greedy polish;
// returns the best state visited (by log-joint).
std::unique_ptr<Chain> anneal(const Chain& start, const McmcConfig& cfg, Rng& rng);

// Agglomerative initialization with Fibonacci search over the number of
// groups; returns the best flat state found.
FlatChain agglomerative_init(const Graph& g, const ModelSpec& spec,
                             const McmcConfig& cfg, Rng& rng);

// The full ladder of states probed by the Fibonacci search, keyed by their
// number of groups. Used to seed hierarchical fits from several bottom
// resolutions (finer-than-optimal bottoms merge down cheaply).
std::map<int, FlatChain> agglomerative_ladder(const Graph& g,
                                              const ModelSpec& spec,
                                              const McmcConfig& cfg, Rng& rng);

// Same machinery for an arbitrary level objective (the nested sampler runs
// it per hierarchy level).
std::map<int, BlockChain> agglomerative_ladder_block(const Graph& g,
                                                     const LocalModel& model,
                                                     const McmcConfig& cfg,
                                                     Rng& rng);

struct FlatFit {
    Partition partition;
    double log_joint = 0.0;
    double sigma_bits = 0.0;
    int num_groups = 0;
};

// Runs f(0) .. f(cfg.restarts - 1), on cfg.threads workers when > 1.
void parallel_restarts(const McmcConfig& cfg, const std::function<void(int)>& f);

// Best state over seeded restarts of agglomerative_init + anneal.
FlatFit map_estimate_flat(const Graph& g, const ModelSpec& spec,
                          const McmcConfig& cfg, uint64_t seed);

// Posterior sampling at beta = 1: burn-in, then one callback per thinned
// sweep. Returns the post-burn-in acceptance statistics.
template <class F>
SweepStats sample_posterior(Chain& chain, const McmcConfig& cfg, Rng& rng,
                            F&& on_sample) {
    for (int s = 0; s < cfg.burn_in; ++s)
        chain.sweep(1.0, rng);
    SweepStats stats;
    for (int s = 0; s < cfg.sweeps; ++s) {
        stats += chain.sweep(1.0, rng);
        if ((s + 1) % cfg.thinning == 0)
            on_sample(chain);
    }
    return stats;
}

} // namespace sbm
