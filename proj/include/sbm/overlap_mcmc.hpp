#pragma once

#include <memory>

#include "sbm/mcmc.hpp"
#include "sbm/overlap.hpp"

namespace sbm {

// MCMC over half-edge labelings. Moves relabel one half-edge at a time;
// proposals look at the label of the opposite end of the same edge and use
// the smoothed label-pair counts, mirroring the node-move scheme.
class OverlapChain : public Chain {
  public:
    OverlapChain(HalfEdgeLabeling state, McmcConfig cfg);

    SweepStats sweep(double beta, Rng& rng) override;
    double log_joint() const override { return log_joint_; }
    double recompute_log_joint() const override;
    std::unique_ptr<Chain> clone() const override {
        return std::make_unique<OverlapChain>(*this);
    }

    const HalfEdgeLabeling& state() const { return state_; }
    McmcConfig& config() { return cfg_; }

    int propose(int64_t half_edge, Rng& rng) const;
    double proposal_probability(int64_t half_edge, int target) const;
    double relabel_delta(int64_t half_edge, int to) const;
    HalfEdgeLabeling::RelabelEvent apply_relabel(int64_t half_edge, int to);
    bool mh_step(int64_t half_edge, double beta, Rng& rng, SweepStats& st);

  private:
    HalfEdgeLabeling state_;
    McmcConfig cfg_;
    double log_joint_ = 0.0;
};

struct OverlapFit {
    HalfEdgeLabeling labeling;
    double log_joint = 0.0;
    double sigma_bits = 0.0;
    int num_labels = 0;
};

// Anneals half-edge labelings from a projected node-partition start; when
// fix_labels > 0 the label count is held there.
OverlapFit map_estimate_overlap(const Graph& g, const McmcConfig& cfg,
                                int fix_labels, uint64_t seed);

} // namespace sbm
