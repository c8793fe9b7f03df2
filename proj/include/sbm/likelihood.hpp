#pragma once

#include <cstdint>
#include <string>

#include "sbm/edge_counts.hpp"
#include "sbm/graph.hpp"
#include "sbm/partition.hpp"

namespace sbm {

enum class Variant { sbm, dc, dc_hist };
enum class DegreePrior { uniform, frequency };
enum class EdgePrior { geometric, uniform };

// Model selection switchboard. 'edge_prior' applies to flat (non-nested)
// states; nested states model the edge counts with the SBM hierarchy
// instead. The degree prior is implied by the variant: dc -> uniform,
// dc_hist -> frequency.
struct ModelSpec {
    Variant variant = Variant::dc;
    bool nested = false;
    EdgePrior edge_prior = EdgePrior::geometric;

    bool degree_corrected() const { return variant != Variant::sbm; }
    DegreePrior degree_prior() const {
        return variant == Variant::dc_hist ? DegreePrior::frequency
                                           : DegreePrior::uniform;
    }
    std::string name() const;
};

ModelSpec parse_model_spec(const std::string& variant, bool nested,
                           const std::string& edge_prior = "geometric");

// --- partition priors -------------------------------------------------

// ln P(b) of the three-level hierarchy: sizes, counts, number of groups.
// b partitions n_items items.
double log_prior_partition(const Partition& b, int n_items);

// ln P(b) under the flat prior 1/a_N (ordered Bell); diagnostic only.
double log_prior_partition_flat(int n_items);

// --- microcanonical likelihoods ---------------------------------------

// ln P(A|e,b) for the non-degree-corrected SBM.
double log_likelihood_micro_sbm(const Graph& g, const Partition& b,
                                const EdgeCounts& e);

// ln P(A|k,e,b) for the degree-corrected SBM.
double log_likelihood_micro_dc(const Graph& g, const Partition& b,
                               const EdgeCounts& e);

// ln P(k|e,b) uniform over degree sequences compatible with e.
double log_prior_degrees_uniform(const Partition& b, const EdgeCounts& e);

// ln P(k|e,b) conditioned on the degree frequencies:
// P(k|eta) P(eta|e,b) with a restricted-partition hyperprior.
double log_prior_degrees_frequency(const Graph& g, const Partition& b,
                                   const EdgeCounts& e);

// --- edge-count priors -------------------------------------------------

// ln P(e|b): independent geometric entries with mean 2E/B(B+1).
double log_prior_edge_counts_geometric(const EdgeCounts& e, int64_t E);

// ln P(e|b) = -ln multiset(B(B+1)/2, E): uniform over count matrices.
double log_prior_edge_counts_uniform(const EdgeCounts& e, int64_t E);

// --- marginal likelihoods ----------------------------------------------

// ln P(A|b), computed through the microcanonical decomposition.
double log_marginal_sbm(const Graph& g, const Partition& b);
double log_marginal_dc_sbm(const Graph& g, const Partition& b,
                           DegreePrior degree_prior);

// Direct transcriptions of the canonical closed forms; cross-check oracles
// for the decompositions above.
double log_marginal_sbm_closed_form(const Graph& g, const Partition& b);
double log_marginal_dc_sbm_closed_form(const Graph& g, const Partition& b);

// --- nested model -------------------------------------------------------

// ln P(e_lower | b_l, e_upper): uniform multigraph likelihood of one
// hierarchy level. e_upper must equal aggregate(e_lower, b_l).
double log_nested_level(const EdgeCounts& e_lower, const Partition& b_l,
                        const EdgeCounts& e_upper);

// Same term evaluated without the consistency check, from the upper matrix
// and the level partition sizes alone.
double log_nested_level_term(const Partition& b_l, const EdgeCounts& e_upper);

// ln P(A, {e_l}, {b_l}): bottom likelihood per spec.variant, partition
// priors at every level, multigraph SBM priors up the hierarchy.
double log_joint_nested(const Graph& g, const HierarchicalPartition& h,
                        const ModelSpec& spec);

// ln P(A, e, b) for the flat model under spec.
double log_joint_flat(const Graph& g, const Partition& b,
                      const ModelSpec& spec);

// Description length in bits for flat or hierarchical states.
double description_length(const Graph& g, const Partition& b,
                          const ModelSpec& spec);
double description_length(const Graph& g, const HierarchicalPartition& h,
                          const ModelSpec& spec);

} // namespace sbm
