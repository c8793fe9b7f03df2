#include "sbm/likelihood.hpp"

#include <cmath>
#include <stdexcept>

#include "sbm/combinatorics.hpp"

namespace sbm {

std::string ModelSpec::name() const {
    std::string s;
    switch (variant) {
    case Variant::sbm: s = "sbm"; break;
    case Variant::dc: s = "dc"; break;
    case Variant::dc_hist: s = "dc-hist"; break;
    }
    if (nested)
        s += "-nested";
    else if (edge_prior == EdgePrior::uniform)
        s += "-uniform-e";
    return s;
}

ModelSpec parse_model_spec(const std::string& variant, bool nested,
                           const std::string& edge_prior) {
    ModelSpec spec;
    if (variant == "sbm")
        spec.variant = Variant::sbm;
    else if (variant == "dc")
        spec.variant = Variant::dc;
    else if (variant == "dc-hist" || variant == "dc_hist")
        spec.variant = Variant::dc_hist;
    else
        throw std::invalid_argument("unknown model variant: " + variant);
    spec.nested = nested;
    if (edge_prior == "geometric")
        spec.edge_prior = EdgePrior::geometric;
    else if (edge_prior == "uniform")
        spec.edge_prior = EdgePrior::uniform;
    else
        throw std::invalid_argument("unknown edge prior: " + edge_prior);
    return spec;
}

double log_prior_partition(const Partition& b, int n_items) {
    if (b.num_items() != n_items)
        throw std::invalid_argument("log_prior_partition: size mismatch");
    int B = b.num_groups();
    double lp = 0.0;
    for (int r = 0; r < B; ++r) {
        if (b.group_size(r) == 0)
            throw std::invalid_argument("log_prior_partition: empty group");
        lp += log_factorial(b.group_size(r));
    }
    lp -= log_factorial(n_items);
    lp -= log_binomial(n_items - 1, B - 1);
    lp -= std::log(static_cast<double>(n_items));
    return lp;
}

double log_prior_partition_flat(int n_items) {
    return -log_ordered_bell(n_items);
}

namespace {

// sum over unique node pairs of ln A_ij! (ln A_ii!! on the diagonal)
double log_adjacency_factor(const Graph& g) {
    double s = 0.0;
    for (const Graph::Edge& e : g.edges()) {
        if (e.u == e.v)
            s += log_double_factorial_even(e.mult);
        else
            s += log_factorial(e.mult);
    }
    return s;
}

// sum_{r<s} ln e_rs! + sum_r ln e_rr!!
double log_edge_count_factor(const EdgeCounts& e) {
    double s = 0.0;
    for (int r = 0; r < e.num_groups(); ++r) {
        for (const auto& [t, v] : e.row(r)) {
            if (t > r)
                s += log_factorial(v);
            else if (t == r)
                s += log_double_factorial_even(v);
        }
    }
    return s;
}

void check_consistency(const Graph& g, const Partition& b, const EdgeCounts& e) {
    if (b.num_items() != g.num_nodes() || e.num_groups() != b.num_groups())
        throw std::invalid_argument("likelihood: inconsistent (graph, partition, counts)");
}

} // namespace

double log_likelihood_micro_sbm(const Graph& g, const Partition& b,
                                const EdgeCounts& e) {
    check_consistency(g, b, e);
    double lp = log_edge_count_factor(e);
    for (int r = 0; r < e.num_groups(); ++r) {
        int64_t er = e.row_sum(r);
        if (er > 0)
            lp -= er * std::log(static_cast<double>(b.group_size(r)));
    }
    lp -= log_adjacency_factor(g);
    return lp;
}

double log_likelihood_micro_dc(const Graph& g, const Partition& b,
                               const EdgeCounts& e) {
    check_consistency(g, b, e);
    double lp = log_edge_count_factor(e);
    for (int r = 0; r < e.num_groups(); ++r)
        lp -= log_factorial(e.row_sum(r));
    for (int i = 0; i < g.num_nodes(); ++i)
        lp += log_factorial(g.degree(i));
    lp -= log_adjacency_factor(g);
    return lp;
}

double log_prior_degrees_uniform(const Partition& b, const EdgeCounts& e) {
    double lp = 0.0;
    for (int r = 0; r < e.num_groups(); ++r)
        lp -= log_multiset(b.group_size(r), e.row_sum(r));
    return lp;
}

double log_prior_degrees_frequency(const Graph& g, const Partition& b,
                                   const EdgeCounts& e) {
    DegreeHistogram hist = degree_histogram(g, b);
    double lp = 0.0;
    for (int r = 0; r < e.num_groups(); ++r) {
        lp -= log_restricted_partitions(e.row_sum(r), b.group_size(r));
        for (const auto& [k, cnt] : hist[r])
            lp += log_factorial(cnt);
        lp -= log_factorial(b.group_size(r));
    }
    return lp;
}

double log_prior_edge_counts_geometric(const EdgeCounts& e, int64_t E) {
    if (E == 0)
        return 0.0;
    int B = e.num_groups();
    double lam = 2.0 * E / (static_cast<double>(B) * (B + 1));
    return E * std::log(lam) -
           (E + B * (B + 1) / 2.0) * std::log1p(lam);
}

double log_prior_edge_counts_uniform(const EdgeCounts& e, int64_t E) {
    int64_t B = e.num_groups();
    return -log_multiset(B * (B + 1) / 2, E);
}

double log_marginal_sbm(const Graph& g, const Partition& b) {
    EdgeCounts e = EdgeCounts::from(g, b);
    return log_likelihood_micro_sbm(g, b, e) +
           log_prior_edge_counts_geometric(e, g.num_edges());
}

double log_marginal_dc_sbm(const Graph& g, const Partition& b,
                           DegreePrior degree_prior) {
    EdgeCounts e = EdgeCounts::from(g, b);
    double deg = degree_prior == DegreePrior::uniform
                     ? log_prior_degrees_uniform(b, e)
                     : log_prior_degrees_frequency(g, b, e);
    return log_likelihood_micro_dc(g, b, e) + deg +
           log_prior_edge_counts_geometric(e, g.num_edges());
}

double log_marginal_sbm_closed_form(const Graph& g, const Partition& b) {
    // one-pass transcription of the integrated marginal likelihood
    int B = b.num_groups();
    int64_t E = g.num_edges();
    std::vector<std::vector<int64_t>> e(B, std::vector<int64_t>(B, 0));
    for (const Graph::Edge& ed : g.edges()) {
        if (ed.u == ed.v)
            e[b[ed.u]][b[ed.u]] += ed.mult;
        else {
            e[b[ed.u]][b[ed.v]] += ed.mult;
            e[b[ed.v]][b[ed.u]] += ed.mult;
        }
    }
    for (int r = 0; r < B; ++r)
        for (int s = 0; s < B; ++s)
            if (r == s && e[r][s] % 2 != 0)
                throw std::logic_error("odd diagonal");
    double lp = 0.0;
    if (E > 0) {
        double lam = 2.0 * E / (static_cast<double>(B) * (B + 1));
        lp += E * std::log(lam) - (E + B * (B + 1) / 2.0) * std::log(lam + 1);
    }
    std::vector<int64_t> er(B, 0);
    for (int r = 0; r < B; ++r) {
        for (int s = 0; s < B; ++s)
            er[r] += (r == s) ? e[r][r] : e[r][s];
        for (int s = r + 1; s < B; ++s)
            lp += log_factorial(e[r][s]);
        lp += log_double_factorial_even(e[r][r]);
        if (er[r] > 0)
            lp -= er[r] * std::log(static_cast<double>(b.group_size(r)));
    }
    for (const Graph::Edge& ed : g.edges())
        lp -= (ed.u == ed.v) ? log_double_factorial_even(ed.mult)
                             : log_factorial(ed.mult);
    return lp;
}

double log_marginal_dc_sbm_closed_form(const Graph& g, const Partition& b) {
    int B = b.num_groups();
    int64_t E = g.num_edges();
    std::vector<std::vector<int64_t>> e(B, std::vector<int64_t>(B, 0));
    for (const Graph::Edge& ed : g.edges()) {
        if (ed.u == ed.v)
            e[b[ed.u]][b[ed.u]] += ed.mult;
        else {
            e[b[ed.u]][b[ed.v]] += ed.mult;
            e[b[ed.v]][b[ed.u]] += ed.mult;
        }
    }
    double lp = 0.0;
    if (E > 0) {
        double lam = 2.0 * E / (static_cast<double>(B) * (B + 1));
        lp += E * std::log(lam) - (E + B * (B + 1) / 2.0) * std::log(lam + 1);
    }
    std::vector<int64_t> er(B, 0);
    for (int r = 0; r < B; ++r) {
        for (int s = 0; s < B; ++s)
            er[r] += e[r][s];
        for (int s = r + 1; s < B; ++s)
            lp += log_factorial(e[r][s]);
        lp += log_double_factorial_even(e[r][r]);
        lp += log_factorial(b.group_size(r) - 1) -
              log_factorial(er[r] + b.group_size(r) - 1);
    }
    for (const Graph::Edge& ed : g.edges())
        lp -= (ed.u == ed.v) ? log_double_factorial_even(ed.mult)
                             : log_factorial(ed.mult);
    for (int i = 0; i < g.num_nodes(); ++i)
        lp += log_factorial(g.degree(i));
    return lp;
}

double log_nested_level_term(const Partition& b_l, const EdgeCounts& e_upper) {
    double lp = 0.0;
    for (int r = 0; r < e_upper.num_groups(); ++r) {
        int64_t nr = b_l.group_size(r);
        for (const auto& [s, v] : e_upper.row(r)) {
            if (s > r)
                lp -= log_multiset(nr * b_l.group_size(s), v);
            else if (s == r)
                lp -= log_multiset(nr * (nr + 1) / 2, v / 2);
        }
    }
    return lp;
}

double log_nested_level(const EdgeCounts& e_lower, const Partition& b_l,
                        const EdgeCounts& e_upper) {
    if (b_l.num_items() != e_lower.num_groups())
        throw std::invalid_argument("log_nested_level: partition/matrix mismatch");
    if (!(aggregate(e_lower, b_l) == e_upper))
        throw std::invalid_argument("log_nested_level: e_upper does not aggregate e_lower");
    return log_nested_level_term(b_l, e_upper);
}

namespace {

double bottom_terms(const Graph& g, const Partition& b, const EdgeCounts& e,
                    const ModelSpec& spec) {
    double lp;
    switch (spec.variant) {
    case Variant::sbm:
        lp = log_likelihood_micro_sbm(g, b, e);
        break;
    case Variant::dc:
        lp = log_likelihood_micro_dc(g, b, e) + log_prior_degrees_uniform(b, e);
        break;
    case Variant::dc_hist:
        lp = log_likelihood_micro_dc(g, b, e) +
             log_prior_degrees_frequency(g, b, e);
        break;
    default:
        throw std::logic_error("bad variant");
    }
    return lp;
}

} // namespace

double log_joint_flat(const Graph& g, const Partition& b,
                      const ModelSpec& spec) {
    EdgeCounts e = EdgeCounts::from(g, b);
    double lp = bottom_terms(g, b, e, spec);
    lp += spec.edge_prior == EdgePrior::geometric
              ? log_prior_edge_counts_geometric(e, g.num_edges())
              : log_prior_edge_counts_uniform(e, g.num_edges());
    lp += log_prior_partition(b, g.num_nodes());
    return lp;
}

double log_joint_nested(const Graph& g, const HierarchicalPartition& h,
                        const ModelSpec& spec) {
    h.validate();
    if (h.level(0).num_items() != g.num_nodes())
        throw std::invalid_argument("log_joint_nested: level 0 size mismatch");
    EdgeCounts e = EdgeCounts::from(g, h.level(0));
    double lp = bottom_terms(g, h.level(0), e, spec);
    lp += log_prior_partition(h.level(0), g.num_nodes());
    for (int l = 1; l < h.num_levels(); ++l) {
        const Partition& bl = h.level(l);
        EdgeCounts up = aggregate(e, bl);
        lp += log_nested_level_term(bl, up);
        // Once a level is trivial, it and everything above it close the
        // hierarchy with probability 1; redundant trailing levels must not
        // change the joint.
        if (bl.num_groups() > 1)
            lp += log_prior_partition(bl, bl.num_items());
        e = std::move(up);
    }
    return lp;
}

double description_length(const Graph& g, const Partition& b,
                          const ModelSpec& spec) {
    if (spec.nested)
        return description_length(g, HierarchicalPartition::from_flat(b), spec);
    return -log_joint_flat(g, b, spec) / LN2;
}

double description_length(const Graph& g, const HierarchicalPartition& h,
                          const ModelSpec& spec) {
    return -log_joint_nested(g, h, spec) / LN2;
}

} // namespace sbm
