#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "oracles.hpp"
#include "sbm/combinatorics.hpp"
#include "sbm/likelihood.hpp"
#include "sbm/overlap.hpp"

using namespace sbm;

namespace {

// enumerate all labelings of every instance end of g with labels < B,
// skipping labelings that leave a label unused (state space is contiguous);
// loop-instance ends are unordered, so only the sorted representative is
// visited
void for_each_labeling(const Graph& g, int max_b,
                       const std::function<void(const HalfEdgeLabeling&)>& f) {
    int64_t H = g.num_half_edges();
    std::vector<int> labels(H, 0);
    std::function<void(int64_t)> rec = [&](int64_t h) {
        if (h == H) {
            for (int64_t t = 0; t < g.num_instances(); ++t) {
                const auto& ed = g.edges()[g.instance_pair(t)];
                if (ed.u == ed.v && labels[2 * t] > labels[2 * t + 1])
                    return; // non-canonical loop orientation
            }
            // parallel instances of a pair are interchangeable: visit the
            // sorted assignment only
            for (int64_t t = 1; t < g.num_instances(); ++t) {
                if (g.instance_pair(t) != g.instance_pair(t - 1))
                    continue;
                auto prev = std::make_pair(labels[2 * (t - 1)], labels[2 * t - 1]);
                auto cur = std::make_pair(labels[2 * t], labels[2 * t + 1]);
                if (cur < prev)
                    return;
            }
            int used = 0;
            std::vector<char> seen(max_b, 0);
            for (int l : labels)
                if (!seen[l]) {
                    seen[l] = 1;
                    ++used;
                }
            int mx = 0;
            for (int l : labels)
                mx = std::max(mx, l + 1);
            if (used != mx)
                return; // not contiguous
            f(HalfEdgeLabeling(g, labels));
            return;
        }
        for (int l = 0; l < max_b; ++l) {
            labels[h] = l;
            rec(h + 1);
        }
    };
    rec(0);
}

} // namespace

TEST_CASE("half-edge labeling state: constraint and bookkeeping") {
    Rng rng = make_rng(31);
    Graph g = oracle::random_multigraph(6, 10, rng);
    Partition b = oracle::random_partition(6, 3, rng);
    HalfEdgeLabeling lab = HalfEdgeLabeling::from_partition(g, b);
    lab.check_consistency();
    // sum_r k_i^r = k_i
    for (int i = 0; i < 6; ++i) {
        int64_t tot = 0;
        for (const auto& [r, k] : lab.labelled_degrees(i))
            tot += k;
        CHECK(tot == g.degree(i));
    }
    // e totals
    CHECK(lab.edge_counts().total() == 2 * g.num_edges());

    // random relabel moves keep every cache exact
    for (int step = 0; step < 2000; ++step) {
        int64_t h = rand_index(rng, g.num_half_edges());
        int to = static_cast<int>(rand_index(rng, lab.num_labels() + 1));
        if (to == lab.label(h))
            continue;
        if (lab.edge_counts().row_sum(lab.label(h)) == 1 && to == lab.num_labels())
            continue;
        lab.relabel(h, to);
    }
    lab.check_consistency();
    CHECK(lab.edge_counts().total() == 2 * g.num_edges());
}

TEST_CASE("overlap microcanonical likelihood normalizes") {
    // The (k, e) classes span every multigraph with matching labelled
    // degrees and counts, so the oracle enumerates graphs and labelings
    // jointly; multiplicity-capped classes are skipped as incomplete.
    const int n = 3, max_mult = 3;
    for (int B = 1; B <= 2; ++B) {
        std::map<std::string, double> classes;
        std::map<std::string, bool> complete;
        oracle::for_each_multigraph(n, max_mult, [&](const auto& a) {
            Graph g = oracle::graph_from_map(n, a);
            if (g.num_nodes() < n)
                return;
            if (g.num_edges() == 0 || g.num_edges() > 3)
                return;
            bool capped = false;
            for (const auto& ed : g.edges())
                if ((ed.u == ed.v ? ed.mult / 2 : ed.mult) >= max_mult)
                    capped = true;
            for_each_labeling(g, B, [&](const HalfEdgeLabeling& lab) {
                std::string key;
                const EdgeCounts& e = lab.edge_counts();
                key += std::to_string(e.num_groups()) + "|";
                for (int r = 0; r < e.num_groups(); ++r)
                    for (int s = r; s < e.num_groups(); ++s)
                        key += std::to_string(e.at(r, s)) + ",";
                key += "|";
                for (int i = 0; i < n; ++i) {
                    for (int r = 0; r < e.num_groups(); ++r)
                        key += std::to_string(lab.labelled_degree(i, r)) + ",";
                    key += ";";
                }
                classes[key] += std::exp(log_micro_overlap_g(lab));
                if (capped)
                    complete[key] = false;
                else if (!complete.count(key))
                    complete[key] = true;
            });
        });
        int checked = 0;
        for (const auto& [key, total] : classes) {
            CHECK(total < 1.0 + 1e-9);
            if (complete[key] && std::abs(total - 1.0) < 1e-9)
                ++checked;
            if (complete[key])
                CHECK_MESSAGE(total == doctest::Approx(1.0).epsilon(1e-9),
                              "class ", key);
        }
        CHECK(checked > 20);
    }
}

TEST_CASE("overlap closed form equals microcanonical product") {
    Rng rng = make_rng(33);
    for (int trial = 0; trial < 60; ++trial) {
        Graph g = oracle::random_multigraph(3 + rand_index(rng, 5),
                                            4 + rand_index(rng, 8), rng);
        if (g.num_edges() == 0)
            continue;
        std::vector<int> labels(g.num_half_edges());
        int B = 1 + static_cast<int>(rand_index(rng, 3));
        for (int& l : labels)
            l = static_cast<int>(rand_index(rng, B));
        std::vector<int> remap(B, -1);
        int next = 0;
        for (int& l : labels) {
            if (remap[l] < 0)
                remap[l] = next++;
            l = remap[l];
        }
        HalfEdgeLabeling lab(g, labels);
        auto [pg, pk, pe] = log_micro_overlap_parts(lab);
        CHECK(log_marginal_overlap(lab) ==
              doctest::Approx(pg + pk + pe).epsilon(1e-9));
    }
}

TEST_CASE("overlap parts: zero edges and hand case") {
    Graph empty(3);
    empty.finalize();
    HalfEdgeLabeling lab(empty, std::vector<int>{});
    auto [pg, pk, pe] = log_micro_overlap_parts(lab);
    CHECK(pg == doctest::Approx(0.0));
    CHECK(pk == doctest::Approx(0.0));
    CHECK(pe == doctest::Approx(0.0));
    CHECK(overlap_description_length(lab) == doctest::Approx(0.0));

    // single edge, both ends label 0, N = 2:
    // P(G|k,e) = e! k! k! / (G! e_r!) = 2!!*1*1/(1*2!)... term by term:
    Graph g(2);
    g.add_edge(0, 1);
    g.finalize();
    HalfEdgeLabeling one(g, {0, 0});
    // e_00 = 2, k_0^0 = k_1^0 = 1, G = 1, e_0 = 2
    double expect_pg = log_double_factorial_even(2) + 0.0 + 0.0 - 0.0 -
                       log_factorial(2);
    auto [pg1, pk1, pe1] = log_micro_overlap_parts(one);
    CHECK(pg1 == doctest::Approx(expect_pg));
    CHECK(pk1 == doctest::Approx(-log_multiset(2, 2)));
    CHECK(pe1 == doctest::Approx(1 * std::log(1.0) - 2 * std::log(2.0)));
    CHECK(log_marginal_overlap(one) == doctest::Approx(pg1 + pk1 + pe1));
}

TEST_CASE("non-overlapping embedding: known prior-term difference from dc") {
    // For labelings where each node uses one label, the overlap joint and
    // the DC joint differ exactly by the documented prior substitution.
    Rng rng = make_rng(34);
    for (int trial = 0; trial < 25; ++trial) {
        Graph g = oracle::random_multigraph(8, 14, rng, /*loops=*/false);
        if (g.num_edges() == 0)
            continue;
        Partition b = oracle::random_partition(8, 3, rng);
        HalfEdgeLabeling lab = HalfEdgeLabeling::from_partition(g, b);
        int B = lab.num_labels();
        if (B != b.num_groups())
            continue; // some group had no incident half-edges
        auto [pg, pk, pe] = log_micro_overlap_parts(lab);
        double overlap_joint = pg + pk + pe;
        EdgeCounts e = EdgeCounts::from(g, b);
        double dc_joint = log_likelihood_micro_dc(g, b, e) +
                          log_prior_degrees_uniform(b, e) +
                          log_prior_edge_counts_geometric(e, g.num_edges());
        // analytic residual: overlap uses prod_r (N-1)!/(e_r+N-1)! prod k_i^r!
        // while dc uses prod_r (n_r-1)!/(e_r+n_r-1)! prod_i k_i!
        double resid = 0.0;
        int64_t n = g.num_nodes();
        for (int r = 0; r < B; ++r) {
            int64_t er = e.row_sum(r);
            resid += log_factorial(n - 1) - log_factorial(er + n - 1);
            resid -= log_factorial(b.group_size(r) - 1) -
                     log_factorial(er + b.group_size(r) - 1);
        }
        // k_i^r! equals k_i! for single-label nodes, so no degree residual
        CHECK(overlap_joint - dc_joint == doctest::Approx(resid).epsilon(1e-9));
    }
}

#include "sbm/generators.hpp"
#include "sbm/overlap_mcmc.hpp"

TEST_CASE("overlap map never worsens the projected start") {
    Rng rng = make_rng(35);
    std::vector<int> labels(24);
    for (int i = 0; i < 24; ++i)
        labels[i] = i / 12;
    Partition planted(labels);
    SymMatrix lam(2);
    lam.set(0, 0, 40.0);
    lam.set(1, 1, 40.0);
    lam.set(0, 1, 6.0);
    Graph g = sample_poisson_sbm(planted, lam, rng);
    HalfEdgeLabeling init = HalfEdgeLabeling::from_partition(g, planted);
    double init_bits = overlap_description_length(init);
    McmcConfig cfg;
    cfg.restarts = 2;
    cfg.anneal_sweeps = 80;
    OverlapFit fit = map_estimate_overlap(g, cfg, 2, 77);
    CHECK(fit.num_labels == 2);
    CHECK(fit.sigma_bits <= init_bits + 1e-6);
    fit.labeling.check_consistency();
}
