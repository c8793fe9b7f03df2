#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "sbm/combinatorics.hpp"
#include "sbm/graph.hpp"
#include "sbm/likelihood.hpp"

using namespace sbm;

namespace {

Graph clique_battery(int cliques, int size) {
    Graph g(cliques * size);
    for (int c = 0; c < cliques; ++c)
        for (int i = 0; i < size; ++i)
            for (int j = i + 1; j < size; ++j)
                g.add_edge(size * c + i, size * c + j);
    g.finalize();
    return g;
}

Partition blocks_of(int n, int block) {
    std::vector<int> l(n);
    for (int i = 0; i < n; ++i)
        l[i] = i / block;
    return Partition(l);
}

} // namespace

TEST_CASE("partition prior: hand values and normalization") {
    CHECK(log_prior_partition(Partition::trivial(1), 1) == doctest::Approx(0.0));
    CHECK(log_prior_partition(Partition::trivial(2), 2) ==
          doctest::Approx(-std::log(2.0)));
    // normalization over all labeled partitions of N (each unlabeled
    // partition admits B! label assignments)
    for (int n : {2, 3, 5}) {
        double total = 0.0;
        oracle::for_each_partition(n, [&](const std::vector<int>& rgs) {
            Partition p(rgs);
            double labelings = 1;
            for (int i = 2; i <= p.num_groups(); ++i)
                labelings *= i;
            total += labelings * std::exp(log_prior_partition(p, n));
        });
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("flat partition prior") {
    CHECK(log_prior_partition_flat(1) == doctest::Approx(0.0));
    CHECK(log_prior_partition_flat(3) == doctest::Approx(-std::log(13.0)));
    // uniform over labelled partitions: a_4 of them
    double total = 0.0;
    oracle::for_each_partition(4, [&](const std::vector<int>& rgs) {
        int b = 0;
        for (int v : rgs)
            b = std::max(b, v + 1);
        double perms = 1;
        for (int i = 2; i <= b; ++i)
            perms *= i;
        total += perms * std::exp(log_prior_partition_flat(4));
    });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("micro SBM likelihood: hand case and normalization") {
    // two nodes, one group, one edge: P = 2!!/2^2 = 1/2
    Graph g(2);
    g.add_edge(0, 1);
    g.finalize();
    Partition b = Partition::trivial(2);
    EdgeCounts e = EdgeCounts::from(g, b);
    CHECK(log_likelihood_micro_sbm(g, b, e) == doctest::Approx(std::log(0.5)));

    // empty graph: all factors trivial
    Graph empty(3);
    empty.finalize();
    Partition be = Partition::trivial(3);
    CHECK(log_likelihood_micro_sbm(empty, be, EdgeCounts::from(empty, be)) ==
          doctest::Approx(0.0));

    // normalization: sum over all multigraphs at fixed (e, b) equals 1
    for (const std::vector<int>& labels :
         {std::vector<int>{0, 0}, {0, 0, 1}, {0, 1, 2}}) {
        int n = static_cast<int>(labels.size());
        Partition bb(labels);
        std::map<std::string, double> classes;
        oracle::for_each_multigraph(n, 3, [&](const auto& a) {
            Graph gg = oracle::graph_from_map(n, a);
            if (gg.num_nodes() < n)
                return; // keep the node count fixed
            EdgeCounts ee = EdgeCounts::from(gg, bb);
            if (ee.total() > 4)
                return; // complete classes only (max_mult bounds the rest)
            std::string key;
            for (int r = 0; r < ee.num_groups(); ++r)
                for (int s = r; s < ee.num_groups(); ++s)
                    key += std::to_string(ee.at(r, s)) + ",";
            classes[key] += std::exp(log_likelihood_micro_sbm(gg, bb, ee));
        });
        for (const auto& [key, total] : classes)
            CHECK_MESSAGE(total == doctest::Approx(1.0).epsilon(1e-9),
                          "class e=", key);
    }
}

TEST_CASE("micro DC likelihood normalizes at fixed degrees and counts") {
    std::vector<int> labels{0, 0, 1};
    Partition bb(labels);
    std::map<std::string, double> classes;
    oracle::for_each_multigraph(3, 3, [&](const auto& a) {
        Graph gg = oracle::graph_from_map(3, a);
        if (gg.num_nodes() < 3)
            return;
        EdgeCounts ee = EdgeCounts::from(gg, bb);
        if (ee.total() > 6)
            return;
        bool maxed = false;
        for (const auto& ed : gg.edges())
            if ((ed.u == ed.v ? ed.mult / 2 : ed.mult) >= 3)
                maxed = true; // class may be truncated by the multiplicity cap
        if (maxed)
            return;
        std::string key;
        for (int i = 0; i < 3; ++i)
            key += std::to_string(gg.degree(i)) + ";";
        for (int r = 0; r < ee.num_groups(); ++r)
            for (int s = r; s < ee.num_groups(); ++s)
                key += std::to_string(ee.at(r, s)) + ",";
        classes[key] += std::exp(log_likelihood_micro_dc(gg, bb, ee));
    });
    int checked = 0;
    for (const auto& [key, total] : classes) {
        // skip classes that other (capped) graphs could still contribute to:
        // a degree+count class is complete iff no compatible graph has a
        // capped multiplicity; with cap 3 these are the small-count classes
        if (total > 1.0 + 1e-9)
            FAIL("class exceeded 1: ", key);
        if (std::abs(total - 1.0) < 1e-9)
            ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("edge-count priors") {
    Graph g(4);
    g.add_edge(0, 1);
    g.finalize();
    Partition b1 = Partition::trivial(4);
    EdgeCounts e1 = EdgeCounts::from(g, b1);
    int64_t E = 1;
    // B = 1: E ln E - (E+1) ln(E+1)
    CHECK(log_prior_edge_counts_geometric(e1, E) ==
          doctest::Approx(E * std::log(static_cast<double>(E)) -
                          (E + 1) * std::log(E + 1.0)));
    // E = 0
    Graph empty(3);
    empty.finalize();
    EdgeCounts e0 = EdgeCounts::from(empty, Partition::trivial(3));
    CHECK(log_prior_edge_counts_geometric(e0, 0) == doctest::Approx(0.0));
    CHECK(log_prior_edge_counts_uniform(e0, 0) == doctest::Approx(0.0));
    // B = 2, E = 1: multiset(3, 1) = 3
    Partition b2({0, 0, 1, 1});
    EdgeCounts e2 = EdgeCounts::from(g, b2);
    CHECK(log_prior_edge_counts_uniform(e2, 1) == doctest::Approx(-std::log(3.0)));
    CHECK(log_prior_edge_counts_uniform(e1, 1) == doctest::Approx(0.0)); // B=1
}

TEST_CASE("ensemble equivalence: closed forms match decompositions") {
    Rng rng = make_rng(123);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        int n = 2 + static_cast<int>(rand_index(rng, 9));
        Graph g = oracle::random_multigraph(n, n + 2, rng);
        Partition b = oracle::random_partition(n, std::max(2, n / 2), rng);
        double lhs = log_marginal_sbm(g, b);
        double rhs = log_marginal_sbm_closed_form(g, b);
        REQUIRE(lhs == doctest::Approx(rhs).epsilon(1e-9));
        double dl = log_marginal_dc_sbm(g, b, DegreePrior::uniform);
        double dr = log_marginal_dc_sbm_closed_form(g, b);
        REQUIRE(dl == doctest::Approx(dr).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("label permutation invariance") {
    Rng rng = make_rng(5);
    Graph g = oracle::random_multigraph(10, 20, rng);
    Partition b = oracle::random_partition(10, 4, rng);
    int B = b.num_groups();
    std::vector<int> perm(B);
    for (int i = 0; i < B; ++i)
        perm[i] = (i + 1) % B;
    std::vector<int> permuted(10);
    for (int i = 0; i < 10; ++i)
        permuted[i] = perm[b[i]];
    Partition bp(permuted);
    for (ModelSpec spec : {ModelSpec{Variant::sbm, false, EdgePrior::geometric},
                           ModelSpec{Variant::dc, false, EdgePrior::geometric},
                           ModelSpec{Variant::dc_hist, false, EdgePrior::uniform}})
        CHECK(log_joint_flat(g, b, spec) ==
              doctest::Approx(log_joint_flat(g, bp, spec)).epsilon(1e-12));
}

TEST_CASE("nested level term: reductions and normalization") {
    Rng rng = make_rng(77);
    Graph g = oracle::random_multigraph(8, 14, rng);
    Partition b0 = oracle::random_partition(8, 4, rng);
    EdgeCounts e1 = EdgeCounts::from(g, b0);
    int b = e1.num_groups();
    // single upper group reduces to the uninformative multiset prior
    Partition top = Partition::trivial(b);
    EdgeCounts e2 = aggregate(e1, top);
    CHECK(log_nested_level(e1, top, e2) ==
          doctest::Approx(-log_multiset(static_cast<int64_t>(b) * (b + 1) / 2,
                                        g.num_edges())));
    // all-singleton upper level: multiset(1, m) = 1 throughout
    Partition singles = Partition::singletons(b);
    EdgeCounts e2s = aggregate(e1, singles);
    CHECK(log_nested_level(e1, singles, e2s) == doctest::Approx(0.0));
    // inconsistent aggregation rejected
    CHECK_THROWS(log_nested_level(e1, top, e2s));

    // normalization: sum over lower multigraphs compatible with fixed upper
    // counts equals 1 (3 items, partitioned {0,0,1})
    Partition bl({0, 0, 1});
    std::map<std::string, double> classes;
    oracle::for_each_multigraph(3, 4, [&](const auto& a) {
        Graph lower = oracle::graph_from_map(3, a);
        if (lower.num_nodes() < 3)
            return;
        EdgeCounts elow = EdgeCounts::from(lower, Partition::singletons(3));
        EdgeCounts eup = aggregate(elow, bl);
        if (eup.total() > 6)
            return;
        std::string key = std::to_string(eup.at(0, 0)) + "," +
                          std::to_string(eup.at(0, 1)) + "," +
                          std::to_string(eup.at(1, 1));
        classes[key] += std::exp(log_nested_level(elow, bl, eup));
    });
    int complete = 0;
    for (const auto& [key, total] : classes) {
        if (std::abs(total - 1.0) < 1e-9)
            ++complete;
        CHECK(total < 1.0 + 1e-9);
    }
    CHECK(complete >= 6);
}

TEST_CASE("nested joint: L=1 equals the flat uniform-prior joint") {
    Rng rng = make_rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        Graph g = oracle::random_multigraph(9, 16, rng);
        Partition b = oracle::random_partition(9, 4, rng);
        HierarchicalPartition h = HierarchicalPartition::from_flat(b);
        for (Variant v : {Variant::sbm, Variant::dc, Variant::dc_hist}) {
            ModelSpec nested{v, true, EdgePrior::geometric};
            ModelSpec flat{v, false, EdgePrior::uniform};
            CHECK(log_joint_nested(g, h, nested) ==
                  doctest::Approx(log_joint_flat(g, b, flat)).epsilon(1e-12));
        }
    }
}

TEST_CASE("clique battery description lengths match independent transcription") {
    // frozen values computed with an independent transcription of the
    // formulas (exact log-space arithmetic)
    Graph g = clique_battery(64, 10);
    ModelSpec flat{Variant::sbm, false, EdgePrior::geometric};
    CHECK(description_length(g, blocks_of(640, 20), flat) ==
          doctest::Approx(12725.02897325453).epsilon(1e-10));
    CHECK(description_length(g, blocks_of(640, 10), flat) ==
          doctest::Approx(13154.46122721624).epsilon(1e-10));
    CHECK(description_length(g, Partition::trivial(640), flat) ==
          doctest::Approx(21887.91563719542).epsilon(1e-10));

    ModelSpec nested{Variant::sbm, true, EdgePrior::geometric};
    // hierarchy: 64 cliques -> 8 groups of 8 -> 1
    std::vector<int> b1(64);
    for (int i = 0; i < 64; ++i)
        b1[i] = i / 8;
    HierarchicalPartition h(
        {blocks_of(640, 10), Partition(b1), Partition::trivial(8)});
    CHECK(description_length(g, h, nested) ==
          doctest::Approx(10100.084163530886).epsilon(1e-10));
    HierarchicalPartition h1 = HierarchicalPartition::from_flat(blocks_of(640, 10));
    CHECK(description_length(g, h1, nested) ==
          doctest::Approx(13146.762599001115).epsilon(1e-10));
}

TEST_CASE("partition prior approaches -N H(n) for balanced partitions") {
    // |ln P(b) + N H(n)| grows slowly (O(ln N))
    for (int n : {100, 1000, 10000}) {
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i)
            labels[i] = i % 4;
        Partition b(labels);
        double lp = log_prior_partition(b, n);
        double h = std::log(4.0); // balanced in 4 groups
        double resid = std::abs(lp + n * h);
        CHECK(resid < 12.0 * std::log(static_cast<double>(n)));
    }
}

TEST_CASE("description length unit conversion") {
    Graph g(2);
    g.add_edge(0, 1);
    g.finalize();
    Partition b = Partition::trivial(2);
    ModelSpec spec{Variant::sbm, false, EdgePrior::geometric};
    CHECK(description_length(g, b, spec) ==
          doctest::Approx(-log_joint_flat(g, b, spec) / LN2));
}
