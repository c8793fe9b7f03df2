#include "sbm/generators.hpp"

#include <cmath>
#include <stdexcept>

namespace sbm {

double PlantedPartitionParams::lambda_in() const {
    // <k> = N (lambda_in + (B-1) lambda_out) / B
    return (avg_degree + epsilon * (num_groups - 1) / num_groups) / num_nodes;
}

double PlantedPartitionParams::lambda_out() const {
    double lo = (avg_degree - epsilon / num_groups) / num_nodes;
    if (lo < 0)
        throw std::invalid_argument(
            "planted partition: epsilon too large for this average degree");
    return lo;
}

Graph sample_bernoulli_sbm(const Partition& b, const SymMatrix& p, Rng& rng) {
    int n = b.num_items();
    for (int r = 0; r < p.size(); ++r)
        for (int s = 0; s < p.size(); ++s)
            if (p(r, s) < 0.0 || p(r, s) > 1.0)
                throw std::invalid_argument("sample_bernoulli_sbm: p outside [0,1]");
    Graph g(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rand_real(rng) < p(b[i], b[j]))
                g.add_edge(i, j);
    g.finalize();
    return g;
}

namespace {

// members of each group, for uniform endpoint assignment
std::vector<std::vector<int>> group_members(const Partition& b) {
    std::vector<std::vector<int>> m(b.num_groups());
    for (int i = 0; i < b.num_items(); ++i)
        m[b[i]].push_back(i);
    return m;
}

int64_t sample_poisson(Rng& rng, double mean) {
    if (mean <= 0.0)
        return 0;
    return std::poisson_distribution<int64_t>(mean)(rng);
}

} // namespace

Graph sample_poisson_sbm(const Partition& b, const SymMatrix& lambda, Rng& rng) {
    // Block-wise sampling: the total count between groups r,s is Poisson
    // with the summed rate, and each edge picks its endpoints uniformly;
    // this matches per-pair Poisson sampling exactly.
    int n = b.num_items();
    int B = b.num_groups();
    if (lambda.size() != B)
        throw std::invalid_argument("sample_poisson_sbm: lambda size mismatch");
    auto members = group_members(b);
    Graph g(n);
    for (int r = 0; r < B; ++r) {
        int64_t nr = members[r].size();
        for (int s = r; s < B; ++s) {
            int64_t ns = members[s].size();
            if (r == s) {
                int64_t off = sample_poisson(rng, lambda(r, r) * nr * (nr - 1) / 2.0);
                for (int64_t t = 0; t < off; ++t) {
                    int64_t i = rand_index(rng, nr);
                    int64_t j = rand_index(rng, nr - 1);
                    if (j >= i)
                        ++j;
                    g.add_edge(members[r][i], members[r][j]);
                }
                int64_t loops = sample_poisson(rng, lambda(r, r) * nr / 2.0);
                for (int64_t t = 0; t < loops; ++t) {
                    int64_t i = rand_index(rng, nr);
                    g.add_edge(members[r][i], members[r][i]);
                }
            } else {
                int64_t cnt = sample_poisson(rng, lambda(r, s) * nr * ns);
                for (int64_t t = 0; t < cnt; ++t)
                    g.add_edge(members[r][rand_index(rng, nr)],
                               members[s][rand_index(rng, ns)]);
            }
        }
    }
    g.finalize();
    return g;
}

Graph sample_dc_sbm(const Partition& b, const SymMatrix& lambda,
                    const std::vector<double>& theta, Rng& rng) {
    int n = b.num_items();
    int B = b.num_groups();
    std::vector<double> group_theta(B, 0.0);
    for (int i = 0; i < n; ++i) {
        if (theta[i] < 0)
            throw std::invalid_argument("sample_dc_sbm: negative theta");
        group_theta[b[i]] += theta[i];
    }
    for (int r = 0; r < B; ++r)
        if (std::abs(group_theta[r] - 1.0) > 1e-8)
            throw std::invalid_argument("sample_dc_sbm: theta not normalized per group");
    auto members = group_members(b);
    std::vector<std::discrete_distribution<int>> pick(B);
    for (int r = 0; r < B; ++r) {
        std::vector<double> w;
        for (int i : members[r])
            w.push_back(theta[i]);
        pick[r] = std::discrete_distribution<int>(w.begin(), w.end());
    }
    // Sum over i<j of theta_i theta_j lambda + loop halves gives a total
    // rate lambda_rs (or lambda_rr/2) per block; endpoints sampled by theta.
    Graph g(n);
    for (int r = 0; r < B; ++r) {
        for (int s = r; s < B; ++s) {
            if (r == s) {
                int64_t cnt = sample_poisson(rng, lambda(r, r) / 2.0);
                for (int64_t t = 0; t < cnt; ++t) {
                    int i = members[r][pick[r](rng)];
                    int j = members[r][pick[r](rng)];
                    g.add_edge(i, j); // i == j is a self-loop
                }
            } else {
                int64_t cnt = sample_poisson(rng, lambda(r, s));
                for (int64_t t = 0; t < cnt; ++t)
                    g.add_edge(members[r][pick[r](rng)], members[s][pick[s](rng)]);
            }
        }
    }
    g.finalize();
    return g;
}

OverlapSample sample_overlapping_sbm(const std::vector<std::vector<double>>& kappa,
                                     const SymMatrix& lambda, int n_nodes,
                                     Rng& rng) {
    int B = lambda.size();
    std::vector<std::discrete_distribution<int>> pick(B);
    for (int r = 0; r < B; ++r) {
        std::vector<double> w(n_nodes);
        double tot = 0.0;
        for (int i = 0; i < n_nodes; ++i) {
            w[i] = kappa[i][r];
            tot += w[i];
        }
        if (std::abs(tot - 1.0) > 1e-8)
            throw std::invalid_argument("sample_overlapping_sbm: kappa column not normalized");
        pick[r] = std::discrete_distribution<int>(w.begin(), w.end());
    }
    struct Stub { int i, j, r, s; };
    std::vector<Stub> stubs;
    for (int r = 0; r < B; ++r) {
        for (int s = r; s < B; ++s) {
            int64_t cnt = sample_poisson(rng, r == s ? lambda(r, r) / 2.0
                                                     : lambda(r, s));
            for (int64_t t = 0; t < cnt; ++t) {
                int i = pick[r](rng);
                int j = pick[s](rng);
                stubs.push_back({i, j, r, s});
            }
        }
    }
    Graph g(n_nodes);
    for (const Stub& st : stubs)
        g.add_edge(st.i, st.j);
    g.finalize();
    // map instances back to labels: group stubs per unique pair, assign in order
    std::vector<std::vector<std::pair<int, int>>> per_pair(g.edges().size());
    {
        // pair index lookup
        std::map<std::pair<int, int>, int> idx;
        for (size_t p = 0; p < g.edges().size(); ++p)
            idx[{g.edges()[p].u, g.edges()[p].v}] = static_cast<int>(p);
        for (const Stub& st : stubs) {
            int u = std::min(st.i, st.j), v = std::max(st.i, st.j);
            // labels follow the node order of the stored pair
            int lu = (u == st.i) ? st.r : st.s;
            int lv = (u == st.i) ? st.s : st.r;
            per_pair[idx.at({u, v})].emplace_back(lu, lv);
        }
    }
    std::vector<int> labels(g.num_half_edges());
    std::vector<int64_t> cursor(g.edges().size(), 0);
    for (int64_t t = 0; t < g.num_instances(); ++t) {
        int p = g.instance_pair(t);
        auto [lu, lv] = per_pair[p][cursor[p]++];
        labels[2 * t] = lu;
        labels[2 * t + 1] = lv;
    }
    // drop unused labels (keep contiguity)
    std::vector<int> remap(B, -1);
    int next = 0;
    for (int l : labels)
        if (remap[l] < 0)
            remap[l] = next++;
    for (int& l : labels)
        l = remap[l];
    OverlapSample out{std::move(g), {}};
    out.labeling = HalfEdgeLabeling(out.graph, std::move(labels));
    return out;
}

PlantedSample sample_planted_partition(const PlantedPartitionParams& params,
                                       Rng& rng) {
    double li = params.lambda_in();
    double lo = params.lambda_out(); // validates feasibility
    std::vector<int> memb(params.num_nodes);
    for (int& m : memb)
        m = static_cast<int>(rand_index(rng, params.num_groups));
    // keep labels contiguous even when a group draws no members
    std::vector<int> remap(params.num_groups, -1);
    int next = 0;
    for (int m : memb)
        if (remap[m] < 0)
            remap[m] = next++;
    for (int& m : memb)
        m = remap[m];
    Partition b(std::move(memb));
    SymMatrix lambda(b.num_groups());
    for (int r = 0; r < b.num_groups(); ++r)
        for (int s = r; s < b.num_groups(); ++s)
            lambda.set(r, s, r == s ? li : lo);
    PlantedSample out{sample_poisson_sbm(b, lambda, rng), std::move(b)};
    return out;
}

} // namespace sbm
