#include "sbm/bp.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "sbm/estimators.hpp"

namespace sbm {

namespace {

// ln-space is unnecessary here: messages are normalized every update and
// the neighbor terms are O(N lambda) = O(<k>).
void normalize(double* v, int B) {
    double s = 0.0;
    for (int r = 0; r < B; ++r)
        s += v[r];
    if (s <= 0.0) {
        for (int r = 0; r < B; ++r)
            v[r] = 1.0 / B;
        return;
    }
    for (int r = 0; r < B; ++r)
        v[r] /= s;
}

} // namespace

BpState bp_iterate(const Graph& g_in, const BpParams& params, const BpConfig& cfg,
                   Rng& rng) {
    BpState st;
    if (!g_in.is_simple()) {
        std::cerr << "bp: collapsing multigraph to a simple graph\n";
        st.graph = g_in.simplified();
    } else {
        st.graph = g_in;
    }
    const Graph& g = st.graph;
    int B = params.num_groups();
    int n = g.num_nodes();
    double N = static_cast<double>(n);
    int64_t H = g.num_half_edges();

    st.num_groups = B;
    st.messages.assign(static_cast<size_t>(H) * B, 1.0 / B);
    st.marginals.assign(static_cast<size_t>(n) * B, 1.0 / B);
    st.field.assign(B, 0.0);
    st.damping_used = cfg.damping;
    if (B == 1) {
        st.converged = true;
        // h_1 = sum_i lambda_11 = N lambda_11
        st.field[0] = N * params.lambda(0, 0);
        return st;
    }

    if (!cfg.uniform_init) {
        std::gamma_distribution<double> gamma1(1.0, 1.0);
        for (int64_t h = 0; h < H; ++h) {
            for (int r = 0; r < B; ++r)
                st.messages[h * B + r] = gamma1(rng) + 1e-12;
            normalize(&st.messages[h * B], B);
        }
    }

    // c_rs = N lambda_rs
    std::vector<double> c(static_cast<size_t>(B) * B);
    for (int r = 0; r < B; ++r)
        for (int s = 0; s < B; ++s)
            c[r * B + s] = N * params.lambda(r, s);

    auto compute_marginal = [&](int i, double* out) {
        for (int r = 0; r < B; ++r)
            out[r] = std::log(params.gamma[r]) - st.field[r];
        for (int64_t h : g.incident_half_edges(i)) {
            const double* m = &st.messages[(h ^ 1) * B];
            for (int r = 0; r < B; ++r) {
                double t = 0.0;
                for (int s = 0; s < B; ++s)
                    t += c[r * B + s] * m[s];
                out[r] += std::log(std::max(t, 1e-300));
            }
        }
        double mx = *std::max_element(out, out + B);
        for (int r = 0; r < B; ++r)
            out[r] = std::exp(out[r] - mx);
        normalize(out, B);
    };

    auto refresh_marginals = [&] {
        for (int i = 0; i < n; ++i)
            compute_marginal(i, &st.marginals[static_cast<size_t>(i) * B]);
    };
    // h_r = sum_i sum_s lambda_rs psi_s^i, relaxed at 1/2 to keep the
    // field-marginal loop from oscillating (same fixed point); returns the
    // field movement so convergence covers both messages and field
    auto update_field = [&]() -> double {
        std::vector<double> tot(B, 0.0);
        for (int i = 0; i < n; ++i)
            for (int s = 0; s < B; ++s)
                tot[s] += st.marginals[static_cast<size_t>(i) * B + s];
        double moved = 0.0;
        for (int r = 0; r < B; ++r) {
            double h = 0.0;
            for (int s = 0; s < B; ++s)
                h += params.lambda(r, s) * tot[s];
            moved = std::max(moved, std::abs(h - st.field[r]));
            st.field[r] = 0.5 * st.field[r] + 0.5 * h;
        }
        return moved;
    };
    // warm start: assign the field implied by the initial marginals in one
    // undamped step, then keep marginals consistent with it
    refresh_marginals();
    {
        std::vector<double> tot(B, 0.0);
        for (int i = 0; i < n; ++i)
            for (int s = 0; s < B; ++s)
                tot[s] += st.marginals[static_cast<size_t>(i) * B + s];
        for (int r = 0; r < B; ++r) {
            double h = 0.0;
            for (int s = 0; s < B; ++s)
                h += params.lambda(r, s) * tot[s];
            st.field[r] = h;
        }
    }
    refresh_marginals();

    std::vector<double> fresh(B), lt(B);
    std::vector<double> prev_residual_window;
    double damping = cfg.damping;
    std::vector<double> sync_buffer;
    for (st.iterations = 1; st.iterations <= cfg.max_iter; ++st.iterations) {
        double max_change = 0.0;
        const std::vector<double>* read = &st.messages;
        if (cfg.synchronous) {
            sync_buffer = st.messages;
            read = &sync_buffer;
        }
        for (int i = 0; i < n; ++i) {
            const auto& inc = g.incident_half_edges(i);
            int d = static_cast<int>(inc.size());
            if (d == 0)
                continue;
            // log neighbor terms, with prefix/suffix sums over neighbors
            std::vector<double> lts(static_cast<size_t>(d) * B);
            for (int a = 0; a < d; ++a) {
                const double* m = &(*read)[(inc[a] ^ 1) * B];
                for (int r = 0; r < B; ++r) {
                    double t = 0.0;
                    for (int s = 0; s < B; ++s)
                        t += c[r * B + s] * m[s];
                    lts[static_cast<size_t>(a) * B + r] = std::log(std::max(t, 1e-300));
                }
            }
            std::vector<double> suffix(static_cast<size_t>(d + 1) * B, 0.0);
            for (int a = d - 1; a >= 0; --a)
                for (int r = 0; r < B; ++r)
                    suffix[static_cast<size_t>(a) * B + r] =
                        suffix[static_cast<size_t>(a + 1) * B + r] +
                        lts[static_cast<size_t>(a) * B + r];
            std::vector<double> prefix(B, 0.0);
            for (int a = 0; a < d; ++a) {
                int64_t h = inc[a];
                for (int r = 0; r < B; ++r)
                    fresh[r] = std::log(params.gamma[r]) - st.field[r] + prefix[r] +
                               suffix[static_cast<size_t>(a + 1) * B + r];
                double mx = *std::max_element(fresh.begin(), fresh.end());
                for (int r = 0; r < B; ++r)
                    fresh[r] = std::exp(fresh[r] - mx);
                normalize(fresh.data(), B);
                double* cur = &st.messages[h * B];
                for (int r = 0; r < B; ++r) {
                    double nv = damping * cur[r] + (1.0 - damping) * fresh[r];
                    max_change = std::max(max_change, std::abs(nv - cur[r]));
                    cur[r] = nv;
                }
                for (int r = 0; r < B; ++r)
                    prefix[r] += lts[static_cast<size_t>(a) * B + r];
            }
        }
        refresh_marginals();
        double field_moved = update_field();
        st.residual = std::max(max_change, field_moved);
        if (st.residual < cfg.tol) {
            st.converged = true;
            break;
        }
        // oscillation fallback: residual not shrinking for a while
        prev_residual_window.push_back(max_change);
        if (damping == 0.0 && prev_residual_window.size() >= 50) {
            size_t m = prev_residual_window.size();
            if (prev_residual_window[m - 1] > 0.5 * prev_residual_window[m - 50]) {
                damping = 0.5;
                st.damping_used = damping;
            }
        }
    }
    refresh_marginals(); // consistent with the final field
    return st;
}

Partition bp_argmax_partition(const BpState& st, int n_nodes) {
    int B = st.num_groups;
    std::vector<int> labels(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        int arg = 0;
        double best = st.marginals[static_cast<size_t>(i) * B];
        for (int r = 1; r < B; ++r) {
            double v = st.marginals[static_cast<size_t>(i) * B + r];
            if (v > best) {
                best = v;
                arg = r;
            }
        }
        labels[i] = arg;
    }
    std::vector<int> remap(B, -1);
    int next = 0;
    for (int& l : labels) {
        if (remap[l] < 0)
            remap[l] = next++;
        l = remap[l];
    }
    return Partition(std::move(labels));
}

double bethe_free_energy(const BpParams& params, const BpState& st) {
    const Graph& g = st.graph;
    int B = st.num_groups;
    double N = static_cast<double>(g.num_nodes());
    double F = 0.0;
    // node terms: Z^i = sum_r gamma_r e^{-h_r} prod_{j in di} sum_s c_rs psi_s^{j->i}
    for (int i = 0; i < g.num_nodes(); ++i) {
        std::vector<double> lz(B);
        for (int r = 0; r < B; ++r)
            lz[r] = std::log(params.gamma[r]) - st.field[r];
        for (int64_t h : g.incident_half_edges(i)) {
            for (int r = 0; r < B; ++r) {
                double t = 0.0;
                for (int s = 0; s < B; ++s)
                    t += N * params.lambda(r, s) * st.message(h ^ 1, s);
                lz[r] += std::log(std::max(t, 1e-300));
            }
        }
        double mx = *std::max_element(lz.begin(), lz.end());
        double z = 0.0;
        for (int r = 0; r < B; ++r)
            z += std::exp(lz[r] - mx);
        F -= mx + std::log(z);
    }
    // edge terms: Z^{ij} = sum_rs N lambda_rs psi_r^{i->j} psi_s^{j->i}
    for (int64_t t = 0; t < g.num_instances(); ++t) {
        int64_t h = 2 * t;
        double z = 0.0;
        for (int r = 0; r < B; ++r)
            for (int s = 0; s < B; ++s)
                z += N * params.lambda(r, s) * st.message(h, r) * st.message(h ^ 1, s);
        F += std::log(std::max(z, 1e-300));
    }
    F -= static_cast<double>(g.num_edges());
    return F;
}

double detectability_threshold(int num_groups, double avg_degree) {
    return num_groups * std::sqrt(avg_degree);
}

std::vector<DetectabilityPoint> detectability_sweep(
    int n_nodes, int num_groups, double avg_degree,
    const std::vector<double>& epsilons, int replicates, const BpConfig& cfg,
    Rng& rng) {
    std::vector<DetectabilityPoint> out;
    for (double eps : epsilons) {
        DetectabilityPoint pt;
        pt.epsilon = eps;
        std::vector<double> nmis;
        for (int rep = 0; rep < replicates; ++rep) {
            PlantedPartitionParams pp{num_groups, n_nodes, avg_degree, eps};
            PlantedSample sample = sample_planted_partition(pp, rng);
            BpParams params;
            params.lambda = SymMatrix(num_groups);
            for (int r = 0; r < num_groups; ++r)
                for (int s = r; s < num_groups; ++s)
                    params.lambda.set(r, s, r == s ? pp.lambda_in() : pp.lambda_out());
            params.gamma.assign(num_groups, 1.0 / num_groups);
            BpState st = bp_iterate(sample.graph, params, cfg, rng);
            if (st.converged)
                ++pt.converged_runs;
            Partition inferred = bp_argmax_partition(st, n_nodes);
            nmis.push_back(nmi(inferred, sample.partition));
        }
        double mean = std::accumulate(nmis.begin(), nmis.end(), 0.0) / nmis.size();
        double var = 0.0;
        for (double v : nmis)
            var += (v - mean) * (v - mean);
        var /= std::max<size_t>(1, nmis.size() - 1);
        pt.mean_nmi = mean;
        pt.stderr_nmi = std::sqrt(var / nmis.size());
        out.push_back(pt);
    }
    return out;
}

} // namespace sbm
