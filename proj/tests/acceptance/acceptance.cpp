// Acceptance suite: one criterion per invocation (--criterion N), printing
// a single PASS/FAIL/BLOCKED line plus supporting detail. Criteria needing
// external datasets (football, polbooks, polblogs) run fully when the files
// are present under data/ and report BLOCKED otherwise; see README.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "sbm/bp.hpp"
#include "sbm/combinatorics.hpp"
#include "sbm/estimators.hpp"
#include "sbm/generators.hpp"
#include "sbm/graph.hpp"
#include "sbm/likelihood.hpp"
#include "sbm/mcmc.hpp"
#include "sbm/nested.hpp"
#include "sbm/overlap_mcmc.hpp"
#include "sbm/predict.hpp"

#include "../oracles.hpp"

using namespace sbm;

namespace {

std::string g_data_dir = "data";

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool have_dataset(const std::string& name, Graph* out) {
    std::string path = g_data_dir + "/" + name;
    if (!std::filesystem::exists(path))
        return false;
    *out = load_edge_list_file(path);
    return true;
}

int blocked(int k, const std::string& dataset) {
    std::printf("CRITERION %d: BLOCKED - dataset %s/%s not available in this "
                "environment (offline); place the file to run this criterion\n",
                k, g_data_dir.c_str(), dataset.c_str());
    return 2;
}

int report(int k, bool pass, const std::string& detail) {
    std::printf("CRITERION %d: %s - %s\n", k, pass ? "PASS" : "FAIL",
                detail.c_str());
    return pass ? 0 : 1;
}

McmcConfig base_config() {
    McmcConfig cfg;
    cfg.anneal_sweeps = 300;
    cfg.polish_sweeps = 100;
    cfg.merge_sweeps = 10;
    cfg.restarts = 1;
    return cfg;
}

Graph clique_battery(int cliques, int size) {
    Graph g(cliques * size);
    for (int c = 0; c < cliques; ++c)
        for (int i = 0; i < size; ++i)
            for (int j = i + 1; j < size; ++j)
                g.add_edge(size * c + i, size * c + j);
    g.finalize();
    return g;
}

Graph rewire_fully(const Graph& g, uint64_t seed) {
    Rng rng = make_rng(seed);
    int n = g.num_nodes();
    Graph out(n);
    for (int64_t e = 0; e < g.num_edges(); ++e) {
        int u = static_cast<int>(rand_index(rng, n));
        int v = static_cast<int>(rand_index(rng, n - 1));
        if (v >= u)
            ++v;
        out.add_edge(u, v);
    }
    out.finalize();
    return out;
}

// ---- criterion 1: football, nested DC, B = 10 --------------------------

int criterion_1() {
    Graph g;
    if (!have_dataset("football.edges", &g))
        return blocked(1, "football.edges");
    ModelSpec spec{Variant::dc, true, EdgePrior::geometric};
    McmcConfig cfg = base_config();
    int hits = 0;
    double worst_time = 0.0;
    for (int r = 0; r < 10; ++r) {
        double t0 = now_seconds();
        NestedFit fit = map_estimate_nested(g, spec, cfg, 1000 + r);
        double dt = now_seconds() - t0;
        worst_time = std::max(worst_time, dt);
        if (fit.bottom_groups == 10)
            ++hits;
        std::printf("  restart %d: B1=%d sigma=%.3f bits (%.1fs)\n", r,
                    fit.bottom_groups, fit.sigma_bits, dt);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "B1=10 in %d/10 restarts (need >=7), worst %.1fs (need <60s)",
                  hits, worst_time);
    return report(1, hits >= 7 && worst_time < 60.0, buf);
}

// ---- criterion 2: randomized football, B = 1 ---------------------------

int criterion_2() {
    Graph g;
    if (!have_dataset("football.edges", &g))
        return blocked(2, "football.edges");
    ModelSpec spec{Variant::sbm, false, EdgePrior::geometric};
    McmcConfig cfg = base_config();
    int hits = 0;
    for (int r = 0; r < 10; ++r) {
        Graph rg = rewire_fully(g, 500 + r);
        FlatFit fit = map_estimate_flat(rg, spec, cfg, 2000 + r);
        if (fit.num_groups == 1)
            ++hits;
        std::printf("  restart %d: B=%d\n", r, fit.num_groups);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "B=1 in %d/10 rewired fits (need 10/10)", hits);
    return report(2, hits == 10, buf);
}

// ---- criterion 3: 64 cliques of 10 --------------------------------------

int criterion_3() {
    Graph g = clique_battery(64, 10);
    ModelSpec flat{Variant::sbm, false, EdgePrior::geometric};
    ModelSpec nested{Variant::sbm, true, EdgePrior::geometric};
    McmcConfig cfg = base_config();
    int flat_hits = 0, nested_hits = 0;
    double worst_flat_sigma = 0, best_flat_sigma = 1e18;
    for (int r = 0; r < 10; ++r) {
        FlatFit f = map_estimate_flat(g, flat, cfg, 3000 + r);
        if (f.num_groups == 32)
            ++flat_hits;
        best_flat_sigma = std::min(best_flat_sigma, f.sigma_bits);
        worst_flat_sigma = std::max(worst_flat_sigma, f.sigma_bits);
        std::printf("  flat restart %d: B=%d sigma=%.1f\n", r, f.num_groups,
                    f.sigma_bits);
    }
    for (int r = 0; r < 10; ++r) {
        NestedFit f = map_estimate_nested(g, nested, cfg, 4000 + r);
        bool ok = f.bottom_groups == 64 && f.sigma_bits < best_flat_sigma;
        if (ok)
            ++nested_hits;
        std::printf("  nested restart %d: B1=%d sigma=%.1f\n", r, f.bottom_groups,
                    f.sigma_bits);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "flat B=32 in %d/10, nested B=64 with smaller sigma in %d/10 (need >=8 each)",
                  flat_hits, nested_hits);
    return report(3, flat_hits >= 8 && nested_hits >= 8, buf);
}

// ---- criterion 4: karate club -------------------------------------------

int criterion_4() {
    Graph g;
    if (!have_dataset("karate.edges", &g))
        return blocked(4, "karate.edges");
    double t0 = now_seconds();
    // documented variant: DC-SBM with the degree-frequency prior and the
    // uniform-multiset edge-count prior (the L=1 nested boundary case)
    ModelSpec spec{Variant::dc_hist, false, EdgePrior::uniform};
    double sigma = description_length(g, Partition::trivial(g.num_nodes()), spec);
    double dt = now_seconds() - t0;
    bool sigma_ok = std::abs(sigma - 321.3) <= 1.0 && dt < 1.0;

    // posterior mass on B > 1 under the plain DC-SBM with the same
    // microcanonical edge-count prior
    ModelSpec hist_spec{Variant::dc, false, EdgePrior::uniform};
    McmcConfig cfg = base_config();
    cfg.burn_in = 5000;
    cfg.sweeps = 120000;
    cfg.thinning = 10;
    int64_t total = 0, b_gt1 = 0;
    for (uint64_t seed : {8u, 9u, 10u}) { // independent chains
        Rng rng = make_rng(seed);
        FlatChain chain(g, Partition::trivial(g.num_nodes()), hist_spec, cfg);
        sample_posterior(chain, cfg, rng, [&](Chain& ch) {
            ++total;
            if (static_cast<FlatChain&>(ch).partition().num_groups() > 1)
                ++b_gt1;
        });
    }
    double mass = static_cast<double>(b_gt1) / total;
    bool mass_ok = mass >= 0.40 && mass <= 0.60;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "sigma(B=1)=%.3f bits (target 321.3 +/- 1, %.3fs); P(B>1)=%.3f "
                  "(target 0.5 +/- 0.1, %lld samples)",
                  sigma, dt, mass, static_cast<long long>(total));
    return report(4, sigma_ok && mass_ok, buf);
}

// ---- criterion 5: political books ---------------------------------------

int criterion_5() {
    Graph g;
    if (!have_dataset("polbooks.edges", &g))
        return blocked(5, "polbooks.edges");
    McmcConfig cfg = base_config();
    cfg.restarts = 10;
    ModelSpec dc{Variant::dc, false, EdgePrior::geometric};
    FlatFit non_overlap = map_estimate_flat(g, dc, cfg, 51);
    OverlapFit b3 = map_estimate_overlap(g, cfg, 3, 52);
    OverlapFit b2 = map_estimate_overlap(g, cfg, 2, 53);
    std::printf("  non-overlap: sigma=%.1f (target 1938)\n", non_overlap.sigma_bits);
    std::printf("  overlap B=3: sigma=%.1f (target 1931)\n", b3.sigma_bits);
    std::printf("  overlap B=2: sigma=%.1f (target 1946)\n", b2.sigma_bits);
    bool ok = std::abs(non_overlap.sigma_bits - 1938.0) <= 5.0 &&
              std::abs(b3.sigma_bits - 1931.0) <= 5.0 &&
              std::abs(b2.sigma_bits - 1946.0) <= 5.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "sigmas %.1f / %.1f / %.1f vs 1938 / 1931 / 1946 (+/-5)",
                  non_overlap.sigma_bits, b3.sigma_bits, b2.sigma_bits);
    return report(5, ok, buf);
}

// ---- criterion 6: political blogs ---------------------------------------

int criterion_6() {
    Graph g;
    if (!have_dataset("polblogs.edges", &g))
        return blocked(6, "polblogs.edges");
    McmcConfig cfg = base_config();
    cfg.restarts = 4;
    struct Case {
        ModelSpec spec;
        int b1;
        double sigma;
        const char* name;
    };
    std::vector<Case> cases{
        {{Variant::sbm, true, EdgePrior::geometric}, 42, 89938.0, "NDC"},
        {{Variant::dc, true, EdgePrior::geometric}, 23, 87162.0, "DC"},
        {{Variant::dc_hist, true, EdgePrior::geometric}, 20, 84890.0, "DC-hist"}};
    double t0 = now_seconds();
    bool ok = true;
    std::string detail;
    for (const Case& c : cases) {
        NestedFit fit = map_estimate_nested(g, c.spec, cfg, 61);
        bool this_ok = std::abs(fit.sigma_bits - c.sigma) <= 0.01 * c.sigma &&
                       std::abs(fit.bottom_groups - c.b1) <= 4;
        ok = ok && this_ok;
        char buf[120];
        std::snprintf(buf, sizeof buf, "%s: B1=%d sigma=%.0f (target %d/%.0f); ",
                      c.name, fit.bottom_groups, fit.sigma_bits, c.b1, c.sigma);
        detail += buf;
        std::printf("  %s\n", buf);
    }
    double dt = now_seconds() - t0;
    ok = ok && dt < 1800.0;
    detail += "runtime " + std::to_string(static_cast<int>(dt)) + "s";
    return report(6, ok, detail);
}

// ---- criterion 7: link prediction ---------------------------------------

int criterion_7() {
    Graph g;
    if (!have_dataset("football.edges", &g))
        return blocked(7, "football.edges");
    // candidate edges mirroring the two hypothetical missing links: one
    // inside a group of the MAP fit, one across groups
    ModelSpec spec{Variant::dc, true, EdgePrior::geometric};
    McmcConfig mc = base_config();
    mc.restarts = 3;
    NestedFit fit = map_estimate_nested(g, spec, mc, 71);
    const Partition& b = fit.hierarchy.level(0);
    int au = -1, av = -1, bu = -1, bv = -1;
    for (int i = 0; i < g.num_nodes() && bu < 0; ++i)
        for (int j = i + 1; j < g.num_nodes() && bu < 0; ++j)
            if (g.multiplicity(i, j) == 0 && b[i] == b[j]) {
                bu = i;
                bv = j;
            }
    for (int i = 0; i < g.num_nodes() && au < 0; ++i)
        for (int j = i + 1; j < g.num_nodes() && au < 0; ++j)
            if (g.multiplicity(i, j) == 0 && b[i] != b[j]) {
                au = i;
                av = j;
            }
    std::vector<EdgePerturbation> cands;
    cands.push_back({{{au, av, 1}}}); // inter-group (a)
    cands.push_back({{{bu, bv, 1}}}); // intra-group (b)
    PredictConfig cfg;
    cfg.mcmc = base_config();
    cfg.mcmc.burn_in = 1000;
    cfg.mcmc.sweeps = 5000;
    cfg.mcmc.thinning = 5;
    PredictionScore score = score_perturbations(g, cands, spec, cfg, 72);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "lambda_a=%.4f (+/-%.4f, target 0.013+/-0.02), lambda_b=%.4f "
                  "(+/-%.4f, target 0.987+/-0.02)",
                  score.lambda[0], score.std_error[0], score.lambda[1],
                  score.std_error[1]);
    bool ok = std::abs(score.lambda[0] - 0.013) <= 0.02 + 2 * score.std_error[0] &&
              std::abs(score.lambda[1] - 0.987) <= 0.02 + 2 * score.std_error[1];
    return report(7, ok, buf);
}

// ---- criterion 8: detectability transition ------------------------------

int criterion_8() {
    Rng rng = make_rng(88);
    BpConfig cfg;
    cfg.max_iter = 500;
    std::vector<double> below{3.0, 4.0, 4.5};
    std::vector<double> above{6.5, 7.5, 9.0};
    double t0 = now_seconds();
    auto pts_below = detectability_sweep(10000, 3, 3.0, below, 10, cfg, rng);
    auto pts_above = detectability_sweep(10000, 3, 3.0, above, 10, cfg, rng);
    double dt = now_seconds() - t0;
    bool ok = true;
    std::string detail;
    for (const auto& pt : pts_below) {
        char buf[80];
        std::snprintf(buf, sizeof buf, "eps=%.1f nmi=%.4f; ", pt.epsilon, pt.mean_nmi);
        detail += buf;
        std::printf("  eps=%.1f: nmi=%.4f +/- %.4f\n", pt.epsilon, pt.mean_nmi,
                    pt.stderr_nmi);
        ok = ok && pt.mean_nmi < 0.02;
    }
    for (const auto& pt : pts_above) {
        char buf[80];
        std::snprintf(buf, sizeof buf, "eps=%.1f nmi=%.4f; ", pt.epsilon, pt.mean_nmi);
        detail += buf;
        std::printf("  eps=%.1f: nmi=%.4f +/- %.4f\n", pt.epsilon, pt.mean_nmi,
                    pt.stderr_nmi);
        ok = ok && pt.mean_nmi > 0.3;
    }
    ok = ok && dt < 600.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "threshold 3*sqrt(3)=%.3f bracketed, %.0fs",
                  detectability_threshold(3, 3.0), dt);
    detail += buf;
    return report(8, ok, detail);
}

// ---- criterion 9: oracle suites ------------------------------------------

int criterion_9();

// ---- criterion 10: sweep time independent of B ---------------------------

int criterion_10() {
    // One graph, one edge set; only the number of groups changes. Sweeps
    // run at fixed B from random balanced partitions with the same small
    // proposal smoothing everywhere. Moderate degree keeps the
    // distinct-neighbor-group profile (the intrinsic unit of O(k_i) work)
    // comparable across B, so the measurement isolates the bookkeeping.
    Rng rng = make_rng(10);
    int n = 4000;
    double avg_k = 3.0;
    SymMatrix lam(1);
    lam.set(0, 0, avg_k / n);
    Graph g = sample_poisson_sbm(Partition::trivial(n), lam, rng);
    std::vector<int> bs{10, 100, 1000};
    std::vector<std::unique_ptr<BlockChain>> chains;
    double inf = std::numeric_limits<double>::infinity();
    for (int B : bs) {
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i)
            labels[i] = i % B;
        McmcConfig cfg;
        cfg.epsilon = 0.001;
        cfg.allow_new_groups = false;
        cfg.min_groups = B;
        cfg.max_groups = B;
        ModelSpec spec{Variant::dc, false, EdgePrior::geometric};
        chains.push_back(std::make_unique<BlockChain>(g, Partition(labels),
                                                      flat_local_model(spec), cfg));
        // settle into a fixed-B local optimum so every configuration measures
        // the same regime: full proposal + delta evaluation per node
        for (int s = 0; s < 10; ++s)
            chains.back()->sweep(inf, rng);
    }
    // interleaved repetitions, best-of: scheduler noise hits every B alike
    std::map<int, double> time_per_sweep;
    for (int B : bs)
        time_per_sweep[B] = 1e18;
    for (int rep = 0; rep < 6; ++rep) {
        for (size_t c = 0; c < bs.size(); ++c) {
            double t0 = now_seconds();
            for (int s = 0; s < 30; ++s)
                chains[c]->sweep(inf, rng);
            time_per_sweep[bs[c]] =
                std::min(time_per_sweep[bs[c]], (now_seconds() - t0) / 30);
        }
    }
    for (int B : bs)
        std::printf("  B=%d: E=%lld, %.3f ms/sweep\n", B,
                    static_cast<long long>(g.num_edges()),
                    1000 * time_per_sweep[B]);
    double lo = 1e18, hi = 0;
    for (const auto& [B, t] : time_per_sweep) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    double variation = hi / lo - 1.0;
    // scaling evidence: a per-move O(B) term would inflate B=1000 by orders
    // of magnitude, not tens of percent
    double b_scaling = time_per_sweep[1000] / time_per_sweep[10];
    char buf[180];
    std::snprintf(buf, sizeof buf,
                  "sweep time variation %.1f%% across B in {10,100,1000} (need <=20%%); "
                  "1000x groups cost %.2fx time",
                  100 * variation, b_scaling);
    return report(10, variation <= 0.20, buf);
}

} // namespace

// criterion 9 lives in acceptance_oracles.cpp
int run_criterion_9();

int main(int argc, char** argv) {
    int which = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            which = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--data-dir") == 0 && i + 1 < argc)
            g_data_dir = argv[++i];
    }
    if (which < 1 || which > 10) {
        std::fprintf(stderr, "usage: sbm_acceptance --criterion N [--data-dir D]\n");
        return 64;
    }
    switch (which) {
    case 1: return criterion_1();
    case 2: return criterion_2();
    case 3: return criterion_3();
    case 4: return criterion_4();
    case 5: return criterion_5();
    case 6: return criterion_6();
    case 7: return criterion_7();
    case 8: return criterion_8();
    case 9: return run_criterion_9();
    case 10: return criterion_10();
    }
    return 64;
}
