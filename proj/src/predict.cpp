#include "sbm/predict.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "sbm/combinatorics.hpp"
#include "sbm/nested.hpp"

namespace sbm {

Graph apply_perturbation(const Graph& g, const EdgePerturbation& pert) {
    Graph out(g.num_nodes());
    std::map<std::pair<int, int>, int64_t> mult;
    for (const Graph::Edge& e : g.edges())
        mult[{e.u, e.v}] = e.u == e.v ? e.mult / 2 : e.mult;
    for (const auto& en : pert.entries) {
        int u = std::min(en.u, en.v), v = std::max(en.u, en.v);
        int64_t d = en.delta;
        if (u == v) {
            if (d % 2 != 0)
                throw std::invalid_argument("perturbation: odd diagonal delta");
            d /= 2;
        }
        mult[{u, v}] += d;
        if (mult[{u, v}] < 0)
            throw std::invalid_argument("perturbation: negative multiplicity");
    }
    for (const auto& [uv, m] : mult)
        if (m > 0)
            out.add_edge(uv.first, uv.second, m);
    out.finalize();
    return out;
}

namespace {

double count_term(int a, int b, int64_t v) {
    return a == b ? log_double_factorial_even(v) : log_factorial(v);
}

// accumulated effect of a perturbation on one level of counts
struct LevelDeltas {
    std::map<std::pair<int, int>, int64_t> de; // canonical (r<=s)
    std::map<int, int64_t> dvol;
};

// Evaluates log P_G(A^O + dA | state) - log P_G(A^O | state) touching only
// the changed terms. Counts per level are prepared once per state.
class RatioEvaluator {
  public:
    RatioEvaluator(const Graph& g, const HierarchicalPartition& h,
                   const ModelSpec& spec)
        : g_(g), h_(h), spec_(spec) {
        counts_.push_back(EdgeCounts::from(g, h.level(0)));
        for (int l = 1; l < h.num_levels(); ++l)
            counts_.push_back(aggregate(counts_[l - 1], h.level(l)));
        if (spec_.variant == Variant::dc_hist)
            eta_ = degree_histogram(g, h.level(0));
    }

    double ratio(const EdgePerturbation& pert) const {
        const Partition& b0 = h_.level(0);
        int64_t dE = 0;
        std::map<std::pair<int, int>, int64_t> dA;
        std::map<int, int64_t> dk;
        for (const auto& en : pert.entries) {
            int u = std::min(en.u, en.v), v = std::max(en.u, en.v);
            dA[{u, v}] += en.delta;
            if (u == v) {
                dk[u] += en.delta;
                dE += en.delta / 2;
            } else {
                dk[u] += en.delta;
                dk[v] += en.delta;
                dE += en.delta;
            }
        }
        double d = 0.0;
        // adjacency factorials (denominator of the configuration count)
        LevelDeltas lv;
        for (const auto& [uv, dv] : dA) {
            if (dv == 0)
                continue;
            auto [u, v] = uv;
            int64_t a_old = g_.multiplicity(u, v);
            int64_t a_new = a_old + dv;
            if (a_new < 0)
                throw std::invalid_argument("perturbation: negative multiplicity");
            if (u == v)
                d -= log_double_factorial_even(a_new) - log_double_factorial_even(a_old);
            else
                d -= log_factorial(a_new) - log_factorial(a_old);
            int r = b0[u], s = b0[v];
            int rr = std::min(r, s), ss = std::max(r, s);
            int64_t de = (u == v || r == s) ? (u == v ? dv : 2 * dv) : dv;
            lv.de[{rr, ss}] += de;
            if (r == s) {
                lv.dvol[r] += u == v ? dv : 2 * dv;
            } else {
                lv.dvol[r] += dv;
                lv.dvol[s] += dv;
            }
        }
        // bottom-level count factorials
        for (const auto& [rs, dv] : lv.de) {
            if (dv == 0)
                continue;
            int64_t old_v = counts_[0].at(rs.first, rs.second);
            d += count_term(rs.first, rs.second, old_v + dv) -
                 count_term(rs.first, rs.second, old_v);
        }
        // volume/degree dependent terms
        if (spec_.variant == Variant::sbm) {
            for (const auto& [r, dv] : lv.dvol) {
                if (dv == 0)
                    continue;
                int64_t er = counts_[0].row_sum(r);
                double nr = b0.group_size(r);
                d += -(er + dv) * std::log(nr) + er * std::log(nr);
            }
        } else {
            for (const auto& [i, dki] : dk) {
                if (dki == 0)
                    continue;
                d += log_factorial(g_.degree(i) + dki) - log_factorial(g_.degree(i));
            }
            for (const auto& [r, dv] : lv.dvol) {
                if (dv == 0)
                    continue;
                int64_t er = counts_[0].row_sum(r);
                d += -log_factorial(er + dv) + log_factorial(er);
                if (spec_.variant == Variant::dc)
                    d += -log_multiset(b0.group_size(r), er + dv) +
                         log_multiset(b0.group_size(r), er);
                else
                    d += -log_restricted_partitions(er + dv, b0.group_size(r)) +
                         log_restricted_partitions(er, b0.group_size(r));
            }
            if (spec_.variant == Variant::dc_hist) {
                // eta changes: remove old degree, add new, per affected node
                std::map<std::pair<int, int64_t>, int64_t> deta;
                for (const auto& [i, dki] : dk) {
                    if (dki == 0)
                        continue;
                    --deta[{b0[i], g_.degree(i)}];
                    ++deta[{b0[i], g_.degree(i) + dki}];
                }
                for (const auto& [rk, dv] : deta) {
                    if (dv == 0)
                        continue;
                    auto it = eta_[rk.first].find(rk.second);
                    int64_t old_c = it == eta_[rk.first].end() ? 0 : it->second;
                    d += log_factorial(old_c + dv) - log_factorial(old_c);
                }
            }
        }
        // edge-count prior / hierarchy terms
        if (!spec_.nested) {
            int B = b0.num_groups();
            d += geometric_or_uniform(B, g_.num_edges() + dE) -
                 geometric_or_uniform(B, g_.num_edges());
        } else {
            // propagate deltas up; sizes are unchanged so only the touched
            // multiset terms move
            std::map<std::pair<int, int>, int64_t> cur = lv.de;
            for (int l = 1; l < h_.num_levels(); ++l) {
                const Partition& bl = h_.level(l);
                std::map<std::pair<int, int>, int64_t> up;
                for (const auto& [rs, dv] : cur) {
                    if (dv == 0)
                        continue;
                    int R = bl[rs.first], S = bl[rs.second];
                    int RR = std::min(R, S), SS = std::max(R, S);
                    int64_t mapped = dv;
                    if (rs.first != rs.second && R == S)
                        mapped = 2 * dv;
                    up[{RR, SS}] += mapped;
                }
                for (const auto& [RS, dv] : up) {
                    if (dv == 0)
                        continue;
                    int64_t old_v = counts_[l].at(RS.first, RS.second);
                    d += level_term(bl, RS.first, RS.second, old_v + dv) -
                         level_term(bl, RS.first, RS.second, old_v);
                }
                cur = std::move(up);
            }
        }
        return d;
    }

  private:
    double geometric_or_uniform(int B, int64_t E) const {
        if (spec_.edge_prior == EdgePrior::uniform)
            return -log_multiset(static_cast<int64_t>(B) * (B + 1) / 2, E);
        if (E == 0)
            return 0.0;
        double lam = 2.0 * E / (static_cast<double>(B) * (B + 1));
        return E * std::log(lam) - (E + B * (B + 1) / 2.0) * std::log1p(lam);
    }

    static double level_term(const Partition& bl, int a, int b, int64_t v) {
        if (v == 0)
            return 0.0;
        int64_t na = bl.group_size(a);
        if (a == b)
            return -log_multiset(na * (na + 1) / 2, v / 2);
        return -log_multiset(na * bl.group_size(b), v);
    }

    const Graph& g_;
    HierarchicalPartition h_;
    ModelSpec spec_;
    std::vector<EdgeCounts> counts_;
    DegreeHistogram eta_;
};

} // namespace

double log_likelihood_ratio(const Graph& g_obs, const Partition& b,
                            const ModelSpec& spec, const EdgePerturbation& pert) {
    std::vector<Partition> lv{b, Partition::trivial(b.num_groups())};
    HierarchicalPartition h(std::move(lv));
    ModelSpec flat = spec;
    flat.nested = false;
    return RatioEvaluator(g_obs, h, flat).ratio(pert);
}

double log_likelihood_ratio(const Graph& g_obs, const HierarchicalPartition& h,
                            const ModelSpec& spec, const EdgePerturbation& pert) {
    return RatioEvaluator(g_obs, h, spec).ratio(pert);
}

PredictionScore score_perturbations(const Graph& g_obs,
                                    const std::vector<EdgePerturbation>& candidates,
                                    const ModelSpec& spec,
                                    const PredictConfig& cfg, uint64_t seed) {
    if (candidates.empty())
        throw std::invalid_argument("score_perturbations: no candidates");
    for (const auto& c : candidates)
        (void)apply_perturbation(g_obs, c); // validates multiplicities

    // partitions sampled once from the observed-graph posterior and reused
    // across candidates (common random numbers)
    std::vector<std::vector<double>> ratios(candidates.size());
    Rng rng = make_rng(seed);
    auto handle_state = [&](const HierarchicalPartition& h) {
        RatioEvaluator ev(g_obs, h, spec);
        for (size_t c = 0; c < candidates.size(); ++c)
            ratios[c].push_back(ev.ratio(candidates[c]));
    };
    if (spec.nested) {
        McmcConfig init_cfg = cfg.mcmc;
        init_cfg.restarts = std::min(init_cfg.restarts, 3);
        NestedFit init = map_estimate_nested(g_obs, spec, init_cfg, seed);
        NestedChain chain(g_obs, init.hierarchy, spec, cfg.mcmc);
        sample_posterior(chain, cfg.mcmc, rng, [&](Chain& ch) {
            handle_state(static_cast<NestedChain&>(ch).hierarchy());
        });
    } else {
        Rng init_rng = spawn_rng(seed, 999);
        FlatChain chain = agglomerative_init(g_obs, spec, cfg.mcmc, init_rng);
        sample_posterior(chain, cfg.mcmc, rng, [&](Chain& ch) {
            const Partition& b = static_cast<FlatChain&>(ch).partition();
            std::vector<Partition> lv{b, Partition::trivial(b.num_groups())};
            handle_state(HierarchicalPartition(std::move(lv)));
        });
    }

    PredictionScore out;
    size_t nc = candidates.size();
    int64_t T = static_cast<int64_t>(ratios[0].size());
    out.samples = T;
    out.log_score.resize(nc);
    for (size_t c = 0; c < nc; ++c)
        out.log_score[c] = log_sum_exp(ratios[c]) - std::log(static_cast<double>(T));
    std::vector<double> weighted(nc);
    for (size_t c = 0; c < nc; ++c)
        weighted[c] = out.log_score[c] +
                      (cfg.log_noise ? (*cfg.log_noise)[c] : 0.0);
    double z = log_sum_exp(weighted);
    out.lambda.resize(nc);
    for (size_t c = 0; c < nc; ++c)
        out.lambda[c] = std::exp(weighted[c] - z);
    // batch-means standard error of lambda
    out.std_error.assign(nc, 0.0);
    int nb = std::min<int64_t>(cfg.batches, T);
    if (nb >= 2) {
        std::vector<std::vector<double>> lam_b(nc);
        for (int b = 0; b < nb; ++b) {
            int64_t lo = T * b / nb, hi = T * (b + 1) / nb;
            if (hi == lo)
                continue;
            std::vector<double> w(nc);
            for (size_t c = 0; c < nc; ++c) {
                std::vector<double> slice(ratios[c].begin() + lo,
                                          ratios[c].begin() + hi);
                w[c] = log_sum_exp(slice) - std::log(static_cast<double>(hi - lo)) +
                       (cfg.log_noise ? (*cfg.log_noise)[c] : 0.0);
            }
            double zb = log_sum_exp(w);
            for (size_t c = 0; c < nc; ++c)
                lam_b[c].push_back(std::exp(w[c] - zb));
        }
        for (size_t c = 0; c < nc; ++c) {
            double m = 0.0;
            for (double v : lam_b[c])
                m += v;
            m /= lam_b[c].size();
            double var = 0.0;
            for (double v : lam_b[c])
                var += (v - m) * (v - m);
            var /= std::max<size_t>(1, lam_b[c].size() - 1);
            out.std_error[c] = std::sqrt(var / lam_b[c].size());
        }
    }
    return out;
}

} // namespace sbm
