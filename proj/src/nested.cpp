#include "sbm/nested.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sbm/combinatorics.hpp"

namespace sbm {

Graph multigraph_from_counts(const EdgeCounts& e) {
    Graph g(e.num_groups());
    for (int r = 0; r < e.num_groups(); ++r)
        for (const auto& [s, v] : e.row(r)) {
            if (s > r)
                g.add_edge(r, s, v);
            else if (s == r)
                g.add_edge(r, r, v / 2); // A_rr = e_rr; add_edge takes loops
        }
    g.finalize();
    return g;
}

namespace {

LocalModel bottom_local_model(const ModelSpec& spec) {
    LocalModel m = flat_local_model(spec);
    m.count_prior = CountPrior::none; // the hierarchy prices the edge counts
    return m;
}

LocalModel upper_local_model() {
    return {LevelKind::upper, PriorMode::eq11_if_nontrivial, CountPrior::none};
}

} // namespace

NestedChain::NestedChain(const Graph& g, HierarchicalPartition h,
                         const ModelSpec& spec, McmcConfig cfg)
    : spec_(spec), cfg_(cfg) {
    h.validate();
    levels_.push_back(std::make_unique<BlockChain>(g, h.level(0),
                                                   bottom_local_model(spec), cfg));
    for (int l = 1; l < h.num_levels(); ++l)
        levels_.push_back(std::make_unique<BlockChain>(
            multigraph_from_counts(levels_[l - 1]->counts()), h.level(l),
            upper_local_model(), cfg));
    if (levels_.back()->num_groups() != 1)
        append_trivial_level();
    graph_fresh_.assign(levels_.size(), true);
}

NestedChain::NestedChain(const NestedChain& o)
    : spec_(o.spec_), cfg_(o.cfg_), graph_fresh_(o.graph_fresh_) {
    levels_.reserve(o.levels_.size());
    for (const auto& l : o.levels_)
        levels_.push_back(std::make_unique<BlockChain>(*l));
}

void NestedChain::append_trivial_level() {
    const BlockChain& top = *levels_.back();
    levels_.push_back(std::make_unique<BlockChain>(
        multigraph_from_counts(top.counts()),
        Partition::trivial(top.num_groups()), upper_local_model(), cfg_));
}

double NestedChain::closing_term() const {
    // the virtual level above the stored top: uniform multigraph prior for
    // the top counts; zero when the top is already trivial
    int64_t b = levels_.back()->num_groups();
    int64_t E = levels_[0]->graph().num_edges();
    if (b == 1)
        return 0.0;
    return -log_multiset(b * (b + 1) / 2, E);
}

double NestedChain::log_joint() const {
    double lp = closing_term();
    for (const auto& l : levels_)
        lp += l->local_log_joint();
    return lp;
}

double NestedChain::recompute_log_joint() const {
    double lp = closing_term();
    for (const auto& l : levels_)
        lp += l->recompute_local_log_joint();
    return lp;
}

HierarchicalPartition NestedChain::hierarchy() const {
    std::vector<Partition> lv;
    for (const auto& l : levels_) {
        lv.push_back(l->partition());
        if (l->partition().num_groups() == 1)
            break; // the rest is trivial
    }
    if (lv.back().num_groups() != 1)
        lv.push_back(Partition::trivial(lv.back().num_groups()));
    return HierarchicalPartition(std::move(lv));
}

void NestedChain::materialize_level(int l) {
    if (l == 0 || graph_fresh_[l])
        return;
    levels_[l]->reset_graph(multigraph_from_counts(levels_[l - 1]->counts()));
    graph_fresh_[l] = true;
}

NestedChain::LevelMove NestedChain::apply_level_move(int level, int item, int to) {
    LevelMove out;
    BlockChain& bc = *levels_[level];
    int from = bc.partition()[item];
    auto res = bc.apply_move(item, to);
    out.delta = res.delta;
    out.event = res.event;
    if (res.event.created_group && res.event.removed_group)
        throw std::logic_error("apply_level_move: singleton-to-fresh moves are no-ops");
    for (size_t m = level + 1; m < graph_fresh_.size(); ++m)
        graph_fresh_[m] = false;

    // domain surgery above this level
    int up = level + 1;
    if (res.event.created_group && up < num_levels()) {
        // attach the fresh group to the meta-group of the node's old group
        int parent = levels_[up]->partition()[from];
        out.delta += levels_[up]->insert_item(parent);
    }
    if (res.event.created_group && up == num_levels()) {
        // top split: extend the hierarchy with a trivial level (its local
        // term equals the closing term it replaces, so the joint is
        // unchanged by the append itself)
        append_trivial_level();
        graph_fresh_.push_back(true);
    }

    // propagate count deltas upward
    std::vector<std::tuple<int, int, int64_t>> deltas = res.count_deltas;
    std::vector<std::tuple<int, int, int64_t>> next;
    for (int m = level + 1; m < num_levels(); ++m) {
        if (deltas.empty())
            break;
        out.delta += levels_[m]->apply_graph_delta(deltas, next);
        deltas.swap(next);
    }

    // group death cascade
    if (res.event.removed_group && up < num_levels()) {
        int dead_item = from;
        for (int m = up; m < num_levels(); ++m) {
            Partition::MoveEvent gev;
            out.delta += levels_[m]->remove_item_swap(dead_item, gev);
            if (!gev.removed_group)
                break;
            dead_item = gev.from;
        }
    }
    return out;
}

bool NestedChain::mh_level_step(int level, int item, double beta, Rng& rng,
                                SweepStats& st) {
    ++st.proposals;
    BlockChain& bc = *levels_[level];
    const McmcConfig& lcfg = bc.config();
    int from = bc.partition()[item];
    int prop = bc.propose(item, rng);
    if (prop == from) {
        ++st.accepted;
        return true;
    }
    int B = bc.num_groups();
    bool dying = bc.partition().group_size(from) == 1;
    if (prop == B && dying) {
        ++st.accepted;
        return true;
    }
    if (dying && (B <= lcfg.min_groups || !lcfg.allow_new_groups))
        return false;
    double pf = bc.proposal_probability(item, prop);
    LevelMove mv = apply_level_move(level, item, prop);
    int rev_target = mv.event.removed_group ? bc.num_groups() : from;
    double pr = bc.proposal_probability(item, rev_target);
    double ln_a;
    if (std::isinf(beta))
        ln_a = mv.delta > 0 ? 1.0
                            : (mv.delta < 0 ? -std::numeric_limits<double>::infinity()
                                            : std::log(pr / pf));
    else
        ln_a = beta * mv.delta + std::log(pr) - std::log(pf);
    if (ln_a >= 0 || std::log(rand_real(rng)) < ln_a) {
        ++st.accepted;
        return true;
    }
    apply_level_move(level, item, rev_target);
    return false;
}

SweepStats NestedChain::sweep(double beta, Rng& rng) {
    SweepStats st;
    int L = num_levels();
    int level = static_cast<int>(rand_index(rng, L));
    materialize_level(level);
    BlockChain& bc = *levels_[level];
    {
        McmcConfig lcfg = cfg_;
        if (level > 0) { // group-count constraints apply to the bottom level
            lcfg.min_groups = 1;
            lcfg.max_groups = std::numeric_limits<int>::max();
        }
        bc.config() = lcfg;
    }
    std::vector<int> order(bc.partition().num_items());
    for (size_t i = 0; i < order.size(); ++i)
        order[i] = static_cast<int>(i);
    std::shuffle(order.begin(), order.end(), rng);
    for (int item : order)
        mh_level_step(level, item, beta, rng, st);
    return st;
}

void NestedChain::check_consistency() const {
    // hierarchy domains line up and counts chain correctly
    for (int l = 1; l < num_levels(); ++l) {
        if (levels_[l]->partition().num_items() != levels_[l - 1]->num_groups())
            throw std::logic_error("NestedChain: level domain mismatch");
        EdgeCounts expect =
            aggregate(levels_[l - 1]->counts(), levels_[l]->partition());
        if (!(expect == levels_[l]->counts()))
            throw std::logic_error("NestedChain: propagated counts diverged");
    }
    double fresh = recompute_log_joint();
    if (std::abs(fresh - log_joint()) > 1e-6 * std::max(1.0, std::abs(fresh)))
        throw std::logic_error("NestedChain: cached log-joint diverged");
}

// Builds the hierarchy above a fixed bottom partition, level by level: each
// upper level runs the agglomerative search on the multigraph of the counts
// below it, under the uniform-multigraph objective closed by the one-group
// level above.
HierarchicalPartition grow_hierarchy(const Graph& g, const Partition& bottom,
                                     const McmcConfig& cfg, Rng& rng) {
    std::vector<Partition> levels{bottom};
    EdgeCounts e = EdgeCounts::from(g, bottom);
    LocalModel upper{LevelKind::upper, PriorMode::eq11_if_nontrivial,
                     CountPrior::uniform};
    McmcConfig lcfg = cfg;
    lcfg.min_groups = 1;
    lcfg.max_groups = std::numeric_limits<int>::max();
    while (levels.back().num_groups() > 1) {
        Graph lg = multigraph_from_counts(e);
        std::map<int, BlockChain> ladder =
            agglomerative_ladder_block(lg, upper, lcfg, rng);
        const BlockChain* best = nullptr;
        for (const auto& [bb, chain] : ladder)
            if (!best || chain.local_log_joint() > best->local_log_joint())
                best = &chain;
        Partition bl = best->partition();
        if (bl.num_groups() >= bl.num_items())
            bl = Partition::trivial(bl.num_items()); // no useful aggregation
        e = aggregate(e, bl);
        levels.push_back(std::move(bl));
    }
    return HierarchicalPartition(std::move(levels));
}

NestedFit map_estimate_nested(const Graph& g, const ModelSpec& spec,
                              const McmcConfig& cfg, uint64_t seed) {
    std::vector<NestedFit> fits(cfg.restarts);
    auto run_restart = [&](int r) {
        Rng rng = spawn_rng(seed, r);
        // bottom level candidates from the flat L=1 objective; the finest
        // ladder states matter because the hierarchy can make many more
        // bottom groups affordable, and merging down is much easier for
        // the chain than splitting up
        ModelSpec bottom = spec;
        bottom.nested = false;
        bottom.edge_prior = EdgePrior::uniform;
        std::map<int, FlatChain> ladder = agglomerative_ladder(g, bottom, cfg, rng);
        int best_flat_b = 1;
        double best_flat = -std::numeric_limits<double>::infinity();
        for (const auto& [bb, chain] : ladder)
            if (chain.log_joint() > best_flat) {
                best_flat = chain.log_joint();
                best_flat_b = bb;
            }
        std::vector<int> seeds_b;
        for (int target : {best_flat_b, 2 * best_flat_b, 4 * best_flat_b}) {
            // nearest ladder state at or above the target
            auto it = ladder.lower_bound(target);
            int bb = it != ladder.end() ? it->first : ladder.rbegin()->first;
            if (std::find(seeds_b.begin(), seeds_b.end(), bb) == seeds_b.end())
                seeds_b.push_back(bb);
        }
        fits[r].log_joint = -std::numeric_limits<double>::infinity();
        for (int bb : seeds_b) {
            HierarchicalPartition h =
                grow_hierarchy(g, ladder.at(bb).partition(), cfg, rng);
            NestedChain chain(g, h, spec, cfg);
            auto fit = anneal(chain, cfg, rng);
            auto* nested = static_cast<NestedChain*>(fit.get());
            if (nested->log_joint() > fits[r].log_joint) {
                fits[r].log_joint = nested->log_joint();
                fits[r].hierarchy = nested->hierarchy();
            }
        }
    };
    parallel_restarts(cfg, run_restart);
    NestedFit best;
    best.log_joint = -std::numeric_limits<double>::infinity();
    for (NestedFit& f : fits)
        if (f.log_joint > best.log_joint)
            best = std::move(f);
    best.sigma_bits = -best.log_joint / LN2;
    best.bottom_groups = best.hierarchy.level(0).num_groups();
    return best;
}

} // namespace sbm
