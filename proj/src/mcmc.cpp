#include "sbm/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "sbm/combinatorics.hpp"

namespace sbm {

namespace {

double count_term(int a, int b, int64_t v) {
    return a == b ? log_double_factorial_even(v) : log_factorial(v);
}

} // namespace

LocalModel flat_local_model(const ModelSpec& spec) {
    LocalModel m;
    switch (spec.variant) {
    case Variant::sbm: m.kind = LevelKind::bottom_sbm; break;
    case Variant::dc: m.kind = LevelKind::bottom_dc; break;
    case Variant::dc_hist: m.kind = LevelKind::bottom_dc_hist; break;
    }
    m.prior = PriorMode::eq11;
    m.count_prior = spec.edge_prior == EdgePrior::geometric ? CountPrior::geometric
                                                            : CountPrior::uniform;
    return m;
}


void GroupHalfEdges::init(const Graph& g, const Partition& b) {
    int B = b.num_groups();
    std::vector<int64_t> counts(B, 0);
    for (int64_t h = 0; h < g.num_half_edges(); ++h)
        ++counts[b[g.half_edge_node(h)]];
    blocks_.assign(B, Block{});
    arena_.clear();
    garbage_ = 0;
    uint32_t off = 0;
    for (int r = 0; r < B; ++r) {
        uint32_t cap = 4;
        while (cap < counts[r] + 1)
            cap *= 2;
        blocks_[r] = {off, cap, 0};
        off += cap;
    }
    arena_.assign(off, -1);
    pos_.assign(g.num_half_edges(), 0);
    for (int64_t h = 0; h < g.num_half_edges(); ++h) {
        Block& blk = blocks_[b[g.half_edge_node(h)]];
        pos_[h] = blk.count;
        arena_[blk.off + blk.count++] = h;
    }
}

void GroupHalfEdges::relocate(int group, uint32_t need) {
    Block& blk = blocks_[group];
    uint32_t cap = blk.cap;
    while (cap < need)
        cap *= 2;
    uint32_t off = static_cast<uint32_t>(arena_.size());
    arena_.resize(arena_.size() + cap, -1);
    for (int32_t i = 0; i < blk.count; ++i)
        arena_[off + i] = arena_[blk.off + i];
    garbage_ += blk.cap;
    blk.off = off;
    blk.cap = cap;
    if (garbage_ > arena_.size() / 2)
        compact();
}

void GroupHalfEdges::compact() {
    std::vector<int64_t> fresh;
    fresh.reserve(arena_.size() - garbage_);
    for (Block& blk : blocks_) {
        uint32_t off = static_cast<uint32_t>(fresh.size());
        for (uint32_t i = 0; i < blk.cap; ++i)
            fresh.push_back(i < static_cast<uint32_t>(blk.count)
                                ? arena_[blk.off + i]
                                : -1);
        blk.off = off;
    }
    arena_ = std::move(fresh);
    garbage_ = 0;
}

void GroupHalfEdges::move(int64_t h, int from, int to) {
    Block& fb = blocks_[from];
    int32_t p = pos_[h];
    int64_t last = arena_[fb.off + fb.count - 1];
    arena_[fb.off + p] = last;
    pos_[last] = p;
    --fb.count;
    if (blocks_[to].count + 1 > static_cast<int32_t>(blocks_[to].cap))
        relocate(to, blocks_[to].count + 1);
    Block& tb = blocks_[to];
    pos_[h] = tb.count;
    arena_[tb.off + tb.count++] = h;
}

void GroupHalfEdges::add_group() {
    uint32_t off = static_cast<uint32_t>(arena_.size());
    arena_.resize(arena_.size() + 4, -1);
    blocks_.push_back({off, 4, 0});
}

void GroupHalfEdges::rename_last_into(int hole) {
    int last = static_cast<int>(blocks_.size()) - 1;
    if (hole != last) {
        garbage_ += blocks_[hole].cap;
        blocks_[hole] = blocks_[last];
    } else {
        garbage_ += blocks_[last].cap;
    }
    blocks_.pop_back();
    if (garbage_ > arena_.size() / 2 && !blocks_.empty())
        compact();
}

BlockChain::BlockChain(Graph g, Partition b, LocalModel model, McmcConfig cfg)
    : g_(std::move(g)), b_(std::move(b)), model_(model), cfg_(cfg) {
    if (b_.num_items() != g_.num_nodes())
        throw std::invalid_argument("BlockChain: partition size mismatch");
    e_ = EdgeCounts::from(g_, b_);
    int B = b_.num_groups();
    group_he_.init(g_, b_);
    members_.assign(B, {});
    member_pos_.assign(g_.num_nodes(), 0);
    for (int i = 0; i < g_.num_nodes(); ++i) {
        member_pos_[i] = static_cast<int>(members_[b_[i]].size());
        members_[b_[i]].push_back(i);
    }
    if (model_.kind == LevelKind::bottom_dc_hist)
        eta_ = degree_histogram(g_, b_);
    sum_lnfact_sizes_ = 0.0;
    for (int r = 0; r < B; ++r)
        sum_lnfact_sizes_ += log_factorial(b_.group_size(r));
    log_joint_ = recompute_local_log_joint();
}

double BlockChain::count_prior_value(int B) const {
    int64_t E = g_.num_edges();
    switch (model_.count_prior) {
    case CountPrior::none:
        return 0.0;
    case CountPrior::geometric: {
        if (E == 0)
            return 0.0;
        double lam = 2.0 * E / (static_cast<double>(B) * (B + 1));
        return E * std::log(lam) - (E + B * (B + 1) / 2.0) * std::log1p(lam);
    }
    case CountPrior::uniform:
        return -log_multiset(static_cast<int64_t>(B) * (B + 1) / 2, E);
    }
    return 0.0;
}

double BlockChain::partition_prior_value(int B, double sum_lnfact_sizes) const {
    if (model_.prior == PriorMode::none)
        return 0.0;
    if (model_.prior == PriorMode::eq11_if_nontrivial && B <= 1)
        return 0.0;
    int n = b_.num_items();
    return sum_lnfact_sizes - log_factorial(n) - log_binomial(n - 1, B - 1) -
           std::log(static_cast<double>(n));
}

double BlockChain::level_term_pair(int a, int b, int64_t v) const {
    if (v == 0)
        return 0.0;
    int64_t na = b_.group_size(a);
    if (a == b)
        return -log_multiset(na * (na + 1) / 2, v / 2);
    return -log_multiset(na * b_.group_size(b), v);
}

double BlockChain::recompute_local_log_joint() const {
    double lp = 0.0;
    switch (model_.kind) {
    case LevelKind::bottom_sbm:
        lp = log_likelihood_micro_sbm(g_, b_, e_);
        break;
    case LevelKind::bottom_dc:
        lp = log_likelihood_micro_dc(g_, b_, e_) + log_prior_degrees_uniform(b_, e_);
        break;
    case LevelKind::bottom_dc_hist:
        lp = log_likelihood_micro_dc(g_, b_, e_) +
             log_prior_degrees_frequency(g_, b_, e_);
        break;
    case LevelKind::upper:
        lp = log_nested_level_term(b_, e_);
        break;
    }
    lp += count_prior_value(b_.num_groups());
    double s = 0.0;
    for (int r = 0; r < b_.num_groups(); ++r)
        s += log_factorial(b_.group_size(r));
    lp += partition_prior_value(b_.num_groups(), s);
    return lp;
}

int BlockChain::propose_random(int item, Rng& rng) const {
    (void)item;
    int B = b_.num_groups();
    bool allow_new = cfg_.allow_new_groups && B < cfg_.max_groups;
    return static_cast<int>(rand_index(rng, B + (allow_new ? 1 : 0)));
}

int BlockChain::propose(int item, Rng& rng) const {
    if (g_.degree(item) == 0)
        return propose_random(item, rng);
    int B = b_.num_groups();
    bool allow_new = cfg_.allow_new_groups && B < cfg_.max_groups;
    int denom_groups = B + (allow_new ? 1 : 0);
    const auto& inc = g_.incident_half_edges(item);
    int64_t h = inc[rand_index(rng, static_cast<int64_t>(inc.size()))];
    int s = b_[g_.half_edge_node(h ^ 1)];
    double es = static_cast<double>(e_.row_sum(s));
    double p_uniform = cfg_.epsilon * denom_groups / (es + cfg_.epsilon * denom_groups);
    if (rand_real(rng) < p_uniform)
        return static_cast<int>(rand_index(rng, denom_groups));
    int64_t h2 = group_he_.at(s, rand_index(rng, group_he_.size(s)));
    return b_[g_.half_edge_node(h2 ^ 1)];
}

double BlockChain::proposal_probability(int item, int target) const {
    int B = b_.num_groups();
    bool allow_new = cfg_.allow_new_groups && B < cfg_.max_groups;
    int denom_groups = B + (allow_new ? 1 : 0);
    if (target == B && !allow_new)
        throw std::logic_error("proposal_probability: new group not allowed here");
    if (g_.degree(item) == 0)
        return 1.0 / denom_groups;
    scratch_.clear();
    for (const auto& [j, m] : g_.neighbors(item))
        scratch_add(b_[j], m);
    double k = static_cast<double>(g_.degree(item));
    double eps = cfg_.epsilon;
    double p = 0.0;
    for (const auto& [s, w] : scratch_) {
        int sg = static_cast<int>(s);
        double denom = e_.row_sum(sg) + eps * denom_groups;
        double num = target < B ? e_.at(sg, target) + eps : eps;
        p += (static_cast<double>(w) / k) * num / denom;
    }
    return p;
}

void BlockChain::he_move(int64_t h, int from, int to) {
    group_he_.move(h, from, to);
}

// moves the last group's side structures into 'hole' (when different) and
// drops the last slot
void BlockChain::rename_group_structures(int hole, int /*last*/) {
    int last = static_cast<int>(members_.size()) - 1;
    group_he_.rename_last_into(hole);
    if (hole != last) {
        members_[hole] = std::move(members_[last]);
        if (model_.kind == LevelKind::bottom_dc_hist)
            eta_[hole] = std::move(eta_[last]);
    }
    members_.pop_back();
    if (model_.kind == LevelKind::bottom_dc_hist)
        eta_.pop_back();
}

namespace {

// accumulates canonical (r<=s) count deltas of a single-item move
void collect_count_deltas(const Graph& g, const Partition& b, int item, int to,
                          std::vector<std::tuple<int, int, int64_t>>& out) {
    out.clear();
    int from = b[item];
    auto touch = [&out](int r, int s, int64_t v) {
        if (r > s)
            std::swap(r, s);
        for (auto& [a, c, d] : out)
            if (a == r && c == s) {
                d += v;
                return;
            }
        out.emplace_back(r, s, v);
    };
    for (const auto& [j, m] : g.neighbors(item)) {
        if (j == item) {
            touch(from, from, -m);
            touch(to, to, m);
        } else {
            int t = b[j];
            touch(from, t, t == from ? -2 * m : -m);
            touch(to, t, t == to ? 2 * m : m);
        }
    }
    std::erase_if(out, [](const auto& t) { return std::get<2>(t) == 0; });
}

} // namespace

double BlockChain::move_delta(int item, int to) const {
    int from = b_[item];
    if (to == from)
        return 0.0;
    int B = b_.num_groups();
    int64_t k = g_.degree(item);
    int n_from = b_.group_size(from);
    int n_to = to == B ? 0 : b_.group_size(to);
    int Bnew = B + (to == B ? 1 : 0) - (n_from == 1 ? 1 : 0);

    auto& deltas = delta_buf_;
    collect_count_deltas(g_, b_, item, to, deltas);

    double d = 0.0;
    int64_t e_from = e_.row_sum(from), e_to = to == B ? 0 : e_.row_sum(to);
    int64_t e_from_new = e_from - k, e_to_new = e_to + k;
    auto safe_at = [&](int a, int b2) -> int64_t {
        return (a >= B || b2 >= B) ? 0 : e_.at(a, b2);
    };

    if (model_.kind == LevelKind::upper) {
        // multiset terms: counts change on 'deltas' pairs, sizes change on
        // every pair touching 'from' or 'to'
        scratch_.clear(); // reused as a visited set
        auto key = [B](int a, int b2) { return static_cast<int64_t>(a) * (B + 2) + b2; };
        auto new_sizes_term = [this, from, to, n_from, n_to](int a, int b2,
                                                             int64_t v) -> double {
            if (v == 0)
                return 0.0;
            auto size_of = [&](int r) -> int64_t {
                if (r == from)
                    return n_from - 1;
                if (r == to)
                    return n_to + 1;
                return b_.group_size(r);
            };
            int64_t na = size_of(a);
            if (a == b2)
                return -log_multiset(na * (na + 1) / 2, v / 2);
            return -log_multiset(na * size_of(b2), v);
        };
        auto visit = [&](int a, int b2, int64_t dv) {
            if (a > b2)
                std::swap(a, b2);
            if (!scratch_insert(key(a, b2)))
                return;
            int64_t old_v = safe_at(a, b2);
            d += new_sizes_term(a, b2, old_v + dv) -
                 (a >= B || b2 >= B ? 0.0 : level_term_pair(a, b2, old_v));
        };
        // deltas first (with their count change), then size-affected rows
        for (const auto& [a, b2, dv] : deltas)
            visit(a, b2, dv);
        for (const auto& [t, v] : e_.row(from)) {
            (void)v;
            visit(from, t, 0);
        }
        if (to < B)
            for (const auto& [t, v] : e_.row(to)) {
                (void)v;
                visit(to, t, 0);
            }
    } else {
        for (const auto& [a, b2, dv] : deltas) {
            int64_t old_v = safe_at(a, b2);
            d += count_term(a, b2, old_v + dv) - count_term(a, b2, old_v);
        }
        switch (model_.kind) {
        case LevelKind::bottom_sbm: {
            auto vol_term = [](int64_t er, int64_t nr) -> double {
                return er > 0 ? -static_cast<double>(er) * std::log(static_cast<double>(nr))
                              : 0.0;
            };
            d += vol_term(e_from_new, n_from - 1) - vol_term(e_from, n_from);
            d += vol_term(e_to_new, n_to + 1) - vol_term(e_to, n_to);
            break;
        }
        case LevelKind::bottom_dc:
            d += -log_factorial(e_from_new) + log_factorial(e_from);
            d += -log_factorial(e_to_new) + log_factorial(e_to);
            d += -(n_from - 1 > 0 ? log_multiset(n_from - 1, e_from_new) : 0.0) +
                 log_multiset(n_from, e_from);
            d += -log_multiset(n_to + 1, e_to_new) +
                 (n_to > 0 ? log_multiset(n_to, e_to) : 0.0);
            break;
        case LevelKind::bottom_dc_hist: {
            d += -log_factorial(e_from_new) + log_factorial(e_from);
            d += -log_factorial(e_to_new) + log_factorial(e_to);
            d += -(n_from - 1 > 0
                       ? log_restricted_partitions(e_from_new, n_from - 1)
                       : 0.0) +
                 log_restricted_partitions(e_from, n_from);
            d += -log_restricted_partitions(e_to_new, n_to + 1) +
                 (n_to > 0 ? log_restricted_partitions(e_to, n_to) : 0.0);
            // P(k|eta) = prod_r prod_k eta_k^r! / n_r!
            auto eta_at = [this](int r, int64_t kk) -> int64_t {
                if (r >= static_cast<int>(eta_.size()))
                    return 0;
                auto it = eta_[r].find(kk);
                return it == eta_[r].end() ? 0 : it->second;
            };
            int64_t cf = eta_at(from, k);
            d += -std::log(static_cast<double>(cf)); // eta_from[k]: cf -> cf-1
            int64_t ct = to == B ? 0 : eta_at(to, k);
            d += std::log(static_cast<double>(ct + 1)); // eta_to[k]: ct -> ct+1
            d += -log_factorial(n_from - 1) + log_factorial(n_from);
            d += -log_factorial(n_to + 1) + log_factorial(n_to);
            break;
        }
        default:
            break;
        }
    }

    if (Bnew != B)
        d += count_prior_value(Bnew) - count_prior_value(B);

    double new_sum = sum_lnfact_sizes_ - log_factorial(n_from) +
                     log_factorial(n_from - 1) - log_factorial(n_to) +
                     log_factorial(n_to + 1);
    d += partition_prior_value(Bnew, new_sum) -
         partition_prior_value(B, sum_lnfact_sizes_);
    return d;
}

double BlockChain::reverse_proposal_probability(int item, int to) const {
    collect_count_deltas(g_, b_, item, to, delta_buf_);
    return reverse_probability_from_buffer(item, to);
}

void BlockChain::evaluate_move(int item, int to, double& delta, double& rev_prob) const {
    delta = move_delta(item, to); // fills delta_buf_
    rev_prob = reverse_probability_from_buffer(item, to);
}

// requires delta_buf_ to hold the count deltas of (item -> to)
double BlockChain::reverse_probability_from_buffer(int item, int to) const {
    int from = b_[item];
    int B = b_.num_groups();
    bool to_fresh = to == B;
    bool from_dies = b_.group_size(from) == 1;
    int Bnew = B + (to_fresh ? 1 : 0) - (from_dies ? 1 : 0);
    bool allow_new = cfg_.allow_new_groups && Bnew < cfg_.max_groups;
    int denom_groups = Bnew + (allow_new ? 1 : 0);
    if (g_.degree(item) == 0)
        return 1.0 / denom_groups;

    auto& deltas = delta_buf_;
    auto delta_at = [&deltas](int a, int b2) -> int64_t {
        if (a > b2)
            std::swap(a, b2);
        for (const auto& [x, y, d] : deltas)
            if (x == a && y == b2)
                return d;
        return 0;
    };
    auto post_at = [&](int a, int b2) -> int64_t {
        int64_t base = (a < B && b2 < B) ? e_.at(a, b2) : 0;
        return base + delta_at(a, b2);
    };
    int64_t k = g_.degree(item);
    auto post_row = [&](int s) -> int64_t {
        int64_t base = s < B ? e_.row_sum(s) : 0;
        if (s == from)
            base -= k;
        if (s == to)
            base += k;
        return base;
    };

    // far-group weights after the move: only the half-edges ending on the
    // moved node itself change class
    scratch_.clear();
    for (const auto& [j, m] : g_.neighbors(item))
        scratch_add(j == item ? to : b_[j], m);
    double eps = cfg_.epsilon;
    double p = 0.0;
    for (const auto& [s64, w] : scratch_) {
        int s = static_cast<int>(s64);
        double denom = post_row(s) + eps * denom_groups;
        // the inverse move targets the old group, or a fresh one if it died
        double num = from_dies ? eps : post_at(s, from) + eps;
        p += (static_cast<double>(w) / k) * num / denom;
    }
    return p;
}

BlockChain::MoveResult BlockChain::apply_move(int item, int to) {
    MoveResult res;
    res.delta = move_delta(item, to);
    int from = b_[item];
    if (to == from) {
        res.event.node = item;
        res.event.from = from;
        res.event.to = to;
        return res;
    }
    collect_count_deltas(g_, b_, item, to, res.count_deltas);
    if (to == b_.num_groups()) {
        e_.add_group();
        group_he_.add_group();
        members_.emplace_back();
        if (model_.kind == LevelKind::bottom_dc_hist)
            eta_.emplace_back();
    }
    for (const auto& [r, s, v] : res.count_deltas)
        e_.add(r, s, v);
    for (int64_t h : g_.incident_half_edges(item))
        he_move(h, from, to);
    {
        auto& fl = members_[from];
        int p = member_pos_[item];
        fl[p] = fl.back();
        member_pos_[fl[p]] = p;
        fl.pop_back();
        member_pos_[item] = static_cast<int>(members_[to].size());
        members_[to].push_back(item);
    }
    if (model_.kind == LevelKind::bottom_dc_hist) {
        int64_t k = g_.degree(item);
        if (--eta_[from][k] == 0)
            eta_[from].erase(k);
        ++eta_[to][k];
    }
    sum_lnfact_sizes_ += -log_factorial(b_.group_size(from)) +
                         log_factorial(b_.group_size(from) - 1);
    sum_lnfact_sizes_ +=
        (to == b_.num_groups() ? 0.0 : -log_factorial(b_.group_size(to))) +
        log_factorial((to == b_.num_groups() ? 0 : b_.group_size(to)) + 1);
    res.event = b_.move(item, to);
    if (res.event.removed_group) {
        if (res.event.relabeled_from != -1)
            e_.rename_last_group(from);
        e_.remove_last_group();
        rename_group_structures(from, res.event.relabeled_from);
    }
    log_joint_ += res.delta;
    return res;
}

double BlockChain::apply_graph_delta(
    const std::vector<std::tuple<int, int, int64_t>>& graph_deltas,
    std::vector<std::tuple<int, int, int64_t>>& out_count_deltas) {
    if (model_.kind != LevelKind::upper)
        throw std::logic_error("apply_graph_delta: only upper levels receive these");
    out_count_deltas.clear();
    auto touch = [&out_count_deltas](int r, int s, int64_t v) {
        if (r > s)
            std::swap(r, s);
        for (auto& [a, c, d] : out_count_deltas)
            if (a == r && c == s) {
                d += v;
                return;
            }
        out_count_deltas.emplace_back(r, s, v);
    };
    for (const auto& [x, y, dv] : graph_deltas) {
        int X = b_[x], Y = b_[y];
        if (x == y)
            touch(X, X, dv);
        else if (X == Y)
            touch(X, X, 2 * dv);
        else
            touch(X, Y, dv);
    }
    std::erase_if(out_count_deltas, [](const auto& t) { return std::get<2>(t) == 0; });
    double d = 0.0;
    for (const auto& [a, b2, dv] : out_count_deltas) {
        int64_t old_v = e_.at(a, b2);
        d += level_term_pair(a, b2, old_v + dv) - level_term_pair(a, b2, old_v);
        e_.add(a, b2, dv);
    }
    log_joint_ += d;
    return d;
}

double BlockChain::insert_item(int group) {
    if (model_.kind != LevelKind::upper)
        throw std::logic_error("insert_item: only upper levels grow");
    int B = b_.num_groups();
    double before = partition_prior_value(B, sum_lnfact_sizes_);
    double terms_before = 0.0;
    for (const auto& [t, v] : e_.row(group))
        terms_before += level_term_pair(group, t, v);
    // mutate: the new item joins 'group' with no incident counts yet
    int n_old = b_.group_size(group);
    sum_lnfact_sizes_ += log_factorial(n_old + 1) - log_factorial(n_old);
    b_ = [this, group] {
        std::vector<int> l = b_.labels();
        l.push_back(group);
        return Partition(std::move(l));
    }();
    member_pos_.push_back(static_cast<int>(members_[group].size()));
    members_[group].push_back(b_.num_items() - 1);
    double terms_after = 0.0;
    for (const auto& [t, v] : e_.row(group))
        terms_after += level_term_pair(group, t, v);
    double d = terms_after - terms_before +
               partition_prior_value(B, sum_lnfact_sizes_) - before;
    log_joint_ += d;
    return d;
}

double BlockChain::remove_item_swap(int item, Partition::MoveEvent& group_event) {
    if (model_.kind != LevelKind::upper)
        throw std::logic_error("remove_item_swap: only upper levels shrink");
    int group = b_[item];
    int B = b_.num_groups();
    double before = partition_prior_value(B, sum_lnfact_sizes_);
    double terms_before = 0.0;
    for (const auto& [t, v] : e_.row(group))
        terms_before += level_term_pair(group, t, v);

    int last_item = b_.num_items() - 1;
    std::vector<int> labels = b_.labels();
    int n_old_group = b_.group_size(group);
    // swap the last item into the removed slot
    int last_label = labels[last_item];
    labels[item] = last_label;
    labels.pop_back();
    // fix member bookkeeping
    {
        auto& fl = members_[group];
        int p = member_pos_[item];
        fl[p] = fl.back();
        member_pos_[fl[p]] = p;
        fl.pop_back();
    }
    if (last_item != item) {
        auto& ll = members_[last_label];
        int p = member_pos_[last_item];
        ll[p] = item; // the moved item keeps membership, new index
        member_pos_[item] = p;
        (void)ll;
    }
    member_pos_.pop_back();
    sum_lnfact_sizes_ += log_factorial(n_old_group - 1) - log_factorial(n_old_group);

    group_event = Partition::MoveEvent{};
    group_event.from = group;
    int Bnew = B;
    if (n_old_group == 1) {
        // the emptied group disappears; keep labels contiguous
        group_event.removed_group = true;
        --Bnew;
        int last_group = B - 1;
        if (group != last_group) {
            for (int& l : labels)
                if (l == last_group)
                    l = group;
            group_event.relabeled_from = last_group;
            e_.rename_last_group(group);
        }
        rename_group_structures(group, last_group);
        e_.remove_last_group();
    }
    b_ = Partition(std::move(labels));
    double terms_after = 0.0;
    if (!group_event.removed_group)
        for (const auto& [t, v] : e_.row(group))
            terms_after += level_term_pair(group, t, v);
    double d = terms_after - terms_before +
               partition_prior_value(Bnew, sum_lnfact_sizes_) - before;
    log_joint_ += d;
    return d;
}

void BlockChain::reset_graph(Graph g) {
    if (g.num_nodes() != b_.num_items())
        throw std::invalid_argument("reset_graph: node count mismatch");
    g_ = std::move(g);
    group_he_.init(g_, b_);
}

void BlockChain::check_consistency() const {
    if (!(EdgeCounts::from(g_, b_) == e_))
        throw std::logic_error("BlockChain: edge counts diverged");
    double fresh = recompute_local_log_joint();
    if (std::abs(fresh - log_joint_) > 1e-6 * std::max(1.0, std::abs(fresh)))
        throw std::logic_error("BlockChain: cached log-joint diverged");
    for (int r = 0; r < b_.num_groups(); ++r)
        if (group_he_.size(r) != e_.row_sum(r))
            throw std::logic_error("BlockChain: group half-edge lists diverged");
}

bool mh_step(BlockChain& chain, int item, double beta, Rng& rng,
             SweepStats& stats) {
    ++stats.proposals;
    const McmcConfig& cfg = chain.config();
    int from = chain.partition()[item];
    int prop = chain.propose(item, rng);
    int B = chain.num_groups();
    bool dying = chain.partition().group_size(from) == 1;
    if (prop != from) {
        if (prop == B && dying) {
            ++stats.accepted; // fresh group for a singleton: pure relabeling
            return true;
        }
        if (dying && (B <= cfg.min_groups || !cfg.allow_new_groups))
            return false; // group death not allowed in this phase
    }
    // Decide before touching any state; rejected moves stay O(k_i). The
    // ratio is evaluated for every proposal, including staying put, which
    // keeps the per-node step cost independent of the proposal mix.
    double pf = chain.proposal_probability(item, prop);
    double delta = 0.0, pr = pf;
    if (prop != from)
        chain.evaluate_move(item, prop, delta, pr);
    double ln_a;
    if (std::isinf(beta))
        ln_a = delta > 0 ? 1.0
                         : (delta < 0 ? -std::numeric_limits<double>::infinity()
                                      : std::log(pr / pf));
    else
        ln_a = beta * delta + std::log(pr) - std::log(pf);
    if (ln_a >= 0 || std::log(rand_real(rng)) < ln_a) {
        if (prop != from)
            chain.apply_move(item, prop);
        ++stats.accepted;
        return true;
    }
    return false;
}

SweepStats BlockChain::sweep(double beta, Rng& rng) {
    SweepStats stats;
    std::vector<int> order(g_.num_nodes());
    for (int i = 0; i < g_.num_nodes(); ++i)
        order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int item : order)
        mh_step(*this, item, beta, rng, stats);
    return stats;
}

BlockChain::MergeCandidate BlockChain::best_merge(int group, Rng& rng) const {
    MergeCandidate best;
    int B = b_.num_groups();
    if (B < 2)
        return best;
    if (B <= 50) { // exhaustive at small B; sampling misses near-ties
        for (int t = 0; t < B; ++t) {
            if (t == group)
                continue;
            double d = evaluate_merge(group, t);
            if (d > best.delta) {
                best.delta = d;
                best.from = group;
                best.into = t;
            }
        }
        return best;
    }
    for (int a = 0; a < cfg_.merge_attempts; ++a) {
        int target = -1;
        if (group_he_.size(group) == 0) {
            target = static_cast<int>(rand_index(rng, B));
        } else {
            int64_t h = group_he_.at(group, rand_index(rng, group_he_.size(group)));
            int t = b_[g_.half_edge_node(h ^ 1)];
            double et = static_cast<double>(e_.row_sum(t));
            double p_uniform = cfg_.epsilon * B / (et + cfg_.epsilon * B);
            if (rand_real(rng) < p_uniform) {
                target = static_cast<int>(rand_index(rng, B));
            } else {
                int64_t h2 = group_he_.at(t, rand_index(rng, group_he_.size(t)));
                target = b_[g_.half_edge_node(h2 ^ 1)];
            }
        }
        if (target == group)
            continue;
        double d = evaluate_merge(group, target);
        if (d > best.delta) {
            best.delta = d;
            best.from = group;
            best.into = target;
        }
    }
    return best;
}

double BlockChain::evaluate_merge(int from, int into) const {
    if (from == into)
        throw std::invalid_argument("evaluate_merge: identical groups");
    int B = b_.num_groups();
    int Bnew = B - 1;
    int64_t n_from = b_.group_size(from), n_into = b_.group_size(into);
    int64_t e_from = e_.row_sum(from), e_into = e_.row_sum(into);
    int64_t e_cross = e_.at(from, into);
    int64_t e_ff = e_.at(from, from), e_ii = e_.at(into, into);
    double d = 0.0;

    auto new_count = [&](int a, int b2) -> int64_t {
        // counts after merging 'from' into 'into' (a <= b2 canonical)
        if (a == into && b2 == into)
            return e_ii + e_ff + 2 * e_cross;
        if (a == into)
            return e_.at(into, b2) + e_.at(from, b2);
        if (b2 == into)
            return e_.at(a, into) + e_.at(a, from);
        return 0; // pairs involving 'from' vanish
    };

    if (model_.kind == LevelKind::upper) {
        auto size_of = [&](int r) -> int64_t {
            if (r == into)
                return n_into + n_from;
            return b_.group_size(r);
        };
        auto new_term = [&](int a, int b2, int64_t v) -> double {
            if (v == 0)
                return 0.0;
            int64_t na = size_of(a);
            if (a == b2)
                return -log_multiset(na * (na + 1) / 2, v / 2);
            return -log_multiset(na * size_of(b2), v);
        };
        // visit the union of affected pairs exactly once
        scratch_.clear();
        auto key = [B](int a, int b2) { return static_cast<int64_t>(a) * (B + 2) + b2; };
        auto visit = [&](int a, int b2) {
            if (a > b2)
                std::swap(a, b2);
            if (!scratch_insert(key(a, b2)))
                return;
            d -= level_term_pair(a, b2, e_.at(a, b2));
            // image pair after merge
            int A = a == from ? into : a, Bb = b2 == from ? into : b2;
            if (A > Bb)
                std::swap(A, Bb);
            if (scratch_insert(key(-1 - A, Bb))) // separate namespace for new pairs
                d += new_term(A, Bb, new_count(A, Bb));
        };
        for (const auto& [t, v] : e_.row(from)) {
            (void)v;
            visit(from, t);
        }
        for (const auto& [t, v] : e_.row(into)) {
            (void)v;
            visit(into, t);
        }
    } else {
        // edge-count factor over affected pairs
        scratch_.clear();
        auto key = [B](int a, int b2) { return static_cast<int64_t>(a) * (B + 2) + b2; };
        auto visit = [&](int a, int b2) {
            if (a > b2)
                std::swap(a, b2);
            if (!scratch_insert(key(a, b2)))
                return;
            d -= count_term(a, b2, e_.at(a, b2));
            int A = a == from ? into : a, Bb = b2 == from ? into : b2;
            if (A > Bb)
                std::swap(A, Bb);
            if (scratch_insert(key(-1 - A, Bb)))
                d += count_term(A, Bb, new_count(A, Bb));
        };
        for (const auto& [t, v] : e_.row(from)) {
            (void)v;
            visit(from, t);
        }
        for (const auto& [t, v] : e_.row(into)) {
            (void)v;
            visit(into, t);
        }
        int64_t e_merged = e_from + e_into;
        int64_t n_merged = n_from + n_into;
        switch (model_.kind) {
        case LevelKind::bottom_sbm: {
            auto vol_term = [](int64_t er, int64_t nr) -> double {
                return er > 0 ? -static_cast<double>(er) * std::log(static_cast<double>(nr))
                              : 0.0;
            };
            d += vol_term(e_merged, n_merged) - vol_term(e_from, n_from) -
                 vol_term(e_into, n_into);
            break;
        }
        case LevelKind::bottom_dc:
            d += -log_factorial(e_merged) + log_factorial(e_from) +
                 log_factorial(e_into);
            d += -log_multiset(n_merged, e_merged) + log_multiset(n_from, e_from) +
                 log_multiset(n_into, e_into);
            break;
        case LevelKind::bottom_dc_hist: {
            d += -log_factorial(e_merged) + log_factorial(e_from) +
                 log_factorial(e_into);
            d += -log_restricted_partitions(e_merged, n_merged) +
                 log_restricted_partitions(e_from, n_from) +
                 log_restricted_partitions(e_into, n_into);
            // merged degree histogram
            for (const auto& [kk, c] : eta_[from]) {
                auto it = eta_[into].find(kk);
                int64_t c2 = it == eta_[into].end() ? 0 : it->second;
                d += log_factorial(c + c2) - log_factorial(c) - log_factorial(c2);
            }
            d += -log_factorial(n_merged) + log_factorial(n_from) +
                 log_factorial(n_into);
            break;
        }
        default:
            break;
        }
    }

    if (model_.count_prior != CountPrior::none)
        d += count_prior_value(Bnew) - count_prior_value(B);
    double new_sum = sum_lnfact_sizes_ - log_factorial(n_from) -
                     log_factorial(n_into) + log_factorial(n_from + n_into);
    d += partition_prior_value(Bnew, new_sum) -
         partition_prior_value(B, sum_lnfact_sizes_);
    return d;
}

void BlockChain::apply_merge(int from, int into) {
    double delta = evaluate_merge(from, into);
    std::vector<int> moved = members_[from];
    for (int i : moved) {
        // bulk member move without per-node delta evaluation
        for (int64_t h : g_.incident_half_edges(i))
            he_move(h, from, into);
        auto& fl = members_[from];
        int p = member_pos_[i];
        fl[p] = fl.back();
        member_pos_[fl[p]] = p;
        fl.pop_back();
        member_pos_[i] = static_cast<int>(members_[into].size());
        members_[into].push_back(i);
    }
    // counts: fold row 'from' into 'into'
    std::vector<std::pair<int, int64_t>> row;
    for (const auto& [t, v] : e_.row(from))
        row.emplace_back(t, v);
    for (const auto& [t, v] : row) {
        if (t == from) {
            e_.add(into, into, v);
            e_.add(from, from, -v);
        } else if (t == into) {
            e_.add(into, into, 2 * v);
            e_.add(from, into, -v);
        } else {
            e_.add(into, t, v);
            e_.add(from, t, -v);
        }
    }
    if (model_.kind == LevelKind::bottom_dc_hist) {
        for (const auto& [kk, c] : eta_[from])
            eta_[into][kk] += c;
        eta_[from].clear();
    }
    sum_lnfact_sizes_ += log_factorial(b_.group_size(from) + b_.group_size(into)) -
                         log_factorial(b_.group_size(from)) -
                         log_factorial(b_.group_size(into));
    // partition labels
    std::vector<int> labels = b_.labels();
    for (int i : moved)
        labels[i] = into;
    int last = b_.num_groups() - 1;
    if (from != last) {
        for (int& l : labels)
            if (l == last)
                l = from;
        e_.rename_last_group(from);
    }
    rename_group_structures(from, last);
    e_.remove_last_group();
    b_ = Partition(std::move(labels));
    log_joint_ += delta;
}

// --- drivers -------------------------------------------------------------

FlatChain::FlatChain(const Graph& g, Partition b, const ModelSpec& spec,
                     McmcConfig cfg)
    : block_(g, std::move(b), flat_local_model(spec), cfg) {}

std::unique_ptr<Chain> anneal(const Chain& start, const McmcConfig& cfg, Rng& rng) {
    std::unique_ptr<Chain> chain = start.clone();
    std::unique_ptr<Chain> best = start.clone();
    double best_joint = chain->log_joint();
    int n = std::max(1, cfg.anneal_sweeps);
    for (int s = 0; s < n; ++s) {
        double beta = std::pow(cfg.beta_max, static_cast<double>(s) / n);
        chain->sweep(beta, rng);
        if (chain->log_joint() > best_joint) {
            best_joint = chain->log_joint();
            best = chain->clone();
        }
    }
    double inf = std::numeric_limits<double>::infinity();
    for (int s = 0; s < cfg.polish_sweeps; ++s) {
        SweepStats st = chain->sweep(inf, rng);
        if (chain->log_joint() > best_joint) {
            best_joint = chain->log_joint();
            best = chain->clone();
        }
        if (st.accepted == 0)
            break;
    }
    return best;
}

namespace {

// shrink a copy of 'src' to exactly 'target' groups by rounds of greedy
// merges alternating with greedy polish sweeps
void shrink_to(BlockChain& chain, int target, Rng& rng) {
    double inf = std::numeric_limits<double>::infinity();
    while (chain.num_groups() > target) {
        int B = chain.num_groups();
        std::vector<BlockChain::MergeCandidate> cands;
        for (int r = 0; r < B; ++r) {
            auto c = chain.best_merge(r, rng);
            if (c.into >= 0)
                cands.push_back(c);
        }
        std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
            if (a.delta != b.delta)
                return a.delta > b.delta; // least posterior decrease first
            return std::tie(a.from, a.into) < std::tie(b.from, b.into);
        });
        int to_apply = std::max(1, (B - target + 1) / 2);
        // merges well below the round's best are deferred; applying them
        // together with the good ones freezes uneven agglomerations in
        double cutoff = cands.empty()
                            ? 0.0
                            : cands.front().delta - chain.config().merge_delta_window;
        // pre-round group ids -> current ids as merges shift labels
        std::vector<int> where(B);
        for (int r = 0; r < B; ++r)
            where[r] = r;
        std::vector<char> touched(B, 0);
        int applied = 0;
        int min_apply = std::max(1, to_apply / 4);
        for (const auto& c : cands) {
            if (applied >= to_apply || chain.num_groups() <= target)
                break;
            if (applied >= min_apply && c.delta < cutoff)
                break;
            if (touched[c.from] || touched[c.into])
                continue;
            int f = where[c.from], t = where[c.into];
            if (f < 0 || t < 0 || f == t)
                continue;
            touched[c.from] = touched[c.into] = 1;
            int last = chain.num_groups() - 1;
            chain.apply_merge(f, t);
            // label 'last' moved into slot f
            for (int r = 0; r < B; ++r)
                if (where[r] == last)
                    where[r] = f;
            where[c.from] = -1;
            ++applied;
        }
        if (applied == 0)
            break;
        // greedy polish at fixed B
        McmcConfig& mcfg = chain.config();
        McmcConfig saved = mcfg;
        mcfg.allow_new_groups = false;
        mcfg.min_groups = chain.num_groups();
        for (int s = 0; s < saved.merge_sweeps; ++s)
            if (chain.sweep(inf, rng).accepted == 0)
                break;
        mcfg = saved;
    }
}

} // namespace

std::map<int, BlockChain> agglomerative_ladder_block(const Graph& g,
                                                     const LocalModel& model,
                                                     const McmcConfig& cfg,
                                                     Rng& rng) {
    int n = g.num_nodes();
    BlockChain start(g, Partition::singletons(n), model, cfg);
    std::map<int, BlockChain> ladder;
    if (n == 1) {
        ladder.emplace(1, start);
        return ladder;
    }

    // Fibonacci search over the number of groups, shrinking cached states.
    // Each probe also tries a fresh shrink from singletons: intermediate
    // sources can carry frozen-in uneven merges that greedy polish cannot
    // undo, and the fresh path often lands cleaner.
    std::map<int, std::pair<double, std::unique_ptr<BlockChain>>> cache;
    auto eval = [&](int B) -> double {
        B = std::max(cfg.min_groups, std::min(B, n));
        auto it = cache.find(B);
        if (it != cache.end())
            return it->second.first;
        // nearest cached state with more groups (or the singleton start)
        const BlockChain* src = &start;
        for (auto& [bb, entry] : cache)
            if (bb >= B && (src == &start || bb < src->num_groups()))
                src = entry.second.get();
        auto chain = std::make_unique<BlockChain>(*src);
        chain->config() = cfg;
        shrink_to(*chain, B, rng);
        if (src != &start) {
            auto fresh = std::make_unique<BlockChain>(start);
            fresh->config() = cfg;
            shrink_to(*fresh, B, rng);
            if (fresh->local_log_joint() > chain->local_log_joint())
                chain = std::move(fresh);
        }
        double out = chain->local_log_joint();
        cache[B] = {out, std::move(chain)};
        return out;
    };

    // Fibonacci (golden-section) bracket on the number of groups; assumes a
    // unimodal description length in B, which restarts mitigate when it is
    // not
    int lo = std::max(1, cfg.min_groups);
    int hi = std::min(n, cfg.max_groups == std::numeric_limits<int>::max()
                             ? n
                             : cfg.max_groups);
    const double phi = 0.6180339887498949;
    while (hi - lo > 3) {
        int x1 = std::clamp(static_cast<int>(std::round(hi - (hi - lo) * phi)),
                            lo + 1, hi - 1);
        int x2 = std::clamp(static_cast<int>(std::round(lo + (hi - lo) * phi)),
                            x1, hi - 1);
        if (x1 == x2)
            ++x2;
        if (eval(x1) > eval(x2)) // maximize log-joint
            hi = x2;
        else
            lo = x1;
    }
    for (int b = lo; b <= hi; ++b)
        eval(b);
    // descending refinement: early probes shrank from coarse sources; a
    // one-step shrink from the next-finer state often lands cleaner
    for (auto it = cache.rbegin(); it != cache.rend(); ++it) {
        auto next = std::next(it);
        if (next == cache.rend())
            break;
        BlockChain refined(*it->second.second);
        refined.config() = cfg;
        shrink_to(refined, next->first, rng);
        if (refined.local_log_joint() > next->second.first) {
            next->second.first = refined.local_log_joint();
            *next->second.second = std::move(refined);
        }
    }
    for (auto& [bb, entry] : cache) {
        entry.second->config() = cfg;
        ladder.emplace(bb, *entry.second);
    }
    return ladder;
}

std::map<int, FlatChain> agglomerative_ladder(const Graph& g,
                                              const ModelSpec& spec,
                                              const McmcConfig& cfg, Rng& rng) {
    std::map<int, BlockChain> blocks =
        agglomerative_ladder_block(g, flat_local_model(spec), cfg, rng);
    std::map<int, FlatChain> ladder;
    for (auto& [bb, block] : blocks)
        ladder.emplace(bb, FlatChain(g, block.partition(), spec, cfg));
    return ladder;
}

FlatChain agglomerative_init(const Graph& g, const ModelSpec& spec,
                             const McmcConfig& cfg, Rng& rng) {
    std::map<int, FlatChain> ladder = agglomerative_ladder(g, spec, cfg, rng);
    const FlatChain* best = nullptr;
    for (const auto& [bb, chain] : ladder)
        if (!best || chain.log_joint() > best->log_joint())
            best = &chain;
    return *best;
}

void parallel_restarts(const McmcConfig& cfg, const std::function<void(int)>& f) {
    int workers = std::max(1, std::min(cfg.threads, cfg.restarts));
    if (workers <= 1) {
        for (int r = 0; r < cfg.restarts; ++r)
            f(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int r = next.fetch_add(1); r < cfg.restarts; r = next.fetch_add(1))
                f(r);
        });
    for (auto& t : pool)
        t.join();
}

FlatFit map_estimate_flat(const Graph& g, const ModelSpec& spec,
                          const McmcConfig& cfg, uint64_t seed) {
    // independent restarts; threads share only the immutable graph, and the
    // reduction is deterministic regardless of scheduling
    std::vector<FlatFit> fits(cfg.restarts);
    auto run_restart = [&](int r) {
        Rng rng = spawn_rng(seed, r);
        FlatChain init = agglomerative_init(g, spec, cfg, rng);
        auto fit = anneal(init, cfg, rng);
        fits[r].log_joint = fit->log_joint();
        fits[r].partition = static_cast<FlatChain*>(fit.get())->partition();
    };
    parallel_restarts(cfg, run_restart);
    FlatFit best;
    best.log_joint = -std::numeric_limits<double>::infinity();
    for (const FlatFit& f : fits)
        if (f.log_joint > best.log_joint)
            best = f;
    best.sigma_bits = -best.log_joint / LN2;
    best.num_groups = best.partition.num_groups();
    return best;
}

} // namespace sbm
