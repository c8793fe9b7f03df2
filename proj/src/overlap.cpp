#include "sbm/overlap.hpp"

#include <cmath>
#include <stdexcept>

#include "sbm/combinatorics.hpp"
#include "sbm/likelihood.hpp"

namespace sbm {

HalfEdgeLabeling::HalfEdgeLabeling(const Graph& g, std::vector<int> labels)
    : g_(&g), labels_(std::move(labels)) {
    if (static_cast<int64_t>(labels_.size()) != g.num_half_edges())
        throw std::invalid_argument("HalfEdgeLabeling: one label per half-edge required");
    int B = 0;
    for (int l : labels_) {
        if (l < 0)
            throw std::invalid_argument("HalfEdgeLabeling: negative label");
        B = std::max(B, l + 1);
    }
    e_ = EdgeCounts(B);
    k_.resize(g.num_nodes());
    G_.resize(g.edges().size());
    label_he_.resize(B);
    he_pos_.resize(labels_.size());
    for (int64_t t = 0; t < g.num_instances(); ++t) {
        int lu = labels_[2 * t], lv = labels_[2 * t + 1];
        if (lu == lv)
            e_.add(lu, lu, 2);
        else
            e_.add(lu, lv, 1);
        ++k_[g.half_edge_node(2 * t)][lu];
        ++k_[g.half_edge_node(2 * t + 1)][lv];
        ++G_[g.instance_pair(t)][g_key(t, lu, lv)];
    }
    for (int64_t h = 0; h < static_cast<int64_t>(labels_.size()); ++h) {
        he_pos_[h] = static_cast<int64_t>(label_he_[labels_[h]].size());
        label_he_[labels_[h]].push_back(h);
    }
    for (int r = 0; r < B; ++r)
        if (label_he_[r].empty())
            throw std::invalid_argument("HalfEdgeLabeling: unused label (not contiguous)");
}

HalfEdgeLabeling HalfEdgeLabeling::from_partition(const Graph& g,
                                                  const Partition& b) {
    std::vector<int> labels(g.num_half_edges());
    for (int64_t h = 0; h < g.num_half_edges(); ++h)
        labels[h] = b[g.half_edge_node(h)];
    // labels of b may not all appear on half-edges (isolated groups); remap
    std::vector<int> used(b.num_groups(), -1);
    int next = 0;
    for (int64_t h = 0; h < g.num_half_edges(); ++h) {
        if (used[labels[h]] < 0)
            used[labels[h]] = next++;
        labels[h] = used[labels[h]];
    }
    return HalfEdgeLabeling(g, std::move(labels));
}

int64_t HalfEdgeLabeling::labelled_degree(int node, int r) const {
    auto it = k_[node].find(r);
    return it == k_[node].end() ? 0 : it->second;
}

int64_t HalfEdgeLabeling::g_count(int pair_idx, int a, int b) const {
    auto it = G_[pair_idx].find({a, b});
    return it == G_[pair_idx].end() ? 0 : it->second;
}

std::pair<int, int> HalfEdgeLabeling::g_key(int64_t inst, int lu, int lv) const {
    const Graph::Edge& ed = g_->edges()[g_->instance_pair(inst)];
    if (ed.u == ed.v)
        return {std::min(lu, lv), std::max(lu, lv)};
    return {lu, lv}; // node-ordered (u end, v end)
}

HalfEdgeLabeling::RelabelEvent HalfEdgeLabeling::relabel(int64_t h, int to) {
    RelabelEvent ev;
    ev.half_edge = h;
    ev.from = labels_[h];
    ev.to = to;
    int B = num_labels();
    if (to < 0 || to > B)
        throw std::invalid_argument("HalfEdgeLabeling::relabel: label out of range");
    if (to == ev.from)
        return ev;
    if (to == B) {
        e_.add_group();
        label_he_.emplace_back();
        ev.created_label = true;
    }
    int64_t inst = h / 2;
    int64_t other = h ^ 1;
    int s = labels_[other];
    int node = g_->half_edge_node(h);
    // tensors
    auto& gmap = G_[g_->instance_pair(inst)];
    auto old_key = g_key(inst, h < other ? ev.from : s, h < other ? s : ev.from);
    if (--gmap[old_key] == 0)
        gmap.erase(old_key);
    // counts
    if (ev.from == s)
        e_.add(ev.from, ev.from, -2);
    else
        e_.add(ev.from, s, -1);
    auto& kn = k_[node];
    if (--kn[ev.from] == 0)
        kn.erase(ev.from);
    labels_[h] = to;
    if (to == s)
        e_.add(to, to, 2);
    else
        e_.add(to, s, 1);
    ++kn[to];
    ++gmap[g_key(inst, h < other ? to : s, h < other ? s : to)];
    // label half-edge lists
    auto& from_list = label_he_[ev.from];
    int64_t p = he_pos_[h];
    from_list[p] = from_list.back();
    he_pos_[from_list[p]] = p;
    from_list.pop_back();
    he_pos_[h] = static_cast<int64_t>(label_he_[to].size());
    label_he_[to].push_back(h);
    // label death
    if (e_.row_sum(ev.from) == 0) {
        ev.removed_label = true;
        int last = num_labels() - 1;
        if (ev.from != last) {
            rename_label(ev.from, last);
            ev.relabeled_from = last;
            if (labels_[h] == ev.from) // 'to' was the last label
                ev.to = ev.from;
        }
        e_.remove_last_group();
        label_he_.pop_back();
    }
    return ev;
}

void HalfEdgeLabeling::rename_label(int hole, int last) {
    for (int64_t h : label_he_[last])
        labels_[h] = hole;
    label_he_[hole] = std::move(label_he_[last]);
    label_he_[last].clear();
    e_.rename_last_group(hole);
    for (auto& kn : k_) {
        auto it = kn.find(last);
        if (it != kn.end()) {
            kn[hole] = it->second;
            kn.erase(it);
        }
    }
    for (size_t p = 0; p < G_.size(); ++p) {
        auto& gmap = G_[p];
        bool loop = g_->edges()[p].u == g_->edges()[p].v;
        std::map<std::pair<int, int>, int64_t> fixed;
        bool touched = false;
        for (const auto& [key, v] : gmap) {
            auto [a, b] = key;
            if (a == last || b == last) {
                touched = true;
                if (a == last)
                    a = hole;
                if (b == last)
                    b = hole;
                if (loop && a > b)
                    std::swap(a, b); // loop keys stay label-sorted
            }
            fixed[{a, b}] += v;
        }
        if (touched)
            gmap = std::move(fixed);
    }
}

int64_t HalfEdgeLabeling::sample_half_edge_with_label(int s,
                                                      uint64_t uniform_draw) const {
    const auto& list = label_he_[s];
    return list[uniform_draw % list.size()];
}

void HalfEdgeLabeling::check_consistency() const {
    HalfEdgeLabeling fresh(*g_, labels_);
    if (!(fresh.e_ == e_))
        throw std::logic_error("HalfEdgeLabeling: edge counts diverged");
    for (int i = 0; i < g_->num_nodes(); ++i)
        if (fresh.k_[i] != k_[i])
            throw std::logic_error("HalfEdgeLabeling: labelled degrees diverged");
    if (fresh.G_ != G_)
        throw std::logic_error("HalfEdgeLabeling: G tensor diverged");
}

namespace {

// the G-tensor factor: for u < v plain factorials of node-ordered counts,
// for self-loops (2c)!! on equal labels and c! on mixed labels
double log_g_factor(const HalfEdgeLabeling& G) {
    const Graph& g = G.graph();
    double s = 0.0;
    for (size_t p = 0; p < g.edges().size(); ++p) {
        bool loop = g.edges()[p].u == g.edges()[p].v;
        for (const auto& [key, c] : G.g_counts(p)) {
            if (!loop)
                s += log_factorial(c);
            else if (key.first == key.second)
                s += log_double_factorial_even(2 * c);
            else
                s += log_factorial(c);
        }
    }
    return s;
}

double log_edge_count_factor_overlap(const EdgeCounts& e) {
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

} // namespace

double log_micro_overlap_g(const HalfEdgeLabeling& G) {
    const EdgeCounts& e = G.edge_counts();
    double lp = log_edge_count_factor_overlap(e);
    for (int r = 0; r < e.num_groups(); ++r)
        lp -= log_factorial(e.row_sum(r));
    for (int i = 0; i < G.graph().num_nodes(); ++i)
        for (const auto& [r, kir] : G.labelled_degrees(i))
            lp += log_factorial(kir);
    lp -= log_g_factor(G);
    return lp;
}

double log_prior_overlap_degrees(const HalfEdgeLabeling& G) {
    const EdgeCounts& e = G.edge_counts();
    int n = G.graph().num_nodes();
    double lp = 0.0;
    for (int r = 0; r < e.num_groups(); ++r)
        lp -= log_multiset(n, e.row_sum(r));
    return lp;
}

std::tuple<double, double, double> log_micro_overlap_parts(const HalfEdgeLabeling& G) {
    return {log_micro_overlap_g(G), log_prior_overlap_degrees(G),
            log_prior_edge_counts_geometric(G.edge_counts(),
                                            G.graph().num_edges())};
}

double log_marginal_overlap(const HalfEdgeLabeling& G) {
    // direct transcription of the closed-form marginal
    const EdgeCounts& e = G.edge_counts();
    const Graph& g = G.graph();
    int B = e.num_groups();
    int64_t E = g.num_edges();
    int64_t n = g.num_nodes();
    double lp = 0.0;
    if (E > 0) {
        double lam = 2.0 * E / (static_cast<double>(B) * (B + 1));
        lp += E * std::log(lam) - (E + B * (B + 1) / 2.0) * std::log(lam + 1);
    }
    lp += log_edge_count_factor_overlap(e);
    lp -= log_g_factor(G);
    for (int r = 0; r < B; ++r)
        lp += log_factorial(n - 1) - log_factorial(e.row_sum(r) + n - 1);
    for (int i = 0; i < g.num_nodes(); ++i)
        for (const auto& [r, kir] : G.labelled_degrees(i))
            lp += log_factorial(kir);
    return lp;
}

double overlap_description_length(const HalfEdgeLabeling& G) {
    auto [a, b, c] = log_micro_overlap_parts(G);
    return -(a + b + c) / LN2;
}

} // namespace sbm
