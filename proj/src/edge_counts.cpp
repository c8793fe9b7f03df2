#include "sbm/edge_counts.hpp"

#include <map>
#include <stdexcept>

namespace sbm {

namespace {
constexpr uint32_t kMinRowCap = 4;
}

uint32_t EdgeCounts::allocate_block(uint32_t cap) {
    uint32_t off = static_cast<uint32_t>(arena_.size());
    arena_.resize(arena_.size() + cap, Cell{-1, 0});
    return off;
}

void EdgeCounts::resize_groups(int b) {
    rows_.assign(b, RowRef{});
    row_sums_.assign(b, 0);
    arena_.clear();
    garbage_ = 0;
    arena_.reserve(static_cast<size_t>(b) * kMinRowCap);
    for (int r = 0; r < b; ++r)
        rows_[r] = RowRef{allocate_block(kMinRowCap), kMinRowCap, 0};
}

void EdgeCounts::grow_row(int r) {
    RowRef old = rows_[r];
    uint32_t live = 0;
    for (uint32_t i = 0; i < old.cap; ++i) {
        const Cell& c = arena_[old.off + i];
        if (c.key >= 0 && c.value != 0)
            ++live;
    }
    uint32_t cap = kMinRowCap;
    while (4 * (live + 1) > 3 * cap)
        cap *= 2;
    RowRef fresh{0, cap, 0};
    fresh.off = allocate_block(cap); // may invalidate nothing: indices only
    rows_[r] = fresh;
    for (uint32_t i = 0; i < old.cap; ++i) {
        Cell c = arena_[old.off + i];
        if (c.key >= 0 && c.value != 0) {
            size_t j = probe(rows_[r], c.key);
            arena_[j] = c;
            ++rows_[r].used;
        }
    }
    garbage_ += old.cap;
    if (garbage_ > arena_.size() / 2)
        compact();
}

void EdgeCounts::compact() {
    std::vector<Cell> fresh;
    fresh.reserve(arena_.size() - garbage_);
    for (auto& row : rows_) {
        uint32_t off = static_cast<uint32_t>(fresh.size());
        for (uint32_t i = 0; i < row.cap; ++i)
            fresh.push_back(arena_[row.off + i]);
        row.off = off;
    }
    arena_ = std::move(fresh);
    garbage_ = 0;
}

EdgeCounts EdgeCounts::from(const Graph& g, const Partition& b) {
    if (b.num_items() != g.num_nodes())
        throw std::invalid_argument("EdgeCounts::from: partition size mismatch");
    EdgeCounts e(b.num_groups());
    for (const Graph::Edge& ed : g.edges()) {
        if (ed.u == ed.v)
            e.add(b[ed.u], b[ed.u], ed.mult); // ed.mult is already A_ii
        else {
            int r = b[ed.u], s = b[ed.v];
            if (r == s)
                e.add(r, r, 2 * ed.mult);
            else
                e.add(r, s, ed.mult);
        }
    }
    return e;
}

int64_t EdgeCounts::total() const {
    int64_t t = 0;
    for (int64_t s : row_sums_)
        t += s;
    return t;
}

void EdgeCounts::add(int r, int s, int64_t d) {
    if (d == 0)
        return;
    auto bump = [this](int a, int b, int64_t dd) {
        size_t i = probe(rows_[a], b);
        if (arena_[i].key != b) {
            arena_[i] = {b, 0};
            ++rows_[a].used;
        }
        arena_[i].value += dd;
        if (4 * rows_[a].used > 3 * static_cast<int>(rows_[a].cap))
            grow_row(a);
    };
    bump(r, s, d);
    if (r != s) {
        bump(s, r, d);
        row_sums_[r] += d;
        row_sums_[s] += d;
    } else {
        row_sums_[r] += d;
    }
}

void EdgeCounts::add_group() {
    rows_.push_back(RowRef{allocate_block(kMinRowCap), kMinRowCap, 0});
    row_sums_.push_back(0);
}

void EdgeCounts::remove_last_group() {
    if (!row(num_groups() - 1).empty() || row_sums_.back() != 0)
        throw std::logic_error("EdgeCounts::remove_last_group: row not empty");
    garbage_ += rows_.back().cap;
    rows_.pop_back();
    row_sums_.pop_back();
    if (garbage_ > arena_.size() / 2 && !rows_.empty())
        compact();
}

void EdgeCounts::rename_last_group(int hole) {
    int last = num_groups() - 1;
    if (hole == last)
        return;
    if (!row(hole).empty() || row_sums_[hole] != 0)
        throw std::logic_error("EdgeCounts::rename_last_group: hole not empty");
    // move row 'last' into the hole's slot and rewrite column indices
    std::vector<std::pair<int, int64_t>> moved;
    for (const auto& [s, v] : row(last))
        moved.emplace_back(s, v);
    garbage_ += rows_[hole].cap;
    rows_[hole] = rows_[last];
    rows_[last] = RowRef{allocate_block(kMinRowCap), kMinRowCap, 0};
    // rewrite the diagonal key (a last->last entry must become hole->hole)
    for (const auto& [s, v] : moved) {
        if (s == last) {
            // clear the stale cell in the moved row, then re-add under 'hole'
            size_t i = probe(rows_[hole], last);
            if (arena_[i].key == last)
                arena_[i].value = 0;
            size_t j = probe(rows_[hole], hole);
            if (arena_[j].key != hole) {
                arena_[j] = {hole, 0};
                ++rows_[hole].used;
            }
            arena_[j].value += v;
        } else {
            // column fix in the partner row: zero 'last', credit 'hole'
            size_t i = probe(rows_[s], last);
            if (arena_[i].key == last)
                arena_[i].value = 0;
            size_t j = probe(rows_[s], hole);
            if (arena_[j].key != hole) {
                arena_[j] = {hole, 0};
                ++rows_[s].used;
            }
            arena_[j].value += v;
            if (4 * rows_[s].used > 3 * static_cast<int>(rows_[s].cap))
                grow_row(s);
        }
    }
    if (4 * rows_[hole].used > 3 * static_cast<int>(rows_[hole].cap))
        grow_row(hole);
    row_sums_[hole] = row_sums_[last];
    row_sums_[last] = 0;
}

bool EdgeCounts::operator==(const EdgeCounts& o) const {
    if (num_groups() != o.num_groups() || row_sums_ != o.row_sums_)
        return false;
    for (int r = 0; r < num_groups(); ++r) {
        if (row(r).size() != o.row(r).size())
            return false;
        for (const auto& [s, v] : row(r))
            if (o.at(r, s) != v)
                return false;
    }
    return true;
}

EdgeCountDelta edge_count_move_delta(const Graph& g, const Partition& b,
                                     int node, int to) {
    EdgeCountDelta d;
    d.node = node;
    d.from = b[node];
    d.to = to;
    if (to == d.from)
        return d;
    std::map<std::pair<int, int>, int64_t> acc;
    auto touch = [&acc](int r, int s, int64_t v) {
        if (r > s)
            std::swap(r, s);
        acc[{r, s}] += v;
    };
    for (const auto& [j, m] : g.neighbors(node)) {
        if (j == node) {
            touch(d.from, d.from, -m); // m is A_ii here
            touch(to, to, m);
        } else {
            int t = b[j];
            touch(d.from, t, t == d.from ? -2 * m : -m);
            touch(to, t, t == to ? 2 * m : m);
        }
    }
    for (const auto& [rs, v] : acc)
        if (v != 0)
            d.terms.emplace_back(rs.first, rs.second, v);
    return d;
}

void apply_delta(EdgeCounts& e, const EdgeCountDelta& d) {
    if (d.to == e.num_groups())
        e.add_group();
    for (const auto& [r, s, v] : d.terms)
        e.add(r, s, v);
}

EdgeCounts aggregate(const EdgeCounts& e_lower, const Partition& b) {
    if (b.num_items() != e_lower.num_groups())
        throw std::invalid_argument("aggregate: partition size mismatch");
    EdgeCounts up(b.num_groups());
    for (int r = 0; r < e_lower.num_groups(); ++r) {
        for (const auto& [s, v] : e_lower.row(r)) {
            if (s < r)
                continue; // visit each unordered pair once
            int R = b[r], S = b[s];
            if (r == s)
                up.add(R, R, v);
            else if (R == S)
                up.add(R, R, 2 * v);
            else
                up.add(R, S, v);
        }
    }
    return up;
}

DegreeHistogram degree_histogram(const Graph& g, const Partition& b) {
    DegreeHistogram h(b.num_groups());
    for (int i = 0; i < g.num_nodes(); ++i)
        ++h[b[i]][g.degree(i)];
    return h;
}

} // namespace sbm
