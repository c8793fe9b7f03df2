#pragma once

#include <cstdint>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "sbm/graph.hpp"
#include "sbm/partition.hpp"

namespace sbm {

// Symmetric group-pair edge counts e_rs; e_rr is twice the number of
// internal edges, so sum_s e_rs = e_r (the group volume) and
// sum_rs e_rs = 2E.
//
// Storage is one open-addressing arena shared by every row: per-row blocks
// of power-of-two capacity, probed linearly. Zeroed cells linger until the
// row regrows; iteration skips them. The contiguous layout keeps count
// lookups cache-resident whatever the number of groups, which the O(E)
// sweep contract depends on.
class EdgeCounts {
    struct Cell {
        int key;
        int64_t value;
    };
    struct RowRef {
        uint32_t off = 0;
        uint32_t cap = 0; // power of two
        int used = 0;     // occupied cells (including zeroed ones)
    };

  public:
    EdgeCounts() = default;
    explicit EdgeCounts(int num_groups) { resize_groups(num_groups); }

    static EdgeCounts from(const Graph& g, const Partition& b);

    int num_groups() const { return static_cast<int>(rows_.size()); }
    int64_t row_sum(int r) const { return row_sums_[r]; }
    int64_t total() const; // sum_rs e_rs = 2E

    int64_t at(int r, int s) const {
        const RowRef& row = rows_[r];
        size_t i = probe(row, s);
        return arena_[i].key == s ? arena_[i].value : 0;
    }

    // Symmetric update: adds d to e_rs and e_sr (diagonal once); maintains
    // row sums.
    void add(int r, int s, int64_t d);

    void add_group();
    void remove_last_group();          // row must be empty
    void rename_last_group(int hole);  // move last row/column into 'hole'

    bool operator==(const EdgeCounts& o) const;

    // iteration over the nonzero cells of one row as (key, value)
    class RowView {
      public:
        class const_iterator {
          public:
            const_iterator(const std::vector<Cell>* a, size_t i, size_t end)
                : a_(a), i_(i), end_(end) {
                advance();
            }
            std::pair<int, int64_t> operator*() const {
                return {(*a_)[i_].key, (*a_)[i_].value};
            }
            const_iterator& operator++() {
                ++i_;
                advance();
                return *this;
            }
            bool operator!=(const const_iterator& o) const { return i_ != o.i_; }

          private:
            void advance() {
                while (i_ < end_ && ((*a_)[i_].key < 0 || (*a_)[i_].value == 0))
                    ++i_;
            }
            const std::vector<Cell>* a_;
            size_t i_, end_;
        };
        const_iterator begin() const { return {arena, off, off + cap}; }
        const_iterator end() const { return {arena, off + cap, off + cap}; }
        size_t size() const { // live entries
            size_t n = 0;
            for (size_t i = off; i < off + cap; ++i)
                if ((*arena)[i].key >= 0 && (*arena)[i].value != 0)
                    ++n;
            return n;
        }
        bool empty() const { return size() == 0; }

        const std::vector<Cell>* arena;
        size_t off, cap;
    };
    RowView row(int r) const {
        return {&arena_, rows_[r].off, rows_[r].cap};
    }

  private:
    void resize_groups(int b);
    size_t probe(const RowRef& row, int key) const {
        size_t mask = row.cap - 1;
        size_t i = (static_cast<uint32_t>(key) * 0x9E3779B1u) & mask;
        while (true) {
            const Cell& c = arena_[row.off + i];
            if (c.key < 0 || c.key == key)
                return row.off + i;
            i = (i + 1) & mask;
        }
    }
    void grow_row(int r);
    uint32_t allocate_block(uint32_t cap);
    void compact();

    std::vector<Cell> arena_;
    size_t garbage_ = 0; // abandoned cells from regrown rows
    std::vector<RowRef> rows_;
    std::vector<int64_t> row_sums_;
};

// Edge-count changes induced by moving one node, expressed as symmetric
// (r, s, delta) terms relative to the pre-move partition. 'to' may equal
// b.num_groups() (fresh group).
struct EdgeCountDelta {
    int node = -1;
    int from = -1;
    int to = -1;
    std::vector<std::tuple<int, int, int64_t>> terms; // canonical r <= s
};

EdgeCountDelta edge_count_move_delta(const Graph& g, const Partition& b,
                                     int node, int to);

// Applies the delta; grows the matrix when the move targets a fresh group.
// Does not perform contiguity relabeling (see Partition::MoveEvent).
void apply_delta(EdgeCounts& e, const EdgeCountDelta& d);

// Aggregates lower-level counts under b: result(r,s) = sum over items of
// e_lower between the groups of b. Treats e_lower as the adjacency matrix
// of a multigraph on b.num_items() nodes.
EdgeCounts aggregate(const EdgeCounts& e_lower, const Partition& b);

// Per-group degree histogram eta_k^r.
using DegreeHistogram = std::vector<std::unordered_map<int64_t, int64_t>>;
DegreeHistogram degree_histogram(const Graph& g, const Partition& b);

} // namespace sbm
