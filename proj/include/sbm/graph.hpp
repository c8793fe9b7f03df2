#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sbm {

// Undirected multigraph with self-loops.
//
// Convention used throughout: A_ij = A_ji is the integer edge multiplicity,
// and A_ii is *twice* the number of self-loops on i, so that
// k_i = sum_j A_ij and sum_i k_i = 2E. Every likelihood formula in this
// library depends on this convention.
class Graph {
  public:
    struct Edge {
        int u, v;     // u <= v
        int64_t mult; // number of parallel edges (loops counted once here)
    };

    Graph() = default;
    explicit Graph(int n_nodes) : adj_(n_nodes), degree_(n_nodes, 0) {}

    // Accumulates multiplicity; u == v adds self-loops (A_uu += 2*mult).
    void add_edge(int u, int v, int64_t mult = 1);

    // Builds adjacency lists; must be called once after the last add_edge.
    // The graph is immutable afterwards and safe to share across threads.
    void finalize();

    int num_nodes() const { return static_cast<int>(adj_.size()); }
    int64_t num_edges() const { return total_edges_; } // E, loops count once
    int64_t degree(int i) const { return degree_[i]; }
    int64_t max_multiplicity() const { return max_mult_; }
    bool is_simple() const { return max_mult_ <= 1 && !has_loops_; }
    bool has_loops() const { return has_loops_; }

    // Unique pairs (u <= v); for u == v, mult is A_uu (i.e. 2 * loops).
    const std::vector<Edge>& edges() const { return edges_; }

    // Neighbors of i as (j, A_ij); contains (i, A_ii) if i has self-loops.
    const std::vector<std::pair<int, int64_t>>& neighbors(int i) const {
        return adj_[i];
    }

    // A_ij (A_ii for u == v); linear in deg(u)
    int64_t multiplicity(int u, int v) const {
        for (const auto& [j, m] : adj_[u])
            if (j == v)
                return m;
        return 0;
    }

    // Flattened half-edge incidence: half-edge h has node(h) and a partner
    // opposite(h) = h ^ 1 at the far end; every unit of multiplicity yields
    // one half-edge pair. Self-loops yield a pair with both ends at i.
    int64_t num_half_edges() const { return 2 * num_instances_; }
    int64_t num_instances() const { return num_instances_; }
    int half_edge_node(int64_t h) const { return half_edge_node_[h]; }
    // index into edges() of the unique pair this instance belongs to
    int instance_pair(int64_t inst) const { return instance_pair_[inst]; }
    const std::vector<int64_t>& incident_half_edges(int i) const {
        return node_half_edges_[i];
    }

    // Collapses parallel edges and drops self-loops.
    Graph simplified() const;

    bool operator==(const Graph& o) const {
        return adj_ == o.adj_ && total_edges_ == o.total_edges_;
    }

  private:
    std::vector<Edge> edges_;
    std::vector<std::vector<std::pair<int, int64_t>>> adj_;
    std::vector<int64_t> degree_;
    std::vector<int> half_edge_node_;
    std::vector<int> instance_pair_;
    std::vector<std::vector<int64_t>> node_half_edges_;
    int64_t total_edges_ = 0;
    int64_t num_instances_ = 0;
    int64_t max_mult_ = 0;
    bool has_loops_ = false;
    bool finalized_ = false;
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Text edge list: lines "u v [multiplicity]", 0-based ids, '#' comments,
// blank lines ignored. N = 1 + max id; duplicate lines accumulate.
Graph load_edge_list(std::istream& in);
Graph load_edge_list_file(const std::string& path);
void save_edge_list(const Graph& g, std::ostream& out);

} // namespace sbm
