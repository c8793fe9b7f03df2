#include "sbm/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sbm {

void Graph::add_edge(int u, int v, int64_t mult) {
    if (finalized_)
        throw std::logic_error("Graph::add_edge after finalize");
    if (u < 0 || v < 0 || mult < 0)
        throw std::invalid_argument("Graph::add_edge: negative input");
    if (mult == 0)
        return;
    if (u > v)
        std::swap(u, v);
    int need = v + 1;
    if (need > num_nodes()) {
        adj_.resize(need);
        degree_.resize(need, 0);
    }
    edges_.push_back({u, v, mult});
}

void Graph::finalize() {
    if (finalized_)
        return;
    // merge duplicate pairs
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.u, a.v) < std::tie(b.u, b.v);
    });
    std::vector<Edge> merged;
    for (const Edge& e : edges_) {
        if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v)
            merged.back().mult += e.mult;
        else
            merged.push_back(e);
    }
    edges_ = std::move(merged);

    for (Edge& e : edges_) {
        if (e.u == e.v) {
            int64_t loops = e.mult;
            e.mult = 2 * loops; // stored as A_ii
            adj_[e.u].emplace_back(e.u, e.mult);
            degree_[e.u] += e.mult;
            total_edges_ += loops;
            num_instances_ += loops;
            has_loops_ = true;
            max_mult_ = std::max(max_mult_, loops);
        } else {
            adj_[e.u].emplace_back(e.v, e.mult);
            adj_[e.v].emplace_back(e.u, e.mult);
            degree_[e.u] += e.mult;
            degree_[e.v] += e.mult;
            total_edges_ += e.mult;
            num_instances_ += e.mult;
            max_mult_ = std::max(max_mult_, e.mult);
        }
    }
    // half-edge incidence
    half_edge_node_.reserve(2 * num_instances_);
    instance_pair_.reserve(num_instances_);
    node_half_edges_.resize(num_nodes());
    for (size_t pi = 0; pi < edges_.size(); ++pi) {
        const Edge& e = edges_[pi];
        int64_t inst = (e.u == e.v) ? e.mult / 2 : e.mult;
        for (int64_t m = 0; m < inst; ++m) {
            int64_t h = static_cast<int64_t>(half_edge_node_.size());
            half_edge_node_.push_back(e.u);
            half_edge_node_.push_back(e.v);
            instance_pair_.push_back(static_cast<int>(pi));
            node_half_edges_[e.u].push_back(h);
            node_half_edges_[e.v].push_back(h + 1);
        }
    }
    finalized_ = true;
}

Graph Graph::simplified() const {
    Graph s(num_nodes());
    for (const Edge& e : edges_)
        if (e.u != e.v)
            s.add_edge(e.u, e.v, 1);
    s.finalize();
    return s;
}

Graph load_edge_list(std::istream& in) {
    Graph g;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;)
            tok.push_back(t);
        if (tok.empty())
            continue;
        if (tok.size() < 2 || tok.size() > 3)
            throw ParseError("edge list line " + std::to_string(lineno) +
                             ": expected 'u v [multiplicity]'");
        auto parse_int = [&](const std::string& t) -> long long {
            size_t pos = 0;
            long long val = 0;
            try {
                val = std::stoll(t, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != t.size())
                throw ParseError("edge list line " + std::to_string(lineno) +
                                 ": non-integer token '" + t + "'");
            return val;
        };
        long long u = parse_int(tok[0]);
        long long v = parse_int(tok[1]);
        long long mult = tok.size() == 3 ? parse_int(tok[2]) : 1;
        if (u < 0 || v < 0)
            throw ParseError("edge list line " + std::to_string(lineno) +
                             ": negative node id");
        if (mult < 0)
            throw ParseError("edge list line " + std::to_string(lineno) +
                             ": negative multiplicity");
        g.add_edge(static_cast<int>(u), static_cast<int>(v), mult);
    }
    if (in.bad())
        throw ParseError("edge list: read error");
    g.finalize();
    return g;
}

Graph load_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open edge list file: " + path);
    return load_edge_list(in);
}

void save_edge_list(const Graph& g, std::ostream& out) {
    for (const Graph::Edge& e : g.edges()) {
        int64_t mult = (e.u == e.v) ? e.mult / 2 : e.mult;
        if (mult == 1)
            out << e.u << ' ' << e.v << '\n';
        else
            out << e.u << ' ' << e.v << ' ' << mult << '\n';
    }
}

} // namespace sbm
