#include "castle/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace castle {

namespace {

inline double apply_link(LinkKind link, double v) {
    switch (link) {
    case LinkKind::Identity: return v;
    case LinkKind::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
    }
    return v;
}

} // namespace

std::vector<int> Dag::parents(int node) const {
    std::vector<int> out;
    for (const auto& e : edges)
        if (e.to == node) out.push_back(e.from);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> Dag::children(int node) const {
    std::vector<int> out;
    for (const auto& e : edges)
        if (e.from == node) out.push_back(e.to);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> Dag::spouses(int node) const {
    std::set<int> out;
    for (int child : children(node))
        for (int p : parents(child))
            if (p != node) out.insert(p);
    return {out.begin(), out.end()};
}

std::vector<int> Dag::siblings(int node) const {
    std::set<int> out;
    for (int parent : parents(node))
        for (int c : children(parent))
            if (c != node) out.insert(c);
    return {out.begin(), out.end()};
}

int Dag::degree(int node) const {
    int deg = 0;
    for (const auto& e : edges) deg += (e.from == node) + (e.to == node);
    return deg;
}

bool Dag::has_edge(int from, int to) const {
    for (const auto& e : edges)
        if (e.from == from && e.to == to) return true;
    return false;
}

bool Dag::is_acyclic() const {
    std::vector<std::vector<int>> adj(num_nodes);
    for (const auto& e : edges) adj[e.from].push_back(e.to);
    std::vector<int> state(num_nodes, 0);
    for (int s = 0; s < num_nodes; ++s) {
        if (state[s] != 0) continue;
        std::vector<std::pair<int, std::size_t>> frames{{s, 0}};
        state[s] = 1;
        while (!frames.empty()) {
            auto& [u, next] = frames.back();
            if (next < adj[u].size()) {
                int v = adj[u][next++];
                if (state[v] == 1) return false;
                if (state[v] == 0) {
                    state[v] = 1;
                    frames.emplace_back(v, 0);
                }
            } else {
                state[u] = 2;
                frames.pop_back();
            }
        }
    }
    return true;
}

std::string Dag::name(int node) const {
    if (node >= 0 && node < static_cast<int>(node_names.size()) && !node_names[node].empty())
        return node_names[node];
    return "x" + std::to_string(node);
}

void Dag::validate() const {
    if (num_nodes < 1) throw ArgumentError("Dag: needs at least one node");
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges) {
        if (e.from < 0 || e.from >= num_nodes || e.to < 0 || e.to >= num_nodes)
            throw ArgumentError("Dag: edge endpoint out of range");
        if (e.from == e.to) throw ArgumentError("Dag: self-loop");
        if (!seen.insert({e.from, e.to}).second)
            throw ArgumentError("Dag: duplicate edge");
    }
    if (!order.empty()) {
        if (static_cast<int>(order.size()) != num_nodes)
            throw ArgumentError("Dag: enumeration order has wrong length");
        std::vector<int> pos(num_nodes, -1);
        for (int i = 0; i < num_nodes; ++i) pos[order[i]] = i;
        for (const auto& e : edges)
            if (pos[e.from] > pos[e.to])
                throw ArgumentError("Dag: enumeration order is not topological");
    }
    if (!is_acyclic()) throw ArgumentError("Dag: contains a directed cycle");
}

double draw_sem_sigma(Rng& rng) {
    return 0.3 + 0.7 * rng.next_uniform();
}

Dag gen_dag(int num_nodes, int branching_factor, Rng& rng, double edge_weight) {
    if (num_nodes < 1) throw ArgumentError("gen_dag: num_nodes must be >= 1");
    if (branching_factor < 0) throw ArgumentError("gen_dag: branching_factor must be >= 0");

    Dag dag;
    dag.num_nodes = num_nodes;
    dag.order.resize(num_nodes);
    for (int i = 0; i < num_nodes; ++i) dag.order[i] = i;
    rng.shuffle(dag.order);

    std::vector<std::pair<int, int>> candidates;
    for (int i = 0; i < num_nodes; ++i)
        for (int j = i + 1; j < num_nodes; ++j)
            candidates.emplace_back(dag.order[i], dag.order[j]);
    rng.shuffle(candidates);

    std::vector<int> outdeg(num_nodes, 0);
    for (const auto& [u, v] : candidates) {
        if (outdeg[u] >= branching_factor) continue;
        dag.edges.push_back({u, v, edge_weight});
        outdeg[u]++;
    }
    return dag;
}

void choose_target(Dag& dag, Rng& rng, bool orphan) {
    std::vector<int> pool;
    for (int i = 0; i < dag.num_nodes; ++i) {
        bool has_parent = !dag.parents(i).empty();
        if (orphan ? !has_parent : has_parent) pool.push_back(i);
    }
    if (pool.empty())
        throw ArgumentError("choose_target: no node matches the requested mode");
    dag.target = pool[rng.next_below(pool.size())];
}

Matrix gen_node_values(const Dag& dag, const SemSpec& spec, int n, Rng& rng) {
    if (n < 1) throw ArgumentError("gen_node_values: n must be >= 1");
    if (spec.sigma <= 0.0) throw ArgumentError("gen_node_values: sigma must be positive");
    dag.validate();

    std::vector<int> order = dag.order;
    if (order.empty()) {
        order.resize(dag.num_nodes);
        for (int i = 0; i < dag.num_nodes; ++i) order[i] = i;
    }

    Matrix values(n, dag.num_nodes);
    for (int node : order) {
        auto noise = rng.gaussian(spec.mu, spec.sigma, static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) values(i, node) = noise[i];
    }
    for (int node : order) {
        for (const auto& e : dag.edges) {
            if (e.to != node) continue;
            const double w = e.weight * spec.w;
            for (int i = 0; i < n; ++i)
                values(i, node) += w * apply_link(spec.link, values(i, e.from));
        }
    }
    return values;
}

Dataset gen_data(const Dag& dag, const SemSpec& spec, int n, Rng& rng) {
    if (dag.target < 0 || dag.target >= dag.num_nodes)
        throw ArgumentError("gen_data: dag has no target node");
    Matrix values = gen_node_values(dag, spec, n, rng);

    Dataset ds;
    ds.xt.resize(n, dag.num_nodes);
    ds.names.resize(dag.num_nodes);
    ds.noise_flags.assign(dag.num_nodes, false);
    ds.xt.col(0) = values.col(dag.target);
    ds.names[0] = dag.node_names.empty() ? std::string("y") : dag.name(dag.target);
    int col = 1;
    for (int node = 0; node < dag.num_nodes; ++node) {
        if (node == dag.target) continue;
        ds.xt.col(col) = values.col(node);
        ds.names[col] = dag.node_names.empty() ? "x" + std::to_string(col) : dag.name(node);
        ++col;
    }
    ds.provenance = "synth";
    return ds;
}

Dataset add_noise_vars(const Dataset& ds, int v, Rng& rng) {
    if (v < 0) throw ArgumentError("add_noise_vars: v must be >= 0");
    if (v == 0) return ds;
    Dataset out = ds;
    const int n = ds.n();
    const int base = static_cast<int>(ds.xt.cols());
    out.xt.conservativeResize(Eigen::NoChange, base + v);
    for (int j = 0; j < v; ++j) {
        auto col = rng.gaussian(0.0, 1.0, static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out.xt(i, base + j) = col[i];
        out.names.push_back("noise" + std::to_string(j + 1));
        out.noise_flags.push_back(true);
    }
    return out;
}

Dag column_dag(const Dag& dag) {
    if (dag.target < 0) throw ArgumentError("column_dag: dag has no target node");
    std::vector<int> col_of(dag.num_nodes, -1);
    col_of[dag.target] = 0;
    int col = 1;
    for (int node = 0; node < dag.num_nodes; ++node) {
        if (node == dag.target) continue;
        col_of[node] = col++;
    }
    Dag out;
    out.num_nodes = dag.num_nodes;
    out.target = 0;
    out.node_names.resize(dag.num_nodes);
    for (int node = 0; node < dag.num_nodes; ++node)
        out.node_names[col_of[node]] = dag.name(node);
    for (const auto& e : dag.edges)
        out.edges.push_back({col_of[e.from], col_of[e.to], e.weight});
    return out;
}

double toy_edge_weight() { return 3.0; }

Dag toy_dag() {
    // Nodes: 0=y, 1..9=x1..x9. Reading of the example graph committed here:
    //   x1 -> x2, x1 -> x3          (grandparent of y)
    //   x2 -> y,  x3 -> y           (parents of y)
    //   x2 -> x5, x3 -> x6, x3 -> x7 (siblings of y)
    //   y  -> x8, x4 -> x8          (child of y; x4 is a spouse)
    //   x9 disconnected
    Dag dag;
    dag.num_nodes = 10;
    dag.target = 0;
    dag.node_names = {"y", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9"};
    const double w = toy_edge_weight();
    dag.edges = {
        {1, 2, w}, {1, 3, w},
        {2, 0, w}, {3, 0, w},
        {2, 5, w}, {3, 6, w}, {3, 7, w},
        {0, 8, w}, {4, 8, w},
    };
    dag.order = {1, 4, 9, 2, 3, 0, 5, 6, 7, 8};
    dag.validate();
    return dag;
}

void save_edge_list(const std::string& path, const Dag& dag) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open edge list for writing: " + path);
    for (const auto& e : dag.edges)
        out << dag.name(e.from) << " -> " << dag.name(e.to) << " " << e.weight << "\n";
}

Dag load_edge_list(const std::string& path, const std::vector<std::string>& names) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge list: " + path);
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);

    Dag dag;
    dag.num_nodes = static_cast<int>(names.size());
    dag.node_names = names;
    dag.target = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string u, arrow, v;
        double w = 1.0;
        if (!(ss >> u >> arrow >> v) || arrow != "->")
            throw DataError("edge list: malformed line " + std::to_string(lineno));
        ss >> w;
        auto iu = index.find(u), iv = index.find(v);
        if (iu == index.end() || iv == index.end())
            throw DataError("edge list: unknown node name on line " + std::to_string(lineno));
        dag.edges.push_back({iu->second, iv->second, w});
    }
    dag.validate();
    return dag;
}

} // namespace castle
