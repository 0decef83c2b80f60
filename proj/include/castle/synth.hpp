#pragma once

#include <string>
#include <vector>

#include "castle/dataset.hpp"
#include "castle/linalg.hpp"
#include "castle/rng.hpp"

namespace castle {

struct DagEdge {
    int from = 0;
    int to = 0;
    double weight = 1.0;
};

// Ground-truth causal graph over enumerated nodes.
struct Dag {
    int num_nodes = 0;
    std::vector<DagEdge> edges;
    std::vector<int> order;                // node enumeration; a topological order
    int target = -1;
    std::vector<std::string> node_names;   // optional; defaults to x{i}

    std::vector<int> parents(int node) const;
    std::vector<int> children(int node) const;
    // co-parents of the node's children, excluding the node itself
    std::vector<int> spouses(int node) const;
    // nodes sharing at least one parent with the node
    std::vector<int> siblings(int node) const;
    int degree(int node) const;
    bool has_edge(int from, int to) const;
    bool is_acyclic() const; // DFS cycle detector
    std::string name(int node) const;
    void validate() const;
};

enum class LinkKind { Identity, Sigmoid };

// Structural-equation sampling parameters. Each node equals the weighted sum
// of link(parent) over its parents plus N(mu, sigma^2) noise; `w` scales
// every edge weight.
struct SemSpec {
    double mu = 0.0;
    double sigma = 1.0;
    double w = 1.0;
    LinkKind link = LinkKind::Identity;
};

// Draw sigma once per DAG from U[0.3, 1].
double draw_sem_sigma(Rng& rng);

// Random DAG: nodes enumerated randomly, candidate forward edges shuffled and
// added greedily while the per-node out-degree stays at or below
// branching_factor; the result is acyclic by construction.
Dag gen_dag(int num_nodes, int branching_factor, Rng& rng, double edge_weight = 1.0);

// Pick the target node: uniformly among nodes with at least one parent, or
// among parentless nodes when orphan is true.
void choose_target(Dag& dag, Rng& rng, bool orphan = false);

// Node values sampled in topological order; columns indexed by node id.
Matrix gen_node_values(const Dag& dag, const SemSpec& spec, int n, Rng& rng);

// Samples arranged as a Dataset: target in column 0, remaining nodes in
// ascending id order.
Dataset gen_data(const Dag& dag, const SemSpec& spec, int n, Rng& rng);

// Dataset widened by v standalone N(0,1) columns flagged as noise.
Dataset add_noise_vars(const Dataset& ds, int v, Rng& rng);

// The same DAG relabeled to dataset column indices (target becomes node 0).
Dag column_dag(const Dag& dag);

// The fixed ten-node example graph used by the toy experiments: target y with
// parents {x2, x3}, grandparent x1, siblings x5/x6/x7, child x8 co-parented
// by x4, and a disconnected node x9.
Dag toy_dag();

// Edge weight carried by every toy_dag edge.
double toy_edge_weight();

// Sidecar truth file: one line per edge, "<u> -> <v> <weight>" using node names.
void save_edge_list(const std::string& path, const Dag& dag);
Dag load_edge_list(const std::string& path, const std::vector<std::string>& names);

} // namespace castle
