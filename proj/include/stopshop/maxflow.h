#pragma once

#include <vector>

namespace stopshop {

/// s-t max-flow / min-cut on a directed graph with non-negative real
/// capacities (Dinic's algorithm).
///
/// Nodes connect to the terminals through add_terminal_weights; after
/// maxflow(), nodes reachable from the source in the residual graph are on the
/// source side of the minimum cut.
class MaxFlowGraph {
public:
    explicit MaxFlowGraph(int node_count);

    int node_count() const { return nodes_; }

    /// Adds capacity source->node and node->sink.
    void add_terminal_weights(int node, double source_cap, double sink_cap);
    /// Adds capacity a->b and b->a.
    void add_edge(int a, int b, double cap_ab, double cap_ba);

    double maxflow();
    bool in_source_segment(int node) const { return source_side_[node]; }

private:
    struct Arc {
        int to;
        int rev;
        double cap;
    };

    void add_arc(int from, int to, double cap, double rev_cap);
    bool build_levels();
    double augment(int v, double pushed);

    int nodes_;
    int source_;
    int sink_;
    std::vector<std::vector<Arc>> adj_;
    std::vector<int> level_;
    std::vector<size_t> next_;
    std::vector<bool> source_side_;
    double eps_ = 0.0;
};

}  // namespace stopshop
