#include "stopshop/maxflow.h"

#include <algorithm>
#include <limits>
#include <queue>

namespace stopshop {

MaxFlowGraph::MaxFlowGraph(int node_count)
    : nodes_(node_count), source_(node_count), sink_(node_count + 1), adj_(node_count + 2) {}

void MaxFlowGraph::add_arc(int from, int to, double cap, double rev_cap) {
    adj_[from].push_back({to, static_cast<int>(adj_[to].size()), cap});
    adj_[to].push_back({from, static_cast<int>(adj_[from].size()) - 1, rev_cap});
}

void MaxFlowGraph::add_terminal_weights(int node, double source_cap, double sink_cap) {
    if (source_cap > 0.0) add_arc(source_, node, source_cap, 0.0);
    if (sink_cap > 0.0) add_arc(node, sink_, sink_cap, 0.0);
}

void MaxFlowGraph::add_edge(int a, int b, double cap_ab, double cap_ba) {
    if (cap_ab > 0.0 || cap_ba > 0.0) add_arc(a, b, cap_ab, cap_ba);
}

bool MaxFlowGraph::build_levels() {
    level_.assign(adj_.size(), -1);
    std::queue<int> queue;
    level_[source_] = 0;
    queue.push(source_);
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop();
        for (const Arc& a : adj_[v]) {
            if (a.cap > eps_ && level_[a.to] < 0) {
                level_[a.to] = level_[v] + 1;
                queue.push(a.to);
            }
        }
    }
    return level_[sink_] >= 0;
}

double MaxFlowGraph::augment(int v, double pushed) {
    if (v == sink_) return pushed;
    for (size_t& i = next_[v]; i < adj_[v].size(); ++i) {
        Arc& a = adj_[v][i];
        if (a.cap <= eps_ || level_[a.to] != level_[v] + 1) continue;
        const double got = augment(a.to, std::min(pushed, a.cap));
        if (got > 0.0) {
            a.cap -= got;
            adj_[a.to][a.rev].cap += got;
            return got;
        }
    }
    return 0.0;
}

double MaxFlowGraph::maxflow() {
    // Residuals below eps are treated as saturated; eps is relative to the
    // largest capacity so floating-point leftovers cannot sustain phantom paths.
    double max_cap = 0.0;
    for (const auto& arcs : adj_) {
        for (const Arc& a : arcs) max_cap = std::max(max_cap, a.cap);
    }
    eps_ = max_cap * 1e-14;

    double flow = 0.0;
    while (build_levels()) {
        next_.assign(adj_.size(), 0);
        while (true) {
            const double pushed = augment(source_, std::numeric_limits<double>::infinity());
            if (pushed <= 0.0) break;
            flow += pushed;
        }
    }

    source_side_.assign(adj_.size(), false);
    std::queue<int> queue;
    source_side_[source_] = true;
    queue.push(source_);
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop();
        for (const Arc& a : adj_[v]) {
            if (a.cap > eps_ && !source_side_[a.to]) {
                source_side_[a.to] = true;
                queue.push(a.to);
            }
        }
    }
    return flow;
}

}  // namespace stopshop
