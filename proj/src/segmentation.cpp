#include "stopshop/segmentation.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <string>

#include "stopshop/error.h"
#include "stopshop/maxflow.h"
#include "stopshop/mesh_ops.h"

namespace stopshop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Accumulates a binary (keep = 0 / switch = 1) energy and turns it into a graph.
class BinaryEnergy {
public:
    explicit BinaryEnergy(int nodes) : cost0_(nodes, 0.0), cost1_(nodes, 0.0), graph_(nodes) {}

    void add_unary(int v, double e0, double e1) {
        cost0_[v] += e0;
        cost1_[v] += e1;
    }

    // Regular pairwise term: e00 + e11 <= e01 + e10.
    void add_pairwise(int a, int b, double e00, double e01, double e10, double e11) {
        // E = e00 + (e10 - e00) x_a + (e11 - e10) x_b + (e01 + e10 - e00 - e11) (1 - x_a) x_b
        cost1_[a] += e10 - e00;
        cost1_[b] += e11 - e10;
        const double coupling = e01 + e10 - e00 - e11;
        if (coupling > 0.0) graph_.add_edge(a, b, coupling, 0.0);
    }

    // Returns x_v for every node (true = 1).
    std::vector<bool> solve() {
        const int n = graph_.node_count();
        for (int v = 0; v < n; ++v) {
            // Cutting source->v puts v on the sink side (x = 1); v->sink keeps x = 0.
            const double d = cost1_[v] - cost0_[v];
            if (d > 0.0) {
                graph_.add_terminal_weights(v, d, 0.0);
            } else if (d < 0.0) {
                graph_.add_terminal_weights(v, 0.0, -d);
            }
        }
        graph_.maxflow();
        std::vector<bool> x(n);
        for (int v = 0; v < n; ++v) x[v] = !graph_.in_source_segment(v);
        return x;
    }

private:
    std::vector<double> cost0_;
    std::vector<double> cost1_;
    MaxFlowGraph graph_;
};

// Finite stand-in for a forbidden label: exceeds any achievable finite energy.
double forbidden_cost(const SegmentationTerms& terms, double gamma) {
    double total = 1.0;
    for (Eigen::Index a = 0; a < terms.unary.cols(); ++a) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < terms.unary.rows(); ++j) {
            if (std::isfinite(terms.unary(j, a))) worst = std::max(worst, terms.unary(j, a));
        }
        total += worst;
    }
    for (double w : terms.weights) total += gamma * w;
    return 2.0 * total;
}

// Unary with seed constraints and +inf replaced by the forbidden cost.
Eigen::MatrixXd constrained_unary(const SegmentationTerms& terms, const SeedSet& seeds, double gamma) {
    const double big = forbidden_cost(terms, gamma);
    Eigen::MatrixXd u = terms.unary;
    for (Eigen::Index a = 0; a < u.cols(); ++a) {
        for (Eigen::Index j = 0; j < u.rows(); ++j) {
            if (!std::isfinite(u(j, a))) u(j, a) = big;
        }
    }
    for (int j = 0; j < seeds.num_parts(); ++j) {
        for (int a : seeds.parts[j]) {
            for (Eigen::Index other = 0; other < u.rows(); ++other) {
                if (other != j) u(other, a) = big;
            }
        }
    }
    return u;
}

double labeling_cost(const Eigen::MatrixXd& unary, const SegmentationTerms& terms, const TriLabeling& labels,
                     double gamma) {
    double e = 0.0;
    for (size_t a = 0; a < labels.size(); ++a) e += unary(labels[a], static_cast<Eigen::Index>(a));
    return e + gamma * cut_cost(terms, labels);
}

TriLabeling two_label_cut(const Eigen::MatrixXd& unary, const SegmentationTerms& terms, double gamma) {
    const int k = static_cast<int>(unary.cols());
    BinaryEnergy energy(k);
    for (int a = 0; a < k; ++a) energy.add_unary(a, unary(0, a), unary(1, a));
    for (size_t e = 0; e < terms.pairs.size(); ++e) {
        const double w = gamma * terms.weights[e];
        energy.add_pairwise(terms.pairs[e][0], terms.pairs[e][1], 0.0, w, w, 0.0);
    }
    const std::vector<bool> x = energy.solve();
    TriLabeling labels(k);
    for (int a = 0; a < k; ++a) labels[a] = x[a] ? 1 : 0;
    return labels;
}

TriLabeling alpha_expansion(const Eigen::MatrixXd& unary, const SegmentationTerms& terms, double gamma,
                            TriLabeling labels) {
    const int s = static_cast<int>(unary.rows());
    const int k = static_cast<int>(unary.cols());
    double current = labeling_cost(unary, terms, labels, gamma);
    bool improved = true;
    while (improved) {
        improved = false;
        for (int alpha = 0; alpha < s; ++alpha) {
            BinaryEnergy energy(k);
            for (int a = 0; a < k; ++a) energy.add_unary(a, unary(labels[a], a), unary(alpha, a));
            for (size_t e = 0; e < terms.pairs.size(); ++e) {
                const int a = terms.pairs[e][0];
                const int b = terms.pairs[e][1];
                const double w = gamma * terms.weights[e];
                const double e00 = labels[a] != labels[b] ? w : 0.0;
                const double e01 = labels[a] != alpha ? w : 0.0;
                const double e10 = alpha != labels[b] ? w : 0.0;
                energy.add_pairwise(a, b, e00, e01, e10, 0.0);
            }
            const std::vector<bool> x = energy.solve();
            TriLabeling proposal = labels;
            for (int a = 0; a < k; ++a) {
                if (x[a]) proposal[a] = alpha;
            }
            const double candidate = labeling_cost(unary, terms, proposal, gamma);
            if (candidate < current - 1e-12 * std::max(1.0, std::abs(current))) {
                labels = std::move(proposal);
                current = candidate;
                improved = true;
            }
        }
    }
    return labels;
}

}  // namespace

void validate_seeds(const SeedSet& seeds, int triangle_count) {
    if (seeds.num_parts() < 2) throw InvalidSeeds("need seeds for at least 2 parts");
    std::vector<int> owner(triangle_count, -1);
    for (int j = 0; j < seeds.num_parts(); ++j) {
        if (seeds.parts[j].empty()) throw InvalidSeeds("part " + std::to_string(j + 1) + " has no seed triangle");
        for (int t : seeds.parts[j]) {
            if (t < 0 || t >= triangle_count) {
                throw InvalidSeeds("seed triangle " + std::to_string(t) + " out of range");
            }
            if (owner[t] != -1 && owner[t] != j) {
                throw InvalidSeeds("triangle " + std::to_string(t) + " seeds more than one part");
            }
            owner[t] = j;
        }
    }
}

SeedSet read_seed_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    SeedSet seeds;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = line.substr(0, line.find('#'));
        std::istringstream ss(line);
        std::vector<int> part;
        int t;
        while (ss >> t) part.push_back(t);
        if (!ss.eof()) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected triangle index");
        if (!part.empty()) seeds.parts.push_back(std::move(part));
    }
    return seeds;
}

DistanceTable geodesic_distances(const VertexField& vertices, const Triangles& triangles, const SeedSet& seeds) {
    const int k = static_cast<int>(triangles.rows());
    const int s = seeds.num_parts();
    const EdgeTopology topo = build_edge_topology(triangles);

    Eigen::MatrixX3d centroids(k, 3);
    for (int t = 0; t < k; ++t) {
        centroids.row(t) =
            (vertices.row(triangles(t, 0)) + vertices.row(triangles(t, 1)) + vertices.row(triangles(t, 2))) / 3.0;
    }
    std::vector<std::vector<std::pair<int, double>>> dual(k);
    for (Eigen::Index e = 0; e < topo.edges.rows(); ++e) {
        const int a = topo.edge_faces(e, 0);
        const int b = topo.edge_faces(e, 1);
        if (b < 0) continue;
        const double len = (centroids.row(a) - centroids.row(b)).norm();
        dual[a].emplace_back(b, len);
        dual[b].emplace_back(a, len);
    }

    DistanceTable table;
    table.dist = Eigen::MatrixXd::Constant(s, k, kInf);
    using Entry = std::pair<double, int>;
    for (int j = 0; j < s; ++j) {
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
        for (int t : seeds.parts[j]) {
            table.dist(j, t) = 0.0;
            queue.emplace(0.0, t);
        }
        while (!queue.empty()) {
            const auto [d, t] = queue.top();
            queue.pop();
            if (d > table.dist(j, t)) continue;
            for (const auto& [u, len] : dual[t]) {
                const double nd = d + len;
                if (nd < table.dist(j, u)) {
                    table.dist(j, u) = nd;
                    queue.emplace(nd, u);
                }
            }
        }
    }
    table.any_unreachable = !table.dist.allFinite();
    return table;
}

SegmentationTerms build_segmentation_terms(const AnimSequence& anim, const SeedSet& seeds) {
    validate_seeds(seeds, anim.num_triangles());
    const VertexField avg = average_mesh(anim);
    const DistanceTable table = geodesic_distances(avg, anim.triangles(), seeds);

    SegmentationTerms terms;
    terms.unary = table.dist;
    terms.any_unreachable = table.any_unreachable;
    for (Eigen::Index a = 0; a < terms.unary.cols(); ++a) {
        if (!terms.unary.col(a).array().isFinite().any()) terms.unary.col(a).setZero();
    }

    // Per-vertex displacement magnitude from the average, per frame.
    const int n = anim.num_frames();
    Eigen::MatrixXd displacement(anim.num_vertices(), n);
    for (int f = 0; f < n; ++f) displacement.col(f) = (anim.frame(f) - avg).rowwise().norm();

    const EdgeTopology topo = build_edge_topology(anim.triangles());
    for (Eigen::Index e = 0; e < topo.edges.rows(); ++e) {
        const int a = topo.edge_faces(e, 0);
        const int b = topo.edge_faces(e, 1);
        if (b < 0) continue;
        const int i = topo.edges(e, 0);
        const int j = topo.edges(e, 1);
        double w = 0.0;
        for (int f = 0; f < n; ++f) {
            const double len = (anim.frame(f).row(i) - anim.frame(f).row(j)).norm();
            w += len * (1.0 + displacement(i, f) + displacement(j, f));
        }
        terms.pairs.push_back({a, b});
        terms.weights.push_back(w);
    }
    return terms;
}

double cut_cost(const SegmentationTerms& terms, const TriLabeling& labels) {
    double cut = 0.0;
    for (size_t e = 0; e < terms.pairs.size(); ++e) {
        if (labels[terms.pairs[e][0]] != labels[terms.pairs[e][1]]) cut += terms.weights[e];
    }
    return cut;
}

double segmentation_energy(const SegmentationTerms& terms, const TriLabeling& labels, double gamma) {
    double e = 0.0;
    for (size_t a = 0; a < labels.size(); ++a) e += terms.unary(labels[a], static_cast<Eigen::Index>(a));
    return e + gamma * cut_cost(terms, labels);
}

double segmentation_energy(const AnimSequence& anim, const TriLabeling& labels, const SeedSet& seeds, double gamma) {
    return segmentation_energy(build_segmentation_terms(anim, seeds), labels, gamma);
}

TriLabeling nearest_seed_labeling(const SegmentationTerms& terms) {
    TriLabeling labels(terms.unary.cols(), 0);
    for (Eigen::Index a = 0; a < terms.unary.cols(); ++a) {
        int best = 0;
        for (Eigen::Index j = 1; j < terms.unary.rows(); ++j) {
            if (terms.unary(j, a) < terms.unary(best, a)) best = static_cast<int>(j);
        }
        labels[a] = best;
    }
    return labels;
}

TriLabeling minimize_segmentation(const SegmentationTerms& terms, const SeedSet& seeds, double gamma) {
    if (seeds.num_parts() < 2) throw InvalidSeeds("need seeds for at least 2 parts");
    const Eigen::MatrixXd unary = constrained_unary(terms, seeds, gamma);
    TriLabeling init = nearest_seed_labeling(terms);
    for (int j = 0; j < seeds.num_parts(); ++j) {
        for (int a : seeds.parts[j]) init[a] = j;
    }
    if (gamma == 0.0) return init;
    if (seeds.num_parts() == 2) {
        TriLabeling cut = two_label_cut(unary, terms, gamma);
        // Min-cut ties are resolved arbitrarily; keep the start when it is no worse.
        return labeling_cost(unary, terms, cut, gamma) < labeling_cost(unary, terms, init, gamma) ? cut : init;
    }
    return alpha_expansion(unary, terms, gamma, std::move(init));
}

double unit_box_scale(const AnimSequence& anim) {
    const double extent = bounding_box_extent(average_mesh(anim));
    return extent > 0.0 ? 1.0 / extent : 1.0;
}

SegmentationResult segment_parts(const AnimSequence& anim, const SeedSet& seeds, double gamma) {
    if (seeds.parts.empty()) throw InvalidSeeds("empty seed set");
    if (gamma < 0.0) throw InvalidSeeds("gamma must be non-negative");

    SegmentationResult result;
    result.scale = unit_box_scale(anim);
    const SegmentationTerms terms = build_segmentation_terms(scaled(anim, result.scale), seeds);
    result.unreachable_warning = terms.any_unreachable;

    TriLabeling init = nearest_seed_labeling(terms);
    result.initial_energy = segmentation_energy(terms, init, gamma);
    result.labels = minimize_segmentation(terms, seeds, gamma);
    result.energy = segmentation_energy(terms, result.labels, gamma);
    return result;
}

}  // namespace stopshop
