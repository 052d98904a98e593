#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "stopshop/anim.h"

namespace stopshop {

/// Seed triangles per part; part j is seeded by parts[j].
struct SeedSet {
    std::vector<std::vector<int>> parts;

    int num_parts() const { return static_cast<int>(parts.size()); }
};

/// Throws InvalidSeeds unless there are >= 2 non-empty, pairwise disjoint
/// parts whose indices lie in [0, triangle_count).
void validate_seeds(const SeedSet& seeds, int triangle_count);

/// One line per part, whitespace-separated triangle indices; '#' starts a comment.
SeedSet read_seed_file(const std::filesystem::path& path);

/// Per-triangle part index in [0, s).
using TriLabeling = std::vector<int>;

/// s x k table of dual-graph geodesic distances (+inf when unreachable).
struct DistanceTable {
    Eigen::MatrixXd dist;
    bool any_unreachable = false;
};

/// Multi-source Dijkstra over the triangle dual graph; dual edges weigh the
/// centroid-to-centroid distance on `vertices`.
DistanceTable geodesic_distances(const VertexField& vertices, const Triangles& triangles, const SeedSet& seeds);

/// Unary and pairwise weights of the part segmentation energy
///   E(q) = sum_a u_a(q_a) + gamma * sum_{a~b} w_ab [q_a != q_b].
struct SegmentationTerms {
    /// s x k; u(j, a) = dist(a, T_j). Triangles that reach no seed get 0 for
    /// every part; a part unreachable from a triangle that reaches some other
    /// part stays +inf.
    Eigen::MatrixXd unary;
    /// Interior dual edges (a, b) with w_ab = sum_f |e_fab| (1 + sum_{i on e} |x_fi - avg_i|).
    std::vector<std::array<int, 2>> pairs;
    std::vector<double> weights;
    bool any_unreachable = false;
};

SegmentationTerms build_segmentation_terms(const AnimSequence& anim, const SeedSet& seeds);

double segmentation_energy(const SegmentationTerms& terms, const TriLabeling& labels, double gamma);
double segmentation_energy(const AnimSequence& anim, const TriLabeling& labels, const SeedSet& seeds, double gamma);

/// Cut part of the energy without gamma: sum of w_ab over cut dual edges.
double cut_cost(const SegmentationTerms& terms, const TriLabeling& labels);

/// Each triangle takes its nearest seed's part (lowest part index on ties).
TriLabeling nearest_seed_labeling(const SegmentationTerms& terms);

struct SegmentationResult {
    TriLabeling labels;
    /// Factor that mapped the average mesh to a unit bounding box.
    double scale = 1.0;
    /// Energy of `labels` evaluated on the rescaled sequence.
    double energy = 0.0;
    /// Energy of the nearest-seed labeling the solver started from.
    double initial_energy = 0.0;
    /// Some triangle could not reach any seed (its unary was zeroed).
    bool unreachable_warning = false;
};

/// Minimizes the segmentation energy on `terms`. Seed triangles are held at
/// their part. Two parts use one exact min-cut; more use alpha-expansion
/// started from the nearest-seed labeling.
TriLabeling minimize_segmentation(const SegmentationTerms& terms, const SeedSet& seeds, double gamma);

/// Rescales the sequence so the average mesh fits a unit bounding box, then
/// minimizes the segmentation energy there.
SegmentationResult segment_parts(const AnimSequence& anim, const SeedSet& seeds, double gamma = 100.0);

/// Scale factor that maps the average mesh's largest bounding-box side to 1.
double unit_box_scale(const AnimSequence& anim);

}  // namespace stopshop
