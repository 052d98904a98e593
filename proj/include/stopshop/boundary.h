#pragma once

#include <vector>

#include "stopshop/anim.h"
#include "stopshop/segmentation.h"

namespace stopshop {

/// s x m matrix; column v holds vertex v's vote for every part. Columns sum to 1.
using VoteField = Eigen::MatrixXd;

/// Area-weighted per-vertex average of the part indicator functions, using
/// triangle areas averaged over all frames. Throws DegenerateStar when every
/// triangle around a vertex has zero mean area.
VoteField vertex_votes(const AnimSequence& anim, const TriLabeling& labels, int num_parts);

/// Row-stochastic neighbour averaging on a mesh: clamped cotangent weights
/// normalised to sum 1 per row (uniform weights where all clamped weights vanish).
SparseMatrix smoothing_operator(const VertexField& vertices, const Triangles& triangles);

struct SmoothingOptions {
    int iterations = 20;
    double step = 0.5;
};

/// Repeats v <- (1 - step) v + step * (P v) per part, with P the row-stochastic
/// averaging operator. Affine combinations keep the partition of unity.
VoteField smooth_votes(const VoteField& votes, const SparseMatrix& averaging, int iterations, double step);
/// Smooths on the sequence's average mesh.
VoteField smooth_votes(const VoteField& votes, const AnimSequence& anim, const SmoothingOptions& options);

/// A vertex inserted on edge (a, b) at (1 - t) * x_a + t * x_b in every frame.
struct EdgeSplit {
    int a;
    int b;
    double t;
};

/// Remeshed animation with per-triangle part labels.
struct SegmentedAnim {
    AnimSequence anim;
    std::vector<int> part_labels;
    /// Sorted vertices incident to triangles of different parts.
    std::vector<int> seam_vertices;
    int num_parts = 1;
    /// Vertices [0, original_vertices) are the input vertices; vertex
    /// original_vertices + i was created by inserted[i].
    int original_vertices = 0;
    std::vector<EdgeSplit> inserted;
    /// For each output triangle, the input triangle it subdivides.
    std::vector<int> source_triangle;
};

/// Highest-vote part per vertex; lowest part index on ties.
std::vector<int> argmax_labels(const VoteField& votes);

/// Sorted vertices incident to two or more differently labelled triangles.
std::vector<int> seam_vertices(const Triangles& triangles, const std::vector<int>& labels, int vertex_count);

/// Inserts a vertex on every edge whose endpoint argmax parts differ, at the
/// point where the two parts' linearly interpolated votes are equal, splits
/// triangles 1-to-2 / 1-to-3 / 1-to-4 and labels each new triangle by the
/// argmax of the interpolated votes at its centroid. Edge parameters are
/// shared by all frames, so connectivity stays common and the surface is
/// unchanged. Label islands with fewer than min_island triangles are merged
/// into their most common neighbouring part.
SegmentedAnim extract_smooth_boundary(const AnimSequence& anim, const VoteField& votes, int min_island = 0);

/// Wraps the input sequence as a SegmentedAnim without remeshing.
SegmentedAnim unsegmented(const AnimSequence& anim, const std::vector<int>& labels, int num_parts);

/// votes -> smoothing -> iso-contour remeshing.
SegmentedAnim refine_boundary(const AnimSequence& anim, const TriLabeling& labels, int num_parts,
                              const SmoothingOptions& options = {}, int min_island = 0);

/// Per-vertex values carried onto the remeshed vertices by edge interpolation.
Eigen::VectorXd interpolate_vertex_values(const SegmentedAnim& seg, const Eigen::VectorXd& values);

}  // namespace stopshop
