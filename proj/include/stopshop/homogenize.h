#pragma once

#include <memory>
#include <vector>

#include <Eigen/SparseCholesky>

#include "stopshop/anim.h"
#include "stopshop/boundary.h"

namespace stopshop {

/// Linear FEM operators of a triangle mesh.
struct FemOperators {
    SparseMatrix laplacian;  ///< symmetric cotangent Laplacian, rows sum to 0
    Eigen::VectorXd mass;    ///< lumped (diagonal) mass
};

/// Throws SolveFailure when a vertex has zero lumped mass.
FemOperators fem_operators(const VertexField& vertices, const Triangles& triangles);

/// Discrete squared-Laplacian operator L^T M^-1 L.
SparseMatrix bilaplacian(const FemOperators& ops);

/// Sorted `seeds` plus every vertex sharing an edge with one of them.
std::vector<int> one_ring_dilation(const std::vector<int>& seeds, const Triangles& triangles, int vertex_count);

/// Seam vertices and their one-ring. Throws OverConstrained when that is every vertex.
std::vector<int> seam_constraint_set(const SegmentedAnim& seg);

/// Minimises tr(D^T Q D), Q = L^T M^-1 L, for D = z - y with z pinned to the
/// target positions on the constrained vertices.
///
/// The free block of Q is factorised once at construction and reused for
/// every frame and coordinate.
class Homogenizer {
public:
    Homogenizer(const FemOperators& ops, std::vector<int> constrained, VertexField target);

    /// Solves one frame. Constrained rows of the result equal the target exactly.
    VertexField solve(const VertexField& frame) const;

    /// tr(D^T Q D) for D = deformed - frame.
    double energy(const VertexField& deformed, const VertexField& frame) const;

    const SparseMatrix& system() const { return q_; }
    const std::vector<int>& constrained() const { return constrained_; }
    const std::vector<int>& free_vertices() const { return free_; }
    const VertexField& target() const { return target_; }

private:
    SparseMatrix q_;
    SparseMatrix q_free_constrained_;
    std::vector<int> constrained_;
    std::vector<int> free_;
    VertexField target_;  // rows follow constrained_
    std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> solver_;
};

/// Single-frame convenience: builds the factorisation, pins the constrained
/// vertices to `avg` and solves.
VertexField homogenize_frame(const VertexField& frame, const VertexField& avg, const FemOperators& ops,
                             const std::vector<int>& constrained);

struct HomogenizedAnim {
    AnimSequence anim;
    std::vector<int> part_labels;
    std::vector<int> seam_vertices;
    int num_parts = 1;
    std::vector<int> constrained;
    /// Average positions of the constrained vertices (rows follow `constrained`).
    VertexField seam_target;
};

/// Homogenises every frame against the average mesh with one shared factorisation.
/// A sequence without seams is returned unchanged.
HomogenizedAnim homogenize_all(const SegmentedAnim& seg);

}  // namespace stopshop
