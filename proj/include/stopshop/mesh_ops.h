#pragma once

#include <vector>

#include "stopshop/anim.h"

namespace stopshop {

/// Unique undirected edges and their incident triangles.
///
/// Edge c of triangle t joins corners (c+1)%3 and (c+2)%3, i.e. it is the edge
/// opposite corner c.
struct EdgeTopology {
    Eigen::Matrix<int, Eigen::Dynamic, 2> edges;       // E x 2, edges(e,0) < edges(e,1)
    Eigen::Matrix<int, Eigen::Dynamic, 2> edge_faces;  // E x 2, -1 on a boundary side
    Triangles face_edges;                              // k x 3
};

/// Throws InvalidSequence on edges shared by more than two triangles.
EdgeTopology build_edge_topology(const Triangles& triangles);

Eigen::VectorXd triangle_areas(const VertexField& vertices, const Triangles& triangles);

/// Triangle area averaged over all frames of the sequence.
Eigen::VectorXd mean_triangle_areas(const AnimSequence& anim);

/// Sorted neighbour lists (vertices sharing an edge).
std::vector<std::vector<int>> vertex_neighbors(const Triangles& triangles, int vertex_count);

/// Symmetric cotangent Laplacian: L_ij = (cot a_ij + cot b_ij) / 2, L_ii = -sum_j L_ij.
SparseMatrix cotangent_laplacian(const VertexField& vertices, const Triangles& triangles);

/// Barycentric lumped mass: one third of the incident triangle areas per vertex.
Eigen::VectorXd lumped_mass(const VertexField& vertices, const Triangles& triangles);

/// Length of the largest side of the axis-aligned bounding box.
double bounding_box_extent(const VertexField& vertices);
double bounding_box_diagonal(const VertexField& vertices);

}  // namespace stopshop
