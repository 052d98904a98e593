#include "stopshop/mesh_ops.h"

#include <algorithm>
#include <array>
#include <string>
#include <map>

#include "stopshop/error.h"

namespace stopshop {

EdgeTopology build_edge_topology(const Triangles& triangles) {
    const Eigen::Index k = triangles.rows();
    std::map<std::pair<int, int>, int> index;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::array<int, 2>> faces;

    EdgeTopology topo;
    topo.face_edges.resize(k, 3);
    for (Eigen::Index t = 0; t < k; ++t) {
        for (int c = 0; c < 3; ++c) {
            int a = triangles(t, (c + 1) % 3);
            int b = triangles(t, (c + 2) % 3);
            if (a > b) std::swap(a, b);
            auto [it, inserted] = index.try_emplace({a, b}, static_cast<int>(edges.size()));
            if (inserted) {
                edges.emplace_back(a, b);
                faces.push_back({static_cast<int>(t), -1});
            } else {
                auto& slot = faces[it->second];
                if (slot[1] != -1) {
                    throw InvalidSequence("non-manifold edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
                }
                slot[1] = static_cast<int>(t);
            }
            topo.face_edges(t, c) = it->second;
        }
    }

    topo.edges.resize(static_cast<Eigen::Index>(edges.size()), 2);
    topo.edge_faces.resize(static_cast<Eigen::Index>(edges.size()), 2);
    for (size_t e = 0; e < edges.size(); ++e) {
        const auto i = static_cast<Eigen::Index>(e);
        topo.edges(i, 0) = edges[e].first;
        topo.edges(i, 1) = edges[e].second;
        topo.edge_faces(i, 0) = faces[e][0];
        topo.edge_faces(i, 1) = faces[e][1];
    }
    return topo;
}

Eigen::VectorXd triangle_areas(const VertexField& vertices, const Triangles& triangles) {
    Eigen::VectorXd areas(triangles.rows());
    for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
        const Eigen::Vector3d a = vertices.row(triangles(t, 0));
        const Eigen::Vector3d b = vertices.row(triangles(t, 1));
        const Eigen::Vector3d c = vertices.row(triangles(t, 2));
        areas[t] = 0.5 * (b - a).cross(c - a).norm();
    }
    return areas;
}

Eigen::VectorXd mean_triangle_areas(const AnimSequence& anim) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(anim.num_triangles());
    for (const auto& x : anim.frames()) sum += triangle_areas(x, anim.triangles());
    return sum / static_cast<double>(anim.num_frames());
}

std::vector<std::vector<int>> vertex_neighbors(const Triangles& triangles, int vertex_count) {
    std::vector<std::vector<int>> adj(vertex_count);
    for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            const int a = triangles(t, c);
            const int b = triangles(t, (c + 1) % 3);
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
}

SparseMatrix cotangent_laplacian(const VertexField& vertices, const Triangles& triangles) {
    const auto m = vertices.rows();
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<size_t>(triangles.rows()) * 12);
    for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            const int i = triangles(t, c);
            const int j = triangles(t, (c + 1) % 3);
            const int o = triangles(t, (c + 2) % 3);
            const Eigen::Vector3d u = vertices.row(i) - vertices.row(o);
            const Eigen::Vector3d v = vertices.row(j) - vertices.row(o);
            const double sin2 = u.cross(v).norm();
            // Degenerate corners contribute nothing rather than inf.
            const double half_cot = sin2 > 0.0 ? 0.5 * u.dot(v) / sin2 : 0.0;
            entries.emplace_back(i, j, half_cot);
            entries.emplace_back(j, i, half_cot);
            entries.emplace_back(i, i, -half_cot);
            entries.emplace_back(j, j, -half_cot);
        }
    }
    SparseMatrix L(m, m);
    L.setFromTriplets(entries.begin(), entries.end());
    return L;
}

Eigen::VectorXd lumped_mass(const VertexField& vertices, const Triangles& triangles) {
    const Eigen::VectorXd areas = triangle_areas(vertices, triangles);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(vertices.rows());
    for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
        for (int c = 0; c < 3; ++c) mass[triangles(t, c)] += areas[t] / 3.0;
    }
    return mass;
}

double bounding_box_extent(const VertexField& vertices) {
    return (vertices.colwise().maxCoeff() - vertices.colwise().minCoeff()).maxCoeff();
}

double bounding_box_diagonal(const VertexField& vertices) {
    return (vertices.colwise().maxCoeff() - vertices.colwise().minCoeff()).norm();
}

}  // namespace stopshop
