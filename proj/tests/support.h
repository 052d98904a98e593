#pragma once

// Synthetic meshes and animations shared by the unit tests and the acceptance suite.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "stopshop/anim.h"
#include "stopshop/library.h"

namespace testsupport {

using stopshop::AnimSequence;
using stopshop::Triangles;
using stopshop::VertexField;

struct Mesh {
    VertexField vertices;
    Triangles triangles;
};

/// (nx+1) x (ny+1) vertices on [0,nx] x [0,ny], two triangles per cell.
inline Mesh grid(int nx, int ny, double spacing = 1.0) {
    Mesh m;
    m.vertices.resize((nx + 1) * (ny + 1), 3);
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) m.vertices.row(j * (nx + 1) + i) << i * spacing, j * spacing, 0.0;
    }
    m.triangles.resize(2 * nx * ny, 3);
    int t = 0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = j * (nx + 1) + i, b = a + 1, c = a + nx + 1, d = c + 1;
            m.triangles.row(t++) << a, b, d;
            m.triangles.row(t++) << a, d, c;
        }
    }
    return m;
}

/// Closed surface of revolution around z in [0, length]; radius(z) gives the
/// profile. rings >= 2 circles, capped with one apex vertex at each end.
template <class Radius>
Mesh capped_tube(int rings, int segments, double length, Radius radius) {
    Mesh m;
    const int ring_vertices = rings * segments;
    m.vertices.resize(ring_vertices + 2, 3);
    for (int r = 0; r < rings; ++r) {
        const double z = length * (r + 0.5) / rings;
        const double rad = radius(z);
        for (int s = 0; s < segments; ++s) {
            const double a = 2.0 * M_PI * s / segments;
            m.vertices.row(r * segments + s) << rad * std::cos(a), rad * std::sin(a), z;
        }
    }
    const int bottom = ring_vertices, top = ring_vertices + 1;
    m.vertices.row(bottom) << 0.0, 0.0, 0.0;
    m.vertices.row(top) << 0.0, 0.0, length;

    std::vector<std::array<int, 3>> tris;
    for (int r = 0; r + 1 < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int a = r * segments + s, b = r * segments + (s + 1) % segments;
            const int c = a + segments, d = b + segments;
            tris.push_back({a, b, d});
            tris.push_back({a, d, c});
        }
    }
    for (int s = 0; s < segments; ++s) {
        tris.push_back({bottom, (s + 1) % segments, s});
        const int base = (rings - 1) * segments;
        tris.push_back({top, base + s, base + (s + 1) % segments});
    }
    m.triangles.resize(static_cast<Eigen::Index>(tris.size()), 3);
    for (size_t t = 0; t < tris.size(); ++t) {
        m.triangles.row(static_cast<Eigen::Index>(t)) << tris[t][0], tris[t][1], tris[t][2];
    }
    return m;
}

/// Two round lobes joined by a thin neck at z = 1 (length 2).
inline Mesh dumbbell(int rings = 24, int segments = 12) {
    return capped_tube(rings, segments, 2.0, [](double z) {
        const double lobe = std::sin(M_PI * z / 1.0);
        return 0.12 + 0.5 * lobe * lobe;
    });
}

/// Octahedron (8 triangles).
inline Mesh octahedron() {
    Mesh m;
    m.vertices.resize(6, 3);
    m.vertices << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
    m.triangles.resize(8, 3);
    m.triangles << 0, 2, 4, 2, 1, 4, 1, 3, 4, 3, 0, 4, 2, 0, 5, 1, 2, 5, 3, 1, 5, 0, 3, 5;
    return m;
}

/// Frames obtained by jittering every vertex of `base` independently.
inline AnimSequence jittered(const Mesh& base, int frames, double amplitude, std::mt19937_64& rng,
                             std::vector<bool> cuts = {}) {
    std::normal_distribution<double> noise(0.0, amplitude);
    std::vector<VertexField> out;
    for (int f = 0; f < frames; ++f) {
        VertexField v = base.vertices;
        for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] += noise(rng);
        out.push_back(v);
    }
    return AnimSequence(out, base.triangles, std::move(cuts));
}

/// Random part animation: m vertices, n frames.
inline stopshop::PartAnim random_part(int m, int n, std::mt19937_64& rng, double cut_probability = 0.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution cut(cut_probability);
    stopshop::PartAnim p;
    p.positions.resize(3 * m, n);
    for (Eigen::Index i = 0; i < p.positions.size(); ++i) p.positions.data()[i] = g(rng);
    p.cuts.assign(n, false);
    p.cuts[0] = true;
    for (int f = 1; f < n; ++f) p.cuts[f] = cut(rng);
    p.triangles.resize(0, 3);
    for (int i = 0; i < m; ++i) p.global_vertices.push_back(i);
    return p;
}

inline Eigen::VectorXd random_weights(int m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.2, 3.0);
    Eigen::VectorXd w(m);
    for (int i = 0; i < m; ++i) w[i] = u(rng);
    return w;
}

/// n frames that visit `poses` (3m x P) in order: pose p is shown on frames
/// [p*hold, (p+1)*hold) cyclically, plus isotropic noise.
inline stopshop::PartAnim planted_poses(const Eigen::MatrixXd& poses, int frames, int hold, double noise,
                                        std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, noise);
    stopshop::PartAnim p;
    p.positions.resize(poses.rows(), frames);
    for (int f = 0; f < frames; ++f) {
        p.positions.col(f) = poses.col((f / hold) % poses.cols());
        for (Eigen::Index i = 0; i < p.positions.rows(); ++i) p.positions(i, f) += g(rng);
    }
    p.cuts.assign(frames, false);
    p.cuts[0] = true;
    p.triangles.resize(0, 3);
    for (int i = 0; i < poses.rows() / 3; ++i) p.global_vertices.push_back(i);
    return p;
}

}  // namespace testsupport
