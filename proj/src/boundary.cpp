#include "stopshop/boundary.h"

#include <algorithm>
#include <array>
#include <map>
#include <queue>

#include "stopshop/error.h"
#include "stopshop/mesh_ops.h"

namespace stopshop {

namespace {

int argmax_column(const Eigen::VectorXd& v) {
    int best = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j) {
        if (v[j] > v[best]) best = static_cast<int>(j);
    }
    return best;
}

// Merges connected same-label triangle groups smaller than min_size into the
// label they share the most edges with.
void absorb_islands(const Triangles& triangles, std::vector<int>& labels, int min_size) {
    if (min_size <= 1) return;
    const EdgeTopology topo = build_edge_topology(triangles);
    const int k = static_cast<int>(triangles.rows());
    std::vector<std::vector<int>> dual(k);
    for (Eigen::Index e = 0; e < topo.edges.rows(); ++e) {
        const int a = topo.edge_faces(e, 0);
        const int b = topo.edge_faces(e, 1);
        if (b < 0) continue;
        dual[a].push_back(b);
        dual[b].push_back(a);
    }

    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<int> component(k, -1);
        int next = 0;
        for (int start = 0; start < k; ++start) {
            if (component[start] >= 0) continue;
            std::vector<int> members{start};
            component[start] = next;
            for (size_t i = 0; i < members.size(); ++i) {
                for (int u : dual[members[i]]) {
                    if (component[u] < 0 && labels[u] == labels[start]) {
                        component[u] = next;
                        members.push_back(u);
                    }
                }
            }
            ++next;
            if (static_cast<int>(members.size()) >= min_size) continue;

            std::map<int, int> border;
            for (int t : members) {
                for (int u : dual[t]) {
                    if (labels[u] != labels[start]) ++border[labels[u]];
                }
            }
            if (border.empty()) continue;
            int target = border.begin()->first;
            for (const auto& [label, count] : border) {
                if (count > border[target]) target = label;
            }
            for (int t : members) labels[t] = target;
            changed = true;
            break;
        }
    }
}

}  // namespace

VoteField vertex_votes(const AnimSequence& anim, const TriLabeling& labels, int num_parts) {
    const int m = anim.num_vertices();
    const Triangles& tris = anim.triangles();
    if (static_cast<int>(labels.size()) != anim.num_triangles()) {
        throw InvalidSequence("labeling length differs from triangle count");
    }
    const Eigen::VectorXd area = mean_triangle_areas(anim);

    VoteField votes = VoteField::Zero(num_parts, m);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(m);
    for (Eigen::Index t = 0; t < tris.rows(); ++t) {
        const int j = labels[t];
        if (j < 0 || j >= num_parts) throw InvalidSequence("triangle label out of range");
        for (int c = 0; c < 3; ++c) {
            votes(j, tris(t, c)) += area[t];
            total[tris(t, c)] += area[t];
        }
    }
    for (int v = 0; v < m; ++v) {
        if (!(total[v] > 0.0)) throw DegenerateStar(v);
        votes.col(v) /= total[v];
    }
    return votes;
}

SparseMatrix smoothing_operator(const VertexField& vertices, const Triangles& triangles) {
    const SparseMatrix L = cotangent_laplacian(vertices, triangles);
    const auto adj = vertex_neighbors(triangles, static_cast<int>(vertices.rows()));
    std::vector<Eigen::Triplet<double>> entries;
    for (int i = 0; i < L.outerSize(); ++i) {
        // Symmetric L: column i lists row i's off-diagonal weights.
        double sum = 0.0;
        std::vector<std::pair<int, double>> row;
        for (SparseMatrix::InnerIterator it(L, i); it; ++it) {
            if (it.row() == i) continue;
            const double w = std::max(0.0, it.value());
            row.emplace_back(static_cast<int>(it.row()), w);
            sum += w;
        }
        if (sum > 0.0) {
            for (const auto& [j, w] : row) {
                if (w > 0.0) entries.emplace_back(i, j, w / sum);
            }
        } else {
            const double w = 1.0 / static_cast<double>(adj[i].size());
            for (int j : adj[i]) entries.emplace_back(i, j, w);
        }
    }
    SparseMatrix P(vertices.rows(), vertices.rows());
    P.setFromTriplets(entries.begin(), entries.end());
    return P;
}

VoteField smooth_votes(const VoteField& votes, const SparseMatrix& averaging, int iterations, double step) {
    VoteField v = votes;
    for (int it = 0; it < iterations; ++it) {
        VoteField averaged = (averaging * v.transpose()).transpose();
        v = (1.0 - step) * v + step * averaged;
    }
    return v;
}

VoteField smooth_votes(const VoteField& votes, const AnimSequence& anim, const SmoothingOptions& options) {
    return smooth_votes(votes, smoothing_operator(average_mesh(anim), anim.triangles()), options.iterations,
                        options.step);
}

std::vector<int> argmax_labels(const VoteField& votes) {
    std::vector<int> labels(votes.cols());
    for (Eigen::Index v = 0; v < votes.cols(); ++v) labels[v] = argmax_column(votes.col(v));
    return labels;
}

std::vector<int> seam_vertices(const Triangles& triangles, const std::vector<int>& labels, int vertex_count) {
    std::vector<int> first(vertex_count, -1);
    std::vector<bool> seam(vertex_count, false);
    for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            const int v = triangles(t, c);
            if (first[v] < 0) {
                first[v] = labels[t];
            } else if (first[v] != labels[t]) {
                seam[v] = true;
            }
        }
    }
    std::vector<int> out;
    for (int v = 0; v < vertex_count; ++v) {
        if (seam[v]) out.push_back(v);
    }
    return out;
}

SegmentedAnim extract_smooth_boundary(const AnimSequence& anim, const VoteField& votes, int min_island) {
    const int m = anim.num_vertices();
    const int s = static_cast<int>(votes.rows());
    if (votes.cols() != m) throw InvalidSequence("vote field size differs from vertex count");
    const Triangles& tris = anim.triangles();
    const EdgeTopology topo = build_edge_topology(tris);
    const std::vector<int> vertex_label = argmax_labels(votes);

    // One crossing per edge whose endpoints disagree, strictly inside the edge.
    std::vector<int> edge_vertex(topo.edges.rows(), -1);
    std::vector<EdgeSplit> inserted;
    std::vector<Eigen::VectorXd> new_votes;
    for (Eigen::Index e = 0; e < topo.edges.rows(); ++e) {
        const int u = topo.edges(e, 0);
        const int v = topo.edges(e, 1);
        const int a = vertex_label[u];
        const int b = vertex_label[v];
        if (a == b) continue;
        const double du = votes(a, u) - votes(b, u);
        const double dv = votes(a, v) - votes(b, v);
        const double denom = du - dv;
        if (!(denom > 0.0)) continue;
        const double t = du / denom;
        if (!(t > 0.0 && t < 1.0)) continue;
        edge_vertex[e] = m + static_cast<int>(inserted.size());
        inserted.push_back({u, v, t});
        new_votes.push_back((1.0 - t) * votes.col(u) + t * votes.col(v));
    }

    auto vote_of = [&](int vertex) -> Eigen::VectorXd {
        return vertex < m ? Eigen::VectorXd(votes.col(vertex)) : new_votes[vertex - m];
    };

    std::vector<std::array<int, 3>> out_tris;
    std::vector<int> out_source;
    for (Eigen::Index t = 0; t < tris.rows(); ++t) {
        const std::array<int, 3> v{tris(t, 0), tris(t, 1), tris(t, 2)};
        // split[c] is the vertex on the edge opposite corner c (or -1).
        std::array<int, 3> split{};
        int count = 0;
        for (int c = 0; c < 3; ++c) {
            split[c] = edge_vertex[topo.face_edges(t, c)];
            if (split[c] >= 0) ++count;
        }
        auto emit = [&](int a, int b, int c) {
            out_tris.push_back({a, b, c});
            out_source.push_back(static_cast<int>(t));
        };
        if (count == 0) {
            emit(v[0], v[1], v[2]);
        } else if (count == 1) {
            const int c = split[0] >= 0 ? 0 : (split[1] >= 0 ? 1 : 2);
            const int n = split[c];
            emit(v[c], v[(c + 1) % 3], n);
            emit(v[c], n, v[(c + 2) % 3]);
        } else if (count == 2) {
            const int c = split[0] < 0 ? 0 : (split[1] < 0 ? 1 : 2);
            const int c1 = (c + 1) % 3;
            const int c2 = (c + 2) % 3;
            const int n1 = split[c1];  // on edge (v[c2], v[c])
            const int n2 = split[c2];  // on edge (v[c], v[c1])
            emit(v[c], n2, n1);
            emit(n2, v[c1], v[c2]);
            emit(n2, v[c2], n1);
        } else {
            emit(v[0], split[2], split[1]);
            emit(v[1], split[0], split[2]);
            emit(v[2], split[1], split[0]);
            emit(split[0], split[1], split[2]);
        }
    }

    Triangles out(static_cast<Eigen::Index>(out_tris.size()), 3);
    std::vector<int> labels(out_tris.size());
    for (size_t i = 0; i < out_tris.size(); ++i) {
        const auto& tri = out_tris[i];
        out.row(static_cast<Eigen::Index>(i)) << tri[0], tri[1], tri[2];
        const Eigen::VectorXd centroid_vote = (vote_of(tri[0]) + vote_of(tri[1]) + vote_of(tri[2])) / 3.0;
        labels[i] = argmax_column(centroid_vote);
    }
    absorb_islands(out, labels, min_island);

    const int total = m + static_cast<int>(inserted.size());
    std::vector<VertexField> frames;
    frames.reserve(anim.num_frames());
    for (const auto& x : anim.frames()) {
        VertexField y(total, 3);
        y.topRows(m) = x;
        for (size_t i = 0; i < inserted.size(); ++i) {
            const auto& sp = inserted[i];
            y.row(m + static_cast<Eigen::Index>(i)) = (1.0 - sp.t) * x.row(sp.a) + sp.t * x.row(sp.b);
        }
        frames.push_back(std::move(y));
    }

    SegmentedAnim seg{AnimSequence(std::move(frames), out, anim.cuts()), std::move(labels), {}, s, m,
                      std::move(inserted), std::move(out_source)};
    seg.seam_vertices = seam_vertices(out, seg.part_labels, total);
    return seg;
}

SegmentedAnim unsegmented(const AnimSequence& anim, const std::vector<int>& labels, int num_parts) {
    std::vector<int> source(anim.num_triangles());
    for (int t = 0; t < anim.num_triangles(); ++t) source[t] = t;
    SegmentedAnim seg{anim, labels, {}, num_parts, anim.num_vertices(), {}, std::move(source)};
    seg.seam_vertices = seam_vertices(anim.triangles(), labels, anim.num_vertices());
    return seg;
}

SegmentedAnim refine_boundary(const AnimSequence& anim, const TriLabeling& labels, int num_parts,
                              const SmoothingOptions& options, int min_island) {
    const VoteField votes = vertex_votes(anim, labels, num_parts);
    return extract_smooth_boundary(anim, smooth_votes(votes, anim, options), min_island);
}

Eigen::VectorXd interpolate_vertex_values(const SegmentedAnim& seg, const Eigen::VectorXd& values) {
    if (values.size() != seg.original_vertices) throw InvalidSequence("per-vertex value count differs from input mesh");
    Eigen::VectorXd out(seg.original_vertices + static_cast<Eigen::Index>(seg.inserted.size()));
    out.head(seg.original_vertices) = values;
    for (size_t i = 0; i < seg.inserted.size(); ++i) {
        const auto& sp = seg.inserted[i];
        out[seg.original_vertices + static_cast<Eigen::Index>(i)] = (1.0 - sp.t) * values[sp.a] + sp.t * values[sp.b];
    }
    return out;
}

}  // namespace stopshop
