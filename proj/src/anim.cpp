#include "stopshop/anim.h"

#include <string>

#include "stopshop/error.h"

namespace stopshop {

AnimSequence::AnimSequence(std::vector<VertexField> frames, Triangles triangles, std::vector<bool> cuts)
    : frames_(std::move(frames)), triangles_(std::move(triangles)), cuts_(std::move(cuts)) {
    if (frames_.empty()) throw EmptyInput();
    const Eigen::Index m = frames_.front().rows();
    if (m < 3) throw InvalidSequence("a mesh needs at least 3 vertices");
    if (triangles_.rows() < 1) throw InvalidSequence("a mesh needs at least 1 triangle");
    for (size_t f = 0; f < frames_.size(); ++f) {
        if (frames_[f].rows() != m) throw ConnectivityMismatch(static_cast<int>(f));
    }

    std::vector<bool> referenced(m, false);
    for (Eigen::Index t = 0; t < triangles_.rows(); ++t) {
        for (int c = 0; c < 3; ++c) {
            const int v = triangles_(t, c);
            if (v < 0 || v >= m) {
                throw InvalidSequence("triangle " + std::to_string(t) + " references vertex " +
                                      std::to_string(v) + " out of range");
            }
            referenced[v] = true;
        }
    }
    for (Eigen::Index v = 0; v < m; ++v) {
        if (!referenced[v]) throw InvalidSequence("vertex " + std::to_string(v) + " is not referenced by any triangle");
    }

    if (cuts_.empty()) cuts_.assign(frames_.size(), false);
    if (cuts_.size() != frames_.size()) throw InvalidSequence("cut vector length differs from frame count");
    cuts_[0] = true;
}

VertexField average_mesh(const AnimSequence& anim) {
    VertexField sum = VertexField::Zero(anim.num_vertices(), 3);
    for (const auto& x : anim.frames()) sum += x;
    return sum / static_cast<double>(anim.num_frames());
}

bool difference_active(const std::vector<bool>& cuts, int g) {
    const bool left = g > 0 && cuts[g];
    return !left && !cuts[g + 1];
}

SparseMatrix forward_difference(const std::vector<bool>& cuts) {
    const int n = static_cast<int>(cuts.size());
    const int cols = std::max(0, n - 1);
    SparseMatrix G(n, cols);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * cols);
    for (int g = 0; g < cols; ++g) {
        if (!difference_active(cuts, g)) continue;
        entries.emplace_back(g, g, -1.0);
        entries.emplace_back(g + 1, g, 1.0);
    }
    G.setFromTriplets(entries.begin(), entries.end());
    return G;
}

SparseMatrix forward_difference(const AnimSequence& anim) { return forward_difference(anim.cuts()); }

AnimSequence scaled(const AnimSequence& anim, double factor) {
    std::vector<VertexField> frames;
    frames.reserve(anim.num_frames());
    for (const auto& x : anim.frames()) frames.emplace_back(x * factor);
    return AnimSequence(std::move(frames), anim.triangles(), anim.cuts());
}

}  // namespace stopshop
