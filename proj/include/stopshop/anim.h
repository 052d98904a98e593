#pragma once

#include <filesystem>
#include <set>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SparseCore>

namespace stopshop {

/// m x 3 vertex coordinates.
using VertexField = Eigen::Matrix<double, Eigen::Dynamic, 3>;
/// k x 3 vertex indices.
using Triangles = Eigen::Matrix<int, Eigen::Dynamic, 3>;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// An animated triangle mesh: n frames sharing one triangle list.
///
/// Immutable after construction. cuts[f] marks frame f as the first frame of
/// an unrelated clip; frame 0 is always a cut.
class AnimSequence {
public:
    AnimSequence(std::vector<VertexField> frames, Triangles triangles, std::vector<bool> cuts = {});

    int num_frames() const { return static_cast<int>(frames_.size()); }
    int num_vertices() const { return static_cast<int>(frames_.front().rows()); }
    int num_triangles() const { return static_cast<int>(triangles_.rows()); }

    const VertexField& frame(int f) const { return frames_[f]; }
    const std::vector<VertexField>& frames() const { return frames_; }
    const Triangles& triangles() const { return triangles_; }
    const std::vector<bool>& cuts() const { return cuts_; }

private:
    std::vector<VertexField> frames_;
    Triangles triangles_;
    std::vector<bool> cuts_;
};

/// Per-vertex mean position over all frames.
VertexField average_mesh(const AnimSequence& anim);

/// Temporal forward difference G (n x (n-1)).
///
/// Column g maps frame g to +1 at row g+1 and -1 at row g. The column is zero
/// when frame g or frame g+1 is a cut. The implicit cut on frame 0 has no
/// effect since no difference precedes it.
SparseMatrix forward_difference(const std::vector<bool>& cuts);
SparseMatrix forward_difference(const AnimSequence& anim);

/// True when column g of forward_difference(cuts) is non-zero.
bool difference_active(const std::vector<bool>& cuts, int g);

/// Same sequence with every frame scaled about the origin.
AnimSequence scaled(const AnimSequence& anim, double factor);

// ---- OBJ and plain-text I/O ----

struct TriMesh {
    VertexField vertices;
    Triangles triangles;
};

/// Reads vertices ("v") and faces ("f") from an ASCII OBJ file. Polygons with
/// more than three corners are fan-triangulated. Texture/normal indices are ignored.
TriMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const VertexField& vertices, const Triangles& triangles);

/// Loads frames in the given order. Connectivity comes from frame 0.
AnimSequence load_sequence(const std::vector<std::filesystem::path>& frame_sources,
                           const std::set<int>& cut_marks = {});

/// Loads every *.obj in a directory, sorted lexicographically by file name.
AnimSequence load_sequence_dir(const std::filesystem::path& dir, const std::set<int>& cut_marks = {});

/// Writes frame_NNNNN.obj files and, when any cut besides frame 0 is set, cuts.txt.
void save_sequence(const AnimSequence& anim, const std::filesystem::path& dir);

/// One frame index per line; blank lines and '#' comments are skipped.
std::set<int> read_cut_file(const std::filesystem::path& path);

/// Whitespace-separated non-negative per-vertex weights; length must equal expected_count.
Eigen::VectorXd read_weights_file(const std::filesystem::path& path, int expected_count);

}  // namespace stopshop
