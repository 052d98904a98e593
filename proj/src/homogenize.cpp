#include "stopshop/homogenize.h"

#include <algorithm>
#include <string>

#include "stopshop/error.h"
#include "stopshop/mesh_ops.h"

namespace stopshop {

namespace {

SparseMatrix select_block(const SparseMatrix& q, const std::vector<int>& rows, const std::vector<int>& cols) {
    std::vector<int> col_pos(q.cols(), -1);
    for (size_t i = 0; i < cols.size(); ++i) col_pos[cols[i]] = static_cast<int>(i);
    std::vector<int> row_pos(q.rows(), -1);
    for (size_t i = 0; i < rows.size(); ++i) row_pos[rows[i]] = static_cast<int>(i);

    std::vector<Eigen::Triplet<double>> entries;
    for (int k = 0; k < q.outerSize(); ++k) {
        if (col_pos[k] < 0) continue;
        for (SparseMatrix::InnerIterator it(q, k); it; ++it) {
            const int r = row_pos[it.row()];
            if (r >= 0) entries.emplace_back(r, col_pos[k], it.value());
        }
    }
    SparseMatrix block(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    block.setFromTriplets(entries.begin(), entries.end());
    return block;
}

}  // namespace

FemOperators fem_operators(const VertexField& vertices, const Triangles& triangles) {
    FemOperators ops{cotangent_laplacian(vertices, triangles), lumped_mass(vertices, triangles)};
    for (Eigen::Index v = 0; v < ops.mass.size(); ++v) {
        if (!(ops.mass[v] > 0.0)) throw SolveFailure("vertex " + std::to_string(v) + " has zero mass");
    }
    return ops;
}

SparseMatrix bilaplacian(const FemOperators& ops) {
    const Eigen::VectorXd inv_mass = ops.mass.cwiseInverse();
    SparseMatrix q = SparseMatrix(ops.laplacian.transpose()) * inv_mass.asDiagonal() * ops.laplacian;
    return q;
}

std::vector<int> one_ring_dilation(const std::vector<int>& seeds, const Triangles& triangles, int vertex_count) {
    const auto adj = vertex_neighbors(triangles, vertex_count);
    std::vector<bool> mark(vertex_count, false);
    for (int v : seeds) {
        mark[v] = true;
        for (int u : adj[v]) mark[u] = true;
    }
    std::vector<int> out;
    for (int v = 0; v < vertex_count; ++v) {
        if (mark[v]) out.push_back(v);
    }
    return out;
}

std::vector<int> seam_constraint_set(const SegmentedAnim& seg) {
    const int m = seg.anim.num_vertices();
    std::vector<int> set = one_ring_dilation(seg.seam_vertices, seg.anim.triangles(), m);
    if (!set.empty() && static_cast<int>(set.size()) == m) throw OverConstrained();
    return set;
}

Homogenizer::Homogenizer(const FemOperators& ops, std::vector<int> constrained, VertexField target)
    : q_(bilaplacian(ops)), constrained_(std::move(constrained)), target_(std::move(target)) {
    const int m = static_cast<int>(q_.rows());
    if (!std::is_sorted(constrained_.begin(), constrained_.end())) {
        throw SolveFailure("constrained vertex list must be sorted");
    }
    if (constrained_.empty()) throw SolveFailure("homogenization needs at least one constrained vertex");
    if (static_cast<int>(constrained_.size()) >= m) throw OverConstrained();
    if (target_.rows() != static_cast<Eigen::Index>(constrained_.size())) {
        throw SolveFailure("target rows differ from constrained vertex count");
    }

    std::vector<bool> is_constrained(m, false);
    for (int v : constrained_) is_constrained[v] = true;
    for (int v = 0; v < m; ++v) {
        if (!is_constrained[v]) free_.push_back(v);
    }

    const SparseMatrix q_ff = select_block(q_, free_, free_);
    q_free_constrained_ = select_block(q_, free_, constrained_);
    solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(q_ff);
    if (solver_->info() != Eigen::Success) throw SolveFailure("factorization of the free block failed");

    // A free region that touches no constraint leaves Q_ff singular; LDLT then
    // reports a (near) zero or negative pivot instead of failing.
    const Eigen::VectorXd pivots = solver_->vectorD();
    const double scale = pivots.cwiseAbs().maxCoeff();
    if (!(pivots.minCoeff() > 1e-12 * scale)) {
        throw SolveFailure("free block is singular or indefinite (a free region touches no constraint)");
    }
}

VertexField Homogenizer::solve(const VertexField& frame) const {
    Eigen::MatrixX3d fixed_disp(constrained_.size(), 3);
    for (size_t i = 0; i < constrained_.size(); ++i) {
        fixed_disp.row(static_cast<Eigen::Index>(i)) =
            target_.row(static_cast<Eigen::Index>(i)) - frame.row(constrained_[i]);
    }
    const Eigen::MatrixX3d rhs = -(q_free_constrained_ * fixed_disp);
    const Eigen::MatrixX3d free_disp = solver_->solve(rhs);

    VertexField out = frame;
    for (size_t i = 0; i < free_.size(); ++i) {
        out.row(free_[i]) += free_disp.row(static_cast<Eigen::Index>(i));
    }
    for (size_t i = 0; i < constrained_.size(); ++i) {
        out.row(constrained_[i]) = target_.row(static_cast<Eigen::Index>(i));
    }
    return out;
}

double Homogenizer::energy(const VertexField& deformed, const VertexField& frame) const {
    const Eigen::MatrixX3d d = deformed - frame;
    return (d.transpose() * (q_ * d)).trace();
}

VertexField homogenize_frame(const VertexField& frame, const VertexField& avg, const FemOperators& ops,
                             const std::vector<int>& constrained) {
    VertexField target(constrained.size(), 3);
    std::vector<int> sorted = constrained;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < sorted.size(); ++i) target.row(static_cast<Eigen::Index>(i)) = avg.row(sorted[i]);
    return Homogenizer(ops, sorted, target).solve(frame);
}

HomogenizedAnim homogenize_all(const SegmentedAnim& seg) {
    const VertexField avg = average_mesh(seg.anim);
    std::vector<int> constrained = seam_constraint_set(seg);

    VertexField target(constrained.size(), 3);
    for (size_t i = 0; i < constrained.size(); ++i) target.row(static_cast<Eigen::Index>(i)) = avg.row(constrained[i]);

    if (constrained.empty()) {
        return {seg.anim, seg.part_labels, seg.seam_vertices, seg.num_parts, {}, target};
    }

    const Homogenizer solver(fem_operators(avg, seg.anim.triangles()), constrained, target);
    std::vector<VertexField> frames;
    frames.reserve(seg.anim.num_frames());
    for (const auto& y : seg.anim.frames()) frames.push_back(solver.solve(y));

    return {AnimSequence(std::move(frames), seg.anim.triangles(), seg.anim.cuts()), seg.part_labels,
            seg.seam_vertices, seg.num_parts, std::move(constrained), std::move(target)};
}

}  // namespace stopshop
