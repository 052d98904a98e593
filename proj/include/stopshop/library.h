#pragma once

#include <cstdint>
#include <vector>

#include "stopshop/anim.h"

namespace stopshop {

/// One part's animation as a 3m x n matrix; column f is frame f with vertex i's
/// coordinates in rows 3i, 3i+1, 3i+2.
struct PartAnim {
    Eigen::MatrixXd positions;
    Triangles triangles;
    std::vector<bool> cuts;
    /// Vertex index in the full mesh for each part vertex.
    std::vector<int> global_vertices;

    int num_frames() const { return static_cast<int>(positions.cols()); }
    int num_vertices() const { return static_cast<int>(positions.rows() / 3); }
};

/// Whole sequence as a single part.
PartAnim part_from_sequence(const AnimSequence& anim);

Eigen::VectorXd stack_vertices(const VertexField& field);
VertexField unstack_vertices(const Eigen::VectorXd& column);

/// Per-vertex weights repeated for the x, y and z rows.
Eigen::VectorXd expand_weights(const Eigen::VectorXd& per_vertex);

/// Throws InvalidSequence unless the weights are non-negative, not all zero
/// and one per vertex.
void validate_weights(const Eigen::VectorXd& weights, int vertex_count);

/// d pieces as the columns of a 3m x d matrix.
struct ReplacementLibrary {
    Eigen::MatrixXd pieces;
    /// frozen[k]: piece k is fixed input geometry and is never updated.
    std::vector<bool> frozen;

    int size() const { return static_cast<int>(pieces.cols()); }
    bool is_frozen(int k) const { return !frozen.empty() && frozen[k]; }
};

/// Piece index per frame.
using Assignment = std::vector<int>;

/// d x n binary matrix with S(k, f) = 1 iff labels[f] == k.
SparseMatrix selector(const Assignment& labels, int library_size);

struct OptimConfig {
    double lambda = 2.0;
    int restarts = 8;
    int max_iters = 100;
    double rel_tol = 1e-10;
    std::uint64_t seed = 0;
};

/// E(R, l) = 1/2 |X - R S|_W^2 + lambda/2 |X G - R S G|_W^2, evaluated as written.
double total_energy(const Eigen::MatrixXd& positions, const Eigen::MatrixXd& pieces, const Assignment& labels,
                    double lambda, const Eigen::VectorXd& weights, const SparseMatrix& difference);

/// Unary and pairwise terms of E.
struct EnergyTerms {
    /// position[f] = 1/2 |x_f - d_{l_f}|_W^2
    Eigen::VectorXd position;
    /// velocity[g] = lambda/2 |(x_{g+1} - x_g) - (d_{l_{g+1}} - d_{l_g})|_W^2, 0 across cuts
    Eigen::VectorXd velocity;

    double total() const { return position.sum() + velocity.sum(); }
    /// position[f] plus both incident velocity terms.
    Eigen::VectorXd per_frame() const;
};

EnergyTerms energy_terms(const Eigen::MatrixXd& positions, const Eigen::MatrixXd& pieces, const Assignment& labels,
                         double lambda, const Eigen::VectorXd& weights, const std::vector<bool>& cuts);

/// Solves the normal equations (S S^T + lambda S G G^T S^T) R^T = (S + lambda S G G^T) X^T
/// for the unfrozen pieces of `current`, with the frozen pieces moved to the
/// right-hand side. Throws EmptyPiece for an unused unfrozen piece.
ReplacementLibrary update_library(const Eigen::MatrixXd& positions, const Assignment& labels, double lambda,
                                  const SparseMatrix& difference, const ReplacementLibrary& current);
/// Same with no frozen pieces.
ReplacementLibrary update_library(const Eigen::MatrixXd& positions, const Assignment& labels, int library_size,
                                  double lambda, const SparseMatrix& difference);

/// Globally optimal labels for a fixed library (chain dynamic programming).
Assignment assign_labels(const Eigen::MatrixXd& positions, const Eigen::MatrixXd& pieces, double lambda,
                         const Eigen::VectorXd& weights, const std::vector<bool>& cuts);

/// Minimises sum_f unary(f, l_f) + sum_{g active} pairwise(g, l_g, l_{g+1}) over
/// all labelings. unary is n x d; pairwise(g) returns the d x d table for
/// frames (g, g+1) indexed [l_g, l_{g+1}]. Ties go to the lower index.
template <class PairwiseFn>
Assignment solve_chain(const Eigen::MatrixXd& unary, const std::vector<bool>& active, PairwiseFn&& pairwise);

/// Per-iteration record of one descent.
struct DescentTrace {
    /// Labels that entered each library update.
    std::vector<Assignment> labels;
    /// Energy after each library update and after each relabeling.
    std::vector<double> after_update;
    std::vector<double> after_assign;
    int repairs = 0;
};

struct BcdRun {
    ReplacementLibrary library;
    Assignment labels;
    double energy = 0.0;
    DescentTrace trace;
};

struct BcdResult {
    ReplacementLibrary library;
    Assignment labels;
    double energy = 0.0;
    int best_restart = 0;
    /// One entry per restart, in restart order.
    std::vector<BcdRun> runs;
};

/// Labels a restart starts from: uniform random from a generator seeded by
/// (seed, restart), then each piece that ended up unused takes a random frame
/// from a piece used more than once.
Assignment initial_assignment(int frames, int library_size, std::uint64_t seed, int restart,
                              const std::vector<bool>& frozen = {});

/// Block coordinate descent on E with `config.restarts` random starts; returns
/// the lowest-energy result. `fixed` (optional) supplies the first pieces of
/// the library; its frozen pieces keep their geometry. When every piece is
/// frozen this is a single labeling step.
BcdResult bcd_optimize(const PartAnim& part, int library_size, const Eigen::VectorXd& weights,
                       const OptimConfig& config, const ReplacementLibrary* fixed = nullptr);

/// One descent from given labels (no restarts).
BcdRun descend(const PartAnim& part, const Assignment& start, int library_size, const Eigen::VectorXd& weights,
               const OptimConfig& config, const ReplacementLibrary* fixed = nullptr);

struct SweepPoint {
    int library_size = 0;
    double energy = 0.0;
    /// Largest per-frame error (unary plus incident pairwise terms).
    double max_frame_error = 0.0;
    ReplacementLibrary library;
    Assignment labels;
};

/// Runs the optimizer for each size (ascending). Each size after the first
/// also warm-starts from the previous result plus the worst-fit frame as a new
/// piece, so the energy curve is non-increasing.
std::vector<SweepPoint> sweep_library_size(const PartAnim& part, std::vector<int> sizes,
                                           const Eigen::VectorXd& weights, const OptimConfig& config);

/// Smallest library size whose maximum per-frame error is <= cap. Throws
/// CapUnreachable when even one piece per frame misses the cap.
SweepPoint minimal_size_for_cap(const PartAnim& part, double cap, const Eigen::VectorXd& weights,
                                const OptimConfig& config);

/// Library of frames sampled uniformly over time: piece i is frame floor((i + 1/2) n / d).
ReplacementLibrary uniform_sampling_library(const PartAnim& part, int library_size);

}  // namespace stopshop

#include "stopshop/chain_dp.inl"
