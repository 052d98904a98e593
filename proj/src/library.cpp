#include "stopshop/library.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include <Eigen/Cholesky>

#include "stopshop/error.h"

namespace stopshop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<bool> active_differences(const std::vector<bool>& cuts, double lambda) {
    const int n = static_cast<int>(cuts.size());
    std::vector<bool> active(std::max(0, n - 1), false);
    if (lambda == 0.0) return active;
    for (int g = 0; g + 1 < n; ++g) active[g] = difference_active(cuts, g);
    return active;
}

std::vector<int> usage_counts(const Assignment& labels, int d) {
    std::vector<int> count(d, 0);
    for (int l : labels) ++count[l];
    return count;
}

// A = S S^T + lambda S G G^T S^T (d x d) and M = S + lambda S G G^T (d x n),
// so the stationarity condition of E in R reads A R^T = M X^T.
struct NormalSystem {
    Eigen::MatrixXd a;
    Eigen::MatrixXd m;
};

NormalSystem normal_system(const Assignment& labels, int d, double lambda, const std::vector<bool>& active) {
    const int n = static_cast<int>(labels.size());
    NormalSystem sys{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, n)};
    for (int f = 0; f < n; ++f) {
        sys.a(labels[f], labels[f]) += 1.0;
        sys.m(labels[f], f) += 1.0;
    }
    for (int g = 0; g + 1 < n; ++g) {
        if (!active[g]) continue;
        // Column g of S G is e_{l(g+1)} - e_{l(g)}; G^T maps it onto frames g (-1) and g+1 (+1).
        const int lo = labels[g];
        const int hi = labels[g + 1];
        if (lo != hi) {
            sys.a(hi, hi) += lambda;
            sys.a(lo, lo) += lambda;
            sys.a(hi, lo) -= lambda;
            sys.a(lo, hi) -= lambda;
        }
        sys.m(hi, g + 1) += lambda;
        sys.m(lo, g + 1) -= lambda;
        sys.m(hi, g) -= lambda;
        sys.m(lo, g) += lambda;
    }
    return sys;
}

std::vector<int> unfrozen_indices(int d, const std::vector<bool>& frozen) {
    std::vector<int> idx;
    for (int k = 0; k < d; ++k) {
        if (frozen.empty() || !frozen[k]) idx.push_back(k);
    }
    return idx;
}

std::vector<int> frozen_indices(int d, const std::vector<bool>& frozen) {
    std::vector<int> idx;
    for (int k = 0; k < d; ++k) {
        if (!frozen.empty() && frozen[k]) idx.push_back(k);
    }
    return idx;
}

// Solves A_UU Z = rhs; A_UU is SPD whenever every unfrozen piece is used.
Eigen::MatrixXd solve_unfrozen(const Eigen::MatrixXd& a_uu, const Eigen::MatrixXd& rhs) {
    Eigen::LLT<Eigen::MatrixXd> llt(a_uu);
    if (llt.info() != Eigen::Success) throw SolveFailure("library normal equations are not positive definite");
    return llt.solve(rhs);
}

// Energy model working on Gram matrices of the centered "atoms" (the frames
// followed by the frozen pieces). Every optimal piece is an affine combination
// of atoms, so a library is a coefficient matrix Phi (atoms x d) and all
// energies follow from K = Yc^T W Yc without touching vertex data.
class GramModel {
public:
    struct Tables {
        Eigen::MatrixXd unary;     // n x d
        Eigen::MatrixXd frame_dot;  // n x d, x_f^T W d_k (centered)
        Eigen::MatrixXd gram;       // d x d, d_a^T W d_b (centered)
    };

    GramModel(const PartAnim& part, const Eigen::VectorXd& w3, double lambda, const Eigen::MatrixXd& frozen_pieces)
        : n_(part.num_frames()),
          atoms_(part.num_frames() + static_cast<int>(frozen_pieces.cols())),
          lambda_(lambda),
          active_(active_differences(part.cuts, lambda)) {
        const Eigen::Index rows = part.positions.rows();
        const Eigen::VectorXd center = part.positions.rowwise().mean();
        const Eigen::VectorXd sqrt_w = w3.cwiseSqrt();
        k_ = Eigen::MatrixXd::Zero(atoms_, atoms_);
        constexpr Eigen::Index kBlock = 2048;
        Eigen::MatrixXd chunk;
        for (Eigen::Index r0 = 0; r0 < rows; r0 += kBlock) {
            const Eigen::Index len = std::min(kBlock, rows - r0);
            chunk.resize(len, atoms_);
            chunk.leftCols(n_) = part.positions.middleRows(r0, len);
            if (frozen_pieces.cols() > 0) chunk.rightCols(frozen_pieces.cols()) = frozen_pieces.middleRows(r0, len);
            chunk.colwise() -= center.segment(r0, len);
            chunk.array().colwise() *= sqrt_w.segment(r0, len).array();
            k_.selfadjointView<Eigen::Lower>().rankUpdate(chunk.transpose());
        }
        k_ = k_.selfadjointView<Eigen::Lower>();

        velocity_sq_ = Eigen::VectorXd::Zero(std::max(0, n_ - 1));
        for (int g = 0; g + 1 < n_; ++g) {
            velocity_sq_[g] = k_(g + 1, g + 1) - 2.0 * k_(g + 1, g) + k_(g, g);
        }
    }

    int frames() const { return n_; }
    int atoms() const { return atoms_; }
    const std::vector<bool>& active() const { return active_; }

    Tables tables(const Eigen::MatrixXd& phi) const {
        Tables t;
        const Eigen::MatrixXd k_phi = k_ * phi;
        t.frame_dot = k_phi.topRows(n_);
        t.gram = phi.transpose() * k_phi;
        t.unary.resize(n_, phi.cols());
        for (int f = 0; f < n_; ++f) {
            for (Eigen::Index k = 0; k < phi.cols(); ++k) {
                t.unary(f, k) = 0.5 * (k_(f, f) - 2.0 * t.frame_dot(f, k) + t.gram(k, k));
            }
        }
        return t;
    }

    Eigen::MatrixXd pairwise(const Tables& t, int g) const {
        const Eigen::Index d = t.gram.rows();
        Eigen::MatrixXd pair(d, d);
        for (Eigen::Index b = 0; b < d; ++b) {
            for (Eigen::Index a = 0; a < d; ++a) {
                const double cross = (t.frame_dot(g + 1, b) - t.frame_dot(g, b)) - (t.frame_dot(g + 1, a) - t.frame_dot(g, a));
                const double spread = t.gram(a, a) + t.gram(b, b) - 2.0 * t.gram(a, b);
                pair(a, b) = 0.5 * lambda_ * (velocity_sq_[g] - 2.0 * cross + spread);
            }
        }
        return pair;
    }

    double pair_value(const Tables& t, int g, int a, int b) const {
        const double cross = (t.frame_dot(g + 1, b) - t.frame_dot(g, b)) - (t.frame_dot(g + 1, a) - t.frame_dot(g, a));
        const double spread = t.gram(a, a) + t.gram(b, b) - 2.0 * t.gram(a, b);
        return 0.5 * lambda_ * (velocity_sq_[g] - 2.0 * cross + spread);
    }

    double energy(const Tables& t, const Assignment& labels) const {
        double e = 0.0;
        for (int f = 0; f < n_; ++f) e += t.unary(f, labels[f]);
        for (int g = 0; g + 1 < n_; ++g) {
            if (active_[g]) e += pair_value(t, g, labels[g], labels[g + 1]);
        }
        return e;
    }

    Eigen::VectorXd frame_errors(const Tables& t, const Assignment& labels) const {
        Eigen::VectorXd err(n_);
        for (int f = 0; f < n_; ++f) err[f] = t.unary(f, labels[f]);
        for (int g = 0; g + 1 < n_; ++g) {
            if (!active_[g]) continue;
            const double p = pair_value(t, g, labels[g], labels[g + 1]);
            err[g] += p;
            err[g + 1] += p;
        }
        return err;
    }

    Assignment assign(const Tables& t) const {
        return solve_chain(t.unary, active_, [&](int g) { return pairwise(t, g); });
    }

    // Optimal coefficients of the unfrozen pieces for fixed labels. Frozen
    // piece j of `frozen_pieces` is atom n + j.
    Eigen::MatrixXd update(const Assignment& labels, int d, const std::vector<bool>& frozen) const {
        const auto free_idx = unfrozen_indices(d, frozen);
        const auto fixed_idx = frozen_indices(d, frozen);
        const auto count = usage_counts(labels, d);
        for (int k : free_idx) {
            if (count[k] == 0) throw EmptyPiece(k);
        }

        Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(atoms_, d);
        for (size_t j = 0; j < fixed_idx.size(); ++j) phi(n_ + static_cast<int>(j), fixed_idx[j]) = 1.0;
        if (free_idx.empty()) return phi;

        const NormalSystem sys = normal_system(labels, d, lambda_, active_);
        const Eigen::Index nu = static_cast<Eigen::Index>(free_idx.size());
        Eigen::MatrixXd a_uu(nu, nu);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nu, atoms_);
        for (Eigen::Index i = 0; i < nu; ++i) {
            for (Eigen::Index j = 0; j < nu; ++j) a_uu(i, j) = sys.a(free_idx[i], free_idx[j]);
            rhs.row(i).head(n_) = sys.m.row(free_idx[i]);
            for (size_t j = 0; j < fixed_idx.size(); ++j) {
                rhs(i, n_ + static_cast<Eigen::Index>(j)) = -sys.a(free_idx[i], fixed_idx[j]);
            }
        }
        const Eigen::MatrixXd coeff = solve_unfrozen(a_uu, rhs);  // nu x atoms
        for (Eigen::Index i = 0; i < nu; ++i) phi.col(free_idx[i]) = coeff.row(i).transpose();
        return phi;
    }

private:
    int n_;
    int atoms_;
    double lambda_;
    std::vector<bool> active_;
    Eigen::MatrixXd k_;
    Eigen::VectorXd velocity_sq_;
};

// Gives every unused unfrozen piece the frame with the largest unary error
// among frames whose piece is used more than once. Returns the repair count.
int repair_empty_pieces(Assignment& labels, const Eigen::MatrixXd& unary, int d, const std::vector<bool>& frozen) {
    auto count = usage_counts(labels, d);
    int repairs = 0;
    for (int k : unfrozen_indices(d, frozen)) {
        if (count[k] > 0) continue;
        int worst = -1;
        for (int f = 0; f < static_cast<int>(labels.size()); ++f) {
            if (count[labels[f]] < 2) continue;
            if (worst < 0 || unary(f, labels[f]) > unary(worst, labels[worst])) worst = f;
        }
        if (worst < 0) throw EmptyPiece(k);
        --count[labels[worst]];
        labels[worst] = k;
        ++count[k];
        ++repairs;
    }
    return repairs;
}

struct Solution {
    Eigen::MatrixXd phi;
    Assignment labels;
    double energy = kInf;
    DescentTrace trace;
};

void keep_best(Solution& best, const Eigen::MatrixXd& phi, const Assignment& labels, double energy) {
    if (energy < best.energy) {
        best.phi = phi;
        best.labels = labels;
        best.energy = energy;
    }
}

// Alternates library updates and relabeling from `labels`. With `start_phi`
// the first half-step is a relabeling against that library.
Solution run_descent(const GramModel& model, Assignment labels, int d, const std::vector<bool>& frozen,
                     const OptimConfig& config, const Eigen::MatrixXd* start_phi = nullptr) {
    Solution best;
    double previous = kInf;

    if (start_phi != nullptr) {
        const auto t = model.tables(*start_phi);
        keep_best(best, *start_phi, labels, model.energy(t, labels));
        Assignment next = model.assign(t);
        best.trace.repairs += repair_empty_pieces(next, t.unary, d, frozen);
        previous = model.energy(t, next);
        keep_best(best, *start_phi, next, previous);
        labels = std::move(next);
    }

    for (int it = 0; it < config.max_iters; ++it) {
        const Eigen::MatrixXd phi = model.update(labels, d, frozen);
        const auto t = model.tables(phi);
        const double e_update = model.energy(t, labels);
        best.trace.labels.push_back(labels);
        best.trace.after_update.push_back(e_update);
        keep_best(best, phi, labels, e_update);

        Assignment next = model.assign(t);
        best.trace.repairs += repair_empty_pieces(next, t.unary, d, frozen);
        const double e_assign = model.energy(t, next);
        best.trace.after_assign.push_back(e_assign);
        keep_best(best, phi, next, e_assign);

        const bool unchanged = next == labels;
        const bool stalled = std::isfinite(previous) && previous - e_assign <= config.rel_tol * previous;
        previous = e_assign;
        labels = std::move(next);
        if (unchanged || stalled) break;
    }
    return best;
}

Eigen::MatrixXd frozen_block(const ReplacementLibrary* fixed) {
    if (fixed == nullptr) return {};
    const auto idx = frozen_indices(fixed->size(), fixed->frozen);
    Eigen::MatrixXd block(fixed->pieces.rows(), static_cast<Eigen::Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) block.col(static_cast<Eigen::Index>(j)) = fixed->pieces.col(idx[j]);
    return block;
}

// Frozen flags of the full library: the fixed prefix keeps its flags.
std::vector<bool> full_frozen_mask(int d, const ReplacementLibrary* fixed) {
    std::vector<bool> mask(d, false);
    if (fixed == nullptr) return mask;
    for (int k = 0; k < fixed->size(); ++k) mask[k] = fixed->is_frozen(k);
    return mask;
}

ReplacementLibrary materialize(const PartAnim& part, const Eigen::MatrixXd& phi, const std::vector<bool>& frozen,
                               const ReplacementLibrary* fixed) {
    const int n = part.num_frames();
    const int d = static_cast<int>(phi.cols());
    ReplacementLibrary lib{Eigen::MatrixXd(part.positions.rows(), d), frozen};
    const Eigen::MatrixXd fixed_cols = frozen_block(fixed);
    for (int k = 0; k < d; ++k) {
        if (frozen[k]) {
            lib.pieces.col(k) = fixed->pieces.col(k);
            continue;
        }
        lib.pieces.col(k) = part.positions * phi.col(k).head(n);
        if (fixed_cols.cols() > 0) lib.pieces.col(k) += fixed_cols * phi.col(k).tail(fixed_cols.cols());
    }
    return lib;
}

void check_part(const PartAnim& part, const Eigen::VectorXd& weights) {
    if (part.num_frames() < 1) throw EmptyInput();
    if (static_cast<int>(part.cuts.size()) != part.num_frames()) {
        throw InvalidSequence("cut vector length differs from frame count");
    }
    validate_weights(weights, part.num_vertices());
}

template <class Fn>
void parallel_for(int count, Fn&& fn) {
    const int workers = std::max(1, std::min<int>(count, static_cast<int>(std::thread::hardware_concurrency())));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct Problem {
    GramModel model;
    std::vector<bool> frozen;
    int d;
};

Problem make_problem(const PartAnim& part, int d, const Eigen::VectorXd& weights, double lambda,
                     const ReplacementLibrary* fixed) {
    if (d < 1 || d > part.num_frames()) {
        throw InvalidLibrarySize("library size " + std::to_string(d) + " outside [1, " +
                                 std::to_string(part.num_frames()) + "]");
    }
    if (fixed != nullptr) {
        if (fixed->size() > d) throw InvalidLibrarySize("fixed library has more pieces than the library size");
        if (fixed->pieces.rows() != part.positions.rows()) {
            throw InvalidSequence("fixed library pieces do not match the part's vertex count");
        }
    }
    return Problem{GramModel(part, expand_weights(weights), lambda, frozen_block(fixed)), full_frozen_mask(d, fixed),
                   d};
}

// Best of the restarts, as coefficients.
Solution best_of_restarts(const Problem& problem, const OptimConfig& config, std::vector<Solution>* all) {
    const int n = problem.model.frames();
    const int d = problem.d;
    const bool all_frozen = unfrozen_indices(d, problem.frozen).empty();

    std::vector<Solution> runs(all_frozen ? 1 : std::max(1, config.restarts));
    if (all_frozen) {
        Solution s;
        s.phi = problem.model.update(Assignment(n, 0), d, problem.frozen);
        const auto t = problem.model.tables(s.phi);
        s.labels = problem.model.assign(t);
        s.energy = problem.model.energy(t, s.labels);
        runs[0] = std::move(s);
    } else {
        parallel_for(static_cast<int>(runs.size()), [&](int r) {
            runs[r] = run_descent(problem.model, initial_assignment(n, d, config.seed, r, problem.frozen), d,
                                  problem.frozen, config);
        });
    }

    int best = 0;
    for (int r = 1; r < static_cast<int>(runs.size()); ++r) {
        if (runs[r].energy < runs[best].energy) best = r;
    }
    Solution out = runs[best];
    if (all) *all = std::move(runs);
    return out;
}

// One piece per frame reproduces the input exactly.
Solution identity_solution(const Problem& problem) {
    const int n = problem.model.frames();
    Solution s;
    s.phi = Eigen::MatrixXd::Zero(problem.model.atoms(), n);
    s.phi.topRows(n).setIdentity();
    s.labels.resize(n);
    for (int f = 0; f < n; ++f) s.labels[f] = f;
    s.energy = problem.model.energy(problem.model.tables(s.phi), s.labels);
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------

PartAnim part_from_sequence(const AnimSequence& anim) {
    PartAnim part;
    part.positions.resize(3 * anim.num_vertices(), anim.num_frames());
    for (int f = 0; f < anim.num_frames(); ++f) part.positions.col(f) = stack_vertices(anim.frame(f));
    part.triangles = anim.triangles();
    part.cuts = anim.cuts();
    part.global_vertices.resize(anim.num_vertices());
    for (int v = 0; v < anim.num_vertices(); ++v) part.global_vertices[v] = v;
    return part;
}

Eigen::VectorXd stack_vertices(const VertexField& field) {
    Eigen::VectorXd out(3 * field.rows());
    for (Eigen::Index i = 0; i < field.rows(); ++i) out.segment<3>(3 * i) = field.row(i).transpose();
    return out;
}

VertexField unstack_vertices(const Eigen::VectorXd& column) {
    VertexField out(column.size() / 3, 3);
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = column.segment<3>(3 * i).transpose();
    return out;
}

Eigen::VectorXd expand_weights(const Eigen::VectorXd& per_vertex) {
    Eigen::VectorXd out(3 * per_vertex.size());
    for (Eigen::Index i = 0; i < per_vertex.size(); ++i) out.segment<3>(3 * i).setConstant(per_vertex[i]);
    return out;
}

void validate_weights(const Eigen::VectorXd& weights, int vertex_count) {
    if (weights.size() != vertex_count) {
        throw InvalidSequence("expected " + std::to_string(vertex_count) + " saliency weights, got " +
                              std::to_string(weights.size()));
    }
    if (!(weights.array() >= 0.0).all()) throw InvalidSequence("saliency weights must be non-negative");
    if (!(weights.maxCoeff() > 0.0)) throw InvalidSequence("saliency weights are all zero");
}

SparseMatrix selector(const Assignment& labels, int library_size) {
    SparseMatrix s(library_size, static_cast<Eigen::Index>(labels.size()));
    std::vector<Eigen::Triplet<double>> entries;
    for (size_t f = 0; f < labels.size(); ++f) entries.emplace_back(labels[f], static_cast<int>(f), 1.0);
    s.setFromTriplets(entries.begin(), entries.end());
    return s;
}

double total_energy(const Eigen::MatrixXd& positions, const Eigen::MatrixXd& pieces, const Assignment& labels,
                    double lambda, const Eigen::VectorXd& weights, const SparseMatrix& difference) {
    const Eigen::VectorXd w3 = expand_weights(weights);
    const Eigen::MatrixXd residual = positions - pieces * selector(labels, static_cast<int>(pieces.cols()));
    const Eigen::MatrixXd velocity_residual = residual * difference;
    const double position = (residual.array().square().colwise() * w3.array()).sum();
    const double velocity = (velocity_residual.array().square().colwise() * w3.array()).sum();
    return 0.5 * position + 0.5 * lambda * velocity;
}

Eigen::VectorXd EnergyTerms::per_frame() const {
    Eigen::VectorXd err = position;
    for (Eigen::Index g = 0; g < velocity.size(); ++g) {
        err[g] += velocity[g];
        err[g + 1] += velocity[g];
    }
    return err;
}

EnergyTerms energy_terms(const Eigen::MatrixXd& positions, const Eigen::MatrixXd& pieces, const Assignment& labels,
                         double lambda, const Eigen::VectorXd& weights, const std::vector<bool>& cuts) {
    const Eigen::VectorXd w3 = expand_weights(weights);
    const int n = static_cast<int>(positions.cols());
    EnergyTerms terms{Eigen::VectorXd(n), Eigen::VectorXd::Zero(std::max(0, n - 1))};
    for (int f = 0; f < n; ++f) {
        terms.position[f] = 0.5 * ((positions.col(f) - pieces.col(labels[f])).array().square() * w3.array()).sum();
    }
    for (int g = 0; g + 1 < n; ++g) {
        if (!difference_active(cuts, g)) continue;
        const Eigen::VectorXd r = (positions.col(g + 1) - positions.col(g)) -
                                  (pieces.col(labels[g + 1]) - pieces.col(labels[g]));
        terms.velocity[g] = 0.5 * lambda * (r.array().square() * w3.array()).sum();
    }
    return terms;
}

ReplacementLibrary update_library(const Eigen::MatrixXd& positions, const Assignment& labels, double lambda,
                                  const SparseMatrix& difference, const ReplacementLibrary& current) {
    const int d = current.size();
    const int n = static_cast<int>(positions.cols());
    if (static_cast<int>(labels.size()) != n) throw InvalidSequence("label count differs from frame count");

    // Active columns of G, read off the operator itself.
    std::vector<bool> active(std::max(0, n - 1), false);
    for (int g = 0; g < difference.outerSize(); ++g) {
        for (SparseMatrix::InnerIterator it(difference, g); it; ++it) active[g] = active[g] || it.value() != 0.0;
    }
    if (lambda == 0.0) std::fill(active.begin(), active.end(), false);

    const auto free_idx = unfrozen_indices(d, current.frozen);
    const auto fixed_idx = frozen_indices(d, current.frozen);
    const auto count = usage_counts(labels, d);
    for (int k : free_idx) {
        if (count[k] == 0) throw EmptyPiece(k);
    }

    ReplacementLibrary out = current;
    if (free_idx.empty()) return out;

    const NormalSystem sys = normal_system(labels, d, lambda, active);
    const Eigen::Index nu = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd a_uu(nu, nu);
    Eigen::MatrixXd m_u(nu, n);
    for (Eigen::Index i = 0; i < nu; ++i) {
        for (Eigen::Index j = 0; j < nu; ++j) a_uu(i, j) = sys.a(free_idx[i], free_idx[j]);
        m_u.row(i) = sys.m.row(free_idx[i]);
    }
    Eigen::MatrixXd rhs = m_u * positions.transpose();  // nu x 3m
    for (Eigen::Index i = 0; i < nu; ++i) {
        for (int k : fixed_idx) rhs.row(i) -= sys.a(free_idx[i], k) * current.pieces.col(k).transpose();
    }
    const Eigen::MatrixXd solved = solve_unfrozen(a_uu, rhs);
    for (Eigen::Index i = 0; i < nu; ++i) out.pieces.col(free_idx[i]) = solved.row(i).transpose();
    return out;
}

ReplacementLibrary update_library(const Eigen::MatrixXd& positions, const Assignment& labels, int library_size,
                                  double lambda, const SparseMatrix& difference) {
    ReplacementLibrary start{Eigen::MatrixXd::Zero(positions.rows(), library_size), {}};
    return update_library(positions, labels, lambda, difference, start);
}

Assignment assign_labels(const Eigen::MatrixXd& positions, const Eigen::MatrixXd& pieces, double lambda,
                         const Eigen::VectorXd& weights, const std::vector<bool>& cuts) {
    const int n = static_cast<int>(positions.cols());
    const int d = static_cast<int>(pieces.cols());
    if (d < 1) throw InvalidLibrarySize("library is empty");
    const Eigen::VectorXd w3 = expand_weights(weights);

    Eigen::MatrixXd unary(n, d);
    for (int f = 0; f < n; ++f) {
        for (int k = 0; k < d; ++k) {
            unary(f, k) = 0.5 * ((positions.col(f) - pieces.col(k)).array().square() * w3.array()).sum();
        }
    }
    const std::vector<bool> active = active_differences(cuts, lambda);
    if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) {
        return solve_chain(unary, active, [](int) { return Eigen::MatrixXd(); });
    }

    // |v - (d_b - d_a)|^2 = |v|^2 - 2 v.(d_b - d_a) + |d_b - d_a|^2 with W weights.
    Eigen::MatrixXd spread(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            spread(a, b) = ((pieces.col(b) - pieces.col(a)).array().square() * w3.array()).sum();
        }
    }
    const Eigen::VectorXd center = pieces.rowwise().mean();
    const Eigen::MatrixXd weighted = (pieces.colwise() - center).array().colwise() * w3.array();
    Eigen::VectorXd velocity_sq(n - 1);
    Eigen::MatrixXd velocity_dot(n - 1, d);
    for (int g = 0; g + 1 < n; ++g) {
        const Eigen::VectorXd v = positions.col(g + 1) - positions.col(g);
        velocity_sq[g] = (v.array().square() * w3.array()).sum();
        velocity_dot.row(g) = v.transpose() * weighted;
    }
    return solve_chain(unary, active, [&](int g) {
        Eigen::MatrixXd pair(d, d);
        for (int b = 0; b < d; ++b) {
            for (int a = 0; a < d; ++a) {
                pair(a, b) = 0.5 * lambda *
                             (velocity_sq[g] - 2.0 * (velocity_dot(g, b) - velocity_dot(g, a)) + spread(a, b));
            }
        }
        return pair;
    });
}

Assignment initial_assignment(int frames, int library_size, std::uint64_t seed, int restart,
                              const std::vector<bool>& frozen) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(restart)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<int> pick(0, library_size - 1);
    Assignment labels(frames);
    for (int& l : labels) l = pick(rng);

    auto count = usage_counts(labels, library_size);
    std::uniform_int_distribution<int> frame_pick(0, frames - 1);
    for (int k : unfrozen_indices(library_size, frozen)) {
        if (count[k] > 0) continue;
        int f = frame_pick(rng);
        while (count[labels[f]] < 2) f = frame_pick(rng);
        --count[labels[f]];
        labels[f] = k;
        ++count[k];
    }
    return labels;
}

BcdRun descend(const PartAnim& part, const Assignment& start, int library_size, const Eigen::VectorXd& weights,
               const OptimConfig& config, const ReplacementLibrary* fixed) {
    check_part(part, weights);
    const Problem problem = make_problem(part, library_size, weights, config.lambda, fixed);
    Solution s = run_descent(problem.model, start, library_size, problem.frozen, config);
    BcdRun run{materialize(part, s.phi, problem.frozen, fixed), s.labels, 0.0, std::move(s.trace)};
    run.energy = energy_terms(part.positions, run.library.pieces, run.labels, config.lambda, weights, part.cuts).total();
    return run;
}

BcdResult bcd_optimize(const PartAnim& part, int library_size, const Eigen::VectorXd& weights,
                       const OptimConfig& config, const ReplacementLibrary* fixed) {
    check_part(part, weights);
    if (config.lambda < 0.0) throw InvalidSequence("lambda must be non-negative");
    const Problem problem = make_problem(part, library_size, weights, config.lambda, fixed);

    std::vector<Solution> runs;
    Solution best = best_of_restarts(problem, config, &runs);
    int best_restart = 0;
    for (int r = 0; r < static_cast<int>(runs.size()); ++r) {
        if (runs[r].energy == best.energy) {
            best_restart = r;
            break;
        }
    }
    if (library_size == part.num_frames() && fixed == nullptr) {
        Solution exact = identity_solution(problem);
        if (exact.energy < best.energy) {
            best = std::move(exact);
            best_restart = -1;
        }
    }

    BcdResult result;
    result.library = materialize(part, best.phi, problem.frozen, fixed);
    result.labels = best.labels;
    result.energy =
        energy_terms(part.positions, result.library.pieces, result.labels, config.lambda, weights, part.cuts).total();
    result.best_restart = best_restart;
    for (auto& r : runs) {
        BcdRun run{materialize(part, r.phi, problem.frozen, fixed), r.labels, r.energy, std::move(r.trace)};
        result.runs.push_back(std::move(run));
    }
    return result;
}

namespace {

SweepPoint to_point(const PartAnim& part, const Problem& problem, const Solution& s, const Eigen::VectorXd& weights,
                    double lambda) {
    SweepPoint p;
    p.library_size = problem.d;
    p.library = materialize(part, s.phi, problem.frozen, nullptr);
    p.labels = s.labels;
    const EnergyTerms terms = energy_terms(part.positions, p.library.pieces, p.labels, lambda, weights, part.cuts);
    p.energy = terms.total();
    p.max_frame_error = terms.per_frame().maxCoeff();
    return p;
}

// Extends `prev` (size prev.phi.cols()) to size d by repeatedly adding the
// currently worst-fit frame as a piece, then descends from there.
Solution warm_start(const Problem& problem, const Solution& prev, const OptimConfig& config) {
    const int n = problem.model.frames();
    Eigen::MatrixXd phi = prev.phi;
    Assignment labels = prev.labels;
    while (phi.cols() < problem.d) {
        const auto t = problem.model.tables(phi);
        const Eigen::VectorXd err = problem.model.frame_errors(t, labels);
        int worst = 0;
        for (int f = 1; f < n; ++f) {
            if (err[f] > err[worst]) worst = f;
        }
        phi.conservativeResize(Eigen::NoChange, phi.cols() + 1);
        phi.col(phi.cols() - 1).setZero();
        phi(worst, phi.cols() - 1) = 1.0;
    }
    const std::vector<bool> frozen(problem.d, false);
    return run_descent(problem.model, labels, problem.d, frozen, config, &phi);
}

Solution solve_size(const PartAnim& part, int d, const Eigen::VectorXd& weights, const OptimConfig& config,
                    const Solution* prev, std::optional<Problem>& problem_out) {
    problem_out.emplace(make_problem(part, d, weights, config.lambda, nullptr));
    const Problem& problem = *problem_out;
    Solution best = best_of_restarts(problem, config, nullptr);
    if (prev != nullptr) {
        Solution warm = warm_start(problem, *prev, config);
        if (warm.energy <= best.energy) best = std::move(warm);
    }
    if (d == part.num_frames()) {
        Solution exact = identity_solution(problem);
        if (exact.energy < best.energy) best = std::move(exact);
    }
    return best;
}

}  // namespace

std::vector<SweepPoint> sweep_library_size(const PartAnim& part, std::vector<int> sizes,
                                           const Eigen::VectorXd& weights, const OptimConfig& config) {
    check_part(part, weights);
    if (sizes.empty()) throw InvalidLibrarySize("no library sizes to sweep");
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    std::vector<SweepPoint> curve;
    std::optional<Solution> prev;
    for (int d : sizes) {
        std::optional<Problem> problem;
        Solution s = solve_size(part, d, weights, config, prev ? &*prev : nullptr, problem);
        curve.push_back(to_point(part, *problem, s, weights, config.lambda));
        prev = std::move(s);
    }
    return curve;
}

SweepPoint minimal_size_for_cap(const PartAnim& part, double cap, const Eigen::VectorXd& weights,
                                const OptimConfig& config) {
    check_part(part, weights);
    if (!(cap > 0.0)) throw CapUnreachable("error cap must be positive");
    std::optional<Solution> prev;
    for (int d = 1; d <= part.num_frames(); ++d) {
        std::optional<Problem> problem;
        Solution s = solve_size(part, d, weights, config, prev ? &*prev : nullptr, problem);
        SweepPoint p = to_point(part, *problem, s, weights, config.lambda);
        if (p.max_frame_error <= cap) return p;
        prev = std::move(s);
    }
    throw CapUnreachable("no library size up to " + std::to_string(part.num_frames()) +
                         " meets the per-frame error cap");
}

ReplacementLibrary uniform_sampling_library(const PartAnim& part, int library_size) {
    const int n = part.num_frames();
    if (library_size < 1 || library_size > n) throw InvalidLibrarySize("uniform library size outside [1, n]");
    ReplacementLibrary lib{Eigen::MatrixXd(part.positions.rows(), library_size), {}};
    for (int i = 0; i < library_size; ++i) {
        const int f = static_cast<int>(std::floor((i + 0.5) * n / library_size));
        lib.pieces.col(i) = part.positions.col(f);
    }
    return lib;
}

}  // namespace stopshop
