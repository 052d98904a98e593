#include <doctest.h>

#include <random>

#include "oracles.h"
#include "stopshop/boundary.h"
#include "stopshop/error.h"
#include "stopshop/homogenize.h"
#include "support.h"

using namespace stopshop;

namespace {

AnimSequence waving_grid(int nx, int ny, int frames, std::mt19937_64& rng) {
    const auto g = testsupport::grid(nx, ny, 1.0 / nx);
    std::normal_distribution<double> noise(0.0, 0.002);
    std::vector<VertexField> out;
    for (int f = 0; f < frames; ++f) {
        VertexField v = g.vertices;
        const double phase = 2.0 * M_PI * f / frames;
        for (int i = 0; i < v.rows(); ++i) {
            v(i, 2) = 0.1 * std::sin(4.0 * v(i, 0) + phase) * std::cos(3.0 * v(i, 1) - phase) + noise(rng);
        }
        out.push_back(v);
    }
    return AnimSequence(out, g.triangles);
}

std::vector<int> split_labels(const AnimSequence& anim, double x_split) {
    const VertexField avg = average_mesh(anim);
    std::vector<int> labels(anim.num_triangles());
    for (int t = 0; t < anim.num_triangles(); ++t) {
        const double cx = (avg(anim.triangles()(t, 0), 0) + avg(anim.triangles()(t, 1), 0) +
                           avg(anim.triangles()(t, 2), 0)) / 3.0;
        labels[t] = cx < x_split ? 0 : 1;
    }
    return labels;
}

}  // namespace

TEST_CASE("bilaplacian matches the dense reference") {
    std::mt19937_64 rng(51);
    const AnimSequence anim = waving_grid(6, 5, 3, rng);
    const VertexField avg = average_mesh(anim);
    const Eigen::MatrixXd q(bilaplacian(fem_operators(avg, anim.triangles())));
    const Eigen::MatrixXd ref = oracle::dense_bilaplacian(avg, anim.triangles());
    CHECK((q - ref).cwiseAbs().maxCoeff() < 1e-10 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("one-ring dilation") {
    const auto g = testsupport::grid(3, 3);
    const std::vector<int> ring = one_ring_dilation({5}, g.triangles, 16);
    CHECK(ring == std::vector<int>{0, 1, 4, 5, 6, 9, 10});
}

TEST_CASE("homogenized frames match the KKT solution") {
    std::mt19937_64 rng(53);
    const AnimSequence anim = waving_grid(12, 10, 6, rng);
    const SegmentedAnim seg = unsegmented(anim, split_labels(anim, 0.5), 2);
    const HomogenizedAnim hom = homogenize_all(seg);
    REQUIRE(!hom.constrained.empty());

    const VertexField avg = average_mesh(anim);
    const oracle::KktHomogenizer kkt(oracle::dense_bilaplacian(avg, anim.triangles()), hom.constrained,
                                     hom.seam_target);
    for (int f = 0; f < anim.num_frames(); ++f) {
        const VertexField ref = kkt.solve(anim.frame(f));
        CHECK((hom.anim.frame(f) - ref).cwiseAbs().maxCoeff() < 1e-8);
        for (size_t i = 0; i < hom.constrained.size(); ++i) {
            CHECK(hom.anim.frame(f).row(hom.constrained[i]) == avg.row(hom.constrained[i]));
        }
    }
}

TEST_CASE("homogenized frames are energy minimizers") {
    std::mt19937_64 rng(57);
    const AnimSequence anim = waving_grid(8, 8, 4, rng);
    const SegmentedAnim seg = unsegmented(anim, split_labels(anim, 0.4), 2);
    const VertexField avg = average_mesh(anim);
    const auto constrained = seam_constraint_set(seg);
    VertexField target(constrained.size(), 3);
    for (size_t i = 0; i < constrained.size(); ++i) target.row(i) = avg.row(constrained[i]);
    const Homogenizer h(fem_operators(avg, anim.triangles()), constrained, target);

    // Frames that already match the target are left alone.
    CHECK((h.solve(avg) - avg).cwiseAbs().maxCoeff() < 1e-12);

    // Perturbing the result increases the energy.
    const VertexField z = h.solve(anim.frame(1));
    const double e = h.energy(z, anim.frame(1));
    std::normal_distribution<double> noise(0.0, 1e-3);
    for (int trial = 0; trial < 5; ++trial) {
        VertexField p = z;
        for (int v : h.free_vertices()) {
            for (int c = 0; c < 3; ++c) p(v, c) += noise(rng);
        }
        CHECK(h.energy(p, anim.frame(1)) > e);
    }
}

TEST_CASE("unconstrained sequences pass through") {
    std::mt19937_64 rng(59);
    const AnimSequence anim = waving_grid(4, 4, 3, rng);
    const HomogenizedAnim hom = homogenize_all(unsegmented(anim, std::vector<int>(anim.num_triangles(), 0), 1));
    for (int f = 0; f < 3; ++f) CHECK(hom.anim.frame(f) == anim.frame(f));
}

TEST_CASE("fully constrained meshes are rejected") {
    std::mt19937_64 rng(61);
    const AnimSequence anim = waving_grid(1, 2, 2, rng);
    const SegmentedAnim seg = unsegmented(anim, {0, 1, 0, 1}, 2);
    CHECK_THROWS_AS(seam_constraint_set(seg), OverConstrained);
}
