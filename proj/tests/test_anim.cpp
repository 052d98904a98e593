#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.h"
#include "stopshop/anim.h"
#include "stopshop/error.h"
#include "stopshop/mesh_ops.h"
#include "support.h"

using namespace stopshop;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stopshop_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("sequence validation") {
    const auto g = testsupport::grid(2, 2);
    CHECK_THROWS_AS(AnimSequence({}, g.triangles), EmptyInput);

    Triangles bad = g.triangles;
    bad(0, 0) = 99;
    CHECK_THROWS_AS(AnimSequence({g.vertices}, bad), InvalidSequence);

    VertexField extra(g.vertices.rows() + 1, 3);
    extra << g.vertices, 5.0, 5.0, 5.0;
    CHECK_THROWS_AS(AnimSequence({extra}, g.triangles), InvalidSequence);

    const AnimSequence anim({g.vertices, g.vertices}, g.triangles, {false, false});
    CHECK(anim.cuts()[0]);
    CHECK_FALSE(anim.cuts()[1]);
}

TEST_CASE("forward difference matches the dense reference") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 7;
        std::vector<bool> cuts(n, false);
        for (int f = 1; f < n; ++f) cuts[f] = std::bernoulli_distribution(0.3)(rng);
        cuts[0] = true;
        const Eigen::MatrixXd g = Eigen::MatrixXd(forward_difference(cuts));
        CHECK((g - oracle::dense_difference(cuts)).norm() == 0.0);
        for (int c = 0; c + 1 < n; ++c) CHECK(difference_active(cuts, c) == oracle::pair_active(cuts, c));
    }

    SUBCASE("no cuts gives plain differences") {
        const Eigen::MatrixXd g = Eigen::MatrixXd(forward_difference(std::vector<bool>{true, false, false}));
        Eigen::MatrixXd expected(3, 2);
        expected << -1, 0, 1, -1, 0, 1;
        CHECK(g == expected);
    }
    SUBCASE("a cut zeroes the columns on both sides") {
        const Eigen::MatrixXd g =
            Eigen::MatrixXd(forward_difference(std::vector<bool>{true, false, true, false, false}));
        CHECK(g.col(0).norm() > 0.0);
        CHECK(g.col(1).norm() == 0.0);
        CHECK(g.col(2).norm() == 0.0);
        CHECK(g.col(3).norm() > 0.0);
    }
}

TEST_CASE("average mesh and scaling") {
    const auto g = testsupport::grid(3, 2);
    VertexField shifted = g.vertices;
    shifted.col(2).array() += 2.0;
    const AnimSequence anim({g.vertices, shifted}, g.triangles);
    const VertexField avg = average_mesh(anim);
    CHECK(avg.col(2).isConstant(1.0));
    const AnimSequence twice = scaled(anim, 2.0);
    CHECK(twice.frame(1).isApprox(2.0 * shifted));
}

TEST_CASE("OBJ round trip and directory loading") {
    const fs::path dir = scratch_dir("obj");
    std::mt19937_64 rng(5);
    const auto g = testsupport::grid(3, 3);
    const AnimSequence anim = testsupport::jittered(g, 4, 0.1, rng, {true, false, true, false});
    save_sequence(anim, dir);
    CHECK(fs::exists(dir / "cuts.txt"));

    const AnimSequence back = load_sequence_dir(dir, read_cut_file(dir / "cuts.txt"));
    REQUIRE(back.num_frames() == 4);
    CHECK(back.triangles() == anim.triangles());
    CHECK(back.cuts() == anim.cuts());
    for (int f = 0; f < 4; ++f) CHECK(back.frame(f) == anim.frame(f));
}

TEST_CASE("OBJ parsing details") {
    const fs::path dir = scratch_dir("objparse");
    {
        std::ofstream out(dir / "quad.obj");
        out << "# comment\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\n"
            << "f 1/1/1 2/1/1 3/1/1 -1/1/1\n";
    }
    const TriMesh m = read_obj(dir / "quad.obj");
    CHECK(m.vertices.rows() == 4);
    REQUIRE(m.triangles.rows() == 2);
    CHECK(m.triangles.row(0) == Eigen::RowVector3i(0, 1, 2));
    CHECK(m.triangles.row(1) == Eigen::RowVector3i(0, 2, 3));

    {
        std::ofstream out(dir / "bad.obj");
        out << "v 0 0 0\nv 1 0\n";
    }
    CHECK_THROWS_AS(read_obj(dir / "bad.obj"), ParseError);
}

TEST_CASE("connectivity mismatch names the frame") {
    const fs::path dir = scratch_dir("mismatch");
    const auto g = testsupport::grid(2, 2);
    write_obj(dir / "a.obj", g.vertices, g.triangles);
    Triangles other = g.triangles;
    std::swap(other(0, 0), other(0, 1));
    write_obj(dir / "b.obj", g.vertices, other);
    try {
        load_sequence_dir(dir);
        FAIL("expected ConnectivityMismatch");
    } catch (const ConnectivityMismatch& e) {
        CHECK(e.frame() == 1);
    }
    CHECK_THROWS_AS(load_sequence_dir(scratch_dir("empty")), EmptyInput);
}

TEST_CASE("weights file") {
    const fs::path dir = scratch_dir("weights");
    {
        std::ofstream out(dir / "w.txt");
        out << "1 2\n0.5\n";
    }
    const Eigen::VectorXd w = read_weights_file(dir / "w.txt", 3);
    CHECK(w == Eigen::Vector3d(1, 2, 0.5));
    CHECK_THROWS(read_weights_file(dir / "w.txt", 4));
    {
        std::ofstream out(dir / "neg.txt");
        out << "1 -2 3\n";
    }
    CHECK_THROWS(read_weights_file(dir / "neg.txt", 3));
}

TEST_CASE("mesh operators") {
    const auto g = testsupport::grid(4, 3);
    const Eigen::VectorXd areas = triangle_areas(g.vertices, g.triangles);
    CHECK(areas.sum() == doctest::Approx(12.0));
    CHECK(lumped_mass(g.vertices, g.triangles).sum() == doctest::Approx(12.0));

    const SparseMatrix l = cotangent_laplacian(g.vertices, g.triangles);
    const Eigen::MatrixXd dense(l);
    CHECK((dense - dense.transpose()).norm() == doctest::Approx(0.0));
    CHECK(dense.rowwise().sum().norm() == doctest::Approx(0.0).epsilon(1e-12));
    // Linear functions are harmonic at interior vertices.
    const Eigen::VectorXd lx = dense * g.vertices.col(0);
    for (int v = 0; v < g.vertices.rows(); ++v) {
        const double x = g.vertices(v, 0), y = g.vertices(v, 1);
        if (x > 0 && x < 4 && y > 0 && y < 3) CHECK(std::abs(lx[v]) < 1e-12);
    }

    const EdgeTopology topo = build_edge_topology(g.triangles);
    CHECK(topo.edges.rows() == 5 * 3 + 4 * 4 + 12);  // horizontal + vertical + diagonal
    Triangles fan(3, 3);
    fan << 0, 1, 2, 0, 1, 3, 0, 1, 4;
    CHECK_THROWS_AS(build_edge_topology(fan), InvalidSequence);
}
