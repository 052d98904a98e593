#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "stopshop/anim.h"
#include "stopshop/error.h"

namespace fs = std::filesystem;

namespace stopshop {

namespace {

// "12", "12/3", "12//4", "12/3/4"; negative indices count from the end.
int parse_face_index(const std::string& token, int vertex_count, const fs::path& path, int line_no) {
    const std::string head = token.substr(0, token.find('/'));
    int idx = 0;
    try {
        size_t used = 0;
        idx = std::stoi(head, &used);
        if (used != head.size()) throw std::invalid_argument(head);
    } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad face index '" + token + "'");
    }
    if (idx > 0) return idx - 1;
    if (idx < 0) return vertex_count + idx;
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": face index 0");
}

}  // namespace

TriMesh read_obj(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());

    std::vector<Eigen::RowVector3d> verts;
    std::vector<Eigen::RowVector3i> tris;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Eigen::RowVector3d p;
            if (!(ss >> p[0] >> p[1] >> p[2])) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
            }
            verts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ss >> tok) poly.push_back(parse_face_index(tok, static_cast<int>(verts.size()), path, line_no));
            if (poly.size() < 3) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": face with fewer than 3 corners");
            }
            for (size_t c = 1; c + 1 < poly.size(); ++c) tris.emplace_back(poly[0], poly[c], poly[c + 1]);
        }
    }

    TriMesh mesh;
    mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i];
    mesh.triangles.resize(static_cast<Eigen::Index>(tris.size()), 3);
    for (size_t i = 0; i < tris.size(); ++i) mesh.triangles.row(static_cast<Eigen::Index>(i)) = tris[i];
    return mesh;
}

void write_obj(const fs::path& path, const VertexField& vertices, const Triangles& triangles) {
    std::FILE* out = std::fopen(path.string().c_str(), "w");
    if (!out) throw Error("cannot write " + path.string());
    // %.17g round-trips doubles exactly.
    for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
        std::fprintf(out, "v %.17g %.17g %.17g\n", vertices(i, 0), vertices(i, 1), vertices(i, 2));
    }
    for (Eigen::Index t = 0; t < triangles.rows(); ++t) {
        std::fprintf(out, "f %d %d %d\n", triangles(t, 0) + 1, triangles(t, 1) + 1, triangles(t, 2) + 1);
    }
    const bool failed = std::ferror(out) != 0;
    std::fclose(out);
    if (failed) throw Error("write failed: " + path.string());
}

AnimSequence load_sequence(const std::vector<fs::path>& frame_sources, const std::set<int>& cut_marks) {
    if (frame_sources.empty()) throw EmptyInput();

    std::vector<VertexField> frames;
    frames.reserve(frame_sources.size());
    Triangles reference;
    for (size_t f = 0; f < frame_sources.size(); ++f) {
        TriMesh mesh = read_obj(frame_sources[f]);
        if (f == 0) {
            reference = std::move(mesh.triangles);
        } else if (mesh.vertices.rows() != frames.front().rows() || mesh.triangles.rows() != reference.rows() ||
                   mesh.triangles != reference) {
            throw ConnectivityMismatch(static_cast<int>(f));
        }
        frames.push_back(std::move(mesh.vertices));
    }

    const int n = static_cast<int>(frames.size());
    std::vector<bool> cuts(n, false);
    for (int c : cut_marks) {
        if (c < 0 || c >= n) throw InvalidSequence("cut mark " + std::to_string(c) + " outside [0, n)");
        cuts[c] = true;
    }
    return AnimSequence(std::move(frames), std::move(reference), std::move(cuts));
}

AnimSequence load_sequence_dir(const fs::path& dir, const std::set<int>& cut_marks) {
    if (!fs::is_directory(dir)) throw ParseError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".obj") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return load_sequence(files, cut_marks);
}

void save_sequence(const AnimSequence& anim, const fs::path& dir) {
    fs::create_directories(dir);
    char name[32];
    for (int f = 0; f < anim.num_frames(); ++f) {
        std::snprintf(name, sizeof(name), "frame_%05d.obj", f);
        write_obj(dir / name, anim.frame(f), anim.triangles());
    }
    std::vector<int> marks;
    for (int f = 1; f < anim.num_frames(); ++f) {
        if (anim.cuts()[f]) marks.push_back(f);
    }
    if (!marks.empty()) {
        std::ofstream out(dir / "cuts.txt");
        for (int f : marks) out << f << "\n";
    }
}

std::set<int> read_cut_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::set<int> marks;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = line.substr(0, line.find('#'));
        std::istringstream ss(line);
        int f;
        while (ss >> f) marks.insert(f);
        if (!ss.eof()) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected frame index");
    }
    return marks;
}

Eigen::VectorXd read_weights_file(const fs::path& path, int expected_count) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::vector<double> values;
    double w;
    while (in >> w) {
        if (!(w >= 0.0)) throw ParseError(path.string() + ": weights must be non-negative");
        values.push_back(w);
    }
    if (!in.eof()) throw ParseError(path.string() + ": non-numeric weight");
    if (static_cast<int>(values.size()) != expected_count) {
        throw ParseError(path.string() + ": expected " + std::to_string(expected_count) + " weights, got " +
                         std::to_string(values.size()));
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace stopshop
