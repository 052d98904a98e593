#include "stopshop/pipeline.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "stopshop/error.h"
#include "stopshop/mesh_ops.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace stopshop {

namespace {

template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::string part_key(int part) { return "part" + std::to_string(part + 1); }

int digits_for(int count) {
    int width = 3;
    for (int limit = 1000; count > limit; limit *= 10) ++width;
    return width;
}

// Fixed-library manifest: {"part1": [{"file": "p1_000.obj", "frozen": true}, ...], ...}
std::optional<ReplacementLibrary> load_fixed_library(const fs::path& dir, int part, const PartAnim& sub) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ParseError("fixed library has no manifest.json in " + dir.string());
    const ordered_json manifest = ordered_json::parse(in);
    const auto it = manifest.find(part_key(part));
    if (it == manifest.end()) return std::nullopt;

    ReplacementLibrary lib{Eigen::MatrixXd(sub.positions.rows(), static_cast<Eigen::Index>(it->size())), {}};
    int k = 0;
    for (const auto& entry : *it) {
        const TriMesh mesh = read_obj(dir / entry.at("file").get<std::string>());
        if (mesh.vertices.rows() != sub.num_vertices()) {
            throw InvalidSequence("fixed piece " + entry.at("file").get<std::string>() + " has " +
                                  std::to_string(mesh.vertices.rows()) + " vertices, part has " +
                                  std::to_string(sub.num_vertices()));
        }
        lib.pieces.col(k++) = stack_vertices(mesh.vertices);
        lib.frozen.push_back(entry.value("frozen", true));
    }
    return lib;
}

void write_csv_number(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

PartResult optimize_part(const PartAnim& sub, const Eigen::VectorXd& weights, int part, int size,
                         const PipelineConfig& config, const OptimConfig& opt) {
    PartResult result;
    result.part = sub;
    result.weights = weights;

    if (config.sweep) {
        std::vector<int> sizes;
        const int hi = std::min(config.sweep->second, sub.num_frames());
        for (int d = std::max(1, config.sweep->first); d <= hi; ++d) sizes.push_back(d);
        result.sweep = sweep_library_size(sub, sizes, weights, opt);
    }
    if (config.error_cap) {
        const SweepPoint p = minimal_size_for_cap(sub, *config.error_cap, weights, opt);
        size = p.library_size;
    }

    std::optional<ReplacementLibrary> fixed;
    if (!config.fixed_library_dir.empty()) fixed = load_fixed_library(config.fixed_library_dir, part, sub);
    if (fixed && fixed->size() > size) size = fixed->size();

    BcdResult bcd = bcd_optimize(sub, size, weights, opt, fixed ? &*fixed : nullptr);
    result.library = std::move(bcd.library);
    result.labels = std::move(bcd.labels);
    result.energy = bcd.energy;
    result.runs = std::move(bcd.runs);
    return result;
}

void write_outputs(const PipelineConfig& config, const PipelineResult& result, int frames) {
    const fs::path out = config.output_dir;
    const fs::path pieces_dir = out / "pieces";
    fs::create_directories(pieces_dir);

    for (size_t j = 0; j < result.parts.size(); ++j) {
        const PartResult& p = result.parts[j];
        for (int k = 0; k < p.library.size(); ++k) {
            write_obj(pieces_dir / (piece_id(static_cast<int>(j), k, p.library.size()) + ".obj"),
                      unstack_vertices(p.library.pieces.col(k)), p.part.triangles);
        }
    }

    {
        std::ofstream sheet(out / "assembly.json");
        sheet << assembly_sheet_json(result.parts) << "\n";
    }

    {
        std::ofstream log(out / "energy_log.csv");
        log << "part,restart,iteration,step,energy\n";
        for (size_t j = 0; j < result.parts.size(); ++j) {
            const auto& runs = result.parts[j].runs;
            for (size_t r = 0; r < runs.size(); ++r) {
                const auto& tr = runs[r].trace;
                for (size_t it = 0; it < tr.after_update.size(); ++it) {
                    log << part_key(static_cast<int>(j)) << "," << r << "," << it << ",library,";
                    write_csv_number(log, tr.after_update[it]);
                    log << "\n";
                    if (it < tr.after_assign.size()) {
                        log << part_key(static_cast<int>(j)) << "," << r << "," << it << ",labels,";
                        write_csv_number(log, tr.after_assign[it]);
                        log << "\n";
                    }
                }
            }
        }
    }

    {
        std::ofstream csv(out / "frame_errors.csv");
        csv << "frame,part,piece,position_error,velocity_error,baseline_position_error,baseline_velocity_error\n";
        for (const auto& row : report_errors(result.parts, config.lambda, config.baseline)) {
            csv << row.frame << "," << part_key(row.part) << ","
                << piece_id(row.part, row.piece, result.parts[row.part].library.size()) << ",";
            write_csv_number(csv, row.position);
            csv << ",";
            write_csv_number(csv, row.velocity);
            csv << ",";
            if (!std::isnan(row.baseline_position)) write_csv_number(csv, row.baseline_position);
            csv << ",";
            if (!std::isnan(row.baseline_velocity)) write_csv_number(csv, row.baseline_velocity);
            csv << "\n";
        }
    }

    if (config.sweep) {
        std::ofstream csv(out / "sweep.csv");
        csv << "part,library_size,energy,max_frame_error\n";
        for (size_t j = 0; j < result.parts.size(); ++j) {
            for (const auto& p : result.parts[j].sweep) {
                csv << part_key(static_cast<int>(j)) << "," << p.library_size << ",";
                write_csv_number(csv, p.energy);
                csv << ",";
                write_csv_number(csv, p.max_frame_error);
                csv << "\n";
            }
        }
    }

    ordered_json manifest;
    manifest["status"] = "complete";
    ordered_json params;
    params["input"] = config.input_dir.string();
    params["cuts"] = config.cut_file.string();
    params["seeds"] = config.seed_file.string();
    params["weights"] = config.weights_file.string();
    params["fixed_library"] = config.fixed_library_dir.string();
    params["mode"] = config.mode == PipelineMode::Full ? "full"
                     : config.mode == PipelineMode::SegmentOnly ? "segment-only"
                                                                : "optimize-only";
    params["gamma"] = config.gamma;
    params["lambda"] = config.lambda;
    params["sizes"] = config.sizes;
    params["smoothing_iterations"] = config.smoothing.iterations;
    params["smoothing_step"] = config.smoothing.step;
    params["min_island"] = config.min_island;
    params["restarts"] = config.restarts;
    params["max_iters"] = config.max_iters;
    params["rel_tol"] = config.rel_tol;
    params["rng_seed"] = config.seed;
    if (config.sweep) params["sweep"] = {config.sweep->first, config.sweep->second};
    if (config.error_cap) params["error_cap"] = *config.error_cap;
    manifest["parameters"] = params;
    manifest["floating_point"] = "IEEE-754 double; results are reproducible for the same binary and thread count";

    if (result.segmentation) {
        manifest["segmentation"] = {{"unit_box_scale", result.segmentation->scale},
                                    {"energy", result.segmentation->energy},
                                    {"initial_energy", result.segmentation->initial_energy},
                                    {"unreachable_warning", result.segmentation->unreachable_warning}};
    }

    int total_pieces = 0;
    ordered_json parts = ordered_json::array();
    for (size_t j = 0; j < result.parts.size(); ++j) {
        const PartResult& p = result.parts[j];
        const int d = p.library.size();
        total_pieces += d;
        std::vector<int> usage(d, 0);
        for (int l : p.labels) ++usage[l];
        ordered_json pieces = ordered_json::array();
        for (int k = 0; k < d; ++k) {
            pieces.push_back({{"id", piece_id(static_cast<int>(j), k, d)},
                              {"frozen", p.library.is_frozen(k)},
                              {"usage", usage[k]}});
        }
        parts.push_back({{"name", part_key(static_cast<int>(j))},
                         {"vertices", p.part.num_vertices()},
                         {"triangles", p.part.triangles.rows()},
                         {"library_size", d},
                         {"energy", p.energy},
                         {"frames_per_piece", static_cast<double>(frames) / d},
                         {"pieces", pieces}});
    }
    manifest["parts"] = parts;
    const int naive = frames * static_cast<int>(result.parts.size());
    manifest["frames"] = frames;
    manifest["printed_pieces"] = total_pieces;
    manifest["naive_pieces"] = naive;
    manifest["saving_factor"] = total_pieces > 0 ? static_cast<double>(naive) / total_pieces : 0.0;
    manifest["frames_per_total_pieces"] = total_pieces > 0 ? static_cast<double>(frames) / total_pieces : 0.0;

    std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
}

void write_segmentation(const fs::path& out, const HomogenizedAnim& hom, bool with_frames) {
    const fs::path dir = out / "segmentation";
    fs::create_directories(dir);
    {
        std::ofstream labels(dir / "part_labels.txt");
        for (int l : hom.part_labels) labels << l + 1 << "\n";
    }
    {
        std::ofstream seam(dir / "seam_vertices.txt");
        for (int v : hom.seam_vertices) seam << v << "\n";
    }
    write_obj(dir / "average.obj", average_mesh(hom.anim), hom.anim.triangles());
    if (with_frames) save_sequence(hom.anim, out / "homogenized");
}

}  // namespace

PartAnim extract_part_submesh(const HomogenizedAnim& hom, int part) {
    const Triangles& tris = hom.anim.triangles();
    const int m = hom.anim.num_vertices();
    std::vector<int> local(m, -1);
    std::vector<int> rows;
    for (Eigen::Index t = 0; t < tris.rows(); ++t) {
        if (hom.part_labels[t] != part) continue;
        rows.push_back(static_cast<int>(t));
        for (int c = 0; c < 3; ++c) local[tris(t, c)] = 0;
    }
    if (rows.empty()) throw EmptyPart(part);

    PartAnim sub;
    for (int v = 0; v < m; ++v) {
        if (local[v] < 0) continue;
        local[v] = static_cast<int>(sub.global_vertices.size());
        sub.global_vertices.push_back(v);
    }
    sub.triangles.resize(static_cast<Eigen::Index>(rows.size()), 3);
    for (size_t i = 0; i < rows.size(); ++i) {
        for (int c = 0; c < 3; ++c) sub.triangles(static_cast<Eigen::Index>(i), c) = local[tris(rows[i], c)];
    }
    const int n = hom.anim.num_frames();
    sub.positions.resize(3 * static_cast<Eigen::Index>(sub.global_vertices.size()), n);
    for (int f = 0; f < n; ++f) {
        for (size_t i = 0; i < sub.global_vertices.size(); ++i) {
            sub.positions.col(f).segment<3>(3 * static_cast<Eigen::Index>(i)) =
                hom.anim.frame(f).row(sub.global_vertices[i]).transpose();
        }
    }
    sub.cuts = hom.anim.cuts();
    return sub;
}

std::vector<FrameErrorRow> report_errors(const std::vector<PartResult>& parts, double lambda, bool with_baseline) {
    std::vector<FrameErrorRow> rows;
    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    for (size_t j = 0; j < parts.size(); ++j) {
        const PartResult& p = parts[j];
        const EnergyTerms terms =
            energy_terms(p.part.positions, p.library.pieces, p.labels, lambda, p.weights, p.part.cuts);
        std::optional<EnergyTerms> base;
        if (with_baseline) {
            const ReplacementLibrary uniform = uniform_sampling_library(p.part, p.library.size());
            const Assignment labels = assign_labels(p.part.positions, uniform.pieces, lambda, p.weights, p.part.cuts);
            base = energy_terms(p.part.positions, uniform.pieces, labels, lambda, p.weights, p.part.cuts);
        }
        for (int f = 0; f < p.part.num_frames(); ++f) {
            rows.push_back({f, static_cast<int>(j), p.labels[f], terms.position[f],
                            f > 0 ? terms.velocity[f - 1] : 0.0, base ? base->position[f] : kNaN,
                            base ? (f > 0 ? base->velocity[f - 1] : 0.0) : kNaN});
        }
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const FrameErrorRow& a, const FrameErrorRow& b) { return a.frame < b.frame; });
    return rows;
}

std::string piece_id(int part, int piece, int library_size) {
    std::string index = std::to_string(piece);
    const int width = digits_for(library_size);
    if (static_cast<int>(index.size()) < width) index.insert(0, width - index.size(), '0');
    return "p" + std::to_string(part + 1) + "_" + index;
}

std::string assembly_sheet_json(const std::vector<PartResult>& parts) {
    ordered_json sheet;
    ordered_json frames = ordered_json::array();
    const int n = parts.empty() ? 0 : parts.front().part.num_frames();
    for (int f = 0; f < n; ++f) {
        ordered_json pieces = ordered_json::object();
        for (size_t j = 0; j < parts.size(); ++j) {
            pieces[part_key(static_cast<int>(j))] =
                piece_id(static_cast<int>(j), parts[j].labels[f], parts[j].library.size());
        }
        frames.push_back({{"frame", f}, {"pieces", pieces}});
    }
    sheet["frames"] = frames;
    return sheet.dump(2);
}

std::vector<int> parse_size_list(const std::string& text) {
    std::vector<int> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t used = 0;
        const int d = std::stoi(item, &used);
        if (used != item.size() || d < 1) throw ParseError("bad library size '" + item + "'");
        sizes.push_back(d);
    }
    if (sizes.empty()) throw ParseError("empty library size list");
    return sizes;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    if (config.output_dir.empty()) throw StageError("config", "no output directory");
    fs::create_directories(config.output_dir);
    const fs::path stale = config.output_dir / "STALE";
    std::ofstream(stale) << "run in progress\n";

    PipelineResult result;
    try {
        const AnimSequence input = stage("load", [&] {
            const std::set<int> cuts = config.cut_file.empty() ? std::set<int>{} : read_cut_file(config.cut_file);
            return load_sequence_dir(config.input_dir, cuts);
        });
        Eigen::VectorXd input_weights = stage("weights", [&] {
            if (config.weights_file.empty()) return Eigen::VectorXd(Eigen::VectorXd::Ones(input.num_vertices()));
            return read_weights_file(config.weights_file, input.num_vertices());
        });

        HomogenizedAnim hom = stage("segment", [&] {
            if (config.mode == PipelineMode::OptimizeOnly) {
                return HomogenizedAnim{input, std::vector<int>(input.num_triangles(), 0), {}, 1, {}, VertexField()};
            }
            const SeedSet seeds = read_seed_file(config.seed_file);
            if (config.parts != 0 && config.parts != seeds.num_parts()) {
                throw InvalidSeeds("--parts " + std::to_string(config.parts) + " but seed file lists " +
                                   std::to_string(seeds.num_parts()) + " parts");
            }
            result.segmentation = segment_parts(input, seeds, config.gamma);
            const SegmentedAnim seg = stage("refine", [&] {
                return refine_boundary(input, result.segmentation->labels, seeds.num_parts(), config.smoothing,
                                       config.min_island);
            });
            input_weights = interpolate_vertex_values(seg, input_weights);
            return stage("homogenize", [&] { return homogenize_all(seg); });
        });
        result.homogenized = hom;

        if (config.mode != PipelineMode::OptimizeOnly) {
            stage("export", [&] { write_segmentation(config.output_dir, hom, config.write_homogenized); });
        }

        if (config.mode != PipelineMode::SegmentOnly) {
            const int s = hom.num_parts;
            std::vector<int> sizes = config.sizes;
            if (sizes.size() == 1) sizes.assign(s, sizes.front());
            if (!config.sweep && !config.error_cap && static_cast<int>(sizes.size()) != s) {
                throw StageError("config", "expected " + std::to_string(s) + " library sizes");
            }
            if (sizes.empty()) {
                sizes.assign(s, config.sweep ? config.sweep->second : 1);
            }

            const OptimConfig opt{config.lambda, config.restarts, config.max_iters, config.rel_tol, config.seed};
            std::vector<std::future<PartResult>> jobs;
            for (int j = 0; j < s; ++j) {
                jobs.push_back(std::async(std::launch::async, [&, j] {
                    return stage("optimize " + part_key(j), [&] {
                        const PartAnim sub = extract_part_submesh(hom, j);
                        Eigen::VectorXd w(sub.num_vertices());
                        for (int i = 0; i < sub.num_vertices(); ++i) w[i] = input_weights[sub.global_vertices[i]];
                        return optimize_part(sub, w, j, sizes[j], config, opt);
                    });
                }));
            }
            for (auto& job : jobs) result.parts.push_back(job.get());
            stage("export", [&] { write_outputs(config, result, hom.anim.num_frames()); });
        }
    } catch (const std::exception& e) {
        std::ofstream(stale) << "failed: " << e.what() << "\n";
        throw;
    }
    fs::remove(stale);
    return result;
}

}  // namespace stopshop
