// Command-line front end: segmentation, seam homogenization and replacement
// library optimization for a mesh animation stored as a directory of OBJ frames.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "stopshop/error.h"
#include "stopshop/pipeline.h"

using namespace stopshop;

namespace {

std::pair<int, int> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--sweep", "expected dmin:dmax");
    const int lo = std::stoi(text.substr(0, colon));
    const int hi = std::stoi(text.substr(colon + 1));
    if (lo < 1 || hi < lo) throw CLI::ValidationError("--sweep", "need 1 <= dmin <= dmax");
    return {lo, hi};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Replacement-library optimizer for stop-motion printing of mesh animations"};

    PipelineConfig config;
    std::string sizes;
    std::string sweep;
    double error_cap = 0.0;
    bool segment_only = false;
    bool optimize_only = false;
    bool no_baseline = false;

    app.add_option("--input", config.input_dir, "Directory of per-frame OBJ files (lexicographic order)")
        ->required()
        ->check(CLI::ExistingDirectory);
    app.add_option("--seeds", config.seed_file, "Seed triangles, one line per part")->check(CLI::ExistingFile);
    app.add_option("--parts", config.parts, "Number of parts (must match the seed file)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--sizes", sizes, "Library size per part, e.g. 3,2; a single value applies to every part");
    app.add_option("--lambda", config.lambda, "Velocity term weight")->check(CLI::NonNegativeNumber);
    app.add_option("--gamma", config.gamma, "Segmentation smoothness weight")->check(CLI::NonNegativeNumber);
    app.add_option("--weights", config.weights_file, "Per-vertex saliency weights, one per line")
        ->check(CLI::ExistingFile);
    app.add_option("--cuts", config.cut_file, "Frame indices that start a new shot")->check(CLI::ExistingFile);
    app.add_option("--restarts", config.restarts, "Random restarts per part")->check(CLI::PositiveNumber);
    app.add_option("--max-iters", config.max_iters, "Iteration limit per restart")->check(CLI::PositiveNumber);
    app.add_option("--rel-tol", config.rel_tol, "Stop when the relative energy decrease drops below this");
    app.add_option("--seed", config.seed, "Random seed");
    app.add_option("--out", config.output_dir, "Output directory")->required();
    auto* sweep_opt = app.add_option("--sweep", sweep, "Optimize every size in dmin:dmax and write sweep.csv");
    app.add_option("--error-cap", error_cap, "Choose the smallest size whose worst frame error is below this")
        ->check(CLI::PositiveNumber)
        ->excludes(sweep_opt);
    app.add_option("--fixed-library", config.fixed_library_dir,
                   "Directory of existing pieces with a manifest.json of frozen flags")
        ->check(CLI::ExistingDirectory);
    app.add_option("--smooth-iters", config.smoothing.iterations, "Vote smoothing iterations")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--smooth-step", config.smoothing.step, "Vote smoothing step in (0, 1]")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--min-island", config.min_island, "Absorb part islands with fewer triangles than this");
    auto* seg_flag = app.add_flag("--segment-only", segment_only, "Stop after segmentation and homogenization");
    app.add_flag("--optimize-only", optimize_only, "Treat the whole mesh as one part")->excludes(seg_flag);
    app.add_flag("--no-baseline", no_baseline, "Skip the uniform-sampling comparison columns");
    app.add_flag("--write-homogenized", config.write_homogenized, "Also write the homogenized frames");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!sizes.empty()) config.sizes = parse_size_list(sizes);
        if (!sweep.empty()) config.sweep = parse_range(sweep);
        if (app.count("--error-cap")) config.error_cap = error_cap;
        config.baseline = !no_baseline;
        config.mode = segment_only    ? PipelineMode::SegmentOnly
                      : optimize_only ? PipelineMode::OptimizeOnly
                                      : PipelineMode::Full;
        if (config.mode != PipelineMode::OptimizeOnly && config.seed_file.empty()) {
            std::cerr << "error: --seeds is required unless --optimize-only is given\n";
            return 2;
        }
        if (config.mode != PipelineMode::SegmentOnly && config.sizes.empty() && !config.sweep && !config.error_cap) {
            std::cerr << "error: one of --sizes, --sweep or --error-cap is required\n";
            return 2;
        }

        const PipelineResult result = run_pipeline(config);
        if (result.segmentation && result.segmentation->unreachable_warning) {
            std::cerr << "warning: some triangles are not connected to any seed\n";
        }
        int printed = 0;
        for (size_t j = 0; j < result.parts.size(); ++j) {
            const PartResult& p = result.parts[j];
            printed += p.library.size();
            std::printf("part%zu: %d pieces, %d vertices, energy %.6g\n", j + 1, p.library.size(),
                        p.part.num_vertices(), p.energy);
        }
        if (!result.parts.empty()) {
            const int frames = result.parts.front().part.num_frames();
            std::printf("%d frames, %d pieces to print (%d without reuse)\n", frames, printed,
                        frames * static_cast<int>(result.parts.size()));
        }
        std::printf("wrote %s\n", config.output_dir.string().c_str());
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
