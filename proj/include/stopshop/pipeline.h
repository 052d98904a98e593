#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stopshop/boundary.h"
#include "stopshop/homogenize.h"
#include "stopshop/library.h"
#include "stopshop/segmentation.h"

namespace stopshop {

enum class PipelineMode { Full, SegmentOnly, OptimizeOnly };

struct PipelineConfig {
    std::filesystem::path input_dir;
    std::filesystem::path cut_file;
    std::filesystem::path seed_file;
    std::filesystem::path weights_file;
    std::filesystem::path fixed_library_dir;
    std::filesystem::path output_dir;

    double gamma = 100.0;
    int parts = 0;  ///< 0: take the part count from the seed file
    /// One size per part, or a single size for every part.
    std::vector<int> sizes;
    double lambda = 2.0;
    SmoothingOptions smoothing;
    int min_island = 0;
    int restarts = 8;
    int max_iters = 100;
    double rel_tol = 1e-10;
    std::uint64_t seed = 0;

    PipelineMode mode = PipelineMode::Full;
    std::optional<std::pair<int, int>> sweep;
    std::optional<double> error_cap;
    bool baseline = true;
    bool write_homogenized = false;
};

/// Triangles labelled `part` and their vertices, indexed in increasing global
/// order. Seam vertices appear in every part they touch. Throws EmptyPart.
PartAnim extract_part_submesh(const HomogenizedAnim& hom, int part);

struct PartResult {
    PartAnim part;
    Eigen::VectorXd weights;
    ReplacementLibrary library;
    Assignment labels;
    double energy = 0.0;
    std::vector<BcdRun> runs;
    std::vector<SweepPoint> sweep;
};

/// Per frame f and part: position term, incoming velocity term and the same
/// for the uniform-sampling baseline (NaN when not computed).
struct FrameErrorRow {
    int frame;
    int part;
    int piece;
    double position;
    double velocity;
    double baseline_position;
    double baseline_velocity;
};

std::vector<FrameErrorRow> report_errors(const std::vector<PartResult>& parts, double lambda, bool with_baseline);

/// Piece file stem, e.g. part 0, piece 7 -> "p1_007".
std::string piece_id(int part, int piece, int library_size);

/// {"frames":[{"frame":0,"pieces":{"part1":"p1_007",...}},...]}
std::string assembly_sheet_json(const std::vector<PartResult>& parts);

struct PipelineResult {
    std::optional<SegmentationResult> segmentation;
    std::optional<HomogenizedAnim> homogenized;
    std::vector<PartResult> parts;
};

/// Runs the configured stages and writes every artifact into output_dir.
/// Stage failures are rethrown as StageError; a STALE marker then remains in
/// output_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

/// "3" or "5,7" -> sizes.
std::vector<int> parse_size_list(const std::string& text);

}  // namespace stopshop
