#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmlab/brownian.hpp"
#include "mmlab/heat.hpp"
#include "mmlab/models.hpp"
#include "mmlab/transport.hpp"

namespace mmlab {

struct SpaceRecipe {
    std::string family = "circle";  // model family name, or "file"
    int n = 0;
    double scale = 1.0;
    double potential_amp = 0.0;  // reweights by exp(-amp * cos of the leading coordinate)
    std::string file;            // used when family == "file"
};

struct ExperimentConfig {
    std::vector<SpaceRecipe> sequence;  // >= 2 entries; the last one is the limit space
    std::vector<double> fdd_times{0.1, 0.5, 1.0, 2.0};
    int fdd_anchors = 8;
    int fdd_max_k = 3;
    std::vector<double> path_times{0.5, 1.0, 2.0};
    int paths = 256;
    std::uint64_t seed = 20240101;
    double bandwidth = 0.0;  // 0 selects auto per space
    int eig_budget = 4096;
    std::string solver = "exact";  // --ot-solver {exact, sinkhorn}
    double sinkhorn_eps = 1e-2;
    std::string fdd_mode = "grid_w2";  // --fdd-mode for the path_w2 column
    double beta = 2.0;
    double path_check_t_max = 20.0;
    double path_check_dt = 0.25;
    int path_check_paths = 512;
    std::string out_dir = "mmlab-out";
    bool strict = false;

    void validate() const;
    std::string digest() const;
};

ExperimentConfig read_config(const std::filesystem::path& path);

struct ReportRow {
    int index = 0;
    int n = 0;
    double d_upper = 0.0;
    double hausdorff = 0.0;
    double gh_distortion = 0.0;
    double gh_coverage = 0.0;
    double pushforward_gap = 0.0;
    double lambda1 = 0.0;
    double fdd_distance = 0.0;
    double path_w2 = 0.0;
    double tightness_slope = 0.0;
    double mixing_exponent = 0.0;
    double seconds = 0.0;
    std::string error;  // empty on success; unavailable cells are NaN with this reason
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::string config_digest;
    std::vector<std::string> warnings;
    double total_seconds = 0.0;
};

/// Runs the full sequence experiment: geometry-side columns against the limit space
/// (d_upper, hausdorff, GH metrics through nearest-point maps) and process-side
/// columns (lambda_1, exact FDD dictionary distance, empirical path W2, tightness
/// slope, mixing exponent). Artifacts (spectra caches, ensembles, report files) are
/// written atomically under config.out_dir. Row failures annotate and continue unless
/// config.strict is set.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct Verdict {
    bool pass = false;
    std::string clause;
};

/// PASS iff a decreasing d_upper column (Spearman <= -0.9) implies a decreasing FDD
/// column (Spearman <= -0.9) with a factor-4 endpoint drop.
Verdict verify_direction_forward(const ExperimentReport& report);

/// PASS iff the spectral gaps stay above half the limit gap and a decreasing FDD
/// column implies a factor-4 drop of d_upper.
Verdict verify_direction_backward(const ExperimentReport& report);

struct PathSpaceCheckReport {
    std::vector<double> base_d_upper;  // per non-limit index
    std::vector<double> path_d_upper;  // transport upper bounds between sampled path spaces
    Verdict verdict;
};

/// Builds the sampled path spaces per index (shared seed) and checks that their
/// transport distances to the limit path space decrease (Spearman <= -0.8) whenever
/// the base-space d_upper column decreases.
PathSpaceCheckReport path_space_convergence_check(const ExperimentConfig& config);

/// CSV + JSON companion + two-column plot files, written atomically.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);
ExperimentReport read_report_json(const std::filesystem::path& file);

/// Rebinds the embedding of a space onto a shared ambient object (coordinates are
/// kept; the isometry invariant is revalidated).
FiniteMMSpace rebind_ambient(const FiniteMMSpace& space,
                             std::shared_ptr<const AmbientSpace> ambient);

/// Builds one recipe entry; model families get their ambient from `ambient` when the
/// pointer is compatible (same family and scale), otherwise their own.
FiniteMMSpace build_recipe(const SpaceRecipe& recipe);

}  // namespace mmlab
