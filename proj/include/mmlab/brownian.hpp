#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmlab/heat.hpp"
#include "mmlab/transport.hpp"

namespace mmlab {

/// Finitely many observation times with bounded per-point observables.
struct FddSpec {
    std::vector<double> times;      // 0 < t_1 < ... < t_k
    std::vector<Vector> observables;

    void validate(int n_points) const;
};

/// E^start[g_1(B_{t1}) ... g_k(B_{tk})] by nested right-to-left semigroup application;
/// exact up to spectral arithmetic.
double fdd_exact(const SpectralHeatModel& model, int start, const FddSpec& spec);

/// Sampled trajectories on a fixed grid with full RNG provenance. Transitions use the
/// exact kernel per grid gap; the only sampling error is Monte Carlo.
struct PathEnsemble {
    std::shared_ptr<const SpectralHeatModel> model;
    std::vector<double> time_grid;  // starts at 0
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> paths;  // M x |grid|
    int start = 0;
    std::uint64_t seed = 0;
    std::string model_hash;
    double clip_mass = 0.0;  // largest negative row mass clipped before renormalizing

    int n_paths() const { return static_cast<int>(paths.rows()); }
    std::string digest() const;
};

/// Negative kernel-row entries up to 1e-6 in total mass are clipped and the row is
/// renormalized (clip mass reported); anything worse is fatal with the suggested t_pos.
PathEnsemble sample_paths(std::shared_ptr<const SpectralHeatModel> model, int start,
                          const std::vector<double>& time_grid, int n_paths,
                          std::uint64_t seed);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    bool std_error_defined = true;  // false for single-path ensembles
};

/// Sample mean of the product observable over the ensemble; spec times must lie on
/// the ensemble grid.
MonteCarloEstimate fdd_monte_carlo(const PathEnsemble& ensemble, const FddSpec& spec);

struct TightnessRow {
    double h = 0.0;
    double modulus = 0.0;  // E[d~^beta(B_t, B_{t+h})], exact
};

struct TightnessTable {
    std::vector<TightnessRow> rows;
    double loglog_slope = 0.0;  // fitted over the positive-h rows
};

/// Exact moment modulus via two kernel applications per h; d~ = d ^ 1.
TightnessTable tightness_modulus(const SpectralHeatModel& model, int start, double t,
                                 const std::vector<double>& h_grid, double beta);

struct ErgodicRow {
    double t = 0.0;
    double occupation = 0.0;  // E[1_G(B_t)]
    double gap = 0.0;         // |occupation - m(G)|
    double envelope = 0.0;    // ||p(t,start,.) - 1||_{L2(m)}
};

struct ErgodicTable {
    double target = 0.0;  // m(G)
    std::vector<ErgodicRow> rows;
    bool within_envelope = true;
};

ErgodicTable ergodic_occupation(const SpectralHeatModel& model, int start,
                                const std::vector<int>& subset,
                                const std::vector<double>& t_grid);

struct IrreducibilityReport {
    bool kernel_positive = false;   // p(D^2, x, y) > 0 for all pairs
    double min_kernel = 0.0;
    bool green_growth = false;      // int_0^T T_t f dt grows linearly
    double green_rate = 0.0;        // fitted growth rate (target m(f))
    double expected_rate = 0.0;     // m(f)
};

/// Positivity of the kernel at t = D^2 plus linear growth of the Green integral of a
/// nonnegative nonzero f (rejected if f vanishes identically).
IrreducibilityReport irreducibility_recurrence_check(const SpectralHeatModel& model,
                                                     const Vector& f);

enum class PathLawMode { fdd_dictionary, grid_w2 };

/// Dictionary of (times, Lipschitz-1 observables) for FDD comparisons: observables are
/// truncated ambient distances 1 ^ d(., p) to anchor points, with products up to
/// max_k factors.
struct FddDictionary {
    std::vector<double> times;
    Matrix anchors;  // rows are ambient coordinates
    int max_k = 3;
};

/// Greedy farthest-point anchors from the union of two embedded spaces.
Matrix default_anchor_net(const FiniteMMSpace& a, const FiniteMMSpace& b, int n_anchors = 8);

/// max over the dictionary of |FDD_A - FDD_B|, evaluated exactly on both models.
double fdd_dictionary_distance(const SpectralHeatModel& model_a, int start_a,
                               const SpectralHeatModel& model_b, int start_b,
                               const FddDictionary& dict);

struct PathLawDistance {
    double value = 0.0;
    double std_error = 0.0;  // Monte Carlo half-split spread (grid_w2 mode only)
    bool exact = true;
};

/// Distance between path laws: exact dictionary FDD gaps, or W2 between the joint
/// laws at the dictionary times under the product ambient metric (exact when the
/// joint supports are small, empirical from the ensembles otherwise).
PathLawDistance path_law_distance(const PathEnsemble& a, const PathEnsemble& b,
                                  PathLawMode mode, const FddDictionary& dict);

/// The sampled paths as a finite metric measure space: points are distinct
/// trajectories (duplicates merged), distances are local uniform path distances,
/// weights are merged path frequencies.
FiniteMMSpace path_space_as_mmspace(const PathEnsemble& ensemble, double t_max);

}  // namespace mmlab
