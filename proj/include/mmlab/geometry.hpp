#pragma once

#include <utility>
#include <vector>

#include "mmlab/space.hpp"

namespace mmlab {

/// Theta_kappa(theta): sin(sqrt(k)t)/sqrt(k), t, or sinh(sqrt(-k)t)/sqrt(-k) at t = theta.
double theta_kappa(double kappa, double theta);

/// Distortion coefficient sigma_kappa^(t)(theta):
///   Theta_k(t*theta)/Theta_k(theta)  when k*theta^2 != 0 and k*theta^2 < pi^2,
///   t                                when k*theta^2 == 0,
///   +infinity                        when k*theta^2 >= pi^2.
/// Requires t in [0,1] and theta >= 0.
double sigma_coefficient(double kappa, double t, double theta);

struct CdStarReport {
    bool satisfied = false;
    double worst_margin = 0.0;       // min over interpolation steps of lhs - rhs
    bool grid_too_coarse = false;    // snapped interpolants deviate badly from geodesics
    double max_snap_deviation = 0.0;
    std::vector<double> margins;     // per interpolation time, t = i/steps
};

/// Evaluates the reduced curvature-dimension convexity inequality along a snapped
/// displacement interpolation of the optimal coupling between mu0 and mu1, with
/// N' = meta.N_dim. Diagnostic only: discretization error is reported, not bounded.
CdStarReport cd_star_displacement_check(const FiniteMMSpace& space, const Vector& mu0,
                                        const Vector& mu1, int steps, double tolerance = 1e-9);

struct ConvexityReport {
    bool satisfied = false;
    double worst_margin = 0.0;
    bool geodesic_found = true;      // false if midpoint search exceeded the budget
    double max_midpoint_deviation = 0.0;
};

/// Checks strong (K,N)-convexity of the potential along discrete approximate geodesics:
/// U_N(mid) >= sigma^(1-t) U_N(a) + sigma^(t) U_N(b) with U_N = exp(-V/N).
ConvexityReport strong_convexity_check(const FiniteMMSpace& space, const Vector& potential,
                                       double curvature, double dim_bound,
                                       double tolerance = 1e-9);

struct BishopGromovRow {
    double r = 0.0, big_r = 0.0;
    double volume_ratio = 0.0;   // v(r)/v(R) with closed balls
    double model_ratio = 0.0;    // integral of Theta^N over [0,r] / over [0,R]
    bool satisfied = false;
};

struct BishopGromovReport {
    std::vector<BishopGromovRow> rows;
    bool satisfied = false;
};

/// Volume-ratio monotonicity v(r)/v(R) >= model ratio, with tolerance 1e-6 plus a
/// one-grid-shell slack (the shell width is twice the recorded covering radius).
BishopGromovReport bishop_gromov_check(const FiniteMMSpace& space, int center,
                                       const std::vector<std::pair<double, double>>& radii);

/// max over centers and grid radii of m(B_2r(x)) / m(B_r(x)), open balls.
double doubling_constant(const FiniteMMSpace& space, const std::vector<double>& radii);

struct VolumeGrowthFit {
    double nu = 0.0;  // exponent: the floor is c * r^(2 nu)
    double c = 0.0;
};

/// Least-squares fit of log m(B_r) vs log r over (grid spacing, min(1, D)], with the
/// constant lowered so the floor holds at every sampled center and radius.
VolumeGrowthFit volume_growth_floor(const FiniteMMSpace& space);

}  // namespace mmlab
