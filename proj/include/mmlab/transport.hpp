#pragma once

#include <utility>
#include <vector>

#include "mmlab/space.hpp"

namespace mmlab {

/// Joint probability matrix with prescribed marginals.
struct Coupling {
    Matrix q;   // N1 x N2, nonnegative
    Vector mu;  // length N1
    Vector nu;  // length N2

    /// Largest marginal residual max(|row sums - mu|, |col sums - nu|).
    double marginal_residual() const;
    /// Throws if entries are negative or residuals exceed tol.
    void validate(double tol = 1e-10) const;
};

struct OtResult {
    double value = 0.0;  // W2 (square root of the optimal quadratic cost)
    Coupling plan;
    double cs_residual = 0.0;  // complementary-slackness residual of the returned duals
    bool converged = true;     // false only for the entropic solver hitting its cap
    int iterations = 0;
};

/// Exact optimal transport with cost matrix sq_cost (entries d^2); network simplex.
/// Returns value = sqrt(min total cost). Marginals must each sum to 1 within 1e-9.
OtResult w2_distance_cost(const Matrix& sq_cost, const Vector& mu, const Vector& nu);

/// W2 between two measures on the same finite space.
OtResult w2_distance(const FiniteMMSpace& space, const Vector& mu, const Vector& nu);

/// W2 between measures on two spaces embedded in one ambient (pointer-identical).
OtResult w2_distance(const FiniteMMSpace& a, const Vector& mu, const FiniteMMSpace& b,
                     const Vector& nu);

/// Entropic-regularized transport (log-domain Sinkhorn). The returned plan is projected
/// onto exact marginals, so value_upper is a true upper bound for W2; non-convergence
/// within 10^4 iterations is flagged, never silent.
OtResult w2_sinkhorn_cost(const Matrix& sq_cost, const Vector& mu, const Vector& nu,
                          double epsilon_reg);
OtResult w2_sinkhorn(const FiniteMMSpace& space, const Vector& mu, const Vector& nu,
                     double epsilon_reg);
OtResult w2_sinkhorn(const FiniteMMSpace& a, const Vector& mu, const FiniteMMSpace& b,
                     const Vector& nu, double epsilon_reg);

/// Cross-distance block extending d1, d2 to a pseudo-metric on the disjoint union.
struct MetricCoupling {
    Matrix cross;  // N1 x N2

    /// Largest triangle-inequality violation of the block metric
    /// [[d1, cross], [cross^T, d2]]; feasible couplings stay within 1e-10.
    static double feasibility_gap(const Matrix& d1, const Matrix& d2, const Matrix& cross);
};

struct DDistanceResult {
    double value = 0.0;
    MetricCoupling metric_coupling;
    Coupling plan;
    int agreeing_restarts = 0;  // restarts within 1e-5 of the best value
    int restarts = 0;
};

/// Transport distance over simultaneous couplings of metrics and measures, brute-forced
/// by multistart alternating optimization (exact inner OT, projected-gradient metric
/// step). Restricted to N1*N2 <= 16.
DDistanceResult d_distance_exact_tiny(const FiniteMMSpace& x1, const FiniteMMSpace& x2,
                                      int restarts = 32, std::uint64_t seed = 7);

/// Upper bound via a common ambient embedding: the transport distance between the two
/// pushforward measures in the ambient space.
OtResult d_distance_upper(const FiniteMMSpace& a, const FiniteMMSpace& b);

/// Index map from one finite space into another, with its approximation quality.
struct ApproximationMap {
    std::vector<int> f;  // domain indices -> codomain indices
    double eps = 0.0;
};

/// Nearest-point map through a shared ambient embedding; ties to the smallest index.
ApproximationMap nearest_point_map(const FiniteMMSpace& from, const FiniteMMSpace& to);

/// sup_{x,y} |d_n(x,y) - d_inf(f(x), f(y))|, exact over all pairs.
double gh_distortion(const std::vector<int>& f, const FiniteMMSpace& x_n,
                     const FiniteMMSpace& x_inf);

/// max over codomain points of the distance to the image set.
double gh_coverage(const std::vector<int>& f, const FiniteMMSpace& x_n,
                   const FiniteMMSpace& x_inf);

/// max over a test-function dictionary of |int phi(f(x)) dm_n - int phi dm_inf|.
/// An empty dictionary selects the default truncated distance functions
/// phi_p = 1 ^ d(., p) anchored at every point of x_inf.
double measure_pushforward_gap(const std::vector<int>& f, const FiniteMMSpace& x_n,
                               const FiniteMMSpace& x_inf,
                               const std::vector<Vector>& dictionary = {});

/// Hausdorff distance between two embedded point sets in a common ambient space.
double hausdorff_distance(const AmbientEmbedding& a, const AmbientEmbedding& b);

struct PathDelta {
    double value = 0.0;
    double error_bound = 0.0;  // certified tail e^{-T_max}
};

/// Local uniform distance between two paths sampled on a common time grid:
/// trapezoid quadrature of e^{-T} (1 ^ running sup of pointwise distances).
PathDelta path_delta_distance(const std::vector<double>& time_grid,
                              const std::vector<double>& pointwise_dist);

}  // namespace mmlab
