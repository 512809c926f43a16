#pragma once

#include "mmlab/space.hpp"

namespace mmlab {

enum class ModelFamily { circle, torus2, interval, sphere2 };

ModelFamily parse_family(const std::string& name);
std::string family_name(ModelFamily family);

/// Discretizes a model space as an eps-net with exact geodesic distances and
/// cell-volume weights (total mass 1). The covering radius is recorded as an
/// "eps=<value>" token in meta.label; ambient coordinates are populated.
///   circle:   n equispaced points on a circle of radius `scale`
///   torus2:   k x k grid on the flat square torus of side 2*pi*scale (n = k^2)
///   interval: n points spanning [0, scale] including the endpoints
///   sphere2:  Fibonacci net on the round sphere of radius `scale` (n >= 4)
FiniteMMSpace build_model_space(ModelFamily family, int n_points, double scale);

/// (K,N)-cone over a base space: product of base points with a radial grid on
/// [0, pi/sqrt(K)] (K > 0, both ends collapsed to apexes) or [0, r_max] (K <= 0,
/// origin collapsed). Weights are cell integrals of sin_K^N against the base weights.
/// r_max <= 0 selects the base diameter bound as the radial cutoff.
FiniteMMSpace cone_space(const FiniteMMSpace& base, double curvature, double dim_bound,
                         int n_radial, double r_max = 0.0);

/// Same points and distances, weights reweighted by exp(-potential) and renormalized.
FiniteMMSpace weighted_space(const FiniteMMSpace& base, const Vector& potential);

}  // namespace mmlab
