#pragma once

#include <vector>

#include "mmlab/space.hpp"

namespace mmlab {

/// Function values on a subset of an ambient point set, with Holder data.
struct HolderFunction {
    std::vector<int> domain;  // indices into the ambient point set
    Vector values;            // one value per domain index
    double alpha = 1.0;       // exponent in (0, 1]
    double h = 0.0;           // Holder constant

    void validate(const Matrix& dist) const;
};

/// max over domain pairs of |f(x) - f(y)| / d(x,y)^alpha; 0 for singletons.
double holder_constant(const Matrix& dist, const std::vector<int>& domain,
                       const Vector& values, double alpha);

/// McShane-type extension F(x) = max_{a in domain} { f(a) - H d(a,x)^alpha } over all
/// points of the ambient distance matrix. Restriction to the domain is exact and the
/// all-pairs Holder constant never grows.
Vector extend(const HolderFunction& f, const Matrix& dist);

}  // namespace mmlab
