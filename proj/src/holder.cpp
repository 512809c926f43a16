#include "mmlab/holder.hpp"

#include <cmath>

namespace mmlab {

void HolderFunction::validate(const Matrix& dist) const {
    if (static_cast<int>(domain.size()) != values.size() || domain.empty()) {
        throw std::invalid_argument("HolderFunction: domain and values must align");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("HolderFunction: alpha must lie in (0, 1]");
    }
    if (h < 0.0) throw std::invalid_argument("HolderFunction: negative Holder constant");
    for (const int a : domain) {
        if (a < 0 || a >= dist.rows()) {
            throw std::invalid_argument("HolderFunction: domain index out of range");
        }
    }
    for (std::size_t i = 0; i < domain.size(); ++i) {
        for (std::size_t j = i + 1; j < domain.size(); ++j) {
            const double gap = std::abs(values(static_cast<int>(i)) - values(static_cast<int>(j)));
            const double allowed = h * std::pow(dist(domain[i], domain[j]), alpha);
            if (gap > allowed + 1e-12) {
                throw std::invalid_argument("HolderFunction: values break the Holder bound at pair (" +
                                            std::to_string(domain[i]) + "," +
                                            std::to_string(domain[j]) + ")");
            }
        }
    }
}

double holder_constant(const Matrix& dist, const std::vector<int>& domain,
                       const Vector& values, double alpha) {
    if (static_cast<int>(domain.size()) != values.size()) {
        throw std::invalid_argument("holder_constant: domain and values must align");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("holder_constant: alpha must lie in (0, 1]");
    }
    // Singleton domains carry no pair information: 0 by convention.
    double h = 0.0;
    for (std::size_t i = 0; i < domain.size(); ++i) {
        for (std::size_t j = i + 1; j < domain.size(); ++j) {
            const double d = dist(domain[i], domain[j]);
            h = std::max(h, std::abs(values(static_cast<int>(i)) - values(static_cast<int>(j))) /
                                std::pow(d, alpha));
        }
    }
    return h;
}

Vector extend(const HolderFunction& f, const Matrix& dist) {
    f.validate(dist);
    const int n = static_cast<int>(dist.rows());
    Vector out(n);
    for (int x = 0; x < n; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < f.domain.size(); ++k) {
            best = std::max(best, f.values(static_cast<int>(k)) -
                                      f.h * std::pow(dist(f.domain[k], x), f.alpha));
        }
        out(x) = best;
    }
    // The sup at a domain point is attained there; pin the restriction bit-exactly.
    for (std::size_t k = 0; k < f.domain.size(); ++k) {
        out(f.domain[k]) = f.values(static_cast<int>(k));
    }
    return out;
}

}  // namespace mmlab
