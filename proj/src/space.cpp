#include "mmlab/space.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

namespace mmlab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace

double LineAmbient::dist(const double* a, const double* b) const { return std::abs(a[0] - b[0]); }

CircleAmbient::CircleAmbient(double radius) : radius_(radius) {
    if (radius <= 0.0) throw std::invalid_argument("CircleAmbient: radius must be positive");
}

double CircleAmbient::dist(const double* a, const double* b) const {
    double t = std::fmod(std::abs(a[0] - b[0]), 2.0 * kPi);
    if (t > kPi) t = 2.0 * kPi - t;
    return radius_ * t;
}

std::string CircleAmbient::describe() const {
    return "circle r=" + std::to_string(radius_);
}

TorusAmbient::TorusAmbient(double side) : side_(side) {
    if (side <= 0.0) throw std::invalid_argument("TorusAmbient: side must be positive");
}

double TorusAmbient::dist(const double* a, const double* b) const {
    double dx = std::fmod(std::abs(a[0] - b[0]), side_);
    double dy = std::fmod(std::abs(a[1] - b[1]), side_);
    if (dx > 0.5 * side_) dx = side_ - dx;
    if (dy > 0.5 * side_) dy = side_ - dy;
    return std::sqrt(dx * dx + dy * dy);
}

std::string TorusAmbient::describe() const { return "torus side=" + std::to_string(side_); }

SphereAmbient::SphereAmbient(double radius) : radius_(radius) {
    if (radius <= 0.0) throw std::invalid_argument("SphereAmbient: radius must be positive");
}

double SphereAmbient::dist(const double* a, const double* b) const {
    const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    const double cx = a[1] * b[2] - a[2] * b[1];
    const double cy = a[2] * b[0] - a[0] * b[2];
    const double cz = a[0] * b[1] - a[1] * b[0];
    const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
    return radius_ * std::atan2(cross, dot);
}

std::string SphereAmbient::describe() const { return "sphere r=" + std::to_string(radius_); }

ConeAmbient::ConeAmbient(double curvature, std::shared_ptr<const AmbientSpace> base)
    : curvature_(curvature), base_(std::move(base)) {
    if (!base_) throw std::invalid_argument("ConeAmbient: base ambient required");
}

double ConeAmbient::dist(const double* a, const double* b) const {
    const double t = a[0];
    const double s = b[0];
    const double phi = std::min(base_->dist(a + 1, b + 1), kPi);
    const double k = curvature_;
    if (k == 0.0) {
        const double sq = s * s + t * t - 2.0 * s * t * std::cos(phi);
        return sq > 0.0 ? std::sqrt(sq) : 0.0;
    }
    if (k > 0.0) {
        const double rk = std::sqrt(k);
        const double arg =
            clamp_unit(std::cos(rk * s) * std::cos(rk * t) +
                       std::sin(rk * s) * std::sin(rk * t) * std::cos(phi));
        return std::acos(arg) / rk;
    }
    const double rk = std::sqrt(-k);
    const double arg = std::cosh(rk * s) * std::cosh(rk * t) -
                       std::sinh(rk * s) * std::sinh(rk * t) * std::cos(phi);
    return std::acosh(arg < 1.0 ? 1.0 : arg) / rk;
}

std::string ConeAmbient::describe() const {
    return "cone K=" + std::to_string(curvature_) + " over " + base_->describe();
}

EuclideanAmbient::EuclideanAmbient(int dim) : dim_(dim) {
    if (dim <= 0) throw std::invalid_argument("EuclideanAmbient: dim must be positive");
}

double EuclideanAmbient::dist(const double* a, const double* b) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::string EuclideanAmbient::describe() const { return "euclidean d=" + std::to_string(dim_); }

PathAmbient::PathAmbient(std::shared_ptr<const AmbientSpace> base, std::vector<double> time_grid)
    : base_(std::move(base)), time_grid_(std::move(time_grid)) {
    if (!base_) throw std::invalid_argument("PathAmbient: base ambient required");
    if (time_grid_.size() < 1 || time_grid_.front() != 0.0) {
        throw std::invalid_argument("PathAmbient: time grid must start at 0");
    }
    for (std::size_t i = 1; i < time_grid_.size(); ++i) {
        if (time_grid_[i] <= time_grid_[i - 1]) {
            throw std::invalid_argument("PathAmbient: time grid must be strictly increasing");
        }
    }
}

int PathAmbient::coord_dim() const {
    return static_cast<int>(time_grid_.size()) * base_->coord_dim();
}

double PathAmbient::dist(const double* a, const double* b) const {
    const int bd = base_->coord_dim();
    std::vector<double> pointwise(time_grid_.size());
    for (std::size_t j = 0; j < time_grid_.size(); ++j) {
        pointwise[j] = base_->dist(a + j * static_cast<std::size_t>(bd),
                                   b + j * static_cast<std::size_t>(bd));
    }
    return delta_quadrature(time_grid_, pointwise);
}

std::string PathAmbient::describe() const {
    return "paths over " + base_->describe() + " T=" + std::to_string(time_grid_.back());
}

double PathAmbient::tail_bound() const { return std::exp(-time_grid_.back()); }

double delta_quadrature(const std::vector<double>& time_grid,
                        const std::vector<double>& pointwise_dist) {
    if (time_grid.size() != pointwise_dist.size() || time_grid.empty()) {
        throw std::invalid_argument("delta_quadrature: mismatched grids");
    }
    double running = 0.0;
    double integral = 0.0;
    double prev_g = 0.0;
    double prev_t = time_grid[0];
    running = std::min(1.0, pointwise_dist[0]);
    prev_g = std::exp(-prev_t) * running;
    for (std::size_t j = 1; j < time_grid.size(); ++j) {
        running = std::max(running, std::min(1.0, pointwise_dist[j]));
        const double g = std::exp(-time_grid[j]) * running;
        integral += 0.5 * (prev_g + g) * (time_grid[j] - prev_t);
        prev_g = g;
        prev_t = time_grid[j];
    }
    return integral;
}

std::optional<std::string> label_value(const std::string& label, const std::string& key) {
    std::istringstream in(label);
    std::string tok;
    const std::string prefix = key + "=";
    while (in >> tok) {
        if (tok.rfind(prefix, 0) == 0) return tok.substr(prefix.size());
    }
    return std::nullopt;
}

std::optional<double> SpaceMeta::covering_radius() const {
    const auto v = label_value(label, "eps");
    if (!v) return std::nullopt;
    try {
        return std::stod(*v);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

namespace {

void check_triangle(const Matrix& d, int i, int j, int k) {
    const double slack = d(i, k) - d(i, j) - d(j, k);
    if (slack > 1e-12) {
        throw std::invalid_argument("space invariant: triangle inequality violated at (" +
                                    std::to_string(i) + "," + std::to_string(j) + "," +
                                    std::to_string(k) + "), slack " + std::to_string(slack));
    }
}

}  // namespace

void validate_space(const Matrix& dist, const Vector& weight, const SpaceMeta& meta) {
    const int n = static_cast<int>(weight.size());
    if (dist.rows() != n || dist.cols() != n || n == 0) {
        throw std::invalid_argument("space invariant: dist must be n x n with n >= 1");
    }
    if (!(meta.dim_bound > 1.0)) {
        throw std::invalid_argument("space invariant: meta.N_dim must exceed 1");
    }
    if (!(meta.diameter_bound > 0.0)) {
        throw std::invalid_argument("space invariant: meta.D must be positive");
    }
    for (int i = 0; i < n; ++i) {
        if (dist(i, i) != 0.0) {
            throw std::invalid_argument("space invariant: nonzero diagonal at index " +
                                        std::to_string(i));
        }
        if (!(weight(i) > 0.0)) {
            throw std::invalid_argument("space invariant: weight must be positive at index " +
                                        std::to_string(i));
        }
        for (int j = i + 1; j < n; ++j) {
            if (dist(i, j) != dist(j, i)) {
                throw std::invalid_argument("space invariant: asymmetric dist at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
            }
            if (!(dist(i, j) > 0.0)) {
                throw std::invalid_argument("space invariant: coincident points (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
    const double mass = weight.sum();
    if (std::abs(mass - 1.0) > 1e-12) {
        throw std::invalid_argument("space invariant: total mass " + std::to_string(mass) +
                                    " differs from 1");
    }
    if (dist.maxCoeff() > meta.diameter_bound + 1e-12) {
        throw std::invalid_argument("space invariant: diameter exceeds meta.D");
    }
    if (n <= 512) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) check_triangle(dist, i, j, k);
    } else {
        std::mt19937_64 gen(0xd1ce5eedULL);
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int trial = 0; trial < 1000000; ++trial) {
            check_triangle(dist, pick(gen), pick(gen), pick(gen));
        }
    }
    if (meta.ambient) {
        if (meta.ambient->coords.rows() != n ||
            meta.ambient->coords.cols() != meta.ambient->space->coord_dim()) {
            throw std::invalid_argument("space invariant: embedding coords shape mismatch");
        }
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double ad = meta.ambient->dist(i, j);
                if (std::abs(ad - dist(i, j)) > 1e-9) {
                    throw std::invalid_argument(
                        "space invariant: embedding is not isometric at (" + std::to_string(i) +
                        "," + std::to_string(j) + "), gap " + std::to_string(ad - dist(i, j)));
                }
            }
        }
    }
}

FiniteMMSpace::FiniteMMSpace(Matrix dist, Vector weight, SpaceMeta meta)
    : dist_(std::move(dist)), weight_(std::move(weight)), meta_(std::move(meta)) {
    validate_space(dist_, weight_, meta_);
    const std::uint64_t h1 = 0xcbf29ce484222325ull;
    std::string hd = fnv1a_hex(dist_.data(), sizeof(double) * static_cast<std::size_t>(dist_.size()), h1);
    std::uint64_t carry = 0;
    std::memcpy(&carry, hd.data(), 8);
    hash_ = fnv1a_hex(weight_.data(), sizeof(double) * static_cast<std::size_t>(weight_.size()),
                      h1 ^ carry);
}

double FiniteMMSpace::ball_mass(int center, double r) const {
    double m = 0.0;
    for (int i = 0; i < size(); ++i) {
        if (dist_(center, i) < r) m += weight_(i);
    }
    return m;
}

double FiniteMMSpace::closed_ball_mass(int center, double r) const {
    double m = 0.0;
    for (int i = 0; i < size(); ++i) {
        if (dist_(center, i) <= r) m += weight_(i);
    }
    return m;
}

}  // namespace mmlab
