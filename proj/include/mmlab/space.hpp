#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmlab/linalg.hpp"

namespace mmlab {

/// Pairwise distance oracle over a shared point universe. Points are identified by
/// coordinate rows; embedded finite spaces carry their own coordinate blocks.
class AmbientSpace {
  public:
    virtual ~AmbientSpace() = default;
    virtual int coord_dim() const = 0;
    virtual double dist(const double* a, const double* b) const = 0;
    virtual std::string describe() const = 0;

    double dist_rows(const Matrix& coords, int i, int j) const {
        // coords are stored row-major per point via transpose-free access
        thread_local std::vector<double> buf_a, buf_b;
        buf_a.resize(static_cast<std::size_t>(coords.cols()));
        buf_b.resize(static_cast<std::size_t>(coords.cols()));
        for (int c = 0; c < coords.cols(); ++c) {
            buf_a[static_cast<std::size_t>(c)] = coords(i, c);
            buf_b[static_cast<std::size_t>(c)] = coords(j, c);
        }
        return dist(buf_a.data(), buf_b.data());
    }
};

class LineAmbient final : public AmbientSpace {
  public:
    int coord_dim() const override { return 1; }
    double dist(const double* a, const double* b) const override;
    std::string describe() const override { return "line"; }
};

/// Geodesic circle of given radius; coordinates are angles in radians.
class CircleAmbient final : public AmbientSpace {
  public:
    explicit CircleAmbient(double radius);
    int coord_dim() const override { return 1; }
    double dist(const double* a, const double* b) const override;
    std::string describe() const override;
    double radius() const { return radius_; }

  private:
    double radius_;
};

/// Flat square torus with side length `side`; coordinates in [0, side)^2.
class TorusAmbient final : public AmbientSpace {
  public:
    explicit TorusAmbient(double side);
    int coord_dim() const override { return 2; }
    double dist(const double* a, const double* b) const override;
    std::string describe() const override;
    double side() const { return side_; }

  private:
    double side_;
};

/// Round 2-sphere of given radius; coordinates are unit 3-vectors.
class SphereAmbient final : public AmbientSpace {
  public:
    explicit SphereAmbient(double radius);
    int coord_dim() const override { return 3; }
    double dist(const double* a, const double* b) const override;
    std::string describe() const override;

  private:
    double radius_;
};

/// Euclidean cone over a base ambient; coordinates are (radial t, base coords).
/// For K > 0 the radial range is [0, pi/sqrt(K)] with both ends collapsed.
class ConeAmbient final : public AmbientSpace {
  public:
    ConeAmbient(double curvature, std::shared_ptr<const AmbientSpace> base);
    int coord_dim() const override { return 1 + base_->coord_dim(); }
    double dist(const double* a, const double* b) const override;
    std::string describe() const override;

  private:
    double curvature_;
    std::shared_ptr<const AmbientSpace> base_;
};

/// Flat Euclidean R^d, used by tests and generic point clouds.
class EuclideanAmbient final : public AmbientSpace {
  public:
    explicit EuclideanAmbient(int dim);
    int coord_dim() const override { return dim_; }
    double dist(const double* a, const double* b) const override;
    std::string describe() const override;

  private:
    int dim_;
};

/// Sampled-path universe: a point is a trajectory over a fixed time grid with values in
/// a base ambient; the metric is the local uniform distance
///   delta(v, w) = int_0^{T_max} e^{-T} (1 ^ sup_{t<=T} d(v_t, w_t)) dT
/// evaluated by trapezoid quadrature on the grid.
class PathAmbient final : public AmbientSpace {
  public:
    PathAmbient(std::shared_ptr<const AmbientSpace> base, std::vector<double> time_grid);
    int coord_dim() const override;
    double dist(const double* a, const double* b) const override;
    std::string describe() const override;
    double t_max() const { return time_grid_.back(); }
    /// Quadrature tail bound e^{-T_max}, reported alongside path distances.
    double tail_bound() const;

  private:
    std::shared_ptr<const AmbientSpace> base_;
    std::vector<double> time_grid_;
};

/// Trapezoid quadrature of int_0^{grid.back()} e^{-T} (1 ^ running_max(pointwise)) dT.
double delta_quadrature(const std::vector<double>& time_grid,
                        const std::vector<double>& pointwise_dist);

/// Isometric embedding of a finite space into an ambient universe: one coordinate row
/// per point. Validated against the space's own distance matrix on construction.
struct AmbientEmbedding {
    std::shared_ptr<const AmbientSpace> space;
    Matrix coords;  // N x coord_dim

    double dist(int i, int j) const { return space->dist_rows(coords, i, j); }
};

struct SpaceMeta {
    double curvature_bound = 0.0;  // K, lower Ricci-bound parameter
    double dim_bound = 2.0;        // N_dim > 1
    double diameter_bound = 0.0;   // D > 0
    std::string label;
    std::optional<AmbientEmbedding> ambient;

    /// Covering radius parsed from an "eps=<value>" token in the label, if present.
    std::optional<double> covering_radius() const;
};

/// Reads "key=value" tokens from a whitespace-separated label string.
std::optional<std::string> label_value(const std::string& label, const std::string& key);

/// Finite metric measure space: symmetric distance matrix, strictly positive
/// probability weights, curvature/dimension metadata. Immutable after construction;
/// all invariants are checked by the constructor.
class FiniteMMSpace {
  public:
    FiniteMMSpace(Matrix dist, Vector weight, SpaceMeta meta);

    int size() const { return static_cast<int>(weight_.size()); }
    const Matrix& dist() const { return dist_; }
    double dist(int i, int j) const { return dist_(i, j); }
    const Vector& weight() const { return weight_; }
    double weight(int i) const { return weight_(i); }
    const SpaceMeta& meta() const { return meta_; }

    double diameter() const { return dist_.maxCoeff(); }

    /// Digest of (dist, weight) bytes; identifies the space for caches and ensembles.
    const std::string& hash() const { return hash_; }

    /// m(B_r(x)) with the open-ball convention d < r.
    double ball_mass(int center, double r) const;
    /// m(closed ball), d <= r; used by volume ratios.
    double closed_ball_mass(int center, double r) const;

  private:
    Matrix dist_;
    Vector weight_;
    SpaceMeta meta_;
    std::string hash_;
};

/// Validates symmetric/zero-diagonal/positivity/triangle/normalization invariants;
/// throws std::invalid_argument naming the first offending entry. Exhaustive triple
/// check up to n = 512, randomized 10^6 triples above.
void validate_space(const Matrix& dist, const Vector& weight, const SpaceMeta& meta);

}  // namespace mmlab
