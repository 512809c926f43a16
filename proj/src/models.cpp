#include "mmlab/models.hpp"

#include <cmath>
#include <sstream>

namespace mmlab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void fix_total_mass(Vector& w) {
    w /= w.sum();
    int imax = 0;
    w.maxCoeff(&imax);
    w(imax) += 1.0 - w.sum();
}

Matrix dist_from_embedding(const AmbientEmbedding& emb, int n) {
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = emb.dist(i, j);
        }
    }
    return d;
}

double min_neighbor_max(const Matrix& d) {
    const int n = static_cast<int>(d.rows());
    if (n < 2) return 0.0;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (j != i) nearest = std::min(nearest, d(i, j));
        }
        worst = std::max(worst, nearest);
    }
    return worst;
}

FiniteMMSpace build_circle(int n, double scale) {
    AmbientEmbedding emb{std::make_shared<CircleAmbient>(scale), Matrix(n, 1)};
    for (int i = 0; i < n; ++i) emb.coords(i, 0) = 2.0 * kPi * i / n;
    Matrix d = dist_from_embedding(emb, n);
    Vector w = Vector::Constant(n, 1.0 / n);
    fix_total_mass(w);
    const double eps = kPi * scale / n;
    SpaceMeta meta;
    meta.curvature_bound = 0.0;
    meta.dim_bound = 2.0;
    meta.diameter_bound = kPi * scale;
    meta.label = "family=circle n=" + std::to_string(n) + " scale=" + fmt(scale) +
                 " eps=" + fmt(eps);
    meta.ambient = std::move(emb);
    return FiniteMMSpace(std::move(d), std::move(w), std::move(meta));
}

FiniteMMSpace build_torus2(int n, double scale) {
    const int k = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n))));
    if (k < 2 || k * k != n) {
        throw std::invalid_argument("build_model_space: torus2 needs a square n >= 4");
    }
    const double side = 2.0 * kPi * scale;
    const double h = side / k;
    AmbientEmbedding emb{std::make_shared<TorusAmbient>(side), Matrix(n, 2)};
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            emb.coords(i * k + j, 0) = h * i;
            emb.coords(i * k + j, 1) = h * j;
        }
    }
    Matrix d = dist_from_embedding(emb, n);
    Vector w = Vector::Constant(n, 1.0 / n);
    fix_total_mass(w);
    const double eps = h / std::sqrt(2.0);
    SpaceMeta meta;
    meta.curvature_bound = 0.0;
    meta.dim_bound = 2.0;
    meta.diameter_bound = side / std::sqrt(2.0);
    meta.label = "family=torus2 n=" + std::to_string(n) + " scale=" + fmt(scale) +
                 " eps=" + fmt(eps);
    meta.ambient = std::move(emb);
    return FiniteMMSpace(std::move(d), std::move(w), std::move(meta));
}

FiniteMMSpace build_interval(int n, double scale) {
    const double h = scale / (n - 1);
    AmbientEmbedding emb{std::make_shared<LineAmbient>(), Matrix(n, 1)};
    for (int i = 0; i < n; ++i) emb.coords(i, 0) = h * i;
    Matrix d = dist_from_embedding(emb, n);
    Vector w(n);
    for (int i = 0; i < n; ++i) w(i) = (i == 0 || i == n - 1) ? 0.5 * h : h;
    fix_total_mass(w);
    SpaceMeta meta;
    meta.curvature_bound = 0.0;
    meta.dim_bound = 2.0;
    meta.diameter_bound = scale;
    meta.label = "family=interval n=" + std::to_string(n) + " scale=" + fmt(scale) +
                 " eps=" + fmt(0.5 * h);
    meta.ambient = std::move(emb);
    return FiniteMMSpace(std::move(d), std::move(w), std::move(meta));
}

FiniteMMSpace build_sphere2(int n, double scale) {
    if (n < 4) throw std::invalid_argument("build_model_space: sphere2 requires n >= 4");
    AmbientEmbedding emb{std::make_shared<SphereAmbient>(scale), Matrix(n, 3)};
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * i;
        emb.coords(i, 0) = r * std::cos(th);
        emb.coords(i, 1) = r * std::sin(th);
        emb.coords(i, 2) = z;
    }
    Matrix d = dist_from_embedding(emb, n);
    Vector w = Vector::Constant(n, 1.0 / n);
    fix_total_mass(w);
    // Fibonacci nets carry no closed-form covering radius; the largest
    // nearest-neighbor gap is the stored proxy.
    const double eps = min_neighbor_max(d);
    SpaceMeta meta;
    meta.curvature_bound = 1.0 / (scale * scale);
    meta.dim_bound = 2.0;
    meta.diameter_bound = kPi * scale;
    meta.label = "family=sphere2 n=" + std::to_string(n) + " scale=" + fmt(scale) +
                 " eps=" + fmt(eps);
    meta.ambient = std::move(emb);
    return FiniteMMSpace(std::move(d), std::move(w), std::move(meta));
}

double sin_k(double curvature, double t) {
    if (curvature > 0.0) return std::sin(std::sqrt(curvature) * t) / std::sqrt(curvature);
    if (curvature < 0.0) return std::sinh(std::sqrt(-curvature) * t) / std::sqrt(-curvature);
    return t;
}

}  // namespace

ModelFamily parse_family(const std::string& name) {
    if (name == "circle") return ModelFamily::circle;
    if (name == "torus2") return ModelFamily::torus2;
    if (name == "interval") return ModelFamily::interval;
    if (name == "sphere2") return ModelFamily::sphere2;
    throw std::invalid_argument("unsupported model family: " + name);
}

std::string family_name(ModelFamily family) {
    switch (family) {
        case ModelFamily::circle: return "circle";
        case ModelFamily::torus2: return "torus2";
        case ModelFamily::interval: return "interval";
        case ModelFamily::sphere2: return "sphere2";
    }
    return "?";
}

FiniteMMSpace build_model_space(ModelFamily family, int n_points, double scale) {
    if (n_points < 2) throw std::invalid_argument("build_model_space: n_points must be >= 2");
    if (!(scale > 0.0)) throw std::invalid_argument("build_model_space: scale must be positive");
    switch (family) {
        case ModelFamily::circle: return build_circle(n_points, scale);
        case ModelFamily::torus2: return build_torus2(n_points, scale);
        case ModelFamily::interval: return build_interval(n_points, scale);
        case ModelFamily::sphere2: return build_sphere2(n_points, scale);
    }
    throw std::invalid_argument("build_model_space: unsupported family");
}

FiniteMMSpace cone_space(const FiniteMMSpace& base, double curvature, double dim_bound,
                         int n_radial, double r_max) {
    if (n_radial < 2) throw std::invalid_argument("cone_space: n_radial must be >= 2");
    if (curvature > 0.0 && base.diameter() > kPi + 1e-12) {
        throw std::invalid_argument("cone_space: base diameter exceeds pi with K > 0");
    }
    const bool spindle = curvature > 0.0;
    const double t_top = spindle ? kPi / std::sqrt(curvature)
                                 : (r_max > 0.0 ? r_max : base.meta().diameter_bound);
    if (!(t_top > 0.0)) throw std::invalid_argument("cone_space: radial cutoff must be positive");
    const int nb = base.size();
    const double dt = t_top / (n_radial - 1);

    // Point set: apex at t=0, interior shells, and for K > 0 a second apex at t_top.
    struct ConePoint {
        double t;
        int base_index;  // -1 for apexes
    };
    std::vector<ConePoint> pts;
    pts.push_back({0.0, -1});
    for (int j = 1; j < n_radial - 1; ++j) {
        for (int x = 0; x < nb; ++x) pts.push_back({j * dt, x});
    }
    if (spindle) {
        pts.push_back({t_top, -1});
    } else {
        for (int x = 0; x < nb; ++x) pts.push_back({t_top, x});
    }
    const int n = static_cast<int>(pts.size());

    auto cone_dist = [&](const ConePoint& a, const ConePoint& b) {
        const double phi = (a.base_index < 0 || b.base_index < 0)
                               ? 0.0
                               : std::min(base.dist(a.base_index, b.base_index), kPi);
        const double s = a.t, t = b.t;
        if (curvature == 0.0) {
            const double sq = s * s + t * t - 2.0 * s * t * std::cos(phi);
            return sq > 0.0 ? std::sqrt(sq) : 0.0;
        }
        if (curvature > 0.0) {
            const double rk = std::sqrt(curvature);
            double arg = std::cos(rk * s) * std::cos(rk * t) +
                         std::sin(rk * s) * std::sin(rk * t) * std::cos(phi);
            arg = std::min(1.0, std::max(-1.0, arg));
            return std::acos(arg) / rk;
        }
        const double rk = std::sqrt(-curvature);
        const double arg = std::cosh(rk * s) * std::cosh(rk * t) -
                           std::sinh(rk * s) * std::sinh(rk * t) * std::cos(phi);
        return std::acosh(arg < 1.0 ? 1.0 : arg) / rk;
    };

    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = cone_dist(pts[static_cast<std::size_t>(i)],
                                          pts[static_cast<std::size_t>(j)]);
        }
    }

    // Cell-integrated radial measure sin_K^N dt (keeps the apex mass positive).
    auto shell_mass = [&](double lo, double hi) {
        return adaptive_simpson([&](double t) { return std::pow(sin_k(curvature, t), dim_bound); },
                                lo, hi, 1e-10);
    };
    Vector w(n);
    w(0) = shell_mass(0.0, 0.5 * dt);
    int p = 1;
    for (int j = 1; j < n_radial - 1; ++j) {
        const double lo = (j - 0.5) * dt;
        const double hi = (j == n_radial - 2 && !spindle) ? t_top - 0.5 * dt : (j + 0.5) * dt;
        const double shell = shell_mass(lo, hi);
        for (int x = 0; x < nb; ++x) w(p++) = shell * base.weight(x);
    }
    if (spindle) {
        w(p++) = shell_mass(t_top - 0.5 * dt, t_top);
    } else {
        const double shell = shell_mass(t_top - 0.5 * dt, t_top);
        for (int x = 0; x < nb; ++x) w(p++) = shell * base.weight(x);
    }
    fix_total_mass(w);

    SpaceMeta meta;
    meta.curvature_bound = std::max(curvature, 0.0) * dim_bound;
    meta.dim_bound = dim_bound + 1.0;
    meta.diameter_bound = spindle ? t_top : 2.0 * t_top;
    meta.label = "family=cone K=" + fmt(curvature) + " N=" + fmt(dim_bound) +
                 " n_radial=" + std::to_string(n_radial) + " eps=" + fmt(min_neighbor_max(d));

    if (base.meta().ambient) {
        AmbientEmbedding emb;
        emb.space = std::make_shared<ConeAmbient>(curvature, base.meta().ambient->space);
        emb.coords.resize(n, 1 + base.meta().ambient->coords.cols());
        for (int i = 0; i < n; ++i) {
            const auto& cp = pts[static_cast<std::size_t>(i)];
            emb.coords(i, 0) = cp.t;
            const int bi = cp.base_index < 0 ? 0 : cp.base_index;
            emb.coords.row(i).tail(base.meta().ambient->coords.cols()) =
                base.meta().ambient->coords.row(bi);
        }
        meta.ambient = std::move(emb);
    }
    return FiniteMMSpace(std::move(d), std::move(w), std::move(meta));
}

FiniteMMSpace weighted_space(const FiniteMMSpace& base, const Vector& potential) {
    if (potential.size() != base.size()) {
        throw std::invalid_argument("weighted_space: potential size mismatch");
    }
    for (int i = 0; i < potential.size(); ++i) {
        if (!std::isfinite(potential(i))) {
            throw std::invalid_argument("weighted_space: potential must be finite at index " +
                                        std::to_string(i));
        }
    }
    // Shift by the minimum so the reweighting is overflow-safe and shift-invariant.
    const double vmin = potential.minCoeff();
    Vector w(base.size());
    for (int i = 0; i < base.size(); ++i) {
        w(i) = std::exp(-(potential(i) - vmin)) * base.weight(i);
    }
    fix_total_mass(w);
    SpaceMeta meta = base.meta();
    if (!label_value(meta.label, "weighted")) meta.label += " weighted=1";
    return FiniteMMSpace(base.dist(), std::move(w), std::move(meta));
}

}  // namespace mmlab
