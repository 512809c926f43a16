#include "mmlab/geometry.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mmlab/transport.hpp"

namespace mmlab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Half the width of one grid shell: the recorded covering radius when available,
/// otherwise half the smallest positive distance.
double shell_radius(const FiniteMMSpace& space) {
    if (const auto eps = space.meta().covering_radius()) return *eps;
    double gap = kInf;
    for (int i = 0; i < space.size(); ++i) {
        for (int j = i + 1; j < space.size(); ++j) gap = std::min(gap, space.dist(i, j));
    }
    return std::isfinite(gap) ? 0.5 * gap : 0.0;
}

/// Grid point closest to sitting at distance (t*d, (1-t)*d) from the pair (a, b);
/// ties broken by smallest index. Returns (index, deviation).
std::pair<int, double> geodesic_point(const FiniteMMSpace& space, int a, int b, double t) {
    const double d = space.dist(a, b);
    int best = a;
    double best_dev = kInf;
    for (int z = 0; z < space.size(); ++z) {
        const double dev =
            std::max(std::abs(space.dist(a, z) - t * d), std::abs(space.dist(z, b) - (1.0 - t) * d));
        if (dev < best_dev) {
            best_dev = dev;
            best = z;
        }
    }
    return {best, best_dev};
}

}  // namespace

double theta_kappa(double kappa, double theta) {
    if (kappa > 0.0) return std::sin(std::sqrt(kappa) * theta) / std::sqrt(kappa);
    if (kappa < 0.0) return std::sinh(std::sqrt(-kappa) * theta) / std::sqrt(-kappa);
    return theta;
}

double sigma_coefficient(double kappa, double t, double theta) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("sigma_coefficient: t outside [0,1]");
    if (!(theta >= 0.0)) throw std::invalid_argument("sigma_coefficient: theta must be >= 0");
    const double kt2 = kappa * theta * theta;
    if (kt2 == 0.0) return t;
    if (kt2 >= kPi * kPi) return kInf;
    return theta_kappa(kappa, t * theta) / theta_kappa(kappa, theta);
}

CdStarReport cd_star_displacement_check(const FiniteMMSpace& space, const Vector& mu0,
                                        const Vector& mu1, int steps, double tolerance) {
    if (steps < 1) throw std::invalid_argument("cd_star_displacement_check: steps must be >= 1");
    if (mu0.size() != space.size() || mu1.size() != space.size()) {
        throw std::invalid_argument("cd_star_displacement_check: marginal size mismatch");
    }
    const double n_prime = space.meta().dim_bound;
    const double kappa = space.meta().curvature_bound / n_prime;
    const auto ot = w2_distance(space, mu0, mu1);
    const auto& q = ot.plan.q;

    // Density powers rho^(-1/N') of the endpoints w.r.t. the reference weights.
    auto density_pow = [&](const Vector& mu, int i) {
        return std::pow(mu(i) / space.weight(i), -1.0 / n_prime);
    };

    CdStarReport report;
    report.satisfied = true;
    const double coarse_cut = 0.25 * space.diameter();
    for (int step = 0; step <= steps; ++step) {
        const double t = static_cast<double>(step) / steps;
        Vector mu_t = Vector::Zero(space.size());
        double rhs = 0.0;
        bool rhs_infinite = false;
        for (int i = 0; i < q.rows(); ++i) {
            for (int j = 0; j < q.cols(); ++j) {
                const double mass = q(i, j);
                if (mass <= 1e-15) continue;
                const auto [z, dev] = geodesic_point(space, i, j, t);
                report.max_snap_deviation = std::max(report.max_snap_deviation, dev);
                mu_t(z) += mass;
                const double d = space.dist(i, j);
                const double s0 = sigma_coefficient(kappa, 1.0 - t, d);
                const double s1 = sigma_coefficient(kappa, t, d);
                if (std::isinf(s0) || std::isinf(s1)) {
                    rhs_infinite = true;
                } else {
                    rhs += mass * (s0 * density_pow(mu0, i) + s1 * density_pow(mu1, j));
                }
            }
        }
        double lhs = 0.0;
        for (int z = 0; z < space.size(); ++z) {
            if (mu_t(z) > 0.0) {
                lhs += std::pow(mu_t(z), 1.0 - 1.0 / n_prime) *
                       std::pow(space.weight(z), 1.0 / n_prime);
            }
        }
        const double margin = rhs_infinite ? -kInf : lhs - rhs;
        report.margins.push_back(margin);
        if (!(margin >= -tolerance)) report.satisfied = false;
    }
    report.worst_margin = *std::min_element(report.margins.begin(), report.margins.end());
    report.grid_too_coarse = report.max_snap_deviation > coarse_cut;
    return report;
}

ConvexityReport strong_convexity_check(const FiniteMMSpace& space, const Vector& potential,
                                       double curvature, double dim_bound, double tolerance) {
    if (potential.size() != space.size()) {
        throw std::invalid_argument("strong_convexity_check: potential size mismatch");
    }
    const double kappa = curvature / dim_bound;
    auto u_n = [&](int i) { return std::exp(-potential(i) / dim_bound); };

    // Strict budget: only near-exact midpoints qualify, so margins probe the
    // inequality rather than the interpolation error.
    const double budget = 0.5 * shell_radius(space) + 1e-12;
    ConvexityReport report;
    report.satisfied = true;
    report.worst_margin = kInf;

    std::vector<std::pair<int, int>> pairs;
    if (space.size() <= 128) {
        for (int a = 0; a < space.size(); ++a)
            for (int b = a + 1; b < space.size(); ++b) pairs.emplace_back(a, b);
    } else {
        std::mt19937_64 gen(0x9e0dULL);
        std::uniform_int_distribution<int> pick(0, space.size() - 1);
        for (int k = 0; k < 2000; ++k) {
            const int a = pick(gen), b = pick(gen);
            if (a != b) pairs.emplace_back(std::min(a, b), std::max(a, b));
        }
    }

    bool any_geodesic = false;
    for (const auto& [a, b] : pairs) {
        const auto [mid, dev_mid] = geodesic_point(space, a, b, 0.5);
        report.max_midpoint_deviation = std::max(report.max_midpoint_deviation, dev_mid);
        if (dev_mid > budget) continue;  // no approximate geodesic at this resolution
        any_geodesic = true;
        const auto [q1, dev_q1] = geodesic_point(space, a, mid, 0.5);
        const auto [q3, dev_q3] = geodesic_point(space, mid, b, 0.5);
        const double d = space.dist(a, b);
        const int nodes[5] = {a, q1, mid, q3, b};
        for (int k = 0; k <= 4; ++k) {
            const double t = 0.25 * k;
            if ((k == 1 || k == 3) && std::max(dev_q1, dev_q3) > budget) continue;
            const double s0 = sigma_coefficient(kappa, 1.0 - t, d);
            const double s1 = sigma_coefficient(kappa, t, d);
            const double margin = (std::isinf(s0) || std::isinf(s1))
                                      ? -kInf
                                      : u_n(nodes[k]) - (s0 * u_n(a) + s1 * u_n(b));
            report.worst_margin = std::min(report.worst_margin, margin);
            if (!(margin >= -tolerance)) report.satisfied = false;
        }
    }
    report.geodesic_found = any_geodesic;
    if (!any_geodesic) {
        report.satisfied = false;
        report.worst_margin = 0.0;
    }
    return report;
}

BishopGromovReport bishop_gromov_check(const FiniteMMSpace& space, int center,
                                       const std::vector<std::pair<double, double>>& radii) {
    const double curvature = space.meta().curvature_bound;
    const double n_dim = space.meta().dim_bound;
    const double kappa = curvature / n_dim;
    const double shell = 2.0 * shell_radius(space);

    auto model_volume = [&](double r) {
        return adaptive_simpson([&](double t) { return std::pow(theta_kappa(kappa, t), n_dim); },
                                0.0, r, 1e-8);
    };

    BishopGromovReport report;
    report.satisfied = true;
    for (const auto& [r, big_r] : radii) {
        if (r > big_r) throw std::invalid_argument("bishop_gromov_check: needs r <= R");
        if (curvature > 0.0 && big_r >= kPi * std::sqrt(n_dim / curvature)) {
            throw std::invalid_argument("bishop_gromov_check: R exceeds pi*sqrt(N/K)");
        }
        BishopGromovRow row;
        row.r = r;
        row.big_r = big_r;
        const double v_big = space.closed_ball_mass(center, big_r);
        row.volume_ratio = space.closed_ball_mass(center, r) / v_big;
        row.model_ratio = r == big_r ? 1.0 : model_volume(r) / model_volume(big_r);
        const double slack_ratio = space.closed_ball_mass(center, r + shell) / v_big;
        row.satisfied = row.volume_ratio >= row.model_ratio - 1e-6 ||
                        slack_ratio >= row.model_ratio - 1e-6;
        if (!row.satisfied) report.satisfied = false;
        report.rows.push_back(row);
    }
    return report;
}

double doubling_constant(const FiniteMMSpace& space, const std::vector<double>& radii) {
    double worst = 1.0;
    for (const double r : radii) {
        if (!(r > 0.0)) throw std::invalid_argument("doubling_constant: radii must be positive");
        for (int x = 0; x < space.size(); ++x) {
            worst = std::max(worst, space.ball_mass(x, 2.0 * r) / space.ball_mass(x, r));
        }
    }
    return worst;
}

VolumeGrowthFit volume_growth_floor(const FiniteMMSpace& space) {
    if (space.size() < 2) {
        throw std::invalid_argument("volume_growth_floor: degenerate space");
    }
    const double spacing = 2.0 * shell_radius(space);
    const double hi = std::min(1.0, space.meta().diameter_bound);
    const double lo = spacing * 1.0001;
    if (!(hi > lo)) {
        throw std::invalid_argument("volume_growth_floor: fewer than 3 usable radii");
    }
    const int n_r = 12;
    std::vector<double> log_r, log_v;
    for (int k = 0; k < n_r; ++k) {
        const double r = lo * std::pow(hi / lo, static_cast<double>(k) / (n_r - 1));
        double v_min = kInf;
        for (int x = 0; x < space.size(); ++x) v_min = std::min(v_min, space.ball_mass(x, r));
        if (v_min <= 0.0) continue;
        log_r.push_back(std::log(r));
        log_v.push_back(std::log(v_min));
    }
    if (log_r.size() < 3) {
        throw std::invalid_argument("volume_growth_floor: fewer than 3 usable radii");
    }
    const LineFit fit = fit_line(log_r, log_v);
    VolumeGrowthFit out;
    out.nu = 0.5 * fit.slope;
    double log_c = kInf;
    for (std::size_t i = 0; i < log_r.size(); ++i) {
        log_c = std::min(log_c, log_v[i] - fit.slope * log_r[i]);
    }
    out.c = std::exp(log_c);
    return out;
}

}  // namespace mmlab
