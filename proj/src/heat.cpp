#include "mmlab/heat.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mmlab/geometry.hpp"

namespace mmlab {

namespace {

double family_growth_exponent(const FiniteMMSpace& space) {
    const auto family = label_value(space.meta().label, "family");
    if (family) {
        if (*family == "circle" || *family == "interval") return 0.5;
        if (*family == "torus2" || *family == "sphere2" || *family == "cone") return 1.0;
    }
    // The degree calibration absorbs the eps^{2nu} factor, so nu is recorded
    // metadata here; spaces too small to fit fall back to the curve exponent.
    try {
        return volume_growth_floor(space).nu;
    } catch (const std::invalid_argument&) {
        return 0.5;
    }
}

bool connected(const SparseMatrix& w, int n) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (SparseMatrix::InnerIterator it(w, u); it; ++it) {
            const int v = static_cast<int>(it.row());
            if (!seen[static_cast<std::size_t>(v)] && it.value() > 0.0) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

}  // namespace

DirichletGraph build_dirichlet_graph(std::shared_ptr<const FiniteMMSpace> space,
                                     double bandwidth) {
    if (!space) throw std::invalid_argument("build_dirichlet_graph: null space");
    const int n = space->size();
    double eps = bandwidth;
    if (eps <= 0.0) {
        const auto cover = space->meta().covering_radius();
        if (!cover) {
            throw std::invalid_argument(
                "build_dirichlet_graph: auto bandwidth needs an eps=<covering radius> label");
        }
        eps = 2.0 * *cover;
    }
    const double cut = 3.0 * eps;

    // Kernel degrees q(x) = sum_y m_y exp(-d^2/eps^2); the median degree estimates the
    // local density and fixes the generator scale (see header).
    Vector degree = Vector::Zero(n);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const double d = space->dist(x, y);
            if (d <= cut) degree(x) += space->weight(y) * std::exp(-d * d / (eps * eps));
        }
    }
    std::vector<double> sorted(degree.data(), degree.data() + n);
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double q_med = sorted[static_cast<std::size_t>(n / 2)];
    const double denom = 0.25 * q_med * eps * eps;  // = c_nu * eps^(2 nu + 2)

    const double nu = family_growth_exponent(*space);
    DirichletGraph graph;
    graph.space = space;
    graph.bandwidth = eps;
    graph.nu = nu;
    graph.c_nu = denom / std::pow(eps, 2.0 * nu + 2.0);

    std::vector<Eigen::Triplet<double>> triplets;
    for (int x = 0; x < n; ++x) {
        for (int y = x + 1; y < n; ++y) {
            const double d = space->dist(x, y);
            if (d > cut) continue;
            const double w = space->weight(x) * space->weight(y) *
                             std::exp(-d * d / (eps * eps)) / denom;
            triplets.emplace_back(x, y, w);
            triplets.emplace_back(y, x, w);
        }
    }
    graph.conduct.resize(n, n);
    graph.conduct.setFromTriplets(triplets.begin(), triplets.end());

    if (n > 1 && !connected(graph.conduct, n)) {
        throw std::invalid_argument(
            "build_dirichlet_graph: graph disconnected at bandwidth " + std::to_string(eps) +
            "; retry with a larger bandwidth (e.g. " + std::to_string(2.0 * eps) + ")");
    }
    return graph;
}

DirichletGraph dirichlet_graph_from_conductance(std::shared_ptr<const FiniteMMSpace> space,
                                                Matrix conduct, double bandwidth) {
    if (!space) throw std::invalid_argument("dirichlet_graph_from_conductance: null space");
    const int n = space->size();
    if (conduct.rows() != n || conduct.cols() != n) {
        throw std::invalid_argument("dirichlet_graph_from_conductance: shape mismatch");
    }
    DirichletGraph graph;
    graph.space = std::move(space);
    graph.bandwidth = bandwidth;
    std::vector<Eigen::Triplet<double>> triplets;
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            if (x == y) continue;
            if (std::abs(conduct(x, y) - conduct(y, x)) > 1e-14) {
                throw std::invalid_argument("dirichlet_graph_from_conductance: asymmetric input");
            }
            if (conduct(x, y) > 0.0) triplets.emplace_back(x, y, conduct(x, y));
        }
    }
    graph.conduct.resize(n, n);
    graph.conduct.setFromTriplets(triplets.begin(), triplets.end());
    if (n > 1 && !connected(graph.conduct, n)) {
        throw std::invalid_argument("dirichlet_graph_from_conductance: graph disconnected");
    }
    return graph;
}

double cheeger_energy(const DirichletGraph& graph, const Vector& u) {
    return cheeger_energy(graph, u, u);
}

double cheeger_energy(const DirichletGraph& graph, const Vector& u, const Vector& v) {
    const int n = graph.space->size();
    if (u.size() != n || v.size() != n) {
        throw std::invalid_argument("cheeger_energy: vector size mismatch");
    }
    double e = 0.0;
    for (int x = 0; x < graph.conduct.outerSize(); ++x) {
        for (SparseMatrix::InnerIterator it(graph.conduct, x); it; ++it) {
            e += 0.5 * it.value() * (u(it.row()) - u(it.col())) * (v(it.row()) - v(it.col()));
        }
    }
    return e;
}

SpectralHeatModel::SpectralHeatModel(std::shared_ptr<const FiniteMMSpace> space, Vector eigvals,
                                     Matrix eigvecs, double bandwidth)
    : space_(std::move(space)),
      eigvals_(std::move(eigvals)),
      eigvecs_(std::move(eigvecs)),
      bandwidth_(bandwidth) {
    const int n = space_->size();
    if (eigvals_.size() != n || eigvecs_.rows() != n || eigvecs_.cols() != n) {
        throw std::invalid_argument("SpectralHeatModel: shape mismatch");
    }
    if (std::abs(eigvals_(0)) > 1e-10) {
        throw std::invalid_argument("SpectralHeatModel: lambda_0 must vanish");
    }
    if (eigvals_.minCoeff() < -1e-10) {
        throw std::invalid_argument("SpectralHeatModel: negative eigenvalue");
    }
}

Vector SpectralHeatModel::apply(double t, const Vector& f) const {
    if (t < 0.0) throw std::invalid_argument("heat semigroup: t must be >= 0");
    if (f.size() != size()) throw std::invalid_argument("heat semigroup: vector size mismatch");
    if (t == 0.0) return f;
    const Vector coeff = eigvecs_.transpose() * (space_->weight().asDiagonal() * f);
    const Vector damped = (-t * eigvals_.array()).exp() * coeff.array();
    return eigvecs_ * damped;
}

Matrix SpectralHeatModel::apply_matrix(double t, const Matrix& f) const {
    if (t < 0.0) throw std::invalid_argument("heat semigroup: t must be >= 0");
    if (f.rows() != size()) throw std::invalid_argument("heat semigroup: batch size mismatch");
    if (t == 0.0) return f;
    const Matrix coeff = eigvecs_.transpose() * (space_->weight().asDiagonal() * f);
    const Vector damp = (-t * eigvals_.array()).exp();
    return eigvecs_ * (damp.asDiagonal() * coeff);
}

double SpectralHeatModel::kernel(double t, int x, int y) const {
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel: t must be positive");
    double p = 0.0;
    for (int k = 0; k < size(); ++k) {
        p += std::exp(-eigvals_(k) * t) * eigvecs_(x, k) * eigvecs_(y, k);
    }
    return p;
}

Vector SpectralHeatModel::kernel_row(double t, int x) const {
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel: t must be positive");
    const Vector damped = (-t * eigvals_.array()).exp() * eigvecs_.row(x).transpose().array();
    return eigvecs_ * damped;
}

Matrix SpectralHeatModel::kernel_matrix(double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel: t must be positive");
    const Vector damp = (-t * eigvals_.array()).exp();
    return eigvecs_ * damp.asDiagonal() * eigvecs_.transpose();
}

Matrix SpectralHeatModel::transition_matrix(double t) const {
    return kernel_matrix(t) * space_->weight().asDiagonal();
}

SpectralHeatModel spectral_decompose(const DirichletGraph& graph, int eig_budget) {
    const int n = graph.space->size();
    if (n > eig_budget) {
        throw std::invalid_argument("spectral_decompose: space exceeds the dense eigensolve budget");
    }
    // Symmetrized generator S = M^{-1/2} (Deg - W) M^{-1/2}.
    const Vector& m = graph.space->weight();
    const Vector inv_sqrt_m = m.array().rsqrt();
    Matrix s = Matrix::Zero(n, n);
    Vector deg = Vector::Zero(n);
    for (int x = 0; x < graph.conduct.outerSize(); ++x) {
        for (SparseMatrix::InnerIterator it(graph.conduct, x); it; ++it) {
            deg(it.row()) += it.value();
            s(it.row(), it.col()) -= it.value() * inv_sqrt_m(it.row()) * inv_sqrt_m(it.col());
        }
    }
    for (int i = 0; i < n; ++i) s(i, i) += deg(i) * inv_sqrt_m(i) * inv_sqrt_m(i);

    EigenDecomposition eig;
    try {
        eig = sym_eigensolve(s);
    } catch (const std::exception& ex) {
        throw std::runtime_error(std::string("spectral_decompose: eigensolver failed (") +
                                 ex.what() + "), generator scale " +
                                 std::to_string(s.cwiseAbs().maxCoeff()));
    }
    const double resid = (s - eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose())
                             .cwiseAbs()
                             .maxCoeff();
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if (resid > 1e-8 * scale) {
        throw std::runtime_error("spectral_decompose: reconstruction residual " +
                                 std::to_string(resid) + " exceeds budget at scale " +
                                 std::to_string(scale));
    }

    Matrix phi = inv_sqrt_m.asDiagonal() * eig.vectors;
    Vector values = eig.values;
    values(0) = std::abs(values(0)) <= 1e-10 ? 0.0 : values(0);
    for (int k = 0; k < n; ++k) {
        if (values(k) < 0.0 && values(k) > -1e-10) values(k) = 0.0;
    }
    // Constant leading eigenvector with positive sign.
    if (phi(0, 0) < 0.0) phi.col(0) = -phi.col(0);
    return SpectralHeatModel(graph.space, std::move(values), std::move(phi), graph.bandwidth);
}

GaussianBoundFit gaussian_bound_fit(const SpectralHeatModel& model,
                                    const std::vector<double>& t_grid,
                                    const std::vector<std::pair<int, int>>& pairs) {
    const auto& space = model.space();
    const double d2 = space.meta().diameter_bound * space.meta().diameter_bound;
    std::vector<double> xs, ys;  // y = log(p * m(B_sqrt(t))), x = d^2/t
    GaussianBoundFit fit;
    for (const double t : t_grid) {
        if (!(t > 0.0) || t > d2 + 1e-12) {
            throw std::invalid_argument("gaussian_bound_fit: t_grid must lie in (0, D^2]");
        }
        for (const auto& [x, y] : pairs) {
            const double p = model.kernel(t, x, y);
            if (p < -1e-8 && t >= model.t_pos()) {
                throw std::runtime_error("gaussian_bound_fit: kernel positivity broken above t_pos");
            }
            if (p <= 1e-14) {
                // Below the spectral arithmetic noise floor the sign carries no
                // information; such samples are excluded and counted.
                ++fit.excluded;
                continue;
            }
            const double ball = space.ball_mass(x, std::sqrt(t));
            xs.push_back(space.dist(x, y) * space.dist(x, y) / t);
            ys.push_back(std::log(p * ball));
        }
    }
    if (xs.empty()) throw std::invalid_argument("gaussian_bound_fit: no usable samples");
    LineFit line = fit_line(xs, ys);
    // Slopes are decay rates: clamp to the physical sign and wrap the envelope around
    // every sample so the fitted constants witness zero violations.
    const double c2 = std::max(0.0, -line.slope);
    double log_c1 = -std::numeric_limits<double>::infinity();
    double log_c1p = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        log_c1 = std::max(log_c1, ys[i] + c2 * xs[i]);
        log_c1p = std::min(log_c1p, ys[i] + c2 * xs[i]);
    }
    fit.c1 = std::exp(log_c1);
    fit.c2 = c2;
    fit.c1p = std::exp(log_c1p);
    fit.c2p = c2;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double up = log_c1 - fit.c2 * xs[i];
        const double lo = log_c1p - fit.c2p * xs[i];
        if (ys[i] > up + 1e-12 || ys[i] < lo - 1e-12) ++fit.violations;
    }
    return fit;
}

PoincareReport poincare_constant(const DirichletGraph& graph, const SpectralHeatModel& model,
                                 const std::vector<double>& radii,
                                 const std::vector<int>& centers) {
    PoincareReport report;
    report.global_constant = 1.0 / model.spectral_gap();
    const auto& space = *graph.space;
    std::vector<int> use_centers = centers;
    if (use_centers.empty()) use_centers.push_back(0);
    Matrix w = Matrix(graph.conduct);
    for (const double r : radii) {
        for (const int c : use_centers) {
            std::vector<int> ball;
            for (int i = 0; i < space.size(); ++i) {
                if (space.dist(c, i) < r) ball.push_back(i);
            }
            if (ball.size() < 2) continue;  // single-point ball is skipped
            const int nb = static_cast<int>(ball.size());
            Vector mb(nb);
            Matrix wb = Matrix::Zero(nb, nb);
            for (int a = 0; a < nb; ++a) {
                mb(a) = space.weight(ball[static_cast<std::size_t>(a)]);
                for (int b = 0; b < nb; ++b) {
                    wb(a, b) = w(ball[static_cast<std::size_t>(a)], ball[static_cast<std::size_t>(b)]);
                }
            }
            // Interior-edge (Neumann-like) restriction: gap of the ball's own generator.
            Vector deg = wb.rowwise().sum();
            const Vector inv_sqrt = mb.array().rsqrt();
            Matrix s = -(inv_sqrt.asDiagonal() * wb * inv_sqrt.asDiagonal());
            for (int a = 0; a < nb; ++a) s(a, a) += deg(a) * inv_sqrt(a) * inv_sqrt(a);
            const EigenDecomposition eig = sym_eigensolve(s);
            PoincareBall row;
            row.center = c;
            row.radius = r;
            row.points = nb;
            const double gap = eig.values(1);
            row.constant = gap > 1e-13 ? 1.0 / gap : std::numeric_limits<double>::infinity();
            report.local.push_back(row);
        }
    }
    return report;
}

MixingCheck mixing_check(const SpectralHeatModel& model, const Vector& f,
                         const std::vector<double>& t_grid) {
    const Vector& m = model.space().weight();
    const double mean = f.dot(m);
    const Vector centered = f.array() - mean;
    const double norm0 = std::sqrt(std::max(0.0, centered.dot(m.asDiagonal() * centered)));
    MixingCheck check;
    check.worst_slack = std::numeric_limits<double>::infinity();
    for (const double t : t_grid) {
        if (t < 0.0) throw std::invalid_argument("mixing_check: t_grid must be >= 0");
        const Vector tf = model.apply(t, f);
        const Vector dev = tf.array() - mean;
        const double actual = std::sqrt(std::max(0.0, dev.dot(m.asDiagonal() * dev)));
        const double bound = std::exp(-model.spectral_gap() * t) * norm0 + 1e-12;
        check.actual.push_back(actual);
        check.bound.push_back(bound);
        check.worst_slack = std::min(check.worst_slack, bound - actual);
        if (actual > bound) check.holds = false;
    }
    return check;
}

KernelMixingReport kernel_mixing_rate(const SpectralHeatModel& model, int x,
                                      const std::vector<double>& t_grid, double eps_shift) {
    if (!(eps_shift > 0.0)) {
        throw std::invalid_argument("kernel_mixing_rate: eps_shift must be positive");
    }
    const Vector& m = model.space().weight();
    auto norm_at = [&](double t) {
        const Vector row = model.kernel_row(t, x);
        const Vector dev = row.array() - 1.0;
        return std::sqrt(std::max(0.0, dev.dot(m.asDiagonal() * dev)));
    };
    KernelMixingReport report;
    std::vector<double> ts, logs;
    for (const double t : t_grid) {
        if (!(t > eps_shift)) {
            throw std::invalid_argument("kernel_mixing_rate: grid times must exceed eps_shift");
        }
        const double norm = norm_at(t);
        report.norms.push_back(norm);
        if (norm > 0.0) {
            ts.push_back(t);
            logs.push_back(std::log(norm));
        }
    }
    report.envelope_c = norm_at(eps_shift);
    if (ts.size() >= 2) {
        report.fitted_exponent = -fit_line(ts, logs).slope;
    } else {
        report.fitted_exponent = model.spectral_gap();
    }
    const double lambda = model.spectral_gap();
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double bound = report.envelope_c * std::exp(-lambda * (t_grid[i] - eps_shift));
        if (report.norms[i] > bound + 1e-12) report.envelope_holds = false;
    }
    return report;
}

HolderEstimate holder_regularity_estimate(const SpectralHeatModel& model,
                                          std::pair<double, double> t_window, double r,
                                          int n_samples, std::uint64_t seed) {
    const auto [t_lo, t_hi] = t_window;
    const double d2 = model.space().meta().diameter_bound * model.space().meta().diameter_bound;
    if (!(t_lo > 0.0) || !(t_hi > t_lo) || t_hi > d2 + 1e-12) {
        throw std::invalid_argument("holder_regularity_estimate: degenerate window");
    }
    const int n = model.size();
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> tpick(t_lo, t_hi);
    std::uniform_int_distribution<int> xpick(0, n - 1);

    Vector f(n);
    for (int i = 0; i < n; ++i) f(i) = unif(gen);

    double sup_u = 0.0;
    std::vector<double> log_rho, log_du;
    std::vector<std::pair<double, double>> samples;  // (rho, |du|) for the envelope pass
    for (int k = 0; k < n_samples; ++k) {
        const double s = tpick(gen);
        const double t = tpick(gen);
        const int y = xpick(gen);
        const int z = xpick(gen);
        const double dyz = model.space().dist(y, z);
        if (dyz > r && y != z) continue;
        const Vector us = model.apply(s, f);
        const Vector ut = model.apply(t, f);
        sup_u = std::max({sup_u, us.cwiseAbs().maxCoeff(), ut.cwiseAbs().maxCoeff()});
        const double du = std::abs(us(y) - ut(z));
        const double rho = (std::sqrt(std::abs(s - t)) + dyz) / r;
        if (du > 1e-15 && rho > 1e-15) {
            log_rho.push_back(std::log(rho));
            log_du.push_back(std::log(du));
        }
        samples.emplace_back(rho, du);
    }
    HolderEstimate est;
    if (sup_u <= 1e-300 || log_rho.empty()) {
        est.alpha = 1.0;
        est.c = 0.0;
        return est;
    }
    double alpha = fit_line(log_rho, log_du).slope;
    alpha = std::min(1.0, std::max(1e-3, alpha));
    double c = 0.0;
    for (const auto& [rho, du] : samples) {
        if (rho > 1e-15) c = std::max(c, du / (sup_u * std::pow(rho, alpha)));
    }
    est.alpha = alpha;
    est.c = c;
    return est;
}

std::vector<double> feller_defect(const SpectralHeatModel& model, const Vector& f,
                                  const std::vector<double>& t_grid) {
    std::vector<double> defects;
    double prev = std::numeric_limits<double>::infinity();
    for (const double t : t_grid) {
        if (t < 0.0 || t > prev) {
            throw std::invalid_argument("feller_defect: t_grid must decrease toward zero");
        }
        prev = t;
        defects.push_back((model.apply(t, f) - f).cwiseAbs().maxCoeff());
    }
    return defects;
}

std::vector<EigenTraceRow> eigen_convergence_trace(
    const std::vector<const SpectralHeatModel*>& models, int k_max) {
    if (models.size() < 2) {
        throw std::invalid_argument("eigen_convergence_trace: need at least two models");
    }
    std::vector<EigenTraceRow> rows;
    for (std::size_t i = 0; i < models.size(); ++i) {
        EigenTraceRow row;
        for (int k = 1; k <= k_max; ++k) {
            if (k >= models[i]->size()) break;
            row.lambdas.push_back(models[i]->eigenvalues()(k));
        }
        if (i > 0) {
            const auto& prev = rows.back().lambdas;
            for (std::size_t k = 0; k < row.lambdas.size() && k < prev.size(); ++k) {
                row.rel_change.push_back(std::abs(row.lambdas[k] - prev[k]) /
                                         std::max(1e-300, std::abs(prev[k])));
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mmlab
