#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "mmlab/space.hpp"

namespace mmlab {

/// Graph Dirichlet form E(u) = 1/2 sum_xy w_xy (u_x - u_y)^2 over a finite space,
/// with truncated-Gaussian conductances
///   w_xy = m_x m_y exp(-d(x,y)^2 / eps^2) / (c_nu eps^(2 nu + 2)),  d(x,y) <= 3 eps.
/// The constant c_nu is calibrated from the median kernel degree so that on
/// uniform-density model families the generator matches the continuum Laplacian
/// (two-point spaces keep the 4w spectral-gap convention by construction).
struct DirichletGraph {
    std::shared_ptr<const FiniteMMSpace> space;
    SparseMatrix conduct;  // symmetric, zero diagonal
    double bandwidth = 0.0;
    double nu = 0.5;     // volume-growth exponent used in the scaling
    double c_nu = 0.0;   // recorded normalization constant
};

/// bandwidth <= 0 selects auto = twice the covering radius recorded in meta.label.
/// Throws if the graph disconnects at the chosen bandwidth (message suggests a
/// larger one) or if auto is requested without a recorded covering radius.
DirichletGraph build_dirichlet_graph(std::shared_ptr<const FiniteMMSpace> space,
                                     double bandwidth = 0.0);

/// Test-oriented constructor with explicit conductances.
DirichletGraph dirichlet_graph_from_conductance(std::shared_ptr<const FiniteMMSpace> space,
                                                Matrix conduct, double bandwidth);

double cheeger_energy(const DirichletGraph& graph, const Vector& u);
double cheeger_energy(const DirichletGraph& graph, const Vector& u, const Vector& v);

/// Eigenpairs of the generator L with <Lu, v>_m = E(u, v); eigenvectors are
/// orthonormal in the m-weighted inner product. The heat semigroup, heat kernel and
/// transition matrices are all spectral sums over this decomposition.
class SpectralHeatModel {
  public:
    SpectralHeatModel(std::shared_ptr<const FiniteMMSpace> space, Vector eigvals,
                      Matrix eigvecs, double bandwidth);

    int size() const { return static_cast<int>(eigvals_.size()); }
    const Vector& eigenvalues() const { return eigvals_; }
    const Matrix& eigenvectors() const { return eigvecs_; }
    const FiniteMMSpace& space() const { return *space_; }
    std::shared_ptr<const FiniteMMSpace> space_ptr() const { return space_; }
    const std::string& space_hash() const { return space_->hash(); }
    double bandwidth() const { return bandwidth_; }

    /// Earliest time at which kernel positivity is enforced (= bandwidth^2).
    double t_pos() const { return bandwidth_ * bandwidth_; }

    /// T_t f by spectral expansion; exact up to spectral arithmetic.
    Vector apply(double t, const Vector& f) const;
    /// Columnwise T_t on a batch of vectors.
    Matrix apply_matrix(double t, const Matrix& f) const;
    /// Heat kernel density p(t,x,y) w.r.t. the weights.
    double kernel(double t, int x, int y) const;
    Vector kernel_row(double t, int x) const;
    Matrix kernel_matrix(double t) const;
    /// Markov transition matrix p(t,x,y) m_y (rows sum to one).
    Matrix transition_matrix(double t) const;

    double spectral_gap() const { return eigvals_(1); }

  private:
    std::shared_ptr<const FiniteMMSpace> space_;
    Vector eigvals_;
    Matrix eigvecs_;
    double bandwidth_;
};

/// Dense eigensolve of the generator; n is capped by eig_budget (default 4096).
SpectralHeatModel spectral_decompose(const DirichletGraph& graph, int eig_budget = 4096);

inline Vector heat_semigroup_apply(const SpectralHeatModel& model, double t, const Vector& f) {
    return model.apply(t, f);
}

inline double heat_kernel_eval(const SpectralHeatModel& model, double t, int x, int y) {
    return model.kernel(t, x, y);
}

inline double spectral_gap(const SpectralHeatModel& model) { return model.spectral_gap(); }

struct GaussianBoundFit {
    double c1 = 0.0, c2 = 0.0;    // upper envelope p <= C1/m(B_sqrt(t)) exp(-C2 d^2/t)
    double c1p = 0.0, c2p = 0.0;  // lower envelope with C1', C2'
    int violations = 0;           // at the fitted constants (target 0)
    int excluded = 0;             // non-positive kernel samples below t_pos
};

/// Fits two-sided Gaussian envelope constants over the sampled (t, x, y) triples;
/// t values must lie in (0, D^2].
GaussianBoundFit gaussian_bound_fit(const SpectralHeatModel& model,
                                    const std::vector<double>& t_grid,
                                    const std::vector<std::pair<int, int>>& pairs);

struct PoincareBall {
    int center = 0;
    double radius = 0.0;
    int points = 0;
    double constant = 0.0;  // 1/lambda_1 of the interior-edge restriction; inf if split
};

struct PoincareReport {
    double global_constant = 0.0;  // 1/lambda_1
    std::vector<PoincareBall> local;
};

/// Global constant plus Neumann-style local constants (edges inside each ball only)
/// over the given radius grid and centers; single-point balls are skipped.
PoincareReport poincare_constant(const DirichletGraph& graph, const SpectralHeatModel& model,
                                 const std::vector<double>& radii = {},
                                 const std::vector<int>& centers = {});

struct MixingCheck {
    double worst_slack = 0.0;  // min over t of bound - actual (>= 0 when the bound holds)
    bool holds = true;
    std::vector<double> actual, bound;
};

/// Verifies ||T_t f - m(f)||_{L2(m)} <= e^{-lambda_1 t} ||f - m(f)||_{L2(m)} per t.
MixingCheck mixing_check(const SpectralHeatModel& model, const Vector& f,
                         const std::vector<double>& t_grid);

struct KernelMixingReport {
    std::vector<double> norms;     // ||p(t,x,.) - 1||_{L2(m)} per grid time
    double fitted_exponent = 0.0;  // decay rate from a log-linear fit
    double envelope_c = 0.0;       // sup over the grid of ||p(eps,x,.) - 1||
    bool envelope_holds = true;    // norms <= C e^{-lambda_1 (t - eps)}
};

KernelMixingReport kernel_mixing_rate(const SpectralHeatModel& model, int x,
                                      const std::vector<double>& t_grid, double eps_shift);

struct HolderEstimate {
    double alpha = 1.0;
    double c = 0.0;
};

/// Space-time Holder estimate of u(t,.) = T_t f over random bounded f:
/// |u(s,y) - u(t,z)| <= C sup|u| ((|s-t|^(1/2) + d(y,z))/r)^alpha on the window.
HolderEstimate holder_regularity_estimate(const SpectralHeatModel& model,
                                          std::pair<double, double> t_window, double r,
                                          int n_samples = 4000, std::uint64_t seed = 11);

/// max_x |T_t f - f| at each grid time; the grid must decrease toward zero.
std::vector<double> feller_defect(const SpectralHeatModel& model, const Vector& f,
                                  const std::vector<double>& t_grid);

struct EigenTraceRow {
    std::vector<double> lambdas;     // lambda_1..lambda_kmax
    std::vector<double> rel_change;  // vs previous row (empty on the first)
};

std::vector<EigenTraceRow> eigen_convergence_trace(
    const std::vector<const SpectralHeatModel*>& models, int k_max);

}  // namespace mmlab
