#include "mmlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Primal network simplex on the dense transportation problem. Nodes 0..m-1 carry the
/// supplies, m..m+n-1 the demands; arc i*n+j runs from supply i to demand j. The basis
/// is a spanning tree seeded by the northwest-corner rule; entering arcs come from a
/// cyclic block search with a Bland fallback for degenerate stalls.
class TransportSimplex {
  public:
    TransportSimplex(const Matrix& cost, const Vector& supply, const Vector& demand)
        : cost_(cost),
          m_(static_cast<int>(supply.size())),
          n_(static_cast<int>(demand.size())),
          flow_(Matrix::Zero(supply.size(), demand.size())),
          is_basic_(static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_), 0),
          adj_(static_cast<std::size_t>(m_ + n_)),
          parent_(m_ + n_, -1),
          pred_arc_(m_ + n_, -1),
          depth_(m_ + n_, 0),
          pi_(m_ + n_, 0.0) {
        tol_ = 1e-12 * (1.0 + cost_.cwiseAbs().maxCoeff());
        init_northwest(supply, demand);
        rebuild_tree();
    }

    void run() {
        const std::size_t n_arcs = static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_);
        const std::size_t block =
            std::max<std::size_t>(64, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_arcs))) + 1);
        std::size_t next = 0;
        long long stall = 0;
        bool bland = false;
        const long long stall_limit = 64LL * (m_ + n_);
        const long long pivot_cap = 4000LL * (m_ + n_) + 1000000LL;
        for (long long pivots = 0;; ++pivots) {
            if (pivots > pivot_cap) {
                throw std::runtime_error("transport simplex: pivot cap exceeded");
            }
            int enter = bland ? find_entering_bland() : find_entering_block(next, block);
            if (enter < 0) break;
            const double theta = pivot(enter);
            if (theta <= tol_) {
                if (++stall > stall_limit) bland = true;
            } else {
                stall = 0;
            }
        }
    }

    const Matrix& flow() const { return flow_; }

    double total_cost() const { return (flow_.array() * cost_.array()).sum(); }

    /// Duals (phi, psi) with phi_i + psi_j <= c_ij (up to tol) and equality on the basis.
    void duals(Vector& phi, Vector& psi) const {
        phi.resize(m_);
        psi.resize(n_);
        for (int i = 0; i < m_; ++i) phi(i) = pi_[static_cast<std::size_t>(i)];
        for (int j = 0; j < n_; ++j) psi(j) = -pi_[static_cast<std::size_t>(m_ + j)];
    }

  private:
    int arc_id(int i, int j) const { return i * n_ + j; }
    int arc_supply(int a) const { return a / n_; }
    int arc_demand_node(int a) const { return m_ + a % n_; }

    double reduced(int a) const {
        return cost_(a / n_, a % n_) - pi_[static_cast<std::size_t>(arc_supply(a))] +
               pi_[static_cast<std::size_t>(arc_demand_node(a))];
    }

    void make_basic(int a) {
        is_basic_[static_cast<std::size_t>(a)] = 1;
        adj_[static_cast<std::size_t>(arc_supply(a))].push_back(a);
        adj_[static_cast<std::size_t>(arc_demand_node(a))].push_back(a);
    }

    void drop_basic(int a) {
        is_basic_[static_cast<std::size_t>(a)] = 0;
        for (int node : {arc_supply(a), arc_demand_node(a)}) {
            auto& list = adj_[static_cast<std::size_t>(node)];
            list.erase(std::find(list.begin(), list.end(), a));
        }
    }

    void init_northwest(const Vector& supply, const Vector& demand) {
        Vector a = supply, b = demand;
        int i = 0, j = 0;
        for (int step = 0; step < m_ + n_ - 1; ++step) {
            const double f = std::min(a(i), b(j));
            flow_(i, j) = f;
            make_basic(arc_id(i, j));
            a(i) -= f;
            b(j) -= f;
            if (i == m_ - 1 && j == n_ - 1) break;
            if (i == m_ - 1) {
                ++j;
            } else if (j == n_ - 1) {
                ++i;
            } else if (a(i) <= b(j)) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    void rebuild_tree() {
        std::fill(parent_.begin(), parent_.end(), -1);
        std::fill(pred_arc_.begin(), pred_arc_.end(), -1);
        bfs_order_.clear();
        bfs_order_.push_back(0);
        parent_[0] = 0;
        depth_[0] = 0;
        pi_[0] = 0.0;
        for (std::size_t head = 0; head < bfs_order_.size(); ++head) {
            const int u = bfs_order_[head];
            for (const int a : adj_[static_cast<std::size_t>(u)]) {
                const int s = arc_supply(a);
                const int d = arc_demand_node(a);
                const int w = (u == s) ? d : s;
                if (parent_[static_cast<std::size_t>(w)] >= 0) continue;
                parent_[static_cast<std::size_t>(w)] = u;
                pred_arc_[static_cast<std::size_t>(w)] = a;
                depth_[static_cast<std::size_t>(w)] = depth_[static_cast<std::size_t>(u)] + 1;
                const double c = cost_(s, a % n_);
                pi_[static_cast<std::size_t>(w)] =
                    (w == d) ? pi_[static_cast<std::size_t>(u)] - c
                             : pi_[static_cast<std::size_t>(u)] + c;
                bfs_order_.push_back(w);
            }
        }
        parent_[0] = -1;
    }

    int find_entering_block(std::size_t& next, std::size_t block) const {
        const std::size_t n_arcs = static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_);
        std::size_t scanned = 0;
        while (scanned < n_arcs) {
            int best = -1;
            double best_red = -tol_;
            const std::size_t stop = std::min(block, n_arcs - scanned);
            for (std::size_t k = 0; k < stop; ++k) {
                const int a = static_cast<int>((next + k) % n_arcs);
                if (is_basic_[static_cast<std::size_t>(a)]) continue;
                const double r = reduced(a);
                if (r < best_red) {
                    best_red = r;
                    best = a;
                }
            }
            next = (next + stop) % n_arcs;
            scanned += stop;
            if (best >= 0) return best;
        }
        return -1;
    }

    int find_entering_bland() const {
        const std::size_t n_arcs = static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_);
        for (std::size_t a = 0; a < n_arcs; ++a) {
            if (!is_basic_[a] && reduced(static_cast<int>(a)) < -tol_) return static_cast<int>(a);
        }
        return -1;
    }

    /// Applies one pivot on entering arc e; returns the flow change theta.
    double pivot(int e) {
        const int src = arc_supply(e);
        const int dst = arc_demand_node(e);

        // Cycle arcs with their signs: +1 arcs gain theta, -1 arcs lose theta.
        cycle_arcs_.clear();
        cycle_signs_.clear();
        int u = dst, v = src;
        // ascend from dst: traversal direction u -> parent(u)
        // ascend from src: traversal direction parent(v) -> v within the cycle
        while (u != v) {
            if (depth_[static_cast<std::size_t>(u)] >= depth_[static_cast<std::size_t>(v)]) {
                const int a = pred_arc_[static_cast<std::size_t>(u)];
                cycle_arcs_.push_back(a);
                cycle_signs_.push_back(u >= m_ ? -1 : +1);
                u = parent_[static_cast<std::size_t>(u)];
            } else {
                const int a = pred_arc_[static_cast<std::size_t>(v)];
                const int p = parent_[static_cast<std::size_t>(v)];
                cycle_arcs_.push_back(a);
                cycle_signs_.push_back(p >= m_ ? -1 : +1);
                v = p;
            }
        }

        double theta = kInf;
        int leave = -1;
        for (std::size_t k = 0; k < cycle_arcs_.size(); ++k) {
            if (cycle_signs_[k] < 0) {
                const int a = cycle_arcs_[k];
                const double f = flow_(a / n_, a % n_);
                if (f < theta || (f == theta && (leave < 0 || a < leave))) {
                    theta = f;
                    leave = a;
                }
            }
        }
        if (leave < 0) {
            throw std::runtime_error("transport simplex: unbounded pivot");
        }
        flow_(e / n_, e % n_) += theta;
        for (std::size_t k = 0; k < cycle_arcs_.size(); ++k) {
            const int a = cycle_arcs_[k];
            flow_(a / n_, a % n_) += cycle_signs_[k] > 0 ? theta : -theta;
        }
        flow_(leave / n_, leave % n_) = 0.0;
        drop_basic(leave);
        make_basic(e);
        rebuild_tree();
        return theta;
    }

    const Matrix& cost_;
    int m_, n_;
    Matrix flow_;
    double tol_;
    std::vector<char> is_basic_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> parent_, pred_arc_, depth_;
    std::vector<double> pi_;
    std::vector<int> bfs_order_;
    std::vector<int> cycle_arcs_;
    std::vector<int> cycle_signs_;
};

void check_marginal(const Vector& w, const char* name) {
    for (int i = 0; i < w.size(); ++i) {
        if (w(i) < -1e-12) {
            throw std::invalid_argument(std::string("transport: ") + name +
                                        " has a negative entry at index " + std::to_string(i));
        }
    }
    if (std::abs(w.sum() - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string("transport: ") + name +
                                    " is not normalized (sum " + std::to_string(w.sum()) + ")");
    }
}

struct Support {
    std::vector<int> idx;
    Vector w;  // restricted, rescaled to total mass exactly 1
};

Support restrict_support(const Vector& w) {
    Support s;
    for (int i = 0; i < w.size(); ++i) {
        if (w(i) > 0.0) s.idx.push_back(i);
    }
    s.w.resize(static_cast<int>(s.idx.size()));
    for (std::size_t k = 0; k < s.idx.size(); ++k) s.w(static_cast<int>(k)) = w(s.idx[k]);
    s.w /= s.w.sum();
    return s;
}

}  // namespace

double Coupling::marginal_residual() const {
    const Vector row = q.rowwise().sum();
    const Vector col = q.colwise().sum();
    double r = 0.0;
    for (int i = 0; i < mu.size(); ++i) r = std::max(r, std::abs(row(i) - mu(i)));
    for (int j = 0; j < nu.size(); ++j) r = std::max(r, std::abs(col(j) - nu(j)));
    return r;
}

void Coupling::validate(double tol) const {
    if (q.rows() != mu.size() || q.cols() != nu.size()) {
        throw std::invalid_argument("coupling: shape mismatch");
    }
    if (q.minCoeff() < -1e-15) {
        throw std::invalid_argument("coupling: negative entry");
    }
    const double r = marginal_residual();
    if (r > tol) {
        throw std::invalid_argument("coupling: marginal residual " + std::to_string(r));
    }
}

OtResult w2_distance_cost(const Matrix& sq_cost, const Vector& mu, const Vector& nu) {
    if (sq_cost.rows() != mu.size() || sq_cost.cols() != nu.size()) {
        throw std::invalid_argument("transport: cost shape mismatch");
    }
    check_marginal(mu, "mu");
    check_marginal(nu, "nu");
    const Support su = restrict_support(mu);
    const Support sv = restrict_support(nu);

    Matrix c(su.idx.size(), sv.idx.size());
    for (std::size_t i = 0; i < su.idx.size(); ++i) {
        for (std::size_t j = 0; j < sv.idx.size(); ++j) {
            c(static_cast<int>(i), static_cast<int>(j)) = sq_cost(su.idx[i], sv.idx[j]);
        }
    }

    TransportSimplex simplex(c, su.w, sv.w);
    simplex.run();

    OtResult out;
    out.plan.q = Matrix::Zero(mu.size(), nu.size());
    for (std::size_t i = 0; i < su.idx.size(); ++i) {
        for (std::size_t j = 0; j < sv.idx.size(); ++j) {
            out.plan.q(su.idx[i], sv.idx[j]) = simplex.flow()(static_cast<int>(i),
                                                              static_cast<int>(j));
        }
    }
    out.plan.mu = mu / mu.sum();
    out.plan.nu = nu / nu.sum();
    out.value = std::sqrt(std::max(0.0, simplex.total_cost()));

    Vector phi, psi;
    simplex.duals(phi, psi);
    double cs = 0.0;
    for (std::size_t i = 0; i < su.idx.size(); ++i) {
        for (std::size_t j = 0; j < sv.idx.size(); ++j) {
            const double gap = c(static_cast<int>(i), static_cast<int>(j)) -
                               phi(static_cast<int>(i)) - psi(static_cast<int>(j));
            cs = std::max(cs, -gap);
            if (simplex.flow()(static_cast<int>(i), static_cast<int>(j)) > 1e-14) {
                cs = std::max(cs, std::abs(gap));
            }
        }
    }
    out.cs_residual = cs;
    return out;
}

namespace {

Matrix same_space_sq_cost(const FiniteMMSpace& space) {
    return space.dist().array().square();
}

Matrix cross_space_sq_cost(const FiniteMMSpace& a, const FiniteMMSpace& b) {
    const auto& ea = a.meta().ambient;
    const auto& eb = b.meta().ambient;
    if (!ea || !eb) {
        throw std::invalid_argument("transport: both spaces need an ambient embedding");
    }
    if (ea->space != eb->space) {
        throw std::invalid_argument("transport: spaces are embedded in different ambients");
    }
    Matrix c(a.size(), b.size());
    std::vector<double> pa(static_cast<std::size_t>(ea->coords.cols()));
    std::vector<double> pb(pa.size());
    for (int i = 0; i < a.size(); ++i) {
        for (int k = 0; k < ea->coords.cols(); ++k) pa[static_cast<std::size_t>(k)] = ea->coords(i, k);
        for (int j = 0; j < b.size(); ++j) {
            for (int k = 0; k < eb->coords.cols(); ++k) pb[static_cast<std::size_t>(k)] = eb->coords(j, k);
            const double d = ea->space->dist(pa.data(), pb.data());
            c(i, j) = d * d;
        }
    }
    return c;
}

}  // namespace

OtResult w2_distance(const FiniteMMSpace& space, const Vector& mu, const Vector& nu) {
    return w2_distance_cost(same_space_sq_cost(space), mu, nu);
}

OtResult w2_distance(const FiniteMMSpace& a, const Vector& mu, const FiniteMMSpace& b,
                     const Vector& nu) {
    return w2_distance_cost(cross_space_sq_cost(a, b), mu, nu);
}

OtResult w2_sinkhorn_cost(const Matrix& sq_cost, const Vector& mu, const Vector& nu,
                          double epsilon_reg) {
    if (!(epsilon_reg > 0.0)) {
        throw std::invalid_argument("sinkhorn: epsilon_reg must be positive");
    }
    check_marginal(mu, "mu");
    check_marginal(nu, "nu");
    const Support su = restrict_support(mu);
    const Support sv = restrict_support(nu);
    const int m = static_cast<int>(su.idx.size());
    const int n = static_cast<int>(sv.idx.size());

    Matrix c(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) c(i, j) = sq_cost(su.idx[static_cast<std::size_t>(i)],
                                                      sv.idx[static_cast<std::size_t>(j)]);

    Vector f = Vector::Zero(m), g = Vector::Zero(n);
    const Vector log_mu = su.w.array().log();
    const Vector log_nu = sv.w.array().log();

    auto lse_rows = [&](Vector& out) {
        // out_i = log sum_j exp((g_j - c_ij)/eps)
        for (int i = 0; i < m; ++i) {
            double mx = -kInf;
            for (int j = 0; j < n; ++j) mx = std::max(mx, (g(j) - c(i, j)) / epsilon_reg);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += std::exp((g(j) - c(i, j)) / epsilon_reg - mx);
            out(i) = mx + std::log(s);
        }
    };
    auto lse_cols = [&](Vector& out) {
        for (int j = 0; j < n; ++j) {
            double mx = -kInf;
            for (int i = 0; i < m; ++i) mx = std::max(mx, (f(i) - c(i, j)) / epsilon_reg);
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += std::exp((f(i) - c(i, j)) / epsilon_reg - mx);
            out(j) = mx + std::log(s);
        }
    };

    const int max_iter = 10000;
    bool converged = false;
    int iterations = 0;
    Vector buf_m(m), buf_n(n);
    for (int it = 0; it < max_iter; ++it) {
        lse_rows(buf_m);
        f = epsilon_reg * (log_mu - buf_m);
        lse_cols(buf_n);
        g = epsilon_reg * (log_nu - buf_n);
        ++iterations;
        // After the g update the column sums are exact; the stopping rule tracks rows.
        double residual = 0.0;
        for (int i = 0; i < m; ++i) {
            double row = 0.0;
            for (int j = 0; j < n; ++j) row += std::exp((f(i) + g(j) - c(i, j)) / epsilon_reg);
            residual += std::abs(row - su.w(i));
        }
        if (residual <= 1e-9) {
            converged = true;
            break;
        }
    }

    Matrix p(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) p(i, j) = std::exp((f(i) + g(j) - c(i, j)) / epsilon_reg);

    // Projection onto exact marginals keeps feasibility, hence a true upper bound.
    for (int i = 0; i < m; ++i) {
        const double row = p.row(i).sum();
        if (row > su.w(i)) p.row(i) *= su.w(i) / row;
    }
    for (int j = 0; j < n; ++j) {
        const double col = p.col(j).sum();
        if (col > sv.w(j)) p.col(j) *= sv.w(j) / col;
    }
    const Vector err_r = su.w - p.rowwise().sum();
    const Vector err_c = sv.w - p.colwise().sum().transpose();
    const double deficit = err_r.sum();
    if (deficit > 0.0) p += (err_r * err_c.transpose()) / deficit;

    OtResult out;
    out.converged = converged;
    out.iterations = iterations;
    out.plan.q = Matrix::Zero(mu.size(), nu.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out.plan.q(su.idx[static_cast<std::size_t>(i)], sv.idx[static_cast<std::size_t>(j)]) =
                p(i, j);
    out.plan.mu = mu / mu.sum();
    out.plan.nu = nu / nu.sum();
    out.value = std::sqrt(std::max(0.0, (p.array() * c.array()).sum()));
    return out;
}

OtResult w2_sinkhorn(const FiniteMMSpace& space, const Vector& mu, const Vector& nu,
                     double epsilon_reg) {
    return w2_sinkhorn_cost(same_space_sq_cost(space), mu, nu, epsilon_reg);
}

OtResult w2_sinkhorn(const FiniteMMSpace& a, const Vector& mu, const FiniteMMSpace& b,
                     const Vector& nu, double epsilon_reg) {
    return w2_sinkhorn_cost(cross_space_sq_cost(a, b), mu, nu, epsilon_reg);
}

double MetricCoupling::feasibility_gap(const Matrix& d1, const Matrix& d2, const Matrix& cross) {
    const int n1 = static_cast<int>(d1.rows());
    const int n2 = static_cast<int>(d2.rows());
    double gap = 0.0;
    for (int x = 0; x < n1; ++x) {
        for (int xp = 0; xp < n1; ++xp) {
            for (int y = 0; y < n2; ++y) {
                gap = std::max(gap, cross(x, y) - d1(x, xp) - cross(xp, y));
                gap = std::max(gap, d1(x, xp) - cross(x, y) - cross(xp, y));
            }
        }
    }
    for (int y = 0; y < n2; ++y) {
        for (int yp = 0; yp < n2; ++yp) {
            for (int x = 0; x < n1; ++x) {
                gap = std::max(gap, cross(x, y) - d2(y, yp) - cross(x, yp));
                gap = std::max(gap, d2(y, yp) - cross(x, y) - cross(x, yp));
            }
        }
    }
    for (int x = 0; x < n1; ++x)
        for (int y = 0; y < n2; ++y) gap = std::max(gap, -cross(x, y));
    return gap;
}

namespace {

/// Cyclic projection onto the metric-coupling polytope (all constraints are
/// half-spaces in one or two of the cross entries).
void project_feasible(const Matrix& d1, const Matrix& d2, Matrix& e) {
    const int n1 = static_cast<int>(d1.rows());
    const int n2 = static_cast<int>(d2.rows());
    for (int sweep = 0; sweep < 20000; ++sweep) {
        for (int x = 0; x < n1; ++x)
            for (int y = 0; y < n2; ++y)
                if (e(x, y) < 0.0) e(x, y) = 0.0;
        for (int x = 0; x < n1; ++x) {
            for (int xp = x + 1; xp < n1; ++xp) {
                const double d = d1(x, xp);
                for (int y = 0; y < n2; ++y) {
                    double& u = e(x, y);
                    double& v = e(xp, y);
                    if (u - v > d) {
                        const double s = 0.5 * (u - v - d);
                        u -= s;
                        v += s;
                    } else if (v - u > d) {
                        const double s = 0.5 * (v - u - d);
                        v -= s;
                        u += s;
                    }
                    if (u + v < d) {
                        const double s = 0.5 * (d - u - v);
                        u += s;
                        v += s;
                    }
                }
            }
        }
        for (int y = 0; y < n2; ++y) {
            for (int yp = y + 1; yp < n2; ++yp) {
                const double d = d2(y, yp);
                for (int x = 0; x < n1; ++x) {
                    double& u = e(x, y);
                    double& v = e(x, yp);
                    if (u - v > d) {
                        const double s = 0.5 * (u - v - d);
                        u -= s;
                        v += s;
                    } else if (v - u > d) {
                        const double s = 0.5 * (v - u - d);
                        v -= s;
                        u += s;
                    }
                    if (u + v < d) {
                        const double s = 0.5 * (d - u - v);
                        u += s;
                        v += s;
                    }
                }
            }
        }
        if (MetricCoupling::feasibility_gap(d1, d2, e) <= 1e-12) return;
    }
}

double metric_coupling_objective(const Matrix& e, const Vector& mu, const Vector& nu,
                                 Matrix* plan_out) {
    const Matrix sq = e.array().square();
    const OtResult ot = w2_distance_cost(sq, mu, nu);
    if (plan_out) *plan_out = ot.plan.q;
    return ot.value;
}

double refine_metric_coupling(const Matrix& d1, const Matrix& d2, const Vector& mu,
                              const Vector& nu, Matrix& e) {
    double best = kInf;
    for (int round = 0; round < 80; ++round) {
        Matrix plan;
        const double value = metric_coupling_objective(e, mu, nu, &plan);
        if (value > best - 1e-13 && round > 4) {
            best = std::min(best, value);
            break;
        }
        best = std::min(best, value);
        // Descend the fixed-plan quadratic sum q * e^2 under the metric constraints.
        const double qmax = plan.maxCoeff();
        if (qmax <= 0.0) break;
        const double step = 0.45 / qmax;
        for (int inner = 0; inner < 60; ++inner) {
            e.array() -= step * 2.0 * plan.array() * e.array();
            project_feasible(d1, d2, e);
        }
    }
    return metric_coupling_objective(e, mu, nu, nullptr);
}

}  // namespace

DDistanceResult d_distance_exact_tiny(const FiniteMMSpace& x1, const FiniteMMSpace& x2,
                                      int restarts, std::uint64_t seed) {
    const int n1 = x1.size();
    const int n2 = x2.size();
    if (static_cast<long long>(n1) * n2 > 16) {
        throw std::invalid_argument("d_distance_exact_tiny: N1*N2 exceeds the brute-force budget");
    }
    const Matrix& d1 = x1.dist();
    const Matrix& d2 = x2.dist();
    const double top = 0.5 * std::max(x1.diameter(), x2.diameter()) + 1e-3;

    std::vector<Matrix> starts;
    // Informed starts: image distances of index maps in both directions.
    const long long maps12 = static_cast<long long>(std::pow(n1, n2));
    if (maps12 <= 64) {
        for (long long code = 0; code < maps12; ++code) {
            long long c = code;
            Matrix e(n1, n2);
            for (int y = 0; y < n2; ++y) {
                const int gx = static_cast<int>(c % n1);
                c /= n1;
                for (int x = 0; x < n1; ++x) e(x, y) = d1(x, gx);
            }
            starts.push_back(e);
        }
    }
    const long long maps21 = static_cast<long long>(std::pow(n2, n1));
    if (maps21 <= 64) {
        for (long long code = 0; code < maps21; ++code) {
            long long c = code;
            Matrix e(n1, n2);
            for (int x = 0; x < n1; ++x) {
                const int gy = static_cast<int>(c % n2);
                c /= n2;
                for (int y = 0; y < n2; ++y) e(x, y) = d2(gy, y);
            }
            starts.push_back(e);
        }
    }
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < restarts; ++k) {
        Matrix e(n1, n2);
        for (int x = 0; x < n1; ++x)
            for (int y = 0; y < n2; ++y) e(x, y) = top * (0.25 + 1.5 * unif(gen));
        starts.push_back(e);
    }

    DDistanceResult out;
    out.restarts = static_cast<int>(starts.size());
    double best = kInf;
    Matrix best_e;
    std::vector<double> values;
    values.reserve(starts.size());
    for (Matrix e : starts) {
        project_feasible(d1, d2, e);
        const double value = refine_metric_coupling(d1, d2, x1.weight(), x2.weight(), e);
        values.push_back(value);
        if (value < best) {
            best = value;
            best_e = e;
        }
    }
    out.value = best;
    out.metric_coupling.cross = best_e;
    const Matrix sq = best_e.array().square();
    const OtResult ot = w2_distance_cost(sq, x1.weight(), x2.weight());
    out.plan = ot.plan;
    for (const double v : values) {
        if (v <= best + 1e-5) ++out.agreeing_restarts;
    }
    return out;
}

OtResult d_distance_upper(const FiniteMMSpace& a, const FiniteMMSpace& b) {
    return w2_distance(a, a.weight(), b, b.weight());
}

ApproximationMap nearest_point_map(const FiniteMMSpace& from, const FiniteMMSpace& to) {
    const auto& ea = from.meta().ambient;
    const auto& eb = to.meta().ambient;
    if (!ea || !eb || ea->space != eb->space) {
        throw std::invalid_argument("nearest_point_map: spaces must share an ambient embedding");
    }
    ApproximationMap map;
    map.f.resize(static_cast<std::size_t>(from.size()));
    std::vector<double> pa(static_cast<std::size_t>(ea->coords.cols()));
    std::vector<double> pb(pa.size());
    for (int i = 0; i < from.size(); ++i) {
        for (int k = 0; k < ea->coords.cols(); ++k) pa[static_cast<std::size_t>(k)] = ea->coords(i, k);
        int best = 0;
        double best_d = kInf;
        for (int j = 0; j < to.size(); ++j) {
            for (int k = 0; k < eb->coords.cols(); ++k) pb[static_cast<std::size_t>(k)] = eb->coords(j, k);
            const double d = ea->space->dist(pa.data(), pb.data());
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        map.f[static_cast<std::size_t>(i)] = best;
    }
    map.eps = std::max(gh_distortion(map.f, from, to), gh_coverage(map.f, from, to));
    return map;
}

double gh_distortion(const std::vector<int>& f, const FiniteMMSpace& x_n,
                     const FiniteMMSpace& x_inf) {
    if (static_cast<int>(f.size()) != x_n.size()) {
        throw std::invalid_argument("gh_distortion: map must be total on the domain");
    }
    double worst = 0.0;
    for (int i = 0; i < x_n.size(); ++i) {
        for (int j = i + 1; j < x_n.size(); ++j) {
            worst = std::max(worst, std::abs(x_n.dist(i, j) -
                                             x_inf.dist(f[static_cast<std::size_t>(i)],
                                                        f[static_cast<std::size_t>(j)])));
        }
    }
    return worst;
}

double gh_coverage(const std::vector<int>& f, const FiniteMMSpace& x_n,
                   const FiniteMMSpace& x_inf) {
    if (static_cast<int>(f.size()) != x_n.size()) {
        throw std::invalid_argument("gh_coverage: map must be total on the domain");
    }
    double worst = 0.0;
    for (int y = 0; y < x_inf.size(); ++y) {
        double nearest = kInf;
        for (const int fx : f) nearest = std::min(nearest, x_inf.dist(fx, y));
        worst = std::max(worst, nearest);
    }
    return worst;
}

double measure_pushforward_gap(const std::vector<int>& f, const FiniteMMSpace& x_n,
                               const FiniteMMSpace& x_inf,
                               const std::vector<Vector>& dictionary) {
    if (static_cast<int>(f.size()) != x_n.size()) {
        throw std::invalid_argument("measure_pushforward_gap: map must be total on the domain");
    }
    std::vector<Vector> dict = dictionary;
    if (dict.empty()) {
        for (int p = 0; p < x_inf.size(); ++p) {
            Vector phi(x_inf.size());
            for (int y = 0; y < x_inf.size(); ++y) phi(y) = std::min(1.0, x_inf.dist(y, p));
            dict.push_back(std::move(phi));
        }
    }
    if (dict.empty()) throw std::invalid_argument("measure_pushforward_gap: empty dictionary");
    double gap = 0.0;
    for (const Vector& phi : dict) {
        if (phi.size() != x_inf.size()) {
            throw std::invalid_argument("measure_pushforward_gap: test function size mismatch");
        }
        if (phi.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
            throw std::invalid_argument("measure_pushforward_gap: test functions must be bounded by 1");
        }
        double lhs = 0.0;
        for (int x = 0; x < x_n.size(); ++x) lhs += phi(f[static_cast<std::size_t>(x)]) * x_n.weight(x);
        const double rhs = phi.dot(x_inf.weight());
        gap = std::max(gap, std::abs(lhs - rhs));
    }
    return gap;
}

double hausdorff_distance(const AmbientEmbedding& a, const AmbientEmbedding& b) {
    if (a.coords.rows() == 0 || b.coords.rows() == 0) {
        throw std::invalid_argument("hausdorff_distance: empty point set");
    }
    if (a.space != b.space) {
        throw std::invalid_argument("hausdorff_distance: sets live in different ambients");
    }
    auto directed = [&](const AmbientEmbedding& from, const AmbientEmbedding& to) {
        std::vector<double> pa(static_cast<std::size_t>(from.coords.cols()));
        std::vector<double> pb(static_cast<std::size_t>(to.coords.cols()));
        double worst = 0.0;
        for (int i = 0; i < from.coords.rows(); ++i) {
            for (int k = 0; k < from.coords.cols(); ++k) pa[static_cast<std::size_t>(k)] = from.coords(i, k);
            double nearest = kInf;
            for (int j = 0; j < to.coords.rows(); ++j) {
                for (int k = 0; k < to.coords.cols(); ++k) pb[static_cast<std::size_t>(k)] = to.coords(j, k);
                nearest = std::min(nearest, a.space->dist(pa.data(), pb.data()));
            }
            worst = std::max(worst, nearest);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

PathDelta path_delta_distance(const std::vector<double>& time_grid,
                              const std::vector<double>& pointwise_dist) {
    if (time_grid.size() != pointwise_dist.size() || time_grid.empty() || time_grid[0] != 0.0) {
        throw std::invalid_argument("path_delta_distance: mismatched grids");
    }
    PathDelta out;
    out.value = delta_quadrature(time_grid, pointwise_dist);
    out.error_bound = std::exp(-time_grid.back());
    return out;
}

}  // namespace mmlab
