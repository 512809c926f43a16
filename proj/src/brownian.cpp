#include "mmlab/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mmlab/rng.hpp"

namespace mmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int grid_index(const std::vector<double>& grid, double t) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (std::abs(grid[j] - t) <= 1e-9) return static_cast<int>(j);
    }
    throw std::invalid_argument("fdd: time " + std::to_string(t) + " is not on the ensemble grid");
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty() || grid.front() != 0.0) {
        throw std::invalid_argument("path grid must start at 0");
    }
    for (std::size_t j = 1; j < grid.size(); ++j) {
        if (grid[j] <= grid[j - 1]) {
            throw std::invalid_argument("path grid must be strictly increasing");
        }
    }
}

}  // namespace

void FddSpec::validate(int n_points) const {
    if (times.size() != observables.size() || times.empty()) {
        throw std::invalid_argument("FddSpec: times and observables must align and be nonempty");
    }
    double prev = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > prev)) {
            throw std::invalid_argument("FddSpec: times must be strictly increasing and positive");
        }
        prev = times[i];
        if (observables[i].size() != n_points) {
            throw std::invalid_argument("FddSpec: observable size mismatch");
        }
        if (!observables[i].allFinite()) {
            throw std::invalid_argument("FddSpec: observables must be bounded");
        }
    }
}

double fdd_exact(const SpectralHeatModel& model, int start, const FddSpec& spec) {
    spec.validate(model.size());
    const int k = static_cast<int>(spec.times.size());
    Vector v = spec.observables[static_cast<std::size_t>(k - 1)];
    for (int i = k - 1; i >= 0; --i) {
        const double gap = spec.times[static_cast<std::size_t>(i)] -
                           (i > 0 ? spec.times[static_cast<std::size_t>(i - 1)] : 0.0);
        v = model.apply(gap, v);
        if (i > 0) v = spec.observables[static_cast<std::size_t>(i - 1)].cwiseProduct(v);
    }
    return v(start);
}

std::string PathEnsemble::digest() const {
    std::string acc = model_hash + ":" + std::to_string(seed) + ":" + std::to_string(start);
    acc += ":" + fnv1a_hex(time_grid.data(), sizeof(double) * time_grid.size());
    acc += ":" + fnv1a_hex(paths.data(), sizeof(std::int32_t) *
                                             static_cast<std::size_t>(paths.size()));
    return fnv1a_hex(acc.data(), acc.size());
}

PathEnsemble sample_paths(std::shared_ptr<const SpectralHeatModel> model, int start,
                          const std::vector<double>& time_grid, int n_paths,
                          std::uint64_t seed) {
    if (!model) throw std::invalid_argument("sample_paths: null model");
    if (n_paths < 1) throw std::invalid_argument("sample_paths: need at least one path");
    check_grid(time_grid);
    const int n = model->size();
    const int steps = static_cast<int>(time_grid.size());

    PathEnsemble out;
    out.model = model;
    out.time_grid = time_grid;
    out.start = start;
    out.seed = seed;
    out.model_hash = model->space_hash();
    out.paths.resize(n_paths, steps);
    out.paths.col(0).setConstant(start);

    // Row-CDF tables per distinct grid gap, with the clipping policy applied.
    std::vector<double> gap_of_step(static_cast<std::size_t>(steps), 0.0);
    std::map<long long, Matrix> cdf_cache;
    auto gap_key = [](double dt) { return static_cast<long long>(std::llround(dt * 1e12)); };
    for (int j = 1; j < steps; ++j) {
        const double dt = time_grid[static_cast<std::size_t>(j)] -
                          time_grid[static_cast<std::size_t>(j - 1)];
        gap_of_step[static_cast<std::size_t>(j)] = dt;
        const long long key = gap_key(dt);
        if (cdf_cache.count(key)) continue;
        Matrix p = model->transition_matrix(dt);
        for (int x = 0; x < n; ++x) {
            double neg = 0.0;
            for (int y = 0; y < n; ++y) {
                if (p(x, y) < 0.0) {
                    neg -= p(x, y);
                    p(x, y) = 0.0;
                }
            }
            if (neg > 1e-6) {
                throw std::runtime_error(
                    "sample_paths: kernel row at dt=" + std::to_string(dt) + " clips mass " +
                    std::to_string(neg) + "; model too coarse, use dt >= t_pos = " +
                    std::to_string(model->t_pos()));
            }
            out.clip_mass = std::max(out.clip_mass, neg);
            const double row_sum = p.row(x).sum();
            p.row(x) /= row_sum;
            for (int y = 1; y < n; ++y) p(x, y) += p(x, y - 1);  // in-place CDF
        }
        cdf_cache.emplace(key, std::move(p));
    }

    for (int path = 0; path < n_paths; ++path) {
        int state = start;
        for (int j = 1; j < steps; ++j) {
            const Matrix& cdf = cdf_cache.at(gap_key(gap_of_step[static_cast<std::size_t>(j)]));
            const double u = CounterRng::uniform(seed, static_cast<std::uint64_t>(path),
                                                 static_cast<std::uint64_t>(j));
            int lo = 0, hi = n - 1;
            while (lo < hi) {
                const int mid = (lo + hi) / 2;
                if (cdf(state, mid) > u) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            state = lo;
            out.paths(path, j) = state;
        }
    }
    return out;
}

MonteCarloEstimate fdd_monte_carlo(const PathEnsemble& ensemble, const FddSpec& spec) {
    spec.validate(ensemble.model->size());
    std::vector<int> cols;
    for (const double t : spec.times) cols.push_back(grid_index(ensemble.time_grid, t));
    const int m = ensemble.n_paths();
    double sum = 0.0, sum_sq = 0.0;
    for (int p = 0; p < m; ++p) {
        double prod = 1.0;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            prod *= spec.observables[i](ensemble.paths(p, cols[i]));
        }
        sum += prod;
        sum_sq += prod * prod;
    }
    MonteCarloEstimate est;
    est.estimate = sum / m;
    if (m > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / m) / (m - 1));
        est.std_error = std::sqrt(var / m);
    } else {
        est.std_error_defined = false;
    }
    return est;
}

TightnessTable tightness_modulus(const SpectralHeatModel& model, int start, double t,
                                 const std::vector<double>& h_grid, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("tightness_modulus: beta must be positive");
    if (t < 0.0) throw std::invalid_argument("tightness_modulus: t must be >= 0");
    const int n = model.size();
    const Vector& m = model.space().weight();

    Vector at_t(n);
    if (t == 0.0) {
        at_t.setZero();
        at_t(start) = 1.0;
    } else {
        at_t = model.kernel_row(t, start).cwiseProduct(m);
    }
    Matrix d_beta(n, n);
    for (int y = 0; y < n; ++y)
        for (int z = 0; z < n; ++z)
            d_beta(y, z) = std::pow(std::min(1.0, model.space().dist(y, z)), beta);

    TightnessTable table;
    std::vector<double> log_h, log_v;
    for (const double h : h_grid) {
        if (h < 0.0) throw std::invalid_argument("tightness_modulus: h must be >= 0");
        TightnessRow row;
        row.h = h;
        if (h == 0.0) {
            row.modulus = 0.0;
        } else {
            const Matrix trans_h = model.transition_matrix(h);
            row.modulus = at_t.dot((trans_h.array() * d_beta.array()).rowwise().sum().matrix());
            if (row.modulus > 0.0) {
                log_h.push_back(std::log(h));
                log_v.push_back(std::log(row.modulus));
            }
        }
        table.rows.push_back(row);
    }
    if (log_h.size() >= 2) table.loglog_slope = fit_line(log_h, log_v).slope;
    return table;
}

ErgodicTable ergodic_occupation(const SpectralHeatModel& model, int start,
                                const std::vector<int>& subset,
                                const std::vector<double>& t_grid) {
    if (subset.empty()) throw std::invalid_argument("ergodic_occupation: empty subset");
    const Vector& m = model.space().weight();
    ErgodicTable table;
    for (const int g : subset) table.target += m(g);
    for (const double t : t_grid) {
        ErgodicRow row;
        row.t = t;
        if (t == 0.0) {
            row.occupation =
                std::count(subset.begin(), subset.end(), start) > 0 ? 1.0 : 0.0;
            row.envelope = kInf;
        } else {
            const Vector kr = model.kernel_row(t, start);
            for (const int g : subset) row.occupation += kr(g) * m(g);
            const Vector dev = kr.array() - 1.0;
            row.envelope = std::sqrt(std::max(0.0, dev.dot(m.asDiagonal() * dev)));
        }
        row.gap = std::abs(row.occupation - table.target);
        if (row.gap > row.envelope + 1e-12) table.within_envelope = false;
        table.rows.push_back(row);
    }
    return table;
}

IrreducibilityReport irreducibility_recurrence_check(const SpectralHeatModel& model,
                                                     const Vector& f) {
    if (f.size() != model.size()) {
        throw std::invalid_argument("irreducibility_recurrence_check: size mismatch");
    }
    if (f.minCoeff() < 0.0) {
        throw std::invalid_argument("irreducibility_recurrence_check: f must be nonnegative");
    }
    if (f.maxCoeff() <= 0.0) {
        throw std::invalid_argument("irreducibility_recurrence_check: f must not vanish");
    }
    IrreducibilityReport report;
    const double t_star = model.space().meta().diameter_bound *
                          model.space().meta().diameter_bound;
    const Matrix kernel = model.kernel_matrix(t_star);
    report.min_kernel = kernel.minCoeff();
    report.kernel_positive = report.min_kernel > 0.0;

    // Green integral by spectral closed form: int_0^T T_t f dt.
    const Vector& m = model.space().weight();
    const Vector coeff = model.eigenvectors().transpose() * (m.asDiagonal() * f);
    auto green_at = [&](double top) {
        Vector terms(model.size());
        for (int k = 0; k < model.size(); ++k) {
            const double lam = model.eigenvalues()(k);
            terms(k) = lam <= 1e-13 ? coeff(k) * top
                                    : coeff(k) * (1.0 - std::exp(-lam * top)) / lam;
        }
        return (model.eigenvectors() * terms)(0);
    };
    // Horizon long enough that the spectral tail e^{-lambda_1 T} is negligible.
    const double t1 = std::max(4.0 * t_star, 40.0 / model.spectral_gap());
    const double g1 = green_at(t1);
    const double g2 = green_at(2.0 * t1);
    report.green_rate = (g2 - g1) / t1;
    report.expected_rate = f.dot(m);
    report.green_growth =
        std::abs(report.green_rate - report.expected_rate) <= 1e-9 * std::max(1.0, report.expected_rate);
    return report;
}

Matrix default_anchor_net(const FiniteMMSpace& a, const FiniteMMSpace& b, int n_anchors) {
    const auto& ea = a.meta().ambient;
    const auto& eb = b.meta().ambient;
    if (!ea || !eb || ea->space != eb->space) {
        throw std::invalid_argument("default_anchor_net: spaces must share an ambient");
    }
    Matrix pool(a.size() + b.size(), ea->coords.cols());
    pool.topRows(a.size()) = ea->coords;
    pool.bottomRows(b.size()) = eb->coords;
    const int n = static_cast<int>(pool.rows());
    n_anchors = std::min(n_anchors, n);

    std::vector<int> chosen{0};
    std::vector<double> nearest(static_cast<std::size_t>(n), kInf);
    while (static_cast<int>(chosen.size()) < n_anchors) {
        const int last = chosen.back();
        for (int i = 0; i < n; ++i) {
            nearest[static_cast<std::size_t>(i)] =
                std::min(nearest[static_cast<std::size_t>(i)], ea->space->dist_rows(pool, i, last));
        }
        int best = -1;
        double best_d = -1.0;
        for (int i = 0; i < n; ++i) {
            if (nearest[static_cast<std::size_t>(i)] > best_d + 1e-15) {
                best_d = nearest[static_cast<std::size_t>(i)];
                best = i;
            }
        }
        if (best < 0 || best_d <= 1e-15) break;
        chosen.push_back(best);
    }
    Matrix anchors(static_cast<int>(chosen.size()), pool.cols());
    for (std::size_t k = 0; k < chosen.size(); ++k) anchors.row(static_cast<int>(k)) = pool.row(chosen[k]);
    return anchors;
}

namespace {

/// Truncated distance observables 1 ^ d(., anchor_p) on a space, via its embedding.
Matrix anchor_observables(const FiniteMMSpace& space, const Matrix& anchors) {
    const auto& emb = space.meta().ambient;
    if (!emb) throw std::invalid_argument("fdd dictionary: space lacks an ambient embedding");
    Matrix g(space.size(), anchors.rows());
    std::vector<double> px(static_cast<std::size_t>(emb->coords.cols()));
    std::vector<double> pa(static_cast<std::size_t>(anchors.cols()));
    for (int x = 0; x < space.size(); ++x) {
        for (int c = 0; c < emb->coords.cols(); ++c) px[static_cast<std::size_t>(c)] = emb->coords(x, c);
        for (int p = 0; p < anchors.rows(); ++p) {
            for (int c = 0; c < anchors.cols(); ++c) pa[static_cast<std::size_t>(c)] = anchors(p, c);
            g(x, p) = std::min(1.0, emb->space->dist(px.data(), pa.data()));
        }
    }
    return g;
}

/// All dictionary FDD values for one model, in a deterministic order shared by both
/// sides of a comparison. Evaluation is batched: the innermost semigroup applications
/// are shared across anchor tuples, and the outermost time reduces to one kernel row.
std::vector<double> dictionary_fdd_values(const SpectralHeatModel& model, int start,
                                          const FddDictionary& dict) {
    const int n_times = static_cast<int>(dict.times.size());
    const Matrix g = anchor_observables(model.space(), dict.anchors);
    const int n_anchor = static_cast<int>(g.cols());
    const Vector& m = model.space().weight();

    auto start_row = [&](double t) -> Vector {
        return model.kernel_row(t, start).cwiseProduct(m);
    };

    std::vector<double> values;
    const int max_k = std::min(dict.max_k, 3);
    for (int a = 0; a < n_times; ++a) {
        const double ta = dict.times[static_cast<std::size_t>(a)];
        const Vector row_a = start_row(ta);
        if (max_k >= 1) {
            for (int p = 0; p < n_anchor; ++p) values.push_back(row_a.dot(g.col(p)));
        }
        if (max_k >= 2) {
            for (int b = a + 1; b < n_times; ++b) {
                const double tb = dict.times[static_cast<std::size_t>(b)];
                const Matrix inner = model.apply_matrix(tb - ta, g);
                for (int pa = 0; pa < n_anchor; ++pa) {
                    for (int pb = 0; pb < n_anchor; ++pb) {
                        values.push_back(row_a.dot(g.col(pa).cwiseProduct(inner.col(pb))));
                    }
                }
                if (max_k >= 3) {
                    for (int c = b + 1; c < n_times; ++c) {
                        const double tc = dict.times[static_cast<std::size_t>(c)];
                        const Matrix tail = model.apply_matrix(tc - tb, g);
                        for (int pb = 0; pb < n_anchor; ++pb) {
                            Matrix mid(model.size(), n_anchor);
                            for (int pc = 0; pc < n_anchor; ++pc) {
                                mid.col(pc) = g.col(pb).cwiseProduct(tail.col(pc));
                            }
                            const Matrix lifted = model.apply_matrix(tb - ta, mid);
                            for (int pa = 0; pa < n_anchor; ++pa) {
                                for (int pc = 0; pc < n_anchor; ++pc) {
                                    values.push_back(
                                        row_a.dot(g.col(pa).cwiseProduct(lifted.col(pc))));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return values;
}

}  // namespace

double fdd_dictionary_distance(const SpectralHeatModel& model_a, int start_a,
                               const SpectralHeatModel& model_b, int start_b,
                               const FddDictionary& dict) {
    if (dict.times.empty() || dict.anchors.rows() == 0) {
        throw std::invalid_argument("fdd_dictionary_distance: empty dictionary");
    }
    const auto va = dictionary_fdd_values(model_a, start_a, dict);
    const auto vb = dictionary_fdd_values(model_b, start_b, dict);
    double worst = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) worst = std::max(worst, std::abs(va[i] - vb[i]));
    return worst;
}

namespace {

struct JointLaw {
    std::vector<std::vector<int>> tuples;
    std::vector<double> probs;
};

JointLaw exact_joint_law(const SpectralHeatModel& model, int start,
                         const std::vector<double>& times) {
    JointLaw law;
    law.tuples.push_back({});
    law.probs.push_back(1.0);
    double prev_t = 0.0;
    for (const double t : times) {
        const Matrix trans = model.transition_matrix(t - prev_t);
        JointLaw next;
        for (std::size_t a = 0; a < law.tuples.size(); ++a) {
            const int from = law.tuples[a].empty() ? start : law.tuples[a].back();
            for (int y = 0; y < model.size(); ++y) {
                const double p = law.probs[a] * std::max(0.0, trans(from, y));
                if (p <= 1e-15) continue;
                auto tuple = law.tuples[a];
                tuple.push_back(y);
                next.tuples.push_back(std::move(tuple));
                next.probs.push_back(p);
            }
        }
        law = std::move(next);
        prev_t = t;
    }
    double total = 0.0;
    for (const double p : law.probs) total += p;
    for (double& p : law.probs) p /= total;
    return law;
}

double product_metric_sq(const AmbientSpace& ambient, const Matrix& coords_a,
                         const Matrix& coords_b, const std::vector<int>& ta,
                         const std::vector<int>& tb) {
    double s = 0.0;
    std::vector<double> pa(static_cast<std::size_t>(coords_a.cols()));
    std::vector<double> pb(pa.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        for (int c = 0; c < coords_a.cols(); ++c) pa[static_cast<std::size_t>(c)] = coords_a(ta[i], c);
        for (int c = 0; c < coords_b.cols(); ++c) pb[static_cast<std::size_t>(c)] = coords_b(tb[i], c);
        const double d = ambient.dist(pa.data(), pb.data());
        s += d * d;
    }
    return s;
}

double empirical_joint_w2(const PathEnsemble& a, const PathEnsemble& b,
                          const std::vector<int>& cols_a, const std::vector<int>& cols_b,
                          int lo_a, int hi_a, int lo_b, int hi_b) {
    const auto& ea = *a.model->space().meta().ambient;
    const auto& eb = *b.model->space().meta().ambient;
    const int ma = hi_a - lo_a;
    const int mb = hi_b - lo_b;
    Matrix cost(ma, mb);
    std::vector<int> ta(cols_a.size()), tb(cols_b.size());
    for (int i = 0; i < ma; ++i) {
        for (std::size_t k = 0; k < cols_a.size(); ++k) ta[k] = a.paths(lo_a + i, cols_a[k]);
        for (int j = 0; j < mb; ++j) {
            for (std::size_t k = 0; k < cols_b.size(); ++k) tb[k] = b.paths(lo_b + j, cols_b[k]);
            cost(i, j) = product_metric_sq(*ea.space, ea.coords, eb.coords, ta, tb);
        }
    }
    const Vector mu = Vector::Constant(ma, 1.0 / ma);
    const Vector nu = Vector::Constant(mb, 1.0 / mb);
    return w2_distance_cost(cost, mu, nu).value;
}

}  // namespace

PathLawDistance path_law_distance(const PathEnsemble& a, const PathEnsemble& b,
                                  PathLawMode mode, const FddDictionary& dict) {
    if (!a.model || !b.model) throw std::invalid_argument("path_law_distance: null models");
    const auto& ea = a.model->space().meta().ambient;
    const auto& eb = b.model->space().meta().ambient;
    if (!ea || !eb || ea->space != eb->space) {
        throw std::invalid_argument("path_law_distance: ensembles lack a common ambient");
    }
    PathLawDistance out;
    if (mode == PathLawMode::fdd_dictionary) {
        out.value = fdd_dictionary_distance(*a.model, a.start, *b.model, b.start, dict);
        out.exact = true;
        return out;
    }

    // grid_w2: joint law at up to three dictionary times under the product metric.
    std::vector<double> times;
    for (const double t : dict.times) {
        if (static_cast<int>(times.size()) >= 3) break;
        times.push_back(t);
    }
    if (times.empty()) throw std::invalid_argument("path_law_distance: empty time dictionary");
    std::vector<int> cols_a, cols_b;
    for (const double t : times) {
        cols_a.push_back(grid_index(a.time_grid, t));
        cols_b.push_back(grid_index(b.time_grid, t));
    }

    const double atoms_a = std::pow(static_cast<double>(a.model->size()), times.size());
    const double atoms_b = std::pow(static_cast<double>(b.model->size()), times.size());
    if (atoms_a <= 1e5 && atoms_b <= 1e5 && atoms_a * atoms_b <= 1e6) {
        const JointLaw ja = exact_joint_law(*a.model, a.start, times);
        const JointLaw jb = exact_joint_law(*b.model, b.start, times);
        Matrix cost(ja.tuples.size(), jb.tuples.size());
        for (std::size_t i = 0; i < ja.tuples.size(); ++i) {
            for (std::size_t j = 0; j < jb.tuples.size(); ++j) {
                cost(static_cast<int>(i), static_cast<int>(j)) = product_metric_sq(
                    *ea->space, ea->coords, eb->coords, ja.tuples[i], jb.tuples[j]);
            }
        }
        Vector mu(ja.probs.size()), nu(jb.probs.size());
        for (std::size_t i = 0; i < ja.probs.size(); ++i) mu(static_cast<int>(i)) = ja.probs[i];
        for (std::size_t j = 0; j < jb.probs.size(); ++j) nu(static_cast<int>(j)) = jb.probs[j];
        out.value = w2_distance_cost(cost, mu, nu).value;
        out.exact = true;
        return out;
    }

    out.exact = false;
    out.value = empirical_joint_w2(a, b, cols_a, cols_b, 0, a.n_paths(), 0, b.n_paths());
    if (a.n_paths() >= 4 && b.n_paths() >= 4) {
        const double w1 = empirical_joint_w2(a, b, cols_a, cols_b, 0, a.n_paths() / 2, 0,
                                             b.n_paths() / 2);
        const double w2 = empirical_joint_w2(a, b, cols_a, cols_b, a.n_paths() / 2, a.n_paths(),
                                             b.n_paths() / 2, b.n_paths());
        out.std_error = 0.5 * std::abs(w1 - w2);
    }
    return out;
}

FiniteMMSpace path_space_as_mmspace(const PathEnsemble& ensemble, double t_max) {
    if (ensemble.n_paths() < 1) throw std::invalid_argument("path_space_as_mmspace: empty ensemble");
    std::vector<double> grid;
    std::vector<int> cols;
    for (std::size_t j = 0; j < ensemble.time_grid.size(); ++j) {
        if (ensemble.time_grid[j] <= t_max + 1e-12) {
            grid.push_back(ensemble.time_grid[j]);
            cols.push_back(static_cast<int>(j));
        }
    }

    // Merge duplicate trajectories with summed weights.
    std::map<std::vector<int>, double> atoms;
    const double w_each = 1.0 / ensemble.n_paths();
    for (int p = 0; p < ensemble.n_paths(); ++p) {
        std::vector<int> key(cols.size());
        for (std::size_t k = 0; k < cols.size(); ++k) key[k] = ensemble.paths(p, cols[k]);
        atoms[key] += w_each;
    }
    const int n = static_cast<int>(atoms.size());
    std::vector<std::vector<int>> reps;
    Vector w(n);
    int idx = 0;
    for (const auto& [key, mass] : atoms) {
        reps.push_back(key);
        w(idx++) = mass;
    }

    const auto& space = ensemble.model->space();
    Matrix d = Matrix::Zero(n, n);
    std::vector<double> pointwise(grid.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                pointwise[k] = space.dist(reps[static_cast<std::size_t>(i)][k],
                                          reps[static_cast<std::size_t>(j)][k]);
            }
            d(i, j) = d(j, i) = delta_quadrature(grid, pointwise);
        }
    }

    SpaceMeta meta;
    meta.curvature_bound = space.meta().curvature_bound;
    meta.dim_bound = space.meta().dim_bound;
    meta.diameter_bound = std::max(n > 1 ? d.maxCoeff() : 0.0, 1e-9);
    meta.label = "family=pathspace M=" + std::to_string(ensemble.n_paths()) +
                 " T=" + std::to_string(grid.back());

    if (space.meta().ambient) {
        const auto& base_emb = *space.meta().ambient;
        AmbientEmbedding emb;
        emb.space = std::make_shared<PathAmbient>(base_emb.space, grid);
        const int bd = static_cast<int>(base_emb.coords.cols());
        emb.coords.resize(n, static_cast<int>(grid.size()) * bd);
        for (int i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                emb.coords.row(i).segment(static_cast<int>(k) * bd, bd) =
                    base_emb.coords.row(reps[static_cast<std::size_t>(i)][k]);
            }
        }
        meta.ambient = std::move(emb);
    }
    Vector w_fixed = w;
    w_fixed /= w_fixed.sum();
    int imax = 0;
    w_fixed.maxCoeff(&imax);
    w_fixed(imax) += 1.0 - w_fixed.sum();
    return FiniteMMSpace(std::move(d), std::move(w_fixed), std::move(meta));
}

}  // namespace mmlab
