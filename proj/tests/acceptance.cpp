// Acceptance suite: runs every laboratory-level criterion end to end and prints one
// PASS/FAIL line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "mmlab/brownian.hpp"
#include "mmlab/geometry.hpp"
#include "mmlab/heat.hpp"
#include "mmlab/holder.hpp"
#include "mmlab/lab.hpp"
#include "mmlab/models.hpp"
#include "mmlab/transport.hpp"
#include "oracles.hpp"

using namespace mmlab;

namespace {

namespace fs = std::filesystem;

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int id, const char* title, bool pass, const std::string& detail, double seconds) {
    std::printf("%s  criterion %2d: %s (%s; %.1f s)\n", pass ? "PASS" : "FAIL", id, title,
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct ShippedSpace {
    std::string name;
    std::shared_ptr<const FiniteMMSpace> space;
    std::shared_ptr<const SpectralHeatModel> model;
};

std::vector<ShippedSpace> shipped_spaces() {
    std::vector<ShippedSpace> list;
    auto add = [&](const std::string& name, FiniteMMSpace space) {
        auto sp = std::make_shared<const FiniteMMSpace>(std::move(space));
        auto model = std::make_shared<const SpectralHeatModel>(
            spectral_decompose(build_dirichlet_graph(sp)));
        list.push_back({name, sp, model});
    };
    add("circle-256", build_model_space(ModelFamily::circle, 256, 1.0));
    add("torus2-32x32", build_model_space(ModelFamily::torus2, 32 * 32, 1.0));
    add("interval-128", build_model_space(ModelFamily::interval, 128, 1.0));
    add("cone-circle", cone_space(build_model_space(ModelFamily::circle, 24, 1.0), 1.0, 2.0, 9));
    return list;
}

// ---------------------------------------------------------------------------

void criterion_1() {
    Timer timer;
    std::mt19937_64 gen(20260808);
    std::uniform_int_distribution<int> size(1, 4);
    std::uniform_real_distribution<double> coord(0.0, 2.0);
    std::uniform_real_distribution<double> mass(0.05, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int m = size(gen), n = size(gen);
        Matrix a(m, 2), b(n, 2);
        for (int i = 0; i < m; ++i) a.row(i) << coord(gen), coord(gen);
        for (int j = 0; j < n; ++j) b.row(j) << coord(gen), coord(gen);
        Matrix sq(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) sq(i, j) = (a.row(i) - b.row(j)).squaredNorm();
        Vector mu(m), nu(n);
        for (int i = 0; i < m; ++i) mu(i) = mass(gen);
        for (int j = 0; j < n; ++j) nu(j) = mass(gen);
        mu /= mu.sum();
        nu /= nu.sum();
        const double expected = std::sqrt(oracle::w2_sq_vertex_enumeration(sq, mu, nu));
        const double got = w2_distance_cost(sq, mu, nu).value;
        worst = std::max(worst, std::abs(got - expected));
    }
    const double secs = timer.seconds();
    report(1, "exact transport matches vertex enumeration on 100 tiny instances",
           worst <= 1e-9 && secs < 30.0, "worst gap " + fmt(worst), secs);
}

void criterion_2() {
    Timer timer;
    std::mt19937_64 gen(5150);
    std::uniform_real_distribution<double> gap(0.2, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = gap(gen), b = gap(gen);
        Matrix da(2, 2), db(2, 2);
        da << 0.0, a, a, 0.0;
        db << 0.0, b, b, 0.0;
        Vector w(2);
        w << 0.5, 0.5;
        SpaceMeta ma, mb;
        ma.diameter_bound = a;
        mb.diameter_bound = b;
        const FiniteMMSpace xa(da, w, ma), xb(db, w, mb);
        const double got = d_distance_exact_tiny(xa, xb).value;
        const double expected = 0.5 * std::abs(a - b);
        worst = std::max(worst, std::abs(got - expected));
        // The constrained brute-force parametrization agrees at its grid accuracy.
        if (trial < 5) {
            const double brute = oracle::two_point_d_distance(a, b);
            worst = std::max(worst, std::abs(brute - expected) - 2e-3);
        }
    }
    const double secs = timer.seconds();
    report(2, "tiny-space transport distance recovers |a-b|/2 on 20 pairs",
           worst <= 1e-5 && secs < 60.0, "worst gap " + fmt(worst), secs);
}

void criterion_3(const std::vector<ShippedSpace>& spaces) {
    Timer timer;
    double ck = 0.0, cons = 0.0, rev = 0.0, par = 0.0;
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (const auto& entry : spaces) {
        const int n = entry.space->size();
        const Vector& m = entry.space->weight();
        Vector f(n);
        for (int i = 0; i < n; ++i) f(i) = unif(gen);
        for (const double s : {0.1, 0.5, 1.0}) {
            for (const double t : {0.1, 0.5, 1.0}) {
                const Vector once = entry.model->apply(s + t, f);
                const Vector twice = entry.model->apply(s, entry.model->apply(t, f));
                ck = std::max(ck, (once - twice).cwiseAbs().maxCoeff());
            }
        }
        for (const double t : {0.01, 0.1, 1.0}) {
            const Matrix kernel = entry.model->kernel_matrix(t);
            const Vector rows = (kernel * m.asDiagonal()).rowwise().sum();
            cons = std::max(cons, (rows - Vector::Ones(n)).cwiseAbs().maxCoeff());
            // Reversibility: the density is symmetric and the transition kernel
            // p(t,x,y) m_y satisfies detailed balance against m.
            for (int x = 0; x < n; ++x) {
                for (int y = x + 1; y < n; ++y) {
                    rev = std::max(rev, std::abs(kernel(x, y) - kernel(y, x)));
                    rev = std::max(rev, std::abs(m(x) * kernel(x, y) * m(y) -
                                                 m(y) * kernel(y, x) * m(x)));
                }
            }
        }
        const DirichletGraph graph = build_dirichlet_graph(entry.space);
        for (int trial = 0; trial < 8; ++trial) {
            Vector u(n), v(n);
            for (int i = 0; i < n; ++i) {
                u(i) = unif(gen);
                v(i) = unif(gen);
            }
            const double lhs = 2.0 * cheeger_energy(graph, u) + 2.0 * cheeger_energy(graph, v);
            const double rhs = cheeger_energy(graph, u + v) + cheeger_energy(graph, u - v);
            par = std::max(par, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        }
    }
    const bool pass = ck <= 1e-8 && cons <= 1e-9 && rev <= 1e-12 && par <= 1e-12;
    report(3, "semigroup identities on every shipped model space", pass,
           "CK " + fmt(ck) + ", conserv " + fmt(cons) + ", rev " + fmt(rev) + ", parallelogram " +
               fmt(par),
           timer.seconds());
}

void criterion_4(const std::vector<ShippedSpace>& spaces) {
    Timer timer;
    double worst_slack = 0.0;
    std::mt19937_64 gen(47);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    bool holds = true;
    for (const auto& entry : spaces) {
        const int n = entry.space->size();
        for (int trial = 0; trial < 1000; ++trial) {
            Vector f(n);
            for (int i = 0; i < n; ++i) f(i) = unif(gen);
            const MixingCheck check = mixing_check(*entry.model, f, {0.05, 0.5, 2.0});
            holds = holds && check.holds && check.worst_slack >= -1e-12;
            worst_slack = std::min(worst_slack, check.worst_slack);
        }
    }
    // Two-point closed form: ||p(t,a,.) - 1|| = e^{-4wt} within 1e-9.
    Matrix d(2, 2);
    d << 0.0, 1.0, 1.0, 0.0;
    Vector w2v(2);
    w2v << 0.5, 0.5;
    SpaceMeta meta;
    meta.diameter_bound = 1.0;
    auto pair_space = std::make_shared<const FiniteMMSpace>(d, w2v, meta);
    const double w = 0.25;
    Matrix con(2, 2);
    con << 0.0, w, w, 0.0;
    const SpectralHeatModel pair_model =
        spectral_decompose(dirichlet_graph_from_conductance(pair_space, con, 0.5));
    const std::vector<double> grid{0.2, 0.5, 1.0, 2.0};
    const KernelMixingReport km = kernel_mixing_rate(pair_model, 0, grid, 0.1);
    double km_gap = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        km_gap = std::max(km_gap, std::abs(km.norms[i] - std::exp(-4.0 * w * grid[i])));
    }
    const bool pass = holds && km_gap <= 1e-9;
    report(4, "mixing inequality over 1000 random functions per space", pass,
           "worst slack " + fmt(worst_slack) + ", two-point norm gap " + fmt(km_gap),
           timer.seconds());
}

void criterion_5() {
    Timer timer;
    std::vector<std::shared_ptr<const SpectralHeatModel>> models;
    std::vector<const SpectralHeatModel*> refs;
    for (const int n : {64, 128, 256, 512, 1024}) {
        auto space = std::make_shared<const FiniteMMSpace>(
            build_model_space(ModelFamily::circle, n, 1.0));
        models.push_back(std::make_shared<const SpectralHeatModel>(
            spectral_decompose(build_dirichlet_graph(space))));
        refs.push_back(models.back().get());
    }
    const auto rows = eigen_convergence_trace(refs, 4);
    const auto oracle_lam = oracle::unit_circle_spectrum(5);
    double worst_rel = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double target = oracle_lam[static_cast<std::size_t>(k + 1)];
        worst_rel = std::max(worst_rel,
                             std::abs(rows.back().lambdas[static_cast<std::size_t>(k)] - target) /
                                 target);
    }
    double worst_change = 0.0;
    for (const double c : rows.back().rel_change) worst_change = std::max(worst_change, c);
    const double secs = timer.seconds();
    report(5, "circle spectra converge to the continuum oracle {1,1,4,4}",
           worst_rel <= 0.05 && worst_change < 0.01 && secs < 300.0,
           "relative error " + fmt(worst_rel) + ", last change " + fmt(worst_change), secs);
}

void criterion_6(const std::vector<ShippedSpace>& spaces) {
    Timer timer;
    bool pass = true;
    std::string detail;
    std::mt19937_64 gen(616);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
    for (const auto& entry : spaces) {
        const PathEnsemble ensemble = sample_paths(entry.model, 0, grid, 100000, 90210);
        int agree = 0;
        for (int trial = 0; trial < 50; ++trial) {
            FddSpec spec;
            std::vector<double> times{0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
            std::shuffle(times.begin(), times.end(), gen);
            times.resize(1 + gen() % 3);
            std::sort(times.begin(), times.end());
            spec.times = times;
            const int n = entry.space->size();
            for (std::size_t i = 0; i < times.size(); ++i) {
                Vector g(n);
                for (int j = 0; j < n; ++j) g(j) = unif(gen);
                spec.observables.push_back(g);
            }
            const double exact = fdd_exact(*entry.model, 0, spec);
            const MonteCarloEstimate mc = fdd_monte_carlo(ensemble, spec);
            if (std::abs(mc.estimate - exact) <= 4.0 * std::max(mc.std_error, 1e-12)) ++agree;
        }
        if (agree < 48) pass = false;
        detail += entry.name + " " + std::to_string(agree) + "/50 ";
    }
    report(6, "Monte Carlo FDDs track the exact values within four standard errors", pass,
           detail, timer.seconds());
}

void criterion_7() {
    Timer timer;
    std::mt19937_64 gen(0xabcd);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> apick(0.2, 1.0);
    const FiniteMMSpace interval = build_model_space(ModelFamily::interval, 40, 1.0);
    const FiniteMMSpace circle = build_model_space(ModelFamily::circle, 36, 1.0);
    bool restriction_exact = true;
    double worst_excess = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const FiniteMMSpace& space = trial % 2 ? circle : interval;
        const int n = space.size();
        HolderFunction f;
        f.alpha = apick(gen);
        std::vector<char> used(static_cast<std::size_t>(n), 0);
        const int dom = 2 + static_cast<int>(gen() % 10);
        while (static_cast<int>(f.domain.size()) < dom) {
            const int i = static_cast<int>(gen() % static_cast<std::uint64_t>(n));
            if (!used[static_cast<std::size_t>(i)]) {
                used[static_cast<std::size_t>(i)] = 1;
                f.domain.push_back(i);
            }
        }
        f.values.resize(dom);
        for (int i = 0; i < dom; ++i) f.values(i) = unif(gen);
        f.h = holder_constant(space.dist(), f.domain, f.values, f.alpha);
        const Vector ext = extend(f, space.dist());
        for (int k = 0; k < dom; ++k) {
            restriction_exact =
                restriction_exact && ext(f.domain[static_cast<std::size_t>(k)]) == f.values(k);
        }
        std::vector<int> all(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
        const double h_ext = holder_constant(space.dist(), all, ext, f.alpha);
        worst_excess = std::max(worst_excess, h_ext - f.h);
    }
    report(7, "Holder extension: exact restriction, constant never grows",
           restriction_exact && worst_excess <= 1e-12, "constant excess " + fmt(worst_excess),
           timer.seconds());
}

ExperimentConfig acceptance_experiment_config() {
    ExperimentConfig config;
    config.sequence = {{"circle", 16, 1.0, 0.0, ""},  {"circle", 32, 1.0, 0.0, ""},
                       {"circle", 64, 1.0, 0.0, ""},  {"circle", 128, 1.0, 0.0, ""},
                       {"circle", 256, 1.0, 0.0, ""}, {"circle", 512, 1.0, 0.0, ""},
                       {"circle", 1024, 1.0, 0.0, ""}};
    config.fdd_times = {0.1, 0.5, 1.0, 2.0};
    config.fdd_anchors = 8;
    config.fdd_max_k = 3;
    config.path_times = {0.5, 1.0, 2.0};
    config.paths = 256;
    config.seed = 20240101;
    config.path_check_paths = 512;
    config.path_check_t_max = 20.0;
    config.path_check_dt = 0.25;
    config.out_dir = (fs::temp_directory_path() / "mmlab_acceptance").string();
    return config;
}

void criteria_8_9(const ExperimentConfig& config, const ExperimentReport& report_data,
                  double run_seconds) {
    // Criterion 8: forward direction.
    {
        bool strict_decrease = true;
        for (std::size_t i = 1; i + 1 < report_data.rows.size(); ++i) {
            strict_decrease = strict_decrease &&
                              report_data.rows[i].d_upper < report_data.rows[i - 1].d_upper &&
                              report_data.rows[i].fdd_distance <
                                  report_data.rows[i - 1].fdd_distance;
        }
        const Verdict forward = verify_direction_forward(report_data);
        report(8, "forward desk check: refining circle nets, decreasing distances",
               strict_decrease && forward.pass && run_seconds < 600.0,
               forward.clause + (strict_decrease ? "" : "; strict decrease broken"),
               run_seconds);
    }
    // Criterion 9: backward direction.
    {
        double lambda_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < report_data.rows.size(); ++i) {
            lambda_min = std::min(lambda_min, report_data.rows[i].lambda1);
        }
        const double lambda_limit = report_data.rows.back().lambda1;
        const Verdict backward = verify_direction_backward(report_data);
        report(9, "backward desk check: uniform spectral gap floor",
               lambda_min >= 0.5 * lambda_limit && backward.pass,
               "inf lambda1 " + fmt(lambda_min) + " vs limit " + fmt(lambda_limit), 0.0);
    }
    (void)config;
}

void criterion_10(const ExperimentConfig& config) {
    Timer timer;
    const PathSpaceCheckReport path_check = path_space_convergence_check(config);
    std::vector<double> idx(path_check.path_d_upper.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
    const double rho = spearman(idx, path_check.path_d_upper);
    report(10, "path-space transport distances decrease with the base spaces",
           path_check.verdict.pass && rho <= -0.8, "spearman " + fmt(rho), timer.seconds());
}

void criterion_11() {
    Timer timer;
    auto space = std::make_shared<const FiniteMMSpace>(
        build_model_space(ModelFamily::circle, 512, 1.0));
    auto model = std::make_shared<const SpectralHeatModel>(
        spectral_decompose(build_dirichlet_graph(space)));
    std::vector<double> hs;
    for (int k = 0; k <= 10; ++k) hs.push_back(1e-3 * std::pow(100.0, k / 10.0));
    const TightnessTable table = tightness_modulus(*model, 0, 0.5, hs, 2.0);
    const bool pass = table.loglog_slope >= 0.8 && table.loglog_slope <= 1.2;
    report(11, "tightness modulus shows the diffusive log-log slope", pass,
           "slope " + fmt(table.loglog_slope), timer.seconds());
}

void criterion_12() {
    Timer timer;
    bool pass = true;
    std::string detail;
    {
        const FiniteMMSpace circle = build_model_space(ModelFamily::circle, 256, 1.0);
        std::vector<std::pair<double, double>> pairs;
        for (int k = 1; k <= 10; ++k) pairs.push_back({0.15 * k, 0.15 * k + 1.0});
        const auto bg_circle = bishop_gromov_check(circle, 0, pairs);
        const FiniteMMSpace torus = build_model_space(ModelFamily::torus2, 32 * 32, 1.0);
        std::vector<std::pair<double, double>> tpairs;
        for (int k = 1; k <= 10; ++k) tpairs.push_back({0.2 * k, 0.2 * k + 1.5});
        const auto bg_torus = bishop_gromov_check(torus, 7, tpairs);
        pass = pass && bg_circle.satisfied && bg_torus.satisfied;
        detail += std::string("bishop-gromov ") +
                  (bg_circle.satisfied && bg_torus.satisfied ? "ok" : "violated");

        std::vector<double> radii;
        for (int k = 1; k <= 12; ++k) radii.push_back(0.05 + 0.1 * k);
        const double doubling = doubling_constant(circle, radii);
        pass = pass && doubling <= 2.1;
        detail += ", doubling " + fmt(doubling);
    }
    {
        std::vector<double> grid;
        for (int j = 0; j <= 40000; ++j) grid.push_back(20.0 * j / 40000.0);
        const std::vector<double> far(grid.size(), 2.5);
        const std::vector<double> close(grid.size(), 0.3);
        const double gap1 =
            std::abs(path_delta_distance(grid, far).value - (1.0 - std::exp(-20.0)));
        const double gap2 = std::abs(path_delta_distance(grid, close).value -
                                     0.3 * (1.0 - std::exp(-20.0)));
        pass = pass && gap1 <= 1e-6 && gap2 <= 1e-6;
        detail += ", delta quadrature gaps " + fmt(gap1) + "/" + fmt(gap2);
    }
    report(12, "geometry suite: volume ratios, doubling, path-metric quadrature", pass, detail,
           timer.seconds());
}

}  // namespace

int main() {
    std::printf("mmlab acceptance suite\n");
    criterion_1();
    criterion_2();
    const auto spaces = shipped_spaces();
    criterion_3(spaces);
    criterion_4(spaces);
    criterion_5();
    criterion_6(spaces);
    criterion_7();
    {
        Timer timer;
        const ExperimentConfig config = acceptance_experiment_config();
        const ExperimentReport report_data = run_experiment(config);
        criteria_8_9(config, report_data, timer.seconds());
        criterion_10(config);
    }
    criterion_11();
    criterion_12();
    std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}
