// Command-line laboratory for finite metric measure spaces: model-space
// construction, transport distances, heat spectra, Brownian path sampling,
// Holder extension, and the full convergence experiment.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mmlab/holder.hpp"
#include "mmlab/io.hpp"
#include "mmlab/lab.hpp"

namespace {

using namespace mmlab;

int cmd_build_space(const std::string& family, int n, double scale, int n_radial, double cone_k,
                    double cone_n, const std::string& base_file, double v_amp,
                    const std::string& out) {
    FiniteMMSpace space = [&] {
        if (family == "cone") {
            if (base_file.empty()) throw std::invalid_argument("cone needs --base <space file>");
            const FiniteMMSpace base = read_space(base_file);
            return cone_space(base, cone_k, cone_n, n_radial);
        }
        FiniteMMSpace model = build_model_space(parse_family(family), n, scale);
        if (v_amp != 0.0) {
            Vector v(model.size());
            for (int i = 0; i < model.size(); ++i) {
                v(i) = v_amp * std::cos(model.meta().ambient->coords(i, 0));
            }
            model = weighted_space(model, v);
        }
        return model;
    }();
    write_space(space, out);
    std::cout << "wrote " << out << " (n=" << space.size() << ", diameter " << space.diameter()
              << ", hash " << space.hash() << ")\n";
    return 0;
}

int cmd_distance(const std::string& file_a, const std::string& file_b, const std::string& metric,
                 const std::string& solver, double sinkhorn_eps, const std::string& plan_out) {
    const FiniteMMSpace a = read_space(file_a);
    const FiniteMMSpace b = read_space(file_b);
    if (metric == "d-exact") {
        const auto result = d_distance_exact_tiny(a, b);
        std::cout << "d_exact " << result.value << " (agreeing restarts "
                  << result.agreeing_restarts << "/" << result.restarts << ")\n";
        if (!plan_out.empty()) write_coupling(result.plan, plan_out);
        return 0;
    }
    if (metric == "w2") {
        if (a.size() != b.size() || (a.dist() - b.dist()).cwiseAbs().maxCoeff() > 1e-12) {
            throw std::invalid_argument("w2 between files needs identical point sets");
        }
        const auto result = solver == "sinkhorn"
                                ? w2_sinkhorn(a, a.weight(), b.weight(), sinkhorn_eps)
                                : w2_distance(a, a.weight(), b.weight());
        std::cout << "w2 " << result.value << (result.converged ? "" : " (not converged)") << "\n";
        if (!plan_out.empty()) write_coupling(result.plan, plan_out);
        return 0;
    }
    throw std::invalid_argument("unsupported metric " + metric +
                                " for space files (use w2 or d-exact)");
}

int cmd_heat(const std::string& file, double bandwidth, int eig_budget, int k_show,
             const std::string& spectra_out) {
    auto space = std::make_shared<const FiniteMMSpace>(read_space(file));
    const DirichletGraph graph = build_dirichlet_graph(space, bandwidth);
    const SpectralHeatModel model = spectral_decompose(graph, eig_budget);
    std::cout << "n " << model.size() << "\nbandwidth " << graph.bandwidth << "\nlambda";
    for (int k = 0; k < std::min(k_show, model.size()); ++k) {
        std::cout << " " << model.eigenvalues()(k);
    }
    std::cout << "\nspectral_gap " << model.spectral_gap() << "\n";
    if (!spectra_out.empty()) {
        write_spectra(model, spectra_out);
        std::cout << "wrote " << spectra_out << "\n";
    }
    return 0;
}

int cmd_simulate(const std::string& file, double bandwidth, int paths, std::uint64_t seed,
                 const std::vector<double>& grid, const std::string& out) {
    auto space = std::make_shared<const FiniteMMSpace>(read_space(file));
    const DirichletGraph graph = build_dirichlet_graph(space, bandwidth);
    auto model = std::make_shared<const SpectralHeatModel>(spectral_decompose(graph));
    const PathEnsemble ensemble = sample_paths(model, 0, grid, paths, seed);
    write_ensemble(ensemble, out);
    std::cout << "wrote " << out << " (digest " << ensemble.digest() << ", clip mass "
              << ensemble.clip_mass << ")\n";
    return 0;
}

int cmd_extend(const std::string& space_file, const std::string& values_file, double alpha,
               const std::string& out) {
    const FiniteMMSpace space = read_space(space_file);
    std::ifstream in(values_file);
    if (!in) throw std::runtime_error(values_file + ": cannot open");
    std::vector<int> domain;
    std::vector<double> vals;
    int idx;
    double v;
    while (in >> idx >> v) {
        domain.push_back(idx);
        vals.push_back(v);
    }
    if (domain.empty()) throw std::runtime_error(values_file + ": no (index, value) pairs");
    HolderFunction f;
    f.domain = domain;
    f.values = Eigen::Map<const Vector>(vals.data(), static_cast<int>(vals.size()));
    f.alpha = alpha;
    f.h = holder_constant(space.dist(), domain, f.values, alpha);
    const Vector extended = extend(f, space.dist());
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < extended.size(); ++i) os << i << " " << extended(i) << "\n";
    atomic_write_text(out, os.str());
    std::cout << "wrote " << out << " (holder constant " << f.h << ", alpha " << alpha << ")\n";
    return 0;
}

struct RunOverrides {
    std::string out, solver, fdd_mode;
    double sinkhorn_eps = -1.0, bandwidth = -1.0, beta = -1.0;
    int paths = 0, eig_budget = 0;
    std::int64_t seed = -1;
    std::vector<double> grid;
    bool strict = false;
};

int cmd_run(const std::string& config_file, const RunOverrides& over) {
    ExperimentConfig config = read_config(config_file);
    if (!over.out.empty()) config.out_dir = over.out;
    if (!over.solver.empty()) config.solver = over.solver;
    if (!over.fdd_mode.empty()) config.fdd_mode = over.fdd_mode;
    if (over.sinkhorn_eps > 0.0) config.sinkhorn_eps = over.sinkhorn_eps;
    if (over.bandwidth >= 0.0) config.bandwidth = over.bandwidth;
    if (over.beta > 0.0) config.beta = over.beta;
    if (over.paths > 0) config.paths = over.paths;
    if (over.eig_budget > 0) config.eig_budget = over.eig_budget;
    if (over.seed >= 0) config.seed = static_cast<std::uint64_t>(over.seed);
    if (!over.grid.empty()) config.path_times = over.grid;
    if (over.strict) config.strict = true;
    config.validate();
    const ExperimentReport report = run_experiment(config);
    std::cout << "report written to " << config.out_dir << " (digest " << report.config_digest
              << ", " << report.total_seconds << " s)\n";
    for (const auto& row : report.rows) {
        std::cout << "  index " << row.index << " n " << row.n << " d_upper " << row.d_upper
                  << " fdd " << row.fdd_distance << " lambda1 " << row.lambda1
                  << (row.error.empty() ? "" : (" [" + row.error + "]")) << "\n";
    }
    return 0;
}

int cmd_verify(const std::string& report_file, const std::string& config_file) {
    const ExperimentReport report = read_report_json(report_file);
    const Verdict forward = verify_direction_forward(report);
    const Verdict backward = verify_direction_backward(report);
    std::cout << "forward  " << (forward.pass ? "PASS" : "FAIL") << ": " << forward.clause << "\n";
    std::cout << "backward " << (backward.pass ? "PASS" : "FAIL") << ": " << backward.clause
              << "\n";
    int failures = (forward.pass ? 0 : 1) + (backward.pass ? 0 : 1);
    if (!config_file.empty()) {
        const PathSpaceCheckReport path_check = path_space_convergence_check(read_config(config_file));
        std::cout << "path-space " << (path_check.verdict.pass ? "PASS" : "FAIL") << ": "
                  << path_check.verdict.clause << "\n";
        failures += path_check.verdict.pass ? 0 : 1;
    }
    return failures;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmlab: numerical laboratory for finite metric measure spaces"};
    app.require_subcommand(1);

    // build-space
    auto* build = app.add_subcommand("build-space", "discretize a model space to a file");
    std::string family = "circle", base_file, out_file = "space.mms";
    int n = 64, n_radial = 8;
    double scale = 1.0, cone_k = 1.0, cone_n = 2.0, v_amp = 0.0;
    build->add_option("--family", family, "circle|torus2|interval|sphere2|cone");
    build->add_option("--n", n, "number of points");
    build->add_option("--scale", scale, "length scale");
    build->add_option("--radial", n_radial, "cone radial resolution");
    build->add_option("--K", cone_k, "cone curvature parameter");
    build->add_option("--Ndim", cone_n, "cone dimension parameter");
    build->add_option("--base", base_file, "base space file for cones");
    build->add_option("--v-amp", v_amp, "cosine potential amplitude for weighted variants");
    build->add_option("--out", out_file, "output space file");

    // distance
    auto* dist = app.add_subcommand("distance", "distances between two space files");
    std::string file_a, file_b, metric = "w2", solver = "exact";
    double sinkhorn_eps = 1e-2;
    dist->add_option("file_a", file_a)->required();
    dist->add_option("file_b", file_b)->required();
    dist->add_option("--metric", metric, "w2|d-exact");
    dist->add_option("--ot-solver", solver, "exact|sinkhorn");
    dist->add_option("--sinkhorn-eps", sinkhorn_eps, "entropic regularization");
    std::string plan_out;
    dist->add_option("--plan-out", plan_out, "write the optimal coupling here");

    // heat
    auto* heat = app.add_subcommand("heat", "spectral heat model of a space file");
    std::string heat_file, spectra_out;
    double bandwidth = 0.0;
    int eig_budget = 4096, k_show = 8;
    heat->add_option("file", heat_file)->required();
    heat->add_option("--bandwidth", bandwidth, "kernel bandwidth (0 = auto)");
    heat->add_option("--eig-budget", eig_budget, "dense eigensolve budget");
    heat->add_option("--show", k_show, "eigenvalues to print");
    heat->add_option("--spectra-out", spectra_out, "write the spectra cache here");

    // simulate
    auto* sim = app.add_subcommand("simulate", "sample Brownian paths on a space file");
    std::string sim_file, sim_out = "ensemble.mme";
    int paths = 256;
    std::uint64_t seed = 20240101;
    std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    sim->add_option("file", sim_file)->required();
    sim->add_option("--bandwidth", bandwidth, "kernel bandwidth (0 = auto)");
    sim->add_option("--paths", paths, "number of trajectories");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--grid", grid, "time grid starting at 0")->expected(-1);
    sim->add_option("--out", sim_out, "output ensemble file");

    // extend
    auto* ext = app.add_subcommand("extend", "Holder extension over a space file");
    std::string ext_space, ext_values, ext_out = "extended.txt";
    double alpha = 0.5;
    ext->add_option("--space", ext_space, "ambient space file")->required();
    ext->add_option("--values", ext_values, "text file of (index value) pairs")->required();
    ext->add_option("--alpha", alpha, "Holder exponent in (0,1]");
    ext->add_option("--out", ext_out, "output values file");

    // run
    auto* run = app.add_subcommand("run", "run a convergence experiment");
    std::string config_file;
    RunOverrides over;
    run->add_option("config", config_file)->required();
    run->add_option("--out", over.out, "override the output directory");
    run->add_option("--ot-solver", over.solver, "exact|sinkhorn");
    run->add_option("--sinkhorn-eps", over.sinkhorn_eps, "entropic regularization");
    run->add_option("--fdd-mode", over.fdd_mode, "grid_w2|fdd_dictionary for path_w2");
    run->add_option("--bandwidth", over.bandwidth, "kernel bandwidth (0 = auto)");
    run->add_option("--eig-budget", over.eig_budget, "dense eigensolve budget");
    run->add_option("--beta", over.beta, "tightness modulus exponent");
    run->add_option("--paths", over.paths, "trajectories per ensemble");
    run->add_option("--seed", over.seed, "RNG seed");
    run->add_option("--grid", over.grid, "override the path time grid")->expected(-1);
    run->add_flag("--strict", over.strict, "abort on the first row failure");

    // verify
    auto* verify = app.add_subcommand("verify", "verdicts over a written report");
    std::string report_file, verify_config;
    verify->add_option("report", report_file)->required();
    verify->add_option("--config", verify_config,
                       "also run the path-space convergence check from this config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) {
            return cmd_build_space(family, n, scale, n_radial, cone_k, cone_n, base_file, v_amp,
                                   out_file);
        }
        if (dist->parsed()) return cmd_distance(file_a, file_b, metric, solver, sinkhorn_eps, plan_out);
        if (heat->parsed()) return cmd_heat(heat_file, bandwidth, eig_budget, k_show, spectra_out);
        if (sim->parsed()) return cmd_simulate(sim_file, bandwidth, paths, seed, grid, sim_out);
        if (ext->parsed()) return cmd_extend(ext_space, ext_values, alpha, ext_out);
        if (run->parsed()) return cmd_run(config_file, over);
        if (verify->parsed()) return cmd_verify(report_file, verify_config);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
