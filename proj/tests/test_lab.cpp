#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mmlab/io.hpp"
#include "mmlab/lab.hpp"
#include "oracles.hpp"

using namespace mmlab;
using oracle::near;

namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config(const std::string& tag) {
    ExperimentConfig config;
    config.sequence = {{"circle", 8, 1.0, 0.0, ""},
                       {"circle", 12, 1.0, 0.0, ""},
                       {"circle", 16, 1.0, 0.0, ""},
                       {"circle", 24, 1.0, 0.0, ""},
                       {"circle", 48, 1.0, 0.0, ""},
                       {"circle", 96, 1.0, 0.0, ""}};
    config.fdd_times = {0.1, 0.5, 1.0};
    config.fdd_anchors = 4;
    config.fdd_max_k = 2;
    config.path_times = {0.5, 1.0};
    config.paths = 64;
    config.seed = 777;
    config.path_check_paths = 32;
    config.path_check_t_max = 5.0;
    config.path_check_dt = 0.5;
    config.out_dir = (fs::temp_directory_path() / ("mmlab_lab_" + tag)).string();
    return config;
}

}  // namespace

TEST_CASE("spearman rank correlation") {
    CHECK(near(spearman({1, 2, 3, 4}, {10, 8, 3, 1}), -1.0, 1e-12));
    CHECK(near(spearman({1, 2, 3, 4}, {1, 2, 3, 4}), 1.0, 1e-12));
    CHECK(spearman({1, 2, 3, 4}, {5, 5, 5, 5}) == 0.0);
    CHECK_THROWS_AS((void)spearman({1.0}, {2.0}), std::invalid_argument);
}

TEST_CASE("constant sequences: zero distance columns and vacuous verdicts") {
    ExperimentConfig config = small_config("const");
    config.sequence = {{"circle", 16, 1.0, 0.0, ""},
                       {"circle", 16, 1.0, 0.0, ""},
                       {"circle", 16, 1.0, 0.0, ""},
                       {"circle", 16, 1.0, 0.0, ""},
                       {"circle", 16, 1.0, 0.0, ""}};
    const ExperimentReport report = run_experiment(config);
    REQUIRE(report.rows.size() == 5);
    for (const auto& row : report.rows) {
        CHECK(row.error.empty());
        CHECK(near(row.d_upper, 0.0, 1e-6));
        CHECK(near(row.fdd_distance, 0.0, 1e-6));
        CHECK(near(row.path_w2, 0.0, 1e-6));
        CHECK(near(row.lambda1, report.rows[0].lambda1, 1e-12));
    }
    const Verdict forward = verify_direction_forward(report);
    CHECK(forward.pass);
    CHECK(forward.clause.find("vacuous") != std::string::npos);
    CHECK(verify_direction_backward(report).pass);
}

TEST_CASE("refining circle sequence: decreasing columns, passing verdicts, reproducible") {
    ExperimentConfig config = small_config("seq");
    const ExperimentReport report = run_experiment(config);
    REQUIRE(report.rows.size() == 6);
    for (const auto& row : report.rows) CHECK(row.error.empty());

    SUBCASE("distance columns decrease strictly across the sequence rows") {
        for (std::size_t i = 1; i + 1 < report.rows.size(); ++i) {
            CHECK(report.rows[i].d_upper < report.rows[i - 1].d_upper);
            CHECK(report.rows[i].fdd_distance < report.rows[i - 1].fdd_distance);
        }
        CHECK(near(report.rows.back().d_upper, 0.0, 1e-9));
        CHECK(near(report.rows.back().fdd_distance, 0.0, 1e-12));
    }
    SUBCASE("verdicts pass") {
        CHECK(verify_direction_forward(report).pass);
        CHECK(verify_direction_backward(report).pass);
    }
    SUBCASE("cell-identical reruns") {
        const ExperimentReport again = run_experiment(config);
        REQUIRE(again.rows.size() == report.rows.size());
        for (std::size_t i = 0; i < report.rows.size(); ++i) {
            CHECK(again.rows[i].d_upper == report.rows[i].d_upper);
            CHECK(again.rows[i].fdd_distance == report.rows[i].fdd_distance);
            CHECK(again.rows[i].path_w2 == report.rows[i].path_w2);
            CHECK(again.rows[i].lambda1 == report.rows[i].lambda1);
        }
        CHECK(again.config_digest == report.config_digest);
    }
    SUBCASE("report files are written and round trip") {
        const fs::path dir(config.out_dir);
        CHECK(fs::exists(dir / "report.csv"));
        CHECK(fs::exists(dir / "report.json"));
        CHECK(fs::exists(dir / "plots" / "d_upper.dat"));
        CHECK(!fs::exists(dir / "report.json.tmp"));  // atomic rename cleaned up
        const ExperimentReport back = read_report_json(dir / "report.json");
        REQUIRE(back.rows.size() == report.rows.size());
        for (std::size_t i = 0; i < report.rows.size(); ++i) {
            CHECK(back.rows[i].d_upper == report.rows[i].d_upper);
            CHECK(back.rows[i].lambda1 == report.rows[i].lambda1);
        }
        CHECK(verify_direction_forward(back).pass);
    }
}

TEST_CASE("adversarial shuffled sequence fails the forward verdict") {
    ExperimentConfig config = small_config("shuffled");
    // d_upper decreasing needs a monotone refinement; shuffle breaks fdd instead:
    // fabricate a report directly to probe the clause logic.
    ExperimentReport report;
    for (int i = 0; i < 5; ++i) {
        ReportRow row;
        row.index = i;
        row.n = 8 << i;
        row.d_upper = 1.0 / (1 + i);            // decreasing
        row.fdd_distance = (i % 2) ? 0.9 : 0.1; // oscillating
        row.lambda1 = 1.0;
        row.mixing_exponent = 1.0;
        report.rows.push_back(row);
    }
    const Verdict forward = verify_direction_forward(report);
    CHECK_FALSE(forward.pass);
    CHECK(forward.clause.find("monotone") != std::string::npos);

    SUBCASE("endpoint drop clause") {
        ExperimentReport weak;
        for (int i = 0; i < 5; ++i) {
            ReportRow row;
            row.index = i;
            row.d_upper = 1.0 / (1 + i);
            row.fdd_distance = 1.0 - 0.01 * i;  // decreasing but shallow
            row.lambda1 = 1.0;
            row.mixing_exponent = 1.0;
            weak.rows.push_back(row);
        }
        const Verdict v = verify_direction_forward(weak);
        CHECK_FALSE(v.pass);
        CHECK(v.clause.find("factor 4") != std::string::npos);
    }
    SUBCASE("backward spectral floor clause") {
        ExperimentReport sick;
        for (int i = 0; i < 5; ++i) {
            ReportRow row;
            row.index = i;
            row.d_upper = 1.0 / (1 + i);
            row.fdd_distance = 1.0 / (1 + i);
            row.lambda1 = (i == 2) ? 0.1 : 1.0;  // one collapsed gap
            row.mixing_exponent = 1.0;
            sick.rows.push_back(row);
        }
        const Verdict v = verify_direction_backward(sick);
        CHECK_FALSE(v.pass);
        CHECK(v.clause.find("spectral gap") != std::string::npos);
    }
    SUBCASE("insufficient rows raise") {
        ExperimentReport tiny;
        for (int i = 0; i < 3; ++i) {
            ReportRow row;
            row.index = i;
            tiny.rows.push_back(row);
        }
        CHECK_THROWS_AS((void)verify_direction_forward(tiny), std::invalid_argument);
    }
}

TEST_CASE("row failures annotate and continue; strict aborts") {
    ExperimentConfig config = small_config("failrow");
    // An unreadable file recipe fails its row deterministically.
    config.sequence = {{"circle", 8, 1.0, 0.0, ""},
                       {"circle", 12, 1.0, 0.0, ""},
                       {"file", 0, 1.0, 0.0, "/nonexistent/space.mms"},
                       {"circle", 16, 1.0, 0.0, ""},
                       {"circle", 24, 1.0, 0.0, ""},
                       {"circle", 48, 1.0, 0.0, ""},
                       {"circle", 96, 1.0, 0.0, ""}};
    SUBCASE("continue-and-annotate is the default") {
        const ExperimentReport report = run_experiment(config);
        REQUIRE(report.rows.size() == 7);
        CHECK_FALSE(report.rows[2].error.empty());
        CHECK(std::isnan(report.rows[2].d_upper));
        // Remaining rows carry on and the verdicts compute on the healthy rows.
        CHECK(report.rows[3].error.empty());
        CHECK(verify_direction_forward(report).pass);
    }
    SUBCASE("strict mode aborts") {
        config.strict = true;
        config.out_dir += "_strict";
        CHECK_THROWS(run_experiment(config));
    }
}

TEST_CASE("weighted circle sequence relaxes to the unweighted limit") {
    ExperimentConfig config = small_config("weighted");
    config.sequence = {{"circle", 32, 1.0, 0.8, ""},  {"circle", 32, 1.0, 0.4, ""},
                       {"circle", 32, 1.0, 0.2, ""},  {"circle", 32, 1.0, 0.1, ""},
                       {"circle", 32, 1.0, 0.05, ""}, {"circle", 32, 1.0, 0.0, ""}};
    const ExperimentReport report = run_experiment(config);
    REQUIRE(report.rows.size() == 6);
    for (const auto& row : report.rows) CHECK(row.error.empty());
    for (std::size_t i = 1; i + 1 < report.rows.size(); ++i) {
        CHECK(report.rows[i].d_upper < report.rows[i - 1].d_upper);
        CHECK(report.rows[i].fdd_distance < report.rows[i - 1].fdd_distance);
    }
}

TEST_CASE("path-space convergence check on a refining circle sequence") {
    ExperimentConfig config = small_config("pathcheck");
    const PathSpaceCheckReport report = path_space_convergence_check(config);
    REQUIRE(report.base_d_upper.size() == 5);
    REQUIRE(report.path_d_upper.size() == 5);
    CHECK(report.verdict.pass);
    for (const double v : report.path_d_upper) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    SUBCASE("single-path ensembles degenerate gracefully") {
        ExperimentConfig tiny = small_config("pathcheck1");
        tiny.path_check_paths = 1;
        const PathSpaceCheckReport r = path_space_convergence_check(tiny);
        REQUIRE(r.path_d_upper.size() == 5);
        for (const double v : r.path_d_upper) CHECK(v >= 0.0);
    }
}

TEST_CASE("config files parse with overrides and digest stability") {
    const fs::path dir = fs::temp_directory_path() / "mmlab_lab_cfg";
    fs::create_directories(dir);
    const fs::path file = dir / "exp.cfg";
    std::ofstream out(file);
    out << "mmconfig 1\n"
        << "# circle refinement sweep\n"
        << "space circle 16 1\n"
        << "space circle 32 1\n"
        << "space circle 64 1 0.25\n"
        << "limit circle 128 1\n"
        << "fdd_times 0.1 0.5 1\n"
        << "fdd_anchors 6\n"
        << "fdd_max_k 2\n"
        << "path_times 0.5 1\n"
        << "paths 32\n"
        << "seed 31337\n"
        << "solver sinkhorn\n"
        << "sinkhorn_eps 0.05\n"
        << "out /tmp/mmlab_cfg_out\n";
    out.close();
    const ExperimentConfig config = read_config(file);
    CHECK(config.sequence.size() == 4);
    CHECK(config.sequence[2].potential_amp == 0.25);
    CHECK(config.sequence.back().n == 128);
    CHECK(config.fdd_anchors == 6);
    CHECK(config.solver == "sinkhorn");
    CHECK(config.seed == 31337);
    const std::string d1 = config.digest();
    ExperimentConfig other = config;
    other.seed = 31338;
    CHECK(d1 != other.digest());
    CHECK(d1 == read_config(file).digest());

    SUBCASE("unknown keys are rejected with the line") {
        const fs::path bad = dir / "bad.cfg";
        std::ofstream b(bad);
        b << "space circle 8 1\nlimit circle 16 1\nbogus 3\n";
        b.close();
        CHECK_THROWS_WITH_AS((void)read_config(bad), doctest::Contains("bogus"),
                             std::runtime_error);
    }
    SUBCASE("missing limit rejected") {
        const fs::path bad = dir / "nolimit.cfg";
        std::ofstream b(bad);
        b << "space circle 8 1\nspace circle 16 1\n";
        b.close();
        CHECK_THROWS_AS((void)read_config(bad), std::runtime_error);
    }
}

TEST_CASE("spectra cache refuses foreign spaces") {
    const fs::path dir = fs::temp_directory_path() / "mmlab_lab_cache";
    fs::create_directories(dir);
    auto a = std::make_shared<const FiniteMMSpace>(build_model_space(ModelFamily::circle, 16, 1.0));
    auto b = std::make_shared<const FiniteMMSpace>(build_model_space(ModelFamily::circle, 24, 1.0));
    const SpectralHeatModel model = spectral_decompose(build_dirichlet_graph(a));
    const fs::path file = dir / "spectra.bin";
    write_spectra(model, file);
    const SpectralHeatModel back = read_spectra(file, a);
    CHECK((back.eigenvalues() - model.eigenvalues()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_WITH_AS((void)read_spectra(file, b), doctest::Contains("hash"),
                         std::runtime_error);
}

TEST_CASE("coupling files round trip and validate") {
    const fs::path dir = fs::temp_directory_path() / "mmlab_lab_coupling";
    fs::create_directories(dir);
    const FiniteMMSpace space = build_model_space(ModelFamily::circle, 6, 1.0);
    Vector mu = Vector::Zero(6), nu = Vector::Constant(6, 1.0 / 6.0);
    mu(0) = 0.5;
    mu(3) = 0.5;
    const Coupling plan = w2_distance(space, mu, nu).plan;
    const fs::path file = dir / "plan.mmq";
    write_coupling(plan, file);
    const Coupling back = read_coupling(file);
    CHECK((back.q - plan.q).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.marginal_residual() <= 1e-10);

    // Corrupt a cell: the reader rejects with the offending location.
    Coupling broken = plan;
    broken.q(0, 0) += 0.2;
    const fs::path bad = dir / "bad.mmq";
    write_coupling(broken, bad);
    CHECK_THROWS_WITH_AS((void)read_coupling(bad), doctest::Contains("bad.mmq:"),
                         std::runtime_error);
}

TEST_CASE("ensemble files round trip with provenance") {
    const fs::path dir = fs::temp_directory_path() / "mmlab_lab_ens";
    fs::create_directories(dir);
    auto space = std::make_shared<const FiniteMMSpace>(build_model_space(ModelFamily::circle, 16, 1.0));
    auto model = std::make_shared<const SpectralHeatModel>(
        spectral_decompose(build_dirichlet_graph(space)));
    const PathEnsemble e = sample_paths(model, 0, {0.0, 0.5, 1.0}, 32, 5);
    const fs::path file = dir / "paths.mme";
    write_ensemble(e, file);
    const PathEnsemble back = read_ensemble(file, model);
    CHECK(back.digest() == e.digest());
    auto other = std::make_shared<const FiniteMMSpace>(build_model_space(ModelFamily::circle, 24, 1.0));
    auto other_model = std::make_shared<const SpectralHeatModel>(
        spectral_decompose(build_dirichlet_graph(other)));
    CHECK_THROWS_WITH_AS((void)read_ensemble(file, other_model), doctest::Contains("hash"),
                         std::runtime_error);
}
