#include "mmlab/lab.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmlab/io.hpp"

namespace mmlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> uniform_grid(double dt, double t_max) {
    std::vector<double> grid{0.0};
    for (int j = 1; grid.back() < t_max - 1e-12; ++j) grid.push_back(j * dt);
    return grid;
}

/// Index of the point nearest to the ambient location of `target` point 0.
int matched_start(const FiniteMMSpace& space, const FiniteMMSpace& target) {
    const auto& es = space.meta().ambient;
    const auto& et = target.meta().ambient;
    if (!es || !et || es->space != et->space) return 0;
    std::vector<double> p0(static_cast<std::size_t>(et->coords.cols()));
    for (int c = 0; c < et->coords.cols(); ++c) p0[static_cast<std::size_t>(c)] = et->coords(0, c);
    std::vector<double> px(static_cast<std::size_t>(es->coords.cols()));
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < space.size(); ++i) {
        for (int c = 0; c < es->coords.cols(); ++c) px[static_cast<std::size_t>(c)] = es->coords(i, c);
        const double d = es->space->dist(px.data(), p0.data());
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::vector<const ReportRow*> usable_sequence_rows(const ExperimentReport& report,
                                                   std::vector<std::string>* warnings) {
    std::vector<const ReportRow*> rows;
    for (std::size_t i = 0; i + 1 < report.rows.size(); ++i) {  // all but the limit row
        if (report.rows[i].error.empty()) {
            rows.push_back(&report.rows[i]);
        } else if (warnings) {
            warnings->push_back("row " + std::to_string(report.rows[i].index) +
                                " excluded: " + report.rows[i].error);
        }
    }
    return rows;
}

double column_spearman(const std::vector<const ReportRow*>& rows,
                       double ReportRow::* column) {
    std::vector<double> idx, val;
    for (const auto* row : rows) {
        idx.push_back(static_cast<double>(row->index));
        val.push_back(row->*column);
    }
    return spearman(idx, val);
}

}  // namespace

void ExperimentConfig::validate() const {
    if (sequence.size() < 2) {
        throw std::invalid_argument("experiment config: need at least two sequence entries");
    }
    for (const auto& r : sequence) {
        if (r.family != "file" && r.n < 2) {
            throw std::invalid_argument("experiment config: recipe needs n >= 2");
        }
    }
    if (fdd_times.empty() || paths < 1 || path_check_paths < 1) {
        throw std::invalid_argument("experiment config: empty fdd grid or no paths");
    }
    if (solver != "exact" && solver != "sinkhorn") {
        throw std::invalid_argument("experiment config: solver must be exact or sinkhorn");
    }
    if (fdd_mode != "grid_w2" && fdd_mode != "fdd_dictionary") {
        throw std::invalid_argument("experiment config: fdd_mode must be grid_w2 or fdd_dictionary");
    }
    // Model recipes must share the ambient recipe (family and scale) with the limit;
    // file recipes are checked against the shared ambient at run time.
    const SpaceRecipe& limit = sequence.back();
    if (limit.family != "file") {
        for (const auto& r : sequence) {
            if (r.family != "file" && (r.family != limit.family || r.scale != limit.scale)) {
                throw std::invalid_argument(
                    "experiment config: sequence entries must share the limit's family and scale");
            }
        }
    }
}

std::string ExperimentConfig::digest() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& r : sequence) {
        os << r.family << "," << r.n << "," << r.scale << "," << r.potential_amp << "," << r.file
           << ";";
    }
    for (double t : fdd_times) os << t << " ";
    os << "|" << fdd_anchors << "|" << fdd_max_k << "|";
    for (double t : path_times) os << t << " ";
    os << "|" << paths << "|" << seed << "|" << bandwidth << "|" << eig_budget << "|" << solver
       << "|" << sinkhorn_eps << "|" << fdd_mode << "|" << beta << "|" << path_check_t_max << "|"
       << path_check_dt << "|" << path_check_paths;
    const std::string s = os.str();
    return fnv1a_hex(s.data(), s.size());
}

ExperimentConfig read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    ExperimentConfig config;
    config.sequence.clear();
    std::string line;
    int line_no = 0;
    std::vector<SpaceRecipe> spaces;
    std::optional<SpaceRecipe> limit;
    auto parse_recipe = [&](std::istringstream& ls) {
        SpaceRecipe r;
        ls >> r.family;
        if (r.family == "file") {
            ls >> r.file;
        } else {
            ls >> r.n >> r.scale;
            double amp;
            if (ls >> amp) r.potential_amp = amp;
        }
        return r;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "mmconfig") {
            continue;
        } else if (key == "space") {
            spaces.push_back(parse_recipe(ls));
        } else if (key == "limit") {
            limit = parse_recipe(ls);
        } else if (key == "fdd_times") {
            config.fdd_times.clear();
            double t;
            while (ls >> t) config.fdd_times.push_back(t);
        } else if (key == "path_times") {
            config.path_times.clear();
            double t;
            while (ls >> t) config.path_times.push_back(t);
        } else if (key == "fdd_anchors") {
            ls >> config.fdd_anchors;
        } else if (key == "fdd_max_k") {
            ls >> config.fdd_max_k;
        } else if (key == "paths") {
            ls >> config.paths;
        } else if (key == "seed") {
            ls >> config.seed;
        } else if (key == "bandwidth") {
            ls >> config.bandwidth;
        } else if (key == "eig_budget") {
            ls >> config.eig_budget;
        } else if (key == "solver") {
            ls >> config.solver;
        } else if (key == "sinkhorn_eps") {
            ls >> config.sinkhorn_eps;
        } else if (key == "fdd_mode") {
            ls >> config.fdd_mode;
        } else if (key == "beta") {
            ls >> config.beta;
        } else if (key == "path_check_t_max") {
            ls >> config.path_check_t_max;
        } else if (key == "path_check_dt") {
            ls >> config.path_check_dt;
        } else if (key == "path_check_paths") {
            ls >> config.path_check_paths;
        } else if (key == "out") {
            ls >> config.out_dir;
        } else if (key == "strict") {
            int flag = 0;
            ls >> flag;
            config.strict = flag != 0;
        } else {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": unknown config key '" + key + "'");
        }
    }
    if (!limit) throw std::runtime_error(path.string() + ": config needs a 'limit' line");
    config.sequence = std::move(spaces);
    config.sequence.push_back(*limit);
    config.validate();
    return config;
}

FiniteMMSpace rebind_ambient(const FiniteMMSpace& space,
                             std::shared_ptr<const AmbientSpace> ambient) {
    if (!space.meta().ambient) {
        throw std::invalid_argument("rebind_ambient: space has no embedding");
    }
    SpaceMeta meta = space.meta();
    meta.ambient->space = std::move(ambient);
    return FiniteMMSpace(space.dist(), space.weight(), std::move(meta));
}

FiniteMMSpace build_recipe(const SpaceRecipe& recipe) {
    if (recipe.family == "file") return read_space(recipe.file);
    FiniteMMSpace space = build_model_space(parse_family(recipe.family), recipe.n, recipe.scale);
    if (recipe.potential_amp != 0.0) {
        Vector v(space.size());
        const auto& emb = *space.meta().ambient;
        for (int i = 0; i < space.size(); ++i) {
            v(i) = recipe.potential_amp * std::cos(emb.coords(i, 0));
        }
        space = weighted_space(space, v);
    }
    return space;
}

namespace {

struct PreparedSpace {
    std::shared_ptr<const FiniteMMSpace> space;
    std::shared_ptr<const SpectralHeatModel> model;
    int start = 0;
};

PreparedSpace prepare_space(const SpaceRecipe& recipe, const ExperimentConfig& config,
                            const std::shared_ptr<const AmbientSpace>& shared_ambient,
                            const fs::path& cache_dir) {
    FiniteMMSpace built = build_recipe(recipe);
    if (shared_ambient && built.meta().ambient) {
        built = rebind_ambient(built, shared_ambient);
    }
    auto space = std::make_shared<const FiniteMMSpace>(std::move(built));
    const fs::path cache = cache_dir / ("spectra_" + space->hash() + ".bin");
    std::shared_ptr<const SpectralHeatModel> model;
    if (fs::exists(cache)) {
        try {
            model = std::make_shared<const SpectralHeatModel>(read_spectra(cache, space));
        } catch (const std::exception&) {
            model.reset();  // stale or foreign cache: recompute below
        }
    }
    if (!model) {
        const DirichletGraph graph = build_dirichlet_graph(space, config.bandwidth);
        model = std::make_shared<const SpectralHeatModel>(
            spectral_decompose(graph, config.eig_budget));
        write_spectra(*model, cache);
    }
    PreparedSpace out;
    out.space = space;
    out.model = model;
    return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const double t_start = now_seconds();
    ExperimentReport report;
    report.config_digest = config.digest();
    const fs::path out_dir(config.out_dir);
    const fs::path cache_dir = out_dir / "cache";
    fs::create_directories(cache_dir);

    // The limit space anchors the shared ambient, the observable net and the starts.
    PreparedSpace limit = prepare_space(config.sequence.back(), config, nullptr, cache_dir);
    std::shared_ptr<const AmbientSpace> ambient =
        limit.space->meta().ambient ? limit.space->meta().ambient->space : nullptr;
    limit.start = 0;

    FddDictionary dict;
    dict.times = config.fdd_times;
    dict.max_k = config.fdd_max_k;
    if (ambient) dict.anchors = default_anchor_net(*limit.space, *limit.space, config.fdd_anchors);

    FddDictionary path_dict;
    path_dict.times = config.path_times;
    path_dict.max_k = config.fdd_mode == "fdd_dictionary" ? config.fdd_max_k : 1;
    if (ambient) path_dict.anchors = dict.anchors;

    std::vector<double> sample_grid{0.0};
    for (const double t : config.path_times) sample_grid.push_back(t);

    std::optional<PathEnsemble> limit_ensemble;
    if (ambient) {
        limit_ensemble = sample_paths(limit.model, limit.start, sample_grid, config.paths,
                                      config.seed);
    }

    for (std::size_t i = 0; i < config.sequence.size(); ++i) {
        ReportRow row;
        row.index = static_cast<int>(i);
        const double row_start = now_seconds();
        try {
            const bool is_limit = i + 1 == config.sequence.size();
            PreparedSpace entry =
                is_limit ? limit : prepare_space(config.sequence[i], config, ambient, cache_dir);
            row.n = entry.space->size();
            entry.start = is_limit ? 0 : matched_start(*entry.space, *limit.space);

            row.lambda1 = entry.model->spectral_gap();
            {
                std::vector<double> h_grid;
                for (int k = 0; k < 7; ++k) h_grid.push_back(1e-3 * std::pow(10.0, k / 3.0));
                row.tightness_slope =
                    tightness_modulus(*entry.model, entry.start, 0.5, h_grid, config.beta)
                        .loglog_slope;
            }
            row.mixing_exponent =
                kernel_mixing_rate(*entry.model, entry.start, {0.5, 1.0, 1.5, 2.0, 3.0}, 0.1)
                    .fitted_exponent;

            if (ambient && entry.space->meta().ambient) {
                if (config.solver == "exact") {
                    row.d_upper = d_distance_upper(*entry.space, *limit.space).value;
                } else {
                    row.d_upper = w2_sinkhorn(*entry.space, entry.space->weight(), *limit.space,
                                              limit.space->weight(), config.sinkhorn_eps)
                                      .value;
                }
                row.hausdorff = hausdorff_distance(*entry.space->meta().ambient,
                                                   *limit.space->meta().ambient);
                const ApproximationMap map = nearest_point_map(*entry.space, *limit.space);
                row.gh_distortion = gh_distortion(map.f, *entry.space, *limit.space);
                row.gh_coverage = gh_coverage(map.f, *entry.space, *limit.space);
                row.pushforward_gap = measure_pushforward_gap(map.f, *entry.space, *limit.space);
                row.fdd_distance = fdd_dictionary_distance(*entry.model, entry.start,
                                                           *limit.model, limit.start, dict);
                const PathEnsemble ens = sample_paths(entry.model, entry.start, sample_grid,
                                                      config.paths, config.seed);
                write_ensemble(ens, cache_dir / ("ensemble_" + ens.model_hash + "_" +
                                                 std::to_string(config.seed) + ".mme"));
                const PathLawMode mode = config.fdd_mode == "fdd_dictionary"
                                             ? PathLawMode::fdd_dictionary
                                             : PathLawMode::grid_w2;
                row.path_w2 = path_law_distance(ens, *limit_ensemble, mode, path_dict).value;
            } else {
                row.d_upper = row.hausdorff = row.gh_distortion = row.gh_coverage =
                    row.pushforward_gap = row.fdd_distance = row.path_w2 = kNaN;
                row.error = "no shared ambient embedding; geometry columns unavailable";
            }
        } catch (const std::exception& ex) {
            row.error = ex.what();
            row.d_upper = row.hausdorff = row.gh_distortion = row.gh_coverage =
                row.pushforward_gap = row.fdd_distance = row.path_w2 = row.lambda1 =
                    row.tightness_slope = row.mixing_exponent = kNaN;
            if (config.strict) {
                row.seconds = now_seconds() - row_start;
                report.rows.push_back(row);
                write_report(report, out_dir);
                throw;
            }
        }
        row.seconds = now_seconds() - row_start;
        report.rows.push_back(row);
    }
    report.total_seconds = now_seconds() - t_start;
    write_report(report, out_dir);
    return report;
}

Verdict verify_direction_forward(const ExperimentReport& report) {
    std::vector<std::string> warnings;
    const auto rows = usable_sequence_rows(report, &warnings);
    if (rows.size() < 4) {
        throw std::invalid_argument("verify_direction_forward: fewer than 4 usable rows");
    }
    Verdict verdict;
    const double rho_d = column_spearman(rows, &ReportRow::d_upper);
    if (!(rho_d <= -0.9)) {
        verdict.pass = true;
        verdict.clause = "vacuous: d_upper is not decreasing (spearman " + std::to_string(rho_d) + ")";
        return verdict;
    }
    const double rho_fdd = column_spearman(rows, &ReportRow::fdd_distance);
    if (!(rho_fdd <= -0.9)) {
        verdict.pass = false;
        verdict.clause = "fdd_distance fails monotone decrease (spearman " +
                         std::to_string(rho_fdd) + ")";
        return verdict;
    }
    const double first = rows.front()->fdd_distance;
    const double last = rows.back()->fdd_distance;
    if (!(last <= first / 4.0)) {
        verdict.pass = false;
        verdict.clause = "fdd_distance endpoint drop below factor 4 (" + std::to_string(first) +
                         " -> " + std::to_string(last) + ")";
        return verdict;
    }
    verdict.pass = true;
    verdict.clause = "d_upper decreasing implies fdd decreasing with factor-4 drop";
    return verdict;
}

Verdict verify_direction_backward(const ExperimentReport& report) {
    std::vector<std::string> warnings;
    const auto rows = usable_sequence_rows(report, &warnings);
    if (rows.size() < 4) {
        throw std::invalid_argument("verify_direction_backward: fewer than 4 usable rows");
    }
    for (const auto* row : rows) {
        if (std::isnan(row->mixing_exponent)) {
            throw std::invalid_argument("verify_direction_backward: mixing column unavailable");
        }
    }
    Verdict verdict;
    const double lambda_limit = report.rows.back().lambda1;
    double lambda_min = std::numeric_limits<double>::infinity();
    for (const auto* row : rows) lambda_min = std::min(lambda_min, row->lambda1);
    if (!(lambda_min >= 0.5 * lambda_limit)) {
        verdict.pass = false;
        verdict.clause = "spectral gap floor broken: inf lambda1 " + std::to_string(lambda_min) +
                         " < 0.5 * " + std::to_string(lambda_limit);
        return verdict;
    }
    const double rho_fdd = column_spearman(rows, &ReportRow::fdd_distance);
    if (rho_fdd <= -0.9) {
        const double first = rows.front()->d_upper;
        const double last = rows.back()->d_upper;
        if (!(last <= first / 4.0)) {
            verdict.pass = false;
            verdict.clause = "d_upper endpoint drop below factor 4 (" + std::to_string(first) +
                             " -> " + std::to_string(last) + ")";
            return verdict;
        }
    }
    verdict.pass = true;
    verdict.clause = "uniform spectral gap holds; fdd decrease implies d_upper drop";
    return verdict;
}

PathSpaceCheckReport path_space_convergence_check(const ExperimentConfig& config) {
    config.validate();
    const fs::path cache_dir = fs::path(config.out_dir) / "cache";
    fs::create_directories(cache_dir);

    PreparedSpace limit = prepare_space(config.sequence.back(), config, nullptr, cache_dir);
    std::shared_ptr<const AmbientSpace> ambient =
        limit.space->meta().ambient ? limit.space->meta().ambient->space : nullptr;
    if (!ambient) {
        throw std::invalid_argument("path_space_convergence_check: limit space lacks an ambient embedding");
    }
    const std::vector<double> grid = uniform_grid(config.path_check_dt, config.path_check_t_max);

    const PathEnsemble limit_ens =
        sample_paths(limit.model, 0, grid, config.path_check_paths, config.seed);
    FiniteMMSpace limit_paths = path_space_as_mmspace(limit_ens, config.path_check_t_max);
    const std::shared_ptr<const AmbientSpace> path_ambient = limit_paths.meta().ambient->space;

    PathSpaceCheckReport report;
    for (std::size_t i = 0; i + 1 < config.sequence.size(); ++i) {
        PreparedSpace entry = prepare_space(config.sequence[i], config, ambient, cache_dir);
        entry.start = matched_start(*entry.space, *limit.space);
        report.base_d_upper.push_back(d_distance_upper(*entry.space, *limit.space).value);
        const PathEnsemble ens =
            sample_paths(entry.model, entry.start, grid, config.path_check_paths, config.seed);
        FiniteMMSpace paths_n = rebind_ambient(
            path_space_as_mmspace(ens, config.path_check_t_max), path_ambient);
        report.path_d_upper.push_back(d_distance_upper(paths_n, limit_paths).value);
    }

    std::vector<double> idx(report.base_d_upper.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
    const double rho_base = spearman(idx, report.base_d_upper);
    if (!(rho_base <= -0.9)) {
        report.verdict.pass = true;
        report.verdict.clause = "vacuous: base d_upper not decreasing (spearman " +
                                std::to_string(rho_base) + ")";
        return report;
    }
    const double rho_path = spearman(idx, report.path_d_upper);
    report.verdict.pass = rho_path <= -0.8;
    report.verdict.clause = report.verdict.pass
                                ? "path-space transport distances decrease (spearman " +
                                      std::to_string(rho_path) + ")"
                                : "path-space distances fail to decrease (spearman " +
                                      std::to_string(rho_path) + ")";
    return report;
}

void write_report(const ExperimentReport& report, const fs::path& dir) {
    fs::create_directories(dir);
    std::ostringstream csv;
    csv << "index,n,d_upper,hausdorff,gh_distortion,gh_coverage,pushforward_gap,lambda1,"
           "fdd_distance,path_w2,tightness_slope,mixing_exponent,error\n";
    for (const auto& row : report.rows) {
        csv << row.index << "," << row.n << "," << fmt17(row.d_upper) << ","
            << fmt17(row.hausdorff) << "," << fmt17(row.gh_distortion) << ","
            << fmt17(row.gh_coverage) << "," << fmt17(row.pushforward_gap) << ","
            << fmt17(row.lambda1) << "," << fmt17(row.fdd_distance) << "," << fmt17(row.path_w2)
            << "," << fmt17(row.tightness_slope) << "," << fmt17(row.mixing_exponent) << ","
            << row.error << "\n";
    }
    atomic_write_text(dir / "report.csv", csv.str());

    json j;
    j["config_digest"] = report.config_digest;
    j["total_seconds"] = report.total_seconds;
    j["warnings"] = report.warnings;
    j["rows"] = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["index"] = row.index;
        r["n"] = row.n;
        auto put = [&](const char* key, double v) {
            if (std::isnan(v)) {
                r[key] = nullptr;
            } else {
                r[key] = v;
            }
        };
        put("d_upper", row.d_upper);
        put("hausdorff", row.hausdorff);
        put("gh_distortion", row.gh_distortion);
        put("gh_coverage", row.gh_coverage);
        put("pushforward_gap", row.pushforward_gap);
        put("lambda1", row.lambda1);
        put("fdd_distance", row.fdd_distance);
        put("path_w2", row.path_w2);
        put("tightness_slope", row.tightness_slope);
        put("mixing_exponent", row.mixing_exponent);
        r["seconds"] = row.seconds;
        r["error"] = row.error;
        j["rows"].push_back(r);
    }
    atomic_write_text(dir / "report.json", j.dump(2) + "\n");

    const std::vector<std::pair<std::string, double ReportRow::*>> columns = {
        {"d_upper", &ReportRow::d_upper},
        {"hausdorff", &ReportRow::hausdorff},
        {"gh_distortion", &ReportRow::gh_distortion},
        {"gh_coverage", &ReportRow::gh_coverage},
        {"pushforward_gap", &ReportRow::pushforward_gap},
        {"lambda1", &ReportRow::lambda1},
        {"fdd_distance", &ReportRow::fdd_distance},
        {"path_w2", &ReportRow::path_w2},
        {"tightness_slope", &ReportRow::tightness_slope},
        {"mixing_exponent", &ReportRow::mixing_exponent},
    };
    for (const auto& [name, member] : columns) {
        std::ostringstream plot;
        for (const auto& row : report.rows) {
            plot << row.index << " " << fmt17(row.*member) << "\n";
        }
        atomic_write_text(dir / "plots" / (name + ".dat"), plot.str());
    }
}

ExperimentReport read_report_json(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error(file.string() + ": cannot open");
    json j;
    in >> j;
    ExperimentReport report;
    report.config_digest = j.value("config_digest", "");
    report.total_seconds = j.value("total_seconds", 0.0);
    for (const auto& w : j.value("warnings", json::array())) {
        report.warnings.push_back(w.get<std::string>());
    }
    for (const auto& r : j.at("rows")) {
        ReportRow row;
        row.index = r.at("index").get<int>();
        row.n = r.value("n", 0);
        auto get = [&](const char* key) {
            return r.contains(key) && !r.at(key).is_null() ? r.at(key).get<double>() : kNaN;
        };
        row.d_upper = get("d_upper");
        row.hausdorff = get("hausdorff");
        row.gh_distortion = get("gh_distortion");
        row.gh_coverage = get("gh_coverage");
        row.pushforward_gap = get("pushforward_gap");
        row.lambda1 = get("lambda1");
        row.fdd_distance = get("fdd_distance");
        row.path_w2 = get("path_w2");
        row.tightness_slope = get("tightness_slope");
        row.mixing_exponent = get("mixing_exponent");
        row.seconds = r.value("seconds", 0.0);
        row.error = r.value("error", "");
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace mmlab
