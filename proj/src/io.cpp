#include "mmlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmlab {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail_at(const fs::path& path, int line, const std::string& message) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + message);
}

struct LineReader {
    std::ifstream in;
    fs::path path;
    int line_no = 0;

    explicit LineReader(const fs::path& p) : in(p), path(p) {
        if (!in) throw std::runtime_error(p.string() + ": cannot open");
    }

    bool next(std::string& line) {
        if (!std::getline(in, line)) return false;
        ++line_no;
        return true;
    }

    std::string expect(const std::string& what) {
        std::string line;
        if (!next(line)) fail_at(path, line_no + 1, "unexpected end of file, expected " + what);
        return line;
    }
};

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void atomic_write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(tmp.string() + ": cannot open for writing");
        out << content;
        if (!out.good()) throw std::runtime_error(tmp.string() + ": write failed");
    }
    fs::rename(tmp, path);
}

void write_space(const FiniteMMSpace& space, const fs::path& path) {
    std::ostringstream out;
    const int n = space.size();
    out << "mmspace 1\n";
    out << "n " << n << "\n";
    out << "K " << fmt17(space.meta().curvature_bound) << "\n";
    out << "N_dim " << fmt17(space.meta().dim_bound) << "\n";
    out << "D " << fmt17(space.meta().diameter_bound) << "\n";
    out << "label " << space.meta().label << "\n";
    out << "dist\n";
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < i; ++j) out << (j ? " " : "") << fmt17(space.dist(i, j));
        out << "\n";
    }
    out << "weight\n";
    for (int i = 0; i < n; ++i) out << (i ? " " : "") << fmt17(space.weight(i));
    out << "\n";
    atomic_write_text(path, out.str());
}

FiniteMMSpace read_space(const fs::path& path) {
    LineReader reader(path);
    std::string line = reader.expect("header");
    if (line != "mmspace 1") fail_at(path, reader.line_no, "bad header, expected 'mmspace 1'");

    int n = 0;
    SpaceMeta meta;
    {
        std::istringstream ls(reader.expect("n"));
        std::string key;
        if (!(ls >> key >> n) || key != "n" || n < 1) fail_at(path, reader.line_no, "bad n line");
    }
    auto read_scalar = [&](const std::string& name, double& target) {
        std::istringstream ls(reader.expect(name));
        std::string key;
        if (!(ls >> key >> target) || key != name) {
            fail_at(path, reader.line_no, "bad " + name + " line");
        }
    };
    read_scalar("K", meta.curvature_bound);
    read_scalar("N_dim", meta.dim_bound);
    read_scalar("D", meta.diameter_bound);
    {
        line = reader.expect("label");
        if (line.rfind("label", 0) != 0) fail_at(path, reader.line_no, "bad label line");
        meta.label = line.size() > 6 ? line.substr(6) : "";
    }
    if (reader.expect("dist") != "dist") fail_at(path, reader.line_no, "expected 'dist'");

    Matrix dist = Matrix::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        std::istringstream ls(reader.expect("dist row"));
        for (int j = 0; j < i; ++j) {
            double v = 0.0;
            if (!(ls >> v)) {
                fail_at(path, reader.line_no,
                        "dist row " + std::to_string(i) + " needs " + std::to_string(i) + " entries");
            }
            dist(i, j) = dist(j, i) = v;
        }
        double extra;
        if (ls >> extra) fail_at(path, reader.line_no, "dist row has trailing entries");
    }
    if (reader.expect("weight") != "weight") fail_at(path, reader.line_no, "expected 'weight'");
    Vector weight(n);
    {
        std::istringstream ls(reader.expect("weight row"));
        for (int i = 0; i < n; ++i) {
            if (!(ls >> weight(i))) fail_at(path, reader.line_no, "weight row too short");
        }
    }
    const int weight_line = reader.line_no;
    try {
        return FiniteMMSpace(std::move(dist), std::move(weight), std::move(meta));
    } catch (const std::invalid_argument& ex) {
        fail_at(path, weight_line, ex.what());
    }
}

void write_coupling(const Coupling& coupling, const fs::path& path) {
    std::ostringstream out;
    out << "mmcoupling 1\n";
    out << "n1 " << coupling.mu.size() << "\n";
    out << "n2 " << coupling.nu.size() << "\n";
    out << "mu";
    for (int i = 0; i < coupling.mu.size(); ++i) out << " " << fmt17(coupling.mu(i));
    out << "\nnu";
    for (int j = 0; j < coupling.nu.size(); ++j) out << " " << fmt17(coupling.nu(j));
    out << "\nq\n";
    for (int i = 0; i < coupling.q.rows(); ++i) {
        for (int j = 0; j < coupling.q.cols(); ++j) out << (j ? " " : "") << fmt17(coupling.q(i, j));
        out << "\n";
    }
    atomic_write_text(path, out.str());
}

Coupling read_coupling(const fs::path& path) {
    LineReader reader(path);
    if (reader.expect("header") != "mmcoupling 1") {
        fail_at(path, reader.line_no, "bad header, expected 'mmcoupling 1'");
    }
    int n1 = 0, n2 = 0;
    std::string key;
    {
        std::istringstream ls(reader.expect("n1"));
        if (!(ls >> key >> n1) || key != "n1" || n1 < 1) fail_at(path, reader.line_no, "bad n1");
    }
    {
        std::istringstream ls(reader.expect("n2"));
        if (!(ls >> key >> n2) || key != "n2" || n2 < 1) fail_at(path, reader.line_no, "bad n2");
    }
    Coupling out;
    out.mu.resize(n1);
    out.nu.resize(n2);
    {
        std::istringstream ls(reader.expect("mu"));
        if (!(ls >> key) || key != "mu") fail_at(path, reader.line_no, "bad mu");
        for (int i = 0; i < n1; ++i) {
            if (!(ls >> out.mu(i))) fail_at(path, reader.line_no, "mu row too short");
        }
    }
    {
        std::istringstream ls(reader.expect("nu"));
        if (!(ls >> key) || key != "nu") fail_at(path, reader.line_no, "bad nu");
        for (int j = 0; j < n2; ++j) {
            if (!(ls >> out.nu(j))) fail_at(path, reader.line_no, "nu row too short");
        }
    }
    if (reader.expect("q") != "q") fail_at(path, reader.line_no, "expected 'q'");
    out.q.resize(n1, n2);
    for (int i = 0; i < n1; ++i) {
        std::istringstream ls(reader.expect("q row"));
        for (int j = 0; j < n2; ++j) {
            if (!(ls >> out.q(i, j))) fail_at(path, reader.line_no, "q row too short");
        }
    }
    const int q_line = reader.line_no;
    try {
        out.validate(1e-10);
    } catch (const std::invalid_argument& ex) {
        fail_at(path, q_line, ex.what());
    }
    return out;
}

void write_ensemble(const PathEnsemble& ensemble, const fs::path& path) {
    std::ostringstream out;
    out << "mmensemble 1\n";
    out << "seed " << ensemble.seed << "\n";
    out << "start " << ensemble.start << "\n";
    out << "model_hash " << ensemble.model_hash << "\n";
    out << "M " << ensemble.n_paths() << "\n";
    out << "grid";
    for (const double t : ensemble.time_grid) out << " " << fmt17(t);
    out << "\npaths\n";
    for (int p = 0; p < ensemble.paths.rows(); ++p) {
        for (int j = 0; j < ensemble.paths.cols(); ++j) {
            out << (j ? " " : "") << ensemble.paths(p, j);
        }
        out << "\n";
    }
    atomic_write_text(path, out.str());
}

PathEnsemble read_ensemble(const fs::path& path, std::shared_ptr<const SpectralHeatModel> model) {
    LineReader reader(path);
    if (reader.expect("header") != "mmensemble 1") {
        fail_at(path, reader.line_no, "bad header, expected 'mmensemble 1'");
    }
    PathEnsemble out;
    out.model = model;
    std::string key;
    {
        std::istringstream ls(reader.expect("seed"));
        if (!(ls >> key >> out.seed) || key != "seed") fail_at(path, reader.line_no, "bad seed");
    }
    {
        std::istringstream ls(reader.expect("start"));
        if (!(ls >> key >> out.start) || key != "start") fail_at(path, reader.line_no, "bad start");
    }
    {
        std::istringstream ls(reader.expect("model_hash"));
        if (!(ls >> key >> out.model_hash) || key != "model_hash") {
            fail_at(path, reader.line_no, "bad model_hash");
        }
        if (model && out.model_hash != model->space_hash()) {
            fail_at(path, reader.line_no, "ensemble was sampled from a different space (hash " +
                                              out.model_hash + " != " + model->space_hash() + ")");
        }
    }
    int m = 0;
    {
        std::istringstream ls(reader.expect("M"));
        if (!(ls >> key >> m) || key != "M" || m < 1) fail_at(path, reader.line_no, "bad M");
    }
    {
        std::istringstream ls(reader.expect("grid"));
        if (!(ls >> key) || key != "grid") fail_at(path, reader.line_no, "bad grid");
        double t;
        while (ls >> t) out.time_grid.push_back(t);
        if (out.time_grid.empty()) fail_at(path, reader.line_no, "empty grid");
    }
    if (reader.expect("paths") != "paths") fail_at(path, reader.line_no, "expected 'paths'");
    out.paths.resize(m, static_cast<int>(out.time_grid.size()));
    for (int p = 0; p < m; ++p) {
        std::istringstream ls(reader.expect("path row"));
        for (int j = 0; j < out.paths.cols(); ++j) {
            if (!(ls >> out.paths(p, j))) fail_at(path, reader.line_no, "path row too short");
        }
    }
    return out;
}

void write_spectra(const SpectralHeatModel& model, const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(tmp.string() + ": cannot open for writing");
        const std::string magic = "MMSPEC1";
        out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
        const std::string& hash = model.space_hash();
        const std::uint32_t hash_len = static_cast<std::uint32_t>(hash.size());
        out.write(reinterpret_cast<const char*>(&hash_len), sizeof(hash_len));
        out.write(hash.data(), hash_len);
        const std::int32_t n = model.size();
        out.write(reinterpret_cast<const char*>(&n), sizeof(n));
        const double bw = model.bandwidth();
        out.write(reinterpret_cast<const char*>(&bw), sizeof(bw));
        out.write(reinterpret_cast<const char*>(model.eigenvalues().data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(n)));
        out.write(reinterpret_cast<const char*>(model.eigenvectors().data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(n) *
                                                static_cast<std::size_t>(n)));
        if (!out.good()) throw std::runtime_error(tmp.string() + ": write failed");
    }
    fs::rename(tmp, path);
}

SpectralHeatModel read_spectra(const fs::path& path, std::shared_ptr<const FiniteMMSpace> space) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::string magic(7, '\0');
    in.read(magic.data(), 7);
    if (magic != "MMSPEC1") throw std::runtime_error(path.string() + ": bad magic");
    std::uint32_t hash_len = 0;
    in.read(reinterpret_cast<char*>(&hash_len), sizeof(hash_len));
    if (hash_len > 64) throw std::runtime_error(path.string() + ": corrupt hash length");
    std::string hash(hash_len, '\0');
    in.read(hash.data(), hash_len);
    if (!space) throw std::invalid_argument("read_spectra: null space");
    if (hash != space->hash()) {
        throw std::runtime_error(path.string() + ": spectra hash " + hash +
                                 " does not match the space hash " + space->hash());
    }
    std::int32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (n != space->size()) throw std::runtime_error(path.string() + ": size mismatch");
    double bw = 0.0;
    in.read(reinterpret_cast<char*>(&bw), sizeof(bw));
    Vector values(n);
    Matrix vectors(n, n);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(n)));
    in.read(reinterpret_cast<char*>(vectors.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(n) *
                                          static_cast<std::size_t>(n)));
    if (!in.good()) throw std::runtime_error(path.string() + ": truncated spectra file");
    return SpectralHeatModel(std::move(space), std::move(values), std::move(vectors), bw);
}

}  // namespace mmlab
