#include "mmlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <vector>

extern "C" void dsyevd_(const char* jobz, const char* uplo, const int* n, double* a,
                        const int* lda, double* w, double* work, const int* lwork,
                        int* iwork, const int* liwork, int* info);

namespace mmlab {

EigenDecomposition sym_eigensolve(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("sym_eigensolve: matrix must be square");
    }
    const int n = static_cast<int>(a.rows());
    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = a;  // overwritten with eigenvectors
    if (n == 0) return out;

    int info = 0;
    int lwork = -1, liwork = -1;
    double wkopt = 0.0;
    int iwkopt = 0;
    dsyevd_("V", "L", &n, out.vectors.data(), &n, out.values.data(), &wkopt, &lwork,
            &iwkopt, &liwork, &info);
    lwork = static_cast<int>(wkopt);
    liwork = iwkopt;
    std::vector<double> work(static_cast<std::size_t>(lwork));
    std::vector<int> iwork(static_cast<std::size_t>(liwork));
    dsyevd_("V", "L", &n, out.vectors.data(), &n, out.values.data(), work.data(), &lwork,
            iwork.data(), &liwork, &info);
    if (info != 0) {
        throw std::runtime_error("sym_eigensolve: dsyevd failed, info=" + std::to_string(info));
    }
    // Deterministic sign convention: largest-magnitude entry of each column positive.
    for (int k = 0; k < n; ++k) {
        int imax = 0;
        double amax = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = std::abs(out.vectors(i, k));
            if (v > amax) {
                amax = v;
                imax = i;
            }
        }
        if (out.vectors(imax, k) < 0.0) out.vectors.col(k) = -out.vectors.col(k);
    }
    return out;
}

namespace {

double simpson_rule(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double fa, double b,
                   double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_rule(a, fa, m, fm, flm);
    const double right = simpson_rule(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = simpson_rule(a, fa, b, fb, fm);
    const double tol = std::max(std::abs(whole) * rel_tol, 1e-300);
    double result = simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 48);
    // One refinement pass with the sharper estimate as scale.
    const double tol2 = std::max(std::abs(result) * rel_tol, 1e-300);
    if (tol2 < tol) {
        result = simpson_rec(f, a, fa, b, fb, m, fm, whole, tol2, 48);
    }
    return result;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("fit_line: need equally sized nonempty samples");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("spearman: need two samples of equal size >= 2");
    }
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
        sxy += (rx[i] - mx) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::string fnv1a_hex(const void* data, std::size_t nbytes, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < nbytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

}  // namespace mmlab
