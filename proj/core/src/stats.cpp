#include "benchhedge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "benchhedge/parallel.hpp"

namespace benchhedge {

unsigned& worker_threads() {
    static unsigned n = 0;
    return n;
}

double pairwise_sum(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    if (n <= 16) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

MeanStats mean_stats(std::span<const double> values) {
    MeanStats out;
    out.n = values.size();
    if (out.n == 0) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(out.n);
    if (out.n < 2) return out;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    out.variance = pairwise_sum(sq) / static_cast<double>(out.n - 1);
    out.stderr_mean = std::sqrt(out.variance / static_cast<double>(out.n));
    return out;
}

double sample_kurtosis(std::span<const double> values) {
    const auto ms = mean_stats(values);
    if (ms.n < 2 || ms.variance == 0.0) return 0.0;
    std::vector<double> q(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - ms.mean;
        q[i] = d * d * d * d;
    }
    const double m4 = pairwise_sum(q) / static_cast<double>(ms.n);
    const double m2 = ms.variance * static_cast<double>(ms.n - 1) / static_cast<double>(ms.n);
    return m4 / (m2 * m2);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    }
    return d;
}

double ks_distance_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

namespace {

// Cholesky of a symmetric matrix stored row-major; returns false if a pivot
// is not safely positive.
bool cholesky_in_place(std::vector<double>& a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (!(s > 0.0) || !std::isfinite(s)) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    }
    return true;
}

void cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k];
        x[i] = s / l[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x[k];
        x[ii] = s / l[ii * n + ii];
    }
}

}  // namespace

LeastSquaresResult least_squares(const std::vector<double>& x_rowmajor, std::size_t n_rows,
                                 std::size_t n_cols, std::span<const double> y,
                                 double ridge_on_failure) {
    if (x_rowmajor.size() != n_rows * n_cols || y.size() != n_rows)
        throw std::invalid_argument("least_squares: shape mismatch");
    if (n_cols == 0) throw std::invalid_argument("least_squares: no regressors");

    // X'X and X'y with a deterministic parallel partial reduction.
    const unsigned nt = std::max(1u, worker_threads() == 0 ? 1u : worker_threads());
    const std::size_t blocks = std::min<std::size_t>(nt, std::max<std::size_t>(1, n_rows / 1024));
    std::vector<std::vector<double>> gram_parts(blocks, std::vector<double>(n_cols * n_cols, 0.0));
    std::vector<std::vector<double>> rhs_parts(blocks, std::vector<double>(n_cols, 0.0));
    const std::size_t chunk = (n_rows + blocks - 1) / blocks;
    parallel_for(blocks, static_cast<unsigned>(blocks), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            auto& g = gram_parts[b];
            auto& r = rhs_parts[b];
            const std::size_t lo = b * chunk;
            const std::size_t hi = std::min(n_rows, lo + chunk);
            for (std::size_t row = lo; row < hi; ++row) {
                const double* xr = x_rowmajor.data() + row * n_cols;
                for (std::size_t i = 0; i < n_cols; ++i) {
                    const double xi = xr[i];
                    if (xi == 0.0) continue;
                    for (std::size_t j = i; j < n_cols; ++j) g[i * n_cols + j] += xi * xr[j];
                    r[i] += xi * y[row];
                }
            }
        }
    });
    std::vector<double> gram(n_cols * n_cols, 0.0);
    std::vector<double> rhs(n_cols, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t k = 0; k < gram.size(); ++k) gram[k] += gram_parts[b][k];
        for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += rhs_parts[b][k];
    }
    for (std::size_t i = 0; i < n_cols; ++i)
        for (std::size_t j = 0; j < i; ++j) gram[i * n_cols + j] = gram[j * n_cols + i];

    LeastSquaresResult out;
    out.coef = rhs;
    std::vector<double> chol = gram;
    if (cholesky_in_place(chol, n_cols)) {
        cholesky_solve(chol, n_cols, out.coef);
        return out;
    }
    // Rank-deficient design: retry with a small ridge on the diagonal.
    out.rank_deficient = true;
    out.ridge_used = ridge_on_failure;
    double scale = 0.0;
    for (std::size_t i = 0; i < n_cols; ++i) scale = std::max(scale, gram[i * n_cols + i]);
    if (scale == 0.0) scale = 1.0;
    chol = gram;
    for (std::size_t i = 0; i < n_cols; ++i) chol[i * n_cols + i] += ridge_on_failure * scale;
    if (!cholesky_in_place(chol, n_cols))
        throw std::runtime_error("least_squares: ridge-regularized system still singular");
    out.coef = rhs;
    cholesky_solve(chol, n_cols, out.coef);
    return out;
}

SymSolveResult solve_sym_psd_least_norm(std::vector<double> a, std::span<const double> b,
                                        double tol) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw std::invalid_argument("solve_sym_psd_least_norm: shape mismatch");
    // Jacobi eigendecomposition; matrices here are tiny (assets on a tree).
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-300) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::fabs(apq) < 1e-300) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p];
                    const double vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<double> eig(n);
    double eig_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        eig[i] = a[i * n + i];
        eig_max = std::max(eig_max, std::fabs(eig[i]));
    }
    const double cutoff = (eig_max > 0.0 ? eig_max : 1.0) * tol;

    SymSolveResult out;
    out.x.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double proj = 0.0;
        for (std::size_t k = 0; k < n; ++k) proj += v[k * n + i] * b[k];
        if (std::fabs(eig[i]) > cutoff) {
            ++out.rank;
            const double coef = proj / eig[i];
            for (std::size_t k = 0; k < n; ++k) out.x[k] += coef * v[k * n + i];
        } else if (std::fabs(proj) > tol * (1.0 + eig_max)) {
            out.consistent = false;  // b leaks into the null space
        }
    }
    // Residual check against the original operator (reconstructed).
    for (std::size_t i = 0; i < n; ++i) {
        double ax = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double aik = 0.0;
            for (std::size_t m = 0; m < n; ++m) aik += v[i * n + m] * eig[m] * v[k * n + m];
            ax += aik * out.x[k];
        }
        out.residual = std::max(out.residual, std::fabs(ax - b[i]));
    }
    return out;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: bad input");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace benchhedge
