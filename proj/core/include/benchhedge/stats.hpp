#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace benchhedge {

// Pairwise (cascade) summation; order-fixed, so results do not depend on the
// number of worker threads that produced the inputs.
double pairwise_sum(std::span<const double> values);

struct MeanStats {
    double mean = 0.0;
    double stderr_mean = 0.0;  // standard error of the mean
    double variance = 0.0;     // unbiased sample variance
    std::size_t n = 0;
};

MeanStats mean_stats(std::span<const double> values);

// Fourth-moment ratio m4 / m2^2; large values flag payoffs whose empirical
// variance is unstable.
double sample_kurtosis(std::span<const double> values);

// One-sample Kolmogorov-Smirnov distance between an empirical sample and a
// reference CDF evaluated by `cdf`.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);

// Ordinary least squares y ~ X beta via normal equations with optional ridge
// fallback when the Gram matrix is numerically rank deficient.
struct LeastSquaresResult {
    std::vector<double> coef;
    bool rank_deficient = false;
    double ridge_used = 0.0;
};

LeastSquaresResult least_squares(const std::vector<double>& x_rowmajor, std::size_t n_rows,
                                 std::size_t n_cols, std::span<const double> y,
                                 double ridge_on_failure = 1e-8);

// Solve the symmetric PSD system A x = b by least-norm pseudo-inverse (Jacobi
// eigendecomposition). Reports rank and whether b had a component outside the
// range of A (relative to `tol`).
struct SymSolveResult {
    std::vector<double> x;
    std::size_t rank = 0;
    bool consistent = true;   // b in range(A) up to tol
    double residual = 0.0;    // |A x - b|_inf
};

SymSolveResult solve_sym_psd_least_norm(std::vector<double> a, std::span<const double> b,
                                        double tol = 1e-12);

// Slope of the least-squares line y = a + b x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace benchhedge
