#pragma once

#include "benchhedge/rng.hpp"

namespace benchhedge {

// Parameters of the non-central chi-square law. dof == 0 is allowed and puts
// an atom of mass exp(-noncentrality/2) at zero; the pricing formulas rely on
// that atom explicitly.
struct NcChiSqParams {
    double dof = 0.0;            // nu
    double noncentrality = 0.0;  // l
};

struct Ncx2Options {
    double rel_tol = 1e-12;          // relative truncation tolerance of the series
    double weight_tail = 1e-14;      // stop once Poisson mass >= 1 - weight_tail
    std::size_t max_terms = 1000000; // hard cap; exceeding it is an error
};

// Regularized lower incomplete gamma P(a, x). P(0, x) is the unit step at 0.
double reg_lower_gamma(double a, double x);

// CDF of the central chi-square with real dof >= 0 (dof == 0: unit step at 0).
double chi_square_cdf(double x, double dof);

// CDF of the non-central chi-square, evaluated as the Poisson mixture of
// central chi-square CDFs,
//   Z2(x; nu, l) = sum_j  Pois(j; l/2) * ChiSqCdf(x; nu + 2j),
// expanded outward from the Poisson mode. For nu == 0 the j = 0 term is the
// unit step at 0, so ncx2_cdf(0, {0, l}) == exp(-l/2) exactly.
double ncx2_cdf(double x, const NcChiSqParams& params, const Ncx2Options& opt = {});

// Exact draw from the non-central chi-square law. Requires dof > 0 or
// noncentrality > 0.
double ncx2_sample(const NcChiSqParams& params, RngStream& stream);

}  // namespace benchhedge
