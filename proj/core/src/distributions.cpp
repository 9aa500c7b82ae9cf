#include "benchhedge/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace benchhedge {

namespace {

// Series expansion of P(a,x), valid and fast for x < a + 1.
double lower_gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 10000; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) = 1 - P(a,x), for x >= a + 1 (Lentz).
double upper_gamma_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double reg_lower_gamma(double a, double x) {
    if (a < 0.0 || x < 0.0) throw std::invalid_argument("reg_lower_gamma: negative argument");
    if (a == 0.0) return x >= 0.0 ? 1.0 : 0.0;
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return lower_gamma_series(a, x);
    return 1.0 - upper_gamma_cf(a, x);
}

double chi_square_cdf(double x, double dof) {
    if (dof < 0.0) throw std::invalid_argument("chi_square_cdf: dof must be >= 0");
    if (x < 0.0) return 0.0;
    return reg_lower_gamma(0.5 * dof, 0.5 * x);
}

double ncx2_cdf(double x, const NcChiSqParams& params, const Ncx2Options& opt) {
    const double nu = params.dof;
    const double l = params.noncentrality;
    if (nu < 0.0 || l < 0.0)
        throw std::invalid_argument("ncx2_cdf: dof and noncentrality must be >= 0");
    if (x < 0.0) return 0.0;
    if (l == 0.0) return chi_square_cdf(x, nu);
    // at the origin only the dof-0 atom contributes, with mass exp(-l/2)
    if (x == 0.0) return nu == 0.0 ? std::exp(-0.5 * l) : 0.0;

    const double m = 0.5 * l;    // Poisson mean of the mixture index
    const double hx = 0.5 * x;   // incomplete-gamma argument

    // CDF of mixture component j is P(nu/2 + j, x/2); neighbours follow from
    //   P(a+1, x) = P(a, x) - x^a e^{-x} / Gamma(a+1),
    // so each extra term costs O(1) after one seed evaluation at the mode.
    const auto gamma_cdf = [&](double a) -> double {
        if (a == 0.0) return 1.0;  // nu == 0, j == 0: unit step, and x >= 0 here
        return reg_lower_gamma(a, hx);
    };
    // x^a e^{-x} / Gamma(a+1) at a, with the recurrences t(a+1) = t(a) x/(a+1)
    // and t(a-1) = t(a) (a) / x handled by the callers below.
    const auto gamma_term = [&](double a) -> double {
        if (hx == 0.0) return a == 0.0 ? 1.0 : 0.0;
        return std::exp(a * std::log(hx) - hx - std::lgamma(a + 1.0));
    };

    const auto log_weight = [&](std::size_t j) -> double {
        return -m + static_cast<double>(j) * std::log(m) - std::lgamma(static_cast<double>(j) + 1.0);
    };

    // Expand outward from the Poisson mode so huge noncentralities do not
    // have to crawl through negligible leading weights.
    const std::size_t j0 = static_cast<std::size_t>(m);
    const double a0 = 0.5 * nu + static_cast<double>(j0);
    const double g0 = gamma_cdf(a0);
    double sum = std::exp(log_weight(j0)) * g0;
    double weight_acc = std::exp(log_weight(j0));

    double w_up = weight_acc, w_down = weight_acc;
    double g_up = g0, g_down = g0;
    double t_up = gamma_term(a0), t_down = t_up;
    std::size_t terms = 1;
    std::size_t ju = j0;
    std::size_t jd = j0;
    bool up_alive = true;
    bool down_alive = jd > 0;
    while (up_alive || down_alive) {
        if (terms > opt.max_terms)
            throw std::runtime_error("ncx2_cdf: series truncation cap exceeded");
        if (up_alive) {
            ++ju;
            const double a = 0.5 * nu + static_cast<double>(ju);
            w_up *= m / static_cast<double>(ju);
            // P(a, x) = P(a-1, x) - t(a-1), then advance t to the new a
            g_up = std::max(g_up - t_up, 0.0);
            t_up *= hx / a;
            const double contrib = w_up * g_up;
            sum += contrib;
            weight_acc += w_up;
            ++terms;
            if (w_up < opt.weight_tail || contrib < opt.rel_tol * sum) up_alive = false;
        }
        if (down_alive) {
            const double a = 0.5 * nu + static_cast<double>(jd);  // before decrement
            w_down *= static_cast<double>(jd) / m;
            --jd;
            double g;
            if (0.5 * nu + static_cast<double>(jd) == 0.0) {
                g = 1.0;  // unit step component
            } else {
                t_down *= a / hx;  // t at a-1
                g_down = std::min(g_down + t_down, 1.0);
                g = g_down;
            }
            const double contrib = w_down * g;
            sum += contrib;
            weight_acc += w_down;
            ++terms;
            if (jd == 0 || w_down < opt.weight_tail || contrib < opt.rel_tol * sum)
                down_alive = false;
        }
        if (weight_acc >= 1.0 - opt.weight_tail) break;
    }
    return std::min(sum, 1.0);
}

double ncx2_sample(const NcChiSqParams& params, RngStream& stream) {
    const double nu = params.dof;
    const double l = params.noncentrality;
    if (nu < 0.0 || l < 0.0)
        throw std::invalid_argument("ncx2_sample: dof and noncentrality must be >= 0");
    if (nu == 0.0 && l == 0.0)
        throw std::invalid_argument("ncx2_sample: both parameters zero");
    if (nu >= 1.0) {
        // One squared shifted normal soaks up the noncentrality.
        const double n = stream.normal() + std::sqrt(l);
        return stream.chi_square(nu - 1.0) + n * n;
    }
    // 0 <= nu < 1: Poisson mixture over central chi-squares.
    const std::uint64_t j = (l > 0.0) ? stream.poisson(0.5 * l) : 0;
    return stream.chi_square(nu + 2.0 * static_cast<double>(j));
}

}  // namespace benchhedge
