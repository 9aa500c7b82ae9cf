#pragma once

#include <functional>
#include <string>
#include <vector>

#include "benchhedge/models.hpp"
#include "benchhedge/path_bundle.hpp"
#include "benchhedge/stats.hpp"

namespace benchhedge {

struct BondQuote {
    double t = 0.0;
    double T = 0.0;
    double p_hat = 0.0;  // benchmarked price of the unit zero coupon bond
    double f_t = 0.0;    // exponent scale f(t)
};

// Conditional expectation of the terminal benchmarked savings account,
//   E_t[s_hat_0(T)] = (1 - exp(-f(t)/s_hat_0)) * s_hat_0,
// the closed form implied by the exact squared-Bessel transition. Strictly
// below s_hat_0: the benchmarked savings account loses mass.
double benchmarked_savings_forward(double t, double s_hat_0, const StylizedMmmParams& params,
                                   double maturity);

// Benchmarked zero coupon bond E_t[1/S*_T] in the stylized model; equals the
// savings forward discounted by exp(-r T). Throws if t >= T.
BondQuote zcb_price(double t, double s_hat_0, const StylizedMmmParams& params, double maturity);

// Terms of the closed-form benchmarked put. d1 is the evaluation level of the
// chi-square CDFs and l2 the noncentrality of the terminal transition law:
//   d1 = K / ds,   l2 = Z_t / ds,   ds = clock(T) - clock(t).
struct PutClosedFormTerms {
    double d1 = 0.0;
    double l2 = 0.0;
    double strike = 0.0;
    double maturity = 0.0;
};

PutClosedFormTerms put_terms(double t, double strike, double s_hat_0,
                             const StylizedMmmParams& params, double maturity);

// Benchmarked put on the benchmark index, E_t[(K * s_hat_0(T) - 1)^+]:
//   p = K s_hat_0 [Z2(d1; 0, l2) - exp(-l2/2)] - Z2(d1; 4, l2).
// Derived from the exact transition law; satisfies the K -> 0 and K -> inf
// limits and is confirmed against Monte Carlo in the tests.
double put_price(double t, double strike, double s_hat_0, const StylizedMmmParams& params,
                 double maturity);

// ---------------------------------------------------------------------------
// Monte Carlo real-world pricing

using PayoffFn = std::function<double(const PathBundle&, std::size_t path)>;

struct McPriceResult {
    double estimate = 0.0;
    double stderr_mean = 0.0;
    double kurtosis = 0.0;
    bool heavy_tails = false;  // fourth-moment ratio above 100
    std::vector<double> conditional;  // per-path conditional estimates (t > 0)
    bool rank_deficient = false;
};

// Monomial basis (total degree <= degree, constant term included) in the
// named channels at one node; returns row-major n_paths x n_features.
std::vector<double> polynomial_basis(const PathBundle& bundle, std::size_t node,
                                     const std::vector<std::string>& channels, unsigned degree,
                                     std::size_t* n_features);

// Conditional-expectation estimate of a terminal payoff. At node 0 this is
// the plain Monte Carlo mean; at later nodes a least-squares regression on a
// polynomial basis of the given state channels.
McPriceResult real_world_price_mc(const PayoffFn& payoff, const PathBundle& paths,
                                  std::size_t t_index,
                                  const std::vector<std::string>& state_channels = {},
                                  unsigned basis_degree = 3);

// ---------------------------------------------------------------------------
// Default overlay

// Recovery payout fraction as a function of the (capped) default time.
class Recovery {
public:
    static Recovery constant(double value);
    // values[i] applies on [times[i-1], times[i]); values.back() beyond.
    static Recovery piecewise(std::vector<double> times, std::vector<double> values);
    static Recovery general(std::function<double(double)> fn);

    double operator()(double t) const;
    bool analytic() const { return kind_ != Kind::General; }

    // integral over [a, b] of h(s) * lambda * exp(-lambda (s - a0)) ds
    double weighted_integral(double a, double b, double lambda, double a0) const;

private:
    enum class Kind { Constant, Piecewise, General };
    Kind kind_ = Kind::Constant;
    double value_ = 1.0;
    std::vector<double> times_;
    std::vector<double> values_;
    std::function<double(double)> fn_;
};

struct DefaultModel {
    double lambda = 0.0;  // constant intensity
    Recovery recovery = Recovery::constant(1.0);

    double survival(double t) const;  // P(tau > t) = exp(-lambda t)
    double cdf(double t) const { return 1.0 - survival(t); }
};

// Samples exact default times (exponential, independent of all Wiener lanes)
// and the indicator channel D on the grid. tau is stored per path; paths that
// never default carry +infinity.
void default_times(const DefaultModel& model, PathBundle& bundle, std::uint64_t seed);

// Conditional expectation Psi_t = E_t[1 + (h(tau ^ T) - 1) D_T]:
// h(tau) after default, survival-weighted recovery integral before. Adds the
// "Psi" channel.
void psi_process(const DefaultModel& model, PathBundle& bundle, double maturity);

// Pre-default closed form of Psi (the value on {tau > t}).
double psi_survival_value(const DefaultModel& model, double t, double maturity);

// Max absolute gap, over all paths and nodes, between the Psi channel and its
// compensated-jump integral representation
//   Psi_t = Psi_0 + int_(0,t] (g_tilde(s) - (1-F_T)/(1-F_s)) dQ_s,
// evaluated with the exact jump time. Requires the Psi channel.
double psi_representation_residual(const DefaultModel& model, const PathBundle& bundle,
                                   double maturity);

// Benchmarked defaultable put: default-free price times Psi_t.
double defaultable_put_price(double t, double strike, double s_hat_0,
                             const StylizedMmmParams& params, const DefaultModel& model,
                             double psi_t, double maturity);

}  // namespace benchhedge
