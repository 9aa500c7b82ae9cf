#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>

#include "benchhedge/path_bundle.hpp"
#include "benchhedge/rng.hpp"
#include "benchhedge/time_grid.hpp"

namespace benchhedge {

// Reserved per-path stream lanes so that every consumer of randomness gets an
// independent, order-insensitive stream for the same (seed, path).
enum class StreamLane : std::uint64_t {
    Main = 0,      // model drivers (W, and the scaling driver)
    Orthogonal = 1,  // the residual driver orthogonal to W
    Default = 2,   // default-time clock
    Aux = 3,
};
RngStream stream_for(std::uint64_t master_seed, std::size_t path, StreamLane lane);

// Growth-optimal-market model where the discounted benchmark drift is
// alpha_t = (dim/2 - 1)^2 * gamma_t * Z_t^{(dim-4)/2} for a squared Bessel
// factor Z of dimension dim > 2 and a scaling diffusion gamma.
struct MmmRandomScalingParams {
    double bessel_dim = 4.0;  // Bessel dimension of Z, must stay > 2
    double z0 = 1.0;
    double gamma0 = 1.0;
    std::function<double(double, double)> gamma_drift;      // a(t, gamma)
    std::function<double(double, double)> gamma_diffusion;  // b(t, gamma)
    double rho = 0.0;  // correlation of the scaling driver with W
    double r = 0.0;    // constant short rate

    void validate() const;
};

// Deterministic exponential drift alpha_t = alpha0 * exp(beta t); Z is then a
// squared Bessel process of dimension 4 in the clock
//   s(t) = (alpha0 / (4 beta)) (exp(beta t) - 1),
// which admits exact transition sampling.
struct StylizedMmmParams {
    double alpha0 = 0.05;
    double beta = 0.05;
    double r = 0.0;
    double z0 = 1.0;

    void validate() const;
    double alpha(double t) const;
    double clock(double t) const;
    double clock_increment(double t1, double t2) const;
    // f(t) = 2 beta / (alpha0 (exp(beta T) - exp(beta t))), the bond exponent.
    double f(double t, double maturity) const;
};

// Flat-coefficient benchmarked submarket: constant market price of risk and
// constant volatility rows. The scaling reduction gamma_t = |theta|^2 Z_t
// turns the benchmarked savings account into a geometric Brownian motion and
// makes its conditional expectation process coincide with itself, so the
// traded "bond" channel equals s_hat_0. Useful as a fixture where hedging
// formulas have constant coefficients and as a true-martingale control.
struct GbmConstThetaParams {
    std::array<double, 2> theta{0.2, 0.1};
    std::array<std::array<double, 2>, 2> vols{{{0.25, 0.0}, {0.05, 0.3}}};
    double s_hat_0_0 = 1.0;
    std::array<double, 2> s_hat_j_0{1.0, 1.0};

    void validate() const;
};

// Solves b * theta = a - r 1 for the market price of risk; throws when the
// volatility matrix is singular or has condition number above 1e12.
std::array<double, 2> market_price_of_risk(const std::array<std::array<double, 2>, 2>& vol,
                                           const std::array<double, 2>& appreciation, double r);

enum class StylizedScheme { ExactBesq, EulerFullTruncation };

// Joint Euler (full truncation) simulation of (Z, gamma). Adds channels
// Z, gamma, alpha, discounted_np, s_hat_0 (levels) and dW, dW_tilde
// (increments). discounted_np is derived algebraically from Z so the scaling
// identity holds at every node.
PathBundle simulate_random_scaling_mmm(const MmmRandomScalingParams& params, const TimeGrid& grid,
                                       std::size_t n_paths, std::uint64_t seed);

// Stylized model: exact squared-Bessel transitions in the drift clock (or the
// Euler oracle for cross-checks). Channels as above plus gamma == alpha; dW
// is reconstructed from the Z increments in exact mode.
PathBundle simulate_stylized_mmm(const StylizedMmmParams& params, const TimeGrid& grid,
                                 std::size_t n_paths, std::uint64_t seed,
                                 StylizedScheme scheme = StylizedScheme::ExactBesq);

// Flat-theta fixture: s_hat_0 is an exact geometric Brownian motion with
// volatility -|theta|, P_hat duplicates it, and theta channels are constant.
PathBundle simulate_gbm_const_theta(const GbmConstThetaParams& params, const TimeGrid& grid,
                                    std::size_t n_paths, std::uint64_t seed);

// theta_t = sqrt(alpha_t * s_hat_0_t) * direction (the total market price of
// risk implied by the benchmark drift), with a constant unit direction.
void add_theta_from_model(PathBundle& bundle, const std::array<double, 2>& direction);

void add_constant_theta(PathBundle& bundle, const std::array<double, 2>& theta);

// Independent residual-driver increments dW_perp from the Orthogonal lane.
void add_orthogonal_increments(PathBundle& bundle, std::uint64_t seed);

// Combined driver and its orthogonal complement from component drivers:
//   dW = (theta1 dW1 + theta2 dW2)/|theta|,  dW_perp = (theta2 dW1 - theta1 dW2)/|theta|.
// Errors if |theta| vanishes at a used node (reports path and node).
void orthogonal_drivers(PathBundle& bundle);

// Inverse rotation: reconstructs dW1, dW2 from dW, dW_perp and theta.
void driver_components(PathBundle& bundle);

// Benchmarked primary security accounts s_hat_1, s_hat_2 integrated in the
// (dW, dW_perp) frame by log-Euler, which keeps them strictly positive:
//   d log s_hat_j = (c1 dW + c2 dW_perp) - (c1^2 + c2^2)/2 dt,
//   c1 = u . b_j - |theta|,   c2 = u_perp . b_j,   u = theta/|theta|.
void simulate_primary_accounts(PathBundle& bundle,
                               const std::array<std::array<double, 2>, 2>& vols,
                               const std::array<double, 2>& s0);

}  // namespace benchhedge
