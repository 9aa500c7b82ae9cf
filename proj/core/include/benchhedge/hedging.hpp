#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "benchhedge/path_bundle.hpp"
#include "benchhedge/pricing.hpp"

namespace benchhedge {

// Predictable holdings: holdings[k][p * n_steps + i] is the position in
// instrument k over the step (t_i, t_{i+1}], evaluated from node-i values
// only. Builders in this module enforce that by construction.
struct Strategy {
    std::vector<std::string> instruments;  // channel names in the bundle
    std::vector<std::vector<double>> holdings;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;

    double& at(std::size_t instrument, std::size_t path, std::size_t step) {
        return holdings[instrument][path * n_steps + step];
    }
    double at(std::size_t instrument, std::size_t path, std::size_t step) const {
        return holdings[instrument][path * n_steps + step];
    }
};

struct CostProcess {
    std::vector<double> cost;  // n_paths x n_nodes, path-major
    std::size_t n_paths = 0;
    std::size_t n_nodes = 0;
    double risk0 = 0.0;  // E[(C_T - C_0)^2]

    double at(std::size_t path, std::size_t node) const { return cost[path * n_nodes + node]; }
};

struct DecompositionResult {
    double h0 = 0.0;
    Strategy integrand;
    std::vector<double> residual_terminal;  // L_T per path
    std::vector<double> residual_path;      // n_paths x n_nodes cumulative residual
    bool rank_deficient = false;
    std::size_t n_nodes = 0;
};

// Diffusion coefficient of the stylized benchmarked bond, d P_hat = psi dW:
//   psi = -P_hat(t,T) (s0 - f e^{-f/s0} / (1 - e^{-f/s0})) sqrt(alpha_t / s0).
double psi_integrand_stylized(double t, double s_hat_0, const StylizedMmmParams& params,
                              double maturity);

// Bond leg of the orthogonal decomposition of a benchmarked account:
//   eta = (s_hat_j / psi) (theta . b_row / |theta| - |theta|).
// Throws when psi or |theta| vanish.
double eta_strategy(double s_hat_j, const std::array<double, 2>& theta,
                    const std::array<double, 2>& vol_row, double psi);

// Residual-driver coefficient:
//   nu = (s_hat_j / |theta|) (theta2 b1 - theta1 b2).
double nu_residual(double s_hat_j, const std::array<double, 2>& theta,
                   const std::array<double, 2>& vol_row);

// Stylized closed form of eta; s_hat_0 is recovered from |theta|^2 / alpha_t,
// which is exactly the relation that makes this equal eta_strategy applied to
// psi_integrand_stylized.
double eta_strategy_stylized(double s_hat_j, const std::array<double, 2>& theta,
                             const std::array<double, 2>& vol_row, double t,
                             const StylizedMmmParams& params, double maturity);

// Appends the stylized bond channel P_hat(t_i, T) evaluated on s_hat_0; the
// terminal node carries the continuity limit exp(-rT) s_hat_0(T).
void add_bond_channel(PathBundle& bundle, const StylizedMmmParams& params, double maturity);

// Per-node (eta, nu) holdings for hedging s_hat_j with the bond and the
// residual driver, all coefficients evaluated at the left node.
Strategy stylized_gkw_strategy(const PathBundle& bundle, int j,
                               const std::array<double, 2>& vol_row,
                               const StylizedMmmParams& params, double maturity);

// Same construction in the flat-theta submarket, where the bond channel is
// the benchmarked savings account itself and psi = -|theta| s_hat_0.
Strategy gbm_gkw_strategy(const PathBundle& bundle, int j, const std::array<double, 2>& theta,
                          const std::array<double, 2>& vol_row);

// Terminal value of h0 + sum of holdings . instrument increments, per path.
std::vector<double> replicate_terminal(const PathBundle& bundle, const Strategy& strategy,
                                       double h0);

// Benchmarked cost C_t = V_t - sum_{s<t} holdings . dInstrument. `value` is a
// level channel name holding the portfolio value path.
CostProcess cost_process(const PathBundle& bundle, const std::string& value_channel,
                         const Strategy& strategy);
CostProcess cost_process_values(const PathBundle& bundle, const std::vector<double>& value_flat,
                                const Strategy& strategy);

// Numerical orthogonal decomposition of a terminal payoff on the given
// instrument channels by backward least-squares regression on a polynomial
// state basis (degree `basis_degree`, ridge fallback on rank deficiency).
DecompositionResult gkw_regression(const PathBundle& bundle, const std::vector<double>& payoff,
                                   const std::vector<std::string>& instruments,
                                   const std::vector<std::string>& state_channels,
                                   unsigned basis_degree = 3, double ridge = 1e-8);

// Central finite difference with a Richardson half-step consistency check.
struct HedgeRatio {
    double value = 0.0;
    double richardson_delta = 0.0;  // |half-step estimate - full-step estimate|
};
HedgeRatio hedge_ratio_fd(const std::function<double(double)>& price_fn, double x,
                          double rel_step = 1e-5);

// Pre-default scaling of the hedge ratio.
double defaultable_hedge(double psi_left_limit, double hedge_ratio);

// Hedgeable part h0 + int(integrand . dS) and unhedgeable part L_T, per path.
std::pair<std::vector<double>, std::vector<double>> split_hedgeable(
    const PathBundle& bundle, const DecompositionResult& decomposition);

}  // namespace benchhedge
