#include "benchhedge/hedging.hpp"

#include <cmath>
#include <stdexcept>

#include "benchhedge/parallel.hpp"
#include "benchhedge/stats.hpp"

namespace benchhedge {

namespace {

// Increment of an instrument channel over step i (level channels are
// differenced, increment channels read directly).
inline double channel_increment(const Channel& ch, std::size_t nn, std::size_t p, std::size_t i) {
    const double* row = ch.data.data() + p * nn;
    return ch.kind == ChannelKind::Increment ? row[i + 1] : row[i + 1] - row[i];
}

}  // namespace

double psi_integrand_stylized(double t, double s_hat_0, const StylizedMmmParams& params,
                              double maturity) {
    if (!(t < maturity)) throw std::invalid_argument("psi_integrand_stylized: need t < T");
    if (!(s_hat_0 > 0.0))
        throw std::invalid_argument("psi_integrand_stylized: s_hat_0 must be > 0");
    const double f = params.f(t, maturity);
    const double e = std::exp(-f / s_hat_0);
    const double p_hat = zcb_price(t, s_hat_0, params, maturity).p_hat;
    const double bracket = s_hat_0 - f * e / (1.0 - e);
    return -p_hat * bracket * std::sqrt(params.alpha(t) / s_hat_0);
}

double eta_strategy(double s_hat_j, const std::array<double, 2>& theta,
                    const std::array<double, 2>& vol_row, double psi) {
    if (psi == 0.0) throw std::runtime_error("eta_strategy: psi vanishes");
    const double norm = std::hypot(theta[0], theta[1]);
    if (!(norm > 0.0)) throw std::runtime_error("eta_strategy: |theta| vanishes");
    const double proj = (theta[0] * vol_row[0] + theta[1] * vol_row[1]) / norm;
    return s_hat_j / psi * (proj - norm);
}

double nu_residual(double s_hat_j, const std::array<double, 2>& theta,
                   const std::array<double, 2>& vol_row) {
    const double norm = std::hypot(theta[0], theta[1]);
    if (!(norm > 0.0)) throw std::runtime_error("nu_residual: |theta| vanishes");
    return s_hat_j / norm * (theta[1] * vol_row[0] - theta[0] * vol_row[1]);
}

double eta_strategy_stylized(double s_hat_j, const std::array<double, 2>& theta,
                             const std::array<double, 2>& vol_row, double t,
                             const StylizedMmmParams& params, double maturity) {
    const double norm2 = theta[0] * theta[0] + theta[1] * theta[1];
    if (!(norm2 > 0.0)) throw std::runtime_error("eta_strategy_stylized: |theta| vanishes");
    const double alpha = params.alpha(t);
    const double s_hat_0 = norm2 / alpha;  // from |theta|^2 = alpha * s_hat_0
    const double f = params.f(t, maturity);
    const double e = std::exp(-f / s_hat_0);
    const double p_hat = zcb_price(t, s_hat_0, params, maturity).p_hat;
    const double bracket = s_hat_0 - f * e / (1.0 - e);
    const double proj = theta[0] * vol_row[0] + theta[1] * vol_row[1];
    return s_hat_j / (alpha * p_hat) * (norm2 - proj) / bracket;
}

void add_bond_channel(PathBundle& bundle, const StylizedMmmParams& params, double maturity) {
    auto& ph = bundle.add("P_hat", ChannelKind::Level);
    const auto& s0 = bundle.channel("s_hat_0").data;
    const TimeGrid& grid = bundle.grid();
    const std::size_t nn = bundle.n_nodes();
    const double discount = std::exp(-params.r * maturity);
    parallel_for(bundle.n_paths(), worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            for (std::size_t i = 0; i < nn; ++i) {
                const double t = grid.node(i);
                const std::size_t k = p * nn + i;
                ph.data[k] = (t < maturity) ? zcb_price(t, s0[k], params, maturity).p_hat
                                            : discount * s0[k];
            }
        }
    });
}

namespace {

Strategy make_strategy(std::vector<std::string> instruments, std::size_t n_paths,
                       std::size_t n_steps) {
    Strategy s;
    s.instruments = std::move(instruments);
    s.holdings.assign(s.instruments.size(), std::vector<double>(n_paths * n_steps, 0.0));
    s.n_paths = n_paths;
    s.n_steps = n_steps;
    return s;
}

}  // namespace

Strategy stylized_gkw_strategy(const PathBundle& bundle, int j,
                               const std::array<double, 2>& vol_row,
                               const StylizedMmmParams& params, double maturity) {
    const std::size_t nn = bundle.n_nodes();
    const std::size_t n_steps = nn - 1;
    Strategy s = make_strategy({"P_hat", "dW_perp"}, bundle.n_paths(), n_steps);
    const auto& sj = bundle.channel("s_hat_" + std::to_string(j)).data;
    const auto& t1 = bundle.channel("theta_1").data;
    const auto& t2 = bundle.channel("theta_2").data;
    const TimeGrid& grid = bundle.grid();
    parallel_for(bundle.n_paths(), worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            for (std::size_t i = 0; i < n_steps; ++i) {
                const std::size_t k = p * nn + i;  // left node only
                const std::array<double, 2> theta{t1[k], t2[k]};
                s.at(0, p, i) =
                    eta_strategy_stylized(sj[k], theta, vol_row, grid.node(i), params, maturity);
                s.at(1, p, i) = nu_residual(sj[k], theta, vol_row);
            }
        }
    });
    return s;
}

Strategy gbm_gkw_strategy(const PathBundle& bundle, int j, const std::array<double, 2>& theta,
                          const std::array<double, 2>& vol_row) {
    const std::size_t nn = bundle.n_nodes();
    const std::size_t n_steps = nn - 1;
    Strategy s = make_strategy({"P_hat", "dW_perp"}, bundle.n_paths(), n_steps);
    const auto& sj = bundle.channel("s_hat_" + std::to_string(j)).data;
    const auto& s0 = bundle.channel("s_hat_0").data;
    const double norm = std::hypot(theta[0], theta[1]);
    parallel_for(bundle.n_paths(), worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            for (std::size_t i = 0; i < n_steps; ++i) {
                const std::size_t k = p * nn + i;
                const double psi = -norm * s0[k];  // d s_hat_0 = -|theta| s_hat_0 dW
                s.at(0, p, i) = eta_strategy(sj[k], theta, vol_row, psi);
                s.at(1, p, i) = nu_residual(sj[k], theta, vol_row);
            }
        }
    });
    return s;
}

std::vector<double> replicate_terminal(const PathBundle& bundle, const Strategy& strategy,
                                       double h0) {
    const std::size_t nn = bundle.n_nodes();
    if (strategy.n_steps + 1 != nn || strategy.n_paths != bundle.n_paths())
        throw std::invalid_argument("replicate_terminal: strategy shape mismatch");
    std::vector<double> out(bundle.n_paths(), h0);
    for (std::size_t k = 0; k < strategy.instruments.size(); ++k) {
        const Channel& ch = bundle.channel(strategy.instruments[k]);
        for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
            double acc = 0.0;
            for (std::size_t i = 0; i < strategy.n_steps; ++i)
                acc += strategy.at(k, p, i) * channel_increment(ch, nn, p, i);
            out[p] += acc;
        }
    }
    return out;
}

CostProcess cost_process_values(const PathBundle& bundle, const std::vector<double>& value_flat,
                                const Strategy& strategy) {
    const std::size_t nn = bundle.n_nodes();
    const std::size_t np = bundle.n_paths();
    if (value_flat.size() != np * nn)
        throw std::invalid_argument("cost_process: value shape mismatch");
    if (strategy.n_steps + 1 != nn || strategy.n_paths != np)
        throw std::invalid_argument("cost_process: strategy shape mismatch");

    CostProcess out;
    out.n_paths = np;
    out.n_nodes = nn;
    out.cost.assign(np * nn, 0.0);
    std::vector<const Channel*> chans;
    chans.reserve(strategy.instruments.size());
    for (const auto& name : strategy.instruments) chans.push_back(&bundle.channel(name));

    parallel_for(np, worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            double gains = 0.0;
            out.cost[p * nn] = value_flat[p * nn];
            for (std::size_t i = 0; i + 1 < nn; ++i) {
                for (std::size_t k = 0; k < chans.size(); ++k)
                    gains += strategy.at(k, p, i) * channel_increment(*chans[k], nn, p, i);
                out.cost[p * nn + i + 1] = value_flat[p * nn + i + 1] - gains;
            }
        }
    });
    std::vector<double> sq(np);
    for (std::size_t p = 0; p < np; ++p) {
        const double d = out.cost[p * nn + nn - 1] - out.cost[p * nn];
        sq[p] = d * d;
    }
    out.risk0 = mean_stats(sq).mean;
    return out;
}

CostProcess cost_process(const PathBundle& bundle, const std::string& value_channel,
                         const Strategy& strategy) {
    return cost_process_values(bundle, bundle.channel(value_channel).data, strategy);
}

DecompositionResult gkw_regression(const PathBundle& bundle, const std::vector<double>& payoff,
                                   const std::vector<std::string>& instruments,
                                   const std::vector<std::string>& state_channels,
                                   unsigned basis_degree, double ridge) {
    const std::size_t np = bundle.n_paths();
    const std::size_t nn = bundle.n_nodes();
    const std::size_t n_steps = nn - 1;
    const std::size_t m = instruments.size();
    if (payoff.size() != np) throw std::invalid_argument("gkw_regression: payoff shape mismatch");
    if (m == 0) throw std::invalid_argument("gkw_regression: no instruments");

    DecompositionResult out;
    out.n_nodes = nn;
    out.integrand = make_strategy(instruments, np, n_steps);
    out.residual_path.assign(np * nn, 0.0);
    out.residual_terminal.assign(np, 0.0);

    std::vector<const Channel*> chans;
    for (const auto& name : instruments) chans.push_back(&bundle.channel(name));

    std::vector<double> value = payoff;  // V_{i+1} while sweeping backwards
    std::vector<std::vector<double>> delta_l(n_steps, std::vector<double>(np, 0.0));

    for (std::size_t ii = n_steps; ii-- > 0;) {
        // Basis at the left node; node 0 has a trivial sigma-field, so only
        // the constant feature survives there.
        std::size_t k = 1;
        std::vector<double> basis;
        if (ii == 0) {
            basis.assign(np, 1.0);
        } else {
            basis = polynomial_basis(bundle, ii, state_channels, basis_degree, &k);
        }
        const std::size_t cols = k * (1 + m);
        std::vector<double> x(np * cols);
        for (std::size_t p = 0; p < np; ++p) {
            const double* b = basis.data() + p * k;
            double* row = x.data() + p * cols;
            for (std::size_t j = 0; j < k; ++j) row[j] = b[j];
            for (std::size_t q = 0; q < m; ++q) {
                const double di = channel_increment(*chans[q], nn, p, ii);
                for (std::size_t j = 0; j < k; ++j) row[(q + 1) * k + j] = b[j] * di;
            }
        }
        const LeastSquaresResult reg = least_squares(x, np, cols, value, ridge);
        out.rank_deficient = out.rank_deficient || reg.rank_deficient;

        for (std::size_t p = 0; p < np; ++p) {
            const double* b = basis.data() + p * k;
            double cond = 0.0;
            for (std::size_t j = 0; j < k; ++j) cond += reg.coef[j] * b[j];
            double explained = cond;
            for (std::size_t q = 0; q < m; ++q) {
                double h = 0.0;
                for (std::size_t j = 0; j < k; ++j) h += reg.coef[(q + 1) * k + j] * b[j];
                out.integrand.at(q, p, ii) = h;
                explained += h * channel_increment(*chans[q], nn, p, ii);
            }
            delta_l[ii][p] = value[p] - explained;
            value[p] = cond;
        }
    }
    out.h0 = value[0];

    for (std::size_t p = 0; p < np; ++p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_steps; ++i) {
            acc += delta_l[i][p];
            out.residual_path[p * nn + i + 1] = acc;
        }
        out.residual_terminal[p] = acc;
    }
    return out;
}

HedgeRatio hedge_ratio_fd(const std::function<double(double)>& price_fn, double x,
                          double rel_step) {
    const double scale = std::max(std::fabs(x), 1e-8);
    const auto central = [&](double h) {
        if (x + h == x) throw std::runtime_error("hedge_ratio_fd: step underflow");
        return (price_fn(x + h) - price_fn(x - h)) / (2.0 * h);
    };
    HedgeRatio out;
    const double d1 = central(rel_step * scale);
    const double d2 = central(0.5 * rel_step * scale);
    out.value = d2;
    out.richardson_delta = std::fabs(d2 - d1);
    return out;
}

double defaultable_hedge(double psi_left_limit, double hedge_ratio) {
    return psi_left_limit * hedge_ratio;
}

std::pair<std::vector<double>, std::vector<double>> split_hedgeable(
    const PathBundle& bundle, const DecompositionResult& decomposition) {
    std::vector<double> hedgeable =
        replicate_terminal(bundle, decomposition.integrand, decomposition.h0);
    return {std::move(hedgeable), decomposition.residual_terminal};
}

}  // namespace benchhedge
