#include "benchhedge/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "benchhedge/distributions.hpp"
#include "benchhedge/parallel.hpp"

namespace benchhedge {

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

double benchmarked_savings_forward(double t, double s_hat_0, const StylizedMmmParams& params,
                                   double maturity) {
    if (!(s_hat_0 > 0.0))
        throw std::invalid_argument("benchmarked_savings_forward: s_hat_0 must be > 0");
    const double f = params.f(t, maturity);
    return (1.0 - std::exp(-f / s_hat_0)) * s_hat_0;
}

BondQuote zcb_price(double t, double s_hat_0, const StylizedMmmParams& params, double maturity) {
    if (!(t < maturity)) throw std::invalid_argument("zcb_price: need t < T");
    params.validate();
    BondQuote q;
    q.t = t;
    q.T = maturity;
    q.f_t = params.f(t, maturity);
    q.p_hat = std::exp(-params.r * maturity) * benchmarked_savings_forward(t, s_hat_0, params, maturity);
    return q;
}

PutClosedFormTerms put_terms(double t, double strike, double s_hat_0,
                             const StylizedMmmParams& params, double maturity) {
    if (!(t < maturity)) throw std::invalid_argument("put_terms: need t < T");
    if (strike < 0.0) throw std::invalid_argument("put_terms: strike must be >= 0");
    if (!(s_hat_0 > 0.0)) throw std::invalid_argument("put_terms: s_hat_0 must be > 0");
    const double ds = params.clock_increment(t, maturity);
    PutClosedFormTerms terms;
    terms.strike = strike;
    terms.maturity = maturity;
    terms.d1 = strike / ds;
    terms.l2 = 1.0 / (s_hat_0 * ds);  // Z_t / ds
    return terms;
}

double put_price(double t, double strike, double s_hat_0, const StylizedMmmParams& params,
                 double maturity) {
    const PutClosedFormTerms terms = put_terms(t, strike, s_hat_0, params, maturity);
    if (strike == 0.0) return 0.0;
    const double atom = std::exp(-0.5 * terms.l2);
    const double kernel = ncx2_cdf(terms.d1, {0.0, terms.l2}) - atom;
    const double tail = ncx2_cdf(terms.d1, {4.0, terms.l2});
    const double value = strike * s_hat_0 * kernel - tail;
    return std::max(value, 0.0);
}

std::vector<double> polynomial_basis(const PathBundle& bundle, std::size_t node,
                                     const std::vector<std::string>& channels, unsigned degree,
                                     std::size_t* n_features) {
    const std::size_t n_paths = bundle.n_paths();
    const std::size_t nn = bundle.n_nodes();
    const std::size_t d = channels.size();
    // Enumerate exponent multi-indices with total degree <= degree.
    std::vector<std::vector<unsigned>> exps;
    std::vector<unsigned> cur(d, 0);
    const std::function<void(std::size_t, unsigned)> rec = [&](std::size_t pos, unsigned left) {
        if (pos == d) {
            exps.push_back(cur);
            return;
        }
        for (unsigned e = 0; e <= left; ++e) {
            cur[pos] = e;
            rec(pos + 1, left - e);
        }
        cur[pos] = 0;
    };
    rec(0, degree);
    const std::size_t k = exps.size();
    if (n_features) *n_features = k;

    std::vector<const double*> data(d);
    for (std::size_t c = 0; c < d; ++c) data[c] = bundle.channel(channels[c]).data.data();

    std::vector<double> x(n_paths * k);
    for (std::size_t p = 0; p < n_paths; ++p) {
        for (std::size_t j = 0; j < k; ++j) {
            double v = 1.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double s = data[c][p * nn + node];
                for (unsigned e = 0; e < exps[j][c]; ++e) v *= s;
            }
            x[p * k + j] = v;
        }
    }
    return x;
}

McPriceResult real_world_price_mc(const PayoffFn& payoff, const PathBundle& paths,
                                  std::size_t t_index, const std::vector<std::string>& state_channels,
                                  unsigned basis_degree) {
    if (t_index >= paths.n_nodes())
        throw std::invalid_argument("real_world_price_mc: t_index out of range");
    const std::size_t n = paths.n_paths();
    std::vector<double> values(n);
    for (std::size_t p = 0; p < n; ++p) values[p] = payoff(paths, p);

    McPriceResult out;
    const MeanStats ms = mean_stats(values);
    out.estimate = ms.mean;
    out.stderr_mean = ms.stderr_mean;
    out.kurtosis = sample_kurtosis(values);
    out.heavy_tails = out.kurtosis > 100.0;
    if (t_index == 0) return out;

    if (state_channels.empty())
        throw std::invalid_argument("real_world_price_mc: state channels required for t > 0");
    std::size_t k = 0;
    const std::vector<double> x = polynomial_basis(paths, t_index, state_channels, basis_degree, &k);
    const LeastSquaresResult reg = least_squares(x, n, k, values);
    out.rank_deficient = reg.rank_deficient;
    out.conditional.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        double v = 0.0;
        for (std::size_t j = 0; j < k; ++j) v += reg.coef[j] * x[p * k + j];
        out.conditional[p] = v;
    }
    return out;
}

// ---------------------------------------------------------------------------

Recovery Recovery::constant(double value) {
    if (value < 0.0 || value > 1.0)
        throw std::invalid_argument("Recovery::constant: value must lie in [0,1]");
    Recovery r;
    r.kind_ = Kind::Constant;
    r.value_ = value;
    return r;
}

Recovery Recovery::piecewise(std::vector<double> times, std::vector<double> values) {
    if (values.size() != times.size() + 1)
        throw std::invalid_argument("Recovery::piecewise: need one more value than breakpoints");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("Recovery::piecewise: breakpoints must increase");
    for (double v : values)
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("Recovery::piecewise: values must lie in [0,1]");
    Recovery r;
    r.kind_ = Kind::Piecewise;
    r.times_ = std::move(times);
    r.values_ = std::move(values);
    return r;
}

Recovery Recovery::general(std::function<double(double)> fn) {
    Recovery r;
    r.kind_ = Kind::General;
    r.fn_ = std::move(fn);
    return r;
}

double Recovery::operator()(double t) const {
    switch (kind_) {
        case Kind::Constant:
            return value_;
        case Kind::Piecewise: {
            std::size_t i = 0;
            while (i < times_.size() && t >= times_[i]) ++i;
            return values_[i];
        }
        case Kind::General: {
            const double v = fn_(t);
            if (v < -1e-12 || v > 1.0 + 1e-12)
                throw std::runtime_error("Recovery: function value outside [0,1]");
            return std::clamp(v, 0.0, 1.0);
        }
    }
    return value_;
}

double Recovery::weighted_integral(double a, double b, double lambda, double a0) const {
    if (!(b > a) || lambda == 0.0) return 0.0;
    const auto segment = [&](double lo, double hi, double h) {
        return h * (std::exp(-lambda * (lo - a0)) - std::exp(-lambda * (hi - a0)));
    };
    switch (kind_) {
        case Kind::Constant:
            return segment(a, b, value_);
        case Kind::Piecewise: {
            double total = 0.0;
            double lo = a;
            for (std::size_t i = 0; i <= times_.size(); ++i) {
                const double hi = (i < times_.size()) ? std::min(times_[i], b) : b;
                if (hi > lo) total += segment(lo, hi, values_[i]);
                lo = std::max(lo, hi);
                if (lo >= b) break;
            }
            return total;
        }
        case Kind::General:
            return integrate(
                [&](double s) { return (*this)(s)*lambda * std::exp(-lambda * (s - a0)); }, a, b);
    }
    return 0.0;
}

double DefaultModel::survival(double t) const { return std::exp(-lambda * t); }

void default_times(const DefaultModel& model, PathBundle& bundle, std::uint64_t seed) {
    if (model.lambda < 0.0) throw std::invalid_argument("default_times: lambda must be >= 0");
    auto& d = bundle.add("D", ChannelKind::Level);
    auto& tau = bundle.add_path_values("tau");
    const std::size_t nn = bundle.n_nodes();
    const TimeGrid& grid = bundle.grid();
    parallel_for(bundle.n_paths(), worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            RngStream rng = stream_for(seed, p, StreamLane::Default);
            const double t = model.lambda > 0.0 ? rng.exponential(model.lambda)
                                                : std::numeric_limits<double>::infinity();
            tau[p] = t;
            double* row = d.data.data() + p * nn;
            for (std::size_t i = 0; i < nn; ++i) row[i] = (t <= grid.node(i)) ? 1.0 : 0.0;
        }
    });
}

double psi_survival_value(const DefaultModel& model, double t, double maturity) {
    const double surv = std::exp(-model.lambda * (maturity - t));
    return surv + model.recovery.weighted_integral(t, maturity, model.lambda, t);
}

void psi_process(const DefaultModel& model, PathBundle& bundle, double maturity) {
    const auto& tau = bundle.path_values("tau");
    auto& psi = bundle.add("Psi", ChannelKind::Level);
    const std::size_t nn = bundle.n_nodes();
    const TimeGrid& grid = bundle.grid();
    // Pre-default values are deterministic in t; tabulate once per node.
    std::vector<double> pre(nn);
    for (std::size_t i = 0; i < nn; ++i) pre[i] = psi_survival_value(model, grid.node(i), maturity);
    parallel_for(bundle.n_paths(), worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            double* row = psi.data.data() + p * nn;
            for (std::size_t i = 0; i < nn; ++i) {
                const double t = grid.node(i);
                row[i] = (tau[p] <= t) ? model.recovery(std::min(tau[p], maturity)) : pre[i];
            }
        }
    });
}

double psi_representation_residual(const DefaultModel& model, const PathBundle& bundle,
                                   double maturity) {
    const auto& tau = bundle.path_values("tau");
    const auto& psi = bundle.channel("Psi");
    const TimeGrid& grid = bundle.grid();
    const std::size_t nn = bundle.n_nodes();
    const double lambda = model.lambda;
    const double psi0 = psi_survival_value(model, 0.0, maturity);

    // Integrand of the compensated-jump representation,
    //   g_tilde(s) - (1 - F_T)/(1 - F_s),
    // with g_tilde(s) = g(s) - exp(lambda s) E[1_{tau > s} g(tau)].
    const auto integrand = [&](double s) {
        const double g = (s < maturity) ? model.recovery(std::min(s, maturity)) : 0.0;
        const double tail = model.recovery.weighted_integral(s, maturity, lambda, s);
        const double g_tilde = g - tail;
        return g_tilde - std::exp(-lambda * (maturity - s));
    };
    // Lebesgue part of int_(0,x] integrand dQ is -lambda int_0^x integrand ds;
    // accumulate it once over grid nodes and patch the fractional step at tau.
    std::vector<double> node_cum(nn, 0.0);
    for (std::size_t i = 0; i + 1 < nn; ++i)
        node_cum[i + 1] =
            node_cum[i] - lambda * integrate(integrand, grid.node(i), grid.node(i + 1), 1e-13);
    const auto drift_to = [&](double x) {
        if (lambda == 0.0 || x <= grid.t0) return 0.0;
        std::size_t k = 0;
        while (k + 1 < nn && grid.node(k + 1) <= x) ++k;
        return node_cum[k] - lambda * integrate(integrand, grid.node(k), x, 1e-13);
    };

    double worst = 0.0;
    for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
        const double tp = tau[p];
        const double jump = (tp <= grid.T) ? integrand(tp) : 0.0;
        const double drift_tau = (tp <= grid.T) ? drift_to(tp) : 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            const double t = grid.node(i);
            const double rep = (tp <= t) ? psi0 + drift_tau + jump : psi0 + drift_to(t);
            worst = std::max(worst, std::fabs(rep - psi.data[p * nn + i]));
        }
    }
    return worst;
}

double defaultable_put_price(double t, double strike, double s_hat_0,
                             const StylizedMmmParams& params, const DefaultModel& model,
                             double psi_t, double maturity) {
    if (model.lambda < 0.0)
        throw std::invalid_argument("defaultable_put_price: lambda must be >= 0");
    if (psi_t < 0.0 || psi_t > 1.0)
        throw std::invalid_argument("defaultable_put_price: psi must lie in [0,1]");
    return put_price(t, strike, s_hat_0, params, maturity) * psi_t;
}

}  // namespace benchhedge
