#include "benchhedge/models.hpp"

#include <cmath>
#include <stdexcept>

#include "benchhedge/parallel.hpp"
#include "benchhedge/stats.hpp"
#include "benchhedge/stochastic_core.hpp"

namespace benchhedge {

namespace {
constexpr std::uint64_t kLanes = 8;
constexpr double kStateFloor = 1e-12;  // floor for Z in negative-power channels
}

RngStream stream_for(std::uint64_t master_seed, std::size_t path, StreamLane lane) {
    return RngStream(master_seed,
                     static_cast<std::uint64_t>(path) * kLanes + static_cast<std::uint64_t>(lane));
}

void MmmRandomScalingParams::validate() const {
    if (!(bessel_dim > 2.0))
        throw std::invalid_argument("MmmRandomScalingParams: bessel_dim must be > 2");
    if (!(z0 > 0.0)) throw std::invalid_argument("MmmRandomScalingParams: z0 must be > 0");
    // gamma0 == 0 is allowed: it freezes the factor process, which some
    // degenerate test configurations rely on
    if (gamma0 < 0.0) throw std::invalid_argument("MmmRandomScalingParams: gamma0 must be >= 0");
    if (!(rho >= -1.0 && rho <= 1.0))
        throw std::invalid_argument("MmmRandomScalingParams: |rho| must be <= 1");
    if (r < 0.0) throw std::invalid_argument("MmmRandomScalingParams: r must be >= 0");
    if (!gamma_drift || !gamma_diffusion)
        throw std::invalid_argument("MmmRandomScalingParams: scaling coefficients missing");
}

void StylizedMmmParams::validate() const {
    if (!(alpha0 > 0.0)) throw std::invalid_argument("StylizedMmmParams: alpha0 must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("StylizedMmmParams: beta must be > 0");
    if (!(z0 > 0.0)) throw std::invalid_argument("StylizedMmmParams: z0 must be > 0");
    if (r < 0.0) throw std::invalid_argument("StylizedMmmParams: r must be >= 0");
}

double StylizedMmmParams::alpha(double t) const { return alpha0 * std::exp(beta * t); }

double StylizedMmmParams::clock(double t) const {
    return alpha0 / (4.0 * beta) * (std::exp(beta * t) - 1.0);
}

double StylizedMmmParams::clock_increment(double t1, double t2) const {
    return clock(t2) - clock(t1);
}

double StylizedMmmParams::f(double t, double maturity) const {
    if (!(t < maturity)) throw std::invalid_argument("StylizedMmmParams::f: need t < maturity");
    return 2.0 * beta / (alpha0 * (std::exp(beta * maturity) - std::exp(beta * t)));
}

void GbmConstThetaParams::validate() const {
    const double norm = std::hypot(theta[0], theta[1]);
    if (!(norm > 0.0)) throw std::invalid_argument("GbmConstThetaParams: |theta| must be > 0");
    if (!(s_hat_0_0 > 0.0) || !(s_hat_j_0[0] > 0.0) || !(s_hat_j_0[1] > 0.0))
        throw std::invalid_argument("GbmConstThetaParams: initial values must be > 0");
}

std::array<double, 2> market_price_of_risk(const std::array<std::array<double, 2>, 2>& vol,
                                           const std::array<double, 2>& appreciation, double r) {
    const double a = vol[0][0], b = vol[0][1], c = vol[1][0], d = vol[1][1];
    const double det = a * d - b * c;
    if (det == 0.0 || !std::isfinite(det))
        throw std::runtime_error("market_price_of_risk: volatility matrix singular");
    // 2x2 spectral condition number from the singular values:
    // s1^2 + s2^2 = |A|_F^2, s1 s2 = |det|.
    const double frob2 = a * a + b * b + c * c + d * d;
    const double disc = std::sqrt(std::max(frob2 * frob2 - 4.0 * det * det, 0.0));
    const double s1_sq = 0.5 * (frob2 + disc);
    const double cond = s1_sq / std::fabs(det);
    if (cond > 1e12)
        throw std::runtime_error(
            "market_price_of_risk: volatility matrix ill-conditioned (condition number " +
            std::to_string(cond) + " > 1e12)");
    const double e0 = appreciation[0] - r;
    const double e1 = appreciation[1] - r;
    return {(d * e0 - b * e1) / det, (a * e1 - c * e0) / det};
}

PathBundle simulate_random_scaling_mmm(const MmmRandomScalingParams& params, const TimeGrid& grid,
                                       std::size_t n_paths, std::uint64_t seed) {
    params.validate();
    PathBundle bundle(grid, n_paths);
    bundle.add("Z", ChannelKind::Level);
    bundle.add("gamma", ChannelKind::Level);
    bundle.add("alpha", ChannelKind::Level);
    bundle.add("discounted_np", ChannelKind::Level);
    bundle.add("s_hat_0", ChannelKind::Level);
    bundle.add("dW", ChannelKind::Increment);
    bundle.add("dW_tilde", ChannelKind::Increment);

    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    const double delta = params.bessel_dim;
    const double drift_coef = (delta / 2.0 - 1.0) * (delta / 2.0 - 1.0);
    const double corr_c = std::sqrt(1.0 - params.rho * params.rho);
    const std::size_t nn = grid.n_nodes();

    parallel_for(n_paths, worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            RngStream rng = stream_for(seed, p, StreamLane::Main);
            auto z = bundle.path("Z", p);
            auto g = bundle.path("gamma", p);
            auto al = bundle.path("alpha", p);
            auto np = bundle.path("discounted_np", p);
            auto s0 = bundle.path("s_hat_0", p);
            auto dw = bundle.path("dW", p);
            auto dwt = bundle.path("dW_tilde", p);
            z[0] = params.z0;
            g[0] = params.gamma0;
            for (std::size_t i = 0; i + 1 < nn; ++i) {
                const double t = grid.node(i);
                const double zc = std::max(z[i], 0.0);
                const double gc = std::max(g[i], 0.0);
                const double n1 = rng.normal() * sqrt_dt;
                const double n2 = rng.normal() * sqrt_dt;
                dw[i + 1] = n1;
                dwt[i + 1] = n2;
                double z_next = z[i] + (delta / 4.0) * gc * dt + std::sqrt(gc * zc) * n1;
                double g_next = g[i] + params.gamma_drift(t, gc) * dt +
                                params.gamma_diffusion(t, gc) * (params.rho * n1 + corr_c * n2);
                z[i + 1] = std::max(z_next, 0.0);
                g[i + 1] = std::max(g_next, 0.0);
            }
            for (std::size_t i = 0; i < nn; ++i) {
                const double zf = std::max(z[i], kStateFloor);
                g[i] = std::max(g[i], 0.0);
                al[i] = drift_coef * g[i] * std::pow(zf, (delta - 4.0) / 2.0);
                np[i] = std::pow(std::max(z[i], 0.0), (delta - 2.0) / 2.0);
                s0[i] = std::pow(zf, -(delta - 2.0) / 2.0);
            }
        }
    });
    return bundle;
}

PathBundle simulate_stylized_mmm(const StylizedMmmParams& params, const TimeGrid& grid,
                                 std::size_t n_paths, std::uint64_t seed, StylizedScheme scheme) {
    params.validate();
    PathBundle bundle(grid, n_paths);
    bundle.add("Z", ChannelKind::Level);
    bundle.add("gamma", ChannelKind::Level);
    bundle.add("alpha", ChannelKind::Level);
    bundle.add("discounted_np", ChannelKind::Level);
    bundle.add("s_hat_0", ChannelKind::Level);
    bundle.add("dW", ChannelKind::Increment);

    const double dt = grid.dt();
    const std::size_t nn = grid.n_nodes();

    parallel_for(n_paths, worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            RngStream rng = stream_for(seed, p, StreamLane::Main);
            auto z = bundle.path("Z", p);
            auto dw = bundle.path("dW", p);
            z[0] = params.z0;
            if (scheme == StylizedScheme::ExactBesq) {
                for (std::size_t i = 0; i + 1 < nn; ++i) {
                    const double ds = params.clock_increment(grid.node(i), grid.node(i + 1));
                    z[i + 1] = besq_exact_step(z[i], 4.0, ds, rng);
                    // Driver increment implied by the transition; first-order
                    // consistent, used only where an explicit W is wanted.
                    const double a = params.alpha(grid.node(i));
                    const double vol = std::sqrt(std::max(a * std::max(z[i], kStateFloor), kStateFloor));
                    dw[i + 1] = (z[i + 1] - z[i] - a * dt) / vol;
                }
            } else {
                for (std::size_t i = 0; i + 1 < nn; ++i) {
                    const double a = params.alpha(grid.node(i));
                    const double n1 = rng.normal() * std::sqrt(dt);
                    dw[i + 1] = n1;
                    const double zc = std::max(z[i], 0.0);
                    z[i + 1] = std::max(z[i] + a * dt + std::sqrt(a * zc) * n1, 0.0);
                }
            }
            auto g = bundle.path("gamma", p);
            auto al = bundle.path("alpha", p);
            auto np = bundle.path("discounted_np", p);
            auto s0 = bundle.path("s_hat_0", p);
            for (std::size_t i = 0; i < nn; ++i) {
                al[i] = params.alpha(grid.node(i));
                g[i] = al[i];
                np[i] = z[i];
                s0[i] = 1.0 / std::max(z[i], kStateFloor);
            }
        }
    });
    return bundle;
}

PathBundle simulate_gbm_const_theta(const GbmConstThetaParams& params, const TimeGrid& grid,
                                    std::size_t n_paths, std::uint64_t seed) {
    params.validate();
    PathBundle bundle(grid, n_paths);
    bundle.add("s_hat_0", ChannelKind::Level);
    bundle.add("P_hat", ChannelKind::Level);
    bundle.add("dW", ChannelKind::Increment);
    bundle.add("dW_perp", ChannelKind::Increment);

    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    const double vol = std::hypot(params.theta[0], params.theta[1]);
    const std::size_t nn = grid.n_nodes();

    parallel_for(n_paths, worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            RngStream rng = stream_for(seed, p, StreamLane::Main);
            RngStream rng_perp = stream_for(seed, p, StreamLane::Orthogonal);
            auto s0 = bundle.path("s_hat_0", p);
            auto ph = bundle.path("P_hat", p);
            auto dw = bundle.path("dW", p);
            auto dwp = bundle.path("dW_perp", p);
            s0[0] = params.s_hat_0_0;
            ph[0] = s0[0];
            for (std::size_t i = 0; i + 1 < nn; ++i) {
                dw[i + 1] = rng.normal() * sqrt_dt;
                dwp[i + 1] = rng_perp.normal() * sqrt_dt;
                s0[i + 1] = s0[i] * std::exp(-0.5 * vol * vol * dt - vol * dw[i + 1]);
                ph[i + 1] = s0[i + 1];
            }
        }
    });
    add_constant_theta(bundle, params.theta);
    return bundle;
}

void add_theta_from_model(PathBundle& bundle, const std::array<double, 2>& direction) {
    const double norm = std::hypot(direction[0], direction[1]);
    if (!(norm > 0.0)) throw std::invalid_argument("add_theta_from_model: zero direction");
    const double u1 = direction[0] / norm;
    const double u2 = direction[1] / norm;
    auto& t1 = bundle.add("theta_1", ChannelKind::Level);
    auto& t2 = bundle.add("theta_2", ChannelKind::Level);
    const auto& alpha = bundle.channel("alpha").data;
    const auto& s0 = bundle.channel("s_hat_0").data;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        const double total = std::sqrt(alpha[k] * s0[k]);
        t1.data[k] = total * u1;
        t2.data[k] = total * u2;
    }
}

void add_constant_theta(PathBundle& bundle, const std::array<double, 2>& theta) {
    auto& t1 = bundle.add("theta_1", ChannelKind::Level);
    auto& t2 = bundle.add("theta_2", ChannelKind::Level);
    for (auto& v : t1.data) v = theta[0];
    for (auto& v : t2.data) v = theta[1];
}

void add_orthogonal_increments(PathBundle& bundle, std::uint64_t seed) {
    auto& ch = bundle.add("dW_perp", ChannelKind::Increment);
    const std::size_t nn = bundle.n_nodes();
    const double sqrt_dt = std::sqrt(bundle.grid().dt());
    parallel_for(bundle.n_paths(), worker_threads(), [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            RngStream rng = stream_for(seed, p, StreamLane::Orthogonal);
            double* row = ch.data.data() + p * nn;
            for (std::size_t i = 1; i < nn; ++i) row[i] = rng.normal() * sqrt_dt;
        }
    });
}

void orthogonal_drivers(PathBundle& bundle) {
    const auto& t1 = bundle.channel("theta_1").data;
    const auto& t2 = bundle.channel("theta_2").data;
    const auto& w1 = bundle.channel("dW1").data;
    const auto& w2 = bundle.channel("dW2").data;
    auto& dw = bundle.add("dW", ChannelKind::Increment);
    auto& dwp = bundle.add("dW_perp", ChannelKind::Increment);
    const std::size_t nn = bundle.n_nodes();
    for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
        for (std::size_t i = 1; i < nn; ++i) {
            const std::size_t left = p * nn + i - 1;  // rotation uses the left node
            const double norm = std::hypot(t1[left], t2[left]);
            if (!(norm > 0.0))
                throw std::runtime_error("orthogonal_drivers: |theta| = 0 at path " +
                                         std::to_string(p) + ", node " + std::to_string(i - 1));
            const std::size_t k = p * nn + i;
            dw.data[k] = (t1[left] * w1[k] + t2[left] * w2[k]) / norm;
            dwp.data[k] = (t2[left] * w1[k] - t1[left] * w2[k]) / norm;
        }
    }
}

void driver_components(PathBundle& bundle) {
    const auto& t1 = bundle.channel("theta_1").data;
    const auto& t2 = bundle.channel("theta_2").data;
    const auto& dw = bundle.channel("dW").data;
    const auto& dwp = bundle.channel("dW_perp").data;
    auto& w1 = bundle.add("dW1", ChannelKind::Increment);
    auto& w2 = bundle.add("dW2", ChannelKind::Increment);
    const std::size_t nn = bundle.n_nodes();
    for (std::size_t p = 0; p < bundle.n_paths(); ++p) {
        for (std::size_t i = 1; i < nn; ++i) {
            const std::size_t left = p * nn + i - 1;
            const double norm = std::hypot(t1[left], t2[left]);
            if (!(norm > 0.0))
                throw std::runtime_error("driver_components: |theta| = 0 at path " +
                                         std::to_string(p) + ", node " + std::to_string(i - 1));
            const double u1 = t1[left] / norm;
            const double u2 = t2[left] / norm;
            const std::size_t k = p * nn + i;
            w1.data[k] = u1 * dw[k] + u2 * dwp[k];
            w2.data[k] = u2 * dw[k] - u1 * dwp[k];
        }
    }
}

void simulate_primary_accounts(PathBundle& bundle,
                               const std::array<std::array<double, 2>, 2>& vols,
                               const std::array<double, 2>& s0) {
    const auto& t1 = bundle.channel("theta_1").data;
    const auto& t2 = bundle.channel("theta_2").data;
    const auto& dw = bundle.channel("dW").data;
    const auto& dwp = bundle.channel("dW_perp").data;
    const double dt = bundle.grid().dt();
    const std::size_t nn = bundle.n_nodes();
    for (int j = 0; j < 2; ++j) {
        auto& ch = bundle.add("s_hat_" + std::to_string(j + 1), ChannelKind::Level);
        const double bj1 = vols[j][0];
        const double bj2 = vols[j][1];
        parallel_for(bundle.n_paths(), worker_threads(), [&](std::size_t p0, std::size_t p1) {
            for (std::size_t p = p0; p < p1; ++p) {
                double* s = ch.data.data() + p * nn;
                s[0] = s0[j];
                for (std::size_t i = 0; i + 1 < nn; ++i) {
                    const std::size_t k = p * nn + i;
                    const double norm = std::hypot(t1[k], t2[k]);
                    if (!(norm > 0.0))
                        throw std::runtime_error("simulate_primary_accounts: |theta| = 0 at node " +
                                                 std::to_string(i));
                    const double u1 = t1[k] / norm;
                    const double u2 = t2[k] / norm;
                    const double c1 = u1 * bj1 + u2 * bj2 - norm;
                    const double c2 = u2 * bj1 - u1 * bj2;
                    s[i + 1] = s[i] * std::exp(-0.5 * (c1 * c1 + c2 * c2) * dt +
                                               c1 * dw[k + 1] + c2 * dwp[k + 1]);
                }
            }
        });
    }
}

}  // namespace benchhedge
