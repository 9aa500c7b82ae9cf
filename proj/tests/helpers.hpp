#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "benchhedge/hedging.hpp"
#include "benchhedge/models.hpp"
#include "benchhedge/path_bundle.hpp"
#include "benchhedge/stats.hpp"

namespace testutil {

inline benchhedge::StylizedMmmParams stylized_fixture() {
    benchhedge::StylizedMmmParams p;
    p.alpha0 = 0.05;
    p.beta = 0.05;
    p.r = 0.0;
    p.z0 = 1.0;
    return p;
}

inline benchhedge::GbmConstThetaParams gbm_fixture() {
    benchhedge::GbmConstThetaParams p;
    p.theta = {0.2, 0.1};
    p.vols = {{{0.25, 0.05}, {0.05, 0.3}}};
    p.s_hat_0_0 = 1.0;
    p.s_hat_j_0 = {1.0, 1.0};
    return p;
}

inline double zscore(const benchhedge::MeanStats& ms, double target) {
    return ms.stderr_mean > 0.0 ? (ms.mean - target) / ms.stderr_mean : 0.0;
}

// Composite Simpson integration, used as the independent quadrature oracle.
inline double simpson(const std::function<double(double)>& fn, double a, double b,
                      std::size_t n_intervals) {
    if (n_intervals % 2 == 1) ++n_intervals;
    const double h = (b - a) / static_cast<double>(n_intervals);
    double acc = fn(a) + fn(b);
    for (std::size_t i = 1; i < n_intervals; ++i)
        acc += fn(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Terminal column of a channel.
inline std::vector<double> terminal(const benchhedge::PathBundle& bundle,
                                    const std::string& channel) {
    std::vector<double> out(bundle.n_paths());
    for (std::size_t p = 0; p < bundle.n_paths(); ++p)
        out[p] = bundle.at(channel, p, bundle.n_nodes() - 1);
    return out;
}

// The traded leg of an (eta, nu) strategy pair: the cost process is defined
// against the instruments actually traded, and the residual driver is not one.
inline benchhedge::Strategy bond_leg(const benchhedge::Strategy& full) {
    benchhedge::Strategy s;
    s.instruments = {full.instruments.at(0)};
    s.holdings = {full.holdings.at(0)};
    s.n_paths = full.n_paths;
    s.n_steps = full.n_steps;
    return s;
}

}  // namespace testutil
