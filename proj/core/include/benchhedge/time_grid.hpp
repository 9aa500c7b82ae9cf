#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace benchhedge {

// Uniform discretization of [t0, T] into n_steps intervals.
struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    std::size_t n_steps = 1;

    double dt() const { return (T - t0) / static_cast<double>(n_steps); }
    std::size_t n_nodes() const { return n_steps + 1; }
    double node(std::size_t i) const {
        return t0 + (T - t0) * (static_cast<double>(i) / static_cast<double>(n_steps));
    }
};

inline TimeGrid make_time_grid(double t0, double T, std::size_t n_steps) {
    if (!std::isfinite(t0) || !std::isfinite(T))
        throw std::invalid_argument("make_time_grid: endpoints must be finite");
    if (!(t0 < T))
        throw std::invalid_argument("make_time_grid: t0 must be strictly below T");
    if (n_steps < 1)
        throw std::invalid_argument("make_time_grid: n_steps must be >= 1");
    return TimeGrid{t0, T, n_steps};
}

}  // namespace benchhedge
