#include "benchhedge/stochastic_core.hpp"

#include <cmath>
#include <stdexcept>

#include "benchhedge/distributions.hpp"

namespace benchhedge {

std::vector<double> sample_wiener_increments(const TimeGrid& grid, std::size_t dims,
                                             RngStream& stream) {
    if (dims < 1) throw std::invalid_argument("sample_wiener_increments: dims must be >= 1");
    const double sqrt_dt = std::sqrt(grid.dt());
    std::vector<double> out(grid.n_steps * dims);
    for (double& v : out) v = sqrt_dt * stream.normal();
    return out;
}

double besq_exact_step(double z, double dim, double clock_increment, RngStream& stream) {
    if (!(dim > 2.0)) throw std::invalid_argument("besq_exact_step: dimension must be > 2");
    if (z < 0.0) throw std::invalid_argument("besq_exact_step: state must be >= 0");
    if (!(clock_increment > 0.0))
        throw std::invalid_argument("besq_exact_step: clock increment must be > 0");
    return clock_increment * ncx2_sample({dim, z / clock_increment}, stream);
}

std::vector<double> euler_step_full_truncation(std::span<const double> state,
                                               std::span<const double> drift,
                                               std::span<const double> diffusion,
                                               std::span<const double> dw, double dt,
                                               std::span<const bool> nonnegative) {
    const std::size_t n = state.size();
    const std::size_t m = dw.size();
    if (drift.size() != n || diffusion.size() != n * m ||
        (!nonnegative.empty() && nonnegative.size() != n))
        throw std::invalid_argument("euler_step_full_truncation: shape mismatch");
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = state[i] + drift[i] * dt;
        for (std::size_t k = 0; k < m; ++k) x += diffusion[i * m + k] * dw[k];
        if (!nonnegative.empty() && nonnegative[i] && x < 0.0) x = 0.0;
        next[i] = x;
    }
    return next;
}

}  // namespace benchhedge
