#pragma once

#include <span>
#include <vector>

#include "benchhedge/path_bundle.hpp"
#include "benchhedge/rng.hpp"
#include "benchhedge/time_grid.hpp"

namespace benchhedge {

// i.i.d. N(0, dt) increments, dims * n_steps values laid out step-major
// (step0 dim0, step0 dim1, ..., step1 dim0, ...). Deterministic in `stream`.
std::vector<double> sample_wiener_increments(const TimeGrid& grid, std::size_t dims,
                                             RngStream& stream);

// One exact transition of a squared Bessel process of dimension dim > 2 over
// a clock increment ds: a scaled non-central chi-square draw with scale ds,
// dof dim and noncentrality z/ds. The scaling matches the drift/diffusion
// normalization used by the model clock s(t) = (1/4) * integral of the
// scaling process; see the models module.
double besq_exact_step(double z, double dim, double clock_increment, RngStream& stream);

// Explicit Euler step with full truncation: components flagged nonnegative
// are clipped at zero after the update (callers are expected to evaluate
// drift/diffusion coefficients on the clipped state as well).
// diffusion is row-major n_state x n_noise.
std::vector<double> euler_step_full_truncation(std::span<const double> state,
                                               std::span<const double> drift,
                                               std::span<const double> diffusion,
                                               std::span<const double> dw, double dt,
                                               std::span<const bool> nonnegative);

}  // namespace benchhedge
