#pragma once

#include <cstdint>
#include <stdexcept>

namespace benchhedge {

// Counter-based random stream (Philox4x32-10). A stream is fully determined
// by (master_seed, stream_id): the same pair reproduces the same sequence no
// matter in which order streams are consumed, which is what makes per-path
// parallel simulation bitwise reproducible.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept;

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;

    // Uniform on (0,1), 53-bit mantissa, never returns 0 or 1.
    double uniform() noexcept;

    // Standard normal via the AS241 inverse-CDF applied to uniform().
    double normal() noexcept;

    // Exponential with the given rate (mean 1/rate).
    double exponential(double rate);

    // Gamma(shape, scale 1). Marsaglia-Tsang squeeze for shape >= 1,
    // boosted by U^(1/shape) below 1.
    double gamma(double shape);

    // Chi-square with `dof >= 0` degrees of freedom; dof == 0 gives the unit
    // mass at zero.
    double chi_square(double dof);

    // Poisson count; sequential inversion for small means, PTRD otherwise.
    std::uint64_t poisson(double mean);

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    void refill() noexcept;

    std::uint64_t master_seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint32_t key_[2] = {0, 0};
    std::uint32_t counter_[4] = {0, 0, 0, 0};
    std::uint32_t block_[4] = {0, 0, 0, 0};
    int block_pos_ = 4;
};

// Quantile of the standard normal distribution (Wichura's AS241, double
// precision). Exposed because a few tests want it directly.
double normal_quantile(double p);

}  // namespace benchhedge
