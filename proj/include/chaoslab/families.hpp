#pragma once

#include <cstdint>

#include "chaoslab/grid_kernel.hpp"
#include "chaoslab/stein_bounds.hpp"

namespace chaoslab {

// Normalized quadratic variation over n equal blocks of an m-cell grid
// (m = n when zero): sqrt(n/2) sum_k (W(block_k)^2 - 1/n). Variance one,
// kappa = 12/n.
Kernel qvar_kernel(std::size_t n, std::size_t m = 0);

// Random order-p kernel that vanishes whenever two coordinates share a cell,
// symmetrized and scaled to variance one.
Kernel offdiag_rand_kernel(int p, std::size_t m, std::uint64_t seed);

// (I_1(1), qvar_n) on n cells; covariance is the identity.
ChaosVector pair2d_vector(std::size_t n);

}  // namespace chaoslab
