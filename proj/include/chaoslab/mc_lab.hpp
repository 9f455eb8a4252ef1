#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "chaoslab/chaos_algebra.hpp"
#include "chaoslab/stein_bounds.hpp"

namespace chaoslab {

//---------------------------------------------------------------------------//
// Sampling
//---------------------------------------------------------------------------//

/// N draws of a scalar (dim 1) or vector functional, row-major N x dim.
struct SampleBatch
{
    std::vector<double> values;
    std::size_t count = 0;
    std::size_t dim = 1;
    std::uint64_t seed = 0;
    std::string generator;

    double at(std::size_t i, std::size_t k = 0) const { return values[i * dim + k]; }
};

/// Cap on N * m for one sampling call: 64 times the tensor budget.
std::size_t sample_budget();

// Sample i uses the normals of counter block (seed, i), so batches do not
// depend on the worker count (0 = hardware concurrency).
SampleBatch sample(ChaosExpansion const& F, std::size_t N, std::uint64_t seed,
                   unsigned workers = 0);
SampleBatch sample(ChaosVector const& v, std::size_t N, std::uint64_t seed,
                   unsigned workers = 0);

// Exact N(0, sigma) draws through sigma = V diag(l) V^T.
SampleBatch sample_gaussian(SymMatrix const& sigma, std::size_t N, std::uint64_t seed,
                            unsigned workers = 0);

//---------------------------------------------------------------------------//
// Estimators
//---------------------------------------------------------------------------//

struct DistanceEstimate
{
    std::string name;
    double value = 0;
    double std_error = 0;  // NaN when no closed form is available
    std::string note;
    nlohmann::json params = nlohmann::json::object();

    nlohmann::json to_json() const;
};

double normal_cdf(double x);
double normal_quantile(double u);

// 1/2 sum_b |empirical mass - N(0, sigma2) mass| over `bins` equal bins on
// [-range_mult sigma, range_mult sigma] plus two tails. Binning can only
// lower TV, so this estimates a lower bound of the true distance up to
// sampling noise; std_error comes from the delta method.
DistanceEstimate tv_binned(SampleBatch const& batch, double sigma2, std::size_t bins = 200,
                           double range_mult = 6.0);

// (1/N) sum_k |x_(k) - sigma Phi^{-1}((k - 1/2) / N)|
DistanceEstimate w1_empirical(SampleBatch const& batch, double sigma2);

/*!
 * Test function from the polynomial battery.
 *
 * Ids (1-based components): "x{i}x{j}", "x{i}^2x{j}", "x{i}^3". M2 is the
 * supremum of the Hessian operator norm over the box [-R, R]^d:
 * 1 for x_i x_j (2 when i = j), R (1 + sqrt 5) for x_i^2 x_j, 6R for x_i^3.
 */
struct BatteryFunction
{
    std::string id;
    int kind = 0;  // 0: x_i x_j, 1: x_i^2 x_j, 2: x_i^3
    std::size_t i = 0;
    std::size_t j = 0;

    static BatteryFunction parse(std::string const& id, std::size_t d);
    double operator()(double const* x) const;
    double gaussian_mean(SymMatrix const& sigma) const;
    double M2(double box_radius) const;
};

std::vector<std::string> battery_ids(std::size_t d);

// Box radius for M2: 5 sqrt(max_k Sigma_kk).
double battery_box_radius(SymMatrix const& sigma);

// |mean g(F) - E g(N)| with the sample standard error of g(F).
DistanceEstimate smooth_discrepancy(SampleBatch const& batch, SymMatrix const& sigma,
                                    std::string const& g_id);

}  // namespace chaoslab
