#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/chaos_algebra.hpp"
#include "chaoslab/grid_kernel.hpp"

namespace chaoslab {

//---------------------------------------------------------------------------//
// Pair constructions
//---------------------------------------------------------------------------//

/*!
 * Ornstein-Uhlenbeck interpolation B^t = e^{-t} B + sqrt(1 - e^{-2t}) B'.
 *
 * Realized as a cell map from the base grid into its doubled grid: base cell
 * i goes to e^{-t} (first-half i) + sqrt(1 - e^{-2t}) (second-half i).
 */
struct MehlerPair
{
    double t;
    Grid base_grid;
    Grid doubled_grid;
    CellMap map;

    MehlerPair(Grid const& base, double t);
};

/// Resample the noise on one of n equal contiguous blocks.
struct GibbsPair
{
    std::size_t n;
    Grid base_grid;
    std::vector<std::size_t> block_of;  // block index per cell

    GibbsPair(Grid const& base, std::size_t n);

    std::size_t block_size() const noexcept { return base_grid.size() / n; }
    std::vector<std::size_t> block_cells(std::size_t v) const;
    // Cells of block v are sent to the second half, the rest stay put.
    CellMap swap_map(std::size_t v) const;
};

// Identity embedding of the base grid into the first half of its double.
CellMap first_half_embedding(Grid const& base);

//---------------------------------------------------------------------------//
// Exact conditional algebra on the doubled grid
//---------------------------------------------------------------------------//

ChaosExpansion push_forward(CellMap const& map, ChaosExpansion const& F);

ChaosExpansion mehler_transport(ChaosExpansion const& F, double t);

// F_t - F over the doubled grid. The all-first-half block of an order-q
// kernel is written as expm1(-q t) f directly, which avoids cancellation.
ChaosExpansion mehler_increment(ChaosExpansion const& F, double t);

// E[H | first-half noise]: every kernel restricted to first-half cells and
// re-indexed onto the base grid.
ChaosExpansion condition_on_first_half(ChaosExpansion const& H);

// condition_on_first_half(multiply(H, K)) without materializing the
// doubled-grid product: free coordinates run over the first half only,
// contracted coordinates over the whole doubled grid.
ChaosExpansion multiply_conditioned(ChaosExpansion const& H, ChaosExpansion const& K);

// 2 sum_{r=1}^p r r! C(p,r)^2 I_{2p-2r}(f (x)~_r f), the limit of
// E[(F_t - F)^2 | B] / t. Equals 2 p^2 int I_{p-1}(f(x,.))^2 dx.
ChaosExpansion quadratic_target(int p, Kernel const& f);

//---------------------------------------------------------------------------//
// Diagnostics
//---------------------------------------------------------------------------//

// || E[F_t - F | B] / t + p F ||_2
double mehler_drift_check(Kernel const& f, int p, double t);

// || E[(F_t - F)^2 | B] / t - quadratic_target ||_2
double mehler_quadratic_check(Kernel const& f, int p, double t);

enum class FourthMomentRoute
{
    automatic,     // doubled grid when it fits the tensor budget
    doubled_grid,  // second_moment(multiply(D_t, D_t))
    exchangeable,  // 4 E[F^3 E[D_t|B]] + 6 E[F^2 E[D_t^2|B]]
};

// E[(F_t - F)^4] / t
double mehler_fourth_check(Kernel const& f, int p, double t,
                           FourthMomentRoute route = FourthMomentRoute::automatic);
FourthMomentRoute resolve_fourth_route(Kernel const& f, int p, FourthMomentRoute route);

// E[(F_t - F)^2] / t, exact.
double mehler_second_moment_rate(Kernel const& f, int p, double t);

// sqrt((E D_t^2 / t) (E D_t^4 / t)), the Cauchy-Schwarz majorant of
// E|D_t|^3 / t.
double mehler_third_moment_bound(Kernel const& f, int p, double t);

struct GibbsDrift
{
    ChaosExpansion drift;  // n E[F^(n) - F | W]
    double distance;       // || drift + p F ||_2
};

// F must be a pure chaos of order p >= 1.
GibbsDrift gibbs_drift(ChaosExpansion const& F, std::size_t n);

// sum_v E[(F^(v) - F)^2 | W] (the n and 1/n cancel), distance to the
// quadratic target.
double gibbs_quadratic_check(Kernel const& f, int p, std::size_t n);

//---------------------------------------------------------------------------//
// Rate tables
//---------------------------------------------------------------------------//

struct DiagnosticsRow
{
    std::string construction;  // e.g. "mehler_drift", "gibbs_drift"
    double parameter;          // t or n
    double distance;
    double target_norm;
    double rate_estimate;  // log-log slope over the rows of this construction
};

struct DiagnosticsReport
{
    std::string pair;  // "mehler" or "gibbs"
    std::vector<DiagnosticsRow> rows;
};

// Least-squares slope of log(y) against log(x). NaN if fewer than two
// usable points (y must be positive).
double loglog_slope(std::span<double const> x, std::span<double const> y);

// Drift, quadratic, fourth-moment and third-moment-majorant rows for each t.
DiagnosticsReport mehler_rate_table(Kernel const& f, int p, std::span<double const> t_grid);

// Drift rows for each n, plus quadratic rows when they fit the budget.
DiagnosticsReport gibbs_rate_table(Kernel const& f, int p, std::span<std::size_t const> n_grid);

// CSV with header construction,parameter,distance,target_norm,rate_estimate
std::string to_csv(DiagnosticsReport const& report);

//---------------------------------------------------------------------------//
// Statistical exchangeability test
//---------------------------------------------------------------------------//

/*!
 * Produces the partner noise xi' for one joint draw.
 *
 * Arguments: the base draw xi, an independent draw xi_hat on the same grid,
 * a uniform u in (0, 1) for discrete choices, and the output buffer.
 */
using PairSampler = std::function<void(std::span<double const> xi,
                                       std::span<double const> xi_hat, double u,
                                       std::span<double> partner)>;

PairSampler mehler_pair_sampler(double t);
PairSampler gibbs_pair_sampler(GibbsPair const& pair);

struct ExchangeabilityStat
{
    std::string phi;
    double discrepancy;  // mean of phi(F, F') - phi(F', F)
    double std_error;
    bool pass;
};

struct ExchangeabilityReport
{
    std::string construction;
    std::size_t samples;
    std::uint64_t seed;
    std::vector<ExchangeabilityStat> stats;
    bool pass;
};

// Battery phi in {x y^2, x^2 y, x^3 y, min(x, y) x}; each discrepancy must
// lie within 4 standard errors of zero. Requires N >= 1e4.
ExchangeabilityReport exchangeability_mc_test(std::string construction,
                                              PairSampler const& sampler,
                                              ChaosExpansion const& F, std::size_t N,
                                              std::uint64_t seed, unsigned workers = 0);

}  // namespace chaoslab
