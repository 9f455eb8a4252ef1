#include "chaoslab/exchange_pairs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "chaoslab/rng.hpp"
#include "parallel.hpp"
#include "tuple_util.hpp"

namespace chaoslab {

//---------------------------------------------------------------------------//
// Pairs
//---------------------------------------------------------------------------//

MehlerPair::MehlerPair(Grid const& base, double t_)
    : t(t_), base_grid(base), doubled_grid(Grid::doubled(base)), map(base, doubled_grid)
{
    if (!(t > 0) || !std::isfinite(t))
        throw InputError("Mehler pair: t must be positive and finite");
    double const keep = std::exp(-t);
    double const fresh = std::sqrt(-std::expm1(-2 * t));
    std::size_t const m = base.size();
    for (std::size_t i = 0; i < m; ++i)
    {
        map.set(i, i, keep);
        map.set(i + m, i, fresh);
    }
}

GibbsPair::GibbsPair(Grid const& base, std::size_t n_) : n(n_), base_grid(base)
{
    std::size_t const m = base.size();
    if (n == 0 || m % n != 0)
        throw GridMismatchError("Gibbs pair: block count " + std::to_string(n)
                                + " does not divide the grid size " + std::to_string(m));
    block_of.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        block_of[i] = i / (m / n);
}

std::vector<std::size_t> GibbsPair::block_cells(std::size_t v) const
{
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < block_of.size(); ++i)
    {
        if (block_of[i] == v)
            cells.push_back(i);
    }
    return cells;
}

CellMap GibbsPair::swap_map(std::size_t v) const
{
    std::size_t const m = base_grid.size();
    CellMap map(base_grid, Grid::doubled(base_grid));
    for (std::size_t i = 0; i < m; ++i)
        map.set(block_of[i] == v ? i + m : i, i, 1.0);
    return map;
}

CellMap first_half_embedding(Grid const& base)
{
    CellMap map(base, Grid::doubled(base));
    for (std::size_t i = 0; i < base.size(); ++i)
        map.set(i, i, 1.0);
    return map;
}

//---------------------------------------------------------------------------//
// Conditional algebra
//---------------------------------------------------------------------------//

ChaosExpansion push_forward(CellMap const& map, ChaosExpansion const& F)
{
    require_same_grid(map.source(), F.grid(), "push_forward");
    ChaosExpansion out(map.target(), F.constant());
    for (auto const& [q, f] : F.terms())
        out.add_kernel(push_forward(map, f));
    return out;
}

ChaosExpansion mehler_transport(ChaosExpansion const& F, double t)
{
    return push_forward(MehlerPair(F.grid(), t).map, F);
}

ChaosExpansion mehler_increment(ChaosExpansion const& F, double t)
{
    MehlerPair const pair(F.grid(), t);
    CellMap const embed = first_half_embedding(F.grid());
    std::size_t const m = F.grid().size();
    std::size_t const mm = 2 * m;

    ChaosExpansion out(pair.doubled_grid);
    for (auto const& [q, f] : F.terms())
    {
        Kernel d = push_forward(pair.map, f);
        d -= push_forward(embed, f);
        // The first-half block is (e^{-qt} - 1) f; write it without the
        // subtraction.
        double const scale = std::expm1(-q * t);
        auto dst = d.mutable_coeffs();
        detail::Odometer odo(m, q);
        for (std::size_t z = 0; z < f.size(); ++z, odo.next())
            dst[detail::encode(odo.digits(), mm)] = scale * f[z];
        out.add_kernel(d);
    }
    return out;
}

ChaosExpansion condition_on_first_half(ChaosExpansion const& H)
{
    if (!H.grid().is_doubled())
        throw GridMismatchError("condition_on_first_half: expansion is not on a doubled grid");
    ChaosExpansion out(H.grid().base(), H.constant());
    for (auto const& [q, h] : H.terms())
        out.add_kernel(first_half_block(h));
    return out;
}

namespace {

using KernelAccumulator = std::map<int, Kernel>;

void accumulate(KernelAccumulator& acc, Kernel k)
{
    auto it = acc.find(k.order());
    if (it == acc.end())
        acc.emplace(k.order(), std::move(k));
    else
        it->second += k;
}

// Linear indices (in the doubled grid's numbering) of every k-tuple whose
// coordinates all lie in the first half, in lexicographic order.
std::vector<std::size_t> first_half_tuples(std::size_t m, int k)
{
    std::size_t const n = *checked_power(m, k);
    std::vector<std::size_t> idx(n);
    detail::Odometer odo(m, k);
    for (std::size_t z = 0; z < n; ++z, odo.next())
        idx[z] = detail::encode(odo.digits(), 2 * m);
    return idx;
}

// Unsymmetrized terms of condition_on_first_half(H K), added into acc and
// scalar.
void accumulate_conditioned(ChaosExpansion const& H, ChaosExpansion const& K,
                            KernelAccumulator& acc, double& scalar)
{
    require_same_grid(H.grid(), K.grid(), "multiply_conditioned");
    if (!H.grid().is_doubled())
        throw GridMismatchError("multiply_conditioned: expansions are not on a doubled grid");
    Grid const base = H.grid().base();
    std::size_t const m = base.size();
    std::size_t const mm = 2 * m;

    scalar += H.constant() * K.constant();
    for (auto const& [q, k] : K.terms())
        accumulate(acc, H.constant() * first_half_block(k));
    for (auto const& [p, h] : H.terms())
        accumulate(acc, K.constant() * first_half_block(h));

    for (auto const& [p, h] : H.terms())
    {
        for (auto const& [q, k] : K.terms())
        {
            for (int r = 0; r <= std::min(p, q); ++r)
            {
                double const c = factorial(r) * binomial(p, r) * binomial(q, r);
                if (p == r && q == r)
                {
                    scalar += c * inner(h, k);
                    continue;
                }
                std::size_t const inner_n = *checked_power(mm, r);
                auto const w = detail::tuple_weights(H.grid(), r);
                auto const xs = first_half_tuples(m, p - r);
                auto const ys = first_half_tuples(m, q - r);

                Kernel out(base, p + q - 2 * r);
                auto dst = out.mutable_coeffs();
                auto a = h.coeffs();
                auto b = k.coeffs();
                for (std::size_t x = 0; x < xs.size(); ++x)
                {
                    double const* hx = a.data() + xs[x] * inner_n;
                    for (std::size_t y = 0; y < ys.size(); ++y)
                    {
                        double const* ky = b.data() + ys[y] * inner_n;
                        double sum = 0;
                        for (std::size_t u = 0; u < inner_n; ++u)
                            sum += hx[u] * ky[u] * w[u];
                        dst[x * ys.size() + y] = c * sum;
                    }
                }
                accumulate(acc, std::move(out));
            }
        }
    }
}

ChaosExpansion finish(Grid const& grid, KernelAccumulator const& acc, double scalar)
{
    ChaosExpansion out(grid, scalar);
    for (auto const& [q, k] : acc)
        out.add_kernel(k);
    return out;
}

}  // namespace

ChaosExpansion multiply_conditioned(ChaosExpansion const& H, ChaosExpansion const& K)
{
    KernelAccumulator acc;
    double scalar = 0;
    accumulate_conditioned(H, K, acc, scalar);
    return finish(H.grid().base(), acc, scalar);
}

ChaosExpansion quadratic_target(int p, Kernel const& f)
{
    Kernel const fs = symmetrize(f);
    ChaosExpansion out(f.grid());
    for (int r = 1; r <= p; ++r)
    {
        double const c = 2.0 * r * factorial(r) * binomial(p, r) * binomial(p, r);
        auto result = contract(fs, fs, r);
        if (auto* s = std::get_if<double>(&result))
            out.set_constant(out.constant() + c * *s);
        else
            out.add_kernel(c * std::get<Kernel>(result));
    }
    return out;
}

//---------------------------------------------------------------------------//
// Mehler diagnostics
//---------------------------------------------------------------------------//

namespace {

ChaosExpansion pure(Kernel const& f, int p)
{
    return ChaosExpansion::from_kernel(p, f);
}

void require_positive_t(double t)
{
    if (!(t > 0) || !std::isfinite(t))
        throw InputError("t must be positive and finite");
}

}  // namespace

double mehler_drift_check(Kernel const& f, int p, double t)
{
    require_positive_t(t);
    ChaosExpansion const F = pure(f, p);
    ChaosExpansion drift = condition_on_first_half(mehler_increment(F, t));
    drift *= 1.0 / t;
    drift += static_cast<double>(p) * F;
    return std::sqrt(second_moment(drift));
}

double mehler_quadratic_check(Kernel const& f, int p, double t)
{
    require_positive_t(t);
    ChaosExpansion const D = mehler_increment(pure(f, p), t);
    ChaosExpansion Q = multiply_conditioned(D, D);
    Q *= 1.0 / t;
    return l2_distance(Q, quadratic_target(p, f));
}

FourthMomentRoute resolve_fourth_route(Kernel const& f, int p, FourthMomentRoute route)
{
    if (route != FourthMomentRoute::automatic)
        return route;
    auto n = checked_power(2 * f.cells(), 2 * p);
    return (n && *n <= tensor_budget()) ? FourthMomentRoute::doubled_grid
                                        : FourthMomentRoute::exchangeable;
}

double mehler_fourth_check(Kernel const& f, int p, double t, FourthMomentRoute route)
{
    require_positive_t(t);
    ChaosExpansion const F = pure(f, p);
    ChaosExpansion const D = mehler_increment(F, t);
    if (resolve_fourth_route(f, p, route) == FourthMomentRoute::doubled_grid)
        return second_moment(multiply(D, D)) / t;

    // Exchangeability of (F, F_t) together with E[F_t | B] = e^{-pt} F gives
    // E[D^4] = 4 (e^{-pt} - 1) E[F^4] + 6 E[F^2 E[D^2 | B]].
    ChaosExpansion const F2 = multiply(F, F);
    double const fourth = second_moment(F2);
    double const mixed = expectation_of_product(F2, multiply_conditioned(D, D));
    return (4 * std::expm1(-p * t) * fourth + 6 * mixed) / t;
}

double mehler_second_moment_rate(Kernel const& f, int p, double t)
{
    require_positive_t(t);
    return second_moment(mehler_increment(pure(f, p), t)) / t;
}

double mehler_third_moment_bound(Kernel const& f, int p, double t)
{
    double const second = mehler_second_moment_rate(f, p, t);
    double const fourth = mehler_fourth_check(f, p, t);
    return std::sqrt(std::max(0.0, second * fourth));
}

//---------------------------------------------------------------------------//
// Gibbs diagnostics
//---------------------------------------------------------------------------//

GibbsDrift gibbs_drift(ChaosExpansion const& F, std::size_t n)
{
    GibbsPair const pair(F.grid(), n);
    std::size_t const m = F.grid().size();

    // Resampling block v wipes every tuple that touches v, so
    // sum_v (I(f 1{no coord in v}) - F) has kernel -f * (#blocks touched).
    ChaosExpansion drift(F.grid());
    std::vector<std::size_t> seen;
    for (auto const& [q, f] : F.terms())
    {
        std::vector<double> dst(f.size());
        detail::Odometer odo(m, q);
        for (std::size_t z = 0; z < f.size(); ++z, odo.next())
        {
            seen.clear();
            for (std::size_t c : odo.digits())
                seen.push_back(pair.block_of[c]);
            std::sort(seen.begin(), seen.end());
            auto touched = std::unique(seen.begin(), seen.end()) - seen.begin();
            dst[z] = -f[z] * static_cast<double>(touched);
        }
        // The block count is permutation invariant, so this is already
        // symmetric; re-averaging would only add rounding.
        drift.add_kernel(Kernel(F.grid(), q, std::move(dst), true));
    }
    double const distance = l2_distance(drift, ou_generator(F));
    return {std::move(drift), distance};
}

double gibbs_quadratic_check(Kernel const& f, int p, std::size_t n)
{
    ChaosExpansion const F = pure(f, p);
    GibbsPair const pair(F.grid(), n);
    ChaosExpansion const embedded = push_forward(first_half_embedding(F.grid()), F);

    KernelAccumulator acc;
    double scalar = 0;
    for (std::size_t v = 0; v < n; ++v)
    {
        ChaosExpansion const D = push_forward(pair.swap_map(v), F) - embedded;
        accumulate_conditioned(D, D, acc, scalar);
    }
    return l2_distance(finish(F.grid(), acc, scalar), quadratic_target(p, f));
}

//---------------------------------------------------------------------------//
// Rate tables
//---------------------------------------------------------------------------//

double loglog_slope(std::span<double const> x, std::span<double const> y)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    {
        if (!(x[i] > 0) || !(y[i] > 0))
            continue;
        double const lx = std::log(x[i]);
        double const ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2)
        return std::numeric_limits<double>::quiet_NaN();
    double const denom = n * sxx - sx * sx;
    if (denom == 0)
        return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / denom;
}

namespace {

void append_series(DiagnosticsReport& report, std::string const& name,
                   std::vector<double> const& params, std::vector<double> const& dist,
                   double target_norm)
{
    double const slope = loglog_slope(params, dist);
    for (std::size_t i = 0; i < params.size(); ++i)
        report.rows.push_back({name, params[i], dist[i], target_norm, slope});
}

}  // namespace

DiagnosticsReport mehler_rate_table(Kernel const& f, int p, std::span<double const> t_grid)
{
    ChaosExpansion const F = pure(f, p);
    double const sigma = std::sqrt(second_moment(F));
    double const target_q = std::sqrt(second_moment(quadratic_target(p, f)));

    std::vector<double> ts(t_grid.begin(), t_grid.end());
    std::vector<double> drift, quad, fourth, third;
    for (double t : ts)
    {
        drift.push_back(mehler_drift_check(f, p, t));
        quad.push_back(mehler_quadratic_check(f, p, t));
        double const d4 = mehler_fourth_check(f, p, t);
        fourth.push_back(d4);
        third.push_back(std::sqrt(std::max(0.0, mehler_second_moment_rate(f, p, t) * d4)));
    }
    DiagnosticsReport report{"mehler", {}};
    append_series(report, "mehler_drift", ts, drift, p * sigma);
    append_series(report, "mehler_quadratic", ts, quad, target_q);
    append_series(report, "mehler_fourth", ts, fourth, 0.0);
    append_series(report, "mehler_third_bound", ts, third, 0.0);
    return report;
}

DiagnosticsReport gibbs_rate_table(Kernel const& f, int p, std::span<std::size_t const> n_grid)
{
    ChaosExpansion const F = pure(f, p);
    double const sigma = std::sqrt(second_moment(F));
    double const target_q = std::sqrt(second_moment(quadratic_target(p, f)));
    auto const fits = checked_power(f.cells(), 2 * p);
    bool const quadratic = fits && *fits <= tensor_budget();

    std::vector<double> ns, drift, quad;
    for (std::size_t n : n_grid)
    {
        ns.push_back(static_cast<double>(n));
        drift.push_back(gibbs_drift(F, n).distance);
        if (quadratic)
            quad.push_back(gibbs_quadratic_check(f, p, n));
    }
    DiagnosticsReport report{"gibbs", {}};
    append_series(report, "gibbs_drift", ns, drift, p * sigma);
    if (quadratic)
        append_series(report, "gibbs_quadratic", ns, quad, target_q);
    return report;
}

std::string to_csv(DiagnosticsReport const& report)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "construction,parameter,distance,target_norm,rate_estimate\n";
    for (auto const& row : report.rows)
    {
        os << row.construction << ',' << row.parameter << ',' << row.distance << ','
           << row.target_norm << ',' << row.rate_estimate << '\n';
    }
    return os.str();
}

//---------------------------------------------------------------------------//
// Exchangeability
//---------------------------------------------------------------------------//

PairSampler mehler_pair_sampler(double t)
{
    if (!(t >= 0) || !std::isfinite(t))
        throw InputError("Mehler sampler: t must be non-negative");
    double const keep = std::exp(-t);
    double const fresh = std::sqrt(-std::expm1(-2 * t));
    return [keep, fresh](std::span<double const> xi, std::span<double const> xi_hat, double,
                         std::span<double> out) {
        for (std::size_t i = 0; i < xi.size(); ++i)
            out[i] = keep * xi[i] + fresh * xi_hat[i];
    };
}

PairSampler gibbs_pair_sampler(GibbsPair const& pair)
{
    return [blocks = pair.block_of, n = pair.n](std::span<double const> xi,
                                                std::span<double const> xi_hat, double u,
                                                std::span<double> out) {
        std::size_t const v = std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
        for (std::size_t i = 0; i < xi.size(); ++i)
            out[i] = blocks[i] == v ? xi_hat[i] : xi[i];
    };
}

namespace {

constexpr std::array<char const*, 4> phi_names{"x*y^2", "x^2*y", "x^3*y", "min(x,y)*x"};

std::array<double, 4> phi_differences(double x, double y)
{
    auto phi = [](double a, double b) {
        return std::array<double, 4>{a * b * b, a * a * b, a * a * a * b, std::min(a, b) * a};
    };
    auto const forward = phi(x, y);
    auto const backward = phi(y, x);
    return {forward[0] - backward[0], forward[1] - backward[1], forward[2] - backward[2],
            forward[3] - backward[3]};
}

struct PhiSums
{
    std::array<double, 4> sum{};
    std::array<double, 4> sum_sq{};
};

}  // namespace

ExchangeabilityReport exchangeability_mc_test(std::string construction,
                                              PairSampler const& sampler,
                                              ChaosExpansion const& F, std::size_t N,
                                              std::uint64_t seed, unsigned workers)
{
    if (N < 10000)
        throw InputError("exchangeability test needs at least 1e4 samples");
    ChaosEvaluator const eval(F);
    std::size_t const m = F.grid().size();
    CounterRng const base_rng(seed, 0), hat_rng(seed, 1), choice_rng(seed, 2);

    auto partials = detail::map_chunks<PhiSums>(N, workers, [&](std::size_t begin, std::size_t end) {
        PhiSums s;
        std::vector<double> xi(m), xi_hat(m), partner(m);
        for (std::size_t i = begin; i < end; ++i)
        {
            base_rng.normals(i, xi);
            hat_rng.normals(i, xi_hat);
            double const u = choice_rng.uniforms(i, 0)[0];
            sampler(xi, xi_hat, u, partner);
            auto const d = phi_differences(eval(xi), eval(partner));
            for (std::size_t k = 0; k < d.size(); ++k)
            {
                s.sum[k] += d[k];
                s.sum_sq[k] += d[k] * d[k];
            }
        }
        return s;
    });

    PhiSums total;
    for (auto const& part : partials)
    {
        for (std::size_t k = 0; k < 4; ++k)
        {
            total.sum[k] += part.sum[k];
            total.sum_sq[k] += part.sum_sq[k];
        }
    }

    ExchangeabilityReport report{std::move(construction), N, seed, {}, true};
    double const n = static_cast<double>(N);
    for (std::size_t k = 0; k < 4; ++k)
    {
        double const mean = total.sum[k] / n;
        double const var = std::max(0.0, (total.sum_sq[k] - n * mean * mean) / (n - 1));
        double const se = std::sqrt(var / n);
        bool const pass = std::abs(mean) <= 4 * se;
        report.stats.push_back({phi_names[k], mean, se, pass});
        report.pass = report.pass && pass;
    }
    return report;
}

}  // namespace chaoslab
