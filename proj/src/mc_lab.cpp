#include "chaoslab/mc_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <regex>

#include <boost/math/special_functions/erf.hpp>

#include "chaoslab/rng.hpp"
#include "parallel.hpp"

namespace chaoslab {

std::size_t sample_budget()
{
    return 64 * tensor_budget();
}

namespace {

void check_sampling(std::size_t N, std::size_t m)
{
    if (N == 0)
        throw InputError("sample: N must be at least 1");
    auto const cap = sample_budget();
    if (m != 0 && N > cap / m)
        throw BudgetExceededError("sample: N * m = " + std::to_string(N) + " * "
                                  + std::to_string(m) + " exceeds the sampling budget of "
                                  + std::to_string(cap));
}

// Fills one row per sample; `row(xi, out)` writes dim values.
template<class RowFn>
SampleBatch run_batch(std::size_t N, std::size_t m, std::size_t dim, std::uint64_t seed,
                      unsigned workers, RowFn row)
{
    check_sampling(N, m);
    CounterRng const rng(seed);
    auto chunks = detail::map_chunks<std::vector<double>>(
        N, workers, [&](std::size_t begin, std::size_t end) {
            std::vector<double> out((end - begin) * dim);
            std::vector<double> xi(m);
            for (std::size_t i = begin; i < end; ++i)
            {
                rng.normals(i, xi);
                row(xi, out.data() + (i - begin) * dim);
            }
            return out;
        });
    SampleBatch batch{{}, N, dim, seed, CounterRng::id};
    batch.values.reserve(N * dim);
    for (auto const& c : chunks)
        batch.values.insert(batch.values.end(), c.begin(), c.end());
    return batch;
}

}  // namespace

SampleBatch sample(ChaosExpansion const& F, std::size_t N, std::uint64_t seed, unsigned workers)
{
    ChaosEvaluator const eval(F);
    return run_batch(N, F.grid().size(), 1, seed, workers,
                     [&eval](std::vector<double> const& xi, double* out) { *out = eval(xi); });
}

SampleBatch sample(ChaosVector const& v, std::size_t N, std::uint64_t seed, unsigned workers)
{
    std::vector<ChaosEvaluator> evals;
    for (std::size_t k = 0; k < v.size(); ++k)
        evals.emplace_back(v.component(k));
    return run_batch(N, v.grid().size(), v.size(), seed, workers,
                     [&evals](std::vector<double> const& xi, double* out) {
                         for (std::size_t k = 0; k < evals.size(); ++k)
                             out[k] = evals[k](xi);
                     });
}

SampleBatch sample_gaussian(SymMatrix const& sigma, std::size_t N, std::uint64_t seed,
                            unsigned workers)
{
    std::size_t const d = sigma.size();
    auto eig = sym_eig(sigma);
    // Column k of the factor is sqrt(l_k) v_k.
    std::vector<double> factor(d * d);
    for (std::size_t k = 0; k < d; ++k)
    {
        double const s = std::sqrt(std::max(0.0, eig.values[k]));
        for (std::size_t i = 0; i < d; ++i)
            factor[i * d + k] = s * eig.vectors[k][i];
    }
    return run_batch(N, d, d, seed, workers, [&factor, d](std::vector<double> const& z, double* out) {
        for (std::size_t i = 0; i < d; ++i)
        {
            double s = 0;
            for (std::size_t k = 0; k < d; ++k)
                s += factor[i * d + k] * z[k];
            out[i] = s;
        }
    });
}

//---------------------------------------------------------------------------//
// Estimators
//---------------------------------------------------------------------------//

nlohmann::json DistanceEstimate::to_json() const
{
    nlohmann::json j = {{"name", name}, {"value", value}, {"params", params}};
    j["stderr"] = std::isfinite(std_error) ? nlohmann::json(std_error) : nlohmann::json();
    if (!note.empty())
        j["note"] = note;
    return j;
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double u)
{
    if (!(u > 0 && u < 1))
        throw InputError("normal_quantile: argument must lie in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2 * u);
}

namespace {

void require_scalar(SampleBatch const& batch, char const* what)
{
    if (batch.count == 0 || batch.values.empty())
        throw InputError(std::string(what) + ": empty batch");
    if (batch.dim != 1)
        throw InputError(std::string(what) + ": needs a scalar batch");
}

}  // namespace

DistanceEstimate tv_binned(SampleBatch const& batch, double sigma2, std::size_t bins,
                           double range_mult)
{
    require_scalar(batch, "tv_binned");
    if (!(sigma2 > 0))
        throw InputError("tv_binned: sigma2 must be positive");
    if (bins < 10)
        throw InputError("tv_binned: need at least 10 bins");
    if (!(range_mult > 0))
        throw InputError("tv_binned: range multiplier must be positive");

    double const sigma = std::sqrt(sigma2);
    double const lo = -range_mult * sigma;
    double const width = 2 * range_mult * sigma / static_cast<double>(bins);

    // Slots: 0 lower tail, 1..bins interior, bins+1 upper tail.
    std::vector<std::size_t> counts(bins + 2, 0);
    for (double x : batch.values)
    {
        std::size_t slot;
        if (x < lo)
            slot = 0;
        else if (x >= -lo)
            slot = bins + 1;
        else
            slot = 1 + std::min(bins - 1, static_cast<std::size_t>((x - lo) / width));
        ++counts[slot];
    }

    std::vector<double> edges(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b)
        edges[b] = (lo + static_cast<double>(b) * width) / sigma;
    edges[bins] = range_mult;
    auto mass = [&](std::size_t slot) {
        if (slot == 0)
            return normal_cdf(edges[0]);
        if (slot == bins + 1)
            return normal_cdf(-edges[bins]);
        double a = edges[slot - 1], b = edges[slot];
        // Difference of upper tails on the right keeps precision.
        return a >= 0 ? normal_cdf(-a) - normal_cdf(-b) : normal_cdf(b) - normal_cdf(a);
    };

    double const n = static_cast<double>(batch.count);
    double tv = 0, signed_mass = 0;
    for (std::size_t s = 0; s < counts.size(); ++s)
    {
        double const emp = static_cast<double>(counts[s]) / n;
        double const diff = emp - mass(s);
        tv += std::abs(diff);
        signed_mass += (diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0) * emp;
    }

    DistanceEstimate est;
    est.name = "tv_binned";
    est.value = 0.5 * tv;
    est.std_error = std::sqrt(std::max(0.0, 1 - signed_mass * signed_mass) / (4 * n));
    est.note = "binned TV lower-bounds the true TV up to sampling noise; positive bias of "
               "order sqrt(bins / N) under the null";
    est.params = {{"bins", bins}, {"range_mult", range_mult}, {"sigma2", sigma2},
                  {"N", batch.count}};
    return est;
}

DistanceEstimate w1_empirical(SampleBatch const& batch, double sigma2)
{
    require_scalar(batch, "w1_empirical");
    if (!(sigma2 > 0))
        throw InputError("w1_empirical: sigma2 must be positive");
    std::vector<double> x = batch.values;
    std::sort(x.begin(), x.end());
    double const sigma = std::sqrt(sigma2);
    double const n = static_cast<double>(x.size());
    double sum = 0;
    for (std::size_t k = 0; k < x.size(); ++k)
        sum += std::abs(x[k] - sigma * normal_quantile((static_cast<double>(k) + 0.5) / n));

    DistanceEstimate est;
    est.name = "w1";
    est.value = sum / n;
    est.std_error = std::numeric_limits<double>::quiet_NaN();
    est.note = "quantile-coupling estimate; no closed-form standard error";
    est.params = {{"sigma2", sigma2}, {"N", batch.count}};
    return est;
}

//---------------------------------------------------------------------------//
// Battery
//---------------------------------------------------------------------------//

BatteryFunction BatteryFunction::parse(std::string const& id, std::size_t d)
{
    static std::regex const pair(R"(x(\d+)x(\d+))");
    static std::regex const square(R"(x(\d+)\^2x(\d+))");
    static std::regex const cube(R"(x(\d+)\^3)");
    std::smatch mt;
    BatteryFunction g;
    g.id = id;
    auto index = [&](std::ssub_match const& s) {
        std::size_t k = std::stoul(s.str());
        if (k < 1 || k > d)
            throw InputError("battery function '" + id + "': component index out of range");
        return k - 1;
    };
    if (std::regex_match(id, mt, pair))
    {
        g.kind = 0;
        g.i = index(mt[1]);
        g.j = index(mt[2]);
    }
    else if (std::regex_match(id, mt, square))
    {
        g.kind = 1;
        g.i = index(mt[1]);
        g.j = index(mt[2]);
    }
    else if (std::regex_match(id, mt, cube))
    {
        g.kind = 2;
        g.i = g.j = index(mt[1]);
    }
    else
    {
        throw InputError("unknown battery function '" + id + "'");
    }
    return g;
}

double BatteryFunction::operator()(double const* x) const
{
    switch (kind)
    {
        case 0: return x[i] * x[j];
        case 1: return x[i] * x[i] * x[j];
        default: return x[i] * x[i] * x[i];
    }
}

double BatteryFunction::gaussian_mean(SymMatrix const& sigma) const
{
    // Odd monomials of a centered Gaussian vanish.
    return kind == 0 ? sigma(i, j) : 0.0;
}

double BatteryFunction::M2(double R) const
{
    switch (kind)
    {
        case 0: return i == j ? 2.0 : 1.0;
        case 1:
            // Hessian [[2x_j, 2x_i], [2x_i, 0]]; for i == j this is x^3.
            return i == j ? 6 * R : R * (1 + std::sqrt(5.0));
        default: return 6 * R;
    }
}

std::vector<std::string> battery_ids(std::size_t d)
{
    std::vector<std::string> ids;
    auto s = [](std::size_t k) { return std::to_string(k + 1); };
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j)
            ids.push_back("x" + s(i) + "x" + s(j));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (i != j)
                ids.push_back("x" + s(i) + "^2x" + s(j));
    for (std::size_t i = 0; i < d; ++i)
        ids.push_back("x" + s(i) + "^3");
    return ids;
}

double battery_box_radius(SymMatrix const& sigma)
{
    double v = 0;
    for (std::size_t k = 0; k < sigma.size(); ++k)
        v = std::max(v, sigma(k, k));
    return 5 * std::sqrt(v);
}

DistanceEstimate smooth_discrepancy(SampleBatch const& batch, SymMatrix const& sigma,
                                    std::string const& g_id)
{
    if (batch.count == 0)
        throw InputError("smooth_discrepancy: empty batch");
    if (batch.dim != sigma.size())
        throw InputError("smooth_discrepancy: batch dimension does not match the covariance");
    auto const g = BatteryFunction::parse(g_id, batch.dim);

    double s = 0, s2 = 0;
    for (std::size_t n = 0; n < batch.count; ++n)
    {
        double const v = g(batch.values.data() + n * batch.dim);
        s += v;
        s2 += v * v;
    }
    double const n = static_cast<double>(batch.count);
    double const mean = s / n;
    double const var = batch.count > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
    double const R = battery_box_radius(sigma);

    DistanceEstimate est;
    est.name = "smooth:" + g_id;
    est.value = std::abs(mean - g.gaussian_mean(sigma));
    est.std_error = std::sqrt(var / n);
    est.note = "M2 taken over the box [-R, R]^d";
    est.params = {{"g", g_id}, {"gaussian_mean", g.gaussian_mean(sigma)}, {"box_radius", R},
                  {"M2", g.M2(R)}, {"N", batch.count}};
    return est;
}

}  // namespace chaoslab
