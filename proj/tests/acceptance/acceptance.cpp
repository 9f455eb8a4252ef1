// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and runtime limits are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "chaoslab/chaos_algebra.hpp"
#include "chaoslab/exchange_pairs.hpp"
#include "chaoslab/families.hpp"
#include "chaoslab/mc_lab.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/stein_bounds.hpp"

using namespace chaoslab;

namespace {

struct Outcome
{
    bool pass;
    std::string detail;
};

std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

// Deterministic draws for random kernels and evaluation points.
class Draws
{
  public:
    explicit Draws(std::uint64_t seed) : rng_(seed, 21) {}

    std::vector<double> normals(std::size_t n)
    {
        std::vector<double> out(n);
        rng_.normals(next_++, out);
        return out;
    }
    std::size_t integer(std::size_t lo, std::size_t hi)
    {
        double u = rng_.uniforms(next_++, 0)[0];
        return lo + std::min(hi - lo, static_cast<std::size_t>(u * static_cast<double>(hi - lo + 1)));
    }
    Kernel kernel(Grid const& g, int p)
    {
        std::size_t size = 1;
        for (int k = 0; k < p; ++k)
            size *= g.size();
        return symmetrize(Kernel(g, p, normals(size)));
    }

  private:
    CounterRng rng_;
    std::uint64_t next_ = 0;
};

double max_abs_diff(Kernel const& a, Kernel const& b)
{
    double worst = 0;
    for (std::size_t k = 0; k < a.size(); ++k)
        worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

double max_abs(Kernel const& a)
{
    double worst = 0;
    for (double x : a.coeffs())
        worst = std::max(worst, std::abs(x));
    return worst;
}

bool strictly_decreasing(std::vector<double> const& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1]))
            return false;
    return true;
}

std::string join(std::vector<double> const& v)
{
    std::string s;
    for (double x : v)
        s += (s.empty() ? "" : " ") + sci(x);
    return "[" + s + "]";
}

//---------------------------------------------------------------------------//

Outcome product_formula()
{
    Draws draw(1);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial)
    {
        int const p = static_cast<int>(draw.integer(1, 3));
        int const q = static_cast<int>(draw.integer(1, 3));
        Grid const g = Grid::uniform(draw.integer(2, 8));
        ChaosExpansion const F = ChaosExpansion::from_kernel(p, draw.kernel(g, p));
        ChaosExpansion const G = ChaosExpansion::from_kernel(q, draw.kernel(g, q));
        ChaosEvaluator const eF(F), eG(G), eFG(multiply(F, G));
        // Relative to |F G| but never below sigma_F sigma_G, so sign changes
        // of the product do not blow the ratio up.
        double const scale = std::sqrt(variance(F) * variance(G));
        for (int s = 0; s < 100; ++s)
        {
            auto const xi = draw.normals(g.size());
            double const want = eF(xi) * eG(xi);
            worst = std::max(worst, std::abs(eFG(xi) - want) / std::max(std::abs(want), scale));
        }
    }
    return {worst <= 1e-9, "50 pairs x 100 points, max rel err " + sci(worst) + " (tol 1e-9)"};
}

Outcome conditional_expectation()
{
    Draws draw(2);
    Grid const g = Grid::uniform(8);
    double worst = 0;
    for (int p = 1; p <= 3; ++p)
    {
        Kernel const f = draw.kernel(g, p);
        ChaosExpansion const F = ChaosExpansion::from_kernel(p, f);
        for (double t : {1.0, 0.1, 0.01})
        {
            ChaosExpansion const C = condition_on_first_half(mehler_transport(F, t));
            Kernel const* got = C.term(p);
            Kernel const want = std::exp(-p * t) * f;
            bool const other_orders = C.constant() != 0 || C.terms().size() != 1;
            double const err = other_orders || !got ? INFINITY
                                                    : max_abs_diff(*got, want) / max_abs(want);
            worst = std::max(worst, err);
        }
    }
    return {worst <= 1e-12,
            "p in {1,2,3}, t in {1,0.1,0.01}, m=8, max rel coeff err " + sci(worst)
                + " (tol 1e-12)"};
}

Outcome mehler_rates()
{
    std::vector<double> const ts{1e-1, 1e-2, 1e-3};
    struct Case
    {
        std::string name;
        Kernel f;
        int p;
    };
    std::vector<Case> cases{{"qvar(n=16)", qvar_kernel(16), 2},
                            {"offdiag-rand(p=3,m=12)", offdiag_rand_kernel(3, 12, 1), 3}};
    bool ok = true;
    std::ostringstream detail;
    double worst_drift = 0;
    for (auto const& c : cases)
    {
        double const sigma = std::sqrt(variance(ChaosExpansion::from_kernel(c.p, c.f)));
        std::vector<double> drift, quad, fourth;
        for (double t : ts)
        {
            drift.push_back(mehler_drift_check(c.f, c.p, t));
            quad.push_back(mehler_quadratic_check(c.f, c.p, t));
            fourth.push_back(mehler_fourth_check(c.f, c.p, t));
            double const closed = std::abs(std::expm1(-c.p * t) / t + c.p) * sigma;
            worst_drift = std::max(worst_drift, std::abs(drift.back() - closed) / closed);
        }
        double const sd = loglog_slope(ts, drift), sq = loglog_slope(ts, quad),
                     sf = loglog_slope(ts, fourth);
        for (double s : {sd, sq, sf})
            ok = ok && s >= 0.9 && s <= 1.1;
        detail << c.name << " slopes " << sci(sd) << "/" << sci(sq) << "/" << sci(sf) << "; ";
    }
    ok = ok && worst_drift <= 1e-10;
    detail << "drift vs closed form rel err " << sci(worst_drift) << " (tol 1e-10), slopes in "
           << "[0.9, 1.1]";
    return {ok, detail.str()};
}

Outcome gibbs_diagnostics()
{
    Draws draw(4);
    bool ok = true;
    std::ostringstream detail;

    double worst_zero = 0;
    Grid const g12 = Grid::uniform(12);
    ChaosExpansion const F1 = ChaosExpansion::from_kernel(1, draw.kernel(g12, 1));
    for (std::size_t n : {1, 2, 3, 4, 6, 12})
        worst_zero = std::max(worst_zero, gibbs_drift(F1, n).distance);
    for (std::size_t m : {3, 4, 6, 8})
    {
        ChaosExpansion const F2 = ChaosExpansion::from_kernel(2, offdiag_rand_kernel(2, m, m));
        worst_zero = std::max(worst_zero, gibbs_drift(F2, m).distance);
    }
    ok = ok && worst_zero == 0.0;
    detail << "p=1 and diagonal-free n=m distances max " << worst_zero << " (exact 0); ";

    // One block over all 64 cells: the kernel is constant on [0,1]^2.
    ChaosExpansion const Q = ChaosExpansion::from_kernel(2, qvar_kernel(1, 64));
    std::vector<double> dist;
    for (std::size_t n : {4, 8, 16, 32, 64})
        dist.push_back(gibbs_drift(Q, n).distance);
    ok = ok && strictly_decreasing(dist);
    detail << "qvar m=64 along n=4..64: " << join(dist);
    return {ok, detail.str()};
}

Outcome identity_and_intermediate()
{
    Draws draw(5);
    double worst = 0;
    bool order_ok = true;
    for (int trial = 0; trial < 50; ++trial)
    {
        int const p = static_cast<int>(draw.integer(2, 4));
        // F^2 lives on m^{2p} cells; keep it under 2^20 entries.
        std::size_t const m_max = p == 4 ? 5 : 8;
        Grid const g = Grid::uniform(draw.integer(2, m_max));
        Kernel const f = draw.kernel(g, p);
        ChaosExpansion const F = ChaosExpansion::from_kernel(p, f);
        double const k = kappa(f, p);
        double const direct = expectation_of_product(multiply(F, F), gradient_norm_residual(f, p));
        worst = std::max(worst, std::abs(k / 3 - direct) / std::abs(direct));
        order_ok = order_ok && k >= 0 && intermediate_bound(f, p) <= tv_bound(f, p) * (1 + 1e-12);
    }
    return {worst <= 1e-10 && order_ok,
            "50 kernels p in 2..4, m <= 8 (m <= 5 for p = 4); kappa/3 rel err " + sci(worst)
                + " (tol 1e-10); intermediate <= tv and kappa >= 0: "
                + (order_ok ? "yes" : "no")};
}

Outcome fourth_moment_experiment()
{
    std::size_t const N = 1000000;
    bool ok = true;
    std::vector<double> tv, bound;
    double worst_kappa = 0, bound64 = 0;
    std::ostringstream detail;
    for (std::size_t n : {4, 16, 64})
    {
        Kernel const f = qvar_kernel(n);
        // n independent blocks sqrt(n/2) (W_k^2 - 1/n); fourth cumulant of
        // Z^2 - 1 is 48.
        double const oracle = n * std::pow(std::sqrt(n / 2.0) / n, 4) * 48.0;
        worst_kappa = std::max(worst_kappa, std::abs(kappa(f, 2) - 12.0 / n) + std::abs(oracle - 12.0 / n));
        double const b = tv_bound(f, 2);
        auto const est = tv_binned(sample(ChaosExpansion::from_kernel(2, f), N, 600 + n), 1.0);
        tv.push_back(est.value);
        bound.push_back(b);
        if (n == 64)
            bound64 = b;
        bool const dom = est.value <= b + 0.01 + 4 * est.std_error;
        ok = ok && dom;
        detail << "n=" << n << " tv " << sci(est.value) << "+-" << sci(est.std_error) << " <= "
               << sci(b) << (dom ? "" : " (VIOLATED)") << "; ";
    }
    ok = ok && worst_kappa <= 1e-12 && std::abs(bound64 - 0.353553) <= 1e-6 &&
         strictly_decreasing(tv) && strictly_decreasing(bound);
    detail << "kappa err " << sci(worst_kappa) << ", tv_bound(64) = " << bound64;
    return {ok, detail.str()};
}

Outcome multivariate()
{
    std::size_t const N = 1000000;
    std::size_t const n = 16;
    ChaosVector const v = pair2d_vector(n);
    SymMatrix const sigma = covariance(v);
    bool ok = true;
    std::ostringstream detail;

    auto const batch = sample(v, N, 700);
    double const R = battery_box_radius(sigma);
    double worst_ratio = 0;
    for (auto const& id : battery_ids(v.size()))
    {
        auto const est = smooth_discrepancy(batch, sigma, id);
        double const b = smooth_bound(v, BatteryFunction::parse(id, v.size()).M2(R));
        ok = ok && est.value <= b + 4 * est.std_error;
        worst_ratio = std::max(worst_ratio, est.value / (b + 4 * est.std_error));
    }
    detail << "pair2d(n=16) battery of " << battery_ids(v.size()).size()
           << ", worst estimate/(bound+4SE) " << sci(worst_ratio) << "; ";

    BoundReport const w = wasserstein_bound(v);
    BoundReport const nprr = nprr_bound(v);
    ok = ok && std::isfinite(w.value) && std::isfinite(nprr.value);
    double const sum_v = s_variance_matrix(v).sum();
    double const radicand = fourth_moment_norm(v) - gaussian_fourth_moment_norm(sigma);
    ok = ok && sum_v <= radicand + 1e-10;
    detail << "W bounds " << sci(w.value) << ", " << sci(nprr.value) << "; sum V " << sci(sum_v)
           << " <= " << sci(radicand) << "; ";

    // E|N|^4 oracle
    auto const g = sample_gaussian(sigma, N, 701);
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < N; ++i)
    {
        double r2 = 0;
        for (std::size_t k = 0; k < g.dim; ++k)
            r2 += g.at(i, k) * g.at(i, k);
        s += r2 * r2;
        s2 += r2 * r2 * r2 * r2;
    }
    double const mean = s / N;
    double const se = std::sqrt((s2 / N - mean * mean) / N);
    double const closed = gaussian_fourth_moment_norm(sigma);
    ok = ok && std::abs(mean - closed) <= 4 * se;
    detail << "E|N|^4 " << closed << " vs MC " << sci(mean) << "+-" << sci(se);
    return {ok, detail.str()};
}

Outcome exchangeability()
{
    std::size_t const N = 1000000;
    Grid const g = Grid::uniform(16);
    ChaosExpansion const F = ChaosExpansion::from_kernel(2, qvar_kernel(16));
    auto const mehler = exchangeability_mc_test("mehler", mehler_pair_sampler(0.5), F, N, 801);
    auto const gibbs = exchangeability_mc_test("gibbs", gibbs_pair_sampler(GibbsPair(g, 4)), F, N, 802);
    PairSampler const shifted = [](std::span<double const> xi, std::span<double const>, double,
                                   std::span<double> out) {
        for (std::size_t i = 0; i < xi.size(); ++i)
            out[i] = xi[i] + 0.5;
    };
    auto const broken = exchangeability_mc_test("broken", shifted, F, N, 803);
    auto const worst = [](ExchangeabilityReport const& r) {
        double z = 0;
        for (auto const& s : r.stats)
            z = std::max(z, std::abs(s.discrepancy) / s.std_error);
        return z;
    };
    return {mehler.pass && gibbs.pass && !broken.pass,
            "qvar(n=16): mehler(t=0.5) max |z| " + sci(worst(mehler)) + ", gibbs(4 blocks) "
                + sci(worst(gibbs)) + " (pass <= 4); broken control " + sci(worst(broken))
                + (broken.pass ? " passed (should fail)" : " fails as required")};
}

Outcome hypercontractivity()
{
    Draws draw(9);
    bool ok = true;
    double worst_ratio = 0, worst_agree = 0;
    for (int trial = 0; trial < 100; ++trial)
    {
        int const p = static_cast<int>(draw.integer(1, 4));
        Grid const g = Grid::uniform(draw.integer(2, p == 4 ? 4 : 6));
        Kernel const f = draw.kernel(g, p);
        ChaosExpansion const F = ChaosExpansion::from_kernel(p, f);
        double c4 = 0;
        for (int r = 0; r <= p; ++r)
            c4 += std::pow(factorial(r), 2) * std::pow(binomial(p, r), 4) * factorial(2 * p - 2 * r);
        c4 /= std::pow(factorial(p), 2);
        // E F^4 twice: the contraction formula and the L2 norm of F^2.
        double const m4 = fourth_moment_pure(p, f);
        double const m4_direct = second_moment(multiply(F, F));
        double const s2 = variance(F);
        worst_agree = std::max(worst_agree, std::abs(m4 - m4_direct) / m4_direct);
        worst_ratio = std::max(worst_ratio, m4 / (c4 * s2 * s2));
        ok = ok && m4 <= c4 * s2 * s2 * (1 + 1e-12);
    }
    ok = ok && worst_agree <= 1e-10;
    return {ok, "100 kernels p <= 4, max E[F^4]/(c s^4) " + sci(worst_ratio)
                    + ", formula vs product route rel err " + sci(worst_agree)};
}

// x^alpha for a vector of expansions.
ChaosExpansion monomial(std::vector<ChaosExpansion> const& F, std::vector<int> const& alpha)
{
    ChaosExpansion out(F.front().grid(), 1.0);
    for (std::size_t i = 0; i < F.size(); ++i)
        for (int k = 0; k < alpha[i]; ++k)
            out = multiply(out, F[i]);
    return out;
}

// d/dx_j x^alpha as (coefficient, exponents).
std::pair<double, std::vector<int>> derivative(std::vector<int> alpha, std::size_t j)
{
    double const c = alpha[j];
    if (alpha[j] > 0)
        --alpha[j];
    return {c, alpha};
}

Outcome diffusion_identity()
{
    Draws draw(10);
    std::size_t const d = 2;
    std::vector<std::vector<int>> psis;
    for (int a = 0; a <= 3; ++a)
        for (int b = 0; a + b <= 3; ++b)
            if (a + b > 0)
                psis.push_back({a, b});

    double worst = 0;
    for (int trial = 0; trial < 20; ++trial)
    {
        Grid const g = Grid::uniform(3);
        std::vector<ChaosExpansion> F;
        for (std::size_t i = 0; i < d; ++i)
        {
            ChaosExpansion Fi(g, draw.normals(1)[0]);
            for (int q = 1; q <= 2; ++q)
                Fi.add_kernel(draw.kernel(g, q));
            F.push_back(Fi);
        }
        std::vector<ChaosExpansion> LF;
        for (auto const& Fi : F)
            LF.push_back(ou_generator(Fi));

        for (auto const& alpha : psis)
        {
            ChaosExpansion const lhs = ou_generator(monomial(F, alpha));
            ChaosExpansion rhs(g);
            for (std::size_t j = 0; j < d; ++j)
            {
                auto const [c, beta] = derivative(alpha, j);
                if (c != 0)
                    rhs += c * multiply(monomial(F, beta), LF[j]);
            }
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = i; j < d; ++j)
                {
                    auto const [ci, bi] = derivative(alpha, i);
                    auto const [cj, bij] = derivative(bi, j);
                    double const c = ci * cj * (i == j ? 1.0 : 2.0);
                    if (c != 0)
                        rhs += c * multiply(monomial(F, bij), carre_du_champ(F[i], F[j]));
                }
            double const scale = std::max(1.0, std::sqrt(second_moment(lhs)));
            worst = std::max(worst, l2_distance(lhs, rhs) / scale);
        }
    }
    return {worst <= 1e-9, "20 vectors (d=2, orders <= 2) x " + std::to_string(psis.size())
                               + " monomials of degree <= 3, max rel L2 err " + sci(worst)
                               + " (tol 1e-9)"};
}

struct Criterion
{
    int id;
    std::string name;
    double limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main()
{
    std::vector<Criterion> const criteria{
        {1, "product formula exactness", 10, product_formula},
        {2, "conditional expectation of the Mehler transport", 5, conditional_expectation},
        {3, "Mehler rate tables", 120, mehler_rates},
        {4, "Gibbs drift diagnostics", 60, gibbs_diagnostics},
        {5, "kappa identity and intermediate bound", 30, identity_and_intermediate},
        {6, "fourth-moment TV experiment", 300, fourth_moment_experiment},
        {7, "multivariate smooth and Wasserstein bounds", 300, multivariate},
        {8, "exchangeability tests", 180, exchangeability},
        {9, "hypercontractivity", 30, hypercontractivity},
        {10, "diffusion identity", 60, diffusion_identity},
    };

    int failures = 0;
    for (auto const& c : criteria)
    {
        auto const start = std::chrono::steady_clock::now();
        Outcome out{false, ""};
        try
        {
            out = c.run();
        }
        catch (std::exception const& e)
        {
            out = {false, std::string("exception: ") + e.what()};
        }
        double const secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool const in_time = secs < c.limit_s;
        bool const pass = out.pass && in_time;
        failures += !pass;
        char timing[64];
        std::snprintf(timing, sizeof timing, "%.2f s (limit %.0f s)", secs, c.limit_s);
        std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": "
                  << out.detail << "; " << timing << (in_time ? "" : " TOO SLOW") << std::endl;
    }
    std::cout << (failures == 0 ? "acceptance: all criteria passed"
                                : "acceptance: " + std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
