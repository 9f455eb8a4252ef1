#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "chaoslab/exchange_pairs.hpp"
#include "test_util.hpp"

using namespace chaoslab;
using namespace chaoslab::testing;

namespace {

Kernel qvar(std::size_t n)
{
    Grid g = Grid::uniform(n);
    std::vector<double> c(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        c[i * n + i] = std::sqrt(n / 2.0);
    return Kernel(g, 2, c, true);
}

Kernel off_diagonal(Grid const& g, int p, std::mt19937_64& gen)
{
    Kernel f = random_kernel(g, p, gen, false);
    auto c = f.mutable_coeffs();
    std::vector<std::size_t> t(p);
    for (std::size_t z = 0; z < c.size(); ++z)
    {
        f.decode(z, t);
        std::sort(t.begin(), t.end());
        if (std::adjacent_find(t.begin(), t.end()) != t.end())
            c[z] = 0;
    }
    return symmetrize(f);
}

double sigma(Kernel const& f, int p)
{
    return std::sqrt(variance(ChaosExpansion::from_kernel(p, f)));
}

}  // namespace

TEST_CASE("Mehler map columns are unit vectors")
{
    MehlerPair pair(Grid::uniform(3), 0.3);
    for (std::size_t i = 0; i < 3; ++i)
    {
        double a = pair.map(i, i), b = pair.map(i + 3, i);
        CHECK(a * a + b * b == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(MehlerPair(Grid::uniform(3), 0.0), InputError);
}

TEST_CASE("Mehler transport")
{
    std::mt19937_64 gen(31);
    Grid g = Grid::uniform(4);

    SUBCASE("isometry, including inner products")
    {
        ChaosExpansion F = random_expansion(g, 3, gen);
        double t = 0.37;
        CHECK(close(second_moment(mehler_transport(F, t)), second_moment(F), 1e-12));
        Kernel a = random_kernel(g, 2, gen), b = random_kernel(g, 2, gen);
        CellMap const& A = MehlerPair(g, t).map;
        CHECK(close(inner(push_forward(A, a), push_forward(A, b)), inner(a, b), 1e-12));
    }
    SUBCASE("p = 1 kernel splits into weighted halves")
    {
        Kernel f = random_kernel(g, 1, gen);
        double t = 0.5;
        auto Ft = mehler_transport(ChaosExpansion::from_kernel(1, f), t);
        Kernel const* h = Ft.term(1);
        REQUIRE(h);
        for (std::size_t i = 0; i < 4; ++i)
        {
            CHECK((*h)[i] == doctest::Approx(std::exp(-t) * f[i]));
            CHECK((*h)[i + 4] == doctest::Approx(std::sqrt(1 - std::exp(-2 * t)) * f[i]));
        }
    }
    SUBCASE("long times forget the first half")
    {
        Kernel f = random_kernel(g, 2, gen);
        auto Ft = mehler_transport(ChaosExpansion::from_kernel(2, f), 40.0);
        CHECK(second_moment(condition_on_first_half(Ft)) < 1e-30);
    }
    SUBCASE("conditional expectation contracts by e^{-pt}")
    {
        for (int p = 1; p <= 4; ++p)
        {
            Kernel f = random_kernel(Grid::uniform(3), p, gen);
            ChaosExpansion F = ChaosExpansion::from_kernel(p, f);
            for (double t : {1.0, 0.1, 0.01})
            {
                auto C = condition_on_first_half(mehler_transport(F, t));
                REQUIRE(C.term(p));
                CHECK(approx_equal(*C.term(p), std::exp(-p * t) * *F.term(p), 1e-12));
                // E[F_t F] = e^{-pt} E[F^2]
                auto embedded = push_forward(first_half_embedding(F.grid()), F);
                CHECK(close(expectation_of_product(mehler_transport(F, t), embedded),
                            std::exp(-p * t) * second_moment(F), 1e-12));
            }
        }
    }
}

TEST_CASE("condition_on_first_half")
{
    Grid base = Grid::uniform(2);
    Grid d = Grid::doubled(base);
    Kernel second(d, 1, {0, 0, 1, 2});
    CHECK(condition_on_first_half(ChaosExpansion::from_kernel(1, second)).terms().empty());
    Kernel first(d, 1, {3, 4, 0, 0});
    auto C = condition_on_first_half(ChaosExpansion::from_kernel(1, first));
    REQUIRE(C.term(1));
    CHECK((*C.term(1))[1] == 4);
    CHECK_THROWS_AS(condition_on_first_half(ChaosExpansion(base, 1.0)), GridMismatchError);
}

TEST_CASE("fused conditioned product matches the naive route")
{
    std::mt19937_64 gen(41);
    Grid d = Grid::doubled(Grid::uniform(3));
    for (int trial = 0; trial < 4; ++trial)
    {
        ChaosExpansion H = random_expansion(d, 1 + trial % 3, gen);
        ChaosExpansion K = random_expansion(d, 1 + (trial + 1) % 3, gen);
        auto naive = condition_on_first_half(multiply(H, K));
        auto fused = multiply_conditioned(H, K);
        CHECK(l2_distance(naive, fused) <= 1e-12 * std::sqrt(second_moment(naive)));
    }
}

TEST_CASE("Mehler drift check")
{
    Grid g = Grid::uniform(4);
    Kernel e(g, 1, {2, 0, 0, 0});  // unit norm
    CHECK(mehler_drift_check(e, 1, 0.01) == doctest::Approx(4.983374916805e-3).epsilon(1e-9));

    std::mt19937_64 gen(51);
    for (int p = 1; p <= 3; ++p)
    {
        Kernel f = random_kernel(Grid::uniform(3), p, gen);
        double s = sigma(f, p);
        for (double t : {1.0, 0.1, 0.01, 0.001})
        {
            double d = mehler_drift_check(f, p, t);
            CHECK(close(d, std::abs(std::expm1(-p * t) / t + p) * s, 1e-10));
            CHECK(d <= p * p * t / 2 * s * (1 + 1e-12));
        }
        double ratio = mehler_drift_check(f, p, 1e-3) / 1e-3;
        CHECK(std::abs(ratio / (p * p * s / 2) - 1) < 0.05);
    }
}

TEST_CASE("Mehler quadratic check")
{
    std::mt19937_64 gen(61);
    SUBCASE("order one closed form")
    {
        Kernel f = random_kernel(Grid::uniform(3), 1, gen);
        double nf = inner(f, f);
        for (double t : {0.1, 0.01})
        {
            // E[D^2 | B] = (1 - e^{-t})^2 I(f)^2 + (1 - e^{-2t}) |f|^2 and
            // I(f)^2 = |f|^2 + I_2(f (x) f), so Q_t keeps a second-chaos part.
            double a = std::pow(1 - std::exp(-t), 2);
            double q = (a + 1 - std::exp(-2 * t)) / t;
            double expect = std::sqrt(std::pow(q - 2, 2) + 2 * std::pow(a / t, 2)) * nf;
            CHECK(close(mehler_quadratic_check(f, 1, t), expect, 1e-9));
        }
    }
    SUBCASE("mean of Q_t approaches 2 p sigma^2")
    {
        Kernel f = random_kernel(Grid::uniform(3), 2, gen);
        double s2 = variance(ChaosExpansion::from_kernel(2, f));
        for (double t : {0.1, 0.01})
        {
            double rate = mehler_second_moment_rate(f, 2, t);
            CHECK(close(rate, -2 * s2 * std::expm1(-2 * t) / t, 1e-12));
            CHECK(std::abs(rate - 4 * s2) <= 4 * t * s2);
        }
    }
    SUBCASE("linear rate")
    {
        Kernel f = qvar(6);
        std::vector<double> ts{1e-1, 1e-2, 1e-3}, d;
        for (double t : ts)
            d.push_back(mehler_quadratic_check(f, 2, t));
        double slope = loglog_slope(ts, d);
        CHECK(slope >= 0.9);
        CHECK(slope <= 1.1);
    }
}

TEST_CASE("Mehler fourth moment check")
{
    std::mt19937_64 gen(71);
    SUBCASE("Gaussian case")
    {
        Kernel f = random_kernel(Grid::uniform(3), 1, gen);
        double s2 = inner(f, f);
        double t = 0.05;
        double expect = 3 * std::pow(2 * s2 * (1 - std::exp(-t)), 2) / t;
        CHECK(close(mehler_fourth_check(f, 1, t), expect, 1e-10));
    }
    SUBCASE("both routes agree")
    {
        Grid g = Grid::uniform(3);
        for (int p = 1; p <= 3; ++p)
        {
            Kernel f = random_kernel(g, p, gen);
            for (double t : {0.5, 0.01})
            {
                double a = mehler_fourth_check(f, p, t, FourthMomentRoute::doubled_grid);
                double b = mehler_fourth_check(f, p, t, FourthMomentRoute::exchangeable);
                CHECK(close(a, b, 1e-9));
            }
        }
    }
    SUBCASE("hypercontractive envelope and linear decay")
    {
        Kernel f = qvar(6);
        double c4 = (1 * 1 * 24 + 1 * 16 * 2 + 4 * 1 * 1) / 4.0;
        std::vector<double> ts{1e-1, 1e-2, 1e-3}, v;
        for (double t : ts)
        {
            v.push_back(mehler_fourth_check(f, 2, t));
            CHECK(v.back() <= c4 * std::pow(2 * (1 - std::exp(-2 * t)), 2) / t * (1 + 1e-10));
        }
        double ratio = v[2] / v[1];
        CHECK(ratio >= 0.05);
        CHECK(ratio <= 0.2);
        // Cauchy-Schwarz majorant of the third moment shrinks with t
        CHECK(mehler_third_moment_bound(f, 2, 1e-3) < mehler_third_moment_bound(f, 2, 1e-2));
    }
}

TEST_CASE("Gibbs drift")
{
    std::mt19937_64 gen(81);
    SUBCASE("first chaos is exact")
    {
        Grid g = Grid::uniform(8);
        ChaosExpansion F = ChaosExpansion::from_kernel(1, random_kernel(g, 1, gen));
        for (std::size_t n : {1, 2, 4, 8})
        {
            auto r = gibbs_drift(F, n);
            CHECK(r.distance == 0.0);
            CHECK(l2_distance(r.drift, -1.0 * F) == 0.0);
        }
    }
    SUBCASE("diagonal-free kernels with singleton blocks")
    {
        Grid g = Grid::uniform(6);
        for (int p = 2; p <= 3; ++p)
        {
            ChaosExpansion F = ChaosExpansion::from_kernel(p, off_diagonal(g, p, gen));
            CHECK(gibbs_drift(F, 6).distance == 0.0);
        }
    }
    SUBCASE("explicit block masking agrees and decays")
    {
        std::size_t const m = 32;
        Grid g = Grid::uniform(m);
        Kernel one(g, 2, std::vector<double>(m * m, 1.0), true);
        ChaosExpansion F = ChaosExpansion::from_kernel(2, one);
        double prev = INFINITY;
        for (std::size_t n : {4, 8, 32})
        {
            GibbsPair pair(g, n);
            ChaosExpansion direct(g);
            for (std::size_t v = 0; v < n; ++v)
            {
                std::vector<std::size_t> keep;
                for (std::size_t i = 0; i < m; ++i)
                    if (pair.block_of[i] != v)
                        keep.push_back(i);
                direct += ChaosExpansion::from_kernel(2, restrict_support(one, keep)) - F;
            }
            auto r = gibbs_drift(F, n);
            double d2 = second_moment(direct + 2.0 * F);
            CHECK(close(r.distance * r.distance, d2, 1e-10));
            CHECK(close(r.distance, std::sqrt(2.0 / n), 1e-10));
            CHECK(r.distance < prev);
            prev = r.distance;
        }
    }
    SUBCASE("block count must divide the grid")
    {
        ChaosExpansion F = ChaosExpansion::from_kernel(1, Kernel(Grid::uniform(6), 1, {1, 0, 0, 0, 0, 0}));
        CHECK_THROWS_AS(gibbs_drift(F, 4), GridMismatchError);
    }
}

TEST_CASE("Gibbs quadratic check")
{
    // The residual is the fluctuation of sum_v I(f 1_v)^2 around its mean,
    // which spreads over more blocks as n grows.
    std::mt19937_64 gen(91);
    Kernel f = qvar(8);
    CHECK(gibbs_quadratic_check(f, 2, 8) < gibbs_quadratic_check(f, 2, 2));
    Kernel e = random_kernel(Grid::uniform(8), 1, gen);
    CHECK(gibbs_quadratic_check(e, 1, 8) < gibbs_quadratic_check(e, 1, 2));
}

TEST_CASE("rate tables")
{
    std::vector<double> x{1, 10, 100}, y{2, 20, 200};
    CHECK(loglog_slope(x, y) == doctest::Approx(1.0));
    Kernel f = qvar(4);
    std::vector<double> ts{1e-1, 1e-2, 1e-3};
    auto rep = mehler_rate_table(f, 2, ts);
    CHECK(rep.rows.size() == 12);
    auto csv = to_csv(rep);
    CHECK(csv.rfind("construction,parameter,distance,target_norm,rate_estimate\n", 0) == 0);
    std::vector<std::size_t> ns{1, 2, 4};
    auto gib = gibbs_rate_table(f, 2, ns);
    CHECK(gib.rows.size() == 6);
}

TEST_CASE("exchangeability Monte Carlo")
{
    std::mt19937_64 gen(101);
    Grid g = Grid::uniform(8);
    ChaosExpansion F = ChaosExpansion::from_kernel(2, qvar(8));
    std::size_t const N = 100000;

    CHECK_THROWS_AS(exchangeability_mc_test("mehler", mehler_pair_sampler(0.5), F, 9999, 1), InputError);

    auto mehler = exchangeability_mc_test("mehler", mehler_pair_sampler(0.5), F, N, 1);
    CHECK(mehler.pass);
    auto gibbs = exchangeability_mc_test("gibbs", gibbs_pair_sampler(GibbsPair(g, 4)), F, N, 2);
    CHECK(gibbs.pass);

    auto still = exchangeability_mc_test("mehler", mehler_pair_sampler(0.0), F, N, 3);
    CHECK(still.pass);
    for (auto const& s : still.stats)
        CHECK(s.discrepancy == 0.0);

    PairSampler shifted = [](std::span<double const> xi, std::span<double const>, double,
                             std::span<double> out) {
        for (std::size_t i = 0; i < xi.size(); ++i)
            out[i] = xi[i] + 0.5;
    };
    CHECK_FALSE(exchangeability_mc_test("broken", shifted, F, N, 4).pass);

    auto one = exchangeability_mc_test("mehler", mehler_pair_sampler(0.5), F, N, 1, 1);
    auto four = exchangeability_mc_test("mehler", mehler_pair_sampler(0.5), F, N, 1, 4);
    for (std::size_t k = 0; k < one.stats.size(); ++k)
        CHECK(one.stats[k].discrepancy == four.stats[k].discrepancy);
}
