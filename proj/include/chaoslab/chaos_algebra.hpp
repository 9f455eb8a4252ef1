#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "chaoslab/grid_kernel.hpp"

namespace chaoslab {

//---------------------------------------------------------------------------//
/*!
 * Finite chaos expansion F = c + sum_q I_q(f_q) over a grid.
 *
 * Every stored kernel is symmetric and lives on the expansion's grid; orders
 * that are absent (or whose kernel is identically zero) are zero.
 */
class ChaosExpansion
{
  public:
    explicit ChaosExpansion(Grid grid, double constant = 0.0);

    // I_p(f); f is symmetrized first.
    static ChaosExpansion from_kernel(int p, Kernel const& f);

    Grid const& grid() const noexcept { return grid_; }
    double constant() const noexcept { return constant_; }
    std::map<int, Kernel> const& terms() const noexcept { return terms_; }
    int max_order() const noexcept;

    // Kernel at the given order, or nullptr if absent.
    Kernel const* term(int order) const;

    void set_constant(double c) { constant_ = c; }
    // Adds symmetrize(f) to the term of order f.order().
    void add_kernel(Kernel const& f);

    ChaosExpansion& operator+=(ChaosExpansion const& other);
    ChaosExpansion& operator-=(ChaosExpansion const& other);
    ChaosExpansion& operator*=(double c);

  private:
    void prune();

    Grid grid_;
    double constant_ = 0.0;
    std::map<int, Kernel> terms_;
};

ChaosExpansion operator+(ChaosExpansion a, ChaosExpansion const& b);
ChaosExpansion operator-(ChaosExpansion a, ChaosExpansion const& b);
ChaosExpansion operator*(double c, ChaosExpansion f);

//---------------------------------------------------------------------------//
// Algebra and moments
//---------------------------------------------------------------------------//

// Product formula, applied term-pair-wise; every contraction is
// symmetrized and full contractions accumulate into the constant.
ChaosExpansion multiply(ChaosExpansion const& F, ChaosExpansion const& G);

double mean(ChaosExpansion const& F);
double second_moment(ChaosExpansion const& F);
double variance(ChaosExpansion const& F);

// E[F G] through the isometry.
double expectation_of_product(ChaosExpansion const& F, ChaosExpansion const& G);

// sqrt(E[(F - G)^2])
double l2_distance(ChaosExpansion const& F, ChaosExpansion const& G);

// sum_r r!^2 C(p,r)^4 (2p-2r)! |f (x)~_r f|^2 for symmetric f of order p.
double fourth_moment_pure(int p, Kernel const& f);

// Ornstein-Uhlenbeck generator: order-r kernel times -r.
ChaosExpansion ou_generator(ChaosExpansion const& F);

// Gamma(F, G) = (L(FG) - F LG - G LF) / 2
ChaosExpansion carre_du_champ(ChaosExpansion const& F, ChaosExpansion const& G);

// Integral over x of I_{p-1}(f(x, .)) I_{q-1}(g(x, .)) dx, built slice by
// slice with the product formula. Both kernels must be symmetric.
ChaosExpansion slice_product_integral(Kernel const& f, Kernel const& g);

// Kernel with its first coordinate fixed to `cell`; order p - 1 >= 1.
Kernel slice(Kernel const& f, std::size_t cell);

double factorial(int n);
double binomial(int n, int k);

//---------------------------------------------------------------------------//
// Pointwise evaluation
//---------------------------------------------------------------------------//

/// Normalized Gaussian increments xi_i = dB_i / sqrt(mu_i), one per cell.
struct GaussianSample
{
    Grid grid;
    std::vector<double> xi;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

// Probabilists' Hermite polynomials H_0..H_n at x.
void hermite_table(double x, std::span<double> out);

/*!
 * Polynomial form of a chaos expansion for repeated evaluation.
 *
 * A coefficient f(i_1..i_q) contributes f * prod_c mu_c^{k_c/2} H_{k_c}(xi_c)
 * where k_c is the multiplicity of cell c in the tuple. Tuples sharing a
 * multiset are merged into one monomial.
 */
class ChaosEvaluator
{
  public:
    explicit ChaosEvaluator(ChaosExpansion const& F);

    Grid const& grid() const noexcept { return grid_; }
    std::size_t monomial_count() const noexcept { return coefficients_.size(); }

    double operator()(std::span<double const> xi) const;
    double operator()(GaussianSample const& s) const;

  private:
    struct Factor
    {
        std::uint32_t cell;
        std::uint32_t power;
    };

    Grid grid_;
    double constant_ = 0.0;
    int max_power_ = 0;
    std::vector<double> coefficients_;
    std::vector<std::size_t> offsets_;  // into factors_, size monomials + 1
    std::vector<Factor> factors_;
};

double evaluate(ChaosExpansion const& F, GaussianSample const& s);

}  // namespace chaoslab
