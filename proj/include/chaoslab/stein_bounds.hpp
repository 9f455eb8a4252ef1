#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "chaoslab/chaos_algebra.hpp"
#include "chaoslab/grid_kernel.hpp"

namespace chaoslab {

//---------------------------------------------------------------------------//
// Small dense symmetric matrices
//---------------------------------------------------------------------------//

class SymMatrix
{
  public:
    explicit SymMatrix(std::size_t d) : d_(d), a_(d * d, 0.0) {}

    std::size_t size() const noexcept { return d_; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }
    // Sets both (i, j) and (j, i).
    void set(std::size_t i, std::size_t j, double v)
    {
        a_[i * d_ + j] = v;
        a_[j * d_ + i] = v;
    }

    double trace() const;
    double frobenius() const;
    double sum() const;
    nlohmann::json to_json() const;

  private:
    std::size_t d_;
    std::vector<double> a_;
};

struct SymEigen
{
    std::vector<double> values;                // descending
    std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

// Cyclic Jacobi. The input is symmetrized as (A + A^T) / 2 first; sweeps
// stop once the off-diagonal Frobenius norm is <= 1e-12 |A|_F.
SymEigen sym_eig(std::vector<double> const& row_major, std::size_t d);
SymEigen sym_eig(SymMatrix const& a);

//---------------------------------------------------------------------------//
// Reports
//---------------------------------------------------------------------------//

struct BoundReport
{
    std::string name;
    double value = 0;
    nlohmann::json ingredients = nlohmann::json::object();
    std::vector<std::string> notes;
    bool vacuous = false;  // a total-variation bound above 1
    std::string inputs_hash;

    nlohmann::json to_json() const;
};

//---------------------------------------------------------------------------//
// One-dimensional bounds for F = I_p(f)
//---------------------------------------------------------------------------//

// |f (x)~_r f|^2 for r = 1..p-1 (index r-1).
std::vector<double> contraction_norms(Kernel const& f, int p);

// 3 sum_{r=1}^{p-1} (r/p) r!^2 C(p,r)^4 (2p-2r)! |f (x)~_r f|^2 = E F^4 - 3 sigma^4
double kappa(Kernel const& f, int p);

// Var(p int I_{p-1}(f(x,.))^2 dx) = sum (r/p)^2 r!^2 C(p,r)^4 (2p-2r)! |f (x)~_r f|^2
double intermediate_variance(Kernel const& f, int p);

// (2/sigma^2) sqrt((p-1)/(3p)) sqrt(kappa)
double tv_bound(Kernel const& f, int p);

// (2/sigma^2) sqrt(intermediate_variance), the Cauchy-Schwarz majorant of
// (2/sigma^2) E|p int I_{p-1}^2 - sigma^2|.
double intermediate_bound(Kernel const& f, int p);

// p int I_{p-1}(f(x,.))^2 dx - sigma^2 as a chaos expansion.
ChaosExpansion gradient_norm_residual(Kernel const& f, int p);

BoundReport tv_report(Kernel const& f, int p);
BoundReport intermediate_report(Kernel const& f, int p);

//---------------------------------------------------------------------------//
// Vectors of multiple integrals
//---------------------------------------------------------------------------//

class ChaosVector
{
  public:
    // Components are symmetrized and sorted by order (stable).
    explicit ChaosVector(std::vector<std::pair<int, Kernel>> components);

    std::size_t size() const noexcept { return comps_.size(); }
    Grid const& grid() const noexcept { return comps_.front().second.grid(); }
    int order(std::size_t i) const { return comps_.at(i).first; }
    Kernel const& kernel(std::size_t i) const { return comps_.at(i).second; }
    ChaosExpansion component(std::size_t i) const;

    std::string hash() const;

  private:
    std::vector<std::pair<int, Kernel>> comps_;
};

SymMatrix covariance(ChaosVector const& v);

// V_ij = Var(p_i p_j int I_{p_i-1}(f_i(x,.)) I_{p_j-1}(f_j(x,.)) dx)
SymMatrix s_variance_matrix(ChaosVector const& v);

// E[|F|^4], exact.
double fourth_moment_norm(ChaosVector const& v);
// E[|N|^4] = (tr S)^2 + 2 tr(S^2) for N ~ N(0, S)
double gaussian_fourth_moment_norm(SymMatrix const& sigma);

// sqrt(d) M2 / (2 p_1) sqrt(sum V_ij)
double smooth_bound(ChaosVector const& v, double M2);

// 2 |Sigma^{-1/2}|_op / (p_1 sqrt(2 pi)) sqrt(sum V_ij)
BoundReport wasserstein_bound(ChaosVector const& v);

// sqrt(d) |Sigma|_op^{1/2} |Sigma^{-1}|_op sqrt(E|F|^4 - E|N|^4)
BoundReport nprr_bound(ChaosVector const& v);

BoundReport smooth_report(ChaosVector const& v, double M2, std::string const& g_id);

}  // namespace chaoslab
