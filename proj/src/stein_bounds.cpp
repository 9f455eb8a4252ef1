#include "chaoslab/stein_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "chaoslab/hash.hpp"

namespace chaoslab {

//---------------------------------------------------------------------------//
// SymMatrix and Jacobi
//---------------------------------------------------------------------------//

double SymMatrix::trace() const
{
    double t = 0;
    for (std::size_t i = 0; i < d_; ++i)
        t += (*this)(i, i);
    return t;
}

double SymMatrix::frobenius() const
{
    double s = 0;
    for (double v : a_)
        s += v * v;
    return std::sqrt(s);
}

double SymMatrix::sum() const
{
    return std::accumulate(a_.begin(), a_.end(), 0.0);
}

nlohmann::json SymMatrix::to_json() const
{
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < d_; ++i)
    {
        auto row = nlohmann::json::array();
        for (std::size_t j = 0; j < d_; ++j)
            row.push_back((*this)(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

SymEigen sym_eig(std::vector<double> const& row_major, std::size_t d)
{
    if (row_major.size() != d * d || d == 0)
        throw InputError("sym_eig: matrix must be square and non-empty");
    std::vector<double> a(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            a[i * d + j] = 0.5 * (row_major[i * d + j] + row_major[j * d + i]);
    std::vector<double> v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        v[i * d + i] = 1.0;

    auto at = [&a, d](std::size_t i, std::size_t j) -> double& { return a[i * d + j]; };
    double scale = 0;
    for (double x : a)
        scale += x * x;
    scale = std::sqrt(scale);

    for (int sweep = 0; sweep < 100; ++sweep)
    {
        double off = 0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                if (i != j)
                    off += at(i, j) * at(i, j);
        if (std::sqrt(off) <= 1e-12 * scale)
            break;

        for (std::size_t p = 0; p + 1 < d; ++p)
        {
            for (std::size_t q = p + 1; q < d; ++q)
            {
                double const apq = at(p, q);
                if (apq == 0.0)
                    continue;
                double const theta = (at(q, q) - at(p, p)) / (2 * apq);
                double const t = std::copysign(1.0, theta)
                                 / (std::abs(theta) + std::sqrt(theta * theta + 1));
                double const c = 1 / std::sqrt(t * t + 1);
                double const s = t * c;
                for (std::size_t k = 0; k < d; ++k)
                {
                    double const kp = at(k, p), kq = at(k, q);
                    at(k, p) = c * kp - s * kq;
                    at(k, q) = s * kp + c * kq;
                }
                for (std::size_t k = 0; k < d; ++k)
                {
                    double const pk = at(p, k), qk = at(q, k);
                    at(p, k) = c * pk - s * qk;
                    at(q, k) = s * pk + c * qk;
                }
                at(p, q) = at(q, p) = 0.0;
                for (std::size_t k = 0; k < d; ++k)
                {
                    double const kp = v[k * d + p], kq = v[k * d + q];
                    v[k * d + p] = c * kp - s * kq;
                    v[k * d + q] = s * kp + c * kq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return at(i, i) > at(j, j); });
    SymEigen out;
    for (std::size_t k : order)
    {
        out.values.push_back(at(k, k));
        std::vector<double> col(d);
        for (std::size_t i = 0; i < d; ++i)
            col[i] = v[i * d + k];
        out.vectors.push_back(std::move(col));
    }
    return out;
}

SymEigen sym_eig(SymMatrix const& a)
{
    std::vector<double> flat(a.size() * a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            flat[i * a.size() + j] = a(i, j);
    return sym_eig(flat, a.size());
}

//---------------------------------------------------------------------------//
// Reports
//---------------------------------------------------------------------------//

nlohmann::json BoundReport::to_json() const
{
    return {{"name", name},
            {"value", value},
            {"ingredients", ingredients},
            {"notes", notes},
            {"vacuous", vacuous},
            {"inputs_hash", inputs_hash}};
}

namespace {

std::string kernel_hash(Kernel const& f, int p)
{
    Fnv1a h;
    h.value(static_cast<std::uint64_t>(p));
    h.values(f.grid().measures());
    h.values(f.coeffs());
    return h.hex();
}

double pure_variance(Kernel const& f, int p)
{
    if (p != f.order())
        throw InputError("order does not match the kernel");
    return factorial(p) * inner(f, f);
}

double require_variance(Kernel const& f, int p)
{
    double const s2 = pure_variance(symmetrize(f), p);
    if (!(s2 > 0))
        throw InputError("bound needs a kernel with positive variance");
    return s2;
}

// r!^2 C(p,r)^4 (2p-2r)!
double fourth_weight(int p, int r)
{
    return std::pow(factorial(r), 2) * std::pow(binomial(p, r), 4) * factorial(2 * p - 2 * r);
}

}  // namespace

//---------------------------------------------------------------------------//
// One-dimensional bounds
//---------------------------------------------------------------------------//

std::vector<double> contraction_norms(Kernel const& f, int p)
{
    if (p != f.order())
        throw InputError("contraction_norms: order does not match the kernel");
    Kernel const fs = symmetrize(f);
    std::vector<double> out;
    for (int r = 1; r < p; ++r)
    {
        Kernel const c = symmetrize(contract_kernel(fs, fs, r));
        out.push_back(inner(c, c));
    }
    return out;
}

double kappa(Kernel const& f, int p)
{
    auto const norms = contraction_norms(f, p);
    double sum = 0;
    for (int r = 1; r < p; ++r)
        sum += (static_cast<double>(r) / p) * fourth_weight(p, r) * norms[r - 1];
    return 3 * sum;
}

double intermediate_variance(Kernel const& f, int p)
{
    auto const norms = contraction_norms(f, p);
    double sum = 0;
    for (int r = 1; r < p; ++r)
        sum += std::pow(static_cast<double>(r) / p, 2) * fourth_weight(p, r) * norms[r - 1];
    return sum;
}

double tv_bound(Kernel const& f, int p)
{
    double const s2 = require_variance(f, p);
    return 2 / s2 * std::sqrt((p - 1.0) / (3.0 * p)) * std::sqrt(kappa(f, p));
}

double intermediate_bound(Kernel const& f, int p)
{
    double const s2 = require_variance(f, p);
    return 2 / s2 * std::sqrt(intermediate_variance(f, p));
}

ChaosExpansion gradient_norm_residual(Kernel const& f, int p)
{
    if (p != f.order())
        throw InputError("gradient_norm_residual: order does not match the kernel");
    // The r = p term is the constant sigma^2 and cancels.
    Kernel const fs = symmetrize(f);
    ChaosExpansion out(f.grid());
    for (int r = 1; r < p; ++r)
    {
        double const c = static_cast<double>(r) / p * factorial(r) * std::pow(binomial(p, r), 2);
        out.add_kernel(c * contract_kernel(fs, fs, r));
    }
    return out;
}

BoundReport tv_report(Kernel const& f, int p)
{
    BoundReport rep;
    rep.name = "tv_fourth_moment";
    rep.value = tv_bound(f, p);
    rep.vacuous = rep.value > 1;
    rep.ingredients = {{"p", p},
                       {"m", f.cells()},
                       {"sigma2", pure_variance(symmetrize(f), p)},
                       {"kappa", kappa(f, p)},
                       {"contraction_norms_sq", contraction_norms(f, p)}};
    rep.inputs_hash = kernel_hash(f, p);
    return rep;
}

BoundReport intermediate_report(Kernel const& f, int p)
{
    BoundReport rep;
    rep.name = "tv_intermediate";
    rep.value = intermediate_bound(f, p);
    rep.vacuous = rep.value > 1;
    rep.ingredients = {{"p", p},
                       {"m", f.cells()},
                       {"sigma2", pure_variance(symmetrize(f), p)},
                       {"variance_S", intermediate_variance(f, p)}};
    rep.notes.push_back("E|S| majorized by sqrt(Var S)");
    rep.inputs_hash = kernel_hash(f, p);
    return rep;
}

//---------------------------------------------------------------------------//
// ChaosVector
//---------------------------------------------------------------------------//

ChaosVector::ChaosVector(std::vector<std::pair<int, Kernel>> components)
{
    if (components.empty())
        throw InputError("chaos vector needs at least one component");
    for (auto& [p, f] : components)
    {
        if (p != f.order())
            throw InputError("chaos vector: order does not match the kernel");
        require_same_grid(components.front().second.grid(), f.grid(), "chaos vector");
        comps_.emplace_back(p, symmetrize(f));
    }
    std::stable_sort(comps_.begin(), comps_.end(),
                     [](auto const& a, auto const& b) { return a.first < b.first; });
}

ChaosExpansion ChaosVector::component(std::size_t i) const
{
    return ChaosExpansion::from_kernel(order(i), kernel(i));
}

std::string ChaosVector::hash() const
{
    Fnv1a h;
    h.values(grid().measures());
    for (auto const& [p, f] : comps_)
    {
        h.value(static_cast<std::uint64_t>(p));
        h.values(f.coeffs());
    }
    return h.hex();
}

SymMatrix covariance(ChaosVector const& v)
{
    SymMatrix s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        for (std::size_t j = i; j < v.size(); ++j)
        {
            if (v.order(i) == v.order(j))
                s.set(i, j, factorial(v.order(i)) * inner(v.kernel(i), v.kernel(j)));
        }
    }
    return s;
}

SymMatrix s_variance_matrix(ChaosVector const& v)
{
    SymMatrix out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        for (std::size_t j = i; j < v.size(); ++j)
        {
            int const pi = v.order(i), pj = v.order(j);
            ChaosExpansion e(v.grid());
            for (int r = 1; r <= std::min(pi, pj); ++r)
            {
                if (pi == r && pj == r)
                    continue;  // constant, no variance
                double const c = r * factorial(r) * binomial(pi, r) * binomial(pj, r);
                e.add_kernel(c * contract_kernel(v.kernel(i), v.kernel(j), r));
            }
            out.set(i, j, variance(e));
        }
    }
    return out;
}

double fourth_moment_norm(ChaosVector const& v)
{
    ChaosExpansion sq(v.grid());
    for (std::size_t k = 0; k < v.size(); ++k)
    {
        ChaosExpansion const F = v.component(k);
        sq += multiply(F, F);
    }
    return second_moment(sq);
}

double gaussian_fourth_moment_norm(SymMatrix const& sigma)
{
    double tr = sigma.trace();
    double tr2 = 0;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        for (std::size_t j = 0; j < sigma.size(); ++j)
            tr2 += sigma(i, j) * sigma(j, i);
    return tr * tr + 2 * tr2;
}

namespace {

struct Spectrum
{
    double lmax;
    double lmin;
    std::vector<double> values;
};

Spectrum positive_definite_spectrum(SymMatrix const& sigma)
{
    auto eig = sym_eig(sigma);
    double const lmax = eig.values.front();
    double const lmin = eig.values.back();
    if (!(lmax > 0) || lmin <= 1e-12 * lmax)
        throw SingularCovarianceError("covariance matrix is singular (smallest eigenvalue "
                                      + std::to_string(lmin) + ")");
    return {lmax, lmin, eig.values};
}

}  // namespace

double smooth_bound(ChaosVector const& v, double M2)
{
    if (!(M2 >= 0))
        throw InputError("smooth_bound: M2 must be non-negative");
    double const sum_v = s_variance_matrix(v).sum();
    return std::sqrt(static_cast<double>(v.size())) * M2 / (2.0 * v.order(0))
           * std::sqrt(std::max(0.0, sum_v));
}

BoundReport smooth_report(ChaosVector const& v, double M2, std::string const& g_id)
{
    SymMatrix const V = s_variance_matrix(v);
    BoundReport rep;
    rep.name = "smooth:" + g_id;
    rep.value = smooth_bound(v, M2);
    rep.ingredients = {{"d", v.size()}, {"p1", v.order(0)}, {"M2", M2},
                       {"V", V.to_json()}, {"sum_V", V.sum()}};
    rep.inputs_hash = v.hash();
    return rep;
}

BoundReport wasserstein_bound(ChaosVector const& v)
{
    SymMatrix const sigma = covariance(v);
    Spectrum const spec = positive_definite_spectrum(sigma);
    SymMatrix const V = s_variance_matrix(v);
    double const sum_v = std::max(0.0, V.sum());
    int const p1 = v.order(0);
    double const inv_sqrt_op = 1 / std::sqrt(spec.lmin);

    BoundReport rep;
    rep.name = "wasserstein_exchangeable";
    rep.value = 2 * inv_sqrt_op / (p1 * std::sqrt(2 * std::numbers::pi)) * std::sqrt(sum_v);
    rep.ingredients = {{"d", v.size()},
                       {"p1", p1},
                       {"Sigma", sigma.to_json()},
                       {"eigenvalues", spec.values},
                       {"Sigma_inv_sqrt_op", inv_sqrt_op},
                       {"V", V.to_json()},
                       {"sum_V", sum_v}};
    rep.notes.push_back("denominator printed as q_1 in the source statement; read as p_1, the "
                        "smallest order, matching |Lambda^{-1}|_op = 1/p_1");
    rep.inputs_hash = v.hash();
    return rep;
}

BoundReport nprr_bound(ChaosVector const& v)
{
    SymMatrix const sigma = covariance(v);
    Spectrum const spec = positive_definite_spectrum(sigma);
    double const fF = fourth_moment_norm(v);
    double const fN = gaussian_fourth_moment_norm(sigma);
    double radicand = fF - fN;
    if (radicand < -1e-10 * std::max(1.0, fN))
        throw InputError("nprr_bound: E|F|^4 - E|N|^4 is negative (" + std::to_string(radicand)
                         + ")");
    radicand = std::max(0.0, radicand);
    double const sum_v = s_variance_matrix(v).sum();
    double const d = static_cast<double>(v.size());

    BoundReport rep;
    rep.name = "wasserstein_fourth_moment";
    rep.value = std::sqrt(d) * std::sqrt(spec.lmax) / spec.lmin * std::sqrt(radicand);
    rep.ingredients = {{"d", v.size()},
                       {"Sigma", sigma.to_json()},
                       {"Sigma_op", spec.lmax},
                       {"Sigma_inv_op", 1 / spec.lmin},
                       {"fourth_moment_F", fF},
                       {"fourth_moment_N", fN},
                       {"radicand", radicand},
                       {"sum_V", sum_v},
                       {"sum_V_le_radicand", sum_v <= radicand + 1e-10 * std::max(1.0, fN)}};
    rep.inputs_hash = v.hash();
    return rep;
}

}  // namespace chaoslab
