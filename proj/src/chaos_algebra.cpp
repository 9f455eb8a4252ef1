#include "chaoslab/chaos_algebra.hpp"

#include <algorithm>
#include <cmath>

#include "tuple_util.hpp"

namespace chaoslab {

double factorial(int n)
{
    double r = 1;
    for (int k = 2; k <= n; ++k)
        r *= k;
    return r;
}

double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0;
    double r = 1;
    for (int j = 1; j <= k; ++j)
        r = r * (n - k + j) / j;
    return std::round(r);
}

//---------------------------------------------------------------------------//
// ChaosExpansion
//---------------------------------------------------------------------------//

ChaosExpansion::ChaosExpansion(Grid grid, double constant)
    : grid_(std::move(grid)), constant_(constant)
{
}

ChaosExpansion ChaosExpansion::from_kernel(int p, Kernel const& f)
{
    if (p != f.order())
        throw InputError("from_kernel: order does not match the kernel");
    ChaosExpansion F(f.grid());
    F.add_kernel(f);
    return F;
}

int ChaosExpansion::max_order() const noexcept
{
    return terms_.empty() ? 0 : terms_.rbegin()->first;
}

Kernel const* ChaosExpansion::term(int order) const
{
    auto it = terms_.find(order);
    return it == terms_.end() ? nullptr : &it->second;
}

void ChaosExpansion::add_kernel(Kernel const& f)
{
    require_same_grid(grid_, f.grid(), "chaos expansion");
    auto it = terms_.find(f.order());
    if (it == terms_.end())
        terms_.emplace(f.order(), symmetrize(f));
    else
        it->second += symmetrize(f);
    prune();
}

void ChaosExpansion::prune()
{
    std::erase_if(terms_, [](auto const& kv) { return kv.second.is_zero(); });
}

ChaosExpansion& ChaosExpansion::operator+=(ChaosExpansion const& other)
{
    require_same_grid(grid_, other.grid_, "chaos expansion addition");
    constant_ += other.constant_;
    for (auto const& [q, f] : other.terms_)
    {
        auto it = terms_.find(q);
        if (it == terms_.end())
            terms_.emplace(q, f);
        else
            it->second += f;
    }
    prune();
    return *this;
}

ChaosExpansion& ChaosExpansion::operator-=(ChaosExpansion const& other)
{
    require_same_grid(grid_, other.grid_, "chaos expansion subtraction");
    constant_ -= other.constant_;
    for (auto const& [q, f] : other.terms_)
    {
        auto it = terms_.find(q);
        if (it == terms_.end())
            terms_.emplace(q, -1.0 * f);
        else
            it->second -= f;
    }
    prune();
    return *this;
}

ChaosExpansion& ChaosExpansion::operator*=(double c)
{
    constant_ *= c;
    for (auto& [q, f] : terms_)
        f *= c;
    prune();
    return *this;
}

ChaosExpansion operator+(ChaosExpansion a, ChaosExpansion const& b)
{
    a += b;
    return a;
}

ChaosExpansion operator-(ChaosExpansion a, ChaosExpansion const& b)
{
    a -= b;
    return a;
}

ChaosExpansion operator*(double c, ChaosExpansion f)
{
    f *= c;
    return f;
}

//---------------------------------------------------------------------------//
// Algebra
//---------------------------------------------------------------------------//

ChaosExpansion multiply(ChaosExpansion const& F, ChaosExpansion const& G)
{
    require_same_grid(F.grid(), G.grid(), "multiply");
    ChaosExpansion out(F.grid(), F.constant() * G.constant());

    // Contractions are summed per order and symmetrized once at the end.
    std::map<int, Kernel> acc;
    auto accumulate = [&acc](Kernel k, double c) {
        k *= c;
        auto it = acc.find(k.order());
        if (it == acc.end())
            acc.emplace(k.order(), std::move(k));
        else
            it->second += k;
    };

    for (auto const& [q, g] : G.terms())
        accumulate(g, F.constant());
    for (auto const& [p, f] : F.terms())
        accumulate(f, G.constant());

    double scalar = 0;
    for (auto const& [p, f] : F.terms())
    {
        for (auto const& [q, g] : G.terms())
        {
            for (int r = 0; r <= std::min(p, q); ++r)
            {
                double c = factorial(r) * binomial(p, r) * binomial(q, r);
                auto result = contract(f, g, r);
                if (auto* s = std::get_if<double>(&result))
                    scalar += c * *s;
                else
                    accumulate(std::move(std::get<Kernel>(result)), c);
            }
        }
    }
    out.set_constant(out.constant() + scalar);
    for (auto& [q, k] : acc)
        out.add_kernel(k);
    return out;
}

double mean(ChaosExpansion const& F)
{
    return F.constant();
}

double expectation_of_product(ChaosExpansion const& F, ChaosExpansion const& G)
{
    require_same_grid(F.grid(), G.grid(), "expectation_of_product");
    double sum = F.constant() * G.constant();
    for (auto const& [q, f] : F.terms())
    {
        if (auto const* g = G.term(q))
            sum += factorial(q) * inner(f, *g);
    }
    return sum;
}

double second_moment(ChaosExpansion const& F)
{
    return expectation_of_product(F, F);
}

double variance(ChaosExpansion const& F)
{
    double sum = 0;
    for (auto const& [q, f] : F.terms())
        sum += factorial(q) * inner(f, f);
    return sum;
}

double l2_distance(ChaosExpansion const& F, ChaosExpansion const& G)
{
    return std::sqrt(std::max(0.0, second_moment(F - G)));
}

double fourth_moment_pure(int p, Kernel const& f)
{
    if (p != f.order())
        throw InputError("fourth_moment_pure: order does not match the kernel");
    Kernel const fs = symmetrize(f);
    double sum = 0;
    for (int r = 0; r < p; ++r)
    {
        Kernel c = symmetrize(contract_kernel(fs, fs, r));
        double w = factorial(r) * factorial(r) * std::pow(binomial(p, r), 4)
                   * factorial(2 * p - 2 * r);
        sum += w * inner(c, c);
    }
    double full = inner(fs, fs);
    sum += factorial(p) * factorial(p) * full * full;
    return sum;
}

ChaosExpansion ou_generator(ChaosExpansion const& F)
{
    ChaosExpansion out(F.grid());
    for (auto const& [q, f] : F.terms())
        out.add_kernel(static_cast<double>(-q) * f);
    return out;
}

ChaosExpansion carre_du_champ(ChaosExpansion const& F, ChaosExpansion const& G)
{
    require_same_grid(F.grid(), G.grid(), "carre_du_champ");
    ChaosExpansion out = ou_generator(multiply(F, G));
    out -= multiply(F, ou_generator(G));
    out -= multiply(G, ou_generator(F));
    out *= 0.5;
    return out;
}

Kernel slice(Kernel const& f, std::size_t cell)
{
    int const p = f.order();
    if (p < 2)
        throw InputError("slice: kernel order must be at least 2");
    std::size_t const m = f.cells();
    if (cell >= m)
        throw InputError("slice: cell index out of range");
    std::size_t const n = *checked_power(m, p - 1);
    auto src = f.coeffs().subspan(cell * n, n);
    Kernel out(f.grid(), p - 1, std::vector<double>(src.begin(), src.end()), false);
    if (f.symmetric())
        return symmetrize(out);
    return out;
}

ChaosExpansion slice_product_integral(Kernel const& f, Kernel const& g)
{
    require_same_grid(f.grid(), g.grid(), "slice_product_integral");
    Grid const& grid = f.grid();
    auto slice_expansion = [&grid](Kernel const& k, std::size_t x) {
        if (k.order() == 1)
            return ChaosExpansion(grid, k[x]);
        return ChaosExpansion::from_kernel(k.order() - 1, slice(k, x));
    };

    ChaosExpansion out(grid);
    for (std::size_t x = 0; x < grid.size(); ++x)
    {
        ChaosExpansion prod = multiply(slice_expansion(f, x), slice_expansion(g, x));
        prod *= grid.measure(x);
        out += prod;
    }
    return out;
}

//---------------------------------------------------------------------------//
// Evaluation
//---------------------------------------------------------------------------//

void hermite_table(double x, std::span<double> out)
{
    if (out.empty())
        return;
    out[0] = 1.0;
    if (out.size() > 1)
        out[1] = x;
    for (std::size_t k = 1; k + 1 < out.size(); ++k)
        out[k + 1] = x * out[k] - static_cast<double>(k) * out[k - 1];
}

ChaosEvaluator::ChaosEvaluator(ChaosExpansion const& F)
    : grid_(F.grid()), constant_(F.constant()), max_power_(F.max_order())
{
    std::size_t const m = grid_.size();
    offsets_.push_back(0);
    for (auto const& [q, f] : F.terms())
    {
        detail::Odometer odo(m, q);
        for (std::size_t z = 0; z < f.size(); ++z, odo.next())
        {
            auto d = odo.digits();
            if (f[z] == 0.0 || !std::is_sorted(d.begin(), d.end()))
                continue;
            // Sorted tuples represent their whole orbit; the kernel is
            // symmetric so the orbit contributes orbit_size * f.
            double coeff = f[z] * static_cast<double>(detail::orbit_size(d));
            std::size_t k = 0;
            while (k < d.size())
            {
                std::size_t run = 1;
                while (k + run < d.size() && d[k + run] == d[k])
                    ++run;
                coeff *= std::pow(grid_.measure(d[k]), 0.5 * static_cast<double>(run));
                factors_.push_back({static_cast<std::uint32_t>(d[k]),
                                    static_cast<std::uint32_t>(run)});
                k += run;
            }
            coefficients_.push_back(coeff);
            offsets_.push_back(factors_.size());
        }
    }
}

double ChaosEvaluator::operator()(std::span<double const> xi) const
{
    if (xi.size() != grid_.size())
        throw GridMismatchError("evaluate: sample length does not match the grid");
    std::size_t const stride = static_cast<std::size_t>(max_power_) + 1;
    thread_local std::vector<double> table;
    table.resize(xi.size() * stride);
    for (std::size_t c = 0; c < xi.size(); ++c)
        hermite_table(xi[c], std::span<double>(table).subspan(c * stride, stride));

    double sum = constant_;
    for (std::size_t j = 0; j < coefficients_.size(); ++j)
    {
        double term = coefficients_[j];
        for (std::size_t k = offsets_[j]; k < offsets_[j + 1]; ++k)
            term *= table[factors_[k].cell * stride + factors_[k].power];
        sum += term;
    }
    return sum;
}

double ChaosEvaluator::operator()(GaussianSample const& s) const
{
    require_same_grid(grid_, s.grid, "evaluate");
    return (*this)(std::span<double const>(s.xi));
}

double evaluate(ChaosExpansion const& F, GaussianSample const& s)
{
    return ChaosEvaluator(F)(s);
}

}  // namespace chaoslab
