#include "chaoslab/grid_kernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "tuple_util.hpp"

namespace chaoslab {

namespace {

std::size_t budget_from_env()
{
    constexpr std::size_t default_budget = std::size_t{1} << 24;
    char const* env = std::getenv("CHAOSLAB_BUDGET");
    if (!env || !*env)
        return default_budget;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
        throw InputError(std::string("CHAOSLAB_BUDGET must be a positive integer, got '")
                         + env + "'");
    return static_cast<std::size_t>(v);
}

std::atomic<std::size_t>& budget_slot()
{
    static std::atomic<std::size_t> slot{budget_from_env()};
    return slot;
}

std::size_t dense_size(std::size_t m, int p)
{
    auto n = checked_power(m, p);
    if (!n || *n > tensor_budget())
        throw BudgetExceededError("kernel of order " + std::to_string(p) + " on "
                                  + std::to_string(m)
                                  + " cells exceeds the tensor budget of "
                                  + std::to_string(tensor_budget()) + " entries");
    return *n;
}

}  // namespace

std::size_t tensor_budget()
{
    return budget_slot().load();
}

void set_tensor_budget(std::size_t entries)
{
    if (entries == 0)
        throw InputError("tensor budget must be positive");
    budget_slot().store(entries);
}

std::optional<std::size_t> checked_power(std::size_t m, int p)
{
    std::size_t n = 1;
    for (int i = 0; i < p; ++i)
    {
        if (m != 0 && n > std::numeric_limits<std::size_t>::max() / m)
            return std::nullopt;
        n *= m;
    }
    return n;
}

void require_same_grid(Grid const& a, Grid const& b, char const* what)
{
    if (!(a == b))
        throw GridMismatchError(std::string(what) + ": operands live on different grids");
}

//---------------------------------------------------------------------------//
// Grid
//---------------------------------------------------------------------------//

Grid::Grid(std::vector<double> measures) : Grid(std::move(measures), false) {}

Grid::Grid(std::vector<double> measures, bool doubled)
    : measures_(std::move(measures)), doubled_(doubled)
{
    if (measures_.empty())
        throw InputError("grid needs at least one cell");
    for (double mu : measures_)
    {
        if (!(mu > 0) || !std::isfinite(mu))
            throw InputError("grid cell measures must be finite and positive");
    }
    if (doubled_)
    {
        if (measures_.size() % 2 != 0)
            throw InputError("doubled grid must have an even cell count");
        std::size_t m = measures_.size() / 2;
        for (std::size_t i = 0; i < m; ++i)
        {
            if (measures_[i] != measures_[i + m])
                throw InputError("doubled grid halves must carry equal measures");
        }
    }
}

Grid Grid::uniform(std::size_t m)
{
    if (m == 0)
        throw InputError("grid needs at least one cell");
    return Grid(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

Grid Grid::doubled(Grid const& base)
{
    if (base.is_doubled())
        throw InputError("cannot double an already doubled grid");
    std::vector<double> mu(base.measures_);
    mu.insert(mu.end(), base.measures_.begin(), base.measures_.end());
    return Grid(std::move(mu), true);
}

std::size_t Grid::half_size() const
{
    if (!doubled_)
        throw GridMismatchError("grid is not doubled");
    return measures_.size() / 2;
}

bool Grid::in_first_half(std::size_t cell) const
{
    return cell < half_size();
}

Grid Grid::base() const
{
    std::size_t m = half_size();
    return Grid(std::vector<double>(measures_.begin(), measures_.begin() + m));
}

//---------------------------------------------------------------------------//
// Kernel
//---------------------------------------------------------------------------//

Kernel::Kernel(Grid grid, int order) : grid_(std::move(grid)), order_(order)
{
    if (order_ < 1)
        throw InputError("kernel order must be at least 1");
    coeffs_.assign(dense_size(grid_.size(), order_), 0.0);
    symmetric_ = true;
}

Kernel::Kernel(Grid grid, int order, std::vector<double> coeffs, bool symmetric)
    : grid_(std::move(grid)), order_(order), coeffs_(std::move(coeffs))
{
    if (order_ < 1)
        throw InputError("kernel order must be at least 1");
    if (coeffs_.size() != dense_size(grid_.size(), order_))
        throw InputError("kernel coefficient count does not match m^p");
    for (double c : coeffs_)
    {
        if (!std::isfinite(c))
            throw InputError("kernel coefficients must be finite");
    }
    if (symmetric)
        assert_symmetric();
}

std::size_t Kernel::linear_index(std::span<std::size_t const> tuple) const
{
    if (tuple.size() != static_cast<std::size_t>(order_))
        throw InputError("tuple length does not match kernel order");
    std::size_t m = cells();
    std::size_t idx = 0;
    for (std::size_t c : tuple)
    {
        if (c >= m)
            throw InputError("cell index out of range");
        idx = idx * m + c;
    }
    return idx;
}

void Kernel::decode(std::size_t linear, std::span<std::size_t> tuple) const
{
    detail::decode(linear, cells(), tuple);
}

double Kernel::at(std::span<std::size_t const> tuple) const
{
    return coeffs_[linear_index(tuple)];
}

void Kernel::set(std::span<std::size_t const> tuple, double value)
{
    if (!std::isfinite(value))
        throw InputError("kernel coefficients must be finite");
    coeffs_[linear_index(tuple)] = value;
    symmetric_ = false;
}

bool Kernel::is_symmetric(double rel_tol) const
{
    std::size_t m = cells();
    double scale = 0;
    for (double c : coeffs_)
        scale = std::max(scale, std::abs(c));
    double tol = rel_tol * std::max(scale, 1.0);

    detail::Odometer odo(m, order_);
    std::vector<std::size_t> sorted(order_);
    for (std::size_t z = 0; z < coeffs_.size(); ++z, odo.next())
    {
        std::size_t canon = detail::canonical_index(odo.digits(), m, sorted);
        if (std::abs(coeffs_[z] - coeffs_[canon]) > tol)
            return false;
    }
    return true;
}

bool Kernel::is_zero() const
{
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return c == 0.0; });
}

void Kernel::assert_symmetric(double rel_tol)
{
    if (!is_symmetric(rel_tol))
        throw InputError("kernel flagged symmetric is not permutation invariant");
    symmetric_ = true;
}

Kernel& Kernel::operator+=(Kernel const& other)
{
    require_same_grid(grid_, other.grid_, "kernel addition");
    if (order_ != other.order_)
        throw InputError("kernel addition: order mismatch");
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        coeffs_[i] += other.coeffs_[i];
    symmetric_ = symmetric_ && other.symmetric_;
    return *this;
}

Kernel& Kernel::operator-=(Kernel const& other)
{
    require_same_grid(grid_, other.grid_, "kernel subtraction");
    if (order_ != other.order_)
        throw InputError("kernel subtraction: order mismatch");
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        coeffs_[i] -= other.coeffs_[i];
    symmetric_ = symmetric_ && other.symmetric_;
    return *this;
}

Kernel& Kernel::operator*=(double c)
{
    for (double& v : coeffs_)
        v *= c;
    return *this;
}

Kernel operator+(Kernel a, Kernel const& b)
{
    a += b;
    return a;
}

Kernel operator-(Kernel a, Kernel const& b)
{
    a -= b;
    return a;
}

Kernel operator*(double c, Kernel f)
{
    f *= c;
    return f;
}

//---------------------------------------------------------------------------//
// CellMap
//---------------------------------------------------------------------------//

CellMap::CellMap(Grid source, Grid target)
    : source_(std::move(source)),
      target_(std::move(target)),
      matrix_(source_.size() * target_.size(), 0.0)
{
}

CellMap::CellMap(Grid source, Grid target, std::vector<double> row_major)
    : source_(std::move(source)), target_(std::move(target)), matrix_(std::move(row_major))
{
    if (matrix_.size() != source_.size() * target_.size())
        throw InputError("cell map matrix has wrong dimensions");
}

CellMap CellMap::identity(Grid const& grid)
{
    CellMap map(grid, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        map.set(i, i, 1.0);
    return map;
}

void CellMap::set(std::size_t target_cell, std::size_t source_cell, double value)
{
    if (target_cell >= target_.size() || source_cell >= source_.size())
        throw InputError("cell map index out of range");
    matrix_[target_cell * source_.size() + source_cell] = value;
}

//---------------------------------------------------------------------------//
// Algebra
//---------------------------------------------------------------------------//

Kernel symmetrize(Kernel const& f)
{
    if (f.symmetric())
        return f;

    std::size_t const m = f.cells();
    int const p = f.order();
    Kernel out(f.grid(), p);
    auto& dst = out.coeffs_;
    auto const& src = f.coeffs_;

    // Orbit sums land on the sorted (lexicographically smallest) member.
    std::vector<std::size_t> sorted(p);
    {
        detail::Odometer odo(m, p);
        for (std::size_t z = 0; z < src.size(); ++z, odo.next())
            dst[detail::canonical_index(odo.digits(), m, sorted)] += src[z];
    }
    {
        detail::Odometer odo(m, p);
        for (std::size_t z = 0; z < dst.size(); ++z, odo.next())
        {
            std::size_t canon = detail::canonical_index(odo.digits(), m, sorted);
            if (canon == z)
                dst[z] /= static_cast<double>(detail::orbit_size(sorted));
            else
                dst[z] = dst[canon];
        }
    }
    out.symmetric_ = true;
    return out;
}

double inner(Kernel const& f, Kernel const& g)
{
    require_same_grid(f.grid(), g.grid(), "inner");
    if (f.order() != g.order())
        throw InputError("inner: order mismatch");
    auto w = detail::tuple_weights(f.grid(), f.order());
    double sum = 0;
    auto a = f.coeffs();
    auto b = g.coeffs();
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += a[i] * b[i] * w[i];
    return sum;
}

double norm(Kernel const& f)
{
    return std::sqrt(inner(f, f));
}

KernelOrScalar contract(Kernel const& f, Kernel const& g, int r)
{
    require_same_grid(f.grid(), g.grid(), "contract");
    int const p = f.order();
    int const q = g.order();
    if (r < 0 || r > std::min(p, q))
        throw InputError("contract: r must lie in [0, min(p, q)]");
    if (p == r && q == r)
        return inner(f, g);

    std::size_t const m = f.cells();
    std::size_t const inner_n = *checked_power(m, r);
    std::size_t const nx = *checked_power(m, p - r);
    std::size_t const ny = *checked_power(m, q - r);
    auto const w = detail::tuple_weights(f.grid(), r);

    Kernel out(f.grid(), p + q - 2 * r);
    auto dst = out.mutable_coeffs();
    auto a = f.coeffs();
    auto b = g.coeffs();
    for (std::size_t x = 0; x < nx; ++x)
    {
        double const* fx = a.data() + x * inner_n;
        for (std::size_t y = 0; y < ny; ++y)
        {
            double const* gy = b.data() + y * inner_n;
            double sum = 0;
            for (std::size_t u = 0; u < inner_n; ++u)
                sum += fx[u] * gy[u] * w[u];
            dst[x * ny + y] = sum;
        }
    }
    return out;
}

Kernel contract_kernel(Kernel const& f, Kernel const& g, int r)
{
    auto result = contract(f, g, r);
    if (auto* k = std::get_if<Kernel>(&result))
        return std::move(*k);
    throw InputError("contract_kernel: full contraction yields a scalar");
}

Kernel push_forward(CellMap const& map, Kernel const& f)
{
    require_same_grid(map.source(), f.grid(), "push_forward");
    std::size_t const ms = map.source().size();
    std::size_t const mt = map.target().size();
    int const p = f.order();
    // Check the final size up front so we fail before allocating.
    Kernel out(map.target(), p);

    std::vector<double> cur(f.coeffs().begin(), f.coeffs().end());
    std::vector<std::size_t> dims(p, ms);
    for (int k = 0; k < p; ++k)
    {
        std::size_t before = 1;
        for (int j = 0; j < k; ++j)
            before *= dims[j];
        std::size_t after = 1;
        for (int j = k + 1; j < p; ++j)
            after *= dims[j];
        if (auto n = checked_power(std::max(ms, mt), p); !n || *n > tensor_budget())
            throw BudgetExceededError("push_forward intermediate exceeds the tensor budget");

        std::vector<double> next(before * mt * after, 0.0);
        for (std::size_t b = 0; b < before; ++b)
        {
            for (std::size_t i = 0; i < ms; ++i)
            {
                double const* src = cur.data() + (b * ms + i) * after;
                for (std::size_t j = 0; j < mt; ++j)
                {
                    double a = map(j, i);
                    if (a == 0.0)
                        continue;
                    double* dst = next.data() + (b * mt + j) * after;
                    for (std::size_t s = 0; s < after; ++s)
                        dst[s] += a * src[s];
                }
            }
        }
        cur = std::move(next);
        dims[k] = mt;
    }
    return Kernel(map.target(), p, std::move(cur), false);
}

Kernel restrict_support(Kernel const& f, std::span<std::size_t const> cells)
{
    std::size_t const m = f.cells();
    std::vector<bool> keep(m, false);
    for (std::size_t c : cells)
    {
        if (c >= m)
            throw InputError("restrict_support: cell index out of range");
        keep[c] = true;
    }
    Kernel out = f;
    auto dst = out.mutable_coeffs();
    detail::Odometer odo(m, f.order());
    for (std::size_t z = 0; z < dst.size(); ++z, odo.next())
    {
        for (std::size_t c : odo.digits())
        {
            if (!keep[c])
            {
                dst[z] = 0.0;
                break;
            }
        }
    }
    // Restriction to a permutation-invariant set preserves symmetry.
    out.symmetric_ = f.symmetric();
    return out;
}

Kernel first_half_block(Kernel const& h)
{
    Grid const& doubled = h.grid();
    std::size_t const m = doubled.half_size();
    std::size_t const m2 = doubled.size();
    int const p = h.order();
    Kernel out(doubled.base(), p);
    std::vector<double> dst(out.size());
    detail::Odometer odo(m, p);
    for (std::size_t z = 0; z < dst.size(); ++z, odo.next())
    {
        std::size_t idx = 0;
        for (std::size_t c : odo.digits())
            idx = idx * m2 + c;
        dst[z] = h[idx];
    }
    Kernel result(doubled.base(), p, std::move(dst), false);
    result.symmetric_ = h.symmetric();
    return result;
}

bool approx_equal(Kernel const& a, Kernel const& b, double rel_tol)
{
    if (!(a.grid() == b.grid()) || a.order() != b.order())
        return false;
    double scale = 1.0;
    for (double v : b.coeffs())
        scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        if (std::abs(a[i] - b[i]) > rel_tol * scale)
            return false;
    }
    return true;
}

}  // namespace chaoslab
