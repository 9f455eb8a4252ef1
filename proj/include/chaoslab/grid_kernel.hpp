#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "chaoslab/errors.hpp"

namespace chaoslab {

//---------------------------------------------------------------------------//
// Size limits
//---------------------------------------------------------------------------//

/// Maximum number of dense coefficients in any kernel. Defaults to 2^24 and
/// can be overridden with the CHAOSLAB_BUDGET environment variable.
std::size_t tensor_budget();

/// Override the tensor budget for the current process (tests, CLI).
void set_tensor_budget(std::size_t entries);

/// m^p, or nullopt on overflow.
std::optional<std::size_t> checked_power(std::size_t m, int p);

//---------------------------------------------------------------------------//
/*!
 * Finite partition of the base interval into cells with explicit measures.
 *
 * A doubled grid carries 2m cells: cells [0, m) stand for the original noise
 * and cells [m, 2m) for an independent copy, with cell i and i+m sharing the
 * same measure.
 */
class Grid
{
  public:
    explicit Grid(std::vector<double> measures);

    static Grid uniform(std::size_t m);
    static Grid doubled(Grid const& base);

    std::size_t size() const noexcept { return measures_.size(); }
    double measure(std::size_t cell) const { return measures_.at(cell); }
    std::span<double const> measures() const noexcept { return measures_; }
    bool is_doubled() const noexcept { return doubled_; }

    // Number of cells in one half (the base grid size) of a doubled grid.
    std::size_t half_size() const;
    bool in_first_half(std::size_t cell) const;
    Grid base() const;

    bool operator==(Grid const&) const = default;

  private:
    Grid(std::vector<double> measures, bool doubled);

    std::vector<double> measures_;
    bool doubled_ = false;
};

//---------------------------------------------------------------------------//
/*!
 * Dense kernel on the p-fold product of a grid.
 *
 * Coefficients are stored row-major: the linear index of (i_1, ..., i_p) is
 * i_1 m^{p-1} + ... + i_p, so iteration order is lexicographic in the cell
 * indices.
 */
class Kernel
{
  public:
    // Zero kernel
    Kernel(Grid grid, int order);
    Kernel(Grid grid, int order, std::vector<double> coeffs,
           bool symmetric = false);

    Grid const& grid() const noexcept { return grid_; }
    int order() const noexcept { return order_; }
    std::size_t cells() const noexcept { return grid_.size(); }
    std::size_t size() const noexcept { return coeffs_.size(); }
    bool symmetric() const noexcept { return symmetric_; }

    std::span<double const> coeffs() const noexcept { return coeffs_; }
    std::span<double> mutable_coeffs() noexcept
    {
        symmetric_ = false;
        return coeffs_;
    }

    double operator[](std::size_t linear) const { return coeffs_[linear]; }
    double at(std::span<std::size_t const> tuple) const;
    void set(std::span<std::size_t const> tuple, double value);

    std::size_t linear_index(std::span<std::size_t const> tuple) const;
    void decode(std::size_t linear, std::span<std::size_t> tuple) const;

    // Exhaustive check of permutation invariance (canonical-orbit
    // comparison), independent of the stored flag.
    bool is_symmetric(double rel_tol = 1e-12) const;
    bool is_zero() const;

    // Marks the kernel as symmetric after verifying it.
    void assert_symmetric(double rel_tol = 1e-12);

    Kernel& operator+=(Kernel const& other);
    Kernel& operator-=(Kernel const& other);
    Kernel& operator*=(double c);

  private:
    friend Kernel symmetrize(Kernel const& f);
    friend Kernel restrict_support(Kernel const&, std::span<std::size_t const>);
    friend Kernel first_half_block(Kernel const&);

    Grid grid_;
    int order_;
    std::vector<double> coeffs_;
    bool symmetric_ = false;
};

Kernel operator+(Kernel a, Kernel const& b);
Kernel operator-(Kernel a, Kernel const& b);
Kernel operator*(double c, Kernel f);

//---------------------------------------------------------------------------//
/*!
 * Linear map between the cells of two grids; matrix[target][source].
 */
class CellMap
{
  public:
    CellMap(Grid source, Grid target);
    CellMap(Grid source, Grid target, std::vector<double> row_major);

    static CellMap identity(Grid const& grid);

    Grid const& source() const noexcept { return source_; }
    Grid const& target() const noexcept { return target_; }
    double operator()(std::size_t target_cell, std::size_t source_cell) const
    {
        return matrix_[target_cell * source_.size() + source_cell];
    }
    void set(std::size_t target_cell, std::size_t source_cell, double value);

  private:
    Grid source_;
    Grid target_;
    std::vector<double> matrix_;
};

//---------------------------------------------------------------------------//
// Kernel algebra
//---------------------------------------------------------------------------//

// Average over all coordinate permutations.
Kernel symmetrize(Kernel const& f);

// Plain L2 inner product with cell-measure weights (no p! factor).
double inner(Kernel const& f, Kernel const& g);
double norm(Kernel const& f);

using KernelOrScalar = std::variant<double, Kernel>;

// r-th contraction. The result has order p+q-2r; a full contraction
// (p == q == r) is returned as a scalar. Not symmetrized.
KernelOrScalar contract(Kernel const& f, Kernel const& g, int r);

// Same, for callers that know the result has order >= 1.
Kernel contract_kernel(Kernel const& f, Kernel const& g, int r);

// A^{\otimes p} f
Kernel push_forward(CellMap const& map, Kernel const& f);

// Keep coefficients whose every coordinate lies in `cells`.
Kernel restrict_support(Kernel const& f, std::span<std::size_t const> cells);

// Restrict a kernel over a doubled grid to first-half coordinates and
// re-index it onto the base grid.
Kernel first_half_block(Kernel const& h);

// Relative comparison of two kernels over the same grid and order:
// max |a-b| <= tol * max(1, max |b|).
bool approx_equal(Kernel const& a, Kernel const& b, double rel_tol);

// Raises GridMismatchError unless both kernels share a grid.
void require_same_grid(Grid const& a, Grid const& b, char const* what);

}  // namespace chaoslab
