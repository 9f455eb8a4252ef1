#pragma once

// Index arithmetic shared by the dense kernel routines.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "chaoslab/grid_kernel.hpp"

namespace chaoslab::detail {

// Lexicographic walk over [0, m)^p.
class Odometer
{
  public:
    Odometer(std::size_t m, int p) : m_(m), digits_(static_cast<std::size_t>(p), 0) {}

    std::span<std::size_t const> digits() const noexcept { return digits_; }

    void next() noexcept
    {
        for (std::size_t k = digits_.size(); k-- > 0;)
        {
            if (++digits_[k] < m_)
                return;
            digits_[k] = 0;
        }
    }

  private:
    std::size_t m_;
    std::vector<std::size_t> digits_;
};

inline void decode(std::size_t linear, std::size_t m, std::span<std::size_t> tuple)
{
    for (std::size_t k = tuple.size(); k-- > 0;)
    {
        tuple[k] = linear % m;
        linear /= m;
    }
}

inline std::size_t encode(std::span<std::size_t const> tuple, std::size_t m)
{
    std::size_t idx = 0;
    for (std::size_t c : tuple)
        idx = idx * m + c;
    return idx;
}

// Linear index of the sorted permutation of `digits`; `sorted` is scratch
// space of the same length and holds the sorted tuple on return.
inline std::size_t canonical_index(std::span<std::size_t const> digits, std::size_t m,
                                   std::vector<std::size_t>& sorted)
{
    std::copy(digits.begin(), digits.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    return encode(sorted, m);
}

// Number of distinct permutations of a sorted tuple: p! / prod(k_i!).
inline std::size_t orbit_size(std::span<std::size_t const> sorted)
{
    std::size_t n = 1;
    std::size_t run = 0;
    for (std::size_t k = 0; k < sorted.size(); ++k)
    {
        run = (k > 0 && sorted[k] == sorted[k - 1]) ? run + 1 : 1;
        // Multiply by (k+1) / run incrementally; stays integral.
        n = n * (k + 1) / run;
    }
    return n;
}

// prod_i mu(u_i) for every r-tuple u, in lexicographic order.
inline std::vector<double> tuple_weights(Grid const& grid, int r)
{
    std::vector<double> w{1.0};
    for (int k = 0; k < r; ++k)
    {
        std::vector<double> next;
        next.reserve(w.size() * grid.size());
        for (double a : w)
        {
            for (double mu : grid.measures())
                next.push_back(a * mu);
        }
        w = std::move(next);
    }
    return w;
}

}  // namespace chaoslab::detail
