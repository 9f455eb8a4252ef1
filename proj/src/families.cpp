#include "chaoslab/families.hpp"

#include <algorithm>
#include <cmath>

#include "chaoslab/chaos_algebra.hpp"
#include "chaoslab/rng.hpp"
#include "tuple_util.hpp"

namespace chaoslab {

Kernel qvar_kernel(std::size_t n, std::size_t m)
{
    if (m == 0)
        m = n;
    if (n == 0 || m % n != 0)
        throw GridMismatchError("qvar: block count " + std::to_string(n)
                                + " must divide the grid size " + std::to_string(m));
    Grid const grid = Grid::uniform(m);
    std::size_t const width = m / n;
    double const c = std::sqrt(static_cast<double>(n) / 2.0);
    Kernel f(grid, 2);
    auto dst = f.mutable_coeffs();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (i / width == j / width)
                dst[i * m + j] = c;
    f.assert_symmetric();
    return f;
}

Kernel offdiag_rand_kernel(int p, std::size_t m, std::uint64_t seed)
{
    if (p < 1)
        throw InputError("offdiag-rand: order must be at least 1");
    if (static_cast<std::size_t>(p) > m)
        throw InputError("offdiag-rand: a diagonal-free kernel needs m >= p");
    Kernel f(Grid::uniform(m), p);
    auto dst = f.mutable_coeffs();
    CounterRng const rng(seed, 7);
    std::vector<double> z(1);
    detail::Odometer odo(m, p);
    std::vector<std::size_t> sorted(p);
    for (std::size_t k = 0; k < dst.size(); ++k, odo.next())
    {
        std::copy(odo.digits().begin(), odo.digits().end(), sorted.begin());
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            continue;
        rng.normals(k, z);
        dst[k] = z[0];
    }
    Kernel s = symmetrize(f);
    double const var = factorial(p) * inner(s, s);
    s *= 1.0 / std::sqrt(var);
    return s;
}

ChaosVector pair2d_vector(std::size_t n)
{
    Kernel ones(Grid::uniform(n), 1, std::vector<double>(n, 1.0));
    return ChaosVector({{1, ones}, {2, qvar_kernel(n)}});
}

}  // namespace chaoslab
