#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace chaoslab {

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * Output is a pure function of (counter, key), so any draw can be produced
 * independently of every other one. That is what makes Monte Carlo batches
 * identical regardless of how samples are split across workers.
 */
class Philox4x32
{
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept
    {
        for (int round = 0; round < 10; ++round)
        {
            if (round > 0)
            {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            std::uint64_t const p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            std::uint64_t const p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }
};

//---------------------------------------------------------------------------//
/*!
 * Standard normal and uniform draws addressed by (seed, stream, sample, slot).
 *
 * Slot j of sample i in stream s uses counter (i_lo, i_hi, j, s) and key
 * (seed_lo, seed_hi); one block yields two normals via Box-Muller.
 */
class CounterRng
{
  public:
    static constexpr char const* id = "philox4x32-10/box-muller";

    explicit CounterRng(std::uint64_t seed, std::uint32_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream)
    {
    }

    // Fills `out` with independent N(0, 1) draws for one sample.
    void normals(std::uint64_t sample, std::span<double> out) const noexcept
    {
        for (std::size_t j = 0; 2 * j < out.size(); ++j)
        {
            auto [u1, u2] = uniforms(sample, static_cast<std::uint32_t>(j));
            double const r = std::sqrt(-2.0 * std::log(u1));
            double const angle = 2.0 * std::numbers::pi * u2;
            out[2 * j] = r * std::cos(angle);
            if (2 * j + 1 < out.size())
                out[2 * j + 1] = r * std::sin(angle);
        }
    }

    // Two uniforms on the open interval (0, 1) with 53-bit resolution.
    std::array<double, 2> uniforms(std::uint64_t sample, std::uint32_t slot) const noexcept
    {
        auto w = Philox4x32::block({static_cast<std::uint32_t>(sample),
                                    static_cast<std::uint32_t>(sample >> 32), slot, stream_},
                                   key_);
        std::uint64_t a = (std::uint64_t{w[0]} << 32) | w[1];
        std::uint64_t b = (std::uint64_t{w[2]} << 32) | w[3];
        return {to_open_unit(a), to_open_unit(b)};
    }

  private:
    static double to_open_unit(std::uint64_t bits) noexcept
    {
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    Philox4x32::Key key_;
    std::uint32_t stream_;
};

}  // namespace chaoslab
