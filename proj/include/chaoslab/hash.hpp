#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace chaoslab {

// FNV-1a, 64-bit. Used to fingerprint configs and kernel inputs in reports.
class Fnv1a
{
  public:
    Fnv1a& bytes(void const* data, std::size_t n) noexcept
    {
        auto const* p = static_cast<unsigned char const*>(data);
        for (std::size_t i = 0; i < n; ++i)
        {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
        return *this;
    }
    Fnv1a& text(std::string_view s) noexcept { return bytes(s.data(), s.size()); }
    Fnv1a& value(double x) noexcept { return bytes(&x, sizeof x); }
    Fnv1a& value(std::uint64_t x) noexcept { return bytes(&x, sizeof x); }
    Fnv1a& values(std::span<double const> xs) noexcept
    {
        return bytes(xs.data(), xs.size_bytes());
    }

    std::uint64_t digest() const noexcept { return state_; }
    std::string hex() const;

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string Fnv1a::hex() const
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i, v >>= 4)
        out[i] = digits[v & 0xf];
    return out;
}

}  // namespace chaoslab
