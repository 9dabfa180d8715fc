#pragma once

#include <cstdint>
#include <optional>

namespace apkit {

constexpr std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

constexpr std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) noexcept {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1U) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1U;
  }
  return result;
}

/// Representative of a in [0, m).
constexpr std::uint64_t reduce_mod(std::int64_t a, std::uint64_t m) noexcept {
  const auto sm = static_cast<std::int64_t>(m);
  std::int64_t r = a % sm;
  if (r < 0) r += sm;
  return static_cast<std::uint64_t>(r);
}

/// Inverse of a modulo m, if gcd(a, m) = 1.
constexpr std::optional<std::uint64_t> inverse_mod(std::uint64_t a, std::uint64_t m) noexcept {
  std::int64_t old_r = static_cast<std::int64_t>(a % m);
  std::int64_t r = static_cast<std::int64_t>(m);
  std::int64_t old_s = 1;
  std::int64_t s = 0;
  while (r != 0) {
    const std::int64_t q = old_r / r;
    const std::int64_t next_r = old_r - q * r;
    old_r = r;
    r = next_r;
    const std::int64_t next_s = old_s - q * s;
    old_s = s;
    s = next_s;
  }
  if (old_r != 1) return std::nullopt;
  return reduce_mod(old_s, m);
}

/// a*b, or nullopt on unsigned 64-bit overflow.
constexpr std::optional<std::uint64_t> checked_mul(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) return std::nullopt;
  return out;
}

}  // namespace apkit
