#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trie_align {

// Exact non-negative-denominator fraction. Used for the average leaf depth
// and the discounting factor so that floor() in the decay formula is exact.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  // Parses "3", "0.3", "-1.25" or "3/10".
  static Rational parse(std::string_view text);
  // Nearest fraction with a power-of-ten denominator (up to 10^9).
  static Rational from_double(double value);

  [[nodiscard]] double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  [[nodiscard]] std::int64_t floor() const noexcept {
    std::int64_t q = num / den;
    if ((num % den != 0) && (num < 0)) --q;
    return q;
  }
  [[nodiscard]] std::string to_string() const;

  friend constexpr bool operator==(const Rational&, const Rational&) = default;
  friend Rational operator-(const Rational& a, const Rational& b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend Rational operator*(const Rational& a, const Rational& b) { return {a.num * b.num, a.den * b.den}; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.num * b.den < b.num * a.den; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
};

}  // namespace trie_align
