#include "trie_align/rational.hpp"

#include <charconv>
#include <cmath>

namespace trie_align {

namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("not a number: '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Rational Rational::parse(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty number");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return {parse_int(text.substr(0, slash), text), parse_int(text.substr(slash + 1), text)};
  }
  bool negative = false;
  std::string_view body = text;
  if (body.front() == '-' || body.front() == '+') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  const auto dot = body.find('.');
  std::string_view int_part = body.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
  if (int_part.empty() && frac_part.empty()) throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  if (frac_part.size() > 12) frac_part = frac_part.substr(0, 12);
  std::int64_t den = 1;
  for (std::size_t k = 0; k < frac_part.size(); ++k) den *= 10;
  const std::int64_t whole = int_part.empty() ? 0 : parse_int(int_part, text);
  const std::int64_t frac = frac_part.empty() ? 0 : parse_int(frac_part, text);
  const std::int64_t num = whole * den + frac;
  return {negative ? -num : num, den};
}

Rational Rational::from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("Rational: non-finite value");
  std::int64_t den = 1;
  for (int k = 0; k <= 9; ++k, den *= 10) {
    const double scaled = value * static_cast<double>(den);
    const double rounded = std::round(scaled);
    if (std::fabs(scaled - rounded) < 1e-9 * std::max(1.0, std::fabs(scaled))) {
      return {static_cast<std::int64_t>(rounded), den};
    }
  }
  return {static_cast<std::int64_t>(std::llround(value * 1e9)), 1'000'000'000};
}

std::string Rational::to_string() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

}  // namespace trie_align
