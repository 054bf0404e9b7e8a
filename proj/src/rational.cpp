#include "idesign/rational.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace idesign {

namespace {

__int128 gcd128(__int128 x, __int128 y) {
  if (x < 0) x = -x;
  if (y < 0) y = -y;
  while (y != 0) {
    const __int128 r = x % y;
    x = y;
    y = r;
  }
  return x;
}

bool fits(__int128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() + 1 &&
         v <= std::numeric_limits<std::int64_t>::max();
}

}  // namespace

Rational Rational::from_wide(__int128 n, __int128 d) {
  if (d == 0) throw std::domain_error("Rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  if (n == 0) return Rational{};
  const __int128 g = gcd128(n, d);
  n /= g;
  d /= g;
  if (!fits(n) || !fits(d)) throw std::overflow_error("Rational overflow");
  Rational r;
  r.num_ = static_cast<std::int64_t>(n);
  r.den_ = static_cast<std::int64_t>(d);
  return r;
}

void Rational::assign(std::int64_t n, std::int64_t d) { *this = from_wide(n, d); }

Rational Rational::parse(std::string_view text) {
  auto parse_int = [](std::string_view s) -> std::int64_t {
    if (s.empty()) throw std::invalid_argument("empty number");
    std::size_t pos = 0;
    const std::string owned(s);
    const long long v = std::stoll(owned, &pos);
    if (pos != owned.size()) throw std::invalid_argument("malformed number: " + owned);
    return v;
  };
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }
  const auto exp_pos = text.find_first_of("eE");
  std::string_view mantissa = text.substr(0, exp_pos);
  int exponent = 0;
  if (exp_pos != std::string_view::npos) {
    exponent = static_cast<int>(parse_int(text.substr(exp_pos + 1)));
  }
  std::string digits;
  bool negative = false;
  if (!mantissa.empty() && (mantissa.front() == '-' || mantissa.front() == '+')) {
    negative = mantissa.front() == '-';
    mantissa.remove_prefix(1);
  }
  int frac_digits = 0;
  bool seen_point = false;
  for (const char c : mantissa) {
    if (c == '.') {
      if (seen_point) throw std::invalid_argument("malformed number: " + std::string(text));
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) ++frac_digits;
    } else {
      throw std::invalid_argument("malformed number: " + std::string(text));
    }
  }
  if (digits.empty()) throw std::invalid_argument("malformed number: " + std::string(text));
  Rational r(parse_int(digits));
  int scale = exponent - frac_digits;
  const Rational ten(10);
  for (; scale > 0; --scale) r *= ten;
  for (; scale < 0; ++scale) r /= ten;
  return negative ? -r : r;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

Rational approximate(double value, std::int64_t max_den) {
  if (!std::isfinite(value)) throw std::domain_error("cannot approximate a non-finite value");
  // Stern-Brocot style continued fraction with semiconvergent check.
  const bool negative = value < 0;
  double x = std::fabs(value);
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_real = std::floor(frac);
    if (a_real > 9.0e18) break;
    const auto a = static_cast<std::int64_t>(a_real);
    const __int128 q2 = static_cast<__int128>(a) * q1 + q0;
    if (q2 > max_den) {
      const std::int64_t k = (max_den - q0) / q1;
      const Rational semi(k * p1 + p0, k * q1 + q0);
      const Rational conv(p1, q1);
      const double err_semi = std::fabs(semi.to_double() - x);
      const double err_conv = std::fabs(conv.to_double() - x);
      const Rational best = err_semi < err_conv ? semi : conv;
      return negative ? -best : best;
    }
    const std::int64_t p2 = a * p1 + p0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = static_cast<std::int64_t>(q2);
    const double rem = frac - a_real;
    if (rem < 1e-15 || std::fabs(static_cast<double>(p1) / static_cast<double>(q1) - x) == 0.0) break;
    frac = 1.0 / rem;
  }
  const Rational r(p1, q1);
  return negative ? -r : r;
}

}  // namespace idesign
