#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace idesign {

/// Exact rational number backed by a reduced int64 numerator/denominator pair.
///
/// Every operation is carried out in 128-bit intermediates and reduced; a
/// result that does not fit back into 64 bits throws std::overflow_error
/// rather than wrapping. The magnitudes occurring for block arrays of a few
/// dozen plots stay far below that limit.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT(implicit)
  Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

  static Rational parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_integer() const { return den_ == 1; }
  int sign() const { return (num_ > 0) - (num_ < 0); }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  explicit operator double() const { return to_double(); }

  std::string str() const;

  Rational operator-() const {
    if (num_ == INT64_MIN) throw std::overflow_error("Rational negation overflow");
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }

  friend Rational operator+(const Rational& x, const Rational& y) {
    if (x.den_ == y.den_) return from_wide(wide(x.num_) + y.num_, x.den_);
    const std::int64_t g = std::gcd(x.den_, y.den_);
    const __int128 n = wide(x.num_) * (y.den_ / g) + wide(y.num_) * (x.den_ / g);
    return from_wide(n, wide(x.den_ / g) * y.den_);
  }
  friend Rational operator-(const Rational& x, const Rational& y) { return x + (-y); }
  friend Rational operator*(const Rational& x, const Rational& y) {
    if (x.num_ == 0 || y.num_ == 0) return Rational{};
    const std::int64_t g1 = std::gcd(x.num_, y.den_);
    const std::int64_t g2 = std::gcd(y.num_, x.den_);
    return from_wide(wide(x.num_ / g1) * (y.num_ / g2), wide(x.den_ / g2) * (y.den_ / g1));
  }
  friend Rational operator/(const Rational& x, const Rational& y) {
    if (y.num_ == 0) throw std::domain_error("Rational division by zero");
    Rational inv;
    inv.num_ = y.num_ < 0 ? -y.den_ : y.den_;
    inv.den_ = y.num_ < 0 ? -y.num_ : y.num_;
    return x * inv;
  }

  Rational& operator+=(const Rational& y) { return *this = *this + y; }
  Rational& operator-=(const Rational& y) { return *this = *this - y; }
  Rational& operator*=(const Rational& y) { return *this = *this * y; }
  Rational& operator/=(const Rational& y) { return *this = *this / y; }

  friend bool operator==(const Rational& x, const Rational& y) {
    return x.num_ == y.num_ && x.den_ == y.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& x, const Rational& y) {
    return wide(x.num_) * y.den_ <=> wide(y.num_) * x.den_;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r);

 private:
  static __int128 wide(std::int64_t v) { return static_cast<__int128>(v); }
  static Rational from_wide(__int128 n, __int128 d);
  void assign(std::int64_t n, std::int64_t d);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

/// Best rational approximation with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
Rational approximate(double value, std::int64_t max_den);

}  // namespace idesign
