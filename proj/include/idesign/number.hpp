#pragma once

#include <optional>
#include <string>

#include "idesign/rational.hpp"

namespace idesign {

/// A real quantity carried with its exact rational value when one exists.
///
/// Closed-form optima, orbit weights and residuals are rational whenever the
/// covariance is identity or type-H and the minimax point is rational; in the
/// irrational (square-root) regimes and on the general-covariance path only
/// the floating value is present.
struct Number {
  double value = 0.0;
  std::optional<Rational> exact;

  Number() = default;
  Number(const Rational& r) : value(r.to_double()), exact(r) {}  // NOLINT(implicit)
  static Number approx(double v) {
    Number n;
    n.value = v;
    return n;
  }

  bool is_exact() const { return exact.has_value(); }

  /// "num/den" when exact, shortest round-trip decimal otherwise.
  std::string str() const;
};

std::string format_decimal(double v, int digits = 17);

}  // namespace idesign
