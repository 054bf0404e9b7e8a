#pragma once

#include <optional>
#include <string>
#include <vector>

#include "idesign/arrays.hpp"
#include "idesign/matrix.hpp"
#include "idesign/number.hpp"
#include "idesign/rational.hpp"

namespace idesign {

/// Within-block covariance of the p plot responses (plot order = colex index).
class CovarianceSpec {
 public:
  enum class Kind { Identity, TypeH, General };

  static CovarianceSpec identity();
  /// x I_p + y 1' + 1 y'. y may be empty (taken as zero).
  static CovarianceSpec type_h(Number x, std::vector<double> y = {});
  static CovarianceSpec general(Matrix<double> sigma);

  Kind kind() const { return kind_; }
  /// True for Identity and TypeH, where B~ = B_p / x and the closed-form theory applies.
  bool closed_form() const { return kind_ != Kind::General; }
  /// 1 for Identity, x for TypeH; empty for General.
  std::optional<Number> scale() const;
  /// Exact scale when the covariance admits the rational path.
  std::optional<Rational> exact_scale() const;

  /// Throws std::invalid_argument unless the covariance is a valid p x p
  /// positive-definite matrix.
  void validate(int p) const;
  Matrix<double> dense(int p) const;
  /// The same covariance after the transposition that turns an a x b block
  /// (file orientation) into the internal b x a layout.
  CovarianceSpec transposed(int a, int b) const;

  std::string str() const;

 private:
  Kind kind_ = Kind::Identity;
  Number x_{Rational(1)};
  std::vector<double> y_;
  Matrix<double> sigma_;
};

/// Sigma^{-1} - Sigma^{-1} J Sigma^{-1} / (1' Sigma^{-1} 1).
Matrix<double> btilde(const CovarianceSpec& sigma, int p);
/// Exact B~ = B_p / x; empty unless the covariance has an exact scale.
std::optional<Matrix<Rational>> btilde_exact(const CovarianceSpec& sigma, int p);

/// Neighbour operator M with F = M T^0 (sum of the four shift incidences).
template <class T>
Matrix<T> neighbour_operator(const Shape& shape) {
  const auto a = static_cast<std::size_t>(shape.a);
  const auto b = static_cast<std::size_t>(shape.b);
  const Matrix<T> ka = Matrix<T>::shift(a);
  const Matrix<T> kb = Matrix<T>::shift(b);
  const Matrix<T> ia = Matrix<T>::identity(a);
  const Matrix<T> ib = Matrix<T>::identity(b);
  return kron(ib, ka) + kron(ib, ka.transpose()) + kron(kb, ia) + kron(kb.transpose(), ia);
}

template <class T>
struct IncidenceSet {
  Matrix<T> t0;
  std::array<Matrix<T>, 4> t;  ///< T^1 .. T^4
  Matrix<T> f;
};

template <class T>
IncidenceSet<T> incidence_matrices(const BlockArray& s) {
  const Shape& sh = s.shape();
  const auto p = static_cast<std::size_t>(sh.p());
  const auto a = static_cast<std::size_t>(sh.a);
  const auto b = static_cast<std::size_t>(sh.b);
  IncidenceSet<T> inc;
  inc.t0 = Matrix<T>(p, static_cast<std::size_t>(sh.t));
  for (std::size_t k = 0; k < p; ++k) inc.t0(k, static_cast<std::size_t>(s[k] - 1)) = T{1};
  const Matrix<T> ka = Matrix<T>::shift(a);
  const Matrix<T> kb = Matrix<T>::shift(b);
  inc.t[0] = kron(Matrix<T>::identity(b), ka) * inc.t0;
  inc.t[1] = kron(Matrix<T>::identity(b), ka.transpose()) * inc.t0;
  inc.t[2] = kron(kb, Matrix<T>::identity(a)) * inc.t0;
  inc.t[3] = kron(kb.transpose(), Matrix<T>::identity(a)) * inc.t0;
  inc.f = inc.t[0] + inc.t[1] + inc.t[2] + inc.t[3];
  return inc;
}

/// Coefficients of q(x) = c00 + 2 c01 x + c11 x^2.
template <class T>
struct Coefficients {
  T c00{};
  T c01{};
  T c11{};

  T operator()(const T& x) const { return c00 + T{2} * c01 * x + c11 * x * x; }
  Coefficients& operator+=(const Coefficients& o) {
    c00 += o.c00;
    c01 += o.c01;
    c11 += o.c11;
    return *this;
  }
  Coefficients scaled(const T& w) const { return {c00 * w, c01 * w, c11 * w}; }
  friend bool operator==(const Coefficients&, const Coefficients&) = default;
};

inline Coefficients<double> to_double(const Coefficients<Rational>& c) {
  return {c.c00.to_double(), c.c01.to_double(), c.c11.to_double()};
}

struct CoefficientTriple {
  enum class Provenance { ClosedForm, Trace };
  Coefficients<double> value;
  std::optional<Coefficients<Rational>> exact;
  Provenance provenance = Provenance::ClosedForm;
};

/// The shape constant eta in c11.
Rational eta(const Shape& shape);

/// Counting-statistic formulas for identity covariance; divide by x for type-H.
Coefficients<Rational> closed_coefficients(const BlockArray& s);
CoefficientTriple c_coeffs_closed(const BlockArray& s, const CovarianceSpec& sigma = CovarianceSpec::identity());

/// tr(B_t C_sij) from explicit matrix products. Exact whenever B~ is.
CoefficientTriple c_coeffs_trace(const BlockArray& s, const CovarianceSpec& sigma);
Coefficients<Rational> trace_coefficients(const BlockArray& s, const Matrix<Rational>& bt);
Coefficients<double> trace_coefficients(const BlockArray& s, const Matrix<double>& bt);

/// C_s00 = T0' B~ T0, C_s01 = T0' B~ F, C_s11 = F' B~ F.
template <class T>
struct ArrayMatrices {
  Matrix<T> c00, c01, c11;

  ArrayMatrices& operator+=(const ArrayMatrices& o) {
    c00 += o.c00;
    c01 += o.c01;
    c11 += o.c11;
    return *this;
  }
  ArrayMatrices& operator*=(const T& w) {
    c00 *= w;
    c01 *= w;
    c11 *= w;
    return *this;
  }
};

template <class T>
ArrayMatrices<T> array_matrices(const BlockArray& s, const Matrix<T>& bt) {
  const IncidenceSet<T> inc = incidence_matrices<T>(s);
  const Matrix<T> t0t = inc.t0.transpose();
  const Matrix<T> ft = inc.f.transpose();
  const Matrix<T> t0b = t0t * bt;
  const Matrix<T> fb = ft * bt;
  return {t0b * inc.t0, t0b * inc.f, fb * inc.f};
}

template <class T>
ArrayMatrices<T> zero_matrices(std::size_t t) {
  return {Matrix<T>(t, t), Matrix<T>(t, t), Matrix<T>(t, t)};
}

/// C00 - C01 C11^- C10.
Matrix<Rational> schur_complement(const ArrayMatrices<Rational>& m);
Matrix<double> schur_complement(const ArrayMatrices<double>& m);

/// Projection onto span{I, J}: the average of P' A P over all t x t
/// permutation matrices.
template <class T>
Matrix<T> symmetrize(const Matrix<T>& m) {
  const std::size_t t = m.rows();
  const T tt(static_cast<long>(t));
  const T total = m.sum();
  const T tr = m.trace();
  const T off = (total - tr) / (tt * (tt - T{1}));
  const T diag = tr / tt;
  Matrix<T> r(t, t, off);
  for (std::size_t i = 0; i < t; ++i) r(i, i) = diag;
  return r;
}

struct InfoMatrix {
  Matrix<double> value;
  std::optional<Matrix<Rational>> exact;
};

/// n blocks sharing one shape.
struct ExactDesign {
  Shape shape;
  std::vector<BlockArray> blocks;

  std::size_t n() const { return blocks.size(); }
  void validate() const;
};

/// Finitely supported probability weights over block arrays.
struct Measure {
  struct Atom {
    BlockArray array;
    Number weight;
  };
  Shape shape;
  std::vector<Atom> atoms;

  /// Throws std::invalid_argument on negative weights, a total away from 1
  /// (exactly 1 when every weight is rational) or a shape mismatch.
  void validate() const;
  bool exact() const;
};

Measure point_measure(const BlockArray& s);

/// Weights on symmetric block sets: orbit k receives total weight w_k, spread
/// evenly over its members.
struct SymmetricMeasure {
  Shape shape;
  std::vector<BlockArray> orbits;  ///< canonical representatives
  std::vector<Number> weights;

  void validate() const;
  bool exact() const;
  /// The explicit measure over all orbit members.
  Measure expand(std::uint64_t limit = 1'000'000) const;
};

/// C_xi for a symmetric measure, from the Reynolds projection of each
/// representative's matrices (no orbit expansion needed).
InfoMatrix info_matrix_symmetric(const SymmetricMeasure& xi, const CovarianceSpec& sigma);

/// Summed per-block matrices of a design; exact when the covariance allows.
ArrayMatrices<double> design_matrices(const ExactDesign& d, const Matrix<double>& bt);
ArrayMatrices<Rational> design_matrices(const ExactDesign& d, const Matrix<Rational>& bt);

InfoMatrix info_matrix_exact(const ExactDesign& d, const CovarianceSpec& sigma);
InfoMatrix info_matrix_measure(const Measure& xi, const CovarianceSpec& sigma);

}  // namespace idesign
