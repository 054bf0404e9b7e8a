#include "idesign/model.hpp"

#include <cmath>
#include <sstream>

namespace idesign {

CovarianceSpec CovarianceSpec::identity() { return CovarianceSpec{}; }

CovarianceSpec CovarianceSpec::type_h(Number x, std::vector<double> y) {
  if (!(x.value > 0.0)) throw std::invalid_argument("type-H covariance: x must be positive");
  CovarianceSpec c;
  c.kind_ = Kind::TypeH;
  c.x_ = x;
  c.y_ = std::move(y);
  return c;
}

CovarianceSpec CovarianceSpec::general(Matrix<double> sigma) {
  if (!sigma.square()) throw std::invalid_argument("covariance: matrix not square");
  CovarianceSpec c;
  c.kind_ = Kind::General;
  c.sigma_ = std::move(sigma);
  return c;
}

std::optional<Number> CovarianceSpec::scale() const {
  if (kind_ == Kind::General) return std::nullopt;
  return x_;
}

std::optional<Rational> CovarianceSpec::exact_scale() const {
  if (kind_ == Kind::General) return std::nullopt;
  return x_.exact;
}

Matrix<double> CovarianceSpec::dense(int p) const {
  const auto n = static_cast<std::size_t>(p);
  switch (kind_) {
    case Kind::Identity: return Matrix<double>::identity(n);
    case Kind::TypeH: {
      Matrix<double> m = Matrix<double>::identity(n) * x_.value;
      if (!y_.empty()) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) m(i, j) += y_[i] + y_[j];
      }
      return m;
    }
    case Kind::General: return sigma_;
  }
  return {};
}

CovarianceSpec CovarianceSpec::transposed(int a, int b) const {
  if (kind_ == Kind::Identity || (kind_ == Kind::TypeH && y_.empty())) return *this;
  const auto p = static_cast<std::size_t>(a * b);
  // internal plot (i, j) of the b x a block is plot (j, i) of the a x b block
  std::vector<std::size_t> from(p);
  for (int j = 0; j < a; ++j)
    for (int i = 0; i < b; ++i) from[static_cast<std::size_t>(j * b + i)] = static_cast<std::size_t>(i * a + j);
  CovarianceSpec c = *this;
  if (kind_ == Kind::TypeH) {
    if (y_.size() != p) throw std::invalid_argument("type-H covariance: y must have length p = " + std::to_string(p));
    for (std::size_t k = 0; k < p; ++k) c.y_[k] = y_[from[k]];
    return c;
  }
  if (sigma_.rows() != p) throw std::invalid_argument("covariance: expected a " + std::to_string(p) + " x " + std::to_string(p) + " matrix");
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t l = 0; l < p; ++l) c.sigma_(k, l) = sigma_(from[k], from[l]);
  return c;
}

void CovarianceSpec::validate(int p) const {
  const auto n = static_cast<std::size_t>(p);
  if (kind_ == Kind::TypeH && !y_.empty() && y_.size() != n) {
    throw std::invalid_argument("type-H covariance: y must have length p = " + std::to_string(p));
  }
  if (kind_ == Kind::General) {
    if (sigma_.rows() != n) {
      throw std::invalid_argument("covariance: expected a " + std::to_string(p) + " x " + std::to_string(p) +
                                  " matrix");
    }
    const double scale = std::max(1.0, max_abs(sigma_));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::fabs(sigma_(i, j) - sigma_(j, i)) > 1e-12 * scale) {
          throw std::invalid_argument("covariance: matrix not symmetric");
        }
  }
  if (kind_ == Kind::Identity) return;
  const auto ev = symmetric_eigenvalues(dense(p));
  if (ev.front() <= 0.0) throw std::invalid_argument("covariance: not positive definite");
}

std::string CovarianceSpec::str() const {
  switch (kind_) {
    case Kind::Identity: return "identity";
    case Kind::TypeH: return "type-h(x=" + x_.str() + ")";
    case Kind::General: return "general(" + std::to_string(sigma_.rows()) + "x" + std::to_string(sigma_.cols()) + ")";
  }
  return "?";
}

Matrix<double> btilde(const CovarianceSpec& sigma, int p) {
  sigma.validate(p);
  const auto n = static_cast<std::size_t>(p);
  if (sigma.closed_form()) return Matrix<double>::centering(n) * (1.0 / sigma.scale()->value);
  const Matrix<double> inv = spd_inverse(sigma.dense(p));
  std::vector<double> r(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) r[i] += inv(i, j);
    total += r[i];
  }
  Matrix<double> bt = inv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) bt(i, j) -= r[i] * r[j] / total;
  return bt;
}

std::optional<Matrix<Rational>> btilde_exact(const CovarianceSpec& sigma, int p) {
  const auto x = sigma.exact_scale();
  if (!x) return std::nullopt;
  sigma.validate(p);
  return Matrix<Rational>::centering(static_cast<std::size_t>(p)) * (Rational(1) / *x);
}

Rational eta(const Shape& sh) {
  const long a = sh.a, b = sh.b, t = sh.t, p = sh.p();
  return Rational(4 * p - 2 * a - 2 * b) - Rational(2 * (8 * a * b - 7 * a - 7 * b + 4), t) +
         Rational(4 * (2 * p - a - b) * (2 * p - a - b), p * t);
}

Coefficients<Rational> closed_coefficients(const BlockArray& s) {
  const CountStatistics st = count_statistics(s);
  const long p = s.shape().p();
  Coefficients<Rational> c;
  c.c00 = Rational(p) - Rational(st.h[0][0], p);
  c.c01 = Rational(st.z1) - Rational(st.h1, p);
  c.c11 = eta(s.shape()) + Rational(st.z2) - Rational(st.h2, p) - Rational(2 * st.h3, p);
  return c;
}

namespace {

CoefficientTriple make_triple(const Coefficients<Rational>& c, CoefficientTriple::Provenance prov) {
  return {to_double(c), c, prov};
}

template <class T>
Coefficients<T> traces(const ArrayMatrices<T>& m) {
  const std::size_t t = m.c00.rows();
  const Matrix<T> bt = Matrix<T>::centering(t);
  return {trace_product(bt, m.c00), trace_product(bt, m.c01), trace_product(bt * m.c11, bt)};
}

}  // namespace

CoefficientTriple c_coeffs_closed(const BlockArray& s, const CovarianceSpec& sigma) {
  const auto x = sigma.scale();
  if (!x) throw std::invalid_argument("closed-form coefficients require identity or type-H covariance");
  const Coefficients<Rational> c = closed_coefficients(s);
  if (x->exact) return make_triple(c.scaled(Rational(1) / *x->exact), CoefficientTriple::Provenance::ClosedForm);
  CoefficientTriple r;
  r.value = to_double(c).scaled(1.0 / x->value);
  r.provenance = CoefficientTriple::Provenance::ClosedForm;
  return r;
}

Coefficients<Rational> trace_coefficients(const BlockArray& s, const Matrix<Rational>& bt) {
  return traces(array_matrices(s, bt));
}

Coefficients<double> trace_coefficients(const BlockArray& s, const Matrix<double>& bt) {
  return traces(array_matrices(s, bt));
}

CoefficientTriple c_coeffs_trace(const BlockArray& s, const CovarianceSpec& sigma) {
  const int p = s.shape().p();
  if (const auto bt = btilde_exact(sigma, p)) {
    return make_triple(trace_coefficients(s, *bt), CoefficientTriple::Provenance::Trace);
  }
  CoefficientTriple r;
  r.value = trace_coefficients(s, btilde(sigma, p));
  r.provenance = CoefficientTriple::Provenance::Trace;
  return r;
}

Matrix<Rational> schur_complement(const ArrayMatrices<Rational>& m) {
  return m.c00 - m.c01 * psd_ginverse(m.c11) * m.c01.transpose();
}

Matrix<double> schur_complement(const ArrayMatrices<double>& m) {
  Matrix<double> c = m.c00 - m.c01 * symmetric_pinv(m.c11) * m.c01.transpose();
  // symmetrise away rounding
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = i + 1; j < c.cols(); ++j) c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));
  return c;
}

void ExactDesign::validate() const {
  if (blocks.empty()) throw std::invalid_argument("design: no blocks");
  for (const auto& s : blocks) {
    if (!(s.shape() == shape)) throw std::invalid_argument("design: block shape " + s.shape().str() +
                                                           " differs from design shape " + shape.str());
  }
}

void Measure::validate() const {
  if (atoms.empty()) throw std::invalid_argument("measure: no atoms");
  Rational exact_total;
  double total = 0.0;
  for (const auto& at : atoms) {
    if (!(at.array.shape() == shape)) throw std::invalid_argument("measure: atom shape mismatch");
    if (at.weight.value < 0.0) throw std::invalid_argument("measure: negative weight");
    total += at.weight.value;
    if (at.weight.exact) exact_total += *at.weight.exact;
  }
  if (exact()) {
    if (exact_total != Rational(1)) throw std::invalid_argument("measure: weights sum to " + exact_total.str());
  } else if (std::fabs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("measure: weights sum to " + format_decimal(total));
  }
}

bool Measure::exact() const {
  for (const auto& at : atoms)
    if (!at.weight.exact) return false;
  return true;
}

Measure point_measure(const BlockArray& s) { return Measure{s.shape(), {{s, Number(Rational(1))}}}; }

namespace {

template <class T>
ArrayMatrices<T> sum_blocks(const ExactDesign& d, const Matrix<T>& bt) {
  auto total = zero_matrices<T>(static_cast<std::size_t>(d.shape.t));
  for (const auto& s : d.blocks) total += array_matrices(s, bt);
  return total;
}

template <class T>
ArrayMatrices<T> weighted_sum(const Measure& xi, const Matrix<T>& bt) {
  auto total = zero_matrices<T>(static_cast<std::size_t>(xi.shape.t));
  for (const auto& at : xi.atoms) {
    auto m = array_matrices(at.array, bt);
    if constexpr (std::is_same_v<T, Rational>) {
      m *= *at.weight.exact;
    } else {
      m *= at.weight.value;
    }
    total += m;
  }
  return total;
}

InfoMatrix from_exact(const Matrix<Rational>& c) { return {c.cast<double>(), c}; }

template <class T>
ArrayMatrices<T> reynolds_sum(const SymmetricMeasure& xi, const Matrix<T>& bt) {
  auto total = zero_matrices<T>(static_cast<std::size_t>(xi.shape.t));
  for (std::size_t k = 0; k < xi.orbits.size(); ++k) {
    auto m = array_matrices(xi.orbits[k], bt);
    if constexpr (std::is_same_v<T, Rational>) {
      m *= *xi.weights[k].exact;
    } else {
      m *= xi.weights[k].value;
    }
    total += m;
  }
  return {symmetrize(total.c00), symmetrize(total.c01), symmetrize(total.c11)};
}

}  // namespace

void SymmetricMeasure::validate() const {
  if (orbits.empty() || orbits.size() != weights.size()) {
    throw std::invalid_argument("symmetric measure: need one weight per orbit");
  }
  Measure flat{shape, {}};
  for (std::size_t k = 0; k < orbits.size(); ++k) flat.atoms.push_back({orbits[k], weights[k]});
  flat.validate();
}

bool SymmetricMeasure::exact() const {
  for (const auto& w : weights)
    if (!w.exact) return false;
  return true;
}

Measure SymmetricMeasure::expand(std::uint64_t limit) const {
  validate();
  Measure out{shape, {}};
  for (std::size_t k = 0; k < orbits.size(); ++k) {
    const auto members = orbit_members(orbits[k], limit);
    const auto size = static_cast<std::int64_t>(members.size());
    Number w = weights[k].exact ? Number(*weights[k].exact / Rational(size))
                                : Number::approx(weights[k].value / static_cast<double>(size));
    for (const auto& m : members) out.atoms.push_back({m, w});
  }
  return out;
}

InfoMatrix info_matrix_symmetric(const SymmetricMeasure& xi, const CovarianceSpec& sigma) {
  xi.validate();
  const int p = xi.shape.p();
  if (xi.exact()) {
    if (const auto bt = btilde_exact(sigma, p)) {
      try {
        return from_exact(schur_complement(reynolds_sum(xi, *bt)));
      } catch (const std::overflow_error&) {
      }
    }
  }
  return {schur_complement(reynolds_sum(xi, btilde(sigma, p))), std::nullopt};
}

ArrayMatrices<double> design_matrices(const ExactDesign& d, const Matrix<double>& bt) { return sum_blocks(d, bt); }
ArrayMatrices<Rational> design_matrices(const ExactDesign& d, const Matrix<Rational>& bt) {
  return sum_blocks(d, bt);
}

InfoMatrix info_matrix_exact(const ExactDesign& d, const CovarianceSpec& sigma) {
  d.validate();
  const int p = d.shape.p();
  if (const auto bt = btilde_exact(sigma, p)) {
    try {
      return from_exact(schur_complement(sum_blocks(d, *bt)));
    } catch (const std::overflow_error&) {
      // fall through to floating point
    }
  }
  return {schur_complement(sum_blocks(d, btilde(sigma, p))), std::nullopt};
}

InfoMatrix info_matrix_measure(const Measure& xi, const CovarianceSpec& sigma) {
  xi.validate();
  const int p = xi.shape.p();
  if (xi.exact()) {
    if (const auto bt = btilde_exact(sigma, p)) {
      try {
        return from_exact(schur_complement(weighted_sum(xi, *bt)));
      } catch (const std::overflow_error&) {
      }
    }
  }
  return {schur_complement(weighted_sum(xi, btilde(sigma, p))), std::nullopt};
}

}  // namespace idesign
