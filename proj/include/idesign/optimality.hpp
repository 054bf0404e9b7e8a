#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idesign/arrays.hpp"
#include "idesign/model.hpp"
#include "idesign/number.hpp"

namespace idesign {

enum class Regime {
  SmallT,         ///< t <= p - 2
  PMinusOneA3,    ///< t = p - 1, a >= 3
  PMinusOneA2,    ///< t = p - 1, a = 2, b >= 3
  PMinusOneA2B2,  ///< t = p - 1, a = b = 2
  LargeTA3,       ///< t >= p, a >= 3
  LargeTA2,       ///< t >= p, a = 2, b >= 3
  LargeTA2B2,     ///< t >= p, a = b = 2
  Computational,
};

std::string to_string(Regime r);
Regime classify_regime(const Shape& shape);

/// A union of Q-sets, tested through classify_array.
struct SupportDescriptor {
  std::vector<QSet> sets;

  bool contains(const ArrayClassification& c) const;
  bool contains(const BlockArray& s) const { return contains(classify_array(s)); }
  std::string str() const;
};

/// One orbit in a candidate pool with its (orbit-invariant) coefficients.
struct PoolEntry {
  BlockArray array;  ///< canonical representative
  std::uint64_t orbit_size = 0;  ///< 0 when above 64 bits
  Coefficients<double> c;
  std::optional<Coefficients<Rational>> exact;
};

/// Orbit-level candidate pool, sorted by canonical order and free of duplicates.
using Pool = std::vector<PoolEntry>;

CoefficientTriple coefficients_for(const BlockArray& s, const CovarianceSpec& sigma);

/// Canonicalises, deduplicates, sorts and attaches coefficients.
Pool make_pool(const std::vector<BlockArray>& arrays, const CovarianceSpec& sigma);
/// Every orbit of the shape. Throws BudgetExceeded when too many.
Pool full_pool(const Shape& shape, const CovarianceSpec& sigma, std::uint64_t budget = kDefaultOrbitBudget);
/// All orbits of the given Q-sets that can be built from corner doubles
/// (complete for Q_0..Q_4, Q1*, Q2*), together with structured and random
/// replication-balanced arrays when the descriptor asks for Q*.
Pool constructive_pool(const Shape& shape, const CovarianceSpec& sigma, const SupportDescriptor& q,
                       std::uint64_t seed = 1, int balanced_samples = 256);
/// Uniform random arrays.
Pool random_pool(const Shape& shape, const CovarianceSpec& sigma, int count, std::uint64_t seed);

template <class T>
T q_eval(const Coefficients<T>& c, const T& x) {
  return c(x);
}

struct QStar {
  Number q_star;
  Number x_tilde;
};

/// q* = c00 - c01^2 / c11 and its minimiser. A zero c11 (possible only on 2 x 2
/// blocks, where it forces c01 = 0) gives q* = c00 and x~ = 0.
QStar q_star(const Coefficients<Rational>& c);
QStar q_star(const Coefficients<double>& c);
QStar q_star(const Measure& xi, const CovarianceSpec& sigma);
QStar q_star(const SymmetricMeasure& xi, const CovarianceSpec& sigma);

struct SolveResult {
  Shape shape;
  Number x_star;
  Number y_star;
  Regime regime = Regime::Computational;
  /// t = p - 1 only: the minimax point sits at the crossing of Q_0/Q_1/Q_2
  /// quadratics rather than at the Q_1 vertex.
  bool crossing_branch = false;
  SupportDescriptor support;            ///< symbolic, closed-form regimes
  std::vector<BlockArray> support_arrays;  ///< explicit, computational path
  std::optional<SymmetricMeasure> measure;
  double gap = 0.0;
  bool converged = true;
  int iterations = 0;
};

/// Theorems for identity / type-H covariance. Throws std::invalid_argument for
/// a general covariance.
SolveResult solve_closed_form(const Shape& shape, const CovarianceSpec& sigma = CovarianceSpec::identity());

struct REval {
  double value = 0.0;
  std::size_t index = 0;
};

/// max over the pool of q_s(x); ties go to the lowest canonical array.
REval r_eval(double x, const Pool& pool);

/// min over x of max_i q_i(x) for a small set of quadratics, by checking
/// every vertex and pairwise crossing. Ties resolve to the smaller x.
struct EnvelopeMinimum {
  double x = 0.0;
  double y = 0.0;
};
EnvelopeMinimum envelope_minimum(std::span<const Coefficients<double>> qs);

struct ExchangeOptions {
  std::uint64_t seed = 1;
  double tol = 1e-9;  ///< relative gap tolerance
  int max_iter = 10000;
  int start_atoms = 8;
};

/// Fedorov-type exchange on orbit weights: the pool entry with the largest
/// q_s(x~) enters with an exact line-search step, then the weights are
/// re-optimised on the current support.
SolveResult solve_exchange(const Shape& shape, const CovarianceSpec& sigma, const Pool& pool,
                           const ExchangeOptions& opts = {},
                           const std::optional<SymmetricMeasure>& start = std::nullopt);

/// Indices of pool entries with |q_s(x*) - y*| <= tol * max(1, |y*|).
std::vector<std::size_t> support_set(const Pool& pool, double x_star, double y_star, double tol = 1e-9);

class InfeasibleProportions : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProportionResult {
  std::vector<Number> weights;
  Number residual;  ///< sum_k w_k (c01_k + x* c11_k)
};

/// A basic feasible solution of sum w_k (c01_k + x* c11_k) = 0 on the simplex:
/// a single orbit whose term vanishes, otherwise the first negative/positive
/// pair. Exact when x* and every triple are.
ProportionResult solve_sbs_proportions(std::span<const PoolEntry> orbits, const Number& x_star);
ProportionResult solve_sbs_proportions(const std::vector<BlockArray>& orbits, const Number& x_star,
                                       const CovarianceSpec& sigma);

struct VerificationReport {
  double residual_eq10 = 0.0;  ///< max |sum p_s (C_s00 + x* C_s01 B_t) - y* B_t/(t-1)|
  double residual_eq11 = 0.0;  ///< max |sum p_s (C_s10 + x* C_s11 B_t)|
  double support_violation = 0.0;  ///< weight on arrays with q_s(x*) != y*
  double info_residual = 0.0;      ///< max |C_xi - y* B_t/(t-1)|
  bool exact = false;              ///< all residuals computed in rational arithmetic
  bool optimal = false;
};

VerificationReport verify_measure(const Measure& xi, const CovarianceSpec& sigma, const Number& x_star,
                                  const Number& y_star, double tol = 1e-9);
/// The same conditions for a symmetric measure, through the Reynolds projection.
VerificationReport verify_measure(const SymmetricMeasure& xi, const CovarianceSpec& sigma, const Number& x_star,
                                  const Number& y_star, double tol = 1e-9);

/// max over the pool of q_s(x~) minus q*_xi.
double equivalence_gap(const Coefficients<double>& aggregate, const Pool& pool);
double equivalence_gap(const Measure& xi, const Pool& pool, const CovarianceSpec& sigma);
double equivalence_gap(const SymmetricMeasure& xi, const Pool& pool, const CovarianceSpec& sigma);

}  // namespace idesign
