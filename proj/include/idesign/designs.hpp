#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "idesign/model.hpp"
#include "idesign/number.hpp"
#include "idesign/optimality.hpp"

namespace idesign {

/// Empirical measure of a design: weight n_s / n on every distinct array,
/// listed in order of first appearance.
Measure measure_of_design(const ExactDesign& d);

struct EfficiencyReport {
  double eff_a = 0.0;
  double eff_d = 0.0;
  double eff_e = 0.0;
  double eff_t = 0.0;
  std::vector<double> eigenvalues;  ///< the t - 1 retained eigenvalues, ascending
  Number y_star;
  double n = 0.0;
  bool connected = true;
  std::string diagnostic;
};

/// Efficiencies of an information matrix C relative to n y* B_t / (t - 1).
/// The eigenvalue of smallest magnitude (the 1_t direction) is discarded; a
/// second near-zero eigenvalue marks the design disconnected and every
/// efficiency is reported as 0.
EfficiencyReport efficiencies_from_info(const Matrix<double>& c, double n, const Number& y_star);
EfficiencyReport efficiencies(const ExactDesign& d, const CovarianceSpec& sigma, const Number& y_star);
/// Per-block efficiencies of an approximate design (n = 1).
EfficiencyReport efficiencies(const Measure& xi, const CovarianceSpec& sigma, const Number& y_star);
EfficiencyReport efficiencies(const SymmetricMeasure& xi, const CovarianceSpec& sigma, const Number& y_star);

class Indivisible : public std::runtime_error {
 public:
  Indivisible(const std::string& what, std::uint64_t min_n) : std::runtime_error(what), min_n_(min_n) {}
  std::uint64_t min_n() const { return min_n_; }

 private:
  std::uint64_t min_n_;
};

struct MinN {
  std::uint64_t full = 0;  ///< least n with every n w_k / |orbit_k| integral
  /// t (t - 1) for a single-orbit measure (pseudo-symmetric construction).
  std::optional<std::uint64_t> pseudo_symmetric;
  /// Some weight had no exact value and was replaced by its nearest rational
  /// with denominator at most 10^6.
  bool approximated = false;
};

/// Throws std::overflow_error when the lcm leaves 64 bits.
MinN min_n_symmetric(const SymmetricMeasure& xi);

/// n w_k / |orbit_k| copies of every member of orbit k, orbits in the order
/// given and members in colex order. Throws Indivisible with the least
/// feasible n when the counts are not integral.
ExactDesign expand_symmetric(const SymmetricMeasure& xi, std::uint64_t n);

struct ConstructOptions {
  std::uint64_t seed = 1;
  int effort = 200;  ///< maximum number of accepted swaps
};

struct ConstructResult {
  ExactDesign design;
  EfficiencyReport report;
  double residual = 0.0;  ///< ||C_d - n y* B_t/(t-1)||_F
  int swaps = 0;
};

/// Rounds n times the solver's measure to whole blocks (largest remainder),
/// spreads each orbit's blocks over cyclic relabellings and then applies the
/// best single-block replacement from the candidate relabellings while it
/// lowers the residual (efficiency breaks ties). Candidates are cyclic and
/// reflected-cyclic relabellings of every pool entry, plus `effort` random
/// relabellings drawn from `seed`. Deterministic given seed and effort.
ConstructResult construct_exact(const Shape& shape, std::uint64_t n, const CovarianceSpec& sigma,
                                const SolveResult& solution, const Pool& candidates,
                                const ConstructOptions& opts = {});

}  // namespace idesign
