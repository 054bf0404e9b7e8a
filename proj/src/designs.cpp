#include "idesign/designs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <unordered_set>

namespace idesign {

Measure measure_of_design(const ExactDesign& d) {
  d.validate();
  std::vector<BlockArray> order;
  std::map<BlockArray, std::int64_t> count;
  for (const auto& s : d.blocks) {
    if (count[s]++ == 0) order.push_back(s);
  }
  Measure m{d.shape, {}};
  const auto n = static_cast<std::int64_t>(d.n());
  for (const auto& s : order) m.atoms.push_back({s, Number(Rational(count[s], n))});
  return m;
}

EfficiencyReport efficiencies_from_info(const Matrix<double>& c, double n, const Number& y_star) {
  if (!c.square() || c.rows() < 2) throw std::invalid_argument("efficiencies: need a t x t matrix with t >= 2");
  if (!(n > 0.0) || !(y_star.value > 0.0)) throw std::invalid_argument("efficiencies: n and y* must be positive");
  EfficiencyReport rep;
  rep.y_star = y_star;
  rep.n = n;
  std::vector<double> ev = symmetric_eigenvalues(c);
  const double trace = std::max(c.trace(), 0.0);
  const double zero = 1e-8 * std::max(trace, 1e-300);
  const auto null = std::min_element(ev.begin(), ev.end(), [](double x, double y) { return std::fabs(x) < std::fabs(y); });
  if (std::fabs(*null) > zero) rep.diagnostic = "smallest eigenvalue " + format_decimal(*null, 6) + " is not numerically zero";
  ev.erase(null);
  std::sort(ev.begin(), ev.end());
  rep.eigenvalues = ev;
  const double k = static_cast<double>(ev.size());
  const double scale = n * y_star.value;
  if (ev.front() <= zero) {
    rep.connected = false;
    rep.diagnostic = "design is disconnected: more than one zero eigenvalue";
    return rep;
  }
  double inv = 0.0, logs = 0.0, sum = 0.0;
  for (double v : ev) {
    inv += 1.0 / v;
    logs += std::log(v);
    sum += v;
  }
  rep.eff_a = k * k / (scale * inv);
  rep.eff_d = k / scale * std::exp(logs / k);
  rep.eff_e = k * ev.front() / scale;
  rep.eff_t = sum / scale;
  return rep;
}

EfficiencyReport efficiencies(const ExactDesign& d, const CovarianceSpec& sigma, const Number& y_star) {
  return efficiencies_from_info(info_matrix_exact(d, sigma).value, static_cast<double>(d.n()), y_star);
}

EfficiencyReport efficiencies(const Measure& xi, const CovarianceSpec& sigma, const Number& y_star) {
  return efficiencies_from_info(info_matrix_measure(xi, sigma).value, 1.0, y_star);
}

EfficiencyReport efficiencies(const SymmetricMeasure& xi, const CovarianceSpec& sigma, const Number& y_star) {
  return efficiencies_from_info(info_matrix_symmetric(xi, sigma).value, 1.0, y_star);
}

namespace {

std::uint64_t lcm_checked(std::uint64_t x, std::uint64_t y) {
  const std::uint64_t g = std::gcd(x, y);
  const unsigned __int128 r = static_cast<unsigned __int128>(x / g) * y;
  if (r > UINT64_MAX) throw std::overflow_error("min_n: least common multiple exceeds 64 bits");
  return static_cast<std::uint64_t>(r);
}

// Weight per member of each orbit.
std::vector<Rational> member_weights(const SymmetricMeasure& xi, bool& approximated) {
  std::vector<Rational> out;
  approximated = false;
  for (std::size_t k = 0; k < xi.orbits.size(); ++k) {
    Rational w;
    if (xi.weights[k].exact) {
      w = *xi.weights[k].exact;
    } else {
      w = approximate(xi.weights[k].value, 1'000'000);
      approximated = true;
    }
    const std::uint64_t size = orbit_size(xi.orbits[k]);
    if (size > static_cast<std::uint64_t>(INT64_MAX)) throw std::overflow_error("min_n: orbit too large");
    out.push_back(w / Rational(static_cast<std::int64_t>(size)));
  }
  return out;
}

}  // namespace

MinN min_n_symmetric(const SymmetricMeasure& xi) {
  xi.validate();
  MinN res;
  res.full = 1;
  for (const Rational& r : member_weights(xi, res.approximated)) {
    if (r.sign() == 0) continue;
    res.full = lcm_checked(res.full, static_cast<std::uint64_t>(r.den()));
  }
  if (xi.orbits.size() == 1) {
    const auto t = static_cast<std::uint64_t>(xi.shape.t);
    res.pseudo_symmetric = t * (t - 1);
  }
  return res;
}

ExactDesign expand_symmetric(const SymmetricMeasure& xi, std::uint64_t n) {
  xi.validate();
  if (n < 1) throw std::invalid_argument("expand_symmetric: n must be at least 1");
  bool approximated = false;
  const auto per = member_weights(xi, approximated);
  std::vector<std::int64_t> copies;
  for (const Rational& r : per) {
    const Rational c = r * Rational(static_cast<std::int64_t>(n));
    if (!c.is_integer()) {
      const auto m = min_n_symmetric(xi).full;
      throw Indivisible("expand_symmetric: n = " + std::to_string(n) + " does not divide evenly over the orbits; the least feasible n is " +
                            std::to_string(m),
                        m);
    }
    copies.push_back(c.num());
  }
  ExactDesign d{xi.shape, {}};
  for (std::size_t k = 0; k < xi.orbits.size(); ++k) {
    if (copies[k] == 0) continue;
    for (const auto& s : orbit_members(xi.orbits[k])) {
      for (std::int64_t c = 0; c < copies[k]; ++c) d.blocks.push_back(s);
    }
  }
  return d;
}

namespace {

std::vector<int> cyclic(int t, int shift, bool reflect) {
  std::vector<int> perm(static_cast<std::size_t>(t));
  for (int m = 1; m <= t; ++m) {
    const int base = reflect ? t - m : m - 1;
    perm[static_cast<std::size_t>(m - 1)] = (base + shift) % t + 1;
  }
  return perm;
}

// Largest-remainder apportionment of n over the weights; ties go to the
// earlier entry.
std::vector<std::uint64_t> apportion(const std::vector<double>& w, std::uint64_t n) {
  std::vector<std::uint64_t> out(w.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::uint64_t used = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double share = w[k] * static_cast<double>(n);
    out[k] = static_cast<std::uint64_t>(std::floor(share + 1e-9));
    used += out[k];
    rem.emplace_back(share - static_cast<double>(out[k]), k);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t k = 0; used < n; k = (k + 1) % rem.size(), ++used) ++out[rem[k].second];
  return out;
}

struct Evaluator {
  Matrix<double> target;

  double residual(const ArrayMatrices<double>& sums) const { return frobenius(schur_complement(sums) - target); }
};

}  // namespace

ConstructResult construct_exact(const Shape& shape, std::uint64_t n, const CovarianceSpec& sigma,
                                const SolveResult& solution, const Pool& candidates, const ConstructOptions& opts) {
  if (n < 1) throw std::invalid_argument("construct_exact: n must be at least 1");
  if (candidates.empty()) throw std::invalid_argument("construct_exact: empty candidate pool");
  if (!solution.measure || solution.measure->orbits.empty())
    throw std::invalid_argument("construct_exact: the solution carries no measure");
  if (!(solution.measure->shape == shape)) throw std::invalid_argument("construct_exact: solution shape mismatch");
  sigma.validate(shape.p());
  const int t = shape.t;
  const auto tt = static_cast<std::size_t>(t);
  const Matrix<double> bt = btilde(sigma, shape.p());

  // candidate blocks
  std::vector<BlockArray> cand;
  std::unordered_set<BlockArray, BlockArrayHash> seen;
  auto add = [&](const BlockArray& s) {
    if (seen.insert(s).second) cand.push_back(s);
  };
  std::vector<BlockArray> reps = solution.measure->orbits;
  for (const auto& e : candidates) reps.push_back(e.array);
  for (const auto& r : reps)
    for (int j = 0; j < t; ++j)
      for (bool refl : {false, true}) add(apply_permutation(r, cyclic(t, j, refl)));
  std::mt19937_64 rng(opts.seed);
  std::vector<int> perm(tt);
  std::iota(perm.begin(), perm.end(), 1);
  for (int k = 0; k < opts.effort; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, reps.size() - 1);
    const auto& r = reps[pick(rng)];
    std::shuffle(perm.begin(), perm.end(), rng);
    add(apply_permutation(r, perm));
  }
  std::vector<ArrayMatrices<double>> cm;
  cm.reserve(cand.size());
  for (const auto& s : cand) cm.push_back(array_matrices(s, bt));

  // rounded start
  std::vector<double> w;
  for (const auto& v : solution.measure->weights) w.push_back(v.value);
  const auto counts = apportion(w, n);
  ExactDesign d{shape, {}};
  for (std::size_t k = 0; k < counts.size(); ++k)
    for (std::uint64_t j = 0; j < counts[k]; ++j)
      d.blocks.push_back(apply_permutation(solution.measure->orbits[k], cyclic(t, static_cast<int>(j % tt), (j / tt) % 2 == 1)));

  std::vector<ArrayMatrices<double>> bm;
  ArrayMatrices<double> sums = zero_matrices<double>(tt);
  for (const auto& s : d.blocks) {
    bm.push_back(array_matrices(s, bt));
    sums += bm.back();
  }
  const double nd = static_cast<double>(n);
  Evaluator ev{Matrix<double>::centering(tt) * (nd * solution.y_star.value / static_cast<double>(t - 1))};
  double current = ev.residual(sums);

  ConstructResult res;
  for (int it = 0; it < opts.effort; ++it) {
    const double floor_tol = 1e-12 * std::max(1.0, nd * solution.y_star.value);
    if (current <= floor_tol) break;
    double best = current;
    double best_eff = -1.0;
    Matrix<double> best_info;
    std::size_t bi = 0, bc = 0;
    bool found = false;
    for (std::size_t i = 0; i < d.blocks.size(); ++i) {
      ArrayMatrices<double> base = sums;
      base.c00 -= bm[i].c00;
      base.c01 -= bm[i].c01;
      base.c11 -= bm[i].c11;
      for (std::size_t c = 0; c < cand.size(); ++c) {
        if (cand[c] == d.blocks[i]) continue;
        ArrayMatrices<double> trial = base;
        trial += cm[c];
        Matrix<double> info = schur_complement(trial);
        const double r = frobenius(info - ev.target);
        const double slack = 1e-12 * std::max(1.0, best);
        bool take = r < best - slack;
        double e = -1.0;
        if (!take && found && r <= best + slack) {
          // efficiency breaks near ties
          if (best_eff < 0.0) best_eff = efficiencies_from_info(best_info, nd, solution.y_star).eff_a;
          e = efficiencies_from_info(info, nd, solution.y_star).eff_a;
          take = e > best_eff + 1e-12;
        }
        if (take) {
          best = r;
          best_eff = e;
          best_info = std::move(info);
          bi = i;
          bc = c;
          found = true;
        }
      }
    }
    if (!found) break;
    sums.c00 -= bm[bi].c00;
    sums.c01 -= bm[bi].c01;
    sums.c11 -= bm[bi].c11;
    sums += cm[bc];
    bm[bi] = cm[bc];
    d.blocks[bi] = cand[bc];
    current = ev.residual(sums);
    ++res.swaps;
  }
  res.design = std::move(d);
  res.report = efficiencies(res.design, sigma, solution.y_star);
  res.residual = current;
  return res;
}

}  // namespace idesign
