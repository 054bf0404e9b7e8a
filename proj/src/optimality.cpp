#include "idesign/optimality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace idesign {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::SmallT: return "t<=p-2";
    case Regime::PMinusOneA3: return "t=p-1, a>=3";
    case Regime::PMinusOneA2: return "t=p-1, a=2, b>=3";
    case Regime::PMinusOneA2B2: return "t=p-1, a=b=2";
    case Regime::LargeTA3: return "t>=p, a>=3";
    case Regime::LargeTA2: return "t>=p, a=2, b>=3";
    case Regime::LargeTA2B2: return "t>=p, a=b=2";
    case Regime::Computational: return "computational";
  }
  return "?";
}

Regime classify_regime(const Shape& sh) {
  sh.validate();
  const int p = sh.p();
  if (sh.t <= p - 2) return Regime::SmallT;
  if (sh.t == p - 1) {
    if (sh.a >= 3) return Regime::PMinusOneA3;
    return sh.b >= 3 ? Regime::PMinusOneA2 : Regime::PMinusOneA2B2;
  }
  if (sh.a >= 3) return Regime::LargeTA3;
  return sh.b >= 3 ? Regime::LargeTA2 : Regime::LargeTA2B2;
}

bool SupportDescriptor::contains(const ArrayClassification& c) const {
  return std::any_of(sets.begin(), sets.end(), [&](QSet q) { return c.member(q); });
}

std::string SupportDescriptor::str() const {
  if (sets.empty()) return "{}";
  std::string out;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (k) out += " u ";
    out += to_string(sets[k]);
  }
  return out;
}

CoefficientTriple coefficients_for(const BlockArray& s, const CovarianceSpec& sigma) {
  return sigma.closed_form() ? c_coeffs_closed(s, sigma) : c_coeffs_trace(s, sigma);
}

namespace {

PoolEntry make_entry(const BlockArray& rep, const CovarianceSpec& sigma, const Matrix<double>* bt) {
  PoolEntry e;
  e.array = rep;
  e.orbit_size = orbit_size_if_fits(rep).value_or(0);
  if (sigma.closed_form()) {
    const auto c = c_coeffs_closed(rep, sigma);
    e.c = c.value;
    e.exact = c.exact;
  } else {
    e.c = trace_coefficients(rep, *bt);
  }
  return e;
}

Pool pool_from_reps(std::vector<BlockArray> reps, const CovarianceSpec& sigma) {
  std::sort(reps.begin(), reps.end());
  reps.erase(std::unique(reps.begin(), reps.end()), reps.end());
  if (reps.empty()) return {};
  std::optional<Matrix<double>> bt;
  if (!sigma.closed_form()) bt = btilde(sigma, reps.front().shape().p());
  Pool pool;
  pool.reserve(reps.size());
  for (const auto& r : reps) pool.push_back(make_entry(r, sigma, bt ? &*bt : nullptr));
  return pool;
}

}  // namespace

Pool make_pool(const std::vector<BlockArray>& arrays, const CovarianceSpec& sigma) {
  std::vector<BlockArray> reps;
  reps.reserve(arrays.size());
  for (const auto& s : arrays) reps.push_back(canonical_form(s));
  return pool_from_reps(std::move(reps), sigma);
}

Pool full_pool(const Shape& shape, const CovarianceSpec& sigma, std::uint64_t budget) {
  shape.validate();
  sigma.validate(shape.p());
  std::optional<Matrix<double>> bt;
  if (!sigma.closed_form()) bt = btilde(sigma, shape.p());
  Pool pool;
  for_each_orbit(
      shape, [&](const Orbit& o) { pool.push_back(make_entry(o.representative, sigma, bt ? &*bt : nullptr)); },
      budget);
  return pool;
}

namespace {

// Orthogonally adjacent plot pairs with at least one corner, as colex index pairs.
std::vector<std::pair<int, int>> corner_pairs(const Shape& sh) {
  std::set<std::pair<int, int>> out;
  for (int i : {0, sh.a - 1})
    for (int j : {0, sh.b - 1}) {
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& n : nb) {
        if (n[0] < 0 || n[0] >= sh.a || n[1] < 0 || n[1] >= sh.b) continue;
        const int u = j * sh.a + i;
        const int v = n[1] * sh.a + n[0];
        out.emplace(std::min(u, v), std::max(u, v));
      }
    }
  return {out.begin(), out.end()};
}

void doubles_arrays(const Shape& sh, int count, std::vector<BlockArray>& out) {
  const int p = sh.p();
  if (p - count > sh.t) return;
  const auto pairs = corner_pairs(sh);
  std::vector<int> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (static_cast<int>(chosen.size()) == count) {
      std::vector<int> labels(static_cast<std::size_t>(p), 0);
      int next = 0;
      for (int k : chosen) {
        ++next;
        labels[static_cast<std::size_t>(pairs[static_cast<std::size_t>(k)].first)] = next;
        labels[static_cast<std::size_t>(pairs[static_cast<std::size_t>(k)].second)] = next;
      }
      for (auto& v : labels)
        if (v == 0) v = ++next;
      out.push_back(canonical_form(BlockArray(sh, labels)));
      return;
    }
    for (std::size_t k = from; k < pairs.size(); ++k) {
      const auto [u, v] = pairs[k];
      bool clash = false;
      for (int c : chosen) {
        const auto [x, y] = pairs[static_cast<std::size_t>(c)];
        if (u == x || u == y || v == x || v == y) clash = true;
      }
      if (clash) continue;
      chosen.push_back(static_cast<int>(k));
      rec(k + 1);
      chosen.pop_back();
    }
  };
  rec(0);
}

void balanced_arrays(const Shape& sh, std::uint64_t seed, int samples, std::vector<BlockArray>& out) {
  const int p = sh.p();
  const int t = sh.t;
  auto add = [&](std::vector<int> labels) {
    BlockArray s(sh, std::move(labels));
    if (classify_array(s).balanced) out.push_back(canonical_form(s));
  };
  std::vector<int> v(static_cast<std::size_t>(p));
  // cyclic and sorted fills along both scan orders, and diagonal patterns
  for (int k = 0; k < p; ++k) v[static_cast<std::size_t>(k)] = k % t + 1;
  add(v);
  for (int k = 0; k < p; ++k) v[static_cast<std::size_t>(k)] = static_cast<int>(static_cast<long>(k) * t / p) + 1;
  add(v);
  for (int i = 0; i < sh.a; ++i)
    for (int j = 0; j < sh.b; ++j) {
      const int r = i * sh.b + j;
      v[static_cast<std::size_t>(j * sh.a + i)] = r % t + 1;
    }
  add(v);
  for (int i = 0; i < sh.a; ++i)
    for (int j = 0; j < sh.b; ++j) {
      const int r = i * sh.b + j;
      v[static_cast<std::size_t>(j * sh.a + i)] = static_cast<int>(static_cast<long>(r) * t / p) + 1;
    }
  add(v);
  for (int step = 1; step < t; ++step)
    for (int i = 0; i < sh.a; ++i)
      for (int j = 0; j < sh.b; ++j) v[static_cast<std::size_t>(j * sh.a + i)] = (i * step + j) % t + 1;
  add(v);
  std::mt19937_64 rng(seed);
  std::vector<int> base(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) base[static_cast<std::size_t>(k)] = k % t + 1;
  for (int k = 0; k < samples; ++k) {
    std::shuffle(base.begin(), base.end(), rng);
    add(base);
  }
}

}  // namespace

Pool constructive_pool(const Shape& shape, const CovarianceSpec& sigma, const SupportDescriptor& q,
                       std::uint64_t seed, int balanced_samples) {
  shape.validate();
  std::vector<BlockArray> reps;
  std::set<int> counts;
  bool balanced = false;
  for (QSet s : q.sets) {
    switch (s) {
      case QSet::Q0: counts.insert(0); break;
      case QSet::Q1:
      case QSet::Q1Star: counts.insert(1); break;
      case QSet::Q2:
      case QSet::Q2Star: counts.insert(2); break;
      case QSet::Q3: counts.insert(3); break;
      case QSet::Q4: counts.insert(4); break;
      case QSet::Balanced: balanced = true; break;
    }
  }
  for (int c : counts) doubles_arrays(shape, c, reps);
  if (balanced) balanced_arrays(shape, seed, balanced_samples, reps);
  std::vector<BlockArray> kept;
  for (auto& r : reps)
    if (q.contains(r)) kept.push_back(std::move(r));
  return pool_from_reps(std::move(kept), sigma);
}

Pool random_pool(const Shape& shape, const CovarianceSpec& sigma, int count, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(1, shape.t);
  std::vector<BlockArray> reps;
  for (int k = 0; k < count; ++k) {
    std::vector<int> v(static_cast<std::size_t>(shape.p()));
    for (auto& x : v) x = d(rng);
    reps.push_back(canonical_form(BlockArray(shape, std::move(v))));
  }
  return pool_from_reps(std::move(reps), sigma);
}

QStar q_star(const Coefficients<Rational>& c) {
  if (c.c11.sign() == 0) return {Number(c.c00), Number(Rational(0))};
  return {Number(c.c00 - c.c01 * c.c01 / c.c11), Number(-c.c01 / c.c11)};
}

QStar q_star(const Coefficients<double>& c) {
  if (c.c11 <= 1e-12 * std::max({1.0, std::fabs(c.c00), std::fabs(c.c01)}))
    return {Number::approx(c.c00), Number::approx(0.0)};
  return {Number::approx(c.c00 - c.c01 * c.c01 / c.c11), Number::approx(-c.c01 / c.c11)};
}

namespace {

struct Aggregate {
  Coefficients<double> value;
  std::optional<Coefficients<Rational>> exact;
};

template <class Atoms>
Aggregate aggregate(const Atoms& atoms, const CovarianceSpec& sigma) {
  Aggregate agg;
  agg.exact = Coefficients<Rational>{};
  for (const auto& [array, weight] : atoms) {
    const auto c = coefficients_for(array, sigma);
    agg.value += c.value.scaled(weight.value);
    if (agg.exact && c.exact && weight.exact) {
      try {
        *agg.exact += c.exact->scaled(*weight.exact);
      } catch (const std::overflow_error&) {
        agg.exact.reset();
      }
    } else {
      agg.exact.reset();
    }
  }
  return agg;
}

std::vector<std::pair<BlockArray, Number>> atoms_of(const Measure& xi) {
  std::vector<std::pair<BlockArray, Number>> out;
  for (const auto& a : xi.atoms) out.emplace_back(a.array, a.weight);
  return out;
}

std::vector<std::pair<BlockArray, Number>> atoms_of(const SymmetricMeasure& xi) {
  std::vector<std::pair<BlockArray, Number>> out;
  for (std::size_t k = 0; k < xi.orbits.size(); ++k) out.emplace_back(xi.orbits[k], xi.weights[k]);
  return out;
}

QStar q_star_of(const Aggregate& agg) {
  if (agg.exact) return q_star(*agg.exact);
  return q_star(agg.value);
}

}  // namespace

QStar q_star(const Measure& xi, const CovarianceSpec& sigma) {
  xi.validate();
  return q_star_of(aggregate(atoms_of(xi), sigma));
}

QStar q_star(const SymmetricMeasure& xi, const CovarianceSpec& sigma) {
  xi.validate();
  return q_star_of(aggregate(atoms_of(xi), sigma));
}

REval r_eval(double x, const Pool& pool) {
  if (pool.empty()) throw std::invalid_argument("r_eval: empty pool");
  REval best{pool[0].c(x), 0};
  for (std::size_t k = 1; k < pool.size(); ++k) {
    const double v = pool[k].c(x);
    if (v > best.value + 1e-14 * std::max(1.0, std::fabs(best.value))) best = {v, k};
  }
  return best;
}

EnvelopeMinimum envelope_minimum(std::span<const Coefficients<double>> qs) {
  if (qs.empty()) throw std::invalid_argument("envelope_minimum: no quadratics");
  std::vector<double> cand{0.0};
  for (const auto& q : qs)
    if (q.c11 > 0.0) cand.push_back(-q.c01 / q.c11);
  for (std::size_t i = 0; i < qs.size(); ++i)
    for (std::size_t j = i + 1; j < qs.size(); ++j) {
      const double A = qs[i].c11 - qs[j].c11;
      const double B = 2.0 * (qs[i].c01 - qs[j].c01);
      const double C = qs[i].c00 - qs[j].c00;
      const double scale = std::max({std::fabs(qs[i].c11), std::fabs(qs[j].c11), 1.0});
      if (std::fabs(A) <= 1e-15 * scale) {
        if (B != 0.0) cand.push_back(-C / B);
        continue;
      }
      const double D = B * B - 4.0 * A * C;
      if (D < 0.0) continue;
      const double s = std::sqrt(D);
      const double h = -0.5 * (B + (B >= 0.0 ? s : -s));
      if (h != 0.0) {
        cand.push_back(h / A);
        cand.push_back(C / h);
      } else {
        cand.push_back(0.0);
      }
    }
  auto r = [&](double x) {
    double m = qs[0](x);
    for (std::size_t k = 1; k < qs.size(); ++k) m = std::max(m, qs[k](x));
    return m;
  };
  EnvelopeMinimum best{cand[0], r(cand[0])};
  for (std::size_t k = 1; k < cand.size(); ++k) {
    const double y = r(cand[k]);
    const double slack = 1e-15 * std::max(1.0, std::fabs(best.y));
    if (y < best.y - slack || (y <= best.y + slack && cand[k] < best.x)) best = {cand[k], y};
  }
  return best;
}

namespace {

bool flat(const Coefficients<double>& c) {
  return c.c11 <= 1e-12 * std::max({1.0, std::fabs(c.c00), std::fabs(c.c01)});
}

double qstar_value(const Coefficients<double>& c) { return flat(c) ? c.c00 : c.c00 - c.c01 * c.c01 / c.c11; }

// min over x of r(x) for the whole pool; convex, so golden section after bracketing.
double pool_argmin(const Pool& pool) {
  if (pool.size() <= 64) {
    std::vector<Coefficients<double>> qs;
    for (const auto& e : pool) qs.push_back(e.c);
    return envelope_minimum(qs).x;
  }
  auto r = [&](double x) { return r_eval(x, pool).value; };
  double lo = -1.0, hi = 1.0;
  while (r(lo) < r(lo / 2) && lo > -1e6) lo *= 2;
  while (r(hi) < r(hi / 2) && hi < 1e6) hi *= 2;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = r(x1), f2 = r(x2);
  for (int k = 0; k < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(lo)); ++k) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = r(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = r(x2);
    }
  }
  return (lo + hi) / 2;
}

// Point at which the equivalence condition is checked: the minimiser of q_xi,
// or the best point of r when q_xi is flat (c11 = 0 forces c01 = 0).
double check_point(const Coefficients<double>& agg, const Pool& pool) {
  return flat(agg) ? pool_argmin(pool) : -agg.c01 / agg.c11;
}

// argmax over alpha in [0, 1] of q*((1 - alpha) c + alpha d)
double line_search(const Coefficients<double>& c, const Coefficients<double>& d) {
  const Coefficients<double> delta{d.c00 - c.c00, d.c01 - c.c01, d.c11 - c.c11};
  auto f = [&](double al) {
    return qstar_value({c.c00 + al * delta.c00, c.c01 + al * delta.c01, c.c11 + al * delta.c11});
  };
  std::vector<double> cand{0.0, 1.0};
  // stationary points: delta11 X^2 - 2 delta01 X + delta00 = 0 with X = u / v
  std::vector<double> xs;
  if (std::fabs(delta.c11) > 1e-300) {
    const double disc = delta.c01 * delta.c01 - delta.c11 * delta.c00;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      xs = {(delta.c01 + s) / delta.c11, (delta.c01 - s) / delta.c11};
    }
  } else if (delta.c01 != 0.0) {
    xs = {delta.c00 / (2.0 * delta.c01)};
  }
  for (double x : xs) {
    const double den = delta.c01 - x * delta.c11;
    if (den == 0.0) continue;
    const double al = (x * c.c11 - c.c01) / den;
    if (al > 0.0 && al < 1.0) cand.push_back(al);
  }
  double best = 0.0;
  double fbest = f(0.0);
  for (double al : cand) {
    const double v = f(al);
    if (v > fbest) {
      fbest = v;
      best = al;
    }
  }
  return best;
}

struct Support {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

Coefficients<double> combine(const Support& s, const Pool& pool) {
  Coefficients<double> c;
  for (std::size_t k = 0; k < s.index.size(); ++k) c += pool[s.index[k]].c.scaled(s.weight[k]);
  return c;
}

// Optimal weights on the current support via its envelope minimum.
std::optional<Support> reoptimise(const Support& s, const Pool& pool) {
  std::vector<Coefficients<double>> qs;
  for (std::size_t i : s.index) qs.push_back(pool[i].c);
  const auto env = envelope_minimum(qs);
  const double tol = 1e-12 * std::max(1.0, std::fabs(env.y));
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < qs.size(); ++k)
    if (qs[k](env.x) >= env.y - tol) active.push_back(k);
  std::sort(active.begin(), active.end(), [&](std::size_t x, std::size_t y) { return s.index[x] < s.index[y]; });
  std::optional<std::size_t> zero, neg, pos;
  for (std::size_t k : active) {
    const double g = qs[k].c01 + env.x * qs[k].c11;
    const double gs = 1e-12 * std::max({1.0, std::fabs(qs[k].c01), std::fabs(env.x * qs[k].c11)});
    if (std::fabs(g) <= gs) {
      if (!zero) zero = k;
    } else if (g < 0.0) {
      if (!neg) neg = k;
    } else if (!pos) {
      pos = k;
    }
  }
  if (zero) return Support{{s.index[*zero]}, {1.0}};
  if (!neg || !pos) return std::nullopt;
  const double gn = qs[*neg].c01 + env.x * qs[*neg].c11;
  const double gp = qs[*pos].c01 + env.x * qs[*pos].c11;
  const double wn = gp / (gp - gn);
  return Support{{s.index[*neg], s.index[*pos]}, {wn, 1.0 - wn}};
}

std::size_t pool_index(const Pool& pool, const BlockArray& s) {
  const BlockArray rep = canonical_form(s);
  const auto it = std::lower_bound(pool.begin(), pool.end(), rep,
                                   [](const PoolEntry& e, const BlockArray& r) { return e.array < r; });
  if (it == pool.end() || !(it->array == rep)) {
    throw std::invalid_argument("exchange start: orbit " + rep.str() + " is not in the pool");
  }
  return static_cast<std::size_t>(it - pool.begin());
}

}  // namespace

SolveResult solve_exchange(const Shape& shape, const CovarianceSpec& sigma, const Pool& pool,
                           const ExchangeOptions& opts, const std::optional<SymmetricMeasure>& start) {
  if (pool.empty()) throw std::invalid_argument("solve_exchange: empty pool");
  sigma.validate(shape.p());
  Support sup;
  if (start) {
    start->validate();
    std::map<std::size_t, double> w;
    for (std::size_t k = 0; k < start->orbits.size(); ++k) w[pool_index(pool, start->orbits[k])] += start->weights[k].value;
    for (const auto& [i, v] : w) {
      if (v <= 0.0) continue;
      sup.index.push_back(i);
      sup.weight.push_back(v);
    }
  } else {
    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, opts.start_atoms)), pool.size());
    std::uniform_real_distribution<double> u(0.05, 1.0);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sup.index.push_back(idx[j]);
      sup.weight.push_back(u(rng));
      total += sup.weight.back();
    }
    for (auto& v : sup.weight) v /= total;
  }

  SolveResult res;
  res.shape = shape;
  res.regime = Regime::Computational;
  res.converged = false;
  double x = 0.0, q = 0.0, gap = 0.0;
  for (int it = 0;; ++it) {
    const Coefficients<double> agg = combine(sup, pool);
    x = check_point(agg, pool);
    q = qstar_value(agg);
    const REval fw = r_eval(x, pool);
    gap = fw.value - q;
    res.iterations = it;
    if (gap <= opts.tol * std::max(1.0, std::fabs(q))) {
      res.converged = true;
      break;
    }
    if (it >= opts.max_iter) break;
    const double alpha = line_search(agg, pool[fw.index].c);
    for (auto& v : sup.weight) v *= 1.0 - alpha;
    const auto pos = std::find(sup.index.begin(), sup.index.end(), fw.index);
    if (pos == sup.index.end()) {
      sup.index.push_back(fw.index);
      sup.weight.push_back(alpha);
    } else {
      sup.weight[static_cast<std::size_t>(pos - sup.index.begin())] += alpha;
    }
    const double after_line = qstar_value(combine(sup, pool));
    if (auto better = reoptimise(sup, pool)) {
      if (qstar_value(combine(*better, pool)) >= after_line - 1e-15 * std::max(1.0, std::fabs(after_line))) {
        sup = std::move(*better);
      }
    }
    // drop atoms that have lost all weight
    Support kept;
    for (std::size_t k = 0; k < sup.index.size(); ++k)
      if (sup.weight[k] > 1e-15) {
        kept.index.push_back(sup.index[k]);
        kept.weight.push_back(sup.weight[k]);
      }
    sup = std::move(kept);
  }
  res.x_star = Number::approx(x);
  res.y_star = Number::approx(q);
  res.gap = std::max(gap, 0.0);
  SymmetricMeasure m{shape, {}, {}};
  std::vector<std::size_t> order(sup.index.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return sup.index[i] < sup.index[j]; });
  double total = 0.0;
  for (double w : sup.weight) total += w;
  for (std::size_t k : order) {
    m.orbits.push_back(pool[sup.index[k]].array);
    m.weights.push_back(Number::approx(sup.weight[k] / total));
  }
  res.measure = std::move(m);
  for (std::size_t i : support_set(pool, x, q, opts.tol)) res.support_arrays.push_back(pool[i].array);
  return res;
}

std::vector<std::size_t> support_set(const Pool& pool, double x_star, double y_star, double tol) {
  std::vector<std::size_t> out;
  const double bound = tol * std::max(1.0, std::fabs(y_star));
  for (std::size_t k = 0; k < pool.size(); ++k)
    if (std::fabs(pool[k].c(x_star) - y_star) <= bound) out.push_back(k);
  return out;
}

ProportionResult solve_sbs_proportions(std::span<const PoolEntry> orbits, const Number& x_star) {
  if (orbits.empty()) throw InfeasibleProportions("no orbits supplied");
  const std::size_t n = orbits.size();
  bool exact = x_star.exact.has_value();
  for (const auto& e : orbits) exact = exact && e.exact.has_value();
  ProportionResult res;
  res.weights.assign(n, Number(Rational(0)));
  if (exact) {
    std::vector<Rational> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = orbits[k].exact->c01 + *x_star.exact * orbits[k].exact->c11;
    std::optional<std::size_t> zero, neg, pos;
    for (std::size_t k = 0; k < n; ++k) {
      const int sg = g[k].sign();
      if (sg == 0 && !zero) zero = k;
      if (sg < 0 && !neg) neg = k;
      if (sg > 0 && !pos) pos = k;
    }
    if (zero) {
      res.weights[*zero] = Number(Rational(1));
      res.residual = Number(Rational(0));
      return res;
    }
    if (!neg || !pos) throw InfeasibleProportions("every orbit has c01 + x* c11 of the same strict sign");
    const Rational wn = g[*pos] / (g[*pos] - g[*neg]);
    res.weights[*neg] = Number(wn);
    res.weights[*pos] = Number(Rational(1) - wn);
    res.residual = Number(wn * g[*neg] + (Rational(1) - wn) * g[*pos]);
    return res;
  }
  const double x = x_star.value;
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = orbits[k].c.c01 + x * orbits[k].c.c11;
  std::optional<std::size_t> zero, neg, pos;
  for (std::size_t k = 0; k < n; ++k) {
    const double tol = 1e-12 * std::max({1.0, std::fabs(orbits[k].c.c01), std::fabs(x * orbits[k].c.c11)});
    if (std::fabs(g[k]) <= tol) {
      if (!zero) zero = k;
    } else if (g[k] < 0.0) {
      if (!neg) neg = k;
    } else if (!pos) {
      pos = k;
    }
  }
  for (auto& w : res.weights) w = Number::approx(0.0);
  if (zero) {
    res.weights[*zero] = Number::approx(1.0);
    res.residual = Number::approx(g[*zero]);
    return res;
  }
  if (!neg || !pos) throw InfeasibleProportions("every orbit has c01 + x* c11 of the same strict sign");
  const double wn = g[*pos] / (g[*pos] - g[*neg]);
  res.weights[*neg] = Number::approx(wn);
  res.weights[*pos] = Number::approx(1.0 - wn);
  res.residual = Number::approx(wn * g[*neg] + (1.0 - wn) * g[*pos]);
  return res;
}

ProportionResult solve_sbs_proportions(const std::vector<BlockArray>& orbits, const Number& x_star,
                                       const CovarianceSpec& sigma) {
  Pool entries;
  for (const auto& s : orbits) {
    PoolEntry e;
    e.array = canonical_form(s);
    e.orbit_size = orbit_size_if_fits(s).value_or(0);
    const auto c = coefficients_for(s, sigma);
    e.c = c.value;
    e.exact = c.exact;
    entries.push_back(std::move(e));
  }
  return solve_sbs_proportions(std::span<const PoolEntry>(entries), x_star);
}

SolveResult solve_closed_form(const Shape& shape, const CovarianceSpec& sigma) {
  if (!sigma.closed_form()) {
    throw std::invalid_argument("closed-form solution requires identity or type-H covariance; use the exchange path");
  }
  const Regime regime = classify_regime(shape);
  const auto scale = *sigma.scale();
  const int a = shape.a, b = shape.b, t = shape.t, p = shape.p();

  auto scaled = [&](const Number& y) {
    if (y.exact && scale.exact) return Number(*y.exact / *scale.exact);
    return Number::approx(y.value / scale.value);
  };

  SolveResult res;
  res.shape = shape;
  res.regime = regime;
  Number x, y;

  // A Q_1 (a >= 3) or Q_1* (a = 2) array: treatment 1 on (1,1) and (2,1).
  auto q1_coefficients = [&]() {
    std::vector<int> labels(static_cast<std::size_t>(p));
    labels[0] = 1;
    for (int k = 1; k < p; ++k) labels[static_cast<std::size_t>(k)] = k;
    return closed_coefficients(BlockArray(shape, labels));
  };
  // Crossing of the Q_0, Q_1 and Q_2 quadratics.
  auto crossing = [&]() {
    if (a >= 3) {
      const double A = 2.0 * p - 5.0;
      return (A - std::sqrt(A * A - 24.0)) / 12.0;
    }
    const double B = b - 1.0;
    return (B - std::sqrt(B * B - 1.0)) / 2.0;
  };

  switch (regime) {
    case Regime::SmallT: {
      const long r = p % t;
      x = Number(Rational(0));
      y = Number(Rational(p) - Rational(static_cast<long>(p) * p + r * (t - r), static_cast<long>(p) * t));
      res.support.sets = {QSet::Balanced};
      break;
    }
    case Regime::PMinusOneA3:
    case Regime::PMinusOneA2: {
      const auto c = q1_coefficients();
      const Rational xv = -c.c01 / c.c11;
      // vertex <= crossing, decided exactly
      bool vertex;
      if (a >= 3) {
        const Rational A(2L * p - 5);
        const Rational gapv = A - Rational(12) * xv;
        vertex = gapv.sign() >= 0 && A * A - Rational(24) <= gapv * gapv;
      } else {
        const Rational B(b - 1L);
        const Rational gapv = B - Rational(2) * xv;
        vertex = gapv.sign() >= 0 && B * B - Rational(1) <= gapv * gapv;
      }
      if (vertex) {
        x = Number(xv);
        y = Number(c(xv));
        res.support.sets = {a >= 3 ? QSet::Q1 : QSet::Q1Star};
      } else {
        const double xc = crossing();
        x = Number::approx(xc);
        y = Number::approx(to_double(c)(xc));
        res.crossing_branch = true;
        if (a >= 3) {
          res.support.sets = {QSet::Q1, QSet::Q2, QSet::Q3, QSet::Q4};
        } else {
          res.support.sets = {QSet::Q1Star, QSet::Q2Star};
        }
      }
      break;
    }
    case Regime::PMinusOneA2B2:
    case Regime::LargeTA2B2: {
      x = Number(Rational(1, 2));
      y = Number(Rational(2));
      if (regime == Regime::PMinusOneA2B2) {
        res.support.sets = {QSet::Q1Star, QSet::Q2Star};
      } else {
        res.support.sets = {QSet::Q0, QSet::Q1Star, QSet::Q2Star};
      }
      break;
    }
    case Regime::LargeTA3:
    case Regime::LargeTA2: {
      const double xc = crossing();
      x = Number::approx(xc);
      y = Number::approx(to_double(q1_coefficients())(xc));
      if (a >= 3) {
        res.support.sets = {QSet::Q0, QSet::Q1, QSet::Q2, QSet::Q3, QSet::Q4};
      } else {
        res.support.sets = {QSet::Q0, QSet::Q1Star, QSet::Q2Star};
      }
      break;
    }
    case Regime::Computational: break;
  }
  res.x_star = x;
  res.y_star = scaled(y);
  res.gap = 0.0;

  // An optimal symmetric measure from constructively generated Q orbits.
  const Pool pool = constructive_pool(shape, sigma, res.support);
  Pool in_q;
  for (const auto& e : pool) {
    bool hit;
    if (e.exact && res.x_star.exact && res.y_star.exact) {
      hit = (*e.exact)(*res.x_star.exact) == *res.y_star.exact;
    } else {
      hit = std::fabs(e.c(res.x_star.value) - res.y_star.value) <= 1e-9 * std::max(1.0, std::fabs(res.y_star.value));
    }
    if (hit) in_q.push_back(e);
  }
  if (!in_q.empty()) {
    try {
      const auto prop = solve_sbs_proportions(std::span<const PoolEntry>(in_q), res.x_star);
      SymmetricMeasure m{shape, {}, {}};
      for (std::size_t k = 0; k < in_q.size(); ++k) {
        if (prop.weights[k].value == 0.0) continue;
        m.orbits.push_back(in_q[k].array);
        m.weights.push_back(prop.weights[k]);
      }
      res.measure = std::move(m);
    } catch (const InfeasibleProportions&) {
    }
  }
  return res;
}

namespace {

template <class T>
struct Residuals {
  double eq10 = 0.0;
  double eq11 = 0.0;
  double info = 0.0;
};

template <class T>
Residuals<T> residuals(const ArrayMatrices<T>& s, const T& x, const T& y, std::size_t t) {
  const Matrix<T> bt = Matrix<T>::centering(t);
  const Matrix<T> target = bt * (y / T(static_cast<long>(t - 1)));
  Residuals<T> r;
  r.eq10 = max_abs(s.c00 + s.c01 * bt * x - target);
  r.eq11 = max_abs(s.c01.transpose() + s.c11 * bt * x);
  r.info = max_abs(schur_complement(s) - target);
  return r;
}

template <class Weighted>
VerificationReport verify_impl(const Shape& shape, const std::vector<std::pair<BlockArray, Number>>& atoms,
                               const CovarianceSpec& sigma, const Number& x_star, const Number& y_star, double tol,
                               Weighted&& finish) {
  VerificationReport rep;
  const auto t = static_cast<std::size_t>(shape.t);
  const int p = shape.p();
  bool exact = x_star.exact && y_star.exact;
  for (const auto& [s, w] : atoms) exact = exact && w.exact.has_value();
  const auto bte = exact ? btilde_exact(sigma, p) : std::nullopt;
  // support violation
  const double bound = tol * std::max(1.0, std::fabs(y_star.value));
  for (const auto& [s, w] : atoms) {
    const auto c = coefficients_for(s, sigma);
    bool in_q;
    if (c.exact && x_star.exact && y_star.exact) {
      in_q = (*c.exact)(*x_star.exact) == *y_star.exact;
    } else {
      in_q = std::fabs(c.value(x_star.value) - y_star.value) <= bound;
    }
    if (!in_q) rep.support_violation += w.value;
  }
  if (bte) {
    try {
      auto sum = zero_matrices<Rational>(t);
      for (const auto& [s, w] : atoms) {
        auto m = array_matrices(s, *bte);
        m *= *w.exact;
        sum += m;
      }
      const auto r = residuals(finish(sum), *x_star.exact, *y_star.exact, t);
      rep.residual_eq10 = r.eq10;
      rep.residual_eq11 = r.eq11;
      rep.info_residual = r.info;
      rep.exact = true;
    } catch (const std::overflow_error&) {
      exact = false;
    }
  }
  if (!rep.exact) {
    const auto bt = btilde(sigma, p);
    auto sum = zero_matrices<double>(t);
    for (const auto& [s, w] : atoms) {
      auto m = array_matrices(s, bt);
      m *= w.value;
      sum += m;
    }
    const auto r = residuals(finish(sum), x_star.value, y_star.value, t);
    rep.residual_eq10 = r.eq10;
    rep.residual_eq11 = r.eq11;
    rep.info_residual = r.info;
  }
  const double lim = rep.exact ? 0.0 : tol;
  rep.optimal = rep.residual_eq10 <= lim && rep.residual_eq11 <= lim && rep.support_violation <= (rep.exact ? 0.0 : tol);
  return rep;
}

}  // namespace

VerificationReport verify_measure(const Measure& xi, const CovarianceSpec& sigma, const Number& x_star,
                                  const Number& y_star, double tol) {
  xi.validate();
  return verify_impl(xi.shape, atoms_of(xi), sigma, x_star, y_star, tol, [](auto m) { return m; });
}

VerificationReport verify_measure(const SymmetricMeasure& xi, const CovarianceSpec& sigma, const Number& x_star,
                                  const Number& y_star, double tol) {
  xi.validate();
  return verify_impl(xi.shape, atoms_of(xi), sigma, x_star, y_star, tol, [](auto m) {
    m.c00 = symmetrize(m.c00);
    m.c01 = symmetrize(m.c01);
    m.c11 = symmetrize(m.c11);
    return m;
  });
}

double equivalence_gap(const Coefficients<double>& aggregate, const Pool& pool) {
  if (pool.empty()) throw std::invalid_argument("equivalence_gap: empty pool");
  return r_eval(check_point(aggregate, pool), pool).value - qstar_value(aggregate);
}

double equivalence_gap(const Measure& xi, const Pool& pool, const CovarianceSpec& sigma) {
  xi.validate();
  return equivalence_gap(aggregate(atoms_of(xi), sigma).value, pool);
}

double equivalence_gap(const SymmetricMeasure& xi, const Pool& pool, const CovarianceSpec& sigma) {
  xi.validate();
  return equivalence_gap(aggregate(atoms_of(xi), sigma).value, pool);
}

}  // namespace idesign
