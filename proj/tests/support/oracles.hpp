#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "idesign/arrays.hpp"
#include "idesign/matrix.hpp"
#include "idesign/model.hpp"
#include "idesign/optimality.hpp"

namespace oracle {

using namespace idesign;

inline BlockArray from_columns(Shape sh, const std::vector<std::vector<int>>& cols) {
  std::vector<int> labels;
  for (const auto& c : cols) labels.insert(labels.end(), c.begin(), c.end());
  return BlockArray(sh, labels);
}

inline BlockArray random_array(const Shape& sh, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(1, sh.t);
  std::vector<int> v(static_cast<std::size_t>(sh.p()));
  for (auto& x : v) x = d(rng);
  return BlockArray(sh, v);
}

inline Matrix<double> random_spd(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix<double> a(static_cast<std::size_t>(p), static_cast<std::size_t>(p));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = g(rng);
  return a * a.transpose() * (1.0 / p) + Matrix<double>::identity(static_cast<std::size_t>(p)) * 0.5;
}

struct Minimax {
  long double x = 0;
  long double y = 0;
  long double x_lo = 0;  ///< ends of the set where r is within 1e-12 of y
  long double x_hi = 0;
};

// Golden-section search on r(x) = max_s q_s(x) over the whole pool, then a
// polish over the quadratics active near the bracket: their vertices and
// pairwise crossings.
inline Minimax brute_minimax(const Pool& pool, long double lo = -2.0L, long double hi = 2.0L) {
  auto q = [&](const PoolEntry& e, long double x) {
    return static_cast<long double>(e.c.c00) + 2.0L * e.c.c01 * x + static_cast<long double>(e.c.c11) * x * x;
  };
  auto r = [&](long double x) {
    long double m = q(pool[0], x);
    for (const auto& e : pool) m = std::max(m, q(e, x));
    return m;
  };
  const long double g = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  long double a = lo, b = hi;
  long double m1 = b - g * (b - a), m2 = a + g * (b - a);
  long double f1 = r(m1), f2 = r(m2);
  for (int it = 0; it < 120; ++it) {
    if (f1 < f2) {
      b = m2;
      m2 = m1;
      f2 = f1;
      m1 = b - g * (b - a);
      f1 = r(m1);
    } else {
      a = m1;
      m1 = m2;
      f1 = f2;
      m2 = a + g * (b - a);
      f2 = r(m2);
    }
  }
  const long double x0 = (a + b) / 2;
  const long double r0 = r(x0);
  std::vector<const PoolEntry*> act;
  for (const auto& e : pool)
    if (q(e, x0) > r0 - 1e-6L * std::max(1.0L, std::fabs(r0))) act.push_back(&e);
  std::vector<long double> cand{x0};
  for (const auto* e : act)
    if (e->c.c11 > 0) cand.push_back(-static_cast<long double>(e->c.c01) / e->c.c11);
  for (std::size_t i = 0; i < act.size(); ++i)
    for (std::size_t j = i + 1; j < act.size(); ++j) {
      const long double A = static_cast<long double>(act[i]->c.c11) - act[j]->c.c11;
      const long double B = 2.0L * (static_cast<long double>(act[i]->c.c01) - act[j]->c.c01);
      const long double C = static_cast<long double>(act[i]->c.c00) - act[j]->c.c00;
      if (std::fabs(A) < 1e-14L) {
        if (std::fabs(B) > 1e-14L) cand.push_back(-C / B);
        continue;
      }
      const long double D = B * B - 4 * A * C;
      if (D < 0) continue;
      cand.push_back((-B + std::sqrt(D)) / (2 * A));
      cand.push_back((-B - std::sqrt(D)) / (2 * A));
    }
  Minimax out;
  out.x = cand[0];
  out.y = r(cand[0]);
  for (long double c : cand) {
    const long double v = r(c);
    if (v < out.y) {
      out.y = v;
      out.x = c;
    }
  }
  // extent of the (near-)flat bottom, by bisection on each side
  auto flat = [&](long double xx) { return r(xx) <= out.y + 1e-12L; };
  long double l_in = out.x, l_out = lo;
  long double h_in = out.x, h_out = hi;
  for (int it = 0; it < 80; ++it) {
    const long double ml = (l_in + l_out) / 2;
    (flat(ml) ? l_in : l_out) = ml;
    const long double mh = (h_in + h_out) / 2;
    (flat(mh) ? h_in : h_out) = mh;
  }
  out.x_lo = l_in;
  out.x_hi = h_in;
  return out;
}

}  // namespace oracle
