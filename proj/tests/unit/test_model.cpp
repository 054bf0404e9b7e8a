#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "idesign/model.hpp"

using namespace idesign;

namespace {

BlockArray from_columns(Shape sh, const std::vector<std::vector<int>>& cols) {
  std::vector<int> labels;
  for (const auto& c : cols) labels.insert(labels.end(), c.begin(), c.end());
  return BlockArray(sh, labels);
}

BlockArray random_array(const Shape& sh, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(1, sh.t);
  std::vector<int> v(static_cast<std::size_t>(sh.p()));
  for (auto& x : v) x = d(rng);
  return BlockArray(sh, v);
}

Matrix<double> random_spd(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix<double> a(static_cast<std::size_t>(p), static_cast<std::size_t>(p));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = g(rng);
  return a * a.transpose() + Matrix<double>::identity(static_cast<std::size_t>(p)) * 0.5;
}

const BlockArray kSbs = from_columns({2, 3, 5}, {{1, 1}, {2, 3}, {4, 5}});

}  // namespace

TEST_CASE("btilde reduces to B_p and B_p / x") {
  const auto id = btilde_exact(CovarianceSpec::identity(), 4);
  REQUIRE(id);
  CHECK(*id == Matrix<Rational>::centering(4));
  const auto h = CovarianceSpec::type_h(Number(Rational(2)), {0.1, -0.2, 0.3, 0.0, 0.5, 0.25});
  CHECK(*btilde_exact(h, 6) == Matrix<Rational>::centering(6) * Rational(1, 2));

  // Type-H through the generic formula equals B_p / x
  const auto dense = CovarianceSpec::general(h.dense(6));
  CHECK(max_abs(btilde(dense, 6) - Matrix<double>::centering(6) * 0.5) < 1e-12);
}

TEST_CASE("btilde of a general covariance: zero row sums, PSD") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto bt = btilde(CovarianceSpec::general(random_spd(6, rng)), 6);
    for (std::size_t i = 0; i < 6; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < 6; ++j) r += bt(i, j);
      CHECK(std::fabs(r) < 1e-12);
    }
    CHECK(symmetric_eigenvalues(bt).front() > -1e-10);
  }
}

TEST_CASE("covariance validation") {
  CHECK_THROWS_AS(CovarianceSpec::type_h(Number(Rational(-1))), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceSpec::type_h(Number(Rational(1)), {1.0, 2.0}).validate(6), std::invalid_argument);
  Matrix<double> bad = Matrix<double>::identity(3);
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(btilde(CovarianceSpec::general(bad), 3), std::invalid_argument);
  Matrix<double> asym = Matrix<double>::identity(3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(CovarianceSpec::general(asym).validate(3), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceSpec::general(Matrix<double>::identity(3)).validate(4), std::invalid_argument);
  // type-H whose expansion is indefinite
  CHECK_THROWS_AS(CovarianceSpec::type_h(Number(Rational(1)), {-3, 0, 0, 0}).validate(4), std::invalid_argument);
}

TEST_CASE("incidence matrices") {
  const auto s = BlockArray({2, 2, 3}, {1, 2, 2, 3});
  const auto inc = incidence_matrices<int>(s);
  auto row_sum = [](const Matrix<int>& m, std::size_t r) {
    int v = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) v += m(r, j);
    return v;
  };
  for (std::size_t k = 0; k < 4; ++k) CHECK(row_sum(inc.f, k) == 2);
  CHECK(inc.t0.sum() == 4);

  const auto s23 = BlockArray({2, 3, 4}, {1, 2, 3, 4, 1, 2});
  const auto f = incidence_matrices<int>(s23).f;
  // plot (1,2) (1-based) has colex index 2 and three neighbours
  CHECK(row_sum(f, 2) == 3);
  CHECK(row_sum(f, 0) == 2);
  const auto s33 = BlockArray({3, 3, 2}, {1, 2, 1, 2, 1, 2, 1, 2, 1});
  CHECK(row_sum(incidence_matrices<int>(s33).f, 4) == 4);
  const auto st = count_statistics(s23);
  const auto t0 = incidence_matrices<int>(s23).t0;
  for (std::size_t m = 0; m < 4; ++m) {
    int col = 0;
    for (std::size_t k = 0; k < 6; ++k) col += t0(k, m);
    CHECK(col == st.f[0][m]);
  }
}

TEST_CASE("closed-form coefficients: worked values") {
  CHECK(eta({2, 3, 5}) == Rational(206, 15));
  const auto c = closed_coefficients(kSbs);
  CHECK(c.c00 == Rational(14, 3));
  CHECK(c.c01 == Rational(-1));
  CHECK(c.c11 == Rational(101, 15));
  CHECK(closed_coefficients(BlockArray({2, 3, 6}, {1, 2, 3, 4, 5, 6})).c00 == Rational(5));

  // a >= 3, s in Q_1
  const Shape sh{3, 4, 11};
  const auto q1 = from_columns(sh, {{1, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11}});
  const long p = 12, a = 3, b = 4;
  const auto cq = closed_coefficients(q1);
  CHECK(cq.c00 == Rational(p) - Rational(p + 2, p));
  CHECK(cq.c01 == Rational(2 * a + 2 * b - 5, p) - Rational(2));
  CHECK(cq.c11 == eta(sh) - Rational(16 * p - 14 * a - 14 * b + 20, p));
}

TEST_CASE("trace coefficients equal the closed form") {
  const auto tr = c_coeffs_trace(kSbs, CovarianceSpec::identity());
  REQUIRE(tr.exact);
  CHECK(*tr.exact == closed_coefficients(kSbs));
  CHECK(tr.provenance == CoefficientTriple::Provenance::Trace);
  std::mt19937_64 rng(17);
  for (const Shape sh : {Shape{2, 2, 3}, Shape{2, 3, 4}, Shape{3, 3, 3}, Shape{3, 4, 5}, Shape{4, 6, 8}}) {
    for (int k = 0; k < 25; ++k) {
      const auto s = random_array(sh, rng);
      CHECK(*c_coeffs_trace(s, CovarianceSpec::identity()).exact == closed_coefficients(s));
    }
  }
}

TEST_CASE("type-H divides coefficients by x") {
  const auto h = CovarianceSpec::type_h(Number(Rational(3)), {0.2, 0.1, 0.0, 0.4, 0.3, 0.2});
  const auto c = c_coeffs_closed(kSbs, h);
  CHECK(*c.exact == closed_coefficients(kSbs).scaled(Rational(1, 3)));
  const auto t = c_coeffs_trace(kSbs, h);
  CHECK(*t.exact == *c.exact);
  // Dense route for the same covariance
  const auto g = c_coeffs_trace(kSbs, CovarianceSpec::general(h.dense(6)));
  CHECK_FALSE(g.exact);
  CHECK(g.value.c11 == doctest::Approx(101.0 / 45.0).epsilon(1e-12));
  CHECK_THROWS_AS(c_coeffs_closed(kSbs, CovarianceSpec::general(h.dense(6))), std::invalid_argument);
}

TEST_CASE("coefficients are invariant under relabelling for any covariance") {
  std::mt19937_64 rng(23);
  const auto sigma = CovarianceSpec::general(random_spd(6, rng));
  const auto base = c_coeffs_trace(kSbs, sigma).value;
  const std::vector<int> perm{3, 5, 1, 2, 4};
  const auto moved = c_coeffs_trace(apply_permutation(kSbs, perm), sigma).value;
  CHECK(moved.c00 == doctest::Approx(base.c00).epsilon(1e-12));
  CHECK(moved.c01 == doctest::Approx(base.c01).epsilon(1e-12));
  CHECK(moved.c11 == doctest::Approx(base.c11).epsilon(1e-12));
}

TEST_CASE("information matrices") {
  const Shape sh{2, 3, 2};
  const auto s1 = BlockArray::from_rows(sh, {{1, 1, 2}, {1, 2, 2}});
  const auto s2 = BlockArray::from_rows(sh, {{1, 1, 2}, {2, 1, 2}});
  const auto s3 = BlockArray::from_rows(sh, {{1, 2, 1}, {2, 2, 1}});
  const ExactDesign d{sh, {s1, s1, s2, s3}};
  const auto c = info_matrix_exact(d, CovarianceSpec::identity());
  REQUIRE(c.exact);
  CHECK(*c.exact == Matrix<Rational>::centering(2) * Rational(12));

  const ExactDesign one{sh, {s2}};
  const ExactDesign twice{sh, {s2, s2}};
  const auto c1 = info_matrix_exact(one, CovarianceSpec::identity());
  CHECK(*info_matrix_exact(twice, CovarianceSpec::identity()).exact == *c1.exact * Rational(2));
  CHECK(*info_matrix_measure(point_measure(s2), CovarianceSpec::identity()).exact == *c1.exact);

  Measure emp{sh, {{s1, Number(Rational(1, 2))}, {s2, Number(Rational(1, 4))}, {s3, Number(Rational(1, 4))}}};
  CHECK(*info_matrix_measure(emp, CovarianceSpec::identity()).exact * Rational(4) == *c.exact);

  std::mt19937_64 rng(9);
  const auto sigma = CovarianceSpec::general(random_spd(6, rng));
  const auto cg = info_matrix_exact(d, sigma).value;
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::fabs(cg(i, 0) + cg(i, 1)) < 1e-12);
  emp.atoms[0].weight = Number::approx(0.5);
  CHECK(max_abs(info_matrix_measure(emp, sigma).value * 4.0 - cg) < 1e-10);

  Measure bad{sh, {{s1, Number(Rational(1, 2))}}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS((ExactDesign{sh, {}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((ExactDesign{sh, {kSbs}}).validate(), std::invalid_argument);
}

TEST_CASE("type-H information equals identity information divided by x") {
  std::mt19937_64 rng(31);
  const Shape sh{3, 3, 4};
  ExactDesign d{sh, {}};
  for (int k = 0; k < 5; ++k) d.blocks.push_back(random_array(sh, rng));
  const auto id = info_matrix_exact(d, CovarianceSpec::identity()).value;
  std::vector<double> y(9);
  for (auto& v : y) v = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
  const auto h = CovarianceSpec::type_h(Number::approx(2.5), y);
  CHECK(max_abs(info_matrix_exact(d, h).value - id * (1.0 / 2.5)) < 1e-10);
  CHECK(max_abs(info_matrix_exact(d, CovarianceSpec::general(h.dense(9))).value - id * (1.0 / 2.5)) < 1e-10);
}

TEST_CASE("symmetric measure on the orbit of s equals the Reynolds projection") {
  // explicit expansion over the 120 relabellings of a free orbit
  std::vector<int> perm{1, 2, 3, 4, 5};
  auto total = zero_matrices<Rational>(5);
  const auto bt = *btilde_exact(CovarianceSpec::identity(), 6);
  do {
    total += array_matrices(apply_permutation(kSbs, perm), bt);
  } while (std::next_permutation(perm.begin(), perm.end()));
  total *= Rational(1, 120);
  const auto single = array_matrices(kSbs, bt);
  CHECK(total.c00 == symmetrize(single.c00));
  CHECK(total.c01 == symmetrize(single.c01));
  CHECK(total.c11 == symmetrize(single.c11));
  // C_xi = q* B_5 / 4 with q* = 1369/303
  CHECK(schur_complement(total) == Matrix<Rational>::centering(5) * Rational(1369, 303 * 4));
}
