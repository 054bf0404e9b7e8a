#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "../support/oracles.hpp"
#include "idesign/designs.hpp"

using namespace idesign;

namespace {

const Shape kEx1{2, 3, 2};

ExactDesign example1_design() {
  const auto s1 = BlockArray::from_rows(kEx1, {{1, 1, 2}, {1, 2, 2}});
  const auto s2 = BlockArray::from_rows(kEx1, {{1, 1, 2}, {2, 1, 2}});
  const auto s3 = BlockArray::from_rows(kEx1, {{1, 2, 1}, {2, 2, 1}});
  return {kEx1, {s1, s1, s2, s3}};
}

SymmetricMeasure example1_weights() {
  const auto o1 = canonical_form(oracle::from_columns(kEx1, {{1, 2}, {2, 1}, {1, 2}}));
  const auto o2 = canonical_form(oracle::from_columns(kEx1, {{1, 1}, {2, 1}, {2, 2}}));
  return {kEx1, {o1, o2}, {Number(Rational(1, 8)), Number(Rational(7, 8))}};
}

// 4 x 2 blocks written row by row, eight labels per block
ExactDesign four_by_two(const std::string& text) {
  std::istringstream in(text);
  std::vector<int> v;
  for (int x; in >> x;) v.push_back(x);
  ExactDesign d{{2, 4, 8}, {}};
  for (std::size_t k = 0; k + 8 <= v.size(); k += 8) {
    std::vector<std::vector<int>> rows;
    for (std::size_t r = 0; r < 4; ++r) rows.push_back({v[k + 2 * r], v[k + 2 * r + 1]});
    d.blocks.push_back(ingest_array(4, 2, 8, rows));
  }
  return d;
}

const char* kAlternative =
    "1 1 2 8 3 7 6 4  6 6 8 1 3 7 5 4  2 2 5 7 3 1 8 4  7 7 2 3 1 4 6 8  5 5 2 8 3 7 6 1  4 4 2 1 5 3 6 8  "
    "8 7 4 6 2 3 5 1  8 8 5 1 7 4 2 6  3 3 1 4 5 6 7 2  4 5 2 8 3 7 6 1  5 6 3 8 4 1 7 2  6 7 4 8 5 2 1 3  "
    "7 1 5 8 6 3 2 4  1 2 6 8 7 4 3 5";

void check_chain(const EfficiencyReport& r) {
  CHECK(r.eff_e <= r.eff_a + 1e-12);
  CHECK(r.eff_a <= r.eff_d + 1e-12);
  CHECK(r.eff_d <= r.eff_t + 1e-12);
}

}  // namespace

TEST_CASE("measure of a design") {
  const auto one = measure_of_design({kEx1, {example1_design().blocks[0]}});
  REQUIRE(one.atoms.size() == 1);
  CHECK(*one.atoms[0].weight.exact == Rational(1));
  const auto m = measure_of_design(example1_design());
  REQUIRE(m.atoms.size() == 3);
  CHECK(*m.atoms[0].weight.exact == Rational(1, 2));
  CHECK(*m.atoms[1].weight.exact == Rational(1, 4));
  CHECK(*m.atoms[2].weight.exact == Rational(1, 4));
  CHECK_THROWS_AS(measure_of_design({kEx1, {}}), std::invalid_argument);
}

TEST_CASE("efficiencies of an optimal design are all one") {
  const auto r = efficiencies(example1_design(), CovarianceSpec::identity(), Number(Rational(3)));
  CHECK(r.connected);
  CHECK(r.eigenvalues.size() == 1);
  for (double e : {r.eff_a, r.eff_d, r.eff_e, r.eff_t}) CHECK(e == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Example 2 efficiencies") {
  const Shape sh{5, 5, 5};
  const auto s1 = BlockArray::from_rows(sh, {{1, 2, 3, 4, 5}, {4, 5, 1, 2, 3}, {2, 3, 4, 5, 1}, {5, 1, 2, 3, 4}, {3, 4, 5, 1, 2}});
  const auto s2 = BlockArray::from_rows(sh, {{1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, {1, 2, 3, 5, 4}, {1, 2, 3, 4, 5}});
  const auto y = solve_closed_form(sh).y_star;
  const SymmetricMeasure only{sh, {canonical_form(s1)}, {Number(Rational(1))}};
  const auto e1 = efficiencies(only, CovarianceSpec::identity(), y);
  CHECK(e1.eff_a == doctest::Approx(17.0 / 33.0).epsilon(1e-12));
  CHECK(e1.eff_e == doctest::Approx(e1.eff_t).epsilon(1e-12));
  const auto d = expand_symmetric(only, 120);
  CHECK(d.n() == 120);
  const auto e2 = efficiencies(d, CovarianceSpec::identity(), y);
  CHECK(e2.eff_d == doctest::Approx(e1.eff_d).epsilon(1e-12));
  const SymmetricMeasure mix{sh, {canonical_form(s1), canonical_form(s2)}, {Number(Rational(1, 2)), Number(Rational(1, 2))}};
  CHECK(efficiencies(mix, CovarianceSpec::identity(), y).eff_a == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Example 8 alternative design") {
  const ExactDesign d = four_by_two(kAlternative);
  REQUIRE(d.n() == 14);
  const auto y = solve_closed_form(d.shape).y_star;
  const auto r = efficiencies(d, CovarianceSpec::identity(), y);
  CHECK(std::fabs(r.eff_a - 0.9792) <= 5e-4);
  CHECK(std::fabs(r.eff_d - 0.9806) <= 5e-4);
  CHECK(std::fabs(r.eff_e - 0.9002) <= 5e-4);
  CHECK(std::fabs(r.eff_t - 0.9820) <= 5e-4);
  check_chain(r);
}

TEST_CASE("disconnected designs report zero efficiency") {
  // a constant array carries no treatment contrast
  const auto same = BlockArray(kEx1, {1, 1, 1, 1, 1, 1});
  const auto r = efficiencies(ExactDesign{kEx1, {same}}, CovarianceSpec::identity(), Number(Rational(3)));
  CHECK_FALSE(r.connected);
  CHECK(r.eff_a == 0.0);
  CHECK_FALSE(r.diagnostic.empty());
}

TEST_CASE("efficiency chain and relabelling invariance on random designs") {
  std::mt19937_64 rng(21);
  for (const Shape& sh : {Shape{2, 3, 4}, Shape{3, 3, 5}, Shape{2, 4, 8}}) {
    const auto y = solve_closed_form(sh).y_star;
    for (int rep = 0; rep < 10; ++rep) {
      ExactDesign d{sh, {}};
      for (int k = 0; k < 6; ++k) d.blocks.push_back(oracle::random_array(sh, rng));
      const auto r = efficiencies(d, CovarianceSpec::identity(), y);
      if (!r.connected) continue;
      check_chain(r);
      std::vector<int> perm(static_cast<std::size_t>(sh.t));
      std::iota(perm.begin(), perm.end(), 1);
      std::shuffle(perm.begin(), perm.end(), rng);
      ExactDesign moved = d;
      for (auto& s : moved.blocks) s = apply_permutation(s, perm);
      const auto m = efficiencies(moved, CovarianceSpec::identity(), y);
      CHECK(m.eff_a == doctest::Approx(r.eff_a).epsilon(1e-10));
      CHECK(m.eff_e == doctest::Approx(r.eff_e).epsilon(1e-10));
    }
  }
}

TEST_CASE("minimum n") {
  CHECK(min_n_symmetric(example1_weights()).full == 16);
  CHECK_FALSE(min_n_symmetric(example1_weights()).pseudo_symmetric);
  const auto sbs = canonical_form(oracle::from_columns({2, 3, 5}, {{1, 1}, {2, 3}, {4, 5}}));
  const auto m = min_n_symmetric({{2, 3, 5}, {sbs}, {Number(Rational(1))}});
  CHECK(m.full == 120);
  CHECK(*m.pseudo_symmetric == 20);
  const auto q = solve_closed_form({3, 3, 8});
  REQUIRE(q.measure);
  REQUIRE(q.measure->orbits.size() >= 1);
  const SymmetricMeasure single{{3, 3, 8}, {q.measure->orbits[0]}, {Number(Rational(1))}};
  CHECK(*min_n_symmetric(single).pseudo_symmetric == 56);
  const SymmetricMeasure floating{kEx1, example1_weights().orbits, {Number::approx(0.125), Number::approx(0.875)}};
  const auto f = min_n_symmetric(floating);
  CHECK(f.approximated);
  CHECK(f.full == 16);
}

TEST_CASE("symmetric expansion") {
  const auto d = expand_symmetric(example1_weights(), 16);
  CHECK(d.n() == 16);
  const auto m = measure_of_design(d);
  REQUIRE(m.atoms.size() == 4);
  std::map<BlockArray, Rational> orbit_weight;
  for (const auto& a : m.atoms) orbit_weight[canonical_form(a.array)] += *a.weight.exact;
  CHECK(orbit_weight[example1_weights().orbits[0]] == Rational(1, 8));
  CHECK(orbit_weight[example1_weights().orbits[1]] == Rational(7, 8));
  // complete symmetry of the expanded design's per-array matrices
  const auto sum = design_matrices(d, *btilde_exact(CovarianceSpec::identity(), kEx1.p()));
  CHECK(symmetrize(sum.c00) == sum.c00);
  CHECK(symmetrize(sum.c01) == sum.c01);
  CHECK(symmetrize(sum.c11) == sum.c11);
  try {
    expand_symmetric(example1_weights(), 4);
    FAIL("expected Indivisible");
  } catch (const Indivisible& e) {
    CHECK(e.min_n() == 16);
  }
  const auto free_orbit = canonical_form(BlockArray(Shape{2, 2, 4}, {1, 2, 3, 4}));
  CHECK(expand_symmetric({{2, 2, 4}, {free_orbit}, {Number(Rational(1))}}, 24).n() == 24);
}

TEST_CASE("construction finds the n = 4 optimal design") {
  const auto sol = solve_closed_form(kEx1);
  const Pool pool = constructive_pool(kEx1, CovarianceSpec::identity(), sol.support);
  const auto r = construct_exact(kEx1, 4, CovarianceSpec::identity(), sol, pool, {.seed = 7});
  CHECK(r.design.n() == 4);
  for (double e : {r.report.eff_a, r.report.eff_d, r.report.eff_e, r.report.eff_t})
    CHECK(e == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(verify_measure(measure_of_design(r.design), CovarianceSpec::identity(), sol.x_star, sol.y_star).optimal);

  const auto base = efficiencies(expand_symmetric(*sol.measure, 16), CovarianceSpec::identity(), sol.y_star);
  const auto r16 = construct_exact(kEx1, 16, CovarianceSpec::identity(), sol, pool, {.seed = 7});
  CHECK(r16.report.eff_a >= base.eff_a - 1e-12);

  const auto again = construct_exact(kEx1, 4, CovarianceSpec::identity(), sol, pool, {.seed = 7});
  CHECK(again.design.blocks == r.design.blocks);
  CHECK_THROWS_AS(construct_exact(kEx1, 0, CovarianceSpec::identity(), sol, pool), std::invalid_argument);
  CHECK_THROWS_AS(construct_exact(kEx1, 4, CovarianceSpec::identity(), sol, Pool{}), std::invalid_argument);
}

TEST_CASE("construction on (2,4,8) with 14 blocks") {
  const Shape sh{2, 4, 8};
  const auto sol = solve_closed_form(sh);
  const Pool pool = constructive_pool(sh, CovarianceSpec::identity(), sol.support);
  const auto r = construct_exact(sh, 14, CovarianceSpec::identity(), sol, pool, {.seed = 7});
  MESSAGE("pool " << pool.size() << " eff " << r.report.eff_a << " " << r.report.eff_d << " " << r.report.eff_e << " "
                  << r.report.eff_t << " swaps " << r.swaps);
  CHECK(r.report.eff_a >= 0.979);
  CHECK(r.report.eff_d >= 0.980);
  CHECK(r.report.eff_e >= 0.900);
  CHECK(r.report.eff_t >= 0.982);
  check_chain(r.report);
}
