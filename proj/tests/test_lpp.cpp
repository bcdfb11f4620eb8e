#include <doctest.h>

#include "lineens/lpp.hpp"
#include "lineens/mc.hpp"
#include "lpp_oracle.hpp"

#include <cmath>
#include <vector>

using namespace lineens;

namespace {

// Deterministic two-line field on [0,1] with 2 cells: line values
// (0, 2, 1) and (0, -1, 3).
BrownianField<double> tiny_field() {
  const TimeGrid<double> g(0.0, 1.0, 2);
  Matrix<double> v(2, 3);
  v << 0.0, 2.0, 1.0, 0.0, -1.0, 3.0;
  return BrownianField<double>(2, g, std::move(v));
}

BrownianField<double> random_field(Index n, Index cells, RngStream& rng) {
  const TimeGrid<double> g(0.0, 0.25 * static_cast<double>(cells), cells);
  return sample_brownian_field(n, g, rng);
}

}  // namespace

TEST_CASE("upright paths validate their jump sequences") {
  CHECK_NOTHROW(UprightPath(1, 2, {0, 1, 2}));
  CHECK_NOTHROW(UprightPath(2, 2, {0, 0}));  // zero-length stay allowed
  CHECK_THROWS_AS(UprightPath(1, 2, {0, 2, 1}), std::invalid_argument);
  CHECK_THROWS_AS(UprightPath(1, 2, {1, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(UprightPath(1, 2, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(UprightPath(2, 1, {0, 1}), std::invalid_argument);
}

TEST_CASE("path energy sums the visited increments") {
  const auto f = tiny_field();
  CHECK(energy(f, UprightPath(1, 2, {0, 1, 2})) == 6.0);  // (2-0) + (3-(-1))
  CHECK(energy(f, UprightPath(1, 2, {0, 0, 2})) == 3.0);  // line 1 skipped at 0
  CHECK(energy(f, UprightPath(1, 2, {0, 2, 2})) == 1.0);  // line 2 skipped at end
  CHECK(energy(f, UprightPath(1, 1, {0, 2})) == 1.0);
  CHECK(energy(f, UprightPath(2, 2, {0, 1})) == -1.0);
  CHECK_THROWS_AS(energy(f, UprightPath(1, 3, {0, 1, 1, 2})), std::invalid_argument);
  CHECK_THROWS_AS(energy(f, UprightPath(1, 1, {0, 5})), std::invalid_argument);
}

TEST_CASE("disjoint tuples enforce windows, ordering, and transitions") {
  Matrix<Index> good(2, 3);
  good << 1, 1, 2, 2, 3, 3;
  CHECK_NOTHROW(DisjointTuple(3, 2, good));

  Matrix<Index> out_of_window(2, 1);
  out_of_window << 3, 4;  // row 0 must stay within [1, n-ell+1] = [1, 2]
  CHECK_THROWS_AS(DisjointTuple(3, 2, out_of_window), std::invalid_argument);

  Matrix<Index> unordered(2, 1);
  unordered << 2, 2;
  CHECK_THROWS_AS(DisjointTuple(3, 2, unordered), std::invalid_argument);

  Matrix<Index> skip(2, 2);
  skip << 1, 1, 2, 4;  // row 1 drops two lines at once
  CHECK_THROWS_AS(DisjointTuple(4, 2, skip), std::invalid_argument);

  const auto f = tiny_field();
  Matrix<Index> occ(1, 2);
  occ << 1, 2;
  CHECK(tuple_energy(f, DisjointTuple(2, 1, occ)) == 6.0);
  Matrix<Index> both(2, 2);
  both << 1, 1, 2, 2;
  // both lines over both cells: full increments 1 + 3
  CHECK(tuple_energy(f, DisjointTuple(2, 2, both)) == 4.0);
}

TEST_CASE("maximal energy on the tiny field is exact") {
  const auto f = tiny_field();
  const auto prof1 = max_energy_profile(f, 1);
  CHECK(prof1[0] == 0.0);
  CHECK(prof1[1] == 2.0);
  CHECK(prof1[2] == 6.0);
  CHECK(max_energy(f, 1, 1.0) == 6.0);
  CHECK(max_energy(f, 2, 1.0) == 4.0);
  CHECK_THROWS_AS(max_energy(f, 1, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(max_energy_profile(f, 3), std::invalid_argument);
}

TEST_CASE("dynamic program equals brute-force enumeration on micro-instances") {
  RngStream rng(21, 1);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + static_cast<Index>(rng.next_u64() % 4);
    const Index ell = 1 + static_cast<Index>(rng.next_u64() % n);
    const Index cells = 1 + static_cast<Index>(rng.next_u64() % 6);
    const auto f = random_field(n, cells, rng);
    const auto prof = max_energy_profile(f, ell);
    for (Index c = 1; c <= cells; ++c) {
      CHECK(prof[c] == oracle::brute_max_energy(f, ell, c));  // bit-exact
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("line ensemble rows partial-sum back to the energy profiles") {
  RngStream rng(22, 1);
  const TimeGrid<double> g(0.0, 3.0, 24);
  const auto f = sample_brownian_field(3, g, rng);
  const auto ens = line_ensemble(f, 3);
  REQUIRE(ens.values.rows() == 3);
  Vector<double> partial = Vector<double>::Zero(g.points());
  for (Index ell = 1; ell <= 3; ++ell) {
    partial += ens.values.row(ell - 1).transpose();
    const auto prof = max_energy_profile(f, ell);
    for (Index j = 0; j <= g.steps; ++j)
      CHECK(partial[j] == doctest::Approx(prof[j]).epsilon(1e-12));
  }
}

TEST_CASE("edge scaling maps and their structural identities") {
  CHECK(scaled_value(10.7, 5, 0.0) ==
        doctest::Approx(0.28946298794000963).epsilon(1e-14));
  CHECK(scaled_time(5, 0.0) == 5.0);
  CHECK(scaled_domain_left<double>(8) ==
        doctest::Approx(-std::cbrt(8.0) / 2.0).epsilon(1e-14));
  for (Index n : {2, 5, 30, 100}) {
    CHECK(check_scaling_structure<double>(n));
    CHECK(std::abs(scaled_time(n, scaled_domain_left<double>(n))) < 1e-9);
  }
  CHECK_THROWS_AS(scaled_value(0.0, 8, -2.0), std::invalid_argument);
}

TEST_CASE("near-geodesic deficit equals the scaled energy gap") {
  RngStream rng(23, 1);
  const Index n = 4, k = 3;
  const TimeGrid<double> g(0.0, 4.0, 64);
  const auto f = sample_brownian_field(n, g, rng);
  const auto ens = line_ensemble(f, k);
  Vector<double> scaled(k);
  for (Index i = 0; i < k; ++i)
    scaled[i] = scaled_value(ens.values(i, g.steps), n, 0.0);
  const double direct = near_geod_deficit(scaled, k);
  const double m1 = max_energy(f, 1, 4.0);
  const double mk = max_energy(f, k, 4.0);
  const double via_energies =
      (static_cast<double>(k) * m1 - mk) / (std::sqrt(2.0) * std::cbrt(4.0));
  CHECK(direct == doctest::Approx(via_energies).epsilon(1e-9));

  Vector<double> two(2);
  two << 1.0, 0.25;
  CHECK(near_geod_deficit(two, 2) == 0.75);
  CHECK_THROWS_AS(near_geod_deficit(two, 3), std::invalid_argument);
  CHECK_THROWS_AS(near_geod_deficit(two, 1), std::invalid_argument);
}
