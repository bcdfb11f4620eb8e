#include <doctest.h>

#include "lineens/bridges.hpp"

#include <cmath>
#include <vector>

using namespace lineens;

namespace {

// Naive unscaled determinant ratio det[h(x_i,y_j)] / prod h(x_i,y_i) in long
// double, h the centered Gaussian kernel of variance rho. Valid as an oracle
// only for well-conditioned small-k inputs.
long double naive_avoidance(const Vector<double>& x, const Vector<double>& y,
                            double rho) {
  const Index k = x.size();
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> m(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) {
      const long double d = static_cast<long double>(x[i]) - y[j];
      m(i, j) = std::exp(-d * d / (2.0L * rho));
    }
  long double diag = 1.0L;
  for (Index i = 0; i < k; ++i) diag *= m(i, i);
  return m.determinant() / diag;
}

SampledPath<double> flat_path(const TimeGrid<double>& g, double level) {
  Vector<double> v = Vector<double>::Constant(g.points(), level);
  return SampledPath<double>(g, v);
}

}  // namespace

TEST_CASE("decreasing lists enforce their monotonicity modes") {
  Vector<double> strict(3), ties(3), rising(3);
  strict << 2.0, 1.0, 0.0;
  ties << 2.0, 2.0, 0.0;
  rising << 0.0, 1.0, 2.0;
  CHECK(DecreasingList<double>::strict_list(strict).strict);
  CHECK_THROWS_AS(DecreasingList<double>::strict_list(ties), std::invalid_argument);
  CHECK(!DecreasingList<double>::relaxed_list(ties).strict);
  CHECK_THROWS_AS(DecreasingList<double>::relaxed_list(rising), std::invalid_argument);
}

TEST_CASE("no-touch detects ordering and floor violations at gridpoints") {
  const TimeGrid<double> g(0.0, 1.0, 4);
  std::vector<SampledPath<double>> paths{flat_path(g, 1.0), flat_path(g, 0.0)};
  CHECK(no_touch(paths, FloorCurve<double>::none()));

  paths[1].values[2] = 1.0;  // tie at one gridpoint
  CHECK(!no_touch(paths, FloorCurve<double>::none()));
  // the tie sits at t=0.5; a window clear of it by more than half a cell passes
  CHECK(no_touch(paths, FloorCurve<double>::none(), 0.7, 1.0));
  CHECK(!no_touch(paths, FloorCurve<double>::none(), 0.6, 1.0));
  paths[1].values[2] = 0.0;

  const FloorCurve<double> fl = FloorCurve<double>::of(flat_path(g, -0.5));
  CHECK(no_touch(paths, fl));
  paths[1].values[3] = -0.5;  // touches the floor
  CHECK(!no_touch(paths, fl));

  const TimeGrid<double> other(0.0, 1.0, 8);
  std::vector<SampledPath<double>> mixed{flat_path(g, 1.0), flat_path(other, 0.0)};
  CHECK_THROWS_AS(no_touch(mixed, FloorCurve<double>::none()), std::invalid_argument);
}

TEST_CASE("avoidance determinant: closed form at k=2 and naive oracle at k=3") {
  Vector<double> x2(2), y2(2);
  x2 << 0.5, -0.5;
  y2 << 0.5, -0.5;
  const auto sym = km_avoidance(x2, y2, 1.0);
  CHECK(sym.value == doctest::Approx(0.6321205588285577).epsilon(1e-14));
  CHECK(sym.log_value == doctest::Approx(std::log(sym.value)).epsilon(1e-12));
  CHECK(!sym.cancellation_warning);

  RngStream rng(11, 1);
  for (int t = 0; t < 25; ++t) {
    Vector<double> x(2), y(2);
    x[0] = rng.normal();
    x[1] = x[0] - 0.2 - rng.uniform01();
    y[0] = rng.normal();
    y[1] = y[0] - 0.2 - rng.uniform01();
    const double rho = 0.4 + rng.uniform01();
    const double closed = 1.0 - std::exp(-(x[0] - x[1]) * (y[0] - y[1]) / rho);
    CHECK(km_avoidance(x, y, rho).value == doctest::Approx(closed).epsilon(1e-12));
  }

  for (int t = 0; t < 25; ++t) {
    Vector<double> x(3), y(3);
    x[0] = rng.normal();
    x[1] = x[0] - 0.3 - rng.uniform01();
    x[2] = x[1] - 0.3 - rng.uniform01();
    y[0] = rng.normal();
    y[1] = y[0] - 0.3 - rng.uniform01();
    y[2] = y[1] - 0.3 - rng.uniform01();
    const double rho = 0.5 + rng.uniform01();
    const auto got = km_avoidance(x, y, rho);
    CHECK(got.value ==
          doctest::Approx(static_cast<double>(naive_avoidance(x, y, rho)))
              .epsilon(1e-10));
  }

  // k=1 is trivially 1; shifting all endpoints by a constant changes nothing
  Vector<double> x1(1), y1(1);
  x1 << 0.3;
  y1 << -0.8;
  CHECK(km_avoidance(x1, y1, 2.0).value == 1.0);
  Vector<double> xs = x2.array() + 7.5;
  Vector<double> ys = y2.array() + 7.5;
  CHECK(km_avoidance(xs, ys, 1.0).value == doctest::Approx(sym.value).epsilon(1e-12));

  CHECK_THROWS_AS(km_avoidance(x2, y2, 0.0), std::invalid_argument);
  Vector<double> bad(2);
  bad << 0.0, 0.0;
  CHECK_THROWS_AS(km_avoidance(bad, y2, 1.0), std::invalid_argument);
}

TEST_CASE("near-degenerate entrance data raises the cancellation flag") {
  Vector<double> x(3), y(3);
  const double eta = 1e-7;
  x << 2 * eta, eta, 0.0;
  y << 1.0, 0.0, -1.0;
  const auto res = km_avoidance(x, y, 1.0);
  CHECK(res.cancellation_warning);
  CHECK(res.value >= 0.0);
  CHECK(res.value < 1e-10);
}

TEST_CASE("vandermonde expansion brackets the determinant") {
  Vector<double> y(2);
  y << 0.5, -0.5;
  const double eta = 0.01, rho = 1.0, K = 1.0;
  const auto br = vandermonde_expansion(eta, rho, y, K);
  CHECK(br.main == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(br.err_low == doctest::Approx(-0.08).epsilon(1e-12));
  CHECK(br.err_high ==
        doctest::Approx((std::exp(2.0) - 1.0) * 0.04).epsilon(1e-12));

  Vector<double> x(2);
  x << eta, 0.0;
  const double exact = km_avoidance(x, y, rho).value;
  CHECK(br.lower <= exact);
  CHECK(exact <= br.upper);

  Vector<double> y3(3);
  y3 << 0.6, 0.1, -0.7;
  const double eta3 = 0.004;
  const auto br3 = vandermonde_expansion(eta3, rho, y3, K);
  Vector<double> x3(3);
  x3 << 2 * eta3, eta3, 0.0;
  const double exact3 = km_avoidance(x3, y3, rho).value;
  CHECK(br3.lower <= exact3);
  CHECK(exact3 <= br3.upper);

  // eta must sit strictly inside (0, rho / (k^2 K))
  CHECK_THROWS_AS(vandermonde_expansion(0.3, rho, y, K), std::invalid_argument);
  CHECK_THROWS_AS(vandermonde_expansion(0.0, rho, y, K), std::invalid_argument);
}

TEST_CASE("sup crossing probability and per-cell identities") {
  CHECK(sup_crossing_prob(0.0, 1.0, 0.5) ==
        doctest::Approx(0.6065306597126334).epsilon(1e-14));
  CHECK(sup_crossing_prob(0.0, 1.0, 0.0) == 1.0);
  CHECK(sup_crossing_prob(0.0, 2.0, 1.0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(sup_crossing_prob(0.0, 1.0, 0.4) > sup_crossing_prob(0.0, 1.0, 0.9));

  CHECK(cell_crossing_prob(0.0, 0.0, 1.0, 2.0, 0.5) ==
        doctest::Approx(std::exp(-8.0)).epsilon(1e-14));
  CHECK(cell_crossing_prob(1.0, 0.0, 1.0, 2.0, 0.5) == 1.0);  // endpoint touch
  CHECK(cell_crossing_prob(0.0, 0.0, 1.0, 1.0, 1.0, 2.0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("cell minimum sampler follows the inversion law") {
  RngStream rng(12, 1);
  const double v0 = 1.0, v1 = 0.6, h = 0.5, diff = 1.0;
  const int trials = 40000;
  int below0 = 0, below_neg = 0;
  for (int t = 0; t < trials; ++t) {
    const double m = sample_cell_min(v0, v1, h, diff, rng);
    REQUIRE(m <= std::min(v0, v1));
    if (m < 0.0) ++below0;
    if (m < -0.25) ++below_neg;
  }
  // P(min < m) = exp(-2 (v0-m)(v1-m) / (diff h))
  auto law = [&](double m) { return std::exp(-2.0 * (v0 - m) * (v1 - m) / (diff * h)); };
  const double p0 = law(0.0), pn = law(-0.25);
  const double se0 = std::sqrt(p0 * (1 - p0) / trials);
  const double sen = std::sqrt(pn * (1 - pn) / trials);
  CHECK(std::abs(below0 / static_cast<double>(trials) - p0) < 4.0 * se0);
  CHECK(std::abs(below_neg / static_cast<double>(trials) - pn) < 4.0 * sen);
}

TEST_CASE("avoiding sampler keeps boundary data and ordering") {
  Vector<double> x(3), y(3);
  x << 1.5, 0.0, -1.5;
  y << 1.2, -0.1, -1.6;
  const TimeGrid<double> g(0.0, 1.0, 16);
  const BridgeEnsembleSpec<double> spec(3, 0.0, 1.0, x, y,
                                        FloorCurve<double>::of(flat_path(g, -3.0)));
  RngStream rng(13, 1);
  for (int t = 0; t < 20; ++t) {
    const auto s = sample_avoiding(spec, 16, rng);
    REQUIRE(s.paths.size() == 3);
    CHECK(s.attempts >= 1);
    for (Index i = 0; i < 3; ++i) {
      CHECK(s.paths[i][0] == x[i]);
      CHECK(s.paths[i][16] == y[i]);
    }
    CHECK(no_touch(s.paths, spec.floor));
  }

  // impossible data exhausts the attempt budget
  SampleOptions opt;
  opt.max_attempts = 50;
  Vector<double> xx(2), yy(2);
  xx << 1e-9, 0.0;
  yy << 1e-9, 0.0;
  const BridgeEnsembleSpec<double> tight(2, 0.0, 1.0, xx, yy);
  CHECK_THROWS_AS(sample_avoiding(tight, 16, rng, opt), rejection_exhausted);

  Vector<double> under(3);
  under << 1.0, 0.0, -4.0;
  CHECK_THROWS_AS(
      BridgeEnsembleSpec<double>(3, 0.0, 1.0, under, y,
                                 FloorCurve<double>::of(flat_path(g, -3.0))),
      std::invalid_argument);
}

TEST_CASE("acceptance rate with cell correction matches the determinant") {
  // two bridges, unit separation: continuous avoidance probability 1 - e^{-1}
  Vector<double> x(2), y(2);
  x << 1.0, 0.0;
  y << 1.0, 0.0;
  const double p = km_avoidance(x, y, 1.0).value;
  const TimeGrid<double> g(0.0, 1.0, 64);
  RngStream rng(14, 1);
  const int trials = 20000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<SampledPath<double>> paths;
    paths.push_back(sample_brownian_bridge(g, x[0], y[0], rng));
    paths.push_back(sample_brownian_bridge(g, x[1], y[1], rng));
    if (detail::accept_avoiding(paths, FloorCurve<double>::none(), true, rng)) ++hits;
  }
  const double est = hits / static_cast<double>(trials);
  const double se = std::sqrt(p * (1 - p) / trials);
  CHECK(std::abs(est - p) < 4.0 * se);
}

TEST_CASE("gibbs resampling rewrites only the open block") {
  Vector<double> x(3), y(3);
  x << 2.0, 0.0, -2.0;
  y << 2.0, 0.0, -2.0;
  const BridgeEnsembleSpec<double> spec(3, -1.0, 1.0, x, y);
  RngStream rng(15, 1);
  auto s = sample_avoiding(spec, 16, rng);
  const std::vector<SampledPath<double>> before = s.paths;

  const long long attempts = gibbs_resample(s.paths, 2, -0.5, 0.5, rng);
  CHECK(attempts >= 1);
  const TimeGrid<double>& g = s.paths[0].grid;
  const Index i0 = *g.index_of(-0.5);
  const Index i1 = *g.index_of(0.5);
  for (std::size_t p = 0; p < 3; ++p)
    for (Index j = 0; j <= 16; ++j) {
      if (j <= i0 || j >= i1 || p == 2) {
        CHECK(s.paths[p][j] == before[p][j]);  // untouched values survive bit-exactly
      }
    }
  bool changed = false;
  for (std::size_t p = 0; p < 2; ++p)
    for (Index j = i0 + 1; j < i1; ++j) changed = changed || s.paths[p][j] != before[p][j];
  CHECK(changed);
  // resampled block still avoids: curves ordered, above the held third curve
  CHECK(no_touch(s.paths, FloorCurve<double>::none()));

  CHECK_THROWS_AS(gibbs_resample(s.paths, 2, -0.51, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(gibbs_resample(s.paths, 4, -0.5, 0.5, rng), std::invalid_argument);
}
