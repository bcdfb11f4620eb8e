#include <doctest.h>

#include "lineens/mc.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

using namespace lineens;

TEST_CASE("tail estimation is exact in substreams and complements") {
  const RngStream base(61, 1);
  const std::vector<double> taus{0.25, 0.5, 0.75};
  auto one_draw = [](RngStream& rng) { return rng.uniform01(); };
  const auto up = estimate_tail<double>(one_draw, taus, 40000, base, true);

  REQUIRE(up.size() == 3);
  CHECK(std::abs(up[0].estimate - 0.75) < 0.01);
  CHECK(std::abs(up[1].estimate - 0.50) < 0.01);
  CHECK(std::abs(up[2].estimate - 0.25) < 0.01);
  CHECK(up[0].hits >= up[1].hits);
  CHECK(up[1].hits >= up[2].hits);
  for (const auto& r : up) {
    CHECK(r.trials == 40000);
    const double p = static_cast<double>(r.hits) / 40000.0;
    CHECK(r.estimate == p);
    CHECK(r.std_err == std::sqrt(p * (1.0 - p) / 40000.0));
    CHECK(r.ci_low == r.estimate - 1.96 * r.std_err);
    CHECK(r.ci_high == r.estimate + 1.96 * r.std_err);
  }

  // trial t sees substream(base, t) only, so extra draws cannot shift results
  auto noisy_draw = [](RngStream& rng) {
    const double x = rng.uniform01();
    rng.normal(0.0, 1.0);
    rng.normal(0.0, 1.0);
    return x;
  };
  const auto up2 = estimate_tail<double>(noisy_draw, taus, 40000, base, true);
  for (std::size_t j = 0; j < taus.size(); ++j) CHECK(up2[j].hits == up[j].hits);

  // same draws, opposite direction: hit counts complement exactly
  const auto lo = estimate_tail<double>(one_draw, taus, 40000, base, false);
  for (std::size_t j = 0; j < taus.size(); ++j)
    CHECK(up[j].hits + lo[j].hits == 40000);

  CHECK_THROWS_AS(estimate_tail<double>(one_draw, taus, 0, base), std::invalid_argument);
  CHECK_THROWS_AS(estimate_tail<double>(one_draw, {}, 10, base), std::invalid_argument);
  CHECK_THROWS_AS(make_estimate<double>(-1, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_estimate<double>(11, 10), std::invalid_argument);
}

TEST_CASE("ordinary least squares reproduces exact lines") {
  const std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> ys{1.0, 3.0, 5.0, 7.0};
  const auto fit = ols(xs, ys);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(fit.slope_std_err == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(fit.used == 4);

  CHECK_THROWS_AS(ols<double>({1.0}, {2.0}), std::invalid_argument);
  CHECK_THROWS_AS(ols<double>({1.0, 1.0}, {2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(ols<double>({1.0, 2.0}, {2.0}), std::invalid_argument);
}

TEST_CASE("exponent fits recover synthetic power laws to machine precision") {
  const std::vector<double> eps{0.1, 0.2, 0.4, 0.8};
  std::vector<EstimateReport<double>> reports;
  for (double e : eps) {
    EstimateReport<double> r{};
    r.trials = 100000;
    r.hits = 1000;
    r.estimate = 0.7 * e * e * e;
    reports.push_back(r);
  }
  const auto fit = fit_exponent(eps, reports);
  CHECK(fit.slope == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(fit.intercept == doctest::Approx(std::log(0.7)).epsilon(1e-12));
  CHECK(fit.r2 > 1.0 - 1e-12);
  CHECK(fit.used == 4);

  // points backed by too few hits are dropped before fitting
  reports[3].hits = 10;
  const auto filtered = fit_exponent(eps, reports);
  CHECK(filtered.used == 3);
  CHECK(filtered.slope == doctest::Approx(3.0).epsilon(1e-13));

  reports[2].hits = 10;
  CHECK_THROWS_AS(fit_exponent(eps, reports), std::invalid_argument);
  CHECK_THROWS_AS(fit_exponent(std::vector<double>{0.1}, reports),
                  std::invalid_argument);

  std::vector<EstimateReport<double>> bad = reports;
  bad[2].hits = 1000;
  bad[3].hits = 1000;
  const std::vector<double> negeps{-0.1, 0.2, 0.4, 0.8};
  CHECK_THROWS_AS(fit_exponent(negeps, bad), std::invalid_argument);
}

TEST_CASE("half-power fits recover synthetic stretched-exponential tails") {
  const std::vector<double> s{1.0, 1.5, 2.0, 2.5};
  std::vector<EstimateReport<double>> reports;
  for (double v : s) {
    EstimateReport<double> r{};
    r.trials = 100000;
    r.hits = 1000;
    r.estimate = std::exp(-1.7 * std::pow(v, 1.5));
    reports.push_back(r);
  }
  const auto fit = halfpow_fit(s, reports);
  CHECK(fit.slope == doctest::Approx(1.7).epsilon(1e-13));
  CHECK(fit.r2 > 1.0 - 1e-12);

  reports[0].hits = 0;
  reports[1].hits = 0;
  CHECK_THROWS_AS(halfpow_fit(s, reports), std::invalid_argument);
}

TEST_CASE("modulus of continuity scans gridpoint pairs inside the window") {
  const TimeGrid<double> g(0.0, 1.0, 4);
  Vector<double> v(5);
  v << 0.0, 1.0, 0.5, 2.0, 2.0;
  const SampledPath<double> p(g, v);
  CHECK(modulus_of_continuity(p, 0.0, 1.0, 0.25) == 1.5);
  CHECK(modulus_of_continuity(p, 0.0, 1.0, 0.5) == 1.5);
  CHECK(modulus_of_continuity(p, 0.0, 1.0, 1.0) == 2.0);
  CHECK(modulus_of_continuity(p, 0.0, 0.5, 0.25) == 1.0);
  CHECK(modulus_of_continuity(p, 0.5, 1.0, 0.5) == 1.5);

  CHECK_THROWS_AS(modulus_of_continuity(p, 0.5, 0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(modulus_of_continuity(p, -1.0, 1.0, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(modulus_of_continuity(p, 0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(modulus_of_continuity(p, 0.0, 1.0, 2.0), std::invalid_argument);

  ScaledEnsemble<double> ens{5, g, Matrix<double>(2, 5)};
  ens.values.row(0) = v.transpose();
  ens.values.row(1) = Vector<double>::Zero(5).transpose();
  CHECK(modulus_of_continuity(ens, 1, 0.0, 1.0, 0.25) == 1.5);
  CHECK(modulus_of_continuity(ens, 2, 0.0, 1.0, 0.25) == 0.0);
  CHECK_THROWS_AS(modulus_of_continuity(ens, 3, 0.0, 1.0, 0.25),
                  std::invalid_argument);
}

TEST_CASE("parabola algebra: tangent-difference identity and recentring") {
  CHECK(parabola_q(1.0) == doctest::Approx(0.7071067811865475).epsilon(1e-15));
  CHECK(parabola_q(0.0) == 0.0);
  CHECK(parabola_l(0.3, 0.0) == 0.0);

  RngStream rng(62, 1);
  for (int i = 0; i < 50; ++i) {
    const double x = rng.normal(0.0, 2.0);
    const double y = rng.normal(0.0, 2.0);
    CHECK(parabola_q(x) + parabola_l(x, y) ==
          doctest::Approx(parabola_q(x - y)).epsilon(1e-12));
  }

  const TimeGrid<double> xg(-0.5, 0.5, 4);
  ScaledEnsemble<double> ens{30, xg, Matrix<double>(1, 5)};
  for (Index j = 0; j < 5; ++j) ens.values(0, j) = 0.1 * j;

  const auto same = parabolic_shift(ens, 0.0);
  CHECK(same.xgrid.a == ens.xgrid.a);
  CHECK(same.values == ens.values);

  const auto moved = parabolic_shift(ens, 0.4);
  CHECK(moved.xgrid.a == doctest::Approx(-0.9).epsilon(1e-15));
  CHECK(moved.xgrid.steps == 4);
  for (Index j = 0; j < 5; ++j)
    CHECK(moved.values(0, j) == ens.values(0, j) - parabola_l(xg.point(j), 0.4));

  // n = 30 has scaled domain left near -1.55; shifting by 2 leaves it
  CHECK_THROWS_AS(parabolic_shift(ens, 2.0), std::invalid_argument);
}

TEST_CASE("kolmogorov-smirnov statistic and critical value") {
  CHECK(ks_statistic<double>({1.0, 3.0}, {2.0, 4.0}) == 0.5);
  CHECK(ks_statistic<double>({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(ks_statistic<double>({0.0}, {5.0}) == 1.0);
  CHECK_THROWS_AS(ks_statistic<double>({}, {1.0}), std::invalid_argument);

  CHECK(ks_critical<double>(10000, 10000) ==
        doctest::Approx(0.019206434390589007).epsilon(1e-15));
  CHECK(ks_critical<double>(100, 100) > ks_critical<double>(1000, 1000));
  CHECK_THROWS_AS(ks_critical<double>(0, 5), std::invalid_argument);
}

TEST_CASE("named bounds evaluate their catalogued closed forms") {
  using Params = std::map<std::string, double>;
  CHECK(paper_bound<double>("avoiding-dip", Params{{"k", 1.0}, {"r", 1.0}}) ==
        doctest::Approx(0.06931411375765116).epsilon(1e-14));
  CHECK(paper_bound<double>("avoiding-dip", Params{{"k", 2.0}, {"r", 0.5}}) ==
        doctest::Approx(5.26871519285615).epsilon(1e-14));
  // decreasing in the dip depth r, increasing in the number of curves k
  CHECK(paper_bound<double>("avoiding-dip", Params{{"k", 1.0}, {"r", 2.0}}) <
        paper_bound<double>("avoiding-dip", Params{{"k", 1.0}, {"r", 1.0}}));
  CHECK(paper_bound<double>("avoiding-dip", Params{{"k", 3.0}, {"r", 1.0}}) >
        paper_bound<double>("avoiding-dip", Params{{"k", 2.0}, {"r", 1.0}}));

  CHECK(paper_bound<double>("gue-top-lower-tail",
                            Params{{"C", 2.0}, {"c", 0.5}, {"n", 10.0}, {"eps", 0.25}}) ==
        doctest::Approx(1.0705228570379806).epsilon(1e-14));
  CHECK(paper_bound<double>("gue-top-upper-tail",
                            Params{{"C", 2.0}, {"c", 0.5}, {"n", 10.0}, {"t", 0.25}}) ==
        doctest::Approx(1.0705228570379806).epsilon(1e-14));
  CHECK(paper_bound<double>("gue-kth-lower-tail",
                            Params{{"H", 2.0}, {"h", 0.5}, {"n", 10.0}, {"t", 0.25}}) ==
        doctest::Approx(1.0705228570379806).epsilon(1e-14));

  CHECK(paper_bound<double>("bridge-closeness", Params{{"k", 2.0}, {"phi", 0.05}}) ==
        doctest::Approx(649855334.657674).epsilon(1e-12));
  CHECK(paper_bound<double>("bridge-closeness", Params{{"k", 2.0}, {"phi", 0.05}}) <
        paper_bound<double>("bridge-closeness", Params{{"k", 2.0}, {"phi", 0.1}}));

  CHECK(paper_bound<double>("modulus-decay", Params{{"eps", 0.5}, {"K", 192.0}}) == 0.25);
  CHECK(paper_bound<double>("bridge-modulus", Params{{"R", 24.0}, {"delta", 0.5}}) ==
        doctest::Approx(1.103638323514327).epsilon(1e-14));
  CHECK(paper_bound<double>("lower-curve-running-min",
                            Params{{"k", 2.0}, {"C", 1.0}, {"t", 0.5}, {"ck", 1.0},
                                   {"r", 4.0}}) ==
        doctest::Approx(0.033546262790251184).epsilon(1e-14));

  CHECK_THROWS_AS(paper_bound<double>("no-such-bound", Params{}), std::invalid_argument);
  CHECK_THROWS_AS(paper_bound<double>("avoiding-dip", Params{{"k", 1.0}}),
                  std::invalid_argument);
}

TEST_CASE("bridge comparison against a bridge-law sampler yields unit ratios") {
  const RngStream base(63, 1);
  const Index steps = 64;
  auto bridge_sampler = [steps](RngStream& rng) {
    const TimeGrid<double> g(0.3, 1.3, steps);
    return sample_brownian_bridge(g, 0.0, 0.0, rng);
  };
  const std::vector<double> levels{0.8, 1.0};
  const auto cmp = bridge_compare_tail<double>(bridge_sampler, 1.0, levels, 20000, base);

  REQUIRE(cmp.ratio.size() == 2);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    CHECK(std::isfinite(cmp.ratio[i]));
    CHECK(cmp.ratio[i] > 0.7);
    CHECK(cmp.ratio[i] < 1.4);
    // discrete two-sided sup tail sits inside the analytic bracket
    CHECK(cmp.bridge[i].estimate >= cmp.bracket_low[i]);
    CHECK(cmp.bridge[i].estimate <= cmp.bracket_high[i]);
    CHECK(cmp.bracket_low[i] ==
          doctest::Approx(std::exp(-2.0 * levels[i] * levels[i])).epsilon(1e-15));
    CHECK(cmp.bracket_high[i] == 2.0 * cmp.bracket_low[i]);
  }

  auto narrow = [steps](RngStream& rng) {
    const TimeGrid<double> g(0.0, 0.9, steps);
    return sample_brownian_bridge(g, 0.0, 0.0, rng);
  };
  CHECK_THROWS_AS(
      bridge_compare_tail<double>(narrow, 1.0, levels, 100, base),
      std::invalid_argument);
}
