#pragma once

// Monte Carlo lab: tail estimation with per-trial substreams, exponent fits,
// modulus of continuity, parabolic shift algebra, bridge-comparison tails,
// Kolmogorov-Smirnov helpers, and the catalogue of named closed-form bounds.

#include "lineens/bridges.hpp"
#include "lineens/core.hpp"
#include "lineens/lpp.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace lineens {

// ---------------------------------------------------------------------------
// Estimates.
// ---------------------------------------------------------------------------

template <class S = double>
struct EstimateReport {
  long long trials;
  long long hits;
  S estimate;  // hits / trials
  S std_err;   // sqrt(p (1-p) / trials)
  S ci_low;    // estimate -/+ 1.96 std_err
  S ci_high;
};

template <class S>
EstimateReport<S> make_estimate(long long hits, long long trials) {
  require(trials >= 1, "make_estimate: need at least one trial");
  require(hits >= 0 && hits <= trials, "make_estimate: hits out of range");
  const S p = static_cast<S>(hits) / static_cast<S>(trials);
  const S se = std::sqrt(p * (S(1) - p) / static_cast<S>(trials));
  return EstimateReport<S>{trials, hits, p, se, p - S(1.96) * se, p + S(1.96) * se};
}

// Estimates P(X >= tau) (or <= with upper=false) for every threshold from the
// same draws. Trial t consumes substream(base, t) only, so estimates are
// reproducible and insensitive to sampler draw counts.
template <class S, class Sampler>
std::vector<EstimateReport<S>> estimate_tail(Sampler&& sampler,
                                             const std::vector<S>& thresholds,
                                             long long trials, const RngStream& base,
                                             bool upper = true) {
  require(trials >= 1, "estimate_tail: need at least one trial");
  require(!thresholds.empty(), "estimate_tail: need at least one threshold");
  std::vector<long long> hits(thresholds.size(), 0);
  for (long long t = 0; t < trials; ++t) {
    RngStream sub = substream(base, static_cast<std::uint64_t>(t));
    const S x = sampler(sub);
    for (std::size_t j = 0; j < thresholds.size(); ++j)
      if (upper ? (x >= thresholds[j]) : (x <= thresholds[j])) ++hits[j];
  }
  std::vector<EstimateReport<S>> out;
  out.reserve(thresholds.size());
  for (long long h : hits) out.push_back(make_estimate<S>(h, trials));
  return out;
}

// ---------------------------------------------------------------------------
// Least squares.
// ---------------------------------------------------------------------------

template <class S = double>
struct LinearFit {
  S slope;
  S intercept;
  S slope_std_err;
  S r2;
  Index used;
};

template <class S>
LinearFit<S> ols(const std::vector<S>& xs, const std::vector<S>& ys) {
  const Index n = static_cast<Index>(xs.size());
  require(n >= 2 && ys.size() == xs.size(), "ols: need >= 2 matching points");
  S mx = S(0), my = S(0);
  for (Index i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<S>(n);
  my /= static_cast<S>(n);
  S sxx = S(0), sxy = S(0), syy = S(0);
  for (Index i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > S(0), "ols: abscissae are all equal");
  LinearFit<S> fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  S rss = S(0);
  for (Index i = 0; i < n; ++i) {
    const S resid = ys[i] - fit.intercept - fit.slope * xs[i];
    rss += resid * resid;
  }
  fit.r2 = syy > S(0) ? S(1) - rss / syy : S(1);
  fit.slope_std_err = n > 2 ? std::sqrt(rss / static_cast<S>(n - 2) / sxx) : S(0);
  fit.used = n;
  return fit;
}

// Power-law fit of tail estimates: regresses log p-hat on log eps after
// dropping estimates backed by fewer than min_hits hits. Fewer than three
// surviving points is an error suggesting more trials or larger thresholds.
template <class S>
LinearFit<S> fit_exponent(const std::vector<S>& eps,
                          const std::vector<EstimateReport<S>>& reports,
                          long long min_hits = 25) {
  require(eps.size() == reports.size(), "fit_exponent: size mismatch");
  std::vector<S> xs, ys;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (reports[i].hits < min_hits) continue;
    require(eps[i] > S(0), "fit_exponent: thresholds must be positive");
    xs.push_back(std::log(eps[i]));
    ys.push_back(std::log(reports[i].estimate));
  }
  require(static_cast<Index>(xs.size()) >= 3,
          "fit_exponent: fewer than 3 thresholds have enough hits; "
          "increase trials or enlarge the thresholds");
  return ols(xs, ys);
}

// Fit of -log p-hat against s^{3/2}, for tail-shape checks.
template <class S>
LinearFit<S> halfpow_fit(const std::vector<S>& s,
                         const std::vector<EstimateReport<S>>& reports,
                         long long min_hits = 25) {
  require(s.size() == reports.size(), "halfpow_fit: size mismatch");
  std::vector<S> xs, ys;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (reports[i].hits < min_hits) continue;
    xs.push_back(std::pow(s[i], S(1.5)));
    ys.push_back(-std::log(reports[i].estimate));
  }
  require(static_cast<Index>(xs.size()) >= 3,
          "halfpow_fit: fewer than 3 levels have enough hits; "
          "increase trials or lower the levels");
  return ols(xs, ys);
}

// ---------------------------------------------------------------------------
// Modulus of continuity.
// ---------------------------------------------------------------------------

// Largest |f(s) - f(t)| over gridpoint pairs of [a,b] with |s - t| <= delta.
template <class S>
S modulus_of_continuity(const SampledPath<S>& path, S a, S b, S delta) {
  const TimeGrid<S>& g = path.grid;
  require(a < b, "modulus_of_continuity: need a < b");
  require(a >= g.a - g.h() / S(2) && b <= g.b + g.h() / S(2),
          "modulus_of_continuity: window outside the grid");
  require(delta > S(0) && delta <= b - a,
          "modulus_of_continuity: need 0 < delta <= b - a");
  S best = S(0);
  for (Index i = 0; i <= g.steps; ++i) {
    const S ti = g.point(i);
    if (ti < a || ti > b) continue;
    for (Index j = i + 1; j <= g.steps; ++j) {
      const S tj = g.point(j);
      if (tj > b || tj - ti > delta) break;
      best = std::max(best, std::abs(path.values[j] - path.values[i]));
    }
  }
  return best;
}

template <class S>
S modulus_of_continuity(const ScaledEnsemble<S>& ens, Index k, S a, S b, S delta) {
  require(k >= 1 && k <= ens.values.rows(), "modulus_of_continuity: curve out of range");
  SampledPath<S> row(ens.xgrid, ens.values.row(k - 1).transpose());
  return modulus_of_continuity(row, a, b, delta);
}

// ---------------------------------------------------------------------------
// Parabola algebra.
// ---------------------------------------------------------------------------

// The reference parabola and its tangent-difference line:
//   q(x) = 2^{-1/2} x^2,   l(x, y) = -2^{-1/2} y^2 - 2^{1/2} y (x - y),
// satisfying q(x) = -l(x,y) + q(x - y) for all x, y.
template <class S>
S parabola_q(S x) {
  return x * x / std::sqrt(S(2));
}

template <class S>
S parabola_l(S x, S y) {
  return -y * y / std::sqrt(S(2)) - std::sqrt(S(2)) * y * (x - y);
}

// Recentring of a scaled ensemble at y: curve values become
// L(i, x + y) - l(x + y, y) on the shifted coordinate grid. Errors if the
// shifted grid would leave the scaled domain.
template <class S>
ScaledEnsemble<S> parabolic_shift(const ScaledEnsemble<S>& ens, S y) {
  TimeGrid<S> shifted(ens.xgrid.a - y, ens.xgrid.b - y, ens.xgrid.steps);
  require(shifted.a >= scaled_domain_left<S>(ens.n),
          "parabolic_shift: shifted grid leaves the scaled domain");
  Matrix<S> v(ens.values.rows(), ens.values.cols());
  for (Index j = 0; j <= ens.xgrid.steps; ++j) {
    const S xy = ens.xgrid.point(j);
    for (Index i = 0; i < ens.values.rows(); ++i)
      v(i, j) = ens.values(i, j) - parabola_l(xy, y);
  }
  return ScaledEnsemble<S>{ens.n, shifted, std::move(v)};
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov.
// ---------------------------------------------------------------------------

template <class S>
S ks_statistic(std::vector<S> a, std::vector<S> b) {
  require(!a.empty() && !b.empty(), "ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const S na = static_cast<S>(a.size());
  const S nb = static_cast<S>(b.size());
  std::size_t i = 0, j = 0;
  S best = S(0);
  while (i < a.size() && j < b.size()) {
    // Step past every copy of the smaller value so ties move both CDFs at
    // once before the gap is measured.
    const S v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    const S d = std::abs(static_cast<S>(i) / na - static_cast<S>(j) / nb);
    best = std::max(best, d);
  }
  return best;
}

// Two-sample critical value at level 0.05.
template <class S>
S ks_critical(std::size_t m, std::size_t n) {
  require(m >= 1 && n >= 1, "ks_critical: empty sample");
  return S(1.3581) * std::sqrt((static_cast<S>(m) + static_cast<S>(n)) /
                               (static_cast<S>(m) * static_cast<S>(n)));
}

// ---------------------------------------------------------------------------
// Bridge comparison.
// ---------------------------------------------------------------------------

template <class S = double>
struct BridgeCompareResult {
  std::vector<S> levels;
  std::vector<EstimateReport<S>> ensemble;
  std::vector<EstimateReport<S>> bridge;
  std::vector<S> ratio;          // ensemble estimate / bridge estimate
  std::vector<S> bracket_low;    // exp(-2 s^2): exact one-sided bridge tail
  std::vector<S> bracket_high;   // 2 exp(-2 s^2): two-sided union bound
};

// Compares the tail of sup |standardized curve| / sqrt(d) over a window of
// width d between an ensemble top curve and a matched-grid Brownian bridge.
// The sampler must return the curve on a grid spanning a width-d window.
template <class S, class Sampler>
BridgeCompareResult<S> bridge_compare_tail(Sampler&& sampler, S d,
                                           const std::vector<S>& levels,
                                           long long trials, const RngStream& base) {
  require(d > S(0), "bridge_compare_tail: need d > 0");
  auto ens_stat = [&](RngStream& rng) {
    SampledPath<S> curve = sampler(rng);
    require(std::abs((curve.grid.b - curve.grid.a) - d) <=
                S(1e-9) * std::max(S(1), d),
            "bridge_compare_tail: sampler window width mismatch");
    const SampledPath<S> std_curve = affine_to_standard(curve);
    return std_curve.values.cwiseAbs().maxCoeff() / std::sqrt(d);
  };
  std::vector<EstimateReport<S>> ens =
      estimate_tail<S>(ens_stat, levels, trials, base, true);

  // Matched-grid baseline; steps taken from one sampler draw.
  RngStream probe = substream(base, 0);
  const Index steps = sampler(probe).grid.steps;
  const RngStream bridge_base = substream(base, 0x9e3779b97f4a7c15ull);
  auto bridge_stat = [&](RngStream& rng) {
    const TimeGrid<S> g(S(0), d, steps);
    const SampledPath<S> path = sample_brownian_bridge(g, S(0), S(0), rng);
    return path.values.cwiseAbs().maxCoeff() / std::sqrt(d);
  };
  std::vector<EstimateReport<S>> bri =
      estimate_tail<S>(bridge_stat, levels, trials, bridge_base, true);

  BridgeCompareResult<S> out;
  out.levels = levels;
  out.ensemble = ens;
  out.bridge = bri;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out.ratio.push_back(bri[i].estimate > S(0)
                            ? ens[i].estimate / bri[i].estimate
                            : std::numeric_limits<S>::infinity());
    out.bracket_low.push_back(std::exp(-S(2) * levels[i] * levels[i]));
    out.bracket_high.push_back(S(2) * std::exp(-S(2) * levels[i] * levels[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Named closed-form bounds.
// ---------------------------------------------------------------------------

// Evaluates a catalogued bound by name; existential constants are supplied by
// the caller through params. Unknown names and missing parameters error.
template <class S>
S paper_bound(const std::string& name, const std::map<std::string, S>& params) {
  auto get = [&](const char* key) {
    auto it = params.find(key);
    require(it != params.end(), "paper_bound: missing parameter");
    return it->second;
  };
  if (name == "avoiding-dip") {
    const S k = get("k");
    const S r = get("r");
    return std::pow(S(1) - S(2) * std::exp(S(-1)), -k) * std::exp(-S(4) * r * r);
  }
  if (name == "gue-top-lower-tail") {
    return get("C") * std::exp(-get("c") * get("n") * std::pow(get("eps"), S(1.5)));
  }
  if (name == "gue-top-upper-tail") {
    return get("C") * std::exp(-get("c") * get("n") * std::pow(get("t"), S(1.5)));
  }
  if (name == "gue-kth-lower-tail") {
    return get("H") * std::exp(-get("h") * get("n") * std::pow(get("t"), S(1.5)));
  }
  if (name == "bridge-closeness") {
    const S k = get("k");
    const S phi = get("phi");
    const S k2 = k * k;
    return S(4258) * std::pow(S(36), k2) * std::pow(k2 - S(1), k2) *
           std::pow(phi, k2 - S(1)) *
           std::pow(std::log(S(1) / phi), k2 / S(2));
  }
  if (name == "modulus-decay") {
    return std::pow(get("eps"), get("K") * get("K") / S(18432));
  }
  if (name == "bridge-modulus") {
    const S r = get("R");
    return S(3) * std::exp(-r * r / (get("delta") * S(1152)));
  }
  if (name == "lower-curve-running-min") {
    const S k = get("k");
    const S ek = std::pow(S(20), k - S(1)) * std::pow(S(2), k * (k - S(1)) / S(2)) *
                 S(10) * get("C");
    return std::pow(get("t"), k) * ek *
           std::exp(-get("ck") * std::pow(get("r"), S(1.5)));
  }
  throw std::invalid_argument("paper_bound: unknown bound name");
}

// Structural checks of the scaling map: the domain edge maps to time zero and
// round trips are consistent.
template <class S = double>
bool check_scaling_structure(Index n) {
  const S left = scaled_domain_left<S>(n);
  if (scaled_time(n, left) > S(1e-9) || scaled_time(n, left) < S(-1e-9)) return false;
  const S t = scaled_time(n, S(0.37));
  const S nn = static_cast<S>(n);
  const S back = (t - nn) / (S(2) * std::pow(nn, S(2) / S(3)));
  return std::abs(back - S(0.37)) <= S(1e-12);
}

}  // namespace lineens
