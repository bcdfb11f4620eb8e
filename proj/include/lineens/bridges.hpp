#pragma once

// Non-intersecting Brownian bridges above a floor: exact avoidance
// probabilities (determinantal formula, Vandermonde expansion, sup/crossing
// identities) and rejection samplers whose per-cell corrections make the
// gridpoint law exact for a single gap process.

#include "lineens/core.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <utility>
#include <vector>

namespace lineens {

// ---------------------------------------------------------------------------
// Ordered lists and floors.
// ---------------------------------------------------------------------------

template <class S>
bool is_strictly_decreasing(const Vector<S>& v) {
  for (Index i = 0; i + 1 < v.size(); ++i)
    if (!(v[i] > v[i + 1])) return false;
  return true;
}

template <class S>
bool is_non_increasing(const Vector<S>& v) {
  for (Index i = 0; i + 1 < v.size(); ++i)
    if (!(v[i] >= v[i + 1])) return false;
  return true;
}

// A vector constrained to be decreasing; `strict()` enforces y_1 > ... > y_k,
// `relaxed()` allows ties.
template <class S = double>
struct DecreasingList {
  Vector<S> values;
  bool strict;

  static DecreasingList strict_list(Vector<S> v) {
    require(v.size() >= 1, "DecreasingList: need at least one entry");
    require(is_strictly_decreasing(v), "DecreasingList: entries must strictly decrease");
    return DecreasingList{std::move(v), true};
  }
  static DecreasingList relaxed_list(Vector<S> v) {
    require(v.size() >= 1, "DecreasingList: need at least one entry");
    require(is_non_increasing(v), "DecreasingList: entries must be non-increasing");
    return DecreasingList{std::move(v), false};
  }
};

// Lower boundary for an ensemble: either identically minus infinity or a
// piecewise-linear sampled curve.
template <class S = double>
struct FloorCurve {
  std::optional<SampledPath<S>> path;  // empty means -infinity everywhere

  static FloorCurve none() { return FloorCurve{std::nullopt}; }
  static FloorCurve of(SampledPath<S> p) { return FloorCurve{std::move(p)}; }

  bool finite() const { return path.has_value(); }
  S eval(S t) const {
    return finite() ? path->eval(t) : -std::numeric_limits<S>::infinity();
  }
};

// ---------------------------------------------------------------------------
// Discrete no-touch predicate.
// ---------------------------------------------------------------------------

// True iff at every gridpoint of [s1,s2] the curves are strictly ordered
// top-down and (when the floor is finite) the lowest curve is strictly above
// the floor. Ties count as touching. All paths must share one grid, and a
// finite floor must be sampled on that same grid.
template <class S>
bool no_touch(const std::vector<SampledPath<S>>& paths, const FloorCurve<S>& floor,
              S s1, S s2) {
  require(!paths.empty(), "no_touch: need at least one path");
  const TimeGrid<S>& g = paths[0].grid;
  for (const auto& p : paths)
    require(p.grid == g, "no_touch: paths must share one grid");
  if (floor.finite())
    require(floor.path->grid == g, "no_touch: floor grid mismatch");
  // Half-cell tolerance so callers may pass gridpoint times recomputed
  // elsewhere.
  const S lo = s1 - g.h() / S(2);
  const S hi = s2 + g.h() / S(2);
  for (Index i = 0; i <= g.steps; ++i) {
    const S t = g.point(i);
    if (t < lo || t > hi) continue;
    for (std::size_t j = 0; j + 1 < paths.size(); ++j)
      if (!(paths[j][i] > paths[j + 1][i])) return false;
    if (floor.finite() && !(paths.back()[i] > floor.path->values[i])) return false;
  }
  return true;
}

template <class S>
bool no_touch(const std::vector<SampledPath<S>>& paths, const FloorCurve<S>& floor) {
  require(!paths.empty(), "no_touch: need at least one path");
  return no_touch(paths, floor, paths[0].grid.a, paths[0].grid.b);
}

// ---------------------------------------------------------------------------
// Exact avoidance probability: determinantal formula.
// ---------------------------------------------------------------------------

template <class S = double>
struct KmResult {
  S value;      // the avoidance probability
  S log_value;  // log of the probability (-inf if value <= 0)
  bool cancellation_warning;  // determinant lost most of its leading digits
};

// Probability that k independent Brownian motions over an interval of length
// rho, pinned to go from x (decreasing) to y (decreasing), stay strictly
// ordered:  det[h(x_i, y_j)] / prod_i h(x_i, y_i)  with h the centered
// Gaussian kernel of variance rho.
//
// Computed from the row-normalized matrix  M_ij = h(x_i,y_j)/h(x_i,y_i) =
// exp{((x_i-y_i)^2 - (x_i-y_j)^2) / (2 rho)}  so the determinant is the
// probability directly; rows are additionally max-scaled in the log domain so
// large k stays finite. A Hadamard ratio below 1e-10 sets the cancellation
// flag.
template <class S>
KmResult<S> km_avoidance(const Vector<S>& x, const Vector<S>& y, S rho) {
  require(rho > S(0), "km_avoidance: need rho > 0");
  const Index k = x.size();
  require(k >= 1 && y.size() == k, "km_avoidance: size mismatch");
  require(is_strictly_decreasing(x) && is_strictly_decreasing(y),
          "km_avoidance: endpoint lists must strictly decrease");

  Matrix<S> expo(k, k);
  for (Index i = 0; i < k; ++i) {
    const S dii = x[i] - y[i];
    for (Index j = 0; j < k; ++j) {
      const S dij = x[i] - y[j];
      expo(i, j) = (dii * dii - dij * dij) / (S(2) * rho);
    }
  }
  S log_scale = S(0);
  Matrix<S> m(k, k);
  for (Index i = 0; i < k; ++i) {
    const S rmax = expo.row(i).maxCoeff();
    log_scale += rmax;
    for (Index j = 0; j < k; ++j) m(i, j) = std::exp(expo(i, j) - rmax);
  }
  Eigen::PartialPivLU<Matrix<S>> lu(m);
  const S det = lu.determinant();

  S hadamard = S(1);
  for (Index i = 0; i < k; ++i) hadamard *= m.row(i).norm();
  const bool warn = std::abs(det) < S(1e-10) * hadamard;

  KmResult<S> out;
  out.value = det * std::exp(log_scale);
  out.log_value = det > S(0) ? std::log(det) + log_scale
                             : -std::numeric_limits<S>::infinity();
  out.cancellation_warning = warn;
  return out;
}

// ---------------------------------------------------------------------------
// Vandermonde expansion for near-degenerate entrance data.
// ---------------------------------------------------------------------------

template <class S = double>
struct VandermondeBracket {
  S main;      // (eta/rho)^{k(k-1)/2} * prod_{i<j} (y_i - y_j)
  S err_low;   // lower bound on the relative error E
  S err_high;  // upper bound on the relative error E
  S lower;     // main * (1 + err_low)
  S upper;     // main * (1 + err_high)
};

// Expansion of the avoidance probability when the entrance points collapse
// linearly:  x = eta * (k-1, k-2, ..., 1, 0).  For eta in (0, rho k^-2 K^-1)
// and y decreasing inside [-K, K],
//   P = (eta/rho)^{k(k-1)/2} prod_{i<j}(y_i - y_j) * (1 + E),
//   -2 eta rho^-1 k^2 K <= E <= (e^2 - 1) eta rho^-1 k^2 K.
template <class S>
VandermondeBracket<S> vandermonde_expansion(S eta, S rho, const Vector<S>& y, S K) {
  const Index k = y.size();
  require(k >= 1, "vandermonde_expansion: need k >= 1");
  require(rho > S(0) && K > S(0), "vandermonde_expansion: need rho > 0 and K > 0");
  require(is_strictly_decreasing(y),
          "vandermonde_expansion: exit list must strictly decrease");
  for (Index i = 0; i < k; ++i)
    require(std::abs(y[i]) <= K, "vandermonde_expansion: exit points must lie in [-K,K]");
  const S eta_max = rho / (static_cast<S>(k) * static_cast<S>(k) * K);
  require(eta > S(0) && eta < eta_max,
          "vandermonde_expansion: eta out of admissible range");

  S vander = S(1);
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) vander *= (y[i] - y[j]);
  const S pref = std::pow(eta / rho, S(k * (k - 1)) / S(2));
  const S scale = eta / rho * static_cast<S>(k) * static_cast<S>(k) * K;

  VandermondeBracket<S> out;
  out.main = pref * vander;
  out.err_low = -S(2) * scale;
  out.err_high = (std::exp(S(2)) - S(1)) * scale;
  out.lower = out.main * (S(1) + out.err_low);
  out.upper = out.main * (S(1) + out.err_high);
  return out;
}

// ---------------------------------------------------------------------------
// Exact sup / crossing identities for pinned bridges.
// ---------------------------------------------------------------------------

// Probability that a Brownian bridge pinned to the same height at both ends of
// [a,b] ever rises r above that height: exp(-2 r^2 / (b-a)).
template <class S>
S sup_crossing_prob(S a, S b, S r) {
  require(b > a, "sup_crossing_prob: need a < b");
  require(r >= S(0), "sup_crossing_prob: need r >= 0");
  return std::exp(-S(2) * r * r / (b - a));
}

// Probability that, inside one cell of width h, a Brownian bridge with
// diffusion coefficient `diff` running between values v0 and v1 (both strictly
// below a linearly interpolated barrier with values b0, b1) touches the
// barrier: exp(-2 (b0-v0)(b1-v1) / (diff h)). Returns 1 if either endpoint
// already touches.
template <class S>
S cell_crossing_prob(S v0, S v1, S b0, S b1, S h, S diff = S(1)) {
  require(h > S(0) && diff > S(0), "cell_crossing_prob: need h > 0 and diff > 0");
  const S d0 = b0 - v0;
  const S d1 = b1 - v1;
  if (!(d0 > S(0)) || !(d1 > S(0))) return S(1);
  return std::exp(-S(2) * d0 * d1 / (diff * h));
}

// Exact draw of the minimum over one cell of a Brownian bridge with diffusion
// coefficient `diff` from v0 to v1, via inversion of
// P(min < m) = exp(-2 (v0-m)(v1-m)/(diff h)).
template <class S>
S sample_cell_min(S v0, S v1, S h, S diff, RngStream& rng) {
  require(h > S(0) && diff > S(0), "sample_cell_min: need h > 0 and diff > 0");
  const S q = -(diff * h / S(2)) * std::log(static_cast<S>(rng.uniform01()));
  const S d = v0 - v1;
  return (v0 + v1 - std::sqrt(d * d + S(4) * q)) / S(2);
}

// ---------------------------------------------------------------------------
// Rejection sampling of avoiding ensembles.
// ---------------------------------------------------------------------------

template <class S = double>
struct BridgeEnsembleSpec {
  Index k;
  S a;
  S b;
  Vector<S> x;  // entrance values, strictly decreasing
  Vector<S> y;  // exit values, strictly decreasing
  FloorCurve<S> floor;

  BridgeEnsembleSpec(Index k_, S a_, S b_, Vector<S> x_, Vector<S> y_,
                     FloorCurve<S> floor_ = FloorCurve<S>::none())
      : k(k_), a(a_), b(b_), x(std::move(x_)), y(std::move(y_)), floor(std::move(floor_)) {
    require(k >= 1, "BridgeEnsembleSpec: need k >= 1");
    require(a < b, "BridgeEnsembleSpec: need a < b");
    require(x.size() == k && y.size() == k, "BridgeEnsembleSpec: boundary size mismatch");
    require(is_strictly_decreasing(x) && is_strictly_decreasing(y),
            "BridgeEnsembleSpec: boundary lists must strictly decrease");
    if (floor.finite()) {
      require(x[k - 1] > floor.eval(a) && y[k - 1] > floor.eval(b),
              "BridgeEnsembleSpec: lowest boundary values must clear the floor");
    }
  }
};

struct SampleOptions {
  long long max_attempts = 1'000'000;
  // When set, each accepted configuration additionally survives independent
  // per-cell crossing draws (adjacent-curve differences at diffusion 2, lowest
  // curve against the floor at diffusion 1). For a single gap process -- two
  // curves without a floor, or one curve above a floor -- the accepted
  // gridpoint law is then exactly the continuous avoiding law.
  bool cell_correction = true;
};

template <class S = double>
struct AvoidingSample {
  std::vector<SampledPath<S>> paths;
  long long attempts;
};

namespace detail {

// Acceptance test for one proposed configuration; consumes correction
// uniforms only while still accepting, which is harmless for the law since
// every draw is independent.
template <class S>
bool accept_avoiding(const std::vector<SampledPath<S>>& paths,
                     const FloorCurve<S>& floor, bool cell_correction,
                     RngStream& rng) {
  if (!no_touch(paths, floor)) return false;
  if (!cell_correction) return true;
  const TimeGrid<S>& g = paths[0].grid;
  const S h = g.h();
  for (Index c = 0; c < g.steps; ++c) {
    for (std::size_t j = 0; j + 1 < paths.size(); ++j) {
      const S d0 = paths[j][c] - paths[j + 1][c];
      const S d1 = paths[j][c + 1] - paths[j + 1][c + 1];
      if (sample_cell_min(d0, d1, h, S(2), rng) <= S(0)) return false;
    }
    if (floor.finite()) {
      const S d0 = paths.back()[c] - floor.path->values[c];
      const S d1 = paths.back()[c + 1] - floor.path->values[c + 1];
      if (sample_cell_min(d0, d1, h, S(1), rng) <= S(0)) return false;
    }
  }
  return true;
}

}  // namespace detail

// Rejection sampler: proposes k independent bridges between the prescribed
// boundary vectors until a configuration passes the no-touch test (and,
// optionally, the per-cell corrections). Throws rejection_exhausted past
// max_attempts.
template <class S>
AvoidingSample<S> sample_avoiding(const BridgeEnsembleSpec<S>& spec, Index steps,
                                  RngStream& rng, const SampleOptions& opt = {}) {
  const TimeGrid<S> grid(spec.a, spec.b, steps);
  if (spec.floor.finite())
    require(spec.floor.path->grid == grid, "sample_avoiding: floor grid mismatch");
  for (long long attempt = 1; attempt <= opt.max_attempts; ++attempt) {
    std::vector<SampledPath<S>> paths;
    paths.reserve(spec.k);
    for (Index i = 0; i < spec.k; ++i)
      paths.push_back(sample_brownian_bridge(grid, spec.x[i], spec.y[i], rng));
    if (detail::accept_avoiding(paths, spec.floor, opt.cell_correction, rng))
      return AvoidingSample<S>{std::move(paths), attempt};
  }
  throw rejection_exhausted("sample_avoiding: attempt budget exhausted",
                            opt.max_attempts, 0);
}

// ---------------------------------------------------------------------------
// Gibbs block resampling.
// ---------------------------------------------------------------------------

// Resamples curves 1..k of `paths` strictly inside (a,b), holding everything
// else fixed: boundary values at a and b are read off the current curves and
// curve k+1 (when present) acts as the floor. a and b must be gridpoints.
// Values outside the open block are not rewritten, so they survive bit-exactly.
template <class S>
long long gibbs_resample(std::vector<SampledPath<S>>& paths, Index k, S a, S b,
                         RngStream& rng, const SampleOptions& opt = {}) {
  require(!paths.empty(), "gibbs_resample: empty ensemble");
  const TimeGrid<S>& g = paths[0].grid;
  for (const auto& p : paths)
    require(p.grid == g, "gibbs_resample: paths must share one grid");
  require(k >= 1 && k <= static_cast<Index>(paths.size()),
          "gibbs_resample: top-curve count out of range");
  const auto ia = g.index_of(a);
  const auto ib = g.index_of(b);
  require(ia.has_value() && ib.has_value(), "gibbs_resample: a and b must be gridpoints");
  require(*ia < *ib, "gibbs_resample: need a < b on the grid");

  const Index n0 = *ia;
  const Index n1 = *ib;
  const TimeGrid<S> sub(g.point(n0), g.point(n1), n1 - n0);

  FloorCurve<S> floor = FloorCurve<S>::none();
  if (k < static_cast<Index>(paths.size())) {
    Vector<S> fv = paths[k].values.segment(n0, n1 - n0 + 1);
    floor = FloorCurve<S>::of(SampledPath<S>(sub, std::move(fv)));
  }

  for (long long attempt = 1; attempt <= opt.max_attempts; ++attempt) {
    std::vector<SampledPath<S>> block;
    block.reserve(k);
    for (Index i = 0; i < k; ++i)
      block.push_back(sample_brownian_bridge(sub, paths[i][n0], paths[i][n1], rng));
    if (detail::accept_avoiding(block, floor, opt.cell_correction, rng)) {
      for (Index i = 0; i < k; ++i)
        for (Index j = n0 + 1; j < n1; ++j) paths[i][j] = block[i][j - n0];
      return attempt;
    }
  }
  throw rejection_exhausted("gibbs_resample: attempt budget exhausted",
                            opt.max_attempts, 0);
}

}  // namespace lineens
