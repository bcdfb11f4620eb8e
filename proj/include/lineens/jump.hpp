#pragma once

// The jump-ensemble construction: regularity-driven constants, the least
// concave majorant of the lower boundary curve, the [l,r] middle-interval
// selection, pole sets and the tent map, corner vectors characterizing the
// side-interval tests, the Wiener candidate, the three-test examination, and
// rejection sampling of the jump ensemble itself.

#include "lineens/bridges.hpp"
#include "lineens/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace lineens {

// ---------------------------------------------------------------------------
// Constants.
// ---------------------------------------------------------------------------

template <class S = double>
struct JumpConstants {
  Index k;
  S c;    // base lower-tail rate
  S C;    // base tail prefactor
  S c1;   // first element of the c-sequence
  S c_k;  // k-th element of the c-sequence
  S C_k;  // k-th prefactor
  S D_k;  // horizon constant; T = D_k (log 1/eps)^{1/3}
};

// Derives the k-indexed constant ladder from the base pair (c, C):
//   c_1 = min(2^{-5/2} c, 1/8),
//   c_k = ((3 - 2^{3/2})^{3/2} 10^{-3/2})^{k-1} c_1,
//   C_k = max{ 10 * 20^{k-1} 5^{k/2} (10/(3-2^{3/2}))^{k(k-1)/2} C, e^{c/2} },
//   D_k = max{ c_k^{-1/3} (2^{-9/2} - 2^{-5})^{-1/3}, 36 (k^2-1) }  by default.
// A caller-supplied D_k may only increase the default.
template <class S>
JumpConstants<S> regularity_constants(Index k, S c, S C, S D_override = S(0)) {
  require(k >= 1, "regularity_constants: need k >= 1");
  require(c > S(0) && C > S(0), "regularity_constants: need c > 0 and C > 0");
  JumpConstants<S> out;
  out.k = k;
  out.c = c;
  out.C = C;
  out.c1 = std::min(std::pow(S(2), S(-2.5)) * c, S(0.125));
  const S q = S(3) - std::pow(S(2), S(1.5));
  out.c_k = std::pow(std::pow(q, S(1.5)) * std::pow(S(10), S(-1.5)),
                     static_cast<S>(k - 1)) *
            out.c1;
  const S kk = static_cast<S>(k);
  out.C_k = std::max(S(10) * std::pow(S(20), static_cast<S>(k - 1)) *
                         std::pow(S(5), kk / S(2)) *
                         std::pow(S(10) / q, kk * (kk - S(1)) / S(2)) * C,
                     std::exp(c / S(2)));
  const S d_default =
      std::max(std::pow(out.c_k, S(-1) / S(3)) *
                   std::pow(std::pow(S(2), S(-4.5)) - std::pow(S(2), S(-5)),
                            S(-1) / S(3)),
               S(36) * (kk * kk - S(1)));
  if (D_override != S(0)) {
    require(D_override >= d_default,
            "regularity_constants: D_k may only be raised above its default");
    out.D_k = D_override;
  } else {
    out.D_k = d_default;
  }
  return out;
}

template <class S>
S jump_horizon(const JumpConstants<S>& jc, S epsilon) {
  require(epsilon > S(0) && epsilon < S(1), "jump_horizon: need epsilon in (0,1)");
  return jc.D_k * std::cbrt(std::log(S(1) / epsilon));
}

// Guaranteed lower bound on the probability that the jump ensemble passes the
// middle-interval test, valid on the favourable event:
//   exp{ -3973 k^{7/2} d_ip^2 D_k^2 (log 1/eps)^{2/3} }.
template <class S>
S vault_success_lower_bound(const JumpConstants<S>& jc, S epsilon, S d_ip) {
  const S le = std::log(S(1) / epsilon);
  const S kk = static_cast<S>(jc.k);
  return std::exp(-S(3973) * std::pow(kk, S(3.5)) * d_ip * d_ip * jc.D_k * jc.D_k *
                  std::pow(le, S(2) / S(3)));
}

// Lower bound, on the favourable event, for the probability that the Wiener
// candidate passes both the side-interval and jump tests:
//   eps^{36 (k+2)^2 k D_k^3} * 2^{-k}.
template <class S>
S promotion_lower_bound(const JumpConstants<S>& jc, S epsilon) {
  const S kk = static_cast<S>(jc.k);
  return std::pow(epsilon, S(36) * (kk + S(2)) * (kk + S(2)) * kk * jc.D_k * jc.D_k *
                               jc.D_k) *
         std::pow(S(2), -kk);
}

// ---------------------------------------------------------------------------
// Piecewise affine maps: concave majorant and tent.
// ---------------------------------------------------------------------------

template <class S = double>
struct PiecewiseAffine {
  Vector<S> xs;  // knot coordinates, strictly increasing
  Vector<S> ys;  // values at knots

  Index segments() const { return xs.size() - 1; }
  S slope(Index seg) const {
    return (ys[seg + 1] - ys[seg]) / (xs[seg + 1] - xs[seg]);
  }
  S eval(S x) const {
    require(x >= xs[0] && x <= xs[xs.size() - 1], "PiecewiseAffine: x outside domain");
    Index lo = 0;
    Index hi = xs.size() - 1;
    while (hi - lo > 1) {
      const Index mid = (lo + hi) / 2;
      if (xs[mid] <= x)
        lo = mid;
      else
        hi = mid;
    }
    const S w = (x - xs[lo]) / (xs[lo + 1] - xs[lo]);
    return (S(1) - w) * ys[lo] + w * ys[lo + 1];
  }
};

template <class S = double>
using ConcaveMajorant = PiecewiseAffine<S>;

// Least concave majorant of the linear interpolant of a sampled path, by a
// single monotone-chain sweep. Knots are the extreme points of the hypograph:
// collinear interior gridpoints are dropped.
template <class S>
ConcaveMajorant<S> least_concave_majorant(const SampledPath<S>& path) {
  const Index n = path.grid.points();
  std::vector<Index> hull;
  hull.reserve(n);
  for (Index i = 0; i < n; ++i) {
    const S xi = path.grid.point(i);
    const S yi = path.values[i];
    while (hull.size() >= 2) {
      const Index a = hull[hull.size() - 2];
      const Index b = hull[hull.size() - 1];
      const S xa = path.grid.point(a), ya = path.values[a];
      const S xb = path.grid.point(b), yb = path.values[b];
      // Drop b when it lies on or below chord a--i.
      if ((xb - xa) * (yi - ya) - (xi - xa) * (yb - ya) >= S(0))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }
  ConcaveMajorant<S> out;
  out.xs.resize(static_cast<Index>(hull.size()));
  out.ys.resize(static_cast<Index>(hull.size()));
  for (std::size_t j = 0; j < hull.size(); ++j) {
    out.xs[static_cast<Index>(j)] = path.grid.point(hull[j]);
    out.ys[static_cast<Index>(j)] = path.values[hull[j]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Middle-interval selection.
// ---------------------------------------------------------------------------

template <class S = double>
struct LRSelection {
  S l;
  S r;
  bool empty_left;   // no point had derivative <= 4T; convention l = T fired
  bool empty_right;  // no point had derivative >= -4T; convention r = -T fired
};

// l = inf{x : majorant slope <= 4T} and r = sup{x : slope >= -4T} over the
// majorant's domain, with inf of an empty set = T and sup = -T. Because the
// majorant's slopes decrease, l is the left knot of the first flat-enough
// segment and r the right knot of the last one.
template <class S>
LRSelection<S> select_lr(const ConcaveMajorant<S>& majorant, S T) {
  require(T > S(0), "select_lr: need T > 0");
  require(majorant.xs.size() >= 2, "select_lr: majorant needs at least one segment");
  LRSelection<S> out{T, -T, true, true};
  for (Index s = 0; s < majorant.segments(); ++s)
    if (majorant.slope(s) <= S(4) * T) {
      out.l = majorant.xs[s];
      out.empty_left = false;
      break;
    }
  for (Index s = majorant.segments() - 1; s >= 0; --s)
    if (majorant.slope(s) >= S(-4) * T) {
      out.r = majorant.xs[s + 1];
      out.empty_right = false;
      break;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Pole sets.
// ---------------------------------------------------------------------------

// Chooses the pole set from the extreme-point coordinates xext (increasing,
// starting at l and ending at r): a subset containing l and r, with pairwise
// gaps exceeding d_ip, leaving no rejected point farther than d_ip from every
// chosen one, of maximal cardinality, lexicographically maximal among those.
// Implemented as a backward feasibility pass plus a greedy forward pass that
// always takes the largest admissible next pole.
template <class S>
std::vector<S> build_pole_set(const std::vector<S>& xext, S l, S r, S d_ip) {
  require(l < r, "build_pole_set: need l < r");
  require(d_ip >= S(1) && d_ip < r - l, "build_pole_set: need d_ip in [1, r-l)");
  const Index m = static_cast<Index>(xext.size());
  require(m >= 2, "build_pole_set: need at least two extreme points");
  require(xext.front() == l && xext.back() == r,
          "build_pole_set: xext must start at l and end at r");
  for (Index i = 0; i + 1 < m; ++i)
    require(xext[i] < xext[i + 1], "build_pole_set: xext must strictly increase");

  // admissible(t,u): u may directly follow t -- gap exceeds d_ip and every
  // skipped point in between is within d_ip of t or of u.
  auto admissible = [&](Index t, Index u) {
    if (!(xext[u] - xext[t] > d_ip)) return false;
    for (Index s = t + 1; s < u; ++s)
      if (xext[s] - xext[t] > d_ip && xext[u] - xext[s] > d_ip) return false;
    return true;
  };

  // best[t]: maximal pole count of a feasible suffix starting with a pole at
  // t and ending with one at m-1; -1 when infeasible.
  std::vector<Index> best(m, -1);
  best[m - 1] = 1;
  for (Index t = m - 2; t >= 0; --t)
    for (Index u = t + 1; u < m; ++u)
      if (best[u] >= 0 && admissible(t, u))
        best[t] = std::max(best[t], best[u] + 1);
  require(best[0] >= 2, "build_pole_set: no admissible pole subset exists");

  std::vector<S> poles{xext[0]};
  Index t = 0;
  while (t != m - 1) {
    Index chosen = -1;
    for (Index u = t + 1; u < m; ++u)
      if (best[u] == best[t] - 1 && admissible(t, u)) chosen = u;
    poles.push_back(xext[chosen]);
    t = chosen;
  }
  return poles;
}

// ---------------------------------------------------------------------------
// Jump context.
// ---------------------------------------------------------------------------

template <class S = double>
struct CornerVectors {
  Vector<S> left;   // admissibility corner for the entrance values at l
  Vector<S> right;  // admissibility corner for the exit values at r
  std::vector<Index> left_contact;   // master gridpoint attaining each threshold
  std::vector<Index> right_contact;
};

// Entrance (or exit) values are side-admissible iff their difference from the
// corner vector is a strictly decreasing list of positive entries.
template <class S>
bool side_admissible(const Vector<S>& corner, const Vector<S>& values) {
  require(corner.size() == values.size(), "side_admissible: size mismatch");
  const Index k = corner.size();
  const Vector<S> v = values - corner;
  if (!(v[k - 1] > S(0))) return false;
  for (Index i = 0; i + 1 < k; ++i)
    if (!(v[i] > v[i + 1])) return false;
  return true;
}

// Everything the examination of a candidate requires, derived from the frozen
// data: the lower boundary curve on [-2T,2T], the top-k boundary values at
// +-2T, and the top-k side-interval shapes (stored as raw curve values so
// reconstruction can reattach them exactly).
template <class S = double>
struct JumpContext {
  JumpConstants<S> constants;
  S epsilon;
  S d_ip;
  S T;
  TimeGrid<S> grid;       // master grid on [-2T, 2T]
  SampledPath<S> floor;   // lower boundary curve on the master grid
  Vector<S> bound_left;   // top-k values at -2T, strictly decreasing
  Vector<S> bound_right;  // top-k values at 2T

  ConcaveMajorant<S> majorant;  // of the floor restricted to [-T, T]
  S l;
  S r;
  Index l_idx;                 // master grid index of l
  Index r_idx;                 // master grid index of r
  bool degenerate;             // selection conventions fired or middle too short
  Vector<S> poles;             // pole coordinates (gridpoints), increasing
  std::vector<Index> pole_idx; // master grid indices of the poles
  ConcaveMajorant<S> tent;     // affine through (p, floor(p)) over the poles

  Matrix<S> side_left;   // k x (l_idx+1): reference curve values on [-2T, l]
  Matrix<S> side_right;  // k x (steps-r_idx+1): values on [r, 2T]
  CornerVectors<S> corners;

  bool fav;  // favourable-event indicator (false whenever degenerate)
  bool f1, f2, f3;
  std::vector<std::string> warnings;

  TimeGrid<S> middle_grid() const { return TimeGrid<S>(l, r, r_idx - l_idx); }
  SampledPath<S> middle_floor() const {
    return SampledPath<S>(middle_grid(), floor.values.segment(l_idx, r_idx - l_idx + 1));
  }
  // Left-side reattachment weight at master index j: 0 at -2T, 1 at l.
  S weight_left(Index j) const {
    return static_cast<S>(j) / static_cast<S>(l_idx);
  }
  // Right-side reattachment weight at master index j: 1 at r, 0 at 2T.
  S weight_right(Index j) const {
    return static_cast<S>(grid.steps - j) / static_cast<S>(grid.steps - r_idx);
  }
};

namespace detail {

// Thresholds for one side. stored holds raw curve values at master indices
// [j0, j1] with the pinned end (weight 0) at `outer` and the free end (weight
// 1) at the opposite extreme. weight(j) is the reattachment weight of the free
// endpoint value. The curve with free value q takes, at gridpoint j,
//   G_i(j) + weight(j) * q   with   G_i(j) = stored(i,j) - weight(j) * q_old_i,
// so pairwise gaps and floor clearance are affine in the free values, and each
// constraint is a maximum over gridpoints with positive weight.
template <class S, class WeightFn>
void side_corner(const Matrix<S>& stored, const Vector<S>& free_old,
                 const SampledPath<S>& floor, Index j0, Index j1, Index outer,
                 WeightFn weight, Vector<S>& corner, std::vector<Index>& contact) {
  const Index k = stored.rows();
  Vector<S> thresh(k);
  contact.assign(static_cast<std::size_t>(k), j0);
  for (Index i = 0; i < k; ++i) {
    S best = -std::numeric_limits<S>::infinity();
    Index arg = -1;
    for (Index j = j0; j <= j1; ++j) {
      if (j == outer) continue;
      const S ww = weight(j);
      if (!(ww > S(0))) continue;
      S val;
      if (i + 1 < k) {
        const S gap0 = stored(i, j - j0) - stored(i + 1, j - j0);
        const S g = gap0 - ww * (free_old[i] - free_old[i + 1]);
        val = -g / ww;
      } else {
        const S g = stored(i, j - j0) - ww * free_old[i];
        val = (floor.values[j] - g) / ww;
      }
      if (val > best) {
        best = val;
        arg = j;
      }
    }
    thresh[i] = best;
    contact[static_cast<std::size_t>(i)] = arg;
  }
  corner.resize(k);
  corner[k - 1] = thresh[k - 1];
  for (Index i = k - 2; i >= 0; --i) corner[i] = corner[i + 1] + thresh[i];
}

}  // namespace detail

// Builds the full context from frozen data: the lower boundary curve on the
// master grid and the reference top-k curves whose boundary values and side
// shapes are retained. steps must be divisible by 4 so that +-T sit on the
// grid. The epsilon admissibility conditions are recorded as warnings rather
// than enforced, since desk-scale runs operate far above the asymptotic
// regime.
template <class S>
JumpContext<S> make_jump_context(const JumpConstants<S>& jc, S epsilon, S d_ip,
                                 const SampledPath<S>& floor,
                                 const std::vector<SampledPath<S>>& ref_topk) {
  const Index k = jc.k;
  require(static_cast<Index>(ref_topk.size()) == k,
          "make_jump_context: need exactly k reference curves");
  require(d_ip >= S(1), "make_jump_context: need d_ip >= 1");
  const S T = jump_horizon(jc, epsilon);
  const TimeGrid<S>& g = floor.grid;
  require(g.a == -S(2) * T && g.b == S(2) * T,
          "make_jump_context: floor grid must span [-2T, 2T]");
  require(g.steps % 4 == 0, "make_jump_context: steps must be divisible by 4");
  for (const auto& p : ref_topk)
    require(p.grid == g, "make_jump_context: reference curve grid mismatch");

  JumpContext<S> ctx{jc,
                     epsilon,
                     d_ip,
                     T,
                     g,
                     floor,
                     Vector<S>(k),
                     Vector<S>(k),
                     {},
                     S(0),
                     S(0),
                     0,
                     0,
                     false,
                     {},
                     {},
                     {},
                     Matrix<S>(),
                     Matrix<S>(),
                     {},
                     false,
                     false,
                     false,
                     false,
                     {}};

  for (Index i = 0; i < k; ++i) {
    ctx.bound_left[i] = ref_topk[i].values[0];
    ctx.bound_right[i] = ref_topk[i].values[g.steps];
  }
  require(is_strictly_decreasing(ctx.bound_left) &&
              is_strictly_decreasing(ctx.bound_right),
          "make_jump_context: boundary values must strictly decrease");
  require(ctx.bound_left[k - 1] > floor.values[0] &&
              ctx.bound_right[k - 1] > floor.values[g.steps],
          "make_jump_context: lowest curve must clear the floor at +-2T");

  if (!(epsilon < std::pow(S(18) * jc.C_k * jc.D_k, S(-1.5))))
    ctx.warnings.push_back("epsilon above the constants-ladder admissibility bound");
  if (!(epsilon < std::exp(-S(2e7) * std::pow(static_cast<S>(k), S(1.5)) *
                           std::pow(d_ip, S(6)))))
    ctx.warnings.push_back("epsilon above the inter-pole-distance admissibility bound");

  // Majorant of the floor on [-T, T].
  const Index q = g.steps / 4;
  const TimeGrid<S> inner(g.point(q), g.point(3 * q), 2 * q);
  SampledPath<S> inner_floor(inner, floor.values.segment(q, 2 * q + 1));
  ctx.majorant = least_concave_majorant(inner_floor);

  const LRSelection<S> sel = select_lr(ctx.majorant, T);
  ctx.l = sel.l;
  ctx.r = sel.r;
  ctx.degenerate = sel.empty_left || sel.empty_right || !(sel.r - sel.l > d_ip);
  if (ctx.degenerate) return ctx;  // treated as a favourable-event failure

  const auto li = g.index_of(ctx.l);
  const auto ri = g.index_of(ctx.r);
  require(li.has_value() && ri.has_value(),
          "make_jump_context: selected l and r must be gridpoints");
  ctx.l_idx = *li;
  ctx.r_idx = *ri;
  // Snap to master-grid coordinates: the majorant lives on an inner grid
  // whose recomputed points may drift from the master's by an ulp.
  ctx.l = g.point(ctx.l_idx);
  ctx.r = g.point(ctx.r_idx);

  // Extreme points inside [l, r], always including l and r themselves.
  std::vector<S> xext{ctx.l};
  for (Index j = 0; j < ctx.majorant.xs.size(); ++j) {
    const S x = ctx.majorant.xs[j];
    if (x > ctx.l && x < ctx.r) xext.push_back(x);
  }
  xext.push_back(ctx.r);
  const std::vector<S> poles = build_pole_set(xext, ctx.l, ctx.r, d_ip);
  ctx.poles.resize(static_cast<Index>(poles.size()));
  ctx.tent.xs.resize(static_cast<Index>(poles.size()));
  ctx.tent.ys.resize(static_cast<Index>(poles.size()));
  for (std::size_t j = 0; j < poles.size(); ++j) {
    const auto pi = g.index_of(poles[j]);
    require(pi.has_value(), "make_jump_context: poles must be gridpoints");
    ctx.pole_idx.push_back(*pi);
    ctx.poles[static_cast<Index>(j)] = poles[j];
    ctx.tent.xs[static_cast<Index>(j)] = poles[j];
    ctx.tent.ys[static_cast<Index>(j)] = floor.values[*pi];
  }

  // Side-interval data and corners.
  ctx.side_left.resize(k, ctx.l_idx + 1);
  ctx.side_right.resize(k, g.steps - ctx.r_idx + 1);
  for (Index i = 0; i < k; ++i) {
    ctx.side_left.row(i) = ref_topk[i].values.head(ctx.l_idx + 1).transpose();
    ctx.side_right.row(i) =
        ref_topk[i].values.tail(g.steps - ctx.r_idx + 1).transpose();
  }
  {
    Vector<S> free_old(k);
    for (Index i = 0; i < k; ++i) free_old[i] = ref_topk[i].values[ctx.l_idx];
    detail::side_corner(
        ctx.side_left, free_old, floor, Index(0), ctx.l_idx, Index(0),
        [&](Index j) { return ctx.weight_left(j); }, ctx.corners.left,
        ctx.corners.left_contact);
  }
  {
    Vector<S> free_old(k);
    for (Index i = 0; i < k; ++i) free_old[i] = ref_topk[i].values[ctx.r_idx];
    Matrix<S> stored = ctx.side_right;
    // side_corner indexes stored by j - j0; build a floor-aligned view by
    // passing master indices [r_idx, steps] with outer at the right end.
    detail::side_corner(
        stored, free_old, floor, ctx.r_idx, g.steps, g.steps,
        [&](Index j) { return ctx.weight_right(j); }, ctx.corners.right,
        ctx.corners.right_contact);
  }

  // Favourable event.
  const S t2 = T * T;
  const S lo1 = (-S(2) * std::sqrt(S(2)) - S(1)) * t2;
  const S hi1 = (-S(2) * std::sqrt(S(2)) + S(1)) * t2;
  ctx.f1 = true;
  for (Index i = 0; i < k; ++i) {
    if (!(ctx.bound_left[i] >= lo1 && ctx.bound_left[i] <= hi1)) ctx.f1 = false;
    if (!(ctx.bound_right[i] >= lo1 && ctx.bound_right[i] <= hi1)) ctx.f1 = false;
  }
  ctx.f2 = true;
  for (Index j = q; j <= 3 * q; ++j)
    if (!(floor.values[j] >= -t2 && floor.values[j] <= t2)) ctx.f2 = false;
  ctx.f3 = true;
  for (Index i = 0; i < k; ++i) {
    if (!(ctx.corners.left[i] >= -t2 && ctx.corners.left[i] <= t2)) ctx.f3 = false;
    if (!(ctx.corners.right[i] >= -t2 && ctx.corners.right[i] <= t2)) ctx.f3 = false;
  }
  ctx.fav = ctx.f1 && ctx.f2 && ctx.f3;
  return ctx;
}

// Favourable-event accessor; certifies that the middle interval always
// contains [-T/2, T/2] when the event holds.
template <class S>
bool check_fav(const JumpContext<S>& ctx) {
  if (ctx.fav) {
    require(!ctx.degenerate, "check_fav: favourable context cannot be degenerate");
    require(ctx.l <= -ctx.T / S(2) && ctx.r >= ctx.T / S(2),
            "check_fav: favourable context must have [-T/2,T/2] inside [l,r]");
  }
  return ctx.fav;
}

// ---------------------------------------------------------------------------
// Candidates, tests, the jump ensemble.
// ---------------------------------------------------------------------------

// The candidate: restriction to [l, r] of k independent Brownian bridges over
// [-2T, 2T] tied to the frozen boundary values.
template <class S>
std::vector<SampledPath<S>> sample_wiener_candidate(const JumpContext<S>& ctx,
                                                    RngStream& rng) {
  require(!ctx.degenerate, "sample_wiener_candidate: degenerate context");
  std::vector<SampledPath<S>> middle;
  middle.reserve(ctx.constants.k);
  const TimeGrid<S> mg = ctx.middle_grid();
  for (Index i = 0; i < ctx.constants.k; ++i) {
    SampledPath<S> full =
        sample_brownian_bridge(ctx.grid, ctx.bound_left[i], ctx.bound_right[i], rng);
    middle.emplace_back(mg, full.values.segment(ctx.l_idx, ctx.r_idx - ctx.l_idx + 1));
  }
  return middle;
}

struct TestOutcome {
  bool t1_left;
  bool t1_right;
  bool t1;  // side-intervals test
  bool t2;  // jump test: every curve clears every pole top
  bool t3;  // middle-interval test
};

template <class S>
TestOutcome run_candidate_tests(const JumpContext<S>& ctx,
                                const std::vector<SampledPath<S>>& middle) {
  require(!ctx.degenerate, "run_candidate_tests: degenerate context");
  const Index k = ctx.constants.k;
  require(static_cast<Index>(middle.size()) == k,
          "run_candidate_tests: need k candidate curves");
  const TimeGrid<S> mg = ctx.middle_grid();
  for (const auto& p : middle)
    require(p.grid == mg, "run_candidate_tests: candidate grid mismatch");

  TestOutcome out{};
  Vector<S> at_l(k), at_r(k);
  for (Index i = 0; i < k; ++i) {
    at_l[i] = middle[i].values[0];
    at_r[i] = middle[i].values[mg.steps];
  }
  out.t1_left = side_admissible(ctx.corners.left, at_l);
  out.t1_right = side_admissible(ctx.corners.right, at_r);
  out.t1 = out.t1_left && out.t1_right;

  out.t2 = true;
  for (Index i = 0; i < k && out.t2; ++i)
    for (std::size_t j = 0; j < ctx.pole_idx.size(); ++j) {
      const Index mj = ctx.pole_idx[j] - ctx.l_idx;
      if (!(middle[i].values[mj] > ctx.floor.values[ctx.pole_idx[j]])) {
        out.t2 = false;
        break;
      }
    }

  out.t3 = no_touch(middle, FloorCurve<S>::of(ctx.middle_floor()));
  // The middle test examines every gridpoint the jump test does, so passing
  // it forces the jump test to pass as well.
  require(!out.t3 || out.t2, "run_candidate_tests: middle test passed but jump test failed");
  return out;
}

template <class S = double>
struct JumpSample {
  std::vector<SampledPath<S>> paths;  // the jump ensemble on [l, r]
  long long attempts;
  bool t3;  // whether the accepted sample also passes the middle test
};

// The jump ensemble: the Wiener candidate conditioned on passing the side-
// intervals and jump tests, realized by rejection.
template <class S>
JumpSample<S> sample_jump_ensemble(const JumpContext<S>& ctx, RngStream& rng,
                                   long long max_attempts = 1'000'000) {
  require(!ctx.degenerate, "sample_jump_ensemble: degenerate context");
  for (long long attempt = 1; attempt <= max_attempts; ++attempt) {
    std::vector<SampledPath<S>> cand = sample_wiener_candidate(ctx, rng);
    const TestOutcome t = run_candidate_tests(ctx, cand);
    if (t.t1 && t.t2) return JumpSample<S>{std::move(cand), attempt, t.t3};
  }
  throw rejection_exhausted("sample_jump_ensemble: attempt budget exhausted",
                            max_attempts, 0);
}

// ---------------------------------------------------------------------------
// Reconstruction.
// ---------------------------------------------------------------------------

// Reassembles full curves on [-2T, 2T] from middle data: the stored side
// values are reattached with their free endpoint moved affinely to the middle
// curve's endpoint. When an endpoint is unchanged the stored side values are
// copied verbatim, which makes decompose-reconstruct round trips bit-exact.
template <class S>
std::vector<SampledPath<S>> reconstruct(const JumpContext<S>& ctx,
                                        const std::vector<SampledPath<S>>& middle) {
  require(!ctx.degenerate, "reconstruct: degenerate context");
  const Index k = ctx.constants.k;
  require(static_cast<Index>(middle.size()) == k, "reconstruct: need k middle curves");
  const TimeGrid<S> mg = ctx.middle_grid();
  for (const auto& p : middle)
    require(p.grid == mg, "reconstruct: middle grid mismatch");

  std::vector<SampledPath<S>> full;
  full.reserve(k);
  for (Index i = 0; i < k; ++i) {
    SampledPath<S> curve(ctx.grid);
    const S dl = middle[i].values[0] - ctx.side_left(i, ctx.l_idx);
    for (Index j = 0; j < ctx.l_idx; ++j)
      curve[j] = dl == S(0) ? ctx.side_left(i, j)
                            : ctx.side_left(i, j) + ctx.weight_left(j) * dl;
    for (Index j = ctx.l_idx; j <= ctx.r_idx; ++j)
      curve[j] = middle[i].values[j - ctx.l_idx];
    const S dr = middle[i].values[mg.steps] - ctx.side_right(i, 0);
    for (Index j = ctx.r_idx + 1; j <= ctx.grid.steps; ++j)
      curve[j] = dr == S(0)
                     ? ctx.side_right(i, j - ctx.r_idx)
                     : ctx.side_right(i, j - ctx.r_idx) + ctx.weight_right(j) * dr;
    full.push_back(std::move(curve));
  }
  return full;
}

}  // namespace lineens
