#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "errors.hpp"

namespace lab {

using lineens::BrownianField;
using lineens::BridgeEnsembleSpec;
using lineens::FloorCurve;
using lineens::JumpConstants;
using lineens::JumpContext;
using lineens::Matrix;
using lineens::SampledPath;
using lineens::TimeGrid;
using lineens::Vector;
using lineens::substream;

// ---------------------------------------------------------------------------
// Low-level samplers.
// ---------------------------------------------------------------------------

double sample_bridge_sup(Index steps, RngStream& rng) {
  const TimeGrid<double> grid(0.0, 1.0, steps);
  const SampledPath<double> path = lineens::sample_brownian_bridge(grid, 0.0, 0.0, rng);
  const double h = grid.h();
  double sup = 0.0;
  for (Index c = 0; c < steps; ++c) {
    const double v0 = path.values[c];
    const double v1 = path.values[c + 1];
    // cell max = -min of the negated segment, drawn exactly
    const double m = -lineens::sample_cell_min(-v0, -v1, h, 1.0, rng);
    sup = std::max(sup, m);
  }
  return sup;
}

bool avoidance_proposal(const Vector<double>& x, const Vector<double>& y, double rho,
                        Index steps, RngStream& rng) {
  const Index k = x.size();
  lineens::require(y.size() == k && k >= 1, "avoidance_proposal: boundary size mismatch");
  lineens::require(rho > 0.0, "avoidance_proposal: need rho > 0");
  const TimeGrid<double> grid(0.0, rho, steps);
  std::vector<SampledPath<double>> paths;
  paths.reserve(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i)
    paths.push_back(lineens::sample_brownian_bridge(grid, x[i], y[i], rng));
  return lineens::detail::accept_avoiding(paths, FloorCurve<double>::none(), true, rng);
}

double sample_conditioned_gap(double sep, double halfwidth, Index steps,
                              long long max_attempts, RngStream& rng) {
  lineens::require(sep > 0.0 && halfwidth > 0.0, "sample_conditioned_gap: bad geometry");
  lineens::require(steps >= 2 && steps % 2 == 0,
                   "sample_conditioned_gap: step count must be even");
  const TimeGrid<double> grid(-halfwidth, halfwidth, steps);
  const double h = grid.h();
  for (long long attempt = 1; attempt <= max_attempts; ++attempt) {
    const SampledPath<double> hi = lineens::sample_brownian_bridge(grid, sep, sep, rng);
    const SampledPath<double> lo = lineens::sample_brownian_bridge(grid, 0.0, 0.0, rng);
    bool ok = true;
    for (Index j = 0; j <= steps && ok; ++j) ok = hi.values[j] - lo.values[j] > 0.0;
    // The difference given its gridpoint values is a diffusion-2 bridge on
    // each cell, so drawing cell minima makes the conditioning continuous.
    for (Index c = 0; c < steps && ok; ++c) {
      const double d0 = hi.values[c] - lo.values[c];
      const double d1 = hi.values[c + 1] - lo.values[c + 1];
      ok = lineens::sample_cell_min(d0, d1, h, 2.0, rng) > 0.0;
    }
    if (ok) return hi.values[steps / 2] - lo.values[steps / 2];
  }
  throw lineens::rejection_exhausted("sample_conditioned_gap: attempt budget exhausted",
                                     max_attempts, 0);
}

double sample_deficit(Index n, Index k, Index steps, RngStream& rng) {
  lineens::require(n >= 1 && k >= 2 && k <= n, "sample_deficit: need 2 <= k <= n");
  const TimeGrid<double> grid(0.0, static_cast<double>(n), steps);
  const BrownianField<double> field = lineens::sample_brownian_field(n, grid, rng);
  const double t = static_cast<double>(n);
  const double m1 = lineens::max_energy(field, 1, t);
  const double mk = lineens::max_energy(field, k, t);
  return (static_cast<double>(k) * m1 - mk) /
         (std::sqrt(2.0) * std::cbrt(static_cast<double>(n)));
}

double sample_deficit_dyson(Index n, Index k, RngStream& rng) {
  lineens::require(n >= 1 && k >= 2 && k <= n, "sample_deficit_dyson: need 2 <= k <= n");
  const auto h = lineens::sample_gue(n, static_cast<double>(n), rng);
  const Vector<double> eigs = lineens::eigenvalues_desc(h);
  Vector<double> scaled(n);
  for (Index i = 0; i < n; ++i) scaled[i] = lineens::scaled_value(eigs[i], n, 0.0);
  return lineens::near_geod_deficit(scaled, k);
}

TwoResolution sample_m1_two_res(Index n, Index steps_fine, long long trials,
                                std::uint64_t seed, std::uint64_t stream) {
  lineens::require(steps_fine >= 2 && steps_fine % 2 == 0,
                   "sample_m1_two_res: fine step count must be even");
  lineens::require(trials >= 1, "sample_m1_two_res: need trials >= 1");
  TwoResolution out;
  out.coarse.reserve(static_cast<std::size_t>(trials));
  out.fine.reserve(static_cast<std::size_t>(trials));
  const double tmax = static_cast<double>(n);
  const TimeGrid<double> fine_grid(0.0, tmax, steps_fine);
  const TimeGrid<double> coarse_grid(0.0, tmax, steps_fine / 2);
  const RngStream base(seed, stream);
  for (long long t = 0; t < trials; ++t) {
    RngStream rng = substream(base, static_cast<std::uint64_t>(t));
    const BrownianField<double> fine = lineens::sample_brownian_field(n, fine_grid, rng);
    Matrix<double> cvals(n, coarse_grid.points());
    for (Index j = 0; j <= coarse_grid.steps; ++j) cvals.col(j) = fine.values.col(2 * j);
    const BrownianField<double> coarse(n, coarse_grid, std::move(cvals));
    out.fine.push_back(lineens::max_energy(fine, 1, tmax));
    out.coarse.push_back(lineens::max_energy(coarse, 1, tmax));
  }
  return out;
}

std::vector<double> sample_gue_top_sum(Index n, Index ell, long long trials,
                                       std::uint64_t seed, std::uint64_t stream) {
  lineens::require(ell >= 1 && ell <= n, "sample_gue_top_sum: need 1 <= ell <= n");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(trials));
  const RngStream base(seed, stream);
  for (long long t = 0; t < trials; ++t) {
    RngStream rng = substream(base, static_cast<std::uint64_t>(t));
    const auto h = lineens::sample_gue(n, 1.0 / (4.0 * static_cast<double>(n)), rng);
    const Vector<double> eigs = lineens::eigenvalues_desc(h);
    out.push_back(2.0 * static_cast<double>(n) * lineens::top_eigensum(eigs, ell));
  }
  return out;
}

std::vector<double> sample_m_ell(Index n, Index ell, Index steps, long long trials,
                                 std::uint64_t seed, std::uint64_t stream) {
  lineens::require(ell >= 1 && ell <= n, "sample_m_ell: need 1 <= ell <= n");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(trials));
  const double tmax = static_cast<double>(n);
  const TimeGrid<double> grid(0.0, tmax, steps);
  const RngStream base(seed, stream);
  for (long long t = 0; t < trials; ++t) {
    RngStream rng = substream(base, static_cast<std::uint64_t>(t));
    const BrownianField<double> field = lineens::sample_brownian_field(n, grid, rng);
    out.push_back(lineens::max_energy(field, ell, tmax));
  }
  return out;
}

GibbsPair gibbs_invariance_samples(long long trials, Index steps,
                                   long long max_attempts, std::uint64_t seed) {
  lineens::require(trials >= 1, "gibbs_invariance_samples: need trials >= 1");
  lineens::require(steps >= 4 && steps % 4 == 0,
                   "gibbs_invariance_samples: steps must be divisible by 4");
  GibbsPair out;
  out.direct.reserve(static_cast<std::size_t>(trials));
  out.resampled.reserve(static_cast<std::size_t>(trials));
  Vector<double> ends(3);
  ends << 2.0, 0.0, -2.0;
  const BridgeEnsembleSpec<double> spec(3, -1.0, 1.0, ends, ends);
  lineens::SampleOptions opt;
  opt.max_attempts = max_attempts;
  opt.cell_correction = false;  // plain gridpoint law at both stages
  const RngStream base(seed, 61);
  double att_direct = 0.0;
  double att_res = 0.0;
  for (long long t = 0; t < trials; ++t) {
    RngStream rng = substream(base, static_cast<std::uint64_t>(t));
    auto sample = lineens::sample_avoiding(spec, steps, rng, opt);
    out.direct.push_back(sample.paths[0].values[steps / 2]);
    att_direct += static_cast<double>(sample.attempts);
    att_res += static_cast<double>(
        lineens::gibbs_resample(sample.paths, 2, -0.5, 0.5, rng, opt));
    out.resampled.push_back(sample.paths[0].values[steps / 2]);
  }
  out.mean_attempts_direct = att_direct / static_cast<double>(trials);
  out.mean_attempts_resample = att_res / static_cast<double>(trials);
  return out;
}

Matrix<double> sample_scaled_top2(Index n, long long trials, std::uint64_t seed,
                                  std::uint64_t stream) {
  lineens::require(n >= 2, "sample_scaled_top2: need n >= 2");
  Matrix<double> out(static_cast<Index>(trials), 2);
  const RngStream base(seed, stream);
  for (long long t = 0; t < trials; ++t) {
    RngStream rng = substream(base, static_cast<std::uint64_t>(t));
    const auto h = lineens::sample_gue(n, static_cast<double>(n), rng);
    const Vector<double> eigs = lineens::eigenvalues_desc(h);
    out(static_cast<Index>(t), 0) = lineens::scaled_value(eigs[0], n, 0.0);
    out(static_cast<Index>(t), 1) = lineens::scaled_value(eigs[1], n, 0.0);
  }
  return out;
}

namespace {

LinearFit<double> fit_or_empty(const std::vector<double>& s,
                               const std::vector<EstimateReport<double>>& reps,
                               long long min_hits) {
  try {
    return lineens::halfpow_fit(s, reps, min_hits);
  } catch (const std::exception&) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return LinearFit<double>{nan, nan, nan, nan, 0};
  }
}

}  // namespace

RecentredTails recentred_top_tails(Index n, const std::vector<double>& zs,
                                   const std::vector<double>& s_upper,
                                   const std::vector<double>& s_lower,
                                   long long trials, std::uint64_t seed,
                                   std::uint64_t stream) {
  lineens::require(!zs.empty() && !s_upper.empty() && !s_lower.empty(),
                   "recentred_top_tails: empty inputs");
  lineens::require(trials >= 1, "recentred_top_tails: need trials >= 1");
  const std::size_t nz = zs.size();
  std::vector<double> times(nz);
  for (std::size_t j = 0; j < nz; ++j) {
    if (j > 0)
      lineens::require(zs[j] > zs[j - 1],
                       "recentred_top_tails: observation points must increase");
    times[j] = lineens::scaled_time(n, zs[j]);
  }

  std::vector<std::vector<long long>> up(nz, std::vector<long long>(s_upper.size(), 0));
  std::vector<std::vector<long long>> lo(nz, std::vector<long long>(s_lower.size(), 0));
  const RngStream base(seed, stream);
  for (long long t = 0; t < trials; ++t) {
    RngStream rng = substream(base, static_cast<std::uint64_t>(t));
    const Matrix<double> eig = lineens::hbm_eigen_at_times(n, times, rng);
    for (std::size_t j = 0; j < nz; ++j) {
      const double c =
          lineens::scaled_value(eig(0, static_cast<Index>(j)), n, zs[j]) +
          lineens::parabola_q(zs[j]);
      for (std::size_t si = 0; si < s_upper.size(); ++si)
        if (c >= s_upper[si]) ++up[j][si];
      for (std::size_t si = 0; si < s_lower.size(); ++si)
        if (c <= -s_lower[si]) ++lo[j][si];
    }
  }

  RecentredTails out;
  out.z = zs;
  out.s_upper = s_upper;
  out.s_lower = s_lower;
  for (std::size_t j = 0; j < nz; ++j) {
    std::vector<EstimateReport<double>> u, l;
    for (std::size_t si = 0; si < s_upper.size(); ++si)
      u.push_back(lineens::make_estimate<double>(up[j][si], trials));
    for (std::size_t si = 0; si < s_lower.size(); ++si)
      l.push_back(lineens::make_estimate<double>(lo[j][si], trials));
    out.upper_fit.push_back(fit_or_empty(s_upper, u, 25));
    out.lower_fit.push_back(fit_or_empty(s_lower, l, 25));
    out.upper.push_back(std::move(u));
    out.lower.push_back(std::move(l));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jump-ensemble demonstration.
// ---------------------------------------------------------------------------

DemoContext make_demo_context(Index k, double T, Index steps, int recipe,
                              std::uint64_t seed, std::uint64_t index) {
  lineens::require(k >= 2, "make_demo_context: need k >= 2");
  lineens::require(T >= 1.0, "make_demo_context: need T >= 1");
  lineens::require(steps >= 8 && steps % 4 == 0,
                   "make_demo_context: steps must be divisible by 4");
  lineens::require(recipe >= 0 && recipe <= 3, "make_demo_context: unknown recipe");

  const JumpConstants<double> jc = lineens::regularity_constants<double>(k, 1.0, 1.0);
  double eps = std::exp(-std::pow(T / jc.D_k, 3.0));
  // Nudge eps upward until the reconstructed horizon does not exceed the
  // requested one.  With d_ip = 1 a span of at most 2T then admits at most
  // 2T poles, so the cardinality cap cannot be broken by rounding alone.
  while (lineens::jump_horizon(jc, eps) > T) eps = std::nextafter(eps, 1.0);
  // Rebuild the horizon from eps so the grid matches bitwise.
  const double Te = lineens::jump_horizon(jc, eps);
  const TimeGrid<double> grid(-2.0 * Te, 2.0 * Te, steps);

  const RngStream base(seed, 47);
  RngStream rng = substream(base, index * 8 + static_cast<std::uint64_t>(recipe));

  const double t2 = Te * Te;
  auto noise_path = [&](double amp) {
    SampledPath<double> b = lineens::sample_brownian_bridge(grid, 0.0, 0.0, rng);
    b.values *= amp;
    return b;
  };

  // Floor shape in units u = x / T, value = T^2 * shape(u).
  auto shape_value = [&](double u) {
    switch (recipe) {
      case 0:
        return -0.80 - 0.18 * u * u * u * u;
      case 1:
        return -0.55 - 0.12 * u * u - 0.08 * u * u * u * u;
      case 2:
        return 1.0 - 5.5 * std::abs(u);
      default:
        return -0.62 - 0.12 * u * u - 0.04 * u * u * u - 0.10 * u * u * u * u;
    }
  };
  const double noise_amp = (recipe == 0)   ? 0.08 * Te
                           : (recipe == 1) ? 0.18 * Te
                           : (recipe == 2) ? 0.05 * Te
                                           : 0.10 * Te;
  const SampledPath<double> noise = noise_path(noise_amp);
  Vector<double> floor_vals(grid.points());
  for (Index j = 0; j <= steps; ++j)
    floor_vals[j] = t2 * shape_value(grid.point(j) / Te) + noise.values[j];
  const SampledPath<double> floor(grid, floor_vals);

  // Boundary values inside the favourable window, above the floor ends.
  Vector<double> bound(k);
  bound[0] = t2 * (-1.86 + 0.02 * rng.uniform01());
  for (Index i = 1; i < k; ++i)
    bound[i] = bound[i - 1] - t2 * (0.15 + 0.10 * rng.uniform01());

  std::vector<SampledPath<double>> refs;
  refs.reserve(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    SampledPath<double> curve = noise_path(0.10 * Te);
    curve.values.array() += bound[i];
    refs.push_back(std::move(curve));
  }

  return DemoContext{lineens::make_jump_context(jc, eps, 1.0, floor, refs), recipe};
}

int jump_context_violations(const JumpContext<double>& ctx, RngStream& rng,
                            std::vector<std::string>* why) {
  int bad = 0;
  auto flag = [&](bool ok, const char* tag) {
    if (!ok) {
      ++bad;
      if (why) why->push_back(tag);
    }
  };
  const double T = ctx.T;
  const TimeGrid<double>& g = ctx.grid;
  const Index k = ctx.constants.k;
  const Index q = g.steps / 4;
  const double tol = 1e-9 * std::max(1.0, T * T);

  // Majorant: concave, dominates the floor on [-T, T], touches at its knots.
  {
    bool concave = true;
    for (Index s = 0; s + 1 < ctx.majorant.segments(); ++s)
      concave = concave && ctx.majorant.slope(s) >= ctx.majorant.slope(s + 1) - tol;
    flag(concave, "majorant-not-concave");
    bool dominates = true;
    for (Index j = q; j <= 3 * q; ++j)
      dominates = dominates &&
                  ctx.majorant.eval(g.point(j)) >= ctx.floor.values[j] - tol;
    flag(dominates, "majorant-below-floor");
    bool touches = true;
    for (Index j = 0; j < ctx.majorant.xs.size(); ++j) {
      const auto gi = g.index_of(ctx.majorant.xs[j]);
      touches = touches && gi.has_value() &&
                std::abs(ctx.majorant.ys[j] - ctx.floor.values[*gi]) <= tol;
    }
    flag(touches, "majorant-knot-off-floor");
  }

  if (ctx.degenerate) {
    flag(!ctx.fav, "degenerate-context-marked-favourable");
    return bad;
  }

  flag(ctx.l < ctx.r, "selection-not-ordered");
  flag(ctx.l >= -T - tol && ctx.r <= T + tol, "selection-outside-horizon");
  flag(g.point(ctx.l_idx) == ctx.l && g.point(ctx.r_idx) == ctx.r,
       "selection-index-mismatch");

  // Poles: endpoints present, separated, covering, within the cardinality cap.
  const Index np = ctx.poles.size();
  flag(np >= 2 && ctx.poles[0] == ctx.l && ctx.poles[np - 1] == ctx.r,
       "poles-missing-endpoints");
  bool separated = true;
  for (Index j = 0; j + 1 < np; ++j)
    separated = separated && ctx.poles[j + 1] - ctx.poles[j] > ctx.d_ip;
  flag(separated, "poles-not-separated");
  // The count is an integer, so a slack well below 1 keeps this check exact;
  // the loose slack only absorbs the horizon's eps round-trip error.
  flag(static_cast<double>(np) <= 2.0 * T + 1e-6 * std::max(1.0, T),
       "pole-cardinality-cap");

  std::vector<double> xext{ctx.l};
  for (Index j = 0; j < ctx.majorant.xs.size(); ++j) {
    const double x = ctx.majorant.xs[j];
    if (x > ctx.l && x < ctx.r) xext.push_back(x);
  }
  xext.push_back(ctx.r);
  bool covered = true;
  bool members = true;
  for (double x : xext) {
    double nearest = std::numeric_limits<double>::infinity();
    bool is_pole = false;
    for (Index j = 0; j < np; ++j) {
      nearest = std::min(nearest, std::abs(x - ctx.poles[j]));
      is_pole = is_pole || x == ctx.poles[j];
    }
    if (!is_pole) covered = covered && nearest <= ctx.d_ip + tol;
  }
  for (Index j = 0; j < np; ++j)
    members = members && std::count(xext.begin(), xext.end(), ctx.poles[j]) == 1;
  flag(covered, "rejected-vertex-uncovered");
  flag(members, "pole-not-a-vertex");

  // Tent: nodes at pole tops, slopes within [-4T, 4T], dominates the floor up
  // to the 8 * d_ip * T allowance.
  flag(ctx.tent.xs.size() == np, "tent-node-count");
  bool tent_nodes = true;
  for (Index j = 0; j < np && j < ctx.tent.xs.size(); ++j)
    tent_nodes = tent_nodes && ctx.tent.xs[j] == ctx.poles[j] &&
                 ctx.tent.ys[j] == ctx.floor.values[ctx.pole_idx[j]];
  flag(tent_nodes, "tent-node-values");
  bool tent_slopes = true;
  for (Index s = 0; s < ctx.tent.segments(); ++s)
    tent_slopes = tent_slopes && std::abs(ctx.tent.slope(s)) <= 4.0 * T + tol;
  flag(tent_slopes, "tent-slope-bound");
  bool tent_dominates = true;
  for (Index j = ctx.l_idx; j <= ctx.r_idx; ++j)
    tent_dominates = tent_dominates &&
                     ctx.floor.values[j] <=
                         ctx.tent.eval(g.point(j)) + 8.0 * ctx.d_ip * T + tol;
  flag(tent_dominates, "tent-domination");

  // Favourable-event coherence.
  flag(ctx.fav == (ctx.f1 && ctx.f2 && ctx.f3), "favourable-flag-mismatch");
  try {
    lineens::check_fav(ctx);
  } catch (const std::exception&) {
    flag(false, "favourable-middle-window");
  }

  // Corners characterize the brute-force side indicators exactly.
  {
    Vector<double> free_l(k), free_r(k);
    for (Index i = 0; i < k; ++i) {
      free_l[i] = ctx.side_left(i, ctx.l_idx);
      free_r[i] = ctx.side_right(i, 0);
    }
    auto left_raw = [&](const Vector<double>& xbar) {
      for (Index j = 1; j <= ctx.l_idx; ++j) {
        const double w = ctx.weight_left(j);
        for (Index i = 0; i + 1 < k; ++i) {
          const double hi = ctx.side_left(i, j) + w * (xbar[i] - free_l[i]);
          const double lo2 = ctx.side_left(i + 1, j) + w * (xbar[i + 1] - free_l[i + 1]);
          if (!(hi > lo2)) return false;
        }
        const double low = ctx.side_left(k - 1, j) + w * (xbar[k - 1] - free_l[k - 1]);
        if (!(low > ctx.floor.values[j])) return false;
      }
      return true;
    };
    auto right_raw = [&](const Vector<double>& ybar) {
      for (Index j = ctx.r_idx; j < g.steps; ++j) {
        const double w = ctx.weight_right(j);
        for (Index i = 0; i + 1 < k; ++i) {
          const double hi = ctx.side_right(i, j - ctx.r_idx) + w * (ybar[i] - free_r[i]);
          const double lo2 =
              ctx.side_right(i + 1, j - ctx.r_idx) + w * (ybar[i + 1] - free_r[i + 1]);
          if (!(hi > lo2)) return false;
        }
        const double low =
            ctx.side_right(k - 1, j - ctx.r_idx) + w * (ybar[k - 1] - free_r[k - 1]);
        if (!(low > ctx.floor.values[j])) return false;
      }
      return true;
    };
    bool corners_ok = true;
    Vector<double> probe(k);
    for (int t = 0; t < 24 && corners_ok; ++t) {
      for (Index i = 0; i < k; ++i)
        probe[i] = ctx.corners.left[i] +
                   (rng.uniform01() * 2.4 - 0.4) * (0.5 + static_cast<double>(k - i));
      corners_ok = lineens::side_admissible(ctx.corners.left, probe) == left_raw(probe);
    }
    for (int t = 0; t < 24 && corners_ok; ++t) {
      for (Index i = 0; i < k; ++i)
        probe[i] = ctx.corners.right[i] +
                   (rng.uniform01() * 2.4 - 0.4) * (0.5 + static_cast<double>(k - i));
      corners_ok = lineens::side_admissible(ctx.corners.right, probe) == right_raw(probe);
    }
    // Margins just beyond the corner flip the indicator on.
    for (Index i = 0; i < k; ++i)
      probe[i] = ctx.corners.left[i] + 1e-6 * static_cast<double>(k - i);
    corners_ok = corners_ok && lineens::side_admissible(ctx.corners.left, probe) &&
                 left_raw(probe);
    for (Index i = 0; i < k; ++i)
      probe[i] = ctx.corners.right[i] + 1e-6 * static_cast<double>(k - i);
    corners_ok = corners_ok && lineens::side_admissible(ctx.corners.right, probe) &&
                 right_raw(probe);
    flag(corners_ok, "corner-characterization");
  }

  // Reconstruction: middle verbatim, sides verbatim when endpoints match.
  {
    const TimeGrid<double> mg = ctx.middle_grid();
    std::vector<SampledPath<double>> ident;
    for (Index i = 0; i < k; ++i) {
      Vector<double> vals(mg.points());
      const double a = ctx.side_left(i, ctx.l_idx);
      const double b = ctx.side_right(i, 0);
      for (Index j = 0; j <= mg.steps; ++j)
        vals[j] = a + (b - a) * mg.theta(j);
      vals[0] = a;
      vals[mg.steps] = b;
      ident.emplace_back(mg, vals);
    }
    const auto full = lineens::reconstruct(ctx, ident);
    bool recon_ok = full.size() == static_cast<std::size_t>(k);
    for (Index i = 0; i < k && recon_ok; ++i) {
      for (Index j = 0; j <= ctx.l_idx && recon_ok; ++j)
        recon_ok = full[i].values[j] == ctx.side_left(i, j);
      for (Index j = ctx.r_idx; j <= g.steps && recon_ok; ++j)
        recon_ok = full[i].values[j] == ctx.side_right(i, j - ctx.r_idx);
      for (Index j = ctx.l_idx; j <= ctx.r_idx && recon_ok; ++j)
        recon_ok = full[i].values[j] == ident[i].values[j - ctx.l_idx];
    }
    flag(recon_ok, "reconstruction-identity");

    auto cand = lineens::sample_wiener_candidate(ctx, rng);
    const auto moved = lineens::reconstruct(ctx, cand);
    bool moved_ok = true;
    for (Index i = 0; i < k && moved_ok; ++i) {
      moved_ok = moved[i].values[0] == ctx.bound_left[i] &&
                 moved[i].values[g.steps] == ctx.bound_right[i];
      for (Index j = ctx.l_idx; j <= ctx.r_idx && moved_ok; ++j)
        moved_ok = moved[i].values[j] == cand[i].values[j - ctx.l_idx];
    }
    flag(moved_ok, "reconstruction-candidate");
  }

  return bad;
}

JumpDemoStats run_jump_demo(long long contexts, long long candidates_per_context,
                            Index steps, std::uint64_t seed) {
  lineens::require(contexts >= 1, "run_jump_demo: need contexts >= 1");
  JumpDemoStats st;
  const RngStream base(seed, 48);
  for (long long c = 0; c < contexts; ++c) {
    const int recipe = static_cast<int>(c % 4);
    DemoContext demo =
        make_demo_context(2, 1.0, steps, recipe, seed, static_cast<std::uint64_t>(c));
    const JumpContext<double>& ctx = demo.ctx;
    ++st.contexts;
    RngStream rng = substream(base, static_cast<std::uint64_t>(c));
    st.structural_violations += jump_context_violations(ctx, rng, nullptr);
    if (ctx.degenerate) {
      ++st.degenerate;
      continue;
    }
    if (ctx.fav) ++st.fav;
    for (long long i = 0; i < candidates_per_context; ++i) {
      const auto cand = lineens::sample_wiener_candidate(ctx, rng);
      ++st.candidates;
      try {
        const auto t = lineens::run_candidate_tests(ctx, cand);
        st.t1 += t.t1;
        st.t2 += t.t2;
        st.t12 += t.t1 && t.t2;
        st.t3 += t.t3;
      } catch (const std::exception&) {
        ++st.implication_violations;
      }
    }
    if (ctx.fav) {
      try {
        const auto js = lineens::sample_jump_ensemble(ctx, rng, 50'000);
        ++st.jump_samples;
        st.jump_t3 += js.t3 ? 1 : 0;
      } catch (const lineens::rejection_exhausted&) {
        // Slim acceptance for this context; skipped, not a violation.
      }
    }
  }
  const JumpConstants<double> jc = lineens::regularity_constants<double>(2, 1.0, 1.0);
  const double eps = std::exp(-std::pow(1.0 / jc.D_k, 3.0));
  st.vault_bound = lineens::vault_success_lower_bound(jc, eps, 1.0);
  st.promotion_bound = lineens::promotion_lower_bound(jc, eps);
  return st;
}

// ---------------------------------------------------------------------------
// CSV runners.
// ---------------------------------------------------------------------------

namespace {

struct Common {
  std::uint64_t seed;
  long long n, k, steps, trials;
};

Common read_common(const Config& cfg, long long n, long long k, long long steps,
                   long long trials) {
  Common c;
  c.seed = cfg.get_u64("seed", 1);
  c.n = cfg.get_int("n", n);
  c.k = cfg.get_int("k", k);
  c.steps = cfg.get_int("steps", steps);
  c.trials = cfg.get_int("trials", trials);
  if (c.n < 1) throw config_error("n must be positive");
  if (c.k < 1) throw config_error("k must be positive");
  if (c.steps < 1) throw config_error("steps must be positive");
  if (c.trials < 1) throw config_error("trials must be positive");
  return c;
}

CsvRow base_row(const std::string& experiment, const Common& c) {
  CsvRow row;
  row.experiment = experiment;
  row.seed = c.seed;
  row.n = c.n;
  row.k = c.k;
  row.steps = c.steps;
  row.trials = c.trials;
  return row;
}

std::string kv(const std::string& key, double value) {
  return key + "=" + format_double(value);
}

std::string kv_int(const std::string& key, long long value) {
  return key + "=" + std::to_string(value);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sem_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s2 = 0.0;
  for (double x : v) s2 += (x - m) * (x - m);
  if (v.size() < 2) return 0.0;
  return std::sqrt(s2 / (static_cast<double>(v.size()) - 1.0) /
                   static_cast<double>(v.size()));
}

}  // namespace

std::vector<CsvRow> run_simulate_lpp(const Config& cfg) {
  const Common c = read_common(cfg, 5, 3, 2000, 200);
  if (c.k > c.n) throw config_error("simulate-lpp: need k <= n");
  const TimeGrid<double> grid(0.0, static_cast<double>(c.n), c.steps);
  const RngStream base(c.seed, 11);
  std::vector<std::vector<double>> ends(static_cast<std::size_t>(c.k));
  std::vector<double> scaled_top;
  for (long long t = 0; t < c.trials; ++t) {
    RngStream rng = substream(base, static_cast<std::uint64_t>(t));
    const BrownianField<double> field =
        lineens::sample_brownian_field(c.n, grid, rng);
    const auto ens = lineens::line_ensemble(field, c.k);
    for (long long i = 0; i < c.k; ++i)
      ends[static_cast<std::size_t>(i)].push_back(ens.values(i, c.steps));
    scaled_top.push_back(lineens::scaled_value(ens.values(0, c.steps), c.n, 0.0));
  }
  std::vector<CsvRow> rows;
  for (long long i = 0; i < c.k; ++i) {
    CsvRow row = base_row("simulate-lpp", c);
    row.param_name = "line";
    row.param_value = static_cast<double>(i + 1);
    row.estimate = mean_of(ends[static_cast<std::size_t>(i)]);
    row.std_err = sem_of(ends[static_cast<std::size_t>(i)]);
    row.extra = "stat=line_end;" + kv("t", static_cast<double>(c.n));
    rows.push_back(row);
  }
  CsvRow row = base_row("simulate-lpp", c);
  row.param_name = "scaled_top";
  row.param_value = 0.0;
  row.estimate = mean_of(scaled_top);
  row.std_err = sem_of(scaled_top);
  row.extra = "stat=edge_scaled_top;x=0";
  rows.push_back(row);
  return rows;
}

std::vector<CsvRow> run_simulate_dyson(const Config& cfg) {
  const Common c = read_common(cfg, 10, 3, 100, 200);
  if (c.k > c.n) throw config_error("simulate-dyson: need k <= n");
  const double tmax = cfg.get_double("tmax", static_cast<double>(c.n));
  if (!(tmax > 0.0)) throw config_error("simulate-dyson: need tmax > 0");
  const TimeGrid<double> grid(0.0, tmax, c.steps);
  const RngStream base(c.seed, 12);
  std::vector<std::vector<double>> finals(static_cast<std::size_t>(c.k));
  for (long long t = 0; t < c.trials; ++t) {
    RngStream rng = substream(base, static_cast<std::uint64_t>(t));
    const auto proc = lineens::hbm_eigen_process(c.n, grid, rng);
    for (long long i = 0; i < c.k; ++i)
      finals[static_cast<std::size_t>(i)].push_back(proc.values(i, c.steps));
  }
  std::vector<CsvRow> rows;
  for (long long i = 0; i < c.k; ++i) {
    CsvRow row = base_row("simulate-dyson", c);
    row.param_name = "line";
    row.param_value = static_cast<double>(i + 1);
    row.estimate = mean_of(finals[static_cast<std::size_t>(i)]);
    row.std_err = sem_of(finals[static_cast<std::size_t>(i)]);
    row.extra = "stat=eigen_final;" + kv("tmax", tmax);
    rows.push_back(row);
  }
  return rows;
}

std::vector<CsvRow> run_estimate_close(const Config& cfg) {
  const Common c = read_common(cfg, 2, 2, 64, 20000);
  if (c.k != 2)
    throw config_error("estimate-close: only k=2 is supported (exact conditioning)");
  if (c.steps % 2 != 0) throw config_error("estimate-close: steps must be even");
  const double sep = cfg.get_double("sep", 1.0);
  const double halfwidth = cfg.get_double("halfwidth", 1.0);
  if (!(sep > 0.0) || !(halfwidth > 0.0))
    throw config_error("estimate-close: sep and halfwidth must be positive");
  const std::vector<double> phis =
      cfg.get_double_list("phis", {0.05, 0.1, 0.2, 0.4});
  const long long attempts = cfg.get_int("attempts", 1'000'000);
  const long long min_hits = cfg.get_int("min_hits", 25);

  auto sampler = [&](RngStream& rng) {
    return sample_conditioned_gap(sep, halfwidth, c.steps, attempts, rng);
  };
  const auto reports =
      lineens::estimate_tail<double>(sampler, phis, c.trials,
                                     RngStream(c.seed, 21), /*upper=*/false);
  const LinearFit<double> fit = lineens::fit_exponent(phis, reports, min_hits);

  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    CsvRow row = base_row("estimate-close", c);
    row.param_name = "phi";
    row.param_value = phis[i];
    row.estimate = reports[i].estimate;
    row.std_err = reports[i].std_err;
    row.extra = kv_int("hits", reports[i].hits) + ";" + kv("sep", sep);
    rows.push_back(row);
  }
  CsvRow row = base_row("estimate-close", c);
  row.param_name = "slope";
  row.param_value = 0.0;
  row.estimate = fit.slope;
  row.std_err = fit.slope_std_err;
  row.extra = kv("r2", fit.r2) + ";" + kv_int("points", fit.used);
  rows.push_back(row);
  return rows;
}

std::vector<CsvRow> run_estimate_neargeod(const Config& cfg) {
  const Common c = read_common(cfg, 8, 2, 128, 5000);
  if (c.k < 2 || c.k > c.n) throw config_error("estimate-neargeod: need 2 <= k <= n");
  const std::string model = cfg.get_string("model", "dyson");
  if (model != "dyson" && model != "lpp")
    throw config_error("estimate-neargeod: model must be dyson or lpp");
  const std::vector<double> rs = cfg.get_double_list(
      "rs", model == "dyson" ? std::vector<double>{0.1, 0.15, 0.225, 0.34}
                             : std::vector<double>{0.3, 0.45, 0.675, 1.0});
  const long long min_hits = cfg.get_int("min_hits", 25);
  auto sampler = [&](RngStream& rng) {
    return model == "dyson" ? sample_deficit_dyson(c.n, c.k, rng)
                            : sample_deficit(c.n, c.k, c.steps, rng);
  };
  const auto reports = lineens::estimate_tail<double>(
      sampler, rs, c.trials, RngStream(c.seed, 22), /*upper=*/false);
  const LinearFit<double> fit = lineens::fit_exponent(rs, reports, min_hits);

  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CsvRow row = base_row("estimate-neargeod", c);
    row.param_name = "r";
    row.param_value = rs[i];
    row.estimate = reports[i].estimate;
    row.std_err = reports[i].std_err;
    row.extra = kv_int("hits", reports[i].hits);
    rows.push_back(row);
  }
  CsvRow row = base_row("estimate-neargeod", c);
  row.param_name = "slope";
  row.param_value = 0.0;
  row.estimate = fit.slope;
  row.std_err = fit.slope_std_err;
  row.extra = "model=" + model + ";" + kv("r2", fit.r2) + ";" +
              kv_int("points", fit.used);
  rows.push_back(row);
  return rows;
}

std::vector<CsvRow> run_check_km(const Config& cfg) {
  const Common c = read_common(cfg, 3, 3, 128, 20000);
  const RngStream base(c.seed, 23);
  std::vector<CsvRow> rows;

  auto run_case = [&](const char* tag, const Vector<double>& x,
                      const Vector<double>& y, double rho, std::uint64_t salt) {
    const auto det = lineens::km_avoidance(x, y, rho);
    long long hits = 0;
    const RngStream case_base = substream(base, salt);
    for (long long t = 0; t < c.trials; ++t) {
      RngStream rng = substream(case_base, static_cast<std::uint64_t>(t));
      if (avoidance_proposal(x, y, rho, c.steps, rng)) ++hits;
    }
    const auto est = lineens::make_estimate<double>(hits, c.trials);
    const double z =
        est.std_err > 0.0 ? (est.estimate - det.value) / est.std_err : 0.0;

    CsvRow drow = base_row("check-km", c);
    drow.k = x.size();
    drow.param_name = std::string("determinant_") + tag;
    drow.param_value = rho;
    drow.estimate = det.value;
    drow.std_err = 0.0;
    drow.extra = kv_int("cancellation_warning", det.cancellation_warning ? 1 : 0);
    rows.push_back(drow);

    CsvRow mrow = base_row("check-km", c);
    mrow.k = x.size();
    mrow.param_name = std::string("rejection_") + tag;
    mrow.param_value = rho;
    mrow.estimate = est.estimate;
    mrow.std_err = est.std_err;
    mrow.extra = kv("z", z) + ";" + kv_int("hits", hits);
    rows.push_back(mrow);
  };

  Vector<double> x2(2), y2(2);
  x2 << 1.0, 0.0;
  y2 << 1.0, 0.0;
  run_case("k2", x2, y2, 1.0, 101);

  Vector<double> x3(3), y3(3);
  x3 << 2.1, 0.3, -1.9;
  y3 << 1.8, -0.2, -2.2;
  run_case("k3", x3, y3, 1.0, 102);
  return rows;
}

std::vector<CsvRow> run_check_gibbs(const Config& cfg) {
  const Common c = read_common(cfg, 3, 3, 64, 2000);
  const long long attempts = cfg.get_int("attempts", 1'000'000);
  const GibbsPair gp = gibbs_invariance_samples(c.trials, c.steps, attempts, c.seed);
  const double ks = lineens::ks_statistic(gp.direct, gp.resampled);
  const double crit = lineens::ks_critical<double>(gp.direct.size(), gp.resampled.size());

  std::vector<CsvRow> rows;
  CsvRow krow = base_row("check-gibbs", c);
  krow.param_name = "ks";
  krow.estimate = ks;
  krow.extra = kv("mean_attempts_direct", gp.mean_attempts_direct) + ";" +
               kv("mean_attempts_resample", gp.mean_attempts_resample);
  rows.push_back(krow);
  CsvRow crow = base_row("check-gibbs", c);
  crow.param_name = "critical";
  crow.estimate = crit;
  crow.extra = kv_int("pass", ks < crit ? 1 : 0);
  rows.push_back(crow);
  return rows;
}

std::vector<CsvRow> run_jump_demo_csv(const Config& cfg) {
  Common c = read_common(cfg, 1, 2, 64, 1);
  const long long contexts = cfg.get_int("contexts", 50);
  const long long candidates = cfg.get_int("candidates", 20);
  if (contexts < 1 || candidates < 1)
    throw config_error("jump-demo: contexts and candidates must be positive");
  const JumpDemoStats st = run_jump_demo(contexts, candidates, c.steps, c.seed);
  c.trials = st.candidates;

  std::vector<CsvRow> rows;
  auto push = [&](const char* name, double value, const std::string& extra = "") {
    CsvRow row = base_row("jump-demo", c);
    row.param_name = name;
    row.estimate = value;
    row.extra = extra;
    rows.push_back(row);
  };
  push("contexts", static_cast<double>(st.contexts));
  push("degenerate", static_cast<double>(st.degenerate));
  push("favourable", static_cast<double>(st.fav));
  push("structural_violations", static_cast<double>(st.structural_violations));
  push("implication_violations", static_cast<double>(st.implication_violations));
  const double cand = std::max<double>(1.0, static_cast<double>(st.candidates));
  push("t12_rate", static_cast<double>(st.t12) / cand,
       kv_int("t1", st.t1) + ";" + kv_int("t2", st.t2));
  push("t3_rate", static_cast<double>(st.t3) / cand, kv_int("t3", st.t3));
  push("jump_t3_rate",
       st.jump_samples > 0
           ? static_cast<double>(st.jump_t3) / static_cast<double>(st.jump_samples)
           : 0.0,
       kv_int("jump_samples", st.jump_samples) + ";" + kv_int("jump_t3", st.jump_t3));
  push("vault_bound", st.vault_bound);
  push("promotion_bound", st.promotion_bound);
  return rows;
}

std::vector<CsvRow> run_check_regularity(const Config& cfg) {
  const Common c = read_common(cfg, 30, 1, 1, 2000);
  const std::vector<double> zs = cfg.get_double_list("z", {-1.0, 0.0, 1.0});
  const std::vector<double> s_upper =
      cfg.get_double_list("s_upper", {0.2, 0.45, 0.7, 0.95});
  const std::vector<double> s_lower =
      cfg.get_double_list("s_lower", {1.4, 1.7, 2.0, 2.3});
  const bool structural = lineens::check_scaling_structure<double>(c.n);
  const RecentredTails rt =
      recentred_top_tails(c.n, zs, s_upper, s_lower, c.trials, c.seed, 24);

  std::vector<CsvRow> rows;
  CsvRow srow = base_row("check-regularity", c);
  srow.param_name = "structural";
  srow.estimate = structural ? 1.0 : 0.0;
  rows.push_back(srow);
  for (std::size_t j = 0; j < zs.size(); ++j) {
    for (int side = 0; side < 2; ++side) {
      const LinearFit<double>& fit = side == 0 ? rt.upper_fit[j] : rt.lower_fit[j];
      CsvRow row = base_row("check-regularity", c);
      row.param_name = side == 0 ? "upper_slope" : "lower_slope";
      row.param_value = zs[j];
      row.estimate = fit.slope;
      row.std_err = fit.slope_std_err;
      row.extra = kv("r2", fit.r2) + ";" + kv_int("points", fit.used);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<CsvRow> run_bridge_compare(const Config& cfg) {
  const Common c = read_common(cfg, 30, 1, 16, 20000);
  const double d = cfg.get_double("d", 1.0);
  if (!(d > 0.0)) throw config_error("bridge-compare: need d > 0");
  const std::vector<double> levels = cfg.get_double_list("levels", {1.0, 1.5, 2.0});
  const TimeGrid<double> xgrid(0.0, d, c.steps);
  auto sampler = [&](RngStream& rng) {
    const auto ens = lineens::sample_scaled_dyson(c.n, xgrid, rng);
    return SampledPath<double>(xgrid, ens.values.row(0).transpose());
  };
  const auto res = lineens::bridge_compare_tail<double>(sampler, d, levels, c.trials,
                                                        RngStream(c.seed, 31));
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    CsvRow row = base_row("bridge-compare", c);
    row.param_name = "s";
    row.param_value = levels[i];
    row.estimate = res.ratio[i];
    row.std_err = 0.0;
    row.extra = kv("ensemble", res.ensemble[i].estimate) + ";" +
                kv("bridge", res.bridge[i].estimate) + ";" +
                kv("bracket_low", res.bracket_low[i]) + ";" +
                kv("bracket_high", res.bracket_high[i]) + ";" +
                kv_int("ens_hits", res.ensemble[i].hits) + ";" +
                kv_int("bridge_hits", res.bridge[i].hits);
    rows.push_back(row);
  }
  return rows;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "simulate-lpp",      "simulate-dyson", "estimate-close",
      "estimate-neargeod", "check-km",       "check-gibbs",
      "jump-demo",         "check-regularity", "bridge-compare"};
  return names;
}

std::vector<CsvRow> run_experiment(const std::string& name, const Config& cfg) {
  if (name == "simulate-lpp") return run_simulate_lpp(cfg);
  if (name == "simulate-dyson") return run_simulate_dyson(cfg);
  if (name == "estimate-close") return run_estimate_close(cfg);
  if (name == "estimate-neargeod") return run_estimate_neargeod(cfg);
  if (name == "check-km") return run_check_km(cfg);
  if (name == "check-gibbs") return run_check_gibbs(cfg);
  if (name == "jump-demo") return run_jump_demo_csv(cfg);
  if (name == "check-regularity") return run_check_regularity(cfg);
  if (name == "bridge-compare") return run_bridge_compare(cfg);
  throw config_error("unknown experiment '" + name + "'");
}

}  // namespace lab
