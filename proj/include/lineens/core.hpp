#pragma once

// Core plumbing: uniform time grids, piecewise-linear sampled paths,
// reproducible counter-based RNG streams, Brownian motion/bridge samplers,
// and the exact Gaussian/bridge formulas used by every other header.
//
// All operations are pure given their RngStream; values are plain
// value-semantic types safe to share read-only across threads.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lineens {

template <class S = double>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S = double>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Thrown when a rejection sampler runs out of attempts; carries the attempt
// count so callers can report an acceptance-rate estimate.
struct rejection_exhausted : std::runtime_error {
  long long attempts;
  long long accepted;
  rejection_exhausted(const char* what, long long att, long long acc)
      : std::runtime_error(what), attempts(att), accepted(acc) {}
  // Upper confidence bound (~95%) on the acceptance probability.
  double acceptance_upper_bound() const {
    if (attempts <= 0) return 1.0;
    return (static_cast<double>(accepted) + 3.0) / static_cast<double>(attempts);
  }
};

// Thrown when a numerical routine fails its internal accuracy check.
struct numeric_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// RngStream: deterministic counter-based stream.
//
// Output i of stream (seed, index) is mix(key + i*gamma) where key is an
// avalanche hash of (seed, index) — a SplittableRandom-style construction, so
// every draw is a pure function of (master_seed, stream_index, draw_count) and
// distinct indices give statistically independent streams.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull));
}

}  // namespace detail

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : seed_(master_seed),
        index_(stream_index),
        key_(detail::stream_key(master_seed, stream_index)),
        counter_(0) {}

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t stream_index() const { return index_; }
  std::uint64_t draw_count() const { return counter_; }

  std::uint64_t next_u64() {
    return detail::mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ull);
  }

  // Uniform on (0,1); 53-bit mantissa, never exactly 0.
  double uniform01() {
    const std::uint64_t bits = next_u64() >> 11;
    double u = static_cast<double>(bits) * 0x1.0p-53;
    if (u <= 0.0) u = 0x1.0p-53;
    return u;
  }

  // Standard normal by Box-Muller; a fresh pair of uniforms per draw keeps the
  // draw a stateless function of the counter (no cached second value).
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t key_;
  std::uint64_t counter_;
};

// Child stream i of a base stream: a pure function of (master seed, base
// index, i), so per-trial streams are reproducible regardless of how many
// draws any other trial consumed.
inline RngStream substream(const RngStream& base, std::uint64_t i) {
  const std::uint64_t idx =
      detail::mix64(base.stream_index() * 0xda942042e4dd58b5ull ^
                    (i + 0x632be59bd9b4e019ull));
  return RngStream(base.master_seed(), idx);
}

// ---------------------------------------------------------------------------
// TimeGrid: uniform grid on [a,b]; gridpoint i sits at exactly a + i*h.
// ---------------------------------------------------------------------------

template <class S = double>
struct TimeGrid {
  S a;
  S b;
  Index steps;

  TimeGrid(S a_, S b_, Index steps_) : a(a_), b(b_), steps(steps_) {
    require(a < b, "TimeGrid: need a < b");
    require(steps >= 1, "TimeGrid: need steps >= 1");
  }

  S h() const { return (b - a) / static_cast<S>(steps); }
  Index points() const { return steps + 1; }
  S point(Index i) const { return a + static_cast<S>(i) * h(); }
  // Affine parameter of gridpoint i; exactly 0 at i=0 and exactly 1 at i=steps.
  S theta(Index i) const { return static_cast<S>(i) / static_cast<S>(steps); }

  bool operator==(const TimeGrid& o) const {
    return a == o.a && b == o.b && steps == o.steps;
  }
  bool operator!=(const TimeGrid& o) const { return !(*this == o); }

  // Index of the gridpoint at time t if t lies on the grid (within one
  // rounding ulp), otherwise empty.
  std::optional<Index> index_of(S t) const {
    const S u = (t - a) / h();
    const Index i = static_cast<Index>(std::llround(static_cast<double>(u)));
    if (i < 0 || i > steps) return std::nullopt;
    const S back = point(i);
    const S tol = std::abs(h()) * static_cast<S>(1e-9);
    if (std::abs(back - t) <= tol) return i;
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// SampledPath: values on a TimeGrid, interpreted as the linear interpolant.
// ---------------------------------------------------------------------------

template <class S = double>
struct SampledPath {
  TimeGrid<S> grid;
  Vector<S> values;  // length grid.points()

  SampledPath(const TimeGrid<S>& g, Vector<S> v) : grid(g), values(std::move(v)) {
    require(values.size() == grid.points(), "SampledPath: value count != gridpoints");
  }
  explicit SampledPath(const TimeGrid<S>& g)
      : grid(g), values(Vector<S>::Zero(g.points())) {}

  S operator[](Index i) const { return values[i]; }
  S& operator[](Index i) { return values[i]; }

  // Evaluate the linear interpolant; clamps to the first/last gridpoint, so
  // eval(a) and eval(b) return the stored endpoint values bit-exactly.
  S eval(S t) const {
    const S u = (t - grid.a) / grid.h();
    if (!(u > 0)) return values[0];
    if (u >= static_cast<S>(grid.steps)) return values[grid.steps];
    const Index i = static_cast<Index>(std::floor(static_cast<double>(u)));
    const S w = u - static_cast<S>(i);
    return (S(1) - w) * values[i] + w * values[i + 1];
  }
};

// ---------------------------------------------------------------------------
// GaussianLaw and exact Gaussian formulas.
// ---------------------------------------------------------------------------

template <class S = double>
struct GaussianLaw {
  S mean;
  S variance;

  GaussianLaw(S m, S var) : mean(m), variance(var) {
    require(variance >= S(0), "GaussianLaw: variance must be >= 0");
  }
  S sd() const { return std::sqrt(variance); }
};

// Density of the normal law with the given mean and variance.
template <class S>
S gaussian_density(S mean, S variance, S x) {
  require(variance > S(0), "gaussian_density: variance must be > 0");
  const S d = x - mean;
  const S inv_sqrt_2pi = S(0.39894228040143267793994605993438L);
  return inv_sqrt_2pi / std::sqrt(variance) * std::exp(-d * d / (S(2) * variance));
}

// P(N(0,1) > t), evaluated via erfc.
template <class S>
S gaussian_upper_tail(S t) {
  return std::erfc(t / std::sqrt(S(2))) / S(2);
}

template <class S = double>
struct TailBounds {
  std::optional<S> lower;  // present only for t >= 1
  S upper;
};

// Bracket for the standard normal upper tail at t >= 0:
//   upper = (2*pi)^{-1/2} t^{-1} e^{-t^2/2}  (infinite at t = 0),
//   lower = (2*pi)^{-1/2} (2t)^{-1} e^{-t^2/2}, reported only when t >= 1.
template <class S>
TailBounds<S> gaussian_tail_bounds(S t) {
  require(t >= S(0), "gaussian_tail_bounds: need t >= 0");
  const S inv_sqrt_2pi = S(0.39894228040143267793994605993438L);
  TailBounds<S> out{std::nullopt, std::numeric_limits<S>::infinity()};
  if (t > S(0)) out.upper = inv_sqrt_2pi / t * std::exp(-t * t / S(2));
  if (t >= S(1)) out.lower = out.upper / S(2);
  return out;
}

// ---------------------------------------------------------------------------
// Samplers.
// ---------------------------------------------------------------------------

// Brownian motion with diffusion parameter one started at `start`:
// independent N(0,h) increments over consecutive gridpoints.
template <class S>
SampledPath<S> sample_brownian_motion(const TimeGrid<S>& grid, S start, RngStream& rng) {
  SampledPath<S> path(grid);
  path[0] = start;
  const S sd = std::sqrt(grid.h());
  for (Index i = 0; i < grid.steps; ++i)
    path[i + 1] = path[i] + sd * static_cast<S>(rng.normal());
  return path;
}

// Brownian bridge from (a,x) to (b,y) with diffusion parameter one. A motion
// is sampled and the exact pinning transform applied, so the finite-dimensional
// laws at gridpoints are exactly those of the bridge; both endpoint values are
// then stored bit-exactly.
template <class S>
SampledPath<S> sample_brownian_bridge(const TimeGrid<S>& grid, S x, S y, RngStream& rng) {
  SampledPath<S> w = sample_brownian_motion(grid, S(0), rng);
  SampledPath<S> path(grid);
  const S wN = w[grid.steps];
  for (Index i = 0; i <= grid.steps; ++i) {
    const S th = grid.theta(i);
    path[i] = x + (w[i] - th * wN) + th * (y - x);
  }
  path[0] = x;
  path[grid.steps] = y;
  return path;
}

// Standard-bridge transform: subtract the affine interpolant of the endpoint
// values. The output vanishes exactly at both endpoints and the input minus
// the output is affine.
template <class S>
SampledPath<S> affine_to_standard(const SampledPath<S>& path) {
  SampledPath<S> out(path.grid);
  const S f0 = path[0];
  const S fN = path[path.grid.steps];
  for (Index i = 0; i <= path.grid.steps; ++i) {
    const S th = path.grid.theta(i);
    out[i] = path.values[i] - (S(1) - th) * f0 - th * fN;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pinned conditional Gaussian laws.
// ---------------------------------------------------------------------------

// Single bridge on [l1,l2] from 0 to z, conditioned on B(b) - B(a) = j with
// l1 < a < b < l2: the law of B(a) is normal with
//   1/var = 1/(a-l1) + 1/(l2-b),   mean = (z - j)/(l2 - b) * var.
template <class S>
GaussianLaw<S> pinned_conditional_gaussian(S l1, S a, S b, S l2, S z, S j) {
  require(l1 < a && a < b && b < l2,
          "pinned_conditional_gaussian: need l1 < a < b < l2 (no degenerate side)");
  const S var = S(1) / (S(1) / (a - l1) + S(1) / (l2 - b));
  const S m = (z - j) / (l2 - b) * var;
  return GaussianLaw<S>(m, var);
}

// k independent bridges on [l1,l2] from entrance ybar to exit zbar, jointly
// conditioned on the increment vector B(i,b) - B(i,a) = j_i for all i and on
// the entrance-side gaps B(i,a) - B(i+1,a) = r_i - r_{i+1} for i < k. The law
// of the lowest value B(k,a) is normal with
//   mean = r_k - mean(r) + w_a*(mean(z) - mean(j)) + w_b*mean(y),
//   1/var = k * (1/(a-l1) + 1/(l2-b)),
// where w_a = (a-l1)/((a-l1)+(l2-b)) and w_b = 1 - w_a.
template <class S>
GaussianLaw<S> pinned_conditional_gaussian(S l1, S a, S b, S l2,
                                           const Vector<S>& ybar,
                                           const Vector<S>& zbar,
                                           const Vector<S>& jbar,
                                           const Vector<S>& rbar) {
  require(l1 < a && a < b && b < l2,
          "pinned_conditional_gaussian: need l1 < a < b < l2 (no degenerate side)");
  const Index k = ybar.size();
  require(k >= 1, "pinned_conditional_gaussian: need k >= 1");
  require(zbar.size() == k && jbar.size() == k && rbar.size() == k,
          "pinned_conditional_gaussian: vector length mismatch");
  const S da = a - l1;
  const S db = l2 - b;
  const S D = da + db;
  const S m = rbar[k - 1] - rbar.mean() + (da / D) * (zbar.mean() - jbar.mean()) +
              (db / D) * ybar.mean();
  const S var = S(1) / (static_cast<S>(k) * (S(1) / da + S(1) / db));
  return GaussianLaw<S>(m, var);
}

// ---------------------------------------------------------------------------
// Bridge finite-dimensional density.
// ---------------------------------------------------------------------------

// Joint density at (z_1,...,z_l) of the bridge from (a,x) to (b,y) observed at
// interior times a < t_1 < ... < t_l < b:
//   Z^{-1} prod_{i=0}^{l} g_{0, t_{i+1}-t_i}(z_{i+1}-z_i),  Z = g_{0,b-a}(y-x),
// with (t_0,z_0) = (a,x) and (t_{l+1},z_{l+1}) = (b,y). l = 0 gives 1.
template <class S>
S bridge_fdd_density(S x, S y, S a, S b, const std::vector<S>& times,
                     const std::vector<S>& zs) {
  require(a < b, "bridge_fdd_density: need a < b");
  require(times.size() == zs.size(), "bridge_fdd_density: times/values length mismatch");
  const std::size_t l = times.size();
  if (l == 0) return S(1);
  S prev = a;
  for (std::size_t i = 0; i < l; ++i) {
    require(times[i] > prev && times[i] < b,
            "bridge_fdd_density: times must satisfy a < t_1 < ... < t_l < b");
    prev = times[i];
  }
  S density = S(1);
  S t_prev = a;
  S z_prev = x;
  for (std::size_t i = 0; i <= l; ++i) {
    const S t_next = (i == l) ? b : times[i];
    const S z_next = (i == l) ? y : zs[i];
    density *= gaussian_density(S(0), t_next - t_prev, z_next - z_prev);
    t_prev = t_next;
    z_prev = z_next;
  }
  return density / gaussian_density(S(0), b - a, y - x);
}

}  // namespace lineens
