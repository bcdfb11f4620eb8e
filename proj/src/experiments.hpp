#pragma once

// Experiment drivers shared by the command-line tool and the acceptance
// harness.  The low-level samplers take explicit parameters plus a seed so
// both layers hit identical code paths; the run_* functions read a Config and
// render CSV rows.

#include <cstdint>
#include <string>
#include <vector>

#include "lineens/bridges.hpp"
#include "lineens/core.hpp"
#include "lineens/jump.hpp"
#include "lineens/lpp.hpp"
#include "lineens/mc.hpp"
#include "lineens/rmt.hpp"

#include "config.hpp"
#include "csvio.hpp"

namespace lab {

using lineens::EstimateReport;
using lineens::Index;
using lineens::LinearFit;
using lineens::RngStream;

// ---------------------------------------------------------------------------
// Low-level samplers.
// ---------------------------------------------------------------------------

// Continuous supremum of a standard Brownian bridge 0 -> 0 on [0, 1]; cell
// maxima are drawn exactly, so the statistic carries the continuous law and
// P(sup >= r) = exp(-2 r^2) without discretization bias.
double sample_bridge_sup(Index steps, RngStream& rng);

// One avoidance proposal for independent bridges between strictly decreasing
// boundary vectors on [0, rho], with exact per-cell crossing corrections.
// Returns the acceptance indicator; the hit rate estimates the continuous
// non-touching probability.
bool avoidance_proposal(const lineens::Vector<double>& x,
                        const lineens::Vector<double>& y, double rho, Index steps,
                        RngStream& rng);

// Gap between two nonintersecting bridges at the window midpoint, conditioned
// on avoidance over the whole window (exact via cell-minimum draws).  The
// upper bridge runs sep -> sep and the lower 0 -> 0 on [-halfwidth, halfwidth].
double sample_conditioned_gap(double sep, double halfwidth, Index steps,
                              long long max_attempts, RngStream& rng);

// Scaled near-ground-state deficit (k M^1 - M^k) / (sqrt(2) n^{1/3}) read at
// time t = n for an n-line field on [0, n].
double sample_deficit(Index n, Index k, Index steps, RngStream& rng);

// Same deficit functional evaluated on exact scaled eigenvalues at x = 0,
// free of path-discretization smearing.
double sample_deficit_dyson(Index n, Index k, RngStream& rng);

struct TwoResolution {
  std::vector<double> coarse;
  std::vector<double> fine;
};

// M^1(n) computed on a fine grid and on its half-resolution restriction,
// driven by the same Brownian paths, so the gap isolates discretization error.
TwoResolution sample_m1_two_res(Index n, Index steps_fine, long long trials,
                                std::uint64_t seed, std::uint64_t stream);

// 2n * (top-ell eigenvalue sum) of a GUE matrix with variance 1/(4n).
std::vector<double> sample_gue_top_sum(Index n, Index ell, long long trials,
                                       std::uint64_t seed, std::uint64_t stream);

// M^ell(n) samples at a single resolution.
std::vector<double> sample_m_ell(Index n, Index ell, Index steps, long long trials,
                                 std::uint64_t seed, std::uint64_t stream);

struct GibbsPair {
  std::vector<double> direct;     // top curve at time 0, direct sampling
  std::vector<double> resampled;  // same functional after a resampling sweep
  double mean_attempts_direct = 0.0;
  double mean_attempts_resample = 0.0;
};

// Three ordered bridges on [-1, 1] with boundaries (2, 0, -2); the top two
// curves are then conditionally resampled on [-1/2, 1/2] above the third.
// Both stages use the plain gridpoint acceptance rule, so the sweep leaves
// the sampled law exactly invariant.
GibbsPair gibbs_invariance_samples(long long trials, Index steps,
                                   long long max_attempts, std::uint64_t seed);

// Edge-scaled top-two eigenvalues (trials x 2) of variance-n GUE matrices.
lineens::Matrix<double> sample_scaled_top2(Index n, long long trials,
                                           std::uint64_t seed, std::uint64_t stream);

struct RecentredTails {
  std::vector<double> z;
  std::vector<double> s_upper;
  std::vector<double> s_lower;
  std::vector<std::vector<EstimateReport<double>>> upper;  // [z][s]
  std::vector<std::vector<EstimateReport<double>>> lower;
  std::vector<LinearFit<double>> upper_fit;  // -log p against s^{3/2}
  std::vector<LinearFit<double>> lower_fit;  // fits with used == 0 mean no fit
};

// Tail estimates for the parabolically recentred top curve of the scaled
// eigenvalue process, observed at the points zs from one realization per
// trial.
RecentredTails recentred_top_tails(Index n, const std::vector<double>& zs,
                                   const std::vector<double>& s_upper,
                                   const std::vector<double>& s_lower,
                                   long long trials, std::uint64_t seed,
                                   std::uint64_t stream);

// ---------------------------------------------------------------------------
// Jump-ensemble demonstration.
// ---------------------------------------------------------------------------

struct DemoContext {
  lineens::JumpContext<double> ctx;
  int recipe;
};

// Deterministically seeded demonstration context with d_ip = 1.  Recipes
// cycle through floor shapes: 0 smooth well, 1 rough well, 2 steep tent
// (degenerate selection), 3 asymmetric well.
DemoContext make_demo_context(Index k, double T, Index steps, int recipe,
                              std::uint64_t seed, std::uint64_t index);

// Structural invariants of one context: majorant domination and concavity,
// selection bounds, pole separation/coverage/cardinality, tent slopes and
// domination, corner characterization against brute-force side indicators,
// and bit-exact reconstruction.  Returns the number of violations; appends a
// tag per violation to why when given.
int jump_context_violations(const lineens::JumpContext<double>& ctx,
                            RngStream& rng, std::vector<std::string>* why);

struct JumpDemoStats {
  long long contexts = 0;
  long long degenerate = 0;
  long long fav = 0;
  long long structural_violations = 0;
  long long candidates = 0;
  long long t1 = 0, t2 = 0, t12 = 0, t3 = 0;
  long long implication_violations = 0;  // middle test passed but jump test failed
  long long jump_samples = 0;            // accepted jump-ensemble draws
  long long jump_t3 = 0;                 // of which passed the middle test
  double vault_bound = 0.0;
  double promotion_bound = 0.0;
};

JumpDemoStats run_jump_demo(long long contexts, long long candidates_per_context,
                            Index steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV runners, one per subcommand.
// ---------------------------------------------------------------------------

std::vector<CsvRow> run_simulate_lpp(const Config& cfg);
std::vector<CsvRow> run_simulate_dyson(const Config& cfg);
std::vector<CsvRow> run_estimate_close(const Config& cfg);
std::vector<CsvRow> run_estimate_neargeod(const Config& cfg);
std::vector<CsvRow> run_check_km(const Config& cfg);
std::vector<CsvRow> run_check_gibbs(const Config& cfg);
std::vector<CsvRow> run_jump_demo_csv(const Config& cfg);
std::vector<CsvRow> run_check_regularity(const Config& cfg);
std::vector<CsvRow> run_bridge_compare(const Config& cfg);

const std::vector<std::string>& experiment_names();
std::vector<CsvRow> run_experiment(const std::string& name, const Config& cfg);

}  // namespace lab
