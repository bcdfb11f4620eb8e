#pragma once

// GUE matrices, the Hermitian Brownian motion eigenvalue process, and the
// scaled Dyson ensemble obtained by the same edge scaling as the LPP lines.

#include "lineens/core.hpp"
#include "lineens/lpp.hpp"

#include <Eigen/Eigenvalues>

#include <complex>
#include <cstdio>
#include <string>
#include <vector>

namespace lineens {

template <class S = double>
using CMatrix = Eigen::Matrix<std::complex<S>, Eigen::Dynamic, Eigen::Dynamic>;

// GUE with variance parameter var: diagonal entries N(0, var), off-diagonal
// entries N(0, var/2) + i N(0, var/2) mirrored Hermitianly, so
// E trace(H^2) = n^2 var. Entries are drawn in row-major upper-triangular
// order for reproducibility.
template <class S>
CMatrix<S> sample_gue(Index n, S var, RngStream& rng) {
  require(n >= 1, "sample_gue: need n >= 1");
  require(var > S(0), "sample_gue: need variance > 0");
  const S sd_diag = std::sqrt(var);
  const S sd_off = std::sqrt(var / S(2));
  CMatrix<S> h(n, n);
  for (Index i = 0; i < n; ++i) {
    h(i, i) = std::complex<S>(sd_diag * static_cast<S>(rng.normal()), S(0));
    for (Index j = i + 1; j < n; ++j) {
      const S re = sd_off * static_cast<S>(rng.normal());
      const S im = sd_off * static_cast<S>(rng.normal());
      h(i, j) = std::complex<S>(re, im);
      h(j, i) = std::conj(h(i, j));
    }
  }
  return h;
}

// Eigenvalues in decreasing order (index 1 = top, matching line indexing),
// with a residual check; failure throws numeric_failure with diagnostics.
template <class S>
Vector<S> eigenvalues_desc(const CMatrix<S>& h, S residual_tol = S(1e-10)) {
  const Index n = h.rows();
  require(n >= 1 && h.cols() == n, "eigenvalues_desc: matrix must be square");
  Eigen::SelfAdjointEigenSolver<CMatrix<S>> solver(h);
  if (solver.info() != Eigen::Success)
    throw numeric_failure("eigenvalues_desc: eigensolver did not converge");
  const S scale = std::max(S(1), h.cwiseAbs().maxCoeff());
  const S resid =
      (h * solver.eigenvectors() -
       solver.eigenvectors() * solver.eigenvalues().asDiagonal())
          .cwiseAbs()
          .maxCoeff();
  if (resid > residual_tol * scale) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "eigenvalues_desc: residual %.3e exceeds %.3e (n=%lld)",
                  static_cast<double>(resid), static_cast<double>(residual_tol * scale),
                  static_cast<long long>(n));
    throw numeric_failure(buf);
  }
  return solver.eigenvalues().reverse();
}

// Sum of the ell largest eigenvalues.
template <class S>
S top_eigensum(const Vector<S>& eigs_desc, Index ell) {
  require(ell >= 1 && ell <= eigs_desc.size(), "top_eigensum: ell out of range");
  return eigs_desc.head(ell).sum();
}

template <class S>
S top_eigensum(const CMatrix<S>& h, Index ell) {
  return top_eigensum(eigenvalues_desc(h), ell);
}

// ---------------------------------------------------------------------------
// Hermitian Brownian motion.
// ---------------------------------------------------------------------------

// Eigenvalues of a Hermitian Brownian motion (marginal at time t is GUE with
// variance parameter t) along strictly increasing times >= 0. Row i-1 of the
// result is eigenvalue i (decreasing order) across the requested times.
template <class S>
Matrix<S> hbm_eigen_at_times(Index n, const std::vector<S>& times, RngStream& rng) {
  require(n >= 1 && n <= 200, "hbm_eigen_at_times: need 1 <= n <= 200");
  require(!times.empty(), "hbm_eigen_at_times: need at least one time");
  require(times.front() >= S(0), "hbm_eigen_at_times: times must be >= 0");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    require(times[i] < times[i + 1], "hbm_eigen_at_times: times must strictly increase");

  Matrix<S> out(n, static_cast<Index>(times.size()));
  CMatrix<S> h = CMatrix<S>::Zero(n, n);
  S t_prev = S(0);
  for (std::size_t j = 0; j < times.size(); ++j) {
    const S dt = times[j] - t_prev;
    if (dt > S(0)) h += sample_gue(n, dt, rng);
    t_prev = times[j];
    if (times[j] == S(0)) {
      out.col(static_cast<Index>(j)).setZero();
    } else {
      out.col(static_cast<Index>(j)) = eigenvalues_desc(h);
    }
  }
  return out;
}

template <class S = double>
struct HbmEigenProcess {
  Index n;
  TimeGrid<S> grid;
  Matrix<S> values;  // n x grid.points(), rows in decreasing eigenvalue order
};

template <class S>
HbmEigenProcess<S> hbm_eigen_process(Index n, const TimeGrid<S>& grid, RngStream& rng) {
  require(grid.a >= S(0), "hbm_eigen_process: grid must start at time >= 0");
  std::vector<S> times(grid.points());
  for (Index i = 0; i <= grid.steps; ++i) times[i] = grid.point(i);
  return HbmEigenProcess<S>{n, grid, hbm_eigen_at_times(n, times, rng)};
}

// ---------------------------------------------------------------------------
// Scaled Dyson ensemble.
// ---------------------------------------------------------------------------

// Eigenvalue process under the edge scaling map: entry (i-1, j) is
// 2^{-1/2} n^{-1/3} (lambda_i(t_j) - 2n - 2 n^{2/3} x_j) with
// t_j = n + 2 n^{2/3} x_j over the gridpoints x_j.
template <class S>
ScaledEnsemble<S> sample_scaled_dyson(Index n, const TimeGrid<S>& xgrid, RngStream& rng) {
  require(xgrid.a >= scaled_domain_left<S>(n),
          "sample_scaled_dyson: x-grid extends below the scaled domain");
  std::vector<S> times(xgrid.points());
  for (Index j = 0; j <= xgrid.steps; ++j) times[j] = scaled_time(n, xgrid.point(j));
  Matrix<S> eig = hbm_eigen_at_times(n, times, rng);
  Matrix<S> scaled(n, xgrid.points());
  for (Index j = 0; j <= xgrid.steps; ++j) {
    const S x = xgrid.point(j);
    for (Index i = 0; i < n; ++i) scaled(i, j) = scaled_value(eig(i, j), n, x);
  }
  return ScaledEnsemble<S>{n, xgrid, std::move(scaled)};
}

}  // namespace lineens
