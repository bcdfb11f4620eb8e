#pragma once

// Last-passage percolation over a field of Brownian lines: upright paths and
// disjoint path tuples with gridpoint jump times, the dynamic program for
// maximal (multi-path) energies, the line ensemble built from energy
// differences, and the edge scaling map.

#include "lineens/core.hpp"

#include <vector>

namespace lineens {

// n independent standard Brownian lines on [0, xmax], each started at 0.
// Line i (1-based, top line first) is row i-1 of `values`.
template <class S = double>
struct BrownianField {
  Index n;
  TimeGrid<S> grid;
  Matrix<S> values;  // n x grid.points()

  BrownianField(Index n_, const TimeGrid<S>& g, Matrix<S> v)
      : n(n_), grid(g), values(std::move(v)) {
    require(n >= 1, "BrownianField: need n >= 1");
    require(grid.a == S(0), "BrownianField: grid must start at 0");
    require(values.rows() == n && values.cols() == grid.points(),
            "BrownianField: value shape mismatch");
  }

  S increment(Index line, Index cell) const {
    return values(line - 1, cell + 1) - values(line - 1, cell);
  }
};

template <class S>
BrownianField<S> sample_brownian_field(Index n, const TimeGrid<S>& grid, RngStream& rng) {
  require(n >= 1, "sample_brownian_field: need n >= 1");
  require(grid.a == S(0), "sample_brownian_field: grid must start at 0");
  Matrix<S> v(n, grid.points());
  const S sd = std::sqrt(grid.h());
  for (Index i = 0; i < n; ++i) {
    v(i, 0) = S(0);
    for (Index c = 0; c < grid.steps; ++c)
      v(i, c + 1) = v(i, c) + sd * static_cast<S>(rng.normal());
  }
  return BrownianField<S>(n, grid, std::move(v));
}

// ---------------------------------------------------------------------------
// Upright paths.
// ---------------------------------------------------------------------------

// A path through lines first..last (inclusive, 1-based) with non-decreasing
// gridpoint jump times: it sits on line l during [jump[l-first], jump[l-first+1]]
// (indices into the grid), starting at time 0 and ending at jumps.back().
// Ties are allowed: a zero-length stay contributes no energy.
struct UprightPath {
  Index first;
  Index last;
  std::vector<Index> jumps;  // length last-first+2; jumps[0] == 0

  UprightPath(Index first_, Index last_, std::vector<Index> jumps_)
      : first(first_), last(last_), jumps(std::move(jumps_)) {
    require(first >= 1 && last >= first, "UprightPath: need 1 <= first <= last");
    require(static_cast<Index>(jumps.size()) == last - first + 2,
            "UprightPath: jump count must be last-first+2");
    require(jumps.front() == 0, "UprightPath: path must start at time 0");
    for (std::size_t i = 0; i + 1 < jumps.size(); ++i)
      require(jumps[i] <= jumps[i + 1], "UprightPath: jump times must be non-decreasing");
  }
};

// Sum over visited lines of the field increment between consecutive jump
// times. Errors if the path leaves the field's line range or time grid.
template <class S>
S energy(const BrownianField<S>& field, const UprightPath& path) {
  require(path.last <= field.n, "energy: path leaves the field's line range");
  require(path.jumps.back() <= field.grid.steps, "energy: path leaves the time grid");
  S e = S(0);
  for (Index l = path.first; l <= path.last; ++l) {
    const Index j0 = path.jumps[l - path.first];
    const Index j1 = path.jumps[l - path.first + 1];
    e += field.values(l - 1, j1) - field.values(l - 1, j0);
  }
  return e;
}

// ---------------------------------------------------------------------------
// Disjoint tuples of paths.
// ---------------------------------------------------------------------------

// ell disjoint paths recorded by per-cell occupancy: occ(j-1, c) is the line
// (1-based) path j occupies during grid cell c. Constraints: path j stays in
// its window [j, n-ell+j]; occupancies are strictly increasing across paths in
// every cell; each path moves down by at most one line per cell boundary.
// First and last cells are free within the window -- lines skipped before the
// first cell or after the last are swept with zero-length visits at the ends.
struct DisjointTuple {
  Index n;
  Index ell;
  Index cells;
  Matrix<Index> occ;  // ell x cells

  DisjointTuple(Index n_, Index ell_, Matrix<Index> occ_)
      : n(n_), ell(ell_), cells(occ_.cols()), occ(std::move(occ_)) {
    require(ell >= 1 && ell <= n, "DisjointTuple: need 1 <= ell <= n");
    require(occ.rows() == ell && cells >= 1, "DisjointTuple: occupancy shape mismatch");
    for (Index c = 0; c < cells; ++c) {
      for (Index j = 0; j < ell; ++j) {
        const Index line = occ(j, c);
        require(line >= j + 1 && line <= n - ell + j + 1,
                "DisjointTuple: occupancy leaves its window");
        if (j + 1 < ell)
          require(occ(j, c) < occ(j + 1, c),
                  "DisjointTuple: cell occupancies must strictly increase");
        if (c + 1 < cells)
          require(occ(j, c + 1) == occ(j, c) || occ(j, c + 1) == occ(j, c) + 1,
                  "DisjointTuple: paths move by at most one line per cell");
      }
    }
  }
};

template <class S>
S tuple_energy(const BrownianField<S>& field, const DisjointTuple& tuple) {
  require(tuple.n == field.n, "tuple_energy: line count mismatch");
  require(tuple.cells <= field.grid.steps, "tuple_energy: tuple leaves the time grid");
  S e = S(0);
  for (Index j = 0; j < tuple.ell; ++j)
    for (Index c = 0; c < tuple.cells; ++c) e += field.increment(tuple.occ(j, c), c);
  return e;
}

// ---------------------------------------------------------------------------
// Maximal energies via dynamic programming.
// ---------------------------------------------------------------------------

namespace detail {

// All strictly increasing ell-tuples with component j in [j+1, n-ell+j+1]
// (1-based lines, 0-based j).
inline std::vector<std::vector<Index>> window_tuples(Index n, Index ell) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> cur(ell);
  auto rec = [&](auto&& self, Index j) -> void {
    if (j == ell) {
      out.push_back(cur);
      return;
    }
    const Index lo = std::max<Index>(j + 1, j == 0 ? 1 : cur[j - 1] + 1);
    const Index hi = n - ell + j + 1;
    for (Index line = lo; line <= hi; ++line) {
      cur[j] = line;
      self(self, j + 1);
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace detail

// M^ell at every gridpoint: entry c is the maximal total energy of ell
// disjoint occupancy paths over cells 1..c (entry 0 is 0). Maximization is
// over the DisjointTuple model: free first/last cells, at most one line per
// cell boundary. This restriction undershoots the continuum supremum by a
// discretization bias that vanishes as the grid refines.
template <class S>
Vector<S> max_energy_profile(const BrownianField<S>& field, Index ell) {
  require(ell >= 1, "max_energy_profile: need ell >= 1");
  require(ell <= field.n, "max_energy_profile: more paths than lines");
  const Index m = field.grid.steps;
  const auto states = detail::window_tuples(field.n, ell);
  const Index ns = static_cast<Index>(states.size());

  // Predecessors of state s: lower each subset of its components by one,
  // keeping every component inside its window; strict increase holds
  // automatically for stay/down-one moves from a valid predecessor. Computed
  // once so the cell loop only walks flat index lists.
  std::vector<std::vector<Index>> preds(ns);
  for (Index s = 0; s < ns; ++s) {
    const auto& tup = states[s];
    for (Index mask = 0; mask < (Index(1) << ell); ++mask) {
      std::vector<Index> prev(tup);
      bool ok = true;
      for (Index j = 0; j < ell && ok; ++j)
        if (mask & (Index(1) << j)) {
          prev[j] -= 1;
          if (prev[j] < j + 1 || (j > 0 && prev[j] <= prev[j - 1])) ok = false;
        }
      if (!ok) continue;
      for (Index p = 0; p < ns; ++p)
        if (states[p] == prev) {
          preds[s].push_back(p);
          break;
        }
    }
  }

  Vector<S> profile(m + 1);
  profile[0] = S(0);
  Vector<S> value = Vector<S>::Zero(ns);
  Vector<S> next(ns);
  for (Index c = 0; c < m; ++c) {
    for (Index s = 0; s < ns; ++s) {
      S best = S(0);
      if (c > 0) {
        best = value[preds[s][0]];
        for (std::size_t p = 1; p < preds[s].size(); ++p)
          best = std::max(best, value[preds[s][p]]);
      }
      S e = S(0);
      for (Index j = 0; j < ell; ++j) e += field.increment(states[s][j], c);
      next[s] = best + e;
    }
    value.swap(next);
    profile[c + 1] = value.maxCoeff();
  }
  return profile;
}

// Maximal ell-path energy ending at gridpoint time t.
template <class S>
S max_energy(const BrownianField<S>& field, Index ell, S t) {
  const auto idx = field.grid.index_of(t);
  require(idx.has_value(), "max_energy: t must be a gridpoint");
  return max_energy_profile(field, ell)[*idx];
}

// ---------------------------------------------------------------------------
// Line ensemble.
// ---------------------------------------------------------------------------

// Rows of `values`: line i (1-based) at every gridpoint, built as consecutive
// differences of the maximal-energy profiles, so the partial row sums up to
// ell recover M^ell at each gridpoint.
template <class S = double>
struct LPPLineEnsemble {
  Index n;
  TimeGrid<S> grid;
  Matrix<S> values;  // lines x grid.points()
};

template <class S>
LPPLineEnsemble<S> line_ensemble(const BrownianField<S>& field, Index lines) {
  require(lines >= 1 && lines <= field.n, "line_ensemble: line count out of range");
  Matrix<S> v(lines, field.grid.points());
  Vector<S> prev = Vector<S>::Zero(field.grid.points());
  for (Index ell = 1; ell <= lines; ++ell) {
    const Vector<S> prof = max_energy_profile(field, ell);
    v.row(ell - 1) = (prof - prev).transpose();
    prev = prof;
  }
  return LPPLineEnsemble<S>{lines, field.grid, std::move(v)};
}

// ---------------------------------------------------------------------------
// Edge scaling.
// ---------------------------------------------------------------------------

template <class S>
S scaled_time(Index n, S x) {
  const S nn = static_cast<S>(n);
  return nn + S(2) * std::pow(nn, S(2) / S(3)) * x;
}

// Left edge of the scaled domain: the x mapping to time 0.
template <class S = double>
S scaled_domain_left(Index n) {
  return -std::pow(static_cast<S>(n), S(1) / S(3)) / S(2);
}

// Edge scaling of one line value L at scaled coordinate x:
//   2^{-1/2} n^{-1/3} (L - 2n - 2 n^{2/3} x),  defined for x >= -n^{1/3}/2.
template <class S>
S scaled_value(S L, Index n, S x) {
  require(x >= scaled_domain_left<S>(n), "scaled_value: x below the scaled domain");
  const S nn = static_cast<S>(n);
  const S centered = L - S(2) * nn - S(2) * std::pow(nn, S(2) / S(3)) * x;
  return centered / (std::sqrt(S(2)) * std::pow(nn, S(1) / S(3)));
}

// A scaled k-line ensemble tabulated on a grid in the scaled coordinate.
template <class S = double>
struct ScaledEnsemble {
  Index n;
  TimeGrid<S> xgrid;
  Matrix<S> values;  // k x xgrid.points()
};

// ---------------------------------------------------------------------------
// Near-geodesic deficit.
// ---------------------------------------------------------------------------

// Sum over i = 2..k of (top scaled line - scaled line i) at one scaled
// coordinate; equals 2^{1/2} n^{1/3} (k M^1 - M^k) under the scaling map.
template <class S>
S near_geod_deficit(const Vector<S>& scaled_lines, Index k) {
  require(k >= 2, "near_geod_deficit: need k >= 2");
  require(k <= scaled_lines.size(), "near_geod_deficit: not enough lines");
  S d = S(0);
  for (Index i = 1; i < k; ++i) d += scaled_lines[0] - scaled_lines[i];
  return d;
}

}  // namespace lineens
