#pragma once

// Brute-force reference for the maximal disjoint-tuple energy: enumerates
// every admissible occupancy sequence (per-cell strictly increasing tuples,
// windowed rows, stay-or-down-one transitions, free first cell) and maximizes
// the left-to-right accumulated energy. Exponential; micro-instances only.

#include "lineens/lpp.hpp"

#include <vector>

namespace oracle {

inline std::vector<std::vector<lineens::Index>> all_states(lineens::Index n,
                                                           lineens::Index ell) {
  using lineens::Index;
  std::vector<std::vector<Index>> out;
  std::vector<Index> cur(ell);
  auto rec = [&](auto&& self, Index j) -> void {
    if (j == ell) {
      out.push_back(cur);
      return;
    }
    const Index lo = j == 0 ? Index(1) : cur[j - 1] + 1;
    for (Index line = std::max(lo, j + 1); line <= n - ell + j + 1; ++line) {
      cur[j] = line;
      self(self, j + 1);
    }
  };
  rec(rec, 0);
  return out;
}

// Maximal total energy of ell disjoint occupancy paths over the first `cells`
// cells of the field. Accumulation order matches the dynamic program (cells
// left to right, rows ascending within a cell), so agreement is bit-exact.
template <class S>
S brute_max_energy(const lineens::BrownianField<S>& field, lineens::Index ell,
                   lineens::Index cells) {
  using lineens::Index;
  const auto states = all_states(field.n, ell);
  S best = S(0);
  bool found = false;
  auto step = [&](auto&& self, Index c, Index prev_state, S acc) -> void {
    if (c == cells) {
      if (!found || acc > best) best = acc;
      found = true;
      return;
    }
    for (Index s = 0; s < static_cast<Index>(states.size()); ++s) {
      if (c > 0) {
        bool ok = true;
        for (Index j = 0; j < ell && ok; ++j) {
          const Index d = states[s][j] - states[prev_state][j];
          ok = d == 0 || d == 1;
        }
        if (!ok) continue;
      }
      S e = S(0);
      for (Index j = 0; j < ell; ++j) e += field.increment(states[s][j], c);
      self(self, c + 1, s, acc + e);
    }
  };
  step(step, 0, -1, S(0));
  return best;
}

}  // namespace oracle
