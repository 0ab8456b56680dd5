#pragma once

// The conformal flow: grow a DCM lattice row by row from a periodic curve,
// seeding each new row with an eigenline of the current row's q-holonomy.

#include <dcm/spectral.hpp>

namespace dcm {

enum class BranchPolicy { Continuity, FixedSheet };

// The eigenlines of the q-holonomy of row m are exactly the admissible
// neighbours {z_{0,m+1}, z_{0,m-1}} of the base point, so the same evolve
// step serves both directions: which row it produces is decided purely by
// the seed.  Policies:
//   Continuity - avoid the eigenline that returns to the row we came from
//                (max distance from the previous base point);
//   FixedSheet - always take the eigenline paired with the mu branch fixed
//                at m = 0 (its opposite for the downward direction); the
//                eigenvalue at Q is invariant along the flow, which makes
//                this well-defined.
// initial_branch (0 or 1) selects the sheet at the first step; swapping it
// reflects the flow m -> -m.
inline DcmLattice conformal_flow(const DiscreteCurve& gamma, Cplx q, int steps_up,
                                 int steps_down, BranchPolicy policy,
                                 int initial_branch = 0) {
  if (std::abs(q) == 0.0 || std::abs(q - Cplx(1.0)) == 0.0)
    throw Error(Errc::invalid_params, "cross-ratio must avoid {0,1}");
  if (steps_up < 0 || steps_down < 0)
    throw Error(Errc::invalid_params, "flow step counts must be nonnegative");
  const int n = gamma.n();
  Window w{0, n - 1, -steps_down, steps_up};
  DcmLattice L(q, w);
  L.period_n = n;
  for (int k = 0; k < n; ++k) L.set(k, 0, gamma[k]);

  auto seeds_for = [&](const DiscreteCurve& row) {
    SpectralData sd = spectral_data(row);
    auto pair = eigenlines_at(sd.M, sd.m, q, branch_lambda_list(sd));
    if (proj_equal(pair.first.eigenline, pair.second.eigenline))
      throw Error(Errc::eigenline_collision,
                  "holonomy eigenlines coincide at lambda = q (branch point)");
    return pair;
  };

  for (int dir : {+1, -1}) {
    const int steps = dir > 0 ? steps_up : steps_down;
    DiscreteCurve row = gamma;
    std::optional<ProjectivePoint> prev_base;  // base point of the row behind us
    for (int s = 1; s <= steps; ++s) {
      auto [plus, minus] = seeds_for(row);
      ProjectivePoint seed = plus.eigenline;
      if (policy == BranchPolicy::FixedSheet || !prev_base) {
        int branch = initial_branch;
        if (dir < 0) branch = 1 - branch;
        seed = branch == 0 ? plus.eigenline : minus.eigenline;
      } else {
        seed = proj_distance(plus.eigenline, *prev_base) >=
                       proj_distance(minus.eigenline, *prev_base)
                   ? plus.eigenline
                   : minus.eigenline;
      }
      EvolvedRow next = evolve_row(row.points, q, seed, true);
      prev_base = row[0];
      row = DiscreteCurve(next.points);
      const int m = dir * s;
      for (int k = 0; k < n; ++k) L.set(k, m, row[k]);
    }
  }
  return L;
}

}  // namespace dcm
