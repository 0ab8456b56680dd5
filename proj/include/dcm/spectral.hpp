#pragma once

// Spectral data of a periodic discrete curve: holonomy, its trace-free
// part M(lambda) = lambda(H - pI), the curve polynomial m = det M, branch
// points, genus bookkeeping, marked points over lambda = 0, 1, q, and the
// conjugation identities satisfied along evolutions.

#include <dcm/lattice.hpp>

#include <random>

namespace dcm {

// Product T_{n-1} ... T_1 T_0 of edge transfers around the curve, as a
// matrix polynomial in 1/lambda.  Value at lambda = infinity is exactly I.
inline LaurentMatrix2 holonomy(const DiscreteCurve& curve) {
  LaurentMatrix2 H = LaurentMatrix2::identity();
  const int n = curve.n();
  for (int k = 0; k < n; ++k) {
    LaurentMatrix2 T = LaurentMatrix2::transfer(curve[k], curve[k + 1]);
    H = T * H;
    H.prune();
  }
  return H;
}

// p = trace(H)/2 and M = lambda (H - pI).  Multiplying by lambda shifts
// coefficient indices down by one; the constant term of H - pI vanishes
// because H(inf) = I.
inline std::pair<LaurentPoly, LaurentMatrix2> trace_free_part(const LaurentMatrix2& H) {
  LaurentPoly p = H.trace() * Cplx(0.5);
  p.prune();
  LaurentMatrix2 M;
  const int d = H.degree();
  if (d >= 1) {
    M.c.resize(d);
    for (int j = 1; j <= d; ++j) {
      Matrix2 hj = H.coeff(j);
      Cplx pj = p.coeff(j);
      M.c[j - 1] = {hj.a - pj, hj.b, hj.c, hj.d - pj};
    }
  }
  M.prune();
  return {p, M};
}

struct CurvePoint {
  Cplx lambda{0.0, 0.0};
  Cplx mu{0.0, 0.0};
  ProjectivePoint eigenline;
  double membership_resid = 0.0;  // |mu^2 + m(lambda)| (rescaled form at lambda = 0)
  double eigenline_dist = 0.0;    // distance to the expected lattice point, when known
};

// Kernel line of (mu I - E) from the larger adjugate column.
inline ProjectivePoint eigenline_of(const Matrix2& E, Cplx mu) {
  Matrix2 B{mu - E.a, -E.b, -E.c, mu - E.d};
  // adj(B) columns span ker(B) when det(B) = 0.
  Cplx c10 = B.d, c11 = -B.c;   // first adjugate column
  Cplx c20 = -B.b, c21 = B.a;   // second
  double n1 = std::max(std::abs(c10), std::abs(c11));
  double n2 = std::max(std::abs(c20), std::abs(c21));
  double scale = std::max(B.norm_inf(), 1e-300);
  if (std::max(n1, n2) <= scale * 1e-12)
    throw Error(Errc::eigenline_collision, "eigenline undetermined: mu I - M(lambda) vanished");
  return n1 >= n2 ? ProjectivePoint(c10, c11) : ProjectivePoint(c20, c21);
}

// Continuous branch of sqrt(-m(lambda)) tracked along a segment from a real
// reference point chosen outside all branch points.  Fixes the sheet
// labelling that the FixedSheet flow policy and eigenline ordering rely on.
inline Cplx sheet_mu(const LaurentPoly& m, Cplx lambda0,
                     const std::vector<Cplx>& branch_lambdas) {
  double R = 2.0;
  for (const Cplx& b : branch_lambdas)
    if (cplx_finite(b)) R = std::max(R, 2.0 * std::abs(b));
  R += 1.0;
  Cplx start(R, 0.0);
  Cplx mu = std::sqrt(-m.eval_lambda(start));
  if (std::abs(lambda0 - start) == 0.0) return mu;

  // March start -> lambda0; if a branch point sits near the segment, detour
  // through an offset midpoint.
  std::vector<Cplx> waypoints{start};
  Cplx dir = lambda0 - start;
  bool near = false;
  for (const Cplx& b : branch_lambdas) {
    if (!cplx_finite(b)) continue;
    Cplx w = (b - start) / dir;
    if (w.real() > 0.0 && w.real() < 1.0 && std::abs(w.imag()) * std::abs(dir) < 1e-6)
      near = true;
  }
  if (near) waypoints.push_back(start + dir * Cplx(0.5, 0.15));
  waypoints.push_back(lambda0);

  for (size_t seg = 0; seg + 1 < waypoints.size(); ++seg) {
    Cplx a = waypoints[seg], b = waypoints[seg + 1];
    int N = 64;
    for (int attempt = 0; attempt < 7; ++attempt) {
      Cplx cur = mu;
      bool ok = true;
      for (int i = 1; i <= N; ++i) {
        Cplx lam = a + (b - a) * (static_cast<double>(i) / N);
        Cplx r = std::sqrt(-m.eval_lambda(lam));
        Cplx pick = (std::abs(r - cur) <= std::abs(-r - cur)) ? r : -r;
        if (std::abs(pick - cur) > 0.5 * std::abs(cur) + 1e-12) {
          ok = false;
          break;
        }
        cur = pick;
      }
      if (ok) {
        mu = cur;
        break;
      }
      N *= 4;
      if (attempt == 6)
        throw Error(Errc::nonconvergence, "sheet continuation failed near a branch point");
    }
  }
  return mu;
}

// The two curve points over lambda0, ordered by the tracked sheet: first
// carries mu on the reference branch.  At a branch point both entries agree.
inline std::pair<CurvePoint, CurvePoint> eigenlines_at(const LaurentMatrix2& M,
                                                       const LaurentPoly& m, Cplx lambda0,
                                                       const std::vector<Cplx>& branch_lambdas) {
  Cplx mu = sheet_mu(m, lambda0, branch_lambdas);
  Matrix2 E = M.eval_lambda(lambda0);
  double scale = std::max(1.0, E.norm_inf());
  scale *= scale;
  CurvePoint plus, minus;
  plus.lambda = minus.lambda = lambda0;
  plus.mu = mu;
  minus.mu = -mu;
  plus.membership_resid = std::abs(mu * mu + m.eval_lambda(lambda0)) / scale;
  minus.membership_resid = plus.membership_resid;
  plus.eigenline = eigenline_of(E, mu);
  minus.eigenline = eigenline_of(E, -mu);
  return {plus, minus};
}

struct GenericityFlags {
  bool deg_is_n_minus_2 = false;
  bool m_inf_nonzero = false;
  bool roots_distinct = false;
  bool all() const { return deg_is_n_minus_2 && m_inf_nonzero && roots_distinct; }
};

struct BranchPoint {
  Cplx lambda{0.0, 0.0};
  int multiplicity = 1;
};

struct SpectralData {
  int n = 0;
  int d = 0;  // holonomy degree
  LaurentPoly p;
  LaurentMatrix2 M;
  LaurentPoly m;  // det M
  std::vector<BranchPoint> branch_points;
  bool branched_at_zero = false;  // n odd
  int genus = 0;
  GenericityFlags generic;
  CurvePoint O, S;
  std::optional<CurvePoint> Q;
};

inline std::vector<Cplx> branch_lambda_list(const SpectralData& sd) {
  std::vector<Cplx> out;
  out.reserve(sd.branch_points.size());
  for (const BranchPoint& b : sd.branch_points) out.push_back(b.lambda);
  return out;
}

namespace detail {

// Cluster roots within the given radius into (value, multiplicity) pairs.
inline std::vector<BranchPoint> cluster_roots(const std::vector<Cplx>& roots,
                                              double radius) {
  std::vector<BranchPoint> out;
  std::vector<bool> used(roots.size(), false);
  for (size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    Cplx sum = roots[i];
    int cnt = 1;
    used[i] = true;
    for (size_t j = i + 1; j < roots.size(); ++j) {
      if (!used[j] && std::abs(roots[j] - roots[i]) <= radius) {
        used[j] = true;
        sum += roots[j];
        ++cnt;
      }
    }
    out.push_back({sum / static_cast<double>(cnt), cnt});
  }
  return out;
}

}  // namespace detail

// Full spectral extraction.  Marked points: O over lambda = 0 is read from
// the rescaled polynomial lambda^{D} M(lambda) (reversal of the coefficient
// list, D = deg M), whose value at 0 is the top coefficient M_D -- for n odd
// that matrix is nilpotent and O is the branch point over 0.  S sits over
// lambda = 1 with eigenline z1; Q over lambda = q with eigenline z_{0,1}
// when the caller supplies them.
inline SpectralData spectral_data(const DiscreteCurve& curve,
                                  std::optional<Cplx> q = std::nullopt,
                                  std::optional<ProjectivePoint> z01 = std::nullopt,
                                  double cluster_radius = 1e-6) {
  SpectralData sd;
  sd.n = curve.n();
  LaurentMatrix2 H = holonomy(curve);
  sd.d = H.degree();
  auto [p, M] = trace_free_part(H);
  sd.p = p;
  sd.M = M;
  sd.m = M.det();
  sd.branched_at_zero = (sd.n % 2 != 0);

  const int degm = sd.m.degree();
  sd.generic.deg_is_n_minus_2 = (degm == sd.n - 2);
  double mscale = sd.m.max_abs();
  sd.generic.m_inf_nonzero = std::abs(sd.m.coeff(0)) > 1e-9 * mscale;

  // Roots of m in x = 1/lambda; branch points at lambda = 1/x.  x = 0 roots
  // (m(inf) = 0) have no finite lambda image and only affect the flags.
  if (degm >= 1) {
    std::vector<Cplx> roots = poly_roots(sd.m.c);
    sd.generic.roots_distinct = true;
    for (size_t i = 0; i < roots.size() && sd.generic.roots_distinct; ++i)
      for (size_t j = i + 1; j < roots.size(); ++j)
        if (std::abs(roots[i] - roots[j]) <= cluster_radius) {
          sd.generic.roots_distinct = false;
          break;
        }
    std::vector<Cplx> finite;
    for (const Cplx& r : roots)
      if (std::abs(r) > 1e-12) finite.push_back(Cplx(1.0) / r);
    for (const BranchPoint& b : detail::cluster_roots(finite, cluster_radius))
      sd.branch_points.push_back(b);
  } else {
    sd.generic.roots_distinct = false;
  }

  // deg m = 2g+2 over even n, 2g+1 over odd n (lambda = 0 supplies the
  // missing branch point when n is odd).
  sd.genus = (sd.n % 2 == 0) ? degm / 2 - 1 : (degm - 1) / 2;

  // Marked point O over lambda = 0 via the reversed coefficient list.
  {
    const int D = sd.M.degree();
    Matrix2 MD = sd.M.coeff(D);
    // Reversed m with exponent 2D: value at 0 is m_{2D}.
    Cplx mhat0 = sd.m.coeff(2 * D);
    Cplx nu2 = -MD.det();
    Cplx nu = std::sqrt(nu2);
    double scale = std::max(1.0, MD.norm_inf());
    sd.O.lambda = Cplx(0.0);
    if (std::abs(nu) <= 1e-8 * scale) {
      // Nilpotent top coefficient (n odd): unique eigenline = kernel.
      sd.O.mu = Cplx(0.0);
      sd.O.eigenline = eigenline_of(MD, Cplx(0.0));
      sd.O.membership_resid = std::abs(mhat0) / std::max(1.0, mscale);
    } else {
      ProjectivePoint e1 = eigenline_of(MD, nu);
      ProjectivePoint e2 = eigenline_of(MD, -nu);
      bool first = proj_distance(e1, curve[0]) <= proj_distance(e2, curve[0]);
      sd.O.mu = first ? nu : -nu;
      sd.O.eigenline = first ? e1 : e2;
      sd.O.membership_resid = std::abs(sd.O.mu * sd.O.mu + mhat0) / (scale * scale);
    }
    sd.O.eigenline_dist = proj_distance(sd.O.eigenline, curve[0]);
  }

  // Marked point S over lambda = 1 with eigenline z1.
  {
    Matrix2 E = sd.M.eval_lambda(Cplx(1.0));
    Cplx mu = std::sqrt(-sd.m.eval_lambda(Cplx(1.0)));
    double scale = std::max(1.0, E.norm_inf());
    ProjectivePoint e1 = eigenline_of(E, mu);
    ProjectivePoint e2 = eigenline_of(E, -mu);
    bool first = proj_distance(e1, curve[1]) <= proj_distance(e2, curve[1]);
    sd.S.lambda = Cplx(1.0);
    sd.S.mu = first ? mu : -mu;
    sd.S.eigenline = first ? e1 : e2;
    sd.S.membership_resid =
        std::abs(sd.S.mu * sd.S.mu + sd.m.eval_lambda(Cplx(1.0))) / (scale * scale);
    sd.S.eigenline_dist = proj_distance(sd.S.eigenline, curve[1]);
  }

  // Marked point Q over lambda = q with eigenline z_{0,1}.
  if (q) {
    Matrix2 E = sd.M.eval_lambda(*q);
    Cplx mu = std::sqrt(-sd.m.eval_lambda(*q));
    double scale = std::max(1.0, E.norm_inf());
    CurvePoint Qp;
    Qp.lambda = *q;
    ProjectivePoint e1 = eigenline_of(E, mu);
    ProjectivePoint e2 = eigenline_of(E, -mu);
    if (z01) {
      bool first = proj_distance(e1, *z01) <= proj_distance(e2, *z01);
      Qp.mu = first ? mu : -mu;
      Qp.eigenline = first ? e1 : e2;
      Qp.eigenline_dist = proj_distance(Qp.eigenline, *z01);
    } else {
      Qp.mu = mu;
      Qp.eigenline = e1;
    }
    Qp.membership_resid =
        std::abs(Qp.mu * Qp.mu + sd.m.eval_lambda(*q)) / (scale * scale);
    sd.Q = Qp;
  }
  return sd;
}

// Both conjugation identities along the two lattice directions, cleared of
// denominators: T_{k,m} M_{k,m} = M_{k+1,m} T_{k,m} and, with
// That = I - q lambda^{-1} Ahat_{k,m},  That M_{k,m} = M_{k,m+1} That.
// Returns the max coefficientwise relative residual over the window.
inline double evolution_conjugation_check(const DcmLattice& L) {
  if (!L.period_n)
    throw Error(Errc::invalid_params, "conjugation check needs a k-periodic lattice");
  const int n = *L.period_n;
  auto row_curve = [&](int m, int base) {
    std::vector<ProjectivePoint> pts;
    pts.reserve(n);
    for (int j = 0; j < n; ++j) {
      int k = L.win.k0 + ((base + j) % n);
      pts.push_back(L.at(k, m));
    }
    return DiscreteCurve(std::move(pts));
  };
  double worst = 0.0;
  for (int m = L.win.m0; m <= L.win.m1; ++m) {
    std::vector<LaurentMatrix2> Ms(n);
    for (int k = 0; k < n; ++k) {
      auto [p, M] = trace_free_part(holonomy(row_curve(m, k)));
      Ms[k] = M;
    }
    for (int k = 0; k < n; ++k) {
      LaurentMatrix2 T =
          LaurentMatrix2::transfer(L.at(L.win.k0 + k, m), L.at(L.win.k0 + ((k + 1) % n), m));
      LaurentMatrix2 lhs = T * Ms[k];
      LaurentMatrix2 rhs = Ms[(k + 1) % n] * T;
      worst = std::max(worst, rel_residual(lhs, rhs));
    }
    if (m < L.win.m1) {
      std::vector<LaurentMatrix2> Mup(n);
      for (int k = 0; k < n; ++k) {
        auto [p, M] = trace_free_part(holonomy(row_curve(m + 1, k)));
        Mup[k] = M;
      }
      for (int k = 0; k < n; ++k) {
        Matrix2 A = projection_matrix(L.at(L.win.k0 + k, m), L.at(L.win.k0 + k, m + 1));
        LaurentMatrix2 That({Matrix2::identity(), A * (-L.q)});
        LaurentMatrix2 lhs = That * Ms[k];
        LaurentMatrix2 rhs = Mup[k] * That;
        worst = std::max(worst, rel_residual(lhs, rhs));
      }
    }
  }
  return worst;
}

struct InfinityCheck {
  double p_inf_residual = 0.0;    // |p(inf) - 1|
  double sheet_residual = 0.0;    // eigenvalue vs p +- lambda^{-1} mu, far out
};

// The holonomy eigenvalues are p(lambda) +- lambda^{-1} mu(lambda); both tend
// to 1 at lambda = infinity.  Checked far out on the lambda sphere.
inline InfinityCheck holonomy_infinity_check(const DiscreteCurve& curve) {
  InfinityCheck out;
  LaurentMatrix2 H = holonomy(curve);
  auto [p, M] = trace_free_part(H);
  LaurentPoly m = M.det();
  out.p_inf_residual = std::abs(p.coeff(0) - Cplx(1.0));

  const Cplx lambda0(1e6, 0.0);
  Matrix2 E = H.eval_lambda(lambda0);
  // Closed-form eigenvalues of the 2x2 matrix.
  Cplx tr = E.trace(), det = E.det();
  Cplx disc = std::sqrt(tr * tr - Cplx(4.0) * det);
  Cplx e1 = (tr + disc) * Cplx(0.5), e2 = (tr - disc) * Cplx(0.5);
  Cplx mu = std::sqrt(-m.eval_lambda(lambda0));
  Cplx f1 = p.eval_lambda(lambda0) + mu / lambda0;
  Cplx f2 = p.eval_lambda(lambda0) - mu / lambda0;
  double d1 = std::max(std::abs(e1 - f1), std::abs(e2 - f2));
  double d2 = std::max(std::abs(e1 - f2), std::abs(e2 - f1));
  out.sheet_residual = std::min(d1, d2);
  return out;
}

struct SurveyResult {
  int trials = 0;
  int passed = 0;
  double fraction = 0.0;
};

// Random curves with points uniform on the unit disc (pairwise separation
// enforced); fraction passing all three genericity flags.  Deterministic in
// rng_seed.
inline SurveyResult genericity_survey(int n, int trials, unsigned long long rng_seed) {
  if (n < 4 || trials < 1)
    throw Error(Errc::invalid_params, "survey needs n >= 4, trials >= 1");
  SurveyResult res;
  res.trials = trials;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(rng_seed + 0x9E3779B97F4A7C15ull * static_cast<unsigned long long>(t + 1));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Cplx> zs;
    while (static_cast<int>(zs.size()) < n) {
      Cplx z(u(rng), u(rng));
      if (std::abs(z) > 1.0) continue;
      bool ok = true;
      for (const Cplx& w : zs)
        if (std::abs(z - w) < 1e-3) { ok = false; break; }
      if (ok) zs.push_back(z);
    }
    std::vector<ProjectivePoint> pts;
    pts.reserve(n);
    for (const Cplx& z : zs) pts.push_back(ProjectivePoint::affine(z));
    SpectralData sd = spectral_data(DiscreteCurve(std::move(pts)));
    if (sd.generic.all() && sd.genus == sd.d - 2) ++res.passed;
  }
  res.fraction = static_cast<double>(res.passed) / trials;
  return res;
}

}  // namespace dcm
