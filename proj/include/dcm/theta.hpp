#pragma once

// Riemann theta evaluation (direct lattice sum with a Gaussian tail bound),
// nodal theta closed forms, and the reconstruction of DCM lattices from
// period data: z = exp(2 pi i alpha_{g+1}) theta(A(Pinf)+alpha-A(D)-kappa)
//                 / theta(A(Pinf~)+alpha-A(D)-kappa),
// with the alpha increments alternating by site parity.

#include <dcm/soliton.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace dcm {

inline void validate_omega(const Eigen::MatrixXcd& omega) {
  const int g = static_cast<int>(omega.rows());
  if (omega.cols() != g)
    throw Error(Errc::invalid_params, "period matrix must be square");
  if (g == 0) return;  // genus 0: the empty sum leaves theta = 1
  double scale = std::max(1.0, omega.cwiseAbs().maxCoeff());
  if ((omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(Errc::invalid_params, "period matrix must be symmetric");
  Eigen::MatrixXd im = omega.imag();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(im);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw Error(Errc::invalid_params, "Im(period matrix) must be positive definite");
}

// Gaussian tail estimate for the truncated series: sum over shells
// |n|_inf = r > R of exp(-pi lambda_min r^2 + 2 pi g r imz).
inline double theta_tail_bound(const Eigen::MatrixXcd& omega, int R, double im_z_inf) {
  const int g = static_cast<int>(omega.rows());
  if (g == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega.imag());
  double lmin = es.eigenvalues().minCoeff();
  double bound = 0.0;
  for (int r = R + 1; r <= R + 60; ++r) {
    double shell = std::pow(2.0 * r + 1.0, g) - std::pow(2.0 * r - 1.0, g);
    bound += shell * std::exp(-std::numbers::pi * lmin * r * r +
                              2.0 * std::numbers::pi * g * r * im_z_inf);
  }
  return bound;
}

inline int theta_radius_for(const Eigen::MatrixXcd& omega, double im_z_inf,
                            double tol = 1e-12) {
  for (int R = 1; R <= 64; ++R)
    if (theta_tail_bound(omega, R, im_z_inf) <= tol) return R;
  throw Error(Errc::radius_too_small,
              "theta truncation cannot reach the requested tolerance");
}

// theta(z) = sum_{|n|_inf <= R} exp(pi i n.Omega.n + 2 pi i n.z).
inline Cplx riemann_theta(const std::vector<Cplx>& z, const Eigen::MatrixXcd& omega,
                          int R = 0) {
  validate_omega(omega);
  const int g = static_cast<int>(omega.rows());
  if (static_cast<int>(z.size()) != g)
    throw Error(Errc::invalid_params, "theta argument dimension mismatch");
  if (g == 0) return Cplx(1.0);
  double imz = 0.0;
  for (const Cplx& v : z) imz = std::max(imz, std::abs(v.imag()));
  if (R <= 0) R = theta_radius_for(omega, imz);

  std::vector<int> n(g, -R);
  Cplx sum(0.0);
  const Cplx pii(0.0, std::numbers::pi);
  while (true) {
    Cplx quad(0.0), lin(0.0);
    for (int i = 0; i < g; ++i) {
      lin += 2.0 * static_cast<double>(n[i]) * z[i];
      for (int j = 0; j < g; ++j) quad += static_cast<double>(n[i]) * omega(i, j) * static_cast<double>(n[j]);
    }
    sum += std::exp(pii * (quad + lin));
    int i = 0;
    while (i < g && n[i] == R) {
      n[i] = -R;
      ++i;
    }
    if (i == g) break;
    ++n[i];
  }
  return sum;
}

// Degenerate thetas of nodal rational curves: g = 0 constant, one node
// exp(2 pi i Z) - 1, two nodes the 2x2 determinant in X = e^{2 pi i Z1},
// Y = e^{2 pi i Z2} with the node positions x1, x2 as weights.
inline Cplx nodal_theta(const std::vector<Cplx>& Z, const std::vector<Cplx>& nodes) {
  const Cplx tau(0.0, 2.0 * std::numbers::pi);
  if (Z.size() != nodes.size())
    throw Error(Errc::invalid_params, "nodal theta needs one argument per node");
  switch (Z.size()) {
    case 0: return Cplx(1.0);
    case 1: return std::exp(tau * Z[0]) - Cplx(1.0);
    case 2: {
      Cplx X = std::exp(tau * Z[0]), Y = std::exp(tau * Z[1]);
      return (X + Cplx(1.0)) * (Y - Cplx(1.0)) * nodes[1] -
             (X - Cplx(1.0)) * (Y + Cplx(1.0)) * nodes[0];
    }
    default:
      throw Error(Errc::invalid_params, "nodal theta supports at most two nodes");
  }
}

struct PeriodData {
  enum class ThetaKind { Riemann, Nodal };
  int version = 1;
  int g = 0;
  ThetaKind kind = ThetaKind::Nodal;
  Eigen::MatrixXcd omega;      // Riemann kind, g x g
  std::vector<Cplx> nodes;     // Nodal kind, g node positions
  std::vector<Cplx> A_Pinf, A_Pinf_tilde, A_D00, kappa;  // C^g
  std::vector<Cplx> US_even, US_odd, UQ_even, UQ_odd;    // C^{g+1}
  std::optional<Eigen::MatrixXcd> lattice_generators;    // (g+1) x (2g+2)
  std::optional<Cplx> q;  // cross-ratio of the encoded map, when known
};

inline void validate_period_data(const PeriodData& pd) {
  if (pd.g < 0) throw Error(Errc::invalid_params, "negative genus");
  auto want = [&](const std::vector<Cplx>& v, int len, const char* name) {
    if (static_cast<int>(v.size()) != len)
      throw Error(Errc::invalid_params, std::string(name) + " has wrong dimension");
    for (const Cplx& x : v)
      if (!cplx_finite(x)) throw Error(Errc::invalid_params, std::string(name) + " not finite");
  };
  want(pd.A_Pinf, pd.g, "A_Pinf");
  want(pd.A_Pinf_tilde, pd.g, "A_Pinf_tilde");
  want(pd.A_D00, pd.g, "A_D00");
  want(pd.kappa, pd.g, "kappa");
  want(pd.US_even, pd.g + 1, "US_even");
  want(pd.US_odd, pd.g + 1, "US_odd");
  want(pd.UQ_even, pd.g + 1, "UQ_even");
  want(pd.UQ_odd, pd.g + 1, "UQ_odd");
  if (pd.kind == PeriodData::ThetaKind::Riemann) {
    if (pd.omega.rows() != pd.g) throw Error(Errc::invalid_params, "period matrix size");
    validate_omega(pd.omega);
  } else if (static_cast<int>(pd.nodes.size()) != pd.g) {
    throw Error(Errc::invalid_params, "nodal data needs g node positions");
  }
}

// alpha(k, m) in C^{g+1} accumulated from (0,0) along the k-axis and then in
// m; each unit step adds the even or odd increment according to the parity
// of k+m at the step's source site.
inline std::vector<Cplx> alpha_state(const PeriodData& pd, int k, int m) {
  std::vector<Cplx> a(pd.g + 1, Cplx(0.0));
  auto add = [&](const std::vector<Cplx>& inc, double sign) {
    for (int i = 0; i <= pd.g; ++i) a[i] += sign * inc[i];
  };
  if (k >= 0)
    for (int j = 0; j < k; ++j) add(j % 2 == 0 ? pd.US_even : pd.US_odd, +1.0);
  else
    for (int j = -1; j >= k; --j) add(((j % 2) + 2) % 2 == 0 ? pd.US_even : pd.US_odd, -1.0);
  if (m >= 0)
    for (int l = 0; l < m; ++l)
      add(((k + l) % 2 + 2) % 2 == 0 ? pd.UQ_even : pd.UQ_odd, +1.0);
  else
    for (int l = -1; l >= m; --l)
      add(((k + l) % 2 + 2) % 2 == 0 ? pd.UQ_even : pd.UQ_odd, -1.0);
  return a;
}

// Reconstruction formula.  Sites where both theta values vanish are theta
// divisor hits: marked Collapsed with no stored value.  If pd carries no q,
// it is inferred from the first regular quadrilateral.
inline DcmLattice dcm_from_theta(const PeriodData& pd, Window w,
                                 double collapse_tol = kCollapseTol, int radius = 0) {
  validate_period_data(pd);
  const Cplx tau(0.0, 2.0 * std::numbers::pi);
  auto theta = [&](const std::vector<Cplx>& Z) {
    return pd.kind == PeriodData::ThetaKind::Nodal ? nodal_theta(Z, pd.nodes)
                                                   : riemann_theta(Z, pd.omega, radius);
  };
  DcmLattice L(pd.q.value_or(Cplx(0.0)), w);
  for (int m = w.m0; m <= w.m1; ++m) {
    for (int k = w.k0; k <= w.k1; ++k) {
      std::vector<Cplx> a = alpha_state(pd, k, m);
      std::vector<Cplx> ZN(pd.g), ZD(pd.g);
      for (int i = 0; i < pd.g; ++i) {
        Cplx shift = a[i] - pd.A_D00[i] - pd.kappa[i];
        ZN[i] = pd.A_Pinf[i] + shift;
        ZD[i] = pd.A_Pinf_tilde[i] + shift;
      }
      Cplx num = std::exp(tau * a[pd.g]) * theta(ZN);
      Cplx den = theta(ZD);
      if (std::max(std::abs(num), std::abs(den)) <= collapse_tol) {
        L.mark_collapsed(k, m);
        continue;
      }
      L.set(k, m, ProjectivePoint(num, den));
    }
  }
  if (!pd.q) {
    for (int m = w.m0; m < w.m1 && std::abs(L.q) == 0.0; ++m)
      for (int k = w.k0; k < w.k1; ++k) {
        if (L.status_at(k, m) != SiteStatus::Regular ||
            L.status_at(k + 1, m) != SiteStatus::Regular ||
            L.status_at(k, m + 1) != SiteStatus::Regular ||
            L.status_at(k + 1, m + 1) != SiteStatus::Regular)
          continue;
        CrossRatioResult cr =
            cross_ratio(L.at(k, m + 1), L.at(k, m), L.at(k + 1, m), L.at(k + 1, m + 1));
        if (cr.kind == CrossRatioKind::Finite) {
          L.q = cr.value;
          break;
        }
      }
  }
  return L;
}

struct PeriodicityReport {
  double defect = 0.0;
  bool periodic = false;
};

// alpha(k+n, m) - alpha(k, m) against the supplied generator lattice: the
// difference depends only on the parity of k, so both parities are tested;
// distance to the lattice via a rounded least-squares combination.
inline PeriodicityReport periodicity_check(const PeriodData& pd, int n, double tol = 1e-9) {
  validate_period_data(pd);
  if (!pd.lattice_generators)
    throw Error(Errc::invalid_params, "periodicity check requires lattice generators");
  const Eigen::MatrixXcd& G = *pd.lattice_generators;
  if (G.rows() != pd.g + 1)
    throw Error(Errc::invalid_params, "generator matrix has wrong row count");

  auto lattice_dist = [&](const std::vector<Cplx>& v) {
    // Real least squares over integer combinations: stack Re/Im.
    const int rows = 2 * (pd.g + 1), cols = static_cast<int>(G.cols());
    Eigen::MatrixXd A(rows, cols);
    Eigen::VectorXd b(rows);
    for (int i = 0; i <= pd.g; ++i) {
      b(2 * i) = v[i].real();
      b(2 * i + 1) = v[i].imag();
      for (int j = 0; j < cols; ++j) {
        A(2 * i, j) = G(i, j).real();
        A(2 * i + 1, j) = G(i, j).imag();
      }
    }
    Eigen::VectorXd c = A.completeOrthogonalDecomposition().solve(b);
    for (int j = 0; j < cols; ++j) c(j) = std::round(c(j));
    return (b - A * c).cwiseAbs().maxCoeff();
  };

  PeriodicityReport rep;
  for (int parity = 0; parity < 2; ++parity) {
    std::vector<Cplx> v(pd.g + 1, Cplx(0.0));
    for (int j = 0; j < n; ++j) {
      const std::vector<Cplx>& inc = (j + parity) % 2 == 0 ? pd.US_even : pd.US_odd;
      for (int i = 0; i <= pd.g; ++i) v[i] += inc[i];
    }
    rep.defect = std::max(rep.defect, lattice_dist(v));
  }
  rep.periodic = rep.defect <= tol;
  return rep;
}

// Abel-type integrals on the rational curve: the third-kind differential
// with poles over +-t, integrated between regular points, and from the
// basepoint at infinity.
inline Cplx omega_integral(Cplx t, Cplx z0, Cplx z1) {
  return std::log((z1 - t) * (z0 + t) / ((z1 + t) * (z0 - t))) /
         Cplx(0.0, 2.0 * std::numbers::pi);
}
inline Cplx abel_from_infinity(Cplx t, Cplx P) {
  return std::log((P - t) / (P + t)) / Cplx(0.0, 2.0 * std::numbers::pi);
}

// Period data of the nodal curves behind the soliton generators.  The
// differentials are indexed by (x_1..x_g, y); O sits at eps (odd steps at
// -eps), S at a, Q at b; A(D00)+kappa is carried by the phase constants.
// The period lattice of these curves is Z^{g+1}.
inline PeriodData nodal_period_data(const NodalParams& p) {
  validate_params(p);
  PeriodData pd;
  pd.kind = PeriodData::ThetaKind::Nodal;
  pd.g = static_cast<int>(p.nodes.size());
  pd.nodes = p.nodes;
  pd.q = soliton_q(p);

  std::vector<Cplx> ts = p.nodes;
  ts.push_back(p.y);
  const int gp1 = pd.g + 1;
  pd.US_even.resize(gp1);
  pd.US_odd.resize(gp1);
  pd.UQ_even.resize(gp1);
  pd.UQ_odd.resize(gp1);
  for (int i = 0; i < gp1; ++i) {
    if (p.eps) {
      pd.US_even[i] = omega_integral(ts[i], *p.eps, p.a);
      pd.US_odd[i] = omega_integral(ts[i], -*p.eps, p.a);
      pd.UQ_even[i] = omega_integral(ts[i], *p.eps, p.b);
      pd.UQ_odd[i] = omega_integral(ts[i], -*p.eps, p.b);
    } else {
      pd.US_even[i] = pd.US_odd[i] = abel_from_infinity(ts[i], p.a);
      pd.UQ_even[i] = pd.UQ_odd[i] = abel_from_infinity(ts[i], p.b);
    }
  }
  pd.A_Pinf.resize(pd.g);
  pd.A_Pinf_tilde.resize(pd.g);
  for (int i = 0; i < pd.g; ++i) {
    pd.A_Pinf[i] = abel_from_infinity(p.nodes[i], p.y);
    pd.A_Pinf_tilde[i] = abel_from_infinity(p.nodes[i], -p.y);
  }
  pd.A_D00 = p.phases;
  pd.A_D00.resize(pd.g, Cplx(0.0));
  pd.kappa.assign(pd.g, Cplx(0.0));
  Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(gp1, 2 * gp1);
  for (int i = 0; i < gp1; ++i) gen(i, i) = Cplx(1.0);
  pd.lattice_generators = gen;
  return pd;
}

}  // namespace dcm
