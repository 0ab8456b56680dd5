#pragma once

// Loop-group machinery: Lax pairs U, V attached to an affine DCM lattice,
// extended frames Phi, the lambda-deformation family, Birkhoff factorization
// g = g_N g_B on the unit circle, the dressing action, and the finite-type
// Grassmannian Baker functions (with the discrete cubic as the worked case).

#include <dcm/lattice.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <numbers>
#include <optional>

namespace dcm {

// Finite Fourier series in lambda with 2x2 coefficients: c[i] multiplies
// lambda^{lo+i}.  N = series supported on powers <= 0 with lower-unipotent
// value at infinity; B = powers >= 0 with upper-triangular value at 0.
struct Loop {
  int lo = 0;
  std::vector<Matrix2> c;

  Loop() : c(1) {}
  Loop(int lo_, std::vector<Matrix2> c_) : lo(lo_), c(std::move(c_)) {
    if (c.empty()) c.assign(1, Matrix2{});
  }

  static Loop identity() { return Loop(0, {Matrix2::identity()}); }
  // Lambda = [[0, lambda^{-1}], [1, 0]].
  static Loop lambda_matrix() {
    return Loop(-1, {Matrix2{0.0, 1.0, 0.0, 0.0}, Matrix2{0.0, 0.0, 1.0, 0.0}});
  }

  int hi() const { return lo + static_cast<int>(c.size()) - 1; }
  Matrix2 coeff(int p) const {
    return (p < lo || p > hi()) ? Matrix2{} : c[p - lo];
  }
  void add_coeff(int p, const Matrix2& M) {
    if (c.size() == 1 && c[0].norm_inf() == 0.0) {
      lo = p;
      c[0] = M;
      return;
    }
    if (p < lo) {
      c.insert(c.begin(), lo - p, Matrix2{});
      lo = p;
    } else if (p > hi()) {
      c.resize(p - lo + 1);
    }
    c[p - lo] = c[p - lo] + M;
  }

  double norm_inf() const {
    double n = 0.0;
    for (const Matrix2& M : c) n = std::max(n, M.norm_inf());
    return n;
  }

  Loop& prune(double rel = 1e-14) {
    double thr = norm_inf() * rel;
    size_t b = 0, e = c.size();
    while (e > b + 1 && c[e - 1].norm_inf() <= thr) --e;
    while (b + 1 < e && c[b].norm_inf() <= thr) ++b;
    lo += static_cast<int>(b);
    c = std::vector<Matrix2>(c.begin() + b, c.begin() + e);
    for (Matrix2& M : c) {
      auto chop = [&](Cplx& x) { if (std::abs(x) <= thr) x = Cplx(0.0); };
      chop(M.a); chop(M.b); chop(M.c); chop(M.d);
    }
    return *this;
  }

  Matrix2 eval(Cplx lambda) const {
    if (std::abs(lambda) == 0.0)
      throw Error(Errc::excluded_lambda, "loop evaluation at lambda = 0");
    // Horner in lambda from the top power, then scale by lambda^{lo}.
    Matrix2 acc = c.back();
    for (int i = static_cast<int>(c.size()) - 2; i >= 0; --i)
      acc = acc * lambda + c[i];
    Cplx s = ipow(lambda, lo);
    if (!cplx_finite(s) || !std::isfinite(acc.norm_inf()))
      throw Error(Errc::nonconvergence, "loop evaluation overflow");
    return acc * s;
  }

  Matrix2 at_infinity() const {
    for (int p = 1; p <= hi(); ++p)
      if (coeff(p).norm_inf() > 0.0)
        throw Error(Errc::invalid_params, "loop has positive powers; no value at infinity");
    return coeff(0);
  }
  Matrix2 at_zero() const {
    for (int p = lo; p <= -1; ++p)
      if (coeff(p).norm_inf() > 0.0)
        throw Error(Errc::invalid_params, "loop has negative powers; no value at 0");
    return coeff(0);
  }

  friend Loop operator*(const Loop& A, const Loop& B) {
    Loop out(A.lo + B.lo, std::vector<Matrix2>(A.c.size() + B.c.size() - 1));
    for (size_t i = 0; i < A.c.size(); ++i)
      for (size_t j = 0; j < B.c.size(); ++j)
        out.c[i + j] = out.c[i + j] + A.c[i] * B.c[j];
    return out;
  }
  friend Loop operator+(const Loop& A, const Loop& B) {
    Loop out = A;
    for (int p = B.lo; p <= B.hi(); ++p) out.add_coeff(p, B.coeff(p));
    return out;
  }
  friend Loop operator-(const Loop& A, const Loop& B) {
    Loop out = A;
    for (int p = B.lo; p <= B.hi(); ++p) out.add_coeff(p, B.coeff(p) * Cplx(-1.0));
    return out;
  }
};

inline bool member_N(const Loop& g, double tol = 1e-9) {
  double s = std::max(g.norm_inf(), 1e-300);
  for (int p = 1; p <= g.hi(); ++p)
    if (g.coeff(p).norm_inf() > tol * s) return false;
  Matrix2 v = g.coeff(0);
  return std::abs(v.a - 1.0) <= tol && std::abs(v.b) <= tol && std::abs(v.d - 1.0) <= tol;
}
inline bool member_B(const Loop& g, double tol = 1e-9) {
  double s = std::max(g.norm_inf(), 1e-300);
  for (int p = g.lo; p <= -1; ++p)
    if (g.coeff(p).norm_inf() > tol * s) return false;
  return std::abs(g.coeff(0).c) <= tol * s;
}

struct LaxParams {
  Cplx alpha, beta;
  Cplx q() const { return (beta * beta) / (alpha * alpha); }
};

inline void validate_lax_params(const LaxParams& p) {
  if (!cplx_finite(p.alpha) || !cplx_finite(p.beta) || std::abs(p.alpha) == 0.0 ||
      std::abs(p.beta) == 0.0)
    throw Error(Errc::invalid_params, "alpha, beta must be finite and nonzero");
  Cplx q = p.q();
  if (std::abs(q - Cplx(1.0)) == 0.0)
    throw Error(Errc::invalid_params, "beta^2/alpha^2 = 1 is not a valid cross-ratio");
}

// U = [[1, alpha^2 u^{-1} lambda^{-1}], [u, 1]]; det U = 1 - alpha^2/lambda.
inline Loop lax_edge_matrix(Cplx u, Cplx alpha_sq) {
  if (std::abs(u) == 0.0)
    throw Error(Errc::degenerate_frame, "zero edge: adjacent lattice values coincide");
  return Loop(-1, {Matrix2{0.0, alpha_sq / u, 0.0, 0.0}, Matrix2{1.0, 0.0, u, 1.0}});
}

struct LaxPair {
  Window win;
  LaxParams params;
  std::vector<Loop> U;  // (k, m) for k0 <= k < k1, indexed row-major
  std::vector<Loop> V;  // (k, m) for m0 <= m < m1
  const Loop& u_at(int k, int m) const {
    return U[static_cast<size_t>(m - win.m0) * (win.cols() - 1) + (k - win.k0)];
  }
  const Loop& v_at(int k, int m) const {
    return V[static_cast<size_t>(m - win.m0) * win.cols() + (k - win.k0)];
  }
};

inline Cplx affine_site(const DcmLattice& L, int k, int m) {
  if (L.status_at(k, m) != SiteStatus::Regular)
    throw Error(Errc::invalid_params, "lattice site unset or collapsed in the requested window");
  const ProjectivePoint& p = L.at(k, m);
  if (p.is_infinite())
    throw Error(Errc::invalid_params, "site at infinity: Lax pair needs a planar lattice");
  return p.affine_value();
}

inline LaxPair lax_pair(const DcmLattice& L, const LaxParams& params) {
  validate_lax_params(params);
  Cplx aa = params.alpha * params.alpha, bb = params.beta * params.beta;
  LaxPair P{L.win, params, {}, {}};
  for (int m = L.win.m0; m <= L.win.m1; ++m)
    for (int k = L.win.k0; k < L.win.k1; ++k)
      P.U.push_back(lax_edge_matrix(affine_site(L, k + 1, m) - affine_site(L, k, m), aa));
  for (int m = L.win.m0; m < L.win.m1; ++m)
    for (int k = L.win.k0; k <= L.win.k1; ++k)
      P.V.push_back(lax_edge_matrix(affine_site(L, k, m + 1) - affine_site(L, k, m), bb));
  return P;
}

// max over plaquettes of || U_{k,m} V_{k+1,m} - V_{k,m} U_{k,m+1} ||,
// relative to the factor scale.
inline double lax_residual(const LaxPair& P) {
  double worst = 0.0;
  for (int m = P.win.m0; m < P.win.m1; ++m)
    for (int k = P.win.k0; k < P.win.k1; ++k) {
      Loop L = P.u_at(k, m) * P.v_at(k + 1, m);
      Loop R = P.v_at(k, m) * P.u_at(k, m + 1);
      double scale = std::max({L.norm_inf(), R.norm_inf(), 1.0});
      worst = std::max(worst, (L - R).norm_inf() / scale);
    }
  return worst;
}

struct FrameSequence {
  Window win;
  LaxParams params;
  std::vector<std::optional<Loop>> phi;
  const std::optional<Loop>& at(int k, int m) const {
    return phi[static_cast<size_t>(m - win.m0) * win.cols() + (k - win.k0)];
  }
  std::optional<Loop>& at(int k, int m) {
    return phi[static_cast<size_t>(m - win.m0) * win.cols() + (k - win.k0)];
  }
};

// Phi_{0,0} = I, Phi_{k+1,m} = Phi_{k,m} U_{k,m}, Phi_{k,m+1} = Phi_{k,m} V_{k,m};
// propagation runs in +k along the base row and +m up each column, so the
// window must have its lower-left corner at the base site (0,0) with z=0.
inline FrameSequence extended_frame(const DcmLattice& L, const LaxParams& params,
                                    double path_tol = 1e-6) {
  if (L.win.k0 != 0 || L.win.m0 != 0)
    throw Error(Errc::invalid_params, "frame window must have its corner at (0,0)");
  LaxPair P = lax_pair(L, params);
  if (std::abs(affine_site(L, 0, 0)) > 1e-9)
    throw Error(Errc::invalid_params, "frames need a based lattice: z(0,0) = 0");
  if (double r = lax_residual(P); r > path_tol)
    throw Error(Errc::invalid_params,
                "frame path inconsistency: input is not a constant cross-ratio lattice "
                "(Lax residual " + std::to_string(r) + ")");
  FrameSequence F{L.win, params, {}};
  F.phi.assign(static_cast<size_t>(L.win.cols()) * L.win.rows(), std::nullopt);
  // No pruning here: frame coefficients legitimately span many orders of
  // magnitude (binomial growth with the path length), so a relative chop
  // would destroy the small entries that carry the map itself.
  F.at(0, 0) = Loop::identity();
  for (int k = 1; k <= L.win.k1; ++k)
    F.at(k, 0) = (*F.at(k - 1, 0)) * P.u_at(k - 1, 0);
  for (int m = 1; m <= L.win.m1; ++m)
    for (int k = 0; k <= L.win.k1; ++k)
      F.at(k, m) = (*F.at(k, m - 1)) * P.v_at(k, m - 1);
  return F;
}

inline Loop vacuum_frame(int k, int m, const LaxParams& params) {
  if (k < 0 || m < 0) throw Error(Errc::invalid_params, "vacuum frame needs k, m >= 0");
  Loop A(-1, {Matrix2{0.0, params.alpha, 0.0, 0.0}, Matrix2{1.0, 0.0, params.alpha, 1.0}});
  Loop B(-1, {Matrix2{0.0, params.beta, 0.0, 0.0}, Matrix2{1.0, 0.0, params.beta, 1.0}});
  Loop F = Loop::identity();
  for (int i = 0; i < k; ++i) F = F * A;
  for (int i = 0; i < m; ++i) F = F * B;
  return F;
}

// z(lambda0): the line through Phi_{k,m}(lambda0) e_1.  lambda0 = nullopt
// means infinity and recovers the source lattice; the deformed cross-ratio
// is beta^2 (1 - alpha^2/lambda0) / (alpha^2 (1 - beta^2/lambda0)).
inline DcmLattice family_map(const FrameSequence& F, std::optional<Cplx> lambda0) {
  Cplx aa = F.params.alpha * F.params.alpha, bb = F.params.beta * F.params.beta;
  Cplx q;
  if (lambda0) {
    if (!cplx_finite(*lambda0)) throw Error(Errc::invalid_params, "lambda must be finite (omit for infinity)");
    double s = std::abs(*lambda0);
    if (s == 0.0 || std::abs(*lambda0 - aa) <= 1e-12 * std::max(1.0, std::abs(aa)) ||
        std::abs(*lambda0 - bb) <= 1e-12 * std::max(1.0, std::abs(bb)))
      throw Error(Errc::excluded_lambda, "lambda0 in {0, alpha^2, beta^2} is excluded");
    q = bb * (Cplx(1.0) - aa / *lambda0) / (aa * (Cplx(1.0) - bb / *lambda0));
  } else {
    q = bb / aa;
  }
  DcmLattice out(q, F.win);
  for (int m = F.win.m0; m <= F.win.m1; ++m)
    for (int k = F.win.k0; k <= F.win.k1; ++k) {
      const std::optional<Loop>& ph = F.at(k, m);
      if (!ph) continue;
      Matrix2 E = lambda0 ? ph->eval(*lambda0) : ph->at_infinity();
      // First column (E.a, E.c)^t is the homogeneous value; the frame
      // convention puts the affine coordinate in the second slot.
      out.set(k, m, ProjectivePoint(E.c, E.a));
    }
  return out;
}

struct LoopFactorization {
  Loop n, b;
  double residual = 0.0;
};

namespace detail {

// Stage 1: least squares for Y ~ g_B^{-1} supported on powers [0, DY] with
// Y_0 upper triangular, from (gY)_p = 0 for p in [1, hi+DY] and (gY)_0
// normalized lower unipotent.  Then g_N = clip_{<=0}(gY) and
// g_B = adj(Y) / det(Y) as a power series.
inline LoopFactorization birkhoff_stage1(const Loop& g, int DY) {
  const int hi = g.hi();
  const int nunk = 3 + 4 * DY;
  auto unk_index = [&](int j, int r, int col) -> int {
    if (j == 0) {
      if (r == 0 && col == 0) return 0;
      if (r == 0 && col == 1) return 1;
      if (r == 1 && col == 1) return 2;
      return -1;  // (1,0) of Y_0 fixed at 0
    }
    return 3 + 4 * (j - 1) + 2 * r + col;
  };
  auto entry = [](const Matrix2& M, int r, int col) {
    return r == 0 ? (col == 0 ? M.a : M.b) : (col == 0 ? M.c : M.d);
  };

  std::vector<std::array<int, 3>> targets;  // (r, c, rhs-flag) rows at power 0
  const int neq = 4 * std::max(hi + DY, 0) + 3;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(neq, nunk);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(neq);
  int row = 0;
  auto fill_row = [&](int pw, int r, int col) {
    for (int j = 0; j <= DY; ++j) {
      Matrix2 Gc = g.coeff(pw - j);
      if (Gc.norm_inf() == 0.0) continue;
      for (int cc = 0; cc < 2; ++cc) {
        int ui = unk_index(j, cc, col);
        if (ui >= 0) A(row, ui) += entry(Gc, r, cc);
      }
    }
  };
  for (int pw = 1; pw <= hi + DY; ++pw)
    for (int r = 0; r < 2; ++r)
      for (int col = 0; col < 2; ++col) {
        fill_row(pw, r, col);
        ++row;
      }
  const int norm_rows[3][3] = {{0, 0, 1}, {0, 1, 0}, {1, 1, 1}};
  for (auto& t : norm_rows) {
    fill_row(0, t[0], t[1]);
    rhs(row) = Cplx(static_cast<double>(t[2]));
    ++row;
  }

  Eigen::VectorXcd sol = A.completeOrthogonalDecomposition().solve(rhs);
  if (!sol.allFinite()) throw Error(Errc::nonconvergence, "factorization solve failed");

  Loop Y(0, std::vector<Matrix2>(DY + 1));
  Y.c[0] = Matrix2{sol(0), sol(1), 0.0, sol(2)};
  for (int j = 1; j <= DY; ++j) {
    int base = 3 + 4 * (j - 1);
    Y.c[j] = Matrix2{sol(base), sol(base + 1), sol(base + 2), sol(base + 3)};
  }

  Loop gY = g * Y;
  double thr = 1e-13 * std::max(1.0, gY.norm_inf());
  Loop gN = Loop::identity();
  gN.c[0] = Matrix2{};
  for (int p = std::min(gY.lo, 0); p <= 0; ++p) {
    Matrix2 M = gY.coeff(p);
    if (M.norm_inf() > thr || p == 0) gN.add_coeff(p, M);
  }
  if (gN.coeff(0).norm_inf() == 0.0) gN = Loop::identity();

  // det Y as a polynomial in lambda, then its reciprocal power series.
  std::vector<Cplx> det(2 * DY + 1, Cplx(0.0));
  for (int i = 0; i <= DY; ++i)
    for (int j = 0; j <= DY; ++j)
      det[i + j] += Y.c[i].a * Y.c[j].d - Y.c[i].b * Y.c[j].c;
  if (std::abs(det[0]) <= 1e-300)
    throw Error(Errc::not_in_big_cell, "factorization normal form is singular at 0");
  const int Dmax = (g.hi() - g.lo) + DY + 8;
  std::vector<Cplx> inv(Dmax + 1, Cplx(0.0));
  inv[0] = Cplx(1.0) / det[0];
  for (int p = 1; p <= Dmax; ++p) {
    Cplx s(0.0);
    for (int i = 1; i <= std::min<int>(p, 2 * DY); ++i) s += det[i] * inv[p - i];
    inv[p] = -s * inv[0];
  }
  Loop gB(0, std::vector<Matrix2>(Dmax + 1));
  for (int j = 0; j <= DY; ++j) {
    Matrix2 adj = Y.c[j].adjugate();
    for (int p = 0; j + p <= Dmax; ++p)
      if (std::abs(inv[p]) > 0.0) gB.c[j + p] = gB.c[j + p] + adj * inv[p];
  }
  gB.prune(1e-14);
  if (gB.norm_inf() == 0.0) gB = Loop::identity();

  LoopFactorization F{gN, gB, 0.0};
  F.residual = (g - gN * gB).norm_inf() / std::max(g.norm_inf(), 1.0);
  return F;
}

// Alternating least-squares refinement of h ~= hN hB at fixed supports.
inline void birkhoff_polish(const Loop& h, Loop& hN, Loop& hB, int rounds = 5) {
  const int hi = h.hi();
  for (int round = 0; round < rounds; ++round) {
    const int dN = std::max(0, -hN.lo);
    const int dB = std::max(0, hB.hi());
    const int npw = (hi + dB) - (-dN) + 1;
    if (npw <= 0) return;

    {  // solve for hB given hN; hB_0 lower-left fixed at 0
      const int nunk = 4 * (dB + 1);
      auto bidx = [](int j, int r, int col) { return 4 * j + 2 * r + col; };
      Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(4 * npw, nunk);
      Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(4 * npw);
      int row = 0;
      for (int pw = -dN; pw <= hi + dB; ++pw)
        for (int r = 0; r < 2; ++r)
          for (int col = 0; col < 2; ++col) {
            for (int j = 0; j <= dB; ++j) {
              Matrix2 Nc = hN.coeff(pw - j);
              if (Nc.norm_inf() == 0.0) continue;
              A(row, bidx(j, 0, col)) += (r == 0 ? Nc.a : Nc.c);
              A(row, bidx(j, 1, col)) += (r == 0 ? Nc.b : Nc.d);
            }
            Matrix2 H = h.coeff(pw);
            rhs(row) = r == 0 ? (col == 0 ? H.a : H.b) : (col == 0 ? H.c : H.d);
            ++row;
          }
      const int fix = bidx(0, 1, 0);
      Eigen::MatrixXcd Ak(A.rows(), nunk - 1);
      Ak << A.leftCols(fix), A.rightCols(nunk - 1 - fix);
      Eigen::VectorXcd sol = Ak.completeOrthogonalDecomposition().solve(rhs);
      if (!sol.allFinite()) return;
      Eigen::VectorXcd full = Eigen::VectorXcd::Zero(nunk);
      full.head(fix) = sol.head(fix);
      full.tail(nunk - 1 - fix) = sol.tail(nunk - 1 - fix);
      Loop nb(0, std::vector<Matrix2>(dB + 1));
      for (int j = 0; j <= dB; ++j)
        nb.c[j] = Matrix2{full(bidx(j, 0, 0)), full(bidx(j, 0, 1)), full(bidx(j, 1, 0)),
                          full(bidx(j, 1, 1))};
      hB = nb;
    }

    {  // solve for hN given hB; hN_0 = I + E21 * s
      const int nunk = 1 + 4 * dN;
      auto nidx = [&](int j, int r, int col) -> int {
        if (j == 0) return (r == 1 && col == 0) ? 0 : -1;
        return 1 + 4 * (j - 1) + 2 * r + col;
      };
      Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(4 * npw, nunk);
      Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(4 * npw);
      int row = 0;
      for (int pw = -dN; pw <= hi + dB; ++pw)
        for (int r = 0; r < 2; ++r)
          for (int col = 0; col < 2; ++col) {
            Matrix2 H = h.coeff(pw);
            Cplx t = r == 0 ? (col == 0 ? H.a : H.b) : (col == 0 ? H.c : H.d);
            for (int j = 0; j <= dN; ++j) {
              Matrix2 Bc = hB.coeff(pw + j);
              if (Bc.norm_inf() == 0.0) continue;
              for (int cc = 0; cc < 2; ++cc) {
                Cplx w = cc == 0 ? (col == 0 ? Bc.a : Bc.b) : (col == 0 ? Bc.c : Bc.d);
                if (j == 0) {
                  if (r == cc) t -= w;  // identity part of hN_0
                  if (r == 1 && cc == 0) A(row, 0) += w;
                } else {
                  A(row, nidx(j, r, cc)) += w;
                }
              }
            }
            rhs(row) = t;
            ++row;
          }
      Eigen::VectorXcd sol = A.completeOrthogonalDecomposition().solve(rhs);
      if (!sol.allFinite()) return;
      Loop nn(std::min(-dN, 0), std::vector<Matrix2>(dN + 1));
      nn.c[dN] = Matrix2{1.0, 0.0, sol(0), 1.0};
      for (int j = 1; j <= dN; ++j) {
        int base = 1 + 4 * (j - 1);
        nn.c[dN - j] =
            Matrix2{sol(base), sol(base + 1), sol(base + 2), sol(base + 3)};
      }
      hN = nn;
    }
  }
}

// Joint Gauss-Newton step on the bilinear system hN hB = h at fixed supports
// and normalization (hN_0 unipotent, hB_0 upper triangular): solves
// dN hB + hN dB = h - hN hB in least squares and updates both factors.
// Quadratic convergence takes a polished pair to machine precision.
inline void birkhoff_newton(const Loop& h, Loop& hN, Loop& hB, int steps = 3) {
  const int hi = h.hi();
  for (int it = 0; it < steps; ++it) {
    const int dN = std::max(0, -hN.lo);
    const int dB = std::max(0, hB.hi());
    const int npw = (hi + dB) - (-dN) + 1;
    if (npw <= 0) return;
    const int nunk = (1 + 4 * dN) + (3 + 4 * dB);
    auto n_idx = [&](int j, int r, int col) -> int {  // delta n_{-j}
      if (j == 0) return (r == 1 && col == 0) ? 0 : -1;
      return 1 + 4 * (j - 1) + 2 * r + col;
    };
    auto b_idx = [&](int j, int r, int col) -> int {  // delta b_j
      const int base = 1 + 4 * dN;
      if (j == 0) {
        if (r == 0 && col == 0) return base;
        if (r == 0 && col == 1) return base + 1;
        if (r == 1 && col == 1) return base + 2;
        return -1;  // lower-left of b_0 pinned
      }
      return base + 3 + 4 * (j - 1) + 2 * r + col;
    };
    Loop resid = h - hN * hB;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(4 * npw, nunk);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(4 * npw);
    int row = 0;
    for (int pw = -dN; pw <= hi + dB; ++pw) {
      for (int r = 0; r < 2; ++r)
        for (int col = 0; col < 2; ++col) {
          // (dN * hB)_pw: dN_{-j} contributes against hB_{pw+j}
          for (int j = 0; j <= dN; ++j) {
            Matrix2 Bc = hB.coeff(pw + j);
            if (Bc.norm_inf() == 0.0) continue;
            for (int cc = 0; cc < 2; ++cc) {
              int id = n_idx(j, r, cc);
              if (id < 0) continue;
              A(row, id) += cc == 0 ? (col == 0 ? Bc.a : Bc.b) : (col == 0 ? Bc.c : Bc.d);
            }
          }
          // (hN * dB)_pw: dB_j against hN_{pw-j}
          for (int j = 0; j <= dB; ++j) {
            Matrix2 Nc = hN.coeff(pw - j);
            if (Nc.norm_inf() == 0.0) continue;
            for (int cc = 0; cc < 2; ++cc) {
              int id = b_idx(j, cc, col);
              if (id < 0) continue;
              A(row, id) += r == 0 ? (cc == 0 ? Nc.a : Nc.b) : (cc == 0 ? Nc.c : Nc.d);
            }
          }
          Matrix2 R = resid.coeff(pw);
          rhs(row) = r == 0 ? (col == 0 ? R.a : R.b) : (col == 0 ? R.c : R.d);
          ++row;
        }
    }
    Eigen::VectorXcd sol = A.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) return;
    for (int j = 0; j <= dN; ++j) {
      Matrix2 d{};
      for (int r = 0; r < 2; ++r)
        for (int col = 0; col < 2; ++col) {
          int id = n_idx(j, r, col);
          if (id < 0) continue;
          Cplx v = sol(id);
          if (r == 0 && col == 0) d.a = v;
          if (r == 0 && col == 1) d.b = v;
          if (r == 1 && col == 0) d.c = v;
          if (r == 1 && col == 1) d.d = v;
        }
      hN.add_coeff(-j, d);
    }
    for (int j = 0; j <= dB; ++j) {
      Matrix2 d{};
      for (int r = 0; r < 2; ++r)
        for (int col = 0; col < 2; ++col) {
          int id = b_idx(j, r, col);
          if (id < 0) continue;
          Cplx v = sol(id);
          if (r == 0 && col == 0) d.a = v;
          if (r == 0 && col == 1) d.b = v;
          if (r == 1 && col == 0) d.c = v;
          if (r == 1 && col == 1) d.d = v;
        }
      hB.add_coeff(j, d);
    }
  }
}

inline LoopFactorization birkhoff_core(const Loop& g, double tol) {
  std::optional<LoopFactorization> best;
  for (int slack : {6, 12, 20}) {
    LoopFactorization F;
    try {
      F = birkhoff_stage1(g, (g.hi() - g.lo) + slack);
    } catch (const Error&) {
      continue;
    }
    birkhoff_polish(g, F.n, F.b, 5);
    birkhoff_newton(g, F.n, F.b, 3);
    F.n.prune(1e-14);
    F.b.prune(1e-14);
    F.residual = (g - F.n * F.b).norm_inf() / std::max(g.norm_inf(), 1.0);
    if (!best || F.residual < best->residual) best = F;
    if (best->residual <= 1e-10) break;
  }
  if (!best || best->residual > tol)
    throw Error(Errc::not_in_big_cell,
                "loop is outside the big cell (no factorization within tolerance)");
  return *best;
}

}  // namespace detail

inline LoopFactorization birkhoff_factorize(const Loop& g, double tol = 1e-9) {
  if (g.norm_inf() == 0.0 || !std::isfinite(g.norm_inf()))
    throw Error(Errc::invalid_params, "loop must be finite and nonzero");
  for (int s = 0; s < 16; ++s) {  // invertibility on the unit circle
    Cplx lam = std::exp(Cplx(0.0, 2.0 * std::numbers::pi * s / 16.0));
    Matrix2 E = g.eval(lam);
    Eigen::Matrix2cd M;
    M << E.a, E.b, E.c, E.d;
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(M);
    if (svd.singularValues().minCoeff() <= 1e-10 * std::max(1.0, E.norm_inf()))
      throw Error(Errc::invalid_params, "loop is singular on the unit circle");
  }
  return detail::birkhoff_core(g, tol);
}

struct DressResult {
  DcmLattice lattice;
  FrameSequence frames;
};

// Dressing action of g in B on an extended frame: at each site the N-part of
// g Phi_{k,m}; the dressed map is its value at infinity.  The factorizations
// are chained along the propagation paths (base row in +k, then columns in
// +m): if g Phi = N Psi then g Phi U = N (Psi U), so each step only
// factorizes the constant-size loop Psi U.  Sites where the factorization
// leaves the big cell are marked Unset together with everything they feed.
inline DressResult dress(const FrameSequence& F, const Loop& g, double tol = 1e-9) {
  if (!member_B(g, 1e-9))
    throw Error(Errc::invalid_params, "dressing loop must lie in the positive-power factor");
  Cplx q = F.params.q();
  DressResult R{DcmLattice(q, F.win), FrameSequence{F.win, F.params, {}}};
  R.frames.phi.assign(F.phi.size(), std::nullopt);
  if (F.win.k0 != 0 || F.win.m0 != 0 || !F.at(0, 0))
    throw Error(Errc::invalid_params, "dressing needs frames based at (0,0)");

  struct Node {
    Loop psi;    // B-factor at this site
    Loop nhat;   // accumulated dressed frame (N-factor product)
  };
  std::vector<std::optional<Node>> state(F.phi.size());
  auto at = [&](int k, int m) -> std::optional<Node>& {
    return state[static_cast<size_t>(m) * F.win.cols() + k];
  };
  at(0, 0) = Node{g, Loop::identity()};
  R.lattice.set(0, 0, ProjectivePoint(Cplx(0.0), Cplx(1.0)));
  R.frames.at(0, 0) = Loop::identity();

  // The B-factor of g Phi never exceeds the top degree of g (left N-factors
  // only push powers down), so anything above it is factorization noise;
  // clipping keeps every edge problem the same small size.
  const int hi_g = g.hi();
  auto clip_top = [hi_g](Loop L) {
    if (L.hi() > hi_g) L.c.resize(static_cast<size_t>(std::max(hi_g - L.lo + 1, 1)));
    return L;
  };
  auto step = [&](const Node& from, const Loop& edge) -> std::optional<Node> {
    Loop h = (from.psi * edge).prune(1e-15);
    LoopFactorization fac;
    try {
      fac = detail::birkhoff_core(h, tol);
    } catch (const Error& e) {
      if (e.code == Errc::not_in_big_cell) return std::nullopt;
      throw;
    }
    Loop psi = clip_top(fac.b);
    psi.prune(1e-15);
    return Node{psi, from.nhat * fac.n};  // nhat grows like a frame: never prune
  };
  auto record = [&](int k, int m, const std::optional<Node>& nd) {
    if (!nd) {
      R.lattice.mark_unset(k, m);
      return;
    }
    at(k, m) = *nd;
    R.frames.at(k, m) = nd->nhat;
    R.lattice.set(k, m, ProjectivePoint(nd->nhat.at_infinity().c, Cplx(1.0)));
  };

  Cplx aa = F.params.alpha * F.params.alpha, bb = F.params.beta * F.params.beta;
  auto source_z = [&](int k, int m) -> std::optional<Cplx> {
    const std::optional<Loop>& ph = F.at(k, m);
    if (!ph) return std::nullopt;
    return ph->at_infinity().c;
  };
  for (int k = 1; k <= F.win.k1; ++k) {
    std::optional<Cplx> z0 = source_z(k - 1, 0), z1 = source_z(k, 0);
    if (!at(k - 1, 0) || !z0 || !z1) {
      R.lattice.mark_unset(k, 0);
      continue;
    }
    record(k, 0, step(*at(k - 1, 0), lax_edge_matrix(*z1 - *z0, aa)));
  }
  for (int m = 1; m <= F.win.m1; ++m)
    for (int k = 0; k <= F.win.k1; ++k) {
      std::optional<Cplx> z0 = source_z(k, m - 1), z1 = source_z(k, m);
      if (!at(k, m - 1) || !z0 || !z1) {
        R.lattice.mark_unset(k, m);
        continue;
      }
      record(k, m, step(*at(k, m - 1), lax_edge_matrix(*z1 - *z0, bb)));
    }
  return R;
}

// z = (k+1)k(k-1) a^3 + 3k^2 m a^2 b + 3k m^2 a b^2 + (m+1)m(m-1) b^3.
inline Cplx discrete_cubic(int k, int m, const LaxParams& p) {
  Cplx a = p.alpha, b = p.beta;
  double kd = k, md = m;
  return (kd + 1.0) * kd * (kd - 1.0) * a * a * a + 3.0 * kd * kd * md * a * a * b +
         3.0 * kd * md * md * a * b * b + (md + 1.0) * md * (md - 1.0) * b * b * b;
}

inline DcmLattice cubic_lattice(const LaxParams& p, Window w) {
  validate_lax_params(p);
  DcmLattice L(p.q(), w);
  for (int m = w.m0; m <= w.m1; ++m)
    for (int k = w.k0; k <= w.k1; ++k)
      L.set(k, m, ProjectivePoint(discrete_cubic(k, m, p), Cplx(1.0)));
  detect_collapse(L);
  return L;
}

// Scalar Laurent series in zeta: c[i] multiplies zeta^{lo+i}.
struct ZSeries {
  int lo = 0;
  std::vector<Cplx> c;
  ZSeries() : c(1, Cplx(0.0)) {}
  ZSeries(int lo_, std::vector<Cplx> c_) : lo(lo_), c(std::move(c_)) {
    if (c.empty()) c.assign(1, Cplx(0.0));
  }
  static ZSeries monomial(int p, Cplx v = Cplx(1.0)) { return ZSeries(p, {v}); }
  int hi() const { return lo + static_cast<int>(c.size()) - 1; }
  Cplx coeff(int p) const { return (p < lo || p > hi()) ? Cplx(0.0) : c[p - lo]; }
  void add_coeff(int p, Cplx v) {
    if (p < lo) {
      c.insert(c.begin(), lo - p, Cplx(0.0));
      lo = p;
    } else if (p > hi()) {
      c.resize(p - lo + 1, Cplx(0.0));
    }
    c[p - lo] += v;
  }
  double norm_inf() const {
    double n = 0.0;
    for (Cplx v : c) n = std::max(n, std::abs(v));
    return n;
  }
  friend ZSeries operator*(const ZSeries& A, const ZSeries& B) {
    ZSeries out(A.lo + B.lo, std::vector<Cplx>(A.c.size() + B.c.size() - 1, Cplx(0.0)));
    for (size_t i = 0; i < A.c.size(); ++i)
      for (size_t j = 0; j < B.c.size(); ++j)
        out.c[i + j] += A.c[i] * B.c[j];
    return out;
  }
  friend ZSeries operator+(const ZSeries& A, const ZSeries& B) {
    ZSeries out = A;
    for (int p = B.lo; p <= B.hi(); ++p) out.add_coeff(p, B.coeff(p));
    return out;
  }
  ZSeries scaled(Cplx s) const {
    ZSeries out = *this;
    for (Cplx& v : out.c) v *= s;
    return out;
  }
  ZSeries shifted(int d) const { return ZSeries(lo + d, c); }
  // Drop coefficients below a floor power.
  ZSeries clipped_below(int floor_pow) const {
    ZSeries out;
    out.lo = std::max(lo, floor_pow);
    if (out.lo > hi()) return ZSeries(floor_pow, {Cplx(0.0)});
    out.c = std::vector<Cplx>(c.begin() + (out.lo - lo), c.end());
    return out;
  }
};

// (1 + t zeta^{-1})^e as a series: exact for e >= 0, truncated at depth for
// e < 0 (binomial series).
inline ZSeries binom_series(Cplx t, int e, int depth) {
  ZSeries out(0, {Cplx(1.0)});
  if (e >= 0) {
    Cplx coef(1.0);
    out.c.assign(static_cast<size_t>(e) + 1, Cplx(0.0));
    out.lo = -e;
    for (int j = 0; j <= e; ++j) {
      out.c[static_cast<size_t>(e) - j] = coef;  // power -j
      coef *= t * Cplx(static_cast<double>(e - j)) / Cplx(static_cast<double>(j + 1));
    }
    return out;
  }
  out.c.assign(static_cast<size_t>(depth) + 1, Cplx(0.0));
  out.lo = -depth;
  Cplx coef(1.0);
  for (int j = 0; j <= depth; ++j) {
    out.c[static_cast<size_t>(depth) - j] = coef;
    coef *= t * Cplx(static_cast<double>(e - j)) / Cplx(static_cast<double>(j + 1));
  }
  return out;
}

// W = span(f_1..f_s) + zeta^{-s} H_- where H_- collects powers <= 0; the
// number of added generators equals the tail shift, so W has virtual
// dimension zero.
struct FiniteTypeW {
  std::vector<ZSeries> added;
  int s() const { return static_cast<int>(added.size()); }
};

// zeta^{-2} W subset W, checked on generators: zeta^{-2} f_i must agree with
// some combination of the f_j on all powers above the tail.
inline void validate_finite_type(const FiniteTypeW& W, double tol = 1e-9) {
  const int s = W.s();
  if (s == 0) return;
  int pmin = -s + 1, pmax = pmin;
  for (const ZSeries& f : W.added) pmax = std::max(pmax, f.hi());
  const int npw = pmax - pmin + 1;
  Eigen::MatrixXcd A(npw, s);
  double scale = 0.0;
  for (int i = 0; i < s; ++i) {
    for (int p = pmin; p <= pmax; ++p) A(p - pmin, i) = W.added[i].coeff(p);
    scale = std::max(scale, W.added[i].norm_inf());
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.rank() < s)
    throw Error(Errc::invalid_params, "added generators dependent modulo the tail");
  for (int i = 0; i < s; ++i) {
    ZSeries sh = W.added[i].shifted(-2);
    Eigen::VectorXcd b(npw);
    for (int p = pmin; p <= pmax; ++p) b(p - pmin) = sh.coeff(p);
    Eigen::VectorXcd x = A.completeOrthogonalDecomposition().solve(b);
    if ((A * x - b).cwiseAbs().maxCoeff() > tol * std::max(1.0, scale))
      throw Error(Errc::invalid_params, "subspace is not invariant under zeta^{-2}");
  }
}

// psi_{k,m}: the unique element of W with pr_-(G^{-1} psi) = 1, where
// G = (1 + alpha zeta^{-1})^k (1 + beta zeta^{-1})^m.  Solved from the s
// linear conditions on the added-generator coefficients (powers -s+1..0 of
// G^{-1} psi), the tail component absorbing everything below.  Returns psi
// truncated below power -(s + 1 + pad).
inline ZSeries discrete_baker(const FiniteTypeW& W, const LaxParams& params, int k, int m,
                              int pad = 2) {
  validate_lax_params(params);
  if (k < 0 || m < 0)
    throw Error(Errc::invalid_params, "Baker evaluation restricted to k, m >= 0");
  const int s = W.s();
  int hif = 0;
  for (const ZSeries& f : W.added) hif = std::max({hif, f.hi(), -f.lo});
  const int floor_pow = -(s + 1 + pad);
  const int depth = s + 1 + pad + hif + 2;
  ZSeries Ginv = binom_series(params.alpha, -k, depth) * binom_series(params.beta, -m, depth);
  ZSeries G = binom_series(params.alpha, k, 0) * binom_series(params.beta, m, 0);

  std::vector<Cplx> coefs(s, Cplx(0.0));
  if (s > 0) {
    Eigen::MatrixXcd A(s, s);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(s);
    double scale = 0.0;
    for (int i = 0; i < s; ++i) {
      ZSeries gi = Ginv * W.added[i];
      for (int p = -s + 1; p <= 0; ++p) {
        A(-p, i) = gi.coeff(p);  // row 0 is the power-0 condition
        scale = std::max(scale, std::abs(gi.coeff(p)));
      }
    }
    rhs(0) = Cplx(1.0);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().minCoeff() <= 1e-10 * std::max(1.0, scale))
      throw Error(Errc::not_in_big_cell,
                  "Baker system singular at this site (theta divisor shadow)");
    Eigen::VectorXcd x = svd.solve(rhs);
    for (int i = 0; i < s; ++i) coefs[i] = x(i);
  }

  if (s == 0) return G;  // trivial subspace: psi is exactly G

  // The tail component t in zeta^{-s} H_- absorbs everything G^{-1} psi has
  // at powers <= -s: t = -G * (that part of G^{-1} combo).  G starts at the
  // constant term, so t is exact down to the truncation floor.
  ZSeries combo(0, {Cplx(0.0)});
  for (int i = 0; i < s; ++i) combo = combo + W.added[i].scaled(coefs[i]);
  ZSeries gc = Ginv * combo;
  ZSeries w(0, {Cplx(0.0)});
  for (int p = std::max(gc.lo, floor_pow); p <= -s; ++p) w.add_coeff(p, -gc.coeff(p));
  ZSeries t = (G * w).clipped_below(floor_pow);
  return (combo + t).clipped_below(floor_pow);
}

// Quotient chart for W / zeta^{-2} W, fixed once per subspace: coefficients
// are tracked on the powers >= -s-1 (everything lower lies in the image
// tail), the images of zeta^{-2} f_i are projected out, and an orthonormal
// basis of the remaining two dimensions supplies the two coordinates.
struct BakerQuotientChart {
  std::vector<int> powers;
  Eigen::MatrixXcd reducer_basis;  // orthonormal columns spanning pr(zeta^{-2} f_i)
  Eigen::MatrixXcd chart;          // |powers| x 2
};

inline BakerQuotientChart baker_quotient_chart(const FiniteTypeW& W) {
  const int s = W.s();
  std::vector<int> powers;
  for (int p = -s - 1; p <= -s; ++p) powers.push_back(p);
  for (const ZSeries& f : W.added)
    for (int p = std::max(f.lo, -s - 1); p <= f.hi(); ++p)
      if (std::abs(f.coeff(p)) > 0.0 &&
          std::find(powers.begin(), powers.end(), p) == powers.end())
        powers.push_back(p);
  std::sort(powers.begin(), powers.end());
  const int np = static_cast<int>(powers.size());
  auto pos = [&](int p) {
    return static_cast<int>(std::find(powers.begin(), powers.end(), p) - powers.begin());
  };

  Eigen::MatrixXcd members(np, s + 2);  // span of W's projection
  members.setZero();
  for (int i = 0; i < s; ++i)
    for (int p : powers) members(pos(p), i) = W.added[i].coeff(p);
  members(pos(-s), s) = Cplx(1.0);
  members(pos(-s - 1), s + 1) = Cplx(1.0);

  BakerQuotientChart ch;
  ch.powers = powers;
  if (s > 0) {
    Eigen::MatrixXcd R(np, s);
    R.setZero();
    for (int i = 0; i < s; ++i) {
      ZSeries sh = W.added[i].shifted(-2);
      for (int p : powers) R(pos(p), i) = sh.coeff(p);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(R, Eigen::ComputeThinU);
    int rank = 0;
    double smax = svd.singularValues()(0);
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-12 * smax) ++rank;
    if (rank != s)
      throw Error(Errc::invalid_params, "quotient reducers are degenerate");
    ch.reducer_basis = svd.matrixU().leftCols(rank);
    members -= ch.reducer_basis * (ch.reducer_basis.adjoint() * members);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> msvd(members, Eigen::ComputeThinU);
  if (msvd.singularValues().size() < 2 ||
      msvd.singularValues()(1) <= 1e-12 * msvd.singularValues()(0))
    throw Error(Errc::invalid_params, "quotient space is not two-dimensional");
  ch.chart = msvd.matrixU().leftCols(2);
  return ch;
}

inline ProjectivePoint baker_class(const BakerQuotientChart& ch, const ZSeries& psi) {
  Eigen::VectorXcd v(ch.powers.size());
  for (size_t i = 0; i < ch.powers.size(); ++i) v(i) = psi.coeff(ch.powers[i]);
  if (ch.reducer_basis.size() > 0) v -= ch.reducer_basis * (ch.reducer_basis.adjoint() * v);
  Eigen::VectorXcd coords = ch.chart.adjoint() * v;
  return ProjectivePoint(coords(0), coords(1));
}

// Lattice of classes [psi_{k,m}] in W / zeta^{-2} W; Baker failures leave
// sites Unset.  For W = C<zeta> + zeta^{-1} H_- this is a Moebius image of
// the discrete cubic.
inline DcmLattice baker_quotient_map(const FiniteTypeW& W, const LaxParams& params,
                                     Window w) {
  validate_lax_params(params);
  validate_finite_type(W);
  if (w.k0 < 0 || w.m0 < 0)
    throw Error(Errc::invalid_params, "Baker evaluation restricted to k, m >= 0");
  BakerQuotientChart ch = baker_quotient_chart(W);
  DcmLattice L(params.q(), w);
  for (int m = w.m0; m <= w.m1; ++m)
    for (int k = w.k0; k <= w.k1; ++k) {
      try {
        L.set(k, m, baker_class(ch, discrete_baker(W, params, k, m)));
      } catch (const Error& e) {
        if (e.code != Errc::not_in_big_cell && e.code != Errc::zero_vector) throw;
        L.mark_unset(k, m);
      }
    }
  return L;
}

}  // namespace dcm
