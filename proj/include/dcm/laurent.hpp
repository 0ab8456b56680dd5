#pragma once

// Polynomials in x = 1/lambda with complex coefficients, 2x2 matrices of
// them, and a companion-matrix root finder.  Holonomies of closed polygon
// transfer products live here: every entry is a polynomial in 1/lambda.

#include <dcm/projective.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <vector>

namespace dcm {

// c[j] multiplies lambda^{-j}.  Kept pruned of trailing junk by callers via
// prune(); degree() reports the largest stored index.
struct LaurentPoly {
  std::vector<Cplx> c;

  LaurentPoly() = default;
  explicit LaurentPoly(std::vector<Cplx> coeffs) : c(std::move(coeffs)) {}
  static LaurentPoly constant(Cplx v) { return LaurentPoly({v}); }

  int degree() const { return static_cast<int>(c.size()) - 1; }
  Cplx coeff(int j) const {
    return (j >= 0 && j < static_cast<int>(c.size())) ? c[j] : Cplx(0.0);
  }
  Cplx at_infinity() const { return coeff(0); }

  double max_abs() const {
    double m = 0.0;
    for (const Cplx& v : c) m = std::max(m, std::abs(v));
    return m;
  }

  // Horner in x; eval_lambda(L) = eval_x(1/L).
  Cplx eval_x(Cplx x) const {
    Cplx r(0.0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
    return r;
  }
  Cplx eval_lambda(Cplx lambda) const {
    if (std::abs(lambda) == 0.0)
      throw Error(Errc::excluded_lambda, "Laurent evaluation at lambda = 0");
    return eval_x(Cplx(1.0) / lambda);
  }

  void prune(double rel_tol = kPruneRelTol) {
    double m = max_abs();
    double cut = m * rel_tol;
    while (!c.empty() && std::abs(c.back()) <= cut) c.pop_back();
  }

  LaurentPoly operator+(const LaurentPoly& o) const {
    LaurentPoly r;
    r.c.resize(std::max(c.size(), o.c.size()), Cplx(0.0));
    for (size_t i = 0; i < c.size(); ++i) r.c[i] += c[i];
    for (size_t i = 0; i < o.c.size(); ++i) r.c[i] += o.c[i];
    return r;
  }
  LaurentPoly operator-(const LaurentPoly& o) const {
    LaurentPoly r;
    r.c.resize(std::max(c.size(), o.c.size()), Cplx(0.0));
    for (size_t i = 0; i < c.size(); ++i) r.c[i] += c[i];
    for (size_t i = 0; i < o.c.size(); ++i) r.c[i] -= o.c[i];
    return r;
  }
  LaurentPoly operator*(const LaurentPoly& o) const {
    if (c.empty() || o.c.empty()) return LaurentPoly();
    LaurentPoly r;
    r.c.assign(c.size() + o.c.size() - 1, Cplx(0.0));
    for (size_t i = 0; i < c.size(); ++i)
      for (size_t j = 0; j < o.c.size(); ++j) r.c[i + j] += c[i] * o.c[j];
    return r;
  }
  LaurentPoly operator*(Cplx s) const {
    LaurentPoly r = *this;
    for (Cplx& v : r.c) v *= s;
    return r;
  }
};

// 2x2 matrix polynomial in x = 1/lambda; coefficient list c[j] multiplies
// lambda^{-j}.
struct LaurentMatrix2 {
  std::vector<Matrix2> c;

  LaurentMatrix2() = default;
  explicit LaurentMatrix2(std::vector<Matrix2> coeffs) : c(std::move(coeffs)) {}

  static LaurentMatrix2 identity() { return LaurentMatrix2({Matrix2::identity()}); }

  // I - (1/lambda) A for the edge projection A: the transfer matrix as a
  // matrix polynomial.
  static LaurentMatrix2 transfer(const ProjectivePoint& zk, const ProjectivePoint& zk1,
                                 double tol = kProjTol) {
    Matrix2 A = projection_matrix(zk, zk1, tol);
    return LaurentMatrix2({Matrix2::identity(), A * Cplx(-1.0)});
  }

  int degree() const { return static_cast<int>(c.size()) - 1; }
  Matrix2 coeff(int j) const {
    return (j >= 0 && j < static_cast<int>(c.size())) ? c[j] : Matrix2{};
  }

  double max_abs() const {
    double m = 0.0;
    for (const Matrix2& v : c) m = std::max(m, v.norm_inf());
    return m;
  }

  Matrix2 eval_x(Cplx x) const {
    Matrix2 r{};
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
    return r;
  }
  Matrix2 eval_lambda(Cplx lambda) const {
    if (std::abs(lambda) == 0.0)
      throw Error(Errc::excluded_lambda, "Laurent evaluation at lambda = 0");
    return eval_x(Cplx(1.0) / lambda);
  }
  Matrix2 at_infinity() const { return coeff(0); }

  void prune(double rel_tol = kPruneRelTol) {
    double cut = max_abs() * rel_tol;
    while (!c.empty() && c.back().norm_inf() <= cut) c.pop_back();
  }

  LaurentMatrix2 operator*(const LaurentMatrix2& o) const {
    if (c.empty() || o.c.empty()) return LaurentMatrix2();
    LaurentMatrix2 r;
    r.c.assign(c.size() + o.c.size() - 1, Matrix2{});
    for (size_t i = 0; i < c.size(); ++i)
      for (size_t j = 0; j < o.c.size(); ++j) r.c[i + j] = r.c[i + j] + c[i] * o.c[j];
    return r;
  }
  LaurentMatrix2 operator+(const LaurentMatrix2& o) const {
    LaurentMatrix2 r;
    r.c.resize(std::max(c.size(), o.c.size()), Matrix2{});
    for (size_t i = 0; i < c.size(); ++i) r.c[i] = r.c[i] + c[i];
    for (size_t i = 0; i < o.c.size(); ++i) r.c[i] = r.c[i] + o.c[i];
    return r;
  }
  LaurentMatrix2 operator-(const LaurentMatrix2& o) const {
    LaurentMatrix2 r;
    r.c.resize(std::max(c.size(), o.c.size()), Matrix2{});
    for (size_t i = 0; i < c.size(); ++i) r.c[i] = r.c[i] + c[i];
    for (size_t i = 0; i < o.c.size(); ++i) r.c[i] = r.c[i] - o.c[i];
    return r;
  }

  LaurentPoly entry(int row, int col) const {
    LaurentPoly p;
    p.c.resize(c.size(), Cplx(0.0));
    for (size_t j = 0; j < c.size(); ++j) {
      const Matrix2& M = c[j];
      p.c[j] = row == 0 ? (col == 0 ? M.a : M.b) : (col == 0 ? M.c : M.d);
    }
    return p;
  }

  LaurentPoly trace() const {
    LaurentPoly p;
    p.c.resize(c.size(), Cplx(0.0));
    for (size_t j = 0; j < c.size(); ++j) p.c[j] = c[j].trace();
    return p;
  }

  LaurentPoly det() const {
    LaurentPoly r = entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(1, 0);
    r.prune();
    return r;
  }
};

inline double rel_residual(const LaurentMatrix2& x, const LaurentMatrix2& y) {
  double s = std::max(x.max_abs(), y.max_abs());
  if (s == 0.0) return 0.0;
  return (x - y).max_abs() / s;
}

// Roots of sum_j coeffs[j] t^j (ascending), via the companion matrix of the
// monic normalization, polished with two Newton steps.  Leading zeros are
// stripped; exact zero roots come out exactly.
inline std::vector<Cplx> poly_roots(std::vector<Cplx> coeffs,
                                    double rel_tol = kPruneRelTol) {
  double m = 0.0;
  for (const Cplx& v : coeffs) m = std::max(m, std::abs(v));
  if (m == 0.0) throw Error(Errc::invalid_params, "zero polynomial has no root set");
  while (!coeffs.empty() && std::abs(coeffs.back()) <= m * rel_tol) coeffs.pop_back();
  std::vector<Cplx> roots;
  size_t lead_zero = 0;
  while (lead_zero < coeffs.size() && std::abs(coeffs[lead_zero]) <= m * rel_tol) ++lead_zero;
  for (size_t i = 0; i < lead_zero; ++i) roots.push_back(Cplx(0.0));
  if (coeffs.size() - lead_zero < 2) return roots;

  const int n = static_cast<int>(coeffs.size() - lead_zero) - 1;
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
  Cplx top = coeffs.back();
  for (int i = 0; i < n; ++i) {
    C(i, n - 1) = -coeffs[lead_zero + i] / top;
    if (i > 0) C(i, i - 1) = Cplx(1.0);
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
  if (es.info() != Eigen::Success)
    throw Error(Errc::nonconvergence, "companion eigensolver failed");

  auto horner = [&](Cplx t, Cplx& p, Cplx& dp) {
    p = Cplx(0.0);
    dp = Cplx(0.0);
    for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j) {
      dp = dp * t + p;
      p = p * t + coeffs[j];
    }
  };
  for (int i = 0; i < n; ++i) {
    Cplx r = es.eigenvalues()(i);
    for (int it = 0; it < 2; ++it) {
      Cplx p, dp;
      horner(r, p, dp);
      if (std::abs(dp) == 0.0) break;
      Cplx step = p / dp;
      if (!cplx_finite(step)) break;
      r -= step;
    }
    roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end(), [](Cplx u, Cplx v) {
    if (u.real() != v.real()) return u.real() < v.real();
    return u.imag() < v.imag();
  });
  return roots;
}

}  // namespace dcm
