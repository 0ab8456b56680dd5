#include <catch2/catch_amalgamated.hpp>
#include <dcm/dcm.hpp>

#include <algorithm>

using namespace dcm;

namespace {
bool close(Cplx a, Cplx b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}
}  // namespace

TEST_CASE("laurent polynomial arithmetic agrees with evaluation") {
  LaurentPoly p({Cplx(1.0), Cplx(0.0, -2.0), Cplx(3.0, 1.0)});
  LaurentPoly q({Cplx(-0.5, 0.5), Cplx(2.0)});
  Cplx xs[] = {Cplx(0.3, 0.1), Cplx(-1.2, 0.7), Cplx(2.0, -0.4)};
  for (Cplx x : xs) {
    CHECK(close((p + q).eval_x(x), p.eval_x(x) + q.eval_x(x)));
    CHECK(close((p - q).eval_x(x), p.eval_x(x) - q.eval_x(x)));
    CHECK(close((p * q).eval_x(x), p.eval_x(x) * q.eval_x(x)));
    CHECK(close((p * Cplx(0.0, 3.0)).eval_x(x), Cplx(0.0, 3.0) * p.eval_x(x)));
  }
  CHECK((p * q).degree() == p.degree() + q.degree());
}

TEST_CASE("powers of 1 - 1/lambda") {
  LaurentPoly base({Cplx(1.0), Cplx(-1.0)});
  LaurentPoly pow = LaurentPoly::constant(Cplx(1.0));
  const int n = 6;
  for (int i = 0; i < n; ++i) pow = pow * base;
  // Binomial coefficients with alternating sign.
  double binom[n + 1] = {1, 6, 15, 20, 15, 6, 1};
  for (int j = 0; j <= n; ++j)
    CHECK(close(pow.coeff(j), Cplx((j % 2 ? -1.0 : 1.0) * binom[j])));
  Cplx lam(1.7, -0.9);
  CHECK(close(pow.eval_lambda(lam), std::pow(Cplx(1.0) - Cplx(1.0) / lam, n)));
  CHECK(close(pow.at_infinity(), Cplx(1.0)));
  CHECK_THROWS_AS(pow.eval_lambda(Cplx(0.0)), Error);
}

TEST_CASE("prune drops trailing noise only") {
  LaurentPoly p({Cplx(1.0), Cplx(0.5), Cplx(1e-17), Cplx(1e-18)});
  p.prune();
  CHECK(p.degree() == 1);
  CHECK(close(p.coeff(1), Cplx(0.5)));

  LaurentPoly keep({Cplx(1e-17), Cplx(1.0)});
  keep.prune();
  CHECK(keep.degree() == 1);  // interior small coefficients survive
}

TEST_CASE("transfer matrix polynomial") {
  ProjectivePoint zk = ProjectivePoint::affine(Cplx(0.4, -0.3));
  ProjectivePoint zk1 = ProjectivePoint::affine(Cplx(-1.1, 0.8));
  LaurentMatrix2 T = LaurentMatrix2::transfer(zk, zk1);
  REQUIRE(T.degree() == 1);
  CHECK((T.coeff(0) - Matrix2::identity()).norm_inf() == 0.0);
  Matrix2 A = projection_matrix(zk, zk1);
  CHECK((T.coeff(1) + A).norm_inf() == 0.0);

  // Rank-one projection: det(I - A/lambda) = 1 - 1/lambda exactly.
  LaurentPoly d = T.det();
  CHECK(close(d.coeff(0), Cplx(1.0)));
  CHECK(close(d.coeff(1), Cplx(-1.0)));
  CHECK(std::abs(d.coeff(2)) < 1e-15);

  Cplx lam(0.7, 1.3);
  Matrix2 direct = Matrix2::identity() - A * (Cplx(1.0) / lam);
  CHECK((T.eval_lambda(lam) - direct).norm_inf() < 1e-15);
}

TEST_CASE("transfer products accumulate degree") {
  auto A = ProjectivePoint::affine;
  LaurentMatrix2 T1 = LaurentMatrix2::transfer(A(Cplx(0.0)), A(Cplx(1.0)));
  LaurentMatrix2 T2 = LaurentMatrix2::transfer(A(Cplx(1.0)), A(Cplx(2.0, 0.5)));
  LaurentMatrix2 P = T2 * T1;
  CHECK(P.degree() == 2);
  Cplx lam(1.4, 0.2);
  CHECK((P.eval_lambda(lam) - T2.eval_lambda(lam) * T1.eval_lambda(lam)).norm_inf() < 1e-14);
  CHECK((P.at_infinity() - Matrix2::identity()).norm_inf() < 1e-15);
  CHECK(rel_residual(P, P) == 0.0);
  CHECK(rel_residual(P, P + P) > 0.3);
}

TEST_CASE("poly_roots recovers known roots") {
  // (t - 1)(t - 2i)(t + 3) = -6i + (6 - i... ) expand explicitly below.
  Cplx r1(1.0), r2(0.0, 2.0), r3(-3.0);
  // coeffs ascending: product form expanded
  std::vector<Cplx> c = {r1 * r2 * r3 * Cplx(-1.0), r1 * r2 + r1 * r3 + r2 * r3,
                         -(r1 + r2 + r3), Cplx(1.0)};
  std::vector<Cplx> roots = poly_roots(c);
  REQUIRE(roots.size() == 3);
  auto key = [](Cplx a, Cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  };
  std::vector<Cplx> expect = {r1, r2, r3};
  std::sort(roots.begin(), roots.end(), key);
  std::sort(expect.begin(), expect.end(), key);
  for (size_t i = 0; i < 3; ++i) CHECK(close(roots[i], expect[i], 1e-10));
}

TEST_CASE("poly_roots counts zeros at the origin") {
  // t^2 (t - 1): two roots pinned at zero.
  std::vector<Cplx> roots = poly_roots({Cplx(0.0), Cplx(0.0), Cplx(-1.0), Cplx(1.0)});
  REQUIRE(roots.size() == 3);
  int at_zero = 0;
  for (Cplx r : roots) {
    if (std::abs(r) < 1e-12) ++at_zero;
  }
  CHECK(at_zero == 2);
  CHECK_THROWS_AS(poly_roots({Cplx(0.0), Cplx(0.0)}), Error);
}
