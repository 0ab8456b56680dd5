#include <catch2/catch_amalgamated.hpp>
#include <dcm/dcm.hpp>

#include <random>

using namespace dcm;

namespace {
DiscreteCurve random_curve(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ProjectivePoint> pts;
  while (static_cast<int>(pts.size()) < n) {
    Cplx z(u(rng), u(rng));
    bool ok = true;
    for (const auto& p : pts)
      if (std::abs(p.affine_value() - z) < 0.05) ok = false;
    if (ok) pts.push_back(ProjectivePoint::affine(z));
  }
  return DiscreteCurve(std::move(pts));
}
}  // namespace

TEST_CASE("holonomy structure") {
  DiscreteCurve c = random_curve(6, 106);
  LaurentMatrix2 H = holonomy(c);
  CHECK((H.at_infinity() - Matrix2::identity()).norm_inf() == 0.0);
  CHECK(H.degree() <= c.n());

  // det H(lambda) = (1 - 1/lambda)^n, the product of the edge determinants.
  Cplx lam(1.3, -0.8);
  CHECK(std::abs(H.eval_lambda(lam).det() - std::pow(Cplx(1.0) - Cplx(1.0) / lam, c.n())) <
        1e-13);

  auto [p, M] = trace_free_part(H);
  CHECK(std::abs(p.coeff(0) - Cplx(1.0)) == 0.0);
  LaurentPoly tr = M.trace();
  CHECK(tr.max_abs() < 1e-14 * M.max_abs());

  // H = pI + M/lambda, and the trace-free part squares to -det:
  // M(lambda)^2 = -m(lambda) I.
  Matrix2 Ml = M.eval_lambda(lam);
  Matrix2 split = Matrix2::identity() * p.eval_lambda(lam) + Ml * (Cplx(1.0) / lam);
  CHECK((H.eval_lambda(lam) - split).norm_inf() < 1e-14);
  LaurentPoly m = M.det();
  Matrix2 ch = Ml * Ml + Matrix2::identity() * m.eval_lambda(lam);
  CHECK(ch.norm_inf() < 1e-13 * std::max(1.0, (Ml * Ml).norm_inf()));

  Cplx mu = sheet_mu(m, lam, {});
  CHECK(std::abs(mu * mu + m.eval_lambda(lam)) < 1e-13);
}

TEST_CASE("spectral data genus bookkeeping") {
  struct Expect {
    int n;
    unsigned seed;
    int degm, genus;
    bool branched0;
  } cases[] = {
      {4, 104, 2, 0, false},
      {5, 105, 3, 1, true},
      {6, 106, 4, 1, false},
  };
  for (const auto& e : cases) {
    SpectralData sd = spectral_data(random_curve(e.n, e.seed));
    CHECK(sd.n == e.n);
    CHECK(sd.m.degree() == e.degm);
    CHECK(sd.genus == e.genus);
    CHECK(sd.branched_at_zero == e.branched0);
    CHECK(sd.generic.all());
    CHECK(static_cast<int>(sd.branch_points.size()) == e.degm);
  }
}

TEST_CASE("marked points sit on the curve points") {
  for (unsigned seed : {11u, 12u, 13u}) {
    DiscreteCurve c = random_curve(6, seed);
    SpectralData sd = spectral_data(c);
    CHECK(sd.O.eigenline_dist < 1e-10);  // eigenline over lambda=0 is z_0
    CHECK(sd.S.eigenline_dist < 1e-10);  // eigenline over lambda=1 is z_1
    CHECK(sd.O.membership_resid < 1e-12);
    CHECK(sd.S.membership_resid < 1e-12);
  }
}

TEST_CASE("holonomy at infinity") {
  InfinityCheck ic = holonomy_infinity_check(random_curve(6, 106));
  CHECK(ic.p_inf_residual < 1e-14);
  CHECK(ic.sheet_residual < 1e-9);
}

TEST_CASE("genericity survey") {
  SurveyResult r = genericity_survey(6, 20, 4242);
  CHECK(r.trials == 20);
  CHECK(r.passed >= 18);  // non-generic curves have measure zero
  SurveyResult again = genericity_survey(6, 20, 4242);
  CHECK(again.passed == r.passed);

  CHECK_THROWS_AS(genericity_survey(3, 10, 1), Error);
  CHECK_THROWS_AS(genericity_survey(6, 0, 1), Error);
}

TEST_CASE("flow lattice satisfies the conjugation identities") {
  DiscreteCurve pent = random_curve(5, 205);
  Cplx q(2.0, 0.7);
  DcmLattice F = conformal_flow(pent, q, 2, 1, BranchPolicy::Continuity);
  REQUIRE(F.period_n.has_value());
  CHECK(*F.period_n == 5);

  AuditReport rep = audit_cross_ratios(F);
  CHECK(rep.checked == 12);
  CHECK(rep.pass(1e-10));

  CHECK(evolution_conjugation_check(F) < 1e-9);

  // The marked point over lambda = q carries the eigenline z_{0,1}.
  std::vector<ProjectivePoint> row0;
  for (int k = 0; k < 5; ++k) row0.push_back(F.at(k, 0));
  SpectralData sd = spectral_data(DiscreteCurve(std::move(row0)), q, F.at(0, 1));
  REQUIRE(sd.Q.has_value());
  CHECK(sd.Q->eigenline_dist < 1e-9);
  CHECK(sd.Q->membership_resid < 1e-10);
}

TEST_CASE("flow validation") {
  DiscreteCurve pent = random_curve(5, 205);
  CHECK_THROWS_AS(conformal_flow(pent, Cplx(0.0), 1, 0, BranchPolicy::Continuity), Error);
  CHECK_THROWS_AS(conformal_flow(pent, Cplx(1.0), 1, 0, BranchPolicy::Continuity), Error);
  CHECK_THROWS_AS(conformal_flow(pent, Cplx(2.0), -1, 0, BranchPolicy::Continuity), Error);

  // A lattice without a declared period has no row holonomy to conjugate.
  DcmLattice plain = vacuum_lattice(Cplx(1.0), Cplx(0.0, 1.0), Window{0, 3, 0, 3});
  CHECK_THROWS_AS(evolution_conjugation_check(plain), Error);
}

TEST_CASE("branch swap reflects the flow direction") {
  DiscreteCurve pent = random_curve(5, 205);
  Cplx q(2.0, 0.7);
  DcmLattice up = conformal_flow(pent, q, 1, 0, BranchPolicy::FixedSheet, 0);
  DcmLattice down = conformal_flow(pent, q, 0, 1, BranchPolicy::FixedSheet, 1);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k)
    worst = std::max(worst, proj_distance(up.at(k, 1), down.at(k, -1)));
  CHECK(worst < 1e-10);
}
