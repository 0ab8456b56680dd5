#include <catch2/catch_amalgamated.hpp>
#include <dcm/dcm.hpp>

using namespace dcm;

TEST_CASE("theta series oracle") {
  Eigen::MatrixXcd Om(1, 1);
  Om(0, 0) = Cplx(0.0, 1.0);
  // sum over n of exp(-pi n^2)
  CHECK(std::abs(riemann_theta({Cplx(0.0)}, Om) - Cplx(1.0864348112133082)) < 1e-12);

  Eigen::MatrixXcd empty(0, 0);
  CHECK(riemann_theta({}, empty) == Cplx(1.0));

  CHECK_THROWS_AS(riemann_theta({Cplx(0.0), Cplx(0.0)}, Om), Error);
}

TEST_CASE("omega validation") {
  Eigen::MatrixXcd bad(1, 1);
  bad(0, 0) = Cplx(0.0, -1.0);  // imaginary part must be positive definite
  CHECK_THROWS_AS(validate_omega(bad), Error);
  Eigen::MatrixXcd asym(2, 2);
  asym << Cplx(0.0, 1.0), Cplx(0.5, 0.0), Cplx(0.0, 0.0), Cplx(0.0, 1.0);
  CHECK_THROWS_AS(validate_omega(asym), Error);
}

TEST_CASE("theta parity and quasi-periodicity") {
  Eigen::MatrixXcd Om(2, 2);
  Om << Cplx(0.0, 1.1), Cplx(0.3, 0.2), Cplx(0.3, 0.2), Cplx(0.0, 0.8);
  std::vector<Cplx> z{Cplx(0.23, 0.11), Cplx(-0.17, 0.08)};
  Cplx th = riemann_theta(z, Om);
  CHECK(std::abs(riemann_theta({-z[0], -z[1]}, Om) - th) < 1e-10 * std::abs(th));

  // Shift by Omega n + m, n = (1,-1), m = (2,1):
  // theta(z + Omega n + m) = exp(-pi i n'Omega n - 2 pi i n'z) theta(z).
  std::vector<Cplx> zs{z[0] + Om(0, 0) - Om(0, 1) + Cplx(2.0),
                       z[1] + Om(1, 0) - Om(1, 1) + Cplx(1.0)};
  Cplx nOn = Om(0, 0) - Om(0, 1) - Om(1, 0) + Om(1, 1);
  Cplx nz = z[0] - z[1];
  Cplx factor = std::exp(Cplx(0.0, -std::numbers::pi) * nOn +
                         Cplx(0.0, -2.0 * std::numbers::pi) * nz);
  CHECK(std::abs(riemann_theta(zs, Om) - factor * th) < 1e-10 * std::abs(factor * th));
}

TEST_CASE("tail bound shrinks with the radius") {
  Eigen::MatrixXcd Om(1, 1);
  Om(0, 0) = Cplx(0.0, 1.0);
  double b5 = theta_tail_bound(Om, 5, 0.5);
  double b8 = theta_tail_bound(Om, 8, 0.5);
  CHECK(b8 < b5);
  CHECK(b8 < 1e-12);
  CHECK(theta_radius_for(Om, 0.5) >= 1);
}

TEST_CASE("nodal theta closed forms") {
  CHECK(nodal_theta({}, {}) == Cplx(1.0));

  Cplx Z(0.31, 0.12);
  const Cplx tau(0.0, 2.0 * std::numbers::pi);
  CHECK(std::abs(nodal_theta({Z}, {Cplx(0.5, 0.1)}) - (std::exp(tau * Z) - Cplx(1.0))) == 0.0);

  Cplx Z2(-0.2, 0.4), x1(0.4, 0.1), x2(-0.3, 0.2);
  Cplx X = std::exp(tau * Z), Y = std::exp(tau * Z2);
  Cplx want = (X + Cplx(1.0)) * (Y - Cplx(1.0)) * x2 - (X - Cplx(1.0)) * (Y + Cplx(1.0)) * x1;
  // Same arithmetic up to product re-association (and FMA contraction).
  CHECK(std::abs(nodal_theta({Z, Z2}, {x1, x2}) - want) < 1e-13 * std::abs(want));

  CHECK_THROWS_AS(nodal_theta({Z}, {x1, x2}), Error);
  CHECK_THROWS_AS(nodal_theta({Z, Z, Z}, {x1, x2, x1}), Error);
}

TEST_CASE("theta reconstruction matches the soliton generator") {
  SolverResult s = periodicity_solver(6, Cplx(5.0, 2.5), 1, std::nullopt);
  PeriodData pd = nodal_period_data(s.params);
  Window w{0, 4, 0, 4};
  DcmLattice Lth = dcm_from_theta(pd, w);
  DcmLattice Lsol = gen_one_soliton(s.params, w);
  CHECK(std::abs(Lth.q - Lsol.q) < 1e-12);
  AuditReport rep = audit_cross_ratios(Lth);
  CHECK(rep.pass(1e-10));

  // Same map up to a Moebius transformation fixed by three base sites.
  ProjectivePoint src[3] = {Lth.at(0, 0), Lth.at(1, 0), Lth.at(0, 1)};
  ProjectivePoint dst[3] = {Lsol.at(0, 0), Lsol.at(1, 0), Lsol.at(0, 1)};
  DcmLattice aligned = mobius_apply_lattice(fit_mobius(src, dst), Lth);
  double worst = 0.0;
  for (int m = 0; m <= 4; ++m)
    for (int k = 0; k <= 4; ++k)
      worst = std::max(worst, proj_distance(aligned.at(k, m), Lsol.at(k, m)));
  CHECK(worst < 1e-8);
}

TEST_CASE("q is inferred when absent") {
  SolverResult s = periodicity_solver(6, Cplx(5.0, 2.5), 1, std::nullopt);
  PeriodData pd = nodal_period_data(s.params);
  Cplx q_known = *pd.q;
  pd.q = std::nullopt;
  DcmLattice L = dcm_from_theta(pd, Window{0, 3, 0, 3});
  CHECK(std::abs(L.q - q_known) < 1e-9);
}

TEST_CASE("periodicity check against the generator lattice") {
  SolverResult s = periodicity_solver(6, std::nullopt, 1, std::nullopt);
  PeriodData pd = nodal_period_data(s.params);
  PeriodicityReport r6 = periodicity_check(pd, 6);
  CHECK(r6.periodic);
  CHECK(r6.defect < 1e-9);
  PeriodicityReport r12 = periodicity_check(pd, 12);  // doubled period also closes
  CHECK(r12.periodic);
  PeriodicityReport r5 = periodicity_check(pd, 5);
  CHECK_FALSE(r5.periodic);

  PeriodData broken = pd;
  broken.US_even[0] += Cplx(2e-3, 0.0);
  CHECK_FALSE(periodicity_check(broken, 6).periodic);

  PeriodData nolat = pd;
  nolat.lattice_generators = std::nullopt;
  CHECK_THROWS_AS(periodicity_check(nolat, 6), Error);
}

TEST_CASE("period data validation") {
  SolverResult s = periodicity_solver(6, std::nullopt, 1, std::nullopt);
  PeriodData pd = nodal_period_data(s.params);
  CHECK_NOTHROW(validate_period_data(pd));
  PeriodData bad = pd;
  bad.US_even.pop_back();
  CHECK_THROWS_AS(validate_period_data(bad), Error);
  bad = pd;
  bad.nodes.clear();  // g = 1 nodal data needs one node position
  CHECK_THROWS_AS(validate_period_data(bad), Error);
}

TEST_CASE("alpha state accumulates parity-dependent increments") {
  SolverResult s = periodicity_solver(6, std::nullopt, 1, std::nullopt);
  PeriodData pd = nodal_period_data(s.params);
  std::vector<Cplx> a00 = alpha_state(pd, 0, 0);
  for (Cplx v : a00) CHECK(std::abs(v) == 0.0);
  // Two k-steps from the origin add one even and one odd increment.
  std::vector<Cplx> a20 = alpha_state(pd, 2, 0);
  for (int i = 0; i <= pd.g; ++i)
    CHECK(std::abs(a20[i] - pd.US_even[i] - pd.US_odd[i]) < 1e-15);
  // Walking backwards inverts the walk forwards.
  std::vector<Cplx> am = alpha_state(pd, -2, 0);
  for (int i = 0; i <= pd.g; ++i)
    CHECK(std::abs(am[i] + pd.US_even[i] + pd.US_odd[i]) < 1e-15);
}
