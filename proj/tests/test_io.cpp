#include <dcm/io.hpp>
#include <dcm/soliton.hpp>
#include <dcm/svg.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <string>

using namespace dcm;

namespace {

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// A small hand-built lattice exercising every site state: regular finite,
// regular infinite, collapsed with a retained value, and never-set.
DcmLattice mixed_lattice() {
  DcmLattice L(Cplx(2.0, 0.5), Window{0, 1, 0, 1});
  L.set(0, 0, ProjectivePoint::affine(Cplx(0.5, -0.25)));
  L.set(1, 0, ProjectivePoint(Cplx(1.0), Cplx(0.0)));  // point at infinity
  L.set(1, 1, ProjectivePoint::affine(Cplx(1.0 / 3.0, 2.0)));
  L.mark_collapsed(1, 1);
  // (0, 1) stays unset with no stored value.
  return L;
}

}  // namespace

TEST_CASE("lattice JSON round trip") {
  DcmLattice L = vacuum_lattice(Cplx(1.0, 0.2), Cplx(0.3, 1.1), Window{-1, 2, 0, 2});
  L.period_n = 6;

  Json j1 = lattice_to_json(L);
  DcmLattice L2 = lattice_from_json(parse_json(dump_json(j1), "lattice"));
  Json j2 = lattice_to_json(L2);
  REQUIRE(dump_json(j1) == dump_json(j2));

  REQUIRE(L2.q == L.q);
  REQUIRE(L2.win.k0 == -1);
  REQUIRE(L2.win.k1 == 2);
  REQUIRE(L2.period_n.has_value());
  REQUIRE(*L2.period_n == 6);
  for (int m = 0; m <= 2; ++m)
    for (int k = -1; k <= 2; ++k) {
      REQUIRE(L2.status_at(k, m) == SiteStatus::Regular);
      REQUIRE(L2.at(k, m).v0 == L.at(k, m).v0);
      REQUIRE(L2.at(k, m).v1 == L.at(k, m).v1);
    }
}

TEST_CASE("lattice JSON keeps site status and collapsed values") {
  DcmLattice L = mixed_lattice();
  Json j = lattice_to_json(L);
  DcmLattice L2 = lattice_from_json(j);

  REQUIRE(L2.status_at(0, 0) == SiteStatus::Regular);
  REQUIRE(L2.status_at(1, 0) == SiteStatus::Regular);
  REQUIRE(L2.at(1, 0).is_infinite());
  REQUIRE(L2.status_at(1, 1) == SiteStatus::Collapsed);
  REQUIRE(L2.has_point(1, 1));  // collapsed site keeps its last value
  REQUIRE(L2.status_at(0, 1) == SiteStatus::Unset);
  REQUIRE_FALSE(L2.has_point(0, 1));
  REQUIRE_FALSE(L2.period_n.has_value());

  REQUIRE(dump_json(lattice_to_json(L2)) == dump_json(j));
}

TEST_CASE("lattice JSON validation") {
  Json good = lattice_to_json(mixed_lattice());

  SECTION("missing keys") {
    for (const char* key : {"q", "k_range", "m_range", "points", "status"}) {
      Json j = good;
      j.erase(key);
      REQUIRE_THROWS_AS(lattice_from_json(j), Error);
    }
  }
  SECTION("empty window") {
    Json j = good;
    j["k_range"] = Json::array({3, 1});
    REQUIRE_THROWS_AS(lattice_from_json(j), Error);
  }
  SECTION("row count mismatch") {
    Json j = good;
    j["points"].erase(1);
    REQUIRE_THROWS_AS(lattice_from_json(j), Error);
  }
  SECTION("regular site without a value") {
    Json j = good;
    j["status"][1][0] = "regular";  // site (0,1) carries the all-zero tuple
    REQUIRE_THROWS_AS(lattice_from_json(j), Error);
  }
  SECTION("unknown status name") {
    Json j = good;
    j["status"][0][0] = "melted";
    REQUIRE_THROWS_AS(lattice_from_json(j), Error);
  }
  SECTION("malformed text") {
    try {
      parse_json("{ not json", "input");
      FAIL("expected parse to throw");
    } catch (const Error& e) {
      REQUIRE(e.code == Errc::io_error);
    }
  }
}

TEST_CASE("status names round trip") {
  for (SiteStatus s : {SiteStatus::Regular, SiteStatus::Collapsed, SiteStatus::Unset})
    REQUIRE(status_from_name(status_name(s)) == s);
  REQUIRE_THROWS_AS(status_from_name("bogus"), Error);
}

TEST_CASE("CSV export") {
  std::string csv = lattice_to_csv(mixed_lattice());

  REQUIRE(csv.rfind("k,m,re,im\n", 0) == 0);
  REQUIRE(count_occurrences(csv, "\n") == 4);  // header + three sites with values
  REQUIRE(csv.find("1,0,inf,inf\n") != std::string::npos);
  REQUIRE(csv.find("0,0,0.5,-0.25\n") != std::string::npos);
  // 17 significant digits so the values reload exactly.
  REQUIRE(csv.find("1,1,0.33333333333333331,2\n") != std::string::npos);
  REQUIRE(csv.find("0,1,") == std::string::npos);  // valueless site omitted
}

TEST_CASE("params JSON round trip") {
  NodalParams p;
  p.a = Cplx(1.0, 0.0);
  p.b = Cplx(0.6, -0.3);
  p.y = Cplx(0.35, 0.15);
  p.nodes = {Cplx(0.2, 0.4)};
  p.phases = {Cplx(1.5, -0.5)};

  SECTION("eps absent serializes as the string \"inf\"") {
    Json j = params_to_json(p);
    REQUIRE(j["eps"].is_string());
    REQUIRE(j["eps"].get<std::string>() == "inf");
    NodalParams p2 = params_from_json(j);
    REQUIRE_FALSE(p2.eps.has_value());
    REQUIRE(dump_json(params_to_json(p2)) == dump_json(j));
    REQUIRE(p2.b == p.b);
    REQUIRE(p2.nodes == p.nodes);
    REQUIRE(p2.phases == p.phases);
  }
  SECTION("finite eps survives") {
    p.eps = Cplx(2.5, 0.25);
    Json j = params_to_json(p);
    NodalParams p2 = params_from_json(j);
    REQUIRE(p2.eps.has_value());
    REQUIRE(*p2.eps == *p.eps);
    REQUIRE(dump_json(params_to_json(p2)) == dump_json(j));
  }
  SECTION("eps must be [re, im] or \"inf\"") {
    Json j = params_to_json(p);
    j["eps"] = "sometimes";
    REQUIRE_THROWS_AS(params_from_json(j), Error);
  }
}

TEST_CASE("period data JSON round trip") {
  SECTION("nodal kind") {
    SolverResult sr = periodicity_solver(6, Cplx(5.0, 2.5), 1, std::nullopt);
    PeriodData pd = nodal_period_data(sr.params);
    Json j1 = period_data_to_json(pd);
    REQUIRE(j1["kind"] == "nodal");
    PeriodData pd2 = period_data_from_json(parse_json(dump_json(j1), "period data"));
    REQUIRE(dump_json(period_data_to_json(pd2)) == dump_json(j1));
    REQUIRE(pd2.g == pd.g);
    REQUIRE(pd2.q.has_value());
    REQUIRE(*pd2.q == *pd.q);
    REQUIRE(pd2.lattice_generators.has_value());
  }
  SECTION("riemann kind") {
    PeriodData pd;
    pd.kind = PeriodData::ThetaKind::Riemann;
    pd.g = 1;
    pd.omega = Eigen::MatrixXcd::Constant(1, 1, Cplx(0.0, 1.1));
    pd.A_Pinf = {Cplx(0.1, 0.2)};
    pd.A_Pinf_tilde = {Cplx(0.3, -0.1)};
    pd.A_D00 = {Cplx(0.0, 0.4)};
    pd.kappa = {Cplx(0.25, 0.0)};
    pd.US_even = {Cplx(0.5, 0.0), Cplx(0.0, 0.5)};
    pd.US_odd = {Cplx(-0.5, 0.0), Cplx(0.0, -0.25)};
    pd.UQ_even = {Cplx(0.1, 0.0), Cplx(0.2, 0.0)};
    pd.UQ_odd = {Cplx(0.0, 0.1), Cplx(0.0, 0.2)};
    validate_period_data(pd);

    Json j1 = period_data_to_json(pd);
    REQUIRE(j1["kind"] == "riemann");
    REQUIRE(j1.contains("omega"));
    PeriodData pd2 = period_data_from_json(j1);
    REQUIRE(dump_json(period_data_to_json(pd2)) == dump_json(j1));
    REQUIRE(pd2.omega(0, 0) == pd.omega(0, 0));
  }
  SECTION("unknown kind is rejected") {
    SolverResult sr = periodicity_solver(6, std::nullopt, 1, std::nullopt);
    Json j = period_data_to_json(nodal_period_data(sr.params));
    j["kind"] = "mystic";
    REQUIRE_THROWS_AS(period_data_from_json(j), Error);
  }
  SECTION("unsupported version is rejected") {
    SolverResult sr = periodicity_solver(6, std::nullopt, 1, std::nullopt);
    Json j = period_data_to_json(nodal_period_data(sr.params));
    j["version"] = 2;
    REQUIRE_THROWS_AS(period_data_from_json(j), Error);
  }
}

TEST_CASE("spectral JSON round trip") {
  std::vector<ProjectivePoint> pts;
  for (Cplx z : {Cplx(0.1, 0.2), Cplx(0.9, -0.1), Cplx(1.3, 0.8), Cplx(0.6, 1.2),
                 Cplx(-0.2, 0.9), Cplx(-0.4, 0.3)})
    pts.push_back(ProjectivePoint::affine(z));
  SpectralData sd =
      spectral_data(DiscreteCurve(pts), Cplx(2.0, 0.7), ProjectivePoint::affine(Cplx(0.5, 0.5)));
  REQUIRE(sd.Q.has_value());

  Json j1 = spectral_to_json(sd);
  SpectralData sd2 = spectral_from_json(parse_json(dump_json(j1), "spectral"));
  REQUIRE(dump_json(spectral_to_json(sd2)) == dump_json(j1));
  REQUIRE(sd2.n == sd.n);
  REQUIRE(sd2.d == sd.d);
  REQUIRE(sd2.genus == sd.genus);
  REQUIRE(sd2.branch_points.size() == sd.branch_points.size());
  REQUIRE(sd2.generic.all() == sd.generic.all());
  REQUIRE(sd2.Q.has_value());
  REQUIRE(sd2.Q->lambda == sd.Q->lambda);
}

TEST_CASE("loop JSON round trip") {
  Loop g(-1, {Matrix2{Cplx(0.0), Cplx(1.0, 0.5), Cplx(0.0), Cplx(0.0)},
              Matrix2::identity(),
              Matrix2{Cplx(0.0), Cplx(0.0), Cplx(-0.25, 0.1), Cplx(0.0)}});
  Json j1 = loop_to_json(g);
  REQUIRE(j1["lo"] == -1);
  REQUIRE(j1["hi"] == 1);
  Loop g2 = loop_from_json(parse_json(dump_json(j1), "loop"));
  REQUIRE(dump_json(loop_to_json(g2)) == dump_json(j1));
  REQUIRE(g2.lo == g.lo);
  REQUIRE(g2.hi() == g.hi());

  Json bad = j1;
  bad["hi"] = 5;
  REQUIRE_THROWS_AS(loop_from_json(bad), Error);
}

TEST_CASE("curve JSON round trip") {
  std::vector<ProjectivePoint> pts = {
      ProjectivePoint::affine(Cplx(0.0, 0.0)), ProjectivePoint::affine(Cplx(1.0, 0.0)),
      ProjectivePoint(Cplx(1.0), Cplx(0.0)), ProjectivePoint::affine(Cplx(0.0, 1.0)),
      ProjectivePoint::affine(Cplx(-0.5, 0.5))};
  DiscreteCurve gamma(pts);

  Json j1 = curve_to_json(gamma);
  DiscreteCurve g2 = curve_from_json(parse_json(dump_json(j1), "curve"));
  REQUIRE(dump_json(curve_to_json(g2)) == dump_json(j1));
  REQUIRE(g2.n() == gamma.n());
  REQUIRE(g2.points[2].is_infinite());

  Json too_short = Json::array({j1[0], j1[1], j1[2]});
  REQUIRE_THROWS_AS(curve_from_json(too_short), Error);
  Json bad_tuple = j1;
  bad_tuple[0] = Json::array({1.0, 2.0});
  REQUIRE_THROWS_AS(curve_from_json(bad_tuple), Error);
}

TEST_CASE("SVG plot") {
  SECTION("vacuum grid markers and edges") {
    DcmLattice L = vacuum_lattice(Cplx(1.0, 0.2), Cplx(0.3, 1.1), Window{0, 9, 0, 9});
    std::string svg = plot_svg(L);
    REQUIRE(count_occurrences(svg, "<circle") == 100);
    // 9x10 constant-k edges plus 10x9 constant-m edges.
    REQUIRE(count_occurrences(svg, "<line") == 180);
    REQUIRE(count_occurrences(svg, "<rect") == 0);
    REQUIRE(svg.find("#7a8ba6") != std::string::npos);
    REQUIRE(svg.find("#1f3552") != std::string::npos);
    REQUIRE(svg.find("#16253b") != std::string::npos);
    // The thin constant-k group comes before the bold constant-m group.
    REQUIRE(svg.find("#7a8ba6") < svg.find("#1f3552"));

    REQUIRE(plot_svg(L) == svg);  // deterministic
  }
  SECTION("collapsed sites draw as squares") {
    DcmLattice L = cubic_lattice(LaxParams{Cplx(1.0, 0.0), Cplx(0.7, 0.4)},
                                 Window{-4, 4, -4, 4});
    REQUIRE(L.status_at(0, 0) == SiteStatus::Collapsed);
    std::string svg = plot_svg(L);
    REQUIRE(count_occurrences(svg, "<rect") == 1);
    REQUIRE(svg.find("#c0392b") != std::string::npos);
    REQUIRE(count_occurrences(svg, "<circle") == 81 - 1);
  }
  SECTION("a lattice with no drawable sites is rejected") {
    DcmLattice empty(Cplx(2.0, 0.0), Window{0, 3, 0, 3});
    try {
      plot_svg(empty);
      FAIL("expected plot_svg to throw");
    } catch (const Error& e) {
      REQUIRE(e.code == Errc::invalid_params);
    }
  }
}
