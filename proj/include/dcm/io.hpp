#pragma once

// JSON and CSV persistence.  Complex numbers are [re, im] pairs, points are
// homogeneous 4-tuples [v0re, v0im, v1re, v1im], and doubles rely on the
// serializer's shortest round-trip representation so saved data reloads
// bit-exactly.

#include <dcm/dressing.hpp>
#include <dcm/spectral.hpp>
#include <dcm/theta.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace dcm {

using Json = nlohmann::json;

inline Json to_json(Cplx z) { return Json::array({z.real(), z.imag()}); }

inline Cplx cplx_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error(Errc::io_error, std::string(what) + ": expected [re, im]");
  return Cplx(j[0].get<double>(), j[1].get<double>());
}

inline Json vec_to_json(const std::vector<Cplx>& v) {
  Json out = Json::array();
  for (Cplx z : v) out.push_back(to_json(z));
  return out;
}

inline std::vector<Cplx> vec_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw Error(Errc::io_error, std::string(what) + ": expected array");
  std::vector<Cplx> out;
  out.reserve(j.size());
  for (const Json& e : j) out.push_back(cplx_from_json(e, what));
  return out;
}

inline Json point_to_json(const ProjectivePoint& p) {
  return Json::array({p.v0.real(), p.v0.imag(), p.v1.real(), p.v1.imag()});
}

inline const char* status_name(SiteStatus s) {
  switch (s) {
    case SiteStatus::Regular: return "regular";
    case SiteStatus::Collapsed: return "collapsed";
    case SiteStatus::Unset: return "unset";
  }
  return "unset";
}

inline SiteStatus status_from_name(const std::string& s) {
  if (s == "regular") return SiteStatus::Regular;
  if (s == "collapsed") return SiteStatus::Collapsed;
  if (s == "unset") return SiteStatus::Unset;
  throw Error(Errc::io_error, "unknown site status '" + s + "'");
}

inline Json lattice_to_json(const DcmLattice& L) {
  Json j;
  j["q"] = to_json(L.q);
  j["k_range"] = Json::array({L.win.k0, L.win.k1});
  j["m_range"] = Json::array({L.win.m0, L.win.m1});
  if (L.period_n) j["period_n"] = *L.period_n;
  Json points = Json::array(), status = Json::array();
  for (int m = L.win.m0; m <= L.win.m1; ++m) {
    Json prow = Json::array(), srow = Json::array();
    for (int k = L.win.k0; k <= L.win.k1; ++k) {
      // Sites without a stored value keep the all-zero tuple.
      prow.push_back(L.has_point(k, m) ? point_to_json(L.at(k, m))
                                       : Json::array({0.0, 0.0, 0.0, 0.0}));
      srow.push_back(status_name(L.status_at(k, m)));
    }
    points.push_back(std::move(prow));
    status.push_back(std::move(srow));
  }
  j["points"] = std::move(points);
  j["status"] = std::move(status);
  return j;
}

inline DcmLattice lattice_from_json(const Json& j) {
  for (const char* key : {"q", "k_range", "m_range", "points", "status"})
    if (!j.contains(key))
      throw Error(Errc::io_error, std::string("lattice JSON: missing '") + key + "'");
  Window w{j["k_range"][0].get<int>(), j["k_range"][1].get<int>(),
           j["m_range"][0].get<int>(), j["m_range"][1].get<int>()};
  if (w.k1 < w.k0 || w.m1 < w.m0) throw Error(Errc::io_error, "lattice JSON: empty window");
  DcmLattice L(cplx_from_json(j["q"], "q"), w);
  if (j.contains("period_n")) L.period_n = j["period_n"].get<int>();
  const Json& points = j["points"];
  const Json& status = j["status"];
  if (static_cast<int>(points.size()) != w.rows() ||
      static_cast<int>(status.size()) != w.rows())
    throw Error(Errc::io_error, "lattice JSON: row count mismatch");
  for (int m = w.m0; m <= w.m1; ++m) {
    const Json& prow = points[m - w.m0];
    const Json& srow = status[m - w.m0];
    if (static_cast<int>(prow.size()) != w.cols() ||
        static_cast<int>(srow.size()) != w.cols())
      throw Error(Errc::io_error, "lattice JSON: column count mismatch");
    for (int k = w.k0; k <= w.k1; ++k) {
      const Json& t = prow[k - w.k0];
      if (!t.is_array() || t.size() != 4)
        throw Error(Errc::io_error, "lattice JSON: point must be a 4-tuple");
      SiteStatus s = status_from_name(srow[k - w.k0].get<std::string>());
      Cplx v0(t[0].get<double>(), t[1].get<double>());
      Cplx v1(t[2].get<double>(), t[3].get<double>());
      bool zero = std::abs(v0) == 0.0 && std::abs(v1) == 0.0;
      if (s == SiteStatus::Regular) {
        if (zero) throw Error(Errc::io_error, "lattice JSON: regular site without value");
        L.points[L.idx(k, m)] = ProjectivePoint(v0, v1);
        L.status[L.idx(k, m)] = SiteStatus::Regular;
      } else if (s == SiteStatus::Collapsed) {
        if (!zero) L.points[L.idx(k, m)] = ProjectivePoint(v0, v1);
        L.status[L.idx(k, m)] = SiteStatus::Collapsed;
      }
    }
  }
  return L;
}

// CSV rows k,m,re(z),im(z); the point at infinity prints the literal "inf".
// Sites without a stored value are omitted.
inline std::string lattice_to_csv(const DcmLattice& L) {
  std::ostringstream os;
  os << "k,m,re,im\n";
  os.precision(17);
  for (int m = L.win.m0; m <= L.win.m1; ++m)
    for (int k = L.win.k0; k <= L.win.k1; ++k) {
      if (!L.has_point(k, m)) continue;
      const ProjectivePoint& p = L.at(k, m);
      os << k << ',' << m << ',';
      if (p.is_infinite()) {
        os << "inf,inf";
      } else {
        Cplx z = p.affine_value();
        os << z.real() << ',' << z.imag();
      }
      os << '\n';
    }
  return os.str();
}

inline Json laurent_to_json(const LaurentPoly& p) {
  Json out = Json::array();
  for (Cplx c : p.c) out.push_back(to_json(c));
  return out;
}

inline LaurentPoly laurent_from_json(const Json& j, const char* what) {
  LaurentPoly p;
  p.c = vec_from_json(j, what);
  if (p.c.empty()) p.c.assign(1, Cplx(0.0));
  return p;
}

inline Json matrix2_to_json(const Matrix2& M) {
  return Json::array({M.a.real(), M.a.imag(), M.b.real(), M.b.imag(), M.c.real(),
                      M.c.imag(), M.d.real(), M.d.imag()});
}

inline Matrix2 matrix2_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 8)
    throw Error(Errc::io_error, std::string(what) + ": expected 8 numbers");
  return Matrix2{Cplx(j[0].get<double>(), j[1].get<double>()),
                 Cplx(j[2].get<double>(), j[3].get<double>()),
                 Cplx(j[4].get<double>(), j[5].get<double>()),
                 Cplx(j[6].get<double>(), j[7].get<double>())};
}

inline Json curve_point_to_json(const CurvePoint& cp) {
  Json j;
  j["lambda"] = to_json(cp.lambda);
  j["mu"] = to_json(cp.mu);
  j["eigenline"] = point_to_json(cp.eigenline);
  j["membership_resid"] = cp.membership_resid;
  j["eigenline_dist"] = cp.eigenline_dist;
  return j;
}

inline CurvePoint curve_point_from_json(const Json& j) {
  CurvePoint cp;
  cp.lambda = cplx_from_json(j.at("lambda"), "lambda");
  cp.mu = cplx_from_json(j.at("mu"), "mu");
  const Json& e = j.at("eigenline");
  cp.eigenline = ProjectivePoint(Cplx(e[0].get<double>(), e[1].get<double>()),
                                 Cplx(e[2].get<double>(), e[3].get<double>()));
  cp.membership_resid = j.at("membership_resid").get<double>();
  cp.eigenline_dist = j.at("eigenline_dist").get<double>();
  return cp;
}

inline Json spectral_to_json(const SpectralData& sd) {
  Json j;
  j["version"] = 1;
  j["n"] = sd.n;
  j["d"] = sd.d;
  j["p"] = laurent_to_json(sd.p);
  Json mc = Json::array();
  for (const Matrix2& M : sd.M.c) mc.push_back(matrix2_to_json(M));
  j["M"] = std::move(mc);
  j["m"] = laurent_to_json(sd.m);
  Json bp = Json::array();
  for (const BranchPoint& b : sd.branch_points)
    bp.push_back(Json{{"lambda", to_json(b.lambda)}, {"multiplicity", b.multiplicity}});
  j["branch_points"] = std::move(bp);
  j["branched_at_zero"] = sd.branched_at_zero;
  j["genus"] = sd.genus;
  j["generic"] = Json{{"deg_is_n_minus_2", sd.generic.deg_is_n_minus_2},
                      {"m_inf_nonzero", sd.generic.m_inf_nonzero},
                      {"roots_distinct", sd.generic.roots_distinct}};
  j["O"] = curve_point_to_json(sd.O);
  j["S"] = curve_point_to_json(sd.S);
  if (sd.Q) j["Q"] = curve_point_to_json(*sd.Q);
  return j;
}

inline SpectralData spectral_from_json(const Json& j) {
  SpectralData sd;
  sd.n = j.at("n").get<int>();
  sd.d = j.at("d").get<int>();
  sd.p = laurent_from_json(j.at("p"), "p");
  for (const Json& e : j.at("M")) sd.M.c.push_back(matrix2_from_json(e, "M"));
  if (sd.M.c.empty()) sd.M.c.assign(1, Matrix2{});
  sd.m = laurent_from_json(j.at("m"), "m");
  for (const Json& e : j.at("branch_points"))
    sd.branch_points.push_back(
        BranchPoint{cplx_from_json(e.at("lambda"), "lambda"), e.at("multiplicity").get<int>()});
  sd.branched_at_zero = j.at("branched_at_zero").get<bool>();
  sd.genus = j.at("genus").get<int>();
  sd.generic.deg_is_n_minus_2 = j.at("generic").at("deg_is_n_minus_2").get<bool>();
  sd.generic.m_inf_nonzero = j.at("generic").at("m_inf_nonzero").get<bool>();
  sd.generic.roots_distinct = j.at("generic").at("roots_distinct").get<bool>();
  sd.O = curve_point_from_json(j.at("O"));
  sd.S = curve_point_from_json(j.at("S"));
  if (j.contains("Q")) sd.Q = curve_point_from_json(j.at("Q"));
  return sd;
}

inline Json params_to_json(const NodalParams& p) {
  Json j;
  j["a"] = to_json(p.a);
  j["b"] = to_json(p.b);
  j["eps"] = p.eps ? to_json(*p.eps) : Json("inf");
  j["y"] = to_json(p.y);
  j["nodes"] = vec_to_json(p.nodes);
  j["phases"] = vec_to_json(p.phases);
  return j;
}

inline NodalParams params_from_json(const Json& j) {
  NodalParams p;
  p.a = cplx_from_json(j.at("a"), "a");
  p.b = cplx_from_json(j.at("b"), "b");
  p.y = cplx_from_json(j.at("y"), "y");
  const Json& eps = j.at("eps");
  if (eps.is_string()) {
    if (eps.get<std::string>() != "inf")
      throw Error(Errc::io_error, "eps must be [re, im] or \"inf\"");
  } else {
    p.eps = cplx_from_json(eps, "eps");
  }
  if (j.contains("nodes")) p.nodes = vec_from_json(j["nodes"], "nodes");
  if (j.contains("phases")) p.phases = vec_from_json(j["phases"], "phases");
  return p;
}

inline Json cmatrix_to_json(const Eigen::MatrixXcd& M) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(to_json(M(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXcd cmatrix_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw Error(Errc::io_error, std::string(what) + ": expected matrix");
  const int rows = static_cast<int>(j.size());
  int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXcd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols)
      throw Error(Errc::io_error, std::string(what) + ": ragged matrix");
    for (int c = 0; c < cols; ++c) M(r, c) = cplx_from_json(j[r][c], what);
  }
  return M;
}

inline Json period_data_to_json(const PeriodData& pd) {
  Json j;
  j["version"] = pd.version;
  j["g"] = pd.g;
  j["kind"] = pd.kind == PeriodData::ThetaKind::Nodal ? "nodal" : "riemann";
  if (pd.kind == PeriodData::ThetaKind::Riemann) j["omega"] = cmatrix_to_json(pd.omega);
  else j["nodes"] = vec_to_json(pd.nodes);
  j["A_Pinf"] = vec_to_json(pd.A_Pinf);
  j["A_Pinf_tilde"] = vec_to_json(pd.A_Pinf_tilde);
  j["A_D00"] = vec_to_json(pd.A_D00);
  j["kappa"] = vec_to_json(pd.kappa);
  j["US_even"] = vec_to_json(pd.US_even);
  j["US_odd"] = vec_to_json(pd.US_odd);
  j["UQ_even"] = vec_to_json(pd.UQ_even);
  j["UQ_odd"] = vec_to_json(pd.UQ_odd);
  if (pd.lattice_generators) j["generators"] = cmatrix_to_json(*pd.lattice_generators);
  if (pd.q) j["q"] = to_json(*pd.q);
  return j;
}

inline PeriodData period_data_from_json(const Json& j) {
  PeriodData pd;
  pd.version = j.value("version", 1);
  if (pd.version != 1) throw Error(Errc::io_error, "unsupported period data version");
  pd.g = j.at("g").get<int>();
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "nodal") {
    pd.kind = PeriodData::ThetaKind::Nodal;
    if (j.contains("nodes")) pd.nodes = vec_from_json(j["nodes"], "nodes");
  } else if (kind == "riemann") {
    pd.kind = PeriodData::ThetaKind::Riemann;
    pd.omega = cmatrix_from_json(j.at("omega"), "omega");
  } else {
    throw Error(Errc::io_error, "kind must be \"nodal\" or \"riemann\"");
  }
  pd.A_Pinf = vec_from_json(j.at("A_Pinf"), "A_Pinf");
  pd.A_Pinf_tilde = vec_from_json(j.at("A_Pinf_tilde"), "A_Pinf_tilde");
  pd.A_D00 = vec_from_json(j.at("A_D00"), "A_D00");
  pd.kappa = vec_from_json(j.at("kappa"), "kappa");
  pd.US_even = vec_from_json(j.at("US_even"), "US_even");
  pd.US_odd = vec_from_json(j.at("US_odd"), "US_odd");
  pd.UQ_even = vec_from_json(j.at("UQ_even"), "UQ_even");
  pd.UQ_odd = vec_from_json(j.at("UQ_odd"), "UQ_odd");
  if (j.contains("generators"))
    pd.lattice_generators = cmatrix_from_json(j["generators"], "generators");
  if (j.contains("q")) pd.q = cplx_from_json(j["q"], "q");
  validate_period_data(pd);
  return pd;
}

inline Json loop_to_json(const Loop& g) {
  Json j;
  j["lo"] = g.lo;
  j["hi"] = g.hi();
  Json coeffs = Json::array();
  for (const Matrix2& M : g.c) coeffs.push_back(matrix2_to_json(M));
  j["coeffs"] = std::move(coeffs);
  return j;
}

inline Loop loop_from_json(const Json& j) {
  Loop g;
  g.lo = j.at("lo").get<int>();
  g.c.clear();
  for (const Json& e : j.at("coeffs")) g.c.push_back(matrix2_from_json(e, "loop coeff"));
  if (g.c.empty()) g.c.assign(1, Matrix2{});
  if (j.contains("hi") && j["hi"].get<int>() != g.hi())
    throw Error(Errc::io_error, "loop JSON: support bounds disagree with coefficient count");
  return g;
}

inline DiscreteCurve curve_from_json(const Json& j) {
  if (!j.is_array() || j.size() < 4)
    throw Error(Errc::io_error, "curve: expected an array of at least 4 point tuples");
  std::vector<ProjectivePoint> pts;
  for (const Json& t : j) {
    if (!t.is_array() || t.size() != 4)
      throw Error(Errc::io_error, "curve point must be a 4-tuple [v0re, v0im, v1re, v1im]");
    pts.emplace_back(Cplx(t[0].get<double>(), t[1].get<double>()),
                     Cplx(t[2].get<double>(), t[3].get<double>()));
  }
  return DiscreteCurve(std::move(pts));
}

inline Json curve_to_json(const DiscreteCurve& gamma) {
  Json out = Json::array();
  for (const ProjectivePoint& p : gamma.points) out.push_back(point_to_json(p));
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path + "'");
  out << text;
}

inline Json parse_json(const std::string& text, const char* what) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw Error(Errc::io_error, std::string(what) + ": malformed JSON");
  return j;
}

inline Json load_json_file(const std::string& path) {
  return parse_json(read_text_file(path), path.c_str());
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace dcm
