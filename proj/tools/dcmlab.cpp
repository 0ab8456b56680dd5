// dcmlab: generate, evolve, analyze, dress, and plot constant cross-ratio
// lattices.  JSON in/out everywhere; every lattice-producing command prints
// an audit summary; exit code 1 flags bad input, 2 numerical failure.

#include <dcm/dcm.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

using dcm::Cplx;
using dcm::Json;

struct Cli {
  std::string params_path;
  std::string out_path;
  std::string svg_path;
  std::string window = "0:9,0:9";
  std::string branch = "continuity";
  std::string lambda;
  long seed = 0;  // accepted for schema stability; current commands are deterministic
  std::optional<double> tol;
};

double resolve_tol(const Cli& cli) {
  if (cli.tol) return *cli.tol;
  if (const char* env = std::getenv("DCMLAB_TOL")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end != env && v > 0) return v;
    throw dcm::Error(dcm::Errc::invalid_params, "DCMLAB_TOL is not a positive number");
  }
  return dcm::kAuditTol;
}

dcm::Window parse_window(const std::string& s) {
  dcm::Window w;
  if (std::sscanf(s.c_str(), "%d:%d,%d:%d", &w.k0, &w.k1, &w.m0, &w.m1) != 4 ||
      w.k1 < w.k0 || w.m1 < w.m0)
    throw dcm::Error(dcm::Errc::invalid_params,
                     "window must be K0:K1,M0:M1 with K0<=K1, M0<=M1");
  return w;
}

Cplx parse_lambda(const std::string& s) {
  double re = 0, im = 0;
  if (std::sscanf(s.c_str(), "%lf,%lf", &re, &im) != 2)
    throw dcm::Error(dcm::Errc::invalid_params, "lambda must be RE,IM");
  return Cplx(re, im);
}

Json load_params(const Cli& cli) {
  if (cli.params_path.empty())
    throw dcm::Error(dcm::Errc::invalid_params, "--params FILE is required");
  return dcm::load_json_file(cli.params_path);
}

Cplx require_cplx(const Json& j, const char* key) {
  if (!j.contains(key))
    throw dcm::Error(dcm::Errc::invalid_params, std::string("params: missing '") + key + "'");
  return dcm::cplx_from_json(j[key], key);
}

int count_collapsed(const dcm::DcmLattice& L) {
  int n = 0;
  for (dcm::SiteStatus s : L.status)
    if (s == dcm::SiteStatus::Collapsed) ++n;
  return n;
}

void print_audit(const dcm::DcmLattice& L, double tol) {
  dcm::AuditReport rep = dcm::audit_cross_ratios(L);
  char line[256];
  std::snprintf(line, sizeof line,
                "audit: max_dev=%.3e checked=%d indeterminate=%d infinite=%d skipped=%d "
                "collapsed=%d pass=%s\n",
                rep.max_abs_deviation, rep.checked, rep.indeterminate, rep.infinite,
                rep.skipped, count_collapsed(L), rep.pass(tol) ? "true" : "false");
  std::fputs(line, stdout);
}

void write_output(const Cli& cli, const dcm::DcmLattice& L) {
  std::string text;
  if (cli.out_path.size() > 4 && cli.out_path.substr(cli.out_path.size() - 4) == ".csv")
    text = dcm::lattice_to_csv(L);
  else
    text = dcm::dump_json(dcm::lattice_to_json(L));
  if (cli.out_path.empty())
    std::fputs(text.c_str(), stdout);
  else
    dcm::write_text_file(cli.out_path, text);
  if (!cli.svg_path.empty()) dcm::write_text_file(cli.svg_path, dcm::plot_svg(L));
}

void emit_lattice(const Cli& cli, const dcm::DcmLattice& L) {
  print_audit(L, resolve_tol(cli));
  write_output(cli, L);
}

dcm::LaxParams lax_params_from(const Json& j) {
  dcm::LaxParams p{require_cplx(j, "alpha"), require_cplx(j, "beta")};
  dcm::validate_lax_params(p);
  return p;
}

int run_generate_vacuum(const Cli& cli) {
  Json j = load_params(cli);
  dcm::LaxParams p = lax_params_from(j);
  emit_lattice(cli, dcm::vacuum_lattice(p.alpha, p.beta, parse_window(cli.window)));
  return 0;
}

int run_generate_soliton(const Cli& cli) {
  Json j = load_params(cli);
  dcm::NodalParams p;
  if (j.contains("solve")) {
    const Json& s = j["solve"];
    std::optional<Cplx> q, eps;
    if (s.contains("q")) q = dcm::cplx_from_json(s["q"], "q");
    if (s.contains("eps")) eps = dcm::cplx_from_json(s["eps"], "eps");
    dcm::SolverResult sol = dcm::periodicity_solver(
        s.value("n", 6), q, s.value("num_nodes", 0), eps);
    p = sol.params;
  } else {
    p = dcm::params_from_json(j);
  }
  emit_lattice(cli, dcm::generate(p, parse_window(cli.window)));
  return 0;
}

int run_evolve(const Cli& cli) {
  Json j = load_params(cli);
  dcm::DiscreteCurve gamma = dcm::curve_from_json(j.at("curve"));
  Cplx q = require_cplx(j, "q");
  int up = j.value("steps_up", 8), down = j.value("steps_down", 0);
  int branch0 = j.value("initial_branch", 0);
  dcm::BranchPolicy policy;
  if (cli.branch == "continuity") policy = dcm::BranchPolicy::Continuity;
  else if (cli.branch == "fixed") policy = dcm::BranchPolicy::FixedSheet;
  else throw dcm::Error(dcm::Errc::invalid_params, "--branch must be continuity or fixed");
  emit_lattice(cli, dcm::conformal_flow(gamma, q, up, down, policy, branch0));
  return 0;
}

int run_spectral(const Cli& cli) {
  Json j = load_params(cli);
  dcm::DiscreteCurve gamma = dcm::curve_from_json(j.at("curve"));
  std::optional<Cplx> q;
  std::optional<dcm::ProjectivePoint> z01;
  if (j.contains("q")) q = dcm::cplx_from_json(j["q"], "q");
  if (j.contains("z01")) {
    const Json& t = j["z01"];
    z01 = dcm::ProjectivePoint(Cplx(t[0].get<double>(), t[1].get<double>()),
                               Cplx(t[2].get<double>(), t[3].get<double>()));
  }
  dcm::SpectralData sd = dcm::spectral_data(gamma, q, z01);
  char line[160];
  std::snprintf(line, sizeof line, "spectral: n=%d d=%d deg_m=%d genus=%d generic=%s\n",
                sd.n, sd.d, sd.m.degree(), sd.genus, sd.generic.all() ? "true" : "false");
  std::fputs(line, stdout);
  std::string text = dcm::dump_json(dcm::spectral_to_json(sd));
  if (cli.out_path.empty()) std::fputs(text.c_str(), stdout);
  else dcm::write_text_file(cli.out_path, text);
  return 0;
}

int run_theta(const Cli& cli) {
  Json j = load_params(cli);
  dcm::PeriodData pd;
  if (j.contains("kind")) pd = dcm::period_data_from_json(j);
  else pd = dcm::nodal_period_data(dcm::params_from_json(j));
  emit_lattice(cli, dcm::dcm_from_theta(pd, parse_window(cli.window)));
  return 0;
}

int run_dress(const Cli& cli) {
  Json j = load_params(cli);
  dcm::LaxParams p = lax_params_from(j);
  dcm::DcmLattice src = [&]() {
    if (!j.contains("lattice")) return dcm::vacuum_lattice(p.alpha, p.beta, parse_window(cli.window));
    const Json& lj = j["lattice"];
    if (lj.is_string()) return dcm::lattice_from_json(dcm::load_json_file(lj.get<std::string>()));
    return dcm::lattice_from_json(lj);
  }();
  dcm::FrameSequence frames = dcm::extended_frame(src, p);
  dcm::DcmLattice out = src;
  if (j.contains("loop")) {
    dcm::DressResult dr = dcm::dress(frames, dcm::loop_from_json(j["loop"]));
    frames = std::move(dr.frames);
    out = std::move(dr.lattice);
  }
  if (!cli.lambda.empty()) out = dcm::family_map(frames, parse_lambda(cli.lambda));
  emit_lattice(cli, out);
  return 0;
}

int run_cubic(const Cli& cli) {
  Json j = load_params(cli);
  emit_lattice(cli, dcm::cubic_lattice(lax_params_from(j), parse_window(cli.window)));
  return 0;
}

int run_audit(const Cli& cli) {
  Json j = load_params(cli);
  dcm::DcmLattice L = dcm::lattice_from_json(j);
  double tol = resolve_tol(cli);
  dcm::AuditReport rep = dcm::audit_cross_ratios(L);
  print_audit(L, tol);
  Json out;
  out["max_abs_deviation"] = rep.max_abs_deviation;
  out["worst_site"] = Json::array({rep.worst_k, rep.worst_m});
  out["checked"] = rep.checked;
  out["indeterminate"] = rep.indeterminate;
  out["infinite"] = rep.infinite;
  out["skipped"] = rep.skipped;
  out["collapsed"] = count_collapsed(L);
  out["tol"] = tol;
  out["pass"] = rep.pass(tol);
  std::string text = dcm::dump_json(out);
  if (cli.out_path.empty()) std::fputs(text.c_str(), stdout);
  else dcm::write_text_file(cli.out_path, text);
  return 0;
}

int run_plot(const Cli& cli) {
  Json j = load_params(cli);
  dcm::DcmLattice L = dcm::lattice_from_json(j);
  std::string svg = dcm::plot_svg(L);
  if (!cli.svg_path.empty()) dcm::write_text_file(cli.svg_path, svg);
  else if (!cli.out_path.empty()) dcm::write_text_file(cli.out_path, svg);
  else std::fputs(svg.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constant cross-ratio lattice laboratory"};
  app.require_subcommand(1);
  Cli cli;

  auto add_common = [&](CLI::App* sub, bool window, bool branch, bool lambda) {
    sub->add_option("--params", cli.params_path, "input parameter/data JSON file");
    sub->add_option("--out", cli.out_path, "output file (.json, or .csv for lattices)");
    sub->add_option("--svg", cli.svg_path, "also render the lattice to this SVG file");
    sub->add_option("--seed", cli.seed, "random seed (reserved; commands are deterministic)");
    sub->add_option("--tol", cli.tol, "audit tolerance (overrides DCMLAB_TOL)");
    if (window) sub->add_option("--window", cli.window, "lattice window K0:K1,M0:M1");
    if (branch)
      sub->add_option("--branch", cli.branch, "eigenline policy: continuity|fixed");
    if (lambda)
      sub->add_option("--lambda", cli.lambda, "deformation parameter RE,IM (default: infinity)");
  };

  int (*runner)(const Cli&) = nullptr;
  auto bind = [&](const char* name, const char* desc, int (*fn)(const Cli&), bool window,
                  bool branch = false, bool lambda = false) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_common(sub, window, branch, lambda);
    sub->callback([&runner, fn]() { runner = fn; });
    return sub;
  };

  bind("generate-vacuum", "parallelogram tiling z = k*alpha + m*beta", run_generate_vacuum,
       true);
  bind("generate-soliton", "exponential and soliton lattices from nodal-curve parameters",
       run_generate_soliton, true);
  bind("evolve", "flow a periodic curve into a lattice via its spectral eigenlines",
       run_evolve, false, true);
  bind("spectral", "holonomy, spectral polynomial, genus, and marked points of a curve",
       run_spectral, false);
  bind("theta", "reconstruct a lattice from period data (or nodal parameters)", run_theta,
       true);
  bind("dress", "extended frames, loop-group dressing, and the lambda family", run_dress,
       true, false, true);
  bind("cubic", "the discrete cubic lattice", run_cubic, true);
  bind("audit", "cross-ratio audit of a stored lattice", run_audit, false);
  bind("plot", "render a stored lattice as SVG", run_plot, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    Json err;
    err["error"] = Json{{"code", "invalid_params"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }

  try {
    return runner ? runner(cli) : 1;
  } catch (const dcm::Error& e) {
    Json err;
    err["error"] = Json{{"code", dcm::errc_name(e.code)}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return dcm::is_validation_error(e.code) ? 1 : 2;
  } catch (const std::exception& e) {
    Json err;
    err["error"] = Json{{"code", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  }
}
