#pragma once

// Deterministic SVG rendering of a lattice window: vertices at the affine
// positions, neighbour edges with constant-m runs drawn bolder, collapsed
// sites marked distinctly, infinite and valueless sites omitted (their
// edges clipped).

#include <dcm/lattice.hpp>

#include <cstdio>
#include <string>

namespace dcm {

struct SvgStyle {
  double canvas = 1000.0;       // larger bounding-box span in user units
  double margin_frac = 0.05;    // padding on each side
  double bold_width = 2.2;      // constant-m edges
  double thin_width = 0.9;      // constant-k edges
  double vertex_radius = 4.0;
  double marker_half = 6.0;     // collapsed-site square half-size
};

inline std::string plot_svg(const DcmLattice& L, const SvgStyle& style = {}) {
  auto drawable = [&](int k, int m) {
    return L.has_point(k, m) && !L.at(k, m).is_infinite();
  };
  double minx = 0, maxx = 0, miny = 0, maxy = 0;
  bool any = false;
  for (int m = L.win.m0; m <= L.win.m1; ++m)
    for (int k = L.win.k0; k <= L.win.k1; ++k) {
      if (!drawable(k, m)) continue;
      Cplx z = L.at(k, m).affine_value();
      if (!any) {
        minx = maxx = z.real();
        miny = maxy = z.imag();
        any = true;
      } else {
        minx = std::min(minx, z.real());
        maxx = std::max(maxx, z.real());
        miny = std::min(miny, z.imag());
        maxy = std::max(maxy, z.imag());
      }
    }
  if (!any) throw Error(Errc::invalid_params, "empty lattice: no drawable sites");

  double spanx = maxx - minx, spany = maxy - miny;
  double span = std::max({spanx, spany, 1e-12});
  double scale = style.canvas / span;
  double pad = style.canvas * style.margin_frac;
  double width = spanx * scale + 2 * pad, height = spany * scale + 2 * pad;
  auto X = [&](Cplx z) { return pad + (z.real() - minx) * scale; };
  auto Y = [&](Cplx z) { return pad + (maxy - z.imag()) * scale; };  // y up

  std::string out;
  char buf[256];
  auto emit = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
  };
  emit("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 %.4f %.4f\">\n", width,
       height);

  emit("<g stroke=\"#7a8ba6\" stroke-width=\"%.4f\" stroke-linecap=\"round\">\n",
       style.thin_width);
  for (int m = L.win.m0; m < L.win.m1; ++m)
    for (int k = L.win.k0; k <= L.win.k1; ++k)
      if (drawable(k, m) && drawable(k, m + 1)) {
        Cplx a = L.at(k, m).affine_value(), b = L.at(k, m + 1).affine_value();
        emit("<line x1=\"%.4f\" y1=\"%.4f\" x2=\"%.4f\" y2=\"%.4f\"/>\n", X(a), Y(a), X(b),
             Y(b));
      }
  out += "</g>\n";

  emit("<g stroke=\"#1f3552\" stroke-width=\"%.4f\" stroke-linecap=\"round\">\n",
       style.bold_width);
  for (int m = L.win.m0; m <= L.win.m1; ++m)
    for (int k = L.win.k0; k < L.win.k1; ++k)
      if (drawable(k, m) && drawable(k + 1, m)) {
        Cplx a = L.at(k, m).affine_value(), b = L.at(k + 1, m).affine_value();
        emit("<line x1=\"%.4f\" y1=\"%.4f\" x2=\"%.4f\" y2=\"%.4f\"/>\n", X(a), Y(a), X(b),
             Y(b));
      }
  out += "</g>\n";

  out += "<g fill=\"#16253b\">\n";
  for (int m = L.win.m0; m <= L.win.m1; ++m)
    for (int k = L.win.k0; k <= L.win.k1; ++k)
      if (drawable(k, m) && L.status_at(k, m) == SiteStatus::Regular) {
        Cplx z = L.at(k, m).affine_value();
        emit("<circle cx=\"%.4f\" cy=\"%.4f\" r=\"%.4f\"/>\n", X(z), Y(z),
             style.vertex_radius);
      }
  out += "</g>\n";

  out += "<g fill=\"#c0392b\">\n";
  for (int m = L.win.m0; m <= L.win.m1; ++m)
    for (int k = L.win.k0; k <= L.win.k1; ++k)
      if (drawable(k, m) && L.status_at(k, m) == SiteStatus::Collapsed) {
        Cplx z = L.at(k, m).affine_value();
        emit("<rect x=\"%.4f\" y=\"%.4f\" width=\"%.4f\" height=\"%.4f\"/>\n",
             X(z) - style.marker_half, Y(z) - style.marker_half, 2 * style.marker_half,
             2 * style.marker_half);
      }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace dcm
