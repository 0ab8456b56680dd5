#pragma once

// Finite Z^2 windows of projective points with a constant cross-ratio per
// elementary quadrilateral: storage, the row-evolution step, audits, and
// collapse detection.

#include <dcm/laurent.hpp>

#include <optional>
#include <utility>
#include <vector>

namespace dcm {

enum class SiteStatus : unsigned char { Unset, Regular, Collapsed };

struct Window {
  int k0 = 0, k1 = 0, m0 = 0, m1 = 0;  // inclusive
  int cols() const { return k1 - k0 + 1; }
  int rows() const { return m1 - m0 + 1; }
};

struct DcmLattice {
  Cplx q{0.0, 0.0};
  Window win;
  std::optional<int> period_n;
  std::vector<ProjectivePoint> points;
  std::vector<SiteStatus> status;

  DcmLattice() = default;
  DcmLattice(Cplx q_, Window w) : q(q_), win(w) {
    if (w.k1 < w.k0 || w.m1 < w.m0)
      throw Error(Errc::invalid_params, "empty lattice window");
    points.resize(static_cast<size_t>(w.cols()) * w.rows());
    status.assign(points.size(), SiteStatus::Unset);
  }

  bool in_window(int k, int m) const {
    return k >= win.k0 && k <= win.k1 && m >= win.m0 && m <= win.m1;
  }
  size_t idx(int k, int m) const {
    return static_cast<size_t>(m - win.m0) * win.cols() + (k - win.k0);
  }
  const ProjectivePoint& at(int k, int m) const { return points[idx(k, m)]; }
  SiteStatus status_at(int k, int m) const { return status[idx(k, m)]; }
  // Collapsed sites may or may not carry a value (a divisor hit records the
  // flag alone); the zero pair marks "no stored point".
  bool has_point(int k, int m) const {
    const ProjectivePoint& p = points[idx(k, m)];
    return status[idx(k, m)] != SiteStatus::Unset &&
           (std::abs(p.v0) != 0.0 || std::abs(p.v1) != 0.0);
  }

  void set(int k, int m, const ProjectivePoint& p) {
    points[idx(k, m)] = p;
    status[idx(k, m)] = SiteStatus::Regular;
  }
  void mark_collapsed(int k, int m) { status[idx(k, m)] = SiteStatus::Collapsed; }
  void mark_unset(int k, int m) { status[idx(k, m)] = SiteStatus::Unset; }
};

// Closed periodic polygon in P^1 with a base index.  Consecutive points
// (cyclically) must be distinct; spectral extraction additionally wants all
// points pairwise distinct, which callers check where required.
struct DiscreteCurve {
  std::vector<ProjectivePoint> points;

  DiscreteCurve() = default;
  explicit DiscreteCurve(std::vector<ProjectivePoint> pts) : points(std::move(pts)) {
    const int n = static_cast<int>(points.size());
    if (n < 4)
      throw Error(Errc::invalid_params, "discrete curve needs at least 4 points");
    for (int i = 0; i < n; ++i)
      if (proj_equal(points[i], points[(i + 1) % n]))
        throw Error(Errc::degenerate_frame, "consecutive curve points coincide");
  }
  int n() const { return static_cast<int>(points.size()); }
  const ProjectivePoint& operator[](int i) const {
    int n_ = n();
    return points[((i % n_) + n_) % n_];
  }
};

struct AuditReport {
  double max_abs_deviation = 0.0;
  int worst_k = 0, worst_m = 0;
  int checked = 0;
  int indeterminate = 0;
  int infinite = 0;   // quads whose cross-ratio blew up (counted as failures)
  int skipped = 0;    // quads touching non-Regular sites
  bool pass(double tol = kAuditTol) const {
    return infinite == 0 && (checked == 0 || max_abs_deviation <= tol);
  }
};

// Deviation |cr - q| over every quadrilateral whose four corners are
// Regular.  Indeterminate quads (coincident vertices in both determinant
// pairs) are tallied, not failed.
inline AuditReport audit_cross_ratios(const DcmLattice& L) {
  AuditReport rep;
  for (int m = L.win.m0; m < L.win.m1; ++m) {
    for (int k = L.win.k0; k < L.win.k1; ++k) {
      bool regular = L.status_at(k, m) == SiteStatus::Regular &&
                     L.status_at(k + 1, m) == SiteStatus::Regular &&
                     L.status_at(k, m + 1) == SiteStatus::Regular &&
                     L.status_at(k + 1, m + 1) == SiteStatus::Regular;
      if (!regular) {
        ++rep.skipped;
        continue;
      }
      // A quad with two numerically coincident corners carries no measurable
      // cross-ratio (one determinant factor is pure rounding noise), so it is
      // reported indeterminate rather than failed -- the same convention as
      // collapsed sites.
      const ProjectivePoint* P[4] = {&L.at(k, m + 1), &L.at(k, m), &L.at(k + 1, m),
                                     &L.at(k + 1, m + 1)};
      bool coincident = false;
      for (int i = 0; i < 4 && !coincident; ++i)
        for (int j = i + 1; j < 4; ++j)
          if (proj_equal(*P[i], *P[j], kCollapseTol)) {
            coincident = true;
            break;
          }
      if (coincident) {
        ++rep.indeterminate;
        continue;
      }
      CrossRatioResult cr =
          cross_ratio(L.at(k, m + 1), L.at(k, m), L.at(k + 1, m), L.at(k + 1, m + 1));
      if (cr.kind == CrossRatioKind::Indeterminate) {
        ++rep.indeterminate;
        continue;
      }
      if (cr.kind == CrossRatioKind::Infinite) {
        ++rep.infinite;
        continue;
      }
      ++rep.checked;
      double dev = std::abs(cr.value - L.q);
      if (dev > rep.max_abs_deviation) {
        rep.max_abs_deviation = dev;
        rep.worst_k = k;
        rep.worst_m = m;
      }
    }
  }
  return rep;
}

// Sites whose four neighbours all coincide with the centre (within tol) are
// the genuine singularities of the map; they are flagged, never fatal.
// Only interior sites (all four neighbours inside the window) are assessed.
inline std::vector<std::pair<int, int>> detect_collapse(DcmLattice& L,
                                                        double tol = kCollapseTol) {
  std::vector<std::pair<int, int>> hits;
  for (int m = L.win.m0 + 1; m < L.win.m1; ++m) {
    for (int k = L.win.k0 + 1; k < L.win.k1; ++k) {
      if (L.status_at(k, m) == SiteStatus::Unset) continue;
      bool all = true;
      const ProjectivePoint& z = L.at(k, m);
      for (auto [dk, dm] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        if (L.status_at(k + dk, m + dm) == SiteStatus::Unset ||
            !proj_equal(z, L.at(k + dk, m + dm), tol)) {
          all = false;
          break;
        }
      }
      if (all) {
        L.mark_collapsed(k, m);
        hits.emplace_back(k, m);
      }
    }
  }
  return hits;
}

// z_{k,m} = k*alpha + m*beta: the parallelogram tiling.  q = beta^2/alpha^2.
inline DcmLattice vacuum_lattice(Cplx alpha, Cplx beta, Window w) {
  if (std::abs(alpha) == 0.0 || std::abs(beta) == 0.0)
    throw Error(Errc::invalid_params, "vacuum needs nonzero alpha, beta");
  Cplx q = (beta * beta) / (alpha * alpha);
  if (std::abs(q) == 0.0 || std::abs(q - Cplx(1.0)) == 0.0)
    throw Error(Errc::invalid_params, "vacuum cross-ratio must avoid {0,1}");
  DcmLattice L(q, w);
  for (int m = w.m0; m <= w.m1; ++m)
    for (int k = w.k0; k <= w.k1; ++k)
      L.set(k, m, ProjectivePoint::affine(Cplx(k) * alpha + Cplx(m) * beta));
  return L;
}

struct EvolvedRow {
  std::vector<ProjectivePoint> points;
  double closure_defect = 0.0;  // meaningful for periodic rows only
};

// One evolution step: given a row and the seed value above its base point,
// fill the next row left to right through the quad condition
// cross_ratio(new_k, row_k, row_{k+1}, new_{k+1}) = q.  For a periodic row
// the wrap-around edge gives the closure defect; a seed on an eigenline of
// the q-holonomy closes up.  The same step serves both m-directions: which
// row "next" is depends only on the seed choice.
inline EvolvedRow evolve_row(const std::vector<ProjectivePoint>& row, Cplx q,
                             const ProjectivePoint& seed, bool periodic = true) {
  const int n = static_cast<int>(row.size());
  if (n < 2) throw Error(Errc::invalid_params, "row too short to evolve");
  if (std::abs(q) == 0.0 || std::abs(q - Cplx(1.0)) == 0.0)
    throw Error(Errc::invalid_params, "cross-ratio must avoid {0,1}");
  if (proj_equal(seed, row[0]))
    throw Error(Errc::degenerate_frame, "seed coincides with the row base point");
  EvolvedRow out;
  out.points.reserve(n);
  out.points.push_back(seed);
  const int steps = periodic ? n : n - 1;
  for (int k = 0; k < steps; ++k) {
    const ProjectivePoint& zk = row[k % n];
    const ProjectivePoint& zk1 = row[(k + 1) % n];
    Matrix2 T = edge_transfer(zk, zk1, q);
    ProjectivePoint next = T.apply(out.points.back());
    if (k + 1 < n)
      out.points.push_back(next);
    else
      out.closure_defect = proj_distance(next, seed);
  }
  return out;
}

// Apply a Moebius matrix to every set site.
inline DcmLattice mobius_apply_lattice(const Matrix2& g, const DcmLattice& L) {
  DcmLattice out = L;
  for (int m = L.win.m0; m <= L.win.m1; ++m)
    for (int k = L.win.k0; k <= L.win.k1; ++k)
      if (L.has_point(k, m)) out.points[out.idx(k, m)] = g.apply(L.at(k, m));
  return out;
}

// Choose a Moebius chart in which every set site is comfortably finite.
// Returns the identity when the point at infinity already clears all sites
// by `margin` (chordal distance, so margin 1e-4 means |z| up to ~1e4);
// otherwise sends the spherical point farthest from the lattice to infinity.
// Cross-ratios are chart-independent, so the transformed lattice is the
// same map seen in different affine coordinates.
inline Matrix2 affine_chart(const DcmLattice& L, double margin = 1e-4) {
  std::vector<const ProjectivePoint*> pts;
  for (int m = L.win.m0; m <= L.win.m1; ++m)
    for (int k = L.win.k0; k <= L.win.k1; ++k)
      if (L.has_point(k, m)) pts.push_back(&L.at(k, m));
  auto clearance = [&pts](const ProjectivePoint& w) {
    double d = 1e300;
    for (const ProjectivePoint* p : pts) d = std::min(d, proj_distance(w, *p));
    return d;
  };
  ProjectivePoint best = ProjectivePoint::infinity();
  double best_d = clearance(best);
  if (best_d >= margin) return Matrix2::identity();
  // Spiral sample of the sphere; keep the candidate with the best clearance.
  const int n = 400;
  const double golden = std::acos(-1.0) * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double cz = 1.0 - 2.0 * (i + 0.5) / n;  // height on the unit sphere
    double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    double ph = golden * i;
    // stereographic chart of the sphere point (sz cos ph, sz sin ph, cz)
    ProjectivePoint cand(Cplx(sz * std::cos(ph), sz * std::sin(ph)), Cplx(1.0 - cz));
    double d = clearance(cand);
    if (d > best_d) {
      best_d = d;
      best = cand;
    }
  }
  if (best.is_infinite()) return Matrix2::identity();
  Cplx w = best.affine_value();
  return Matrix2{0.0, 1.0, 1.0, -w};  // z -> 1/(z - w)
}

}  // namespace dcm
