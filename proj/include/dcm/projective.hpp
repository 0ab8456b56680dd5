#pragma once

// Points of the complex projective line, 2x2 matrix actions on them,
// cross-ratios, and the rank-1 projections used to build edge transfer
// matrices.  Everything downstream works with homogeneous coordinates so
// that the point at infinity needs no special cases.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace dcm {

using Cplx = std::complex<double>;

inline constexpr double kProjTol = 1e-9;      // projective equality
inline constexpr double kAuditTol = 1e-8;     // cross-ratio audits
inline constexpr double kPruneRelTol = 1e-11; // Laurent coefficient pruning
inline constexpr double kCollapseTol = 1e-9;  // collapsed-site detection

enum class Errc {
  invalid_params,
  degenerate_frame,
  zero_vector,
  singular_matrix,
  excluded_lambda,
  eigenline_collision,
  not_in_big_cell,
  radius_too_small,
  no_solution,
  nonconvergence,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_params: return "invalid_params";
    case Errc::degenerate_frame: return "degenerate_frame";
    case Errc::zero_vector: return "zero_vector";
    case Errc::singular_matrix: return "singular_matrix";
    case Errc::excluded_lambda: return "excluded_lambda";
    case Errc::eigenline_collision: return "eigenline_collision";
    case Errc::not_in_big_cell: return "not_in_big_cell";
    case Errc::radius_too_small: return "radius_too_small";
    case Errc::no_solution: return "no_solution";
    case Errc::nonconvergence: return "nonconvergence";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

struct Error : std::runtime_error {
  Errc code;
  Error(Errc c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Validation failures (bad user input) vs. numerical failures; the CLI maps
// these to different exit codes.
inline bool is_validation_error(Errc c) {
  return c == Errc::invalid_params || c == Errc::io_error;
}

inline bool cplx_finite(Cplx z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline Cplx ipow(Cplx z, int n) {
  if (n < 0) return Cplx(1.0) / ipow(z, -n);
  Cplx r(1.0);
  while (n > 0) {
    if (n & 1) r *= z;
    z *= z;
    n >>= 1;
  }
  return r;
}

// A point of P^1 held as a homogeneous pair (v0, v1), normalized so the
// component of largest modulus equals exactly 1.  Affine value is v0/v1;
// (1, 0) is the point at infinity.
struct ProjectivePoint {
  Cplx v0{0.0, 0.0};
  Cplx v1{0.0, 0.0};

  ProjectivePoint() = default;

  ProjectivePoint(Cplx a, Cplx b) : v0(a), v1(b) {
    if (!cplx_finite(a) || !cplx_finite(b))
      throw Error(Errc::invalid_params, "non-finite homogeneous coordinates");
    double n0 = std::abs(v0), n1 = std::abs(v1);
    if (n0 == 0.0 && n1 == 0.0)
      throw Error(Errc::zero_vector, "zero vector is not a projective point");
    // The pivot is written as an exact 1 and signed zeros are flushed in the
    // quotient, so normalization is a bit-level fixed point and serialized
    // points reload to identical bits.
    auto canon = [](Cplx z) { return Cplx(z.real() + 0.0, z.imag() + 0.0); };
    if (n0 >= n1) {
      v1 = canon(v1 / v0);
      v0 = Cplx(1.0, 0.0);
    } else {
      v0 = canon(v0 / v1);
      v1 = Cplx(1.0, 0.0);
    }
  }

  static ProjectivePoint affine(Cplx z) { return ProjectivePoint(z, Cplx(1.0, 0.0)); }
  static ProjectivePoint infinity() { return ProjectivePoint(Cplx(1.0, 0.0), Cplx(0.0, 0.0)); }

  bool is_infinite(double tol = 1e-12) const { return std::abs(v1) <= tol; }

  // Affine value; infinite points map to a huge-but-finite sentinel only
  // through explicit callers.  Do not call on (1, 0).
  Cplx affine_value() const { return v0 / v1; }
};

inline Cplx det2(const ProjectivePoint& p, const ProjectivePoint& q) {
  return p.v0 * q.v1 - p.v1 * q.v0;
}

// Scale-free chordal distance; both arguments are normalized so |det2| is
// already comparable across points.
inline double proj_distance(const ProjectivePoint& p, const ProjectivePoint& q) {
  double np = std::hypot(std::abs(p.v0), std::abs(p.v1));
  double nq = std::hypot(std::abs(q.v0), std::abs(q.v1));
  return std::abs(det2(p, q)) / (np * nq);
}

inline bool proj_equal(const ProjectivePoint& p, const ProjectivePoint& q,
                       double tol = kProjTol) {
  return proj_distance(p, q) <= tol;
}

enum class CrossRatioKind { Finite, Infinite, Indeterminate };

struct CrossRatioResult {
  CrossRatioKind kind = CrossRatioKind::Indeterminate;
  Cplx value{0.0, 0.0};
};

// cr(a,b,c,d) = det(a,b) det(c,d) / (det(b,c) det(d,a)).  With affine lifts
// this is ((a-b)(c-d)) / ((b-c)(d-a)), and it extends continuously through
// infinity.
inline CrossRatioResult cross_ratio(const ProjectivePoint& a, const ProjectivePoint& b,
                                    const ProjectivePoint& c, const ProjectivePoint& d) {
  Cplx num = det2(a, b) * det2(c, d);
  Cplx den = det2(b, c) * det2(d, a);
  CrossRatioResult r;
  if (std::abs(den) == 0.0) {
    r.kind = (std::abs(num) == 0.0) ? CrossRatioKind::Indeterminate : CrossRatioKind::Infinite;
    return r;
  }
  r.value = num / den;
  r.kind = cplx_finite(r.value) ? CrossRatioKind::Finite : CrossRatioKind::Infinite;
  return r;
}

struct Matrix2 {
  Cplx a{0.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{0.0, 0.0};

  static Matrix2 identity() { return {Cplx(1.0), Cplx(0.0), Cplx(0.0), Cplx(1.0)}; }

  Matrix2 operator+(const Matrix2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  Matrix2 operator-(const Matrix2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
  Matrix2 operator*(const Matrix2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Matrix2 operator*(Cplx s) const { return {a * s, b * s, c * s, d * s}; }

  Cplx det() const { return a * d - b * c; }
  Cplx trace() const { return a + d; }
  Matrix2 adjugate() const { return {d, -b, -c, a}; }

  double norm_inf() const {
    return std::max(std::max(std::abs(a), std::abs(b)), std::max(std::abs(c), std::abs(d)));
  }

  Matrix2 inverse() const {
    Cplx dt = det();
    if (std::abs(dt) == 0.0)
      throw Error(Errc::singular_matrix, "matrix is singular");
    return adjugate() * (Cplx(1.0) / dt);
  }

  // Image of a projective point; throws if the point spans the kernel.
  ProjectivePoint apply(const ProjectivePoint& p) const {
    Cplx w0 = a * p.v0 + b * p.v1;
    Cplx w1 = c * p.v0 + d * p.v1;
    // Inputs are normalized points, so an output at roundoff scale relative
    // to the matrix means the point is numerically in the kernel.
    double tiny = norm_inf() * 1e-13;
    if (std::max(std::abs(w0), std::abs(w1)) <= tiny)
      throw Error(Errc::zero_vector, "matrix annihilates the point");
    return ProjectivePoint(w0, w1);
  }
};

inline double rel_residual(const Matrix2& x, const Matrix2& y) {
  double s = std::max(x.norm_inf(), y.norm_inf());
  if (s == 0.0) return 0.0;
  return (x - y).norm_inf() / s;
}

// Rank-1 projection with the given kernel and image lines: A^2 = A,
// tr A = 1, A * kernel = 0, A * image = image.
inline Matrix2 projection_matrix(const ProjectivePoint& kernel, const ProjectivePoint& image,
                                 double tol = kProjTol) {
  if (proj_equal(kernel, image, tol))
    throw Error(Errc::degenerate_frame, "projection kernel coincides with image");
  // Row vector w = (k1, -k0) annihilates the kernel.
  Cplx w0 = kernel.v1, w1 = -kernel.v0;
  Cplx s = w0 * image.v0 + w1 * image.v1;
  Cplx inv = Cplx(1.0) / s;
  return {image.v0 * w0 * inv, image.v0 * w1 * inv, image.v1 * w0 * inv, image.v1 * w1 * inv};
}

// Fourth vertex with prescribed cross-ratio: returns d such that
// cross_ratio(a, b, c, d) == q.  Works entirely on lifts:
// d = det(a,b) c + q det(b,c) a.
inline ProjectivePoint solve_fourth_point(const ProjectivePoint& a, const ProjectivePoint& b,
                                          const ProjectivePoint& c, Cplx q) {
  Cplx s = det2(a, b), t = q * det2(b, c);
  Cplx w0 = s * c.v0 + t * a.v0;
  Cplx w1 = s * c.v1 + t * a.v1;
  if (std::max(std::abs(w0), std::abs(w1)) <= 1e-14 * (std::abs(s) + std::abs(t)))
    throw Error(Errc::degenerate_frame, "fourth point construction degenerated");
  return ProjectivePoint(w0, w1);
}

// Transfer matrix of an oriented edge: T(lambda) = I - (1/lambda) A where A
// projects onto [zk1] along [zk].  T(1) is the projection onto [zk1] with
// kernel [zk]; det T = 1 - 1/lambda.
inline Matrix2 edge_transfer(const ProjectivePoint& zk, const ProjectivePoint& zk1,
                             Cplx lambda, double tol = kProjTol) {
  if (std::abs(lambda) == 0.0)
    throw Error(Errc::excluded_lambda, "edge transfer undefined at lambda = 0");
  Matrix2 A = projection_matrix(zk, zk1, tol);
  return Matrix2::identity() - A * (Cplx(1.0) / lambda);
}

// Unique Moebius transformation carrying three distinct source points to
// three distinct target points, as a 2x2 matrix acting on lifts.
inline Matrix2 fit_mobius(const ProjectivePoint src[3], const ProjectivePoint dst[3]) {
  auto basis = [](const ProjectivePoint* p) -> Matrix2 {
    Cplx D = det2(p[0], p[1]);
    if (std::abs(D) < 1e-14)
      throw Error(Errc::degenerate_frame, "mobius fit needs three distinct points");
    // Solve c0 p0 + c1 p1 = p2.
    Cplx c0 = det2(p[2], p[1]) / D;
    Cplx c1 = det2(p[0], p[2]) / D;
    if (std::abs(c0) < 1e-14 || std::abs(c1) < 1e-14)
      throw Error(Errc::degenerate_frame, "mobius fit needs three distinct points");
    return {c0 * p[0].v0, c1 * p[1].v0, c0 * p[0].v1, c1 * p[1].v1};
  };
  Matrix2 A = basis(src), B = basis(dst);
  return B * A.inverse();
}

}  // namespace dcm
