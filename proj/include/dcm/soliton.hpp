#pragma once

// Closed-form DCM generators from rational nodal spectral curves: the
// discrete exponential, one- and two-soliton maps, and period solvers.
// Parameters are zeta-plane positions: zeta(S) = a, zeta(Q) = b,
// zeta(O) = eps (possibly infinite), zeta(P_inf) = y, nodes at +-x_j.

#include <dcm/lattice.hpp>

#include <numbers>

namespace dcm {

struct NodalParams {
  Cplx a{0.0, 0.0}, b{0.0, 0.0}, y{0.0, 0.0};
  std::optional<Cplx> eps;  // nullopt = infinity
  std::vector<Cplx> nodes;  // x_j, at most 2
  std::vector<Cplx> phases; // c_j, same count
};

inline void validate_params(const NodalParams& p) {
  auto finite_nonzero = [](Cplx v) { return cplx_finite(v) && std::abs(v) > 0.0; };
  if (!finite_nonzero(p.a) || !finite_nonzero(p.b) || !finite_nonzero(p.y))
    throw Error(Errc::invalid_params, "a, b, y must be finite and nonzero");
  if (p.eps && !finite_nonzero(*p.eps))
    throw Error(Errc::invalid_params, "finite eps must be nonzero");
  if (p.nodes.size() > 2)
    throw Error(Errc::invalid_params, "at most two nodes supported");
  if (p.nodes.size() != p.phases.size())
    throw Error(Errc::invalid_params, "each node needs a phase constant");
  std::vector<Cplx> vals{p.a, p.b, p.y};
  if (p.eps) vals.push_back(*p.eps);
  for (const Cplx& x : p.nodes) {
    if (!finite_nonzero(x))
      throw Error(Errc::invalid_params, "nodes must be finite and nonzero");
    vals.push_back(x);
  }
  for (size_t i = 0; i < vals.size(); ++i)
    for (size_t j = i + 1; j < vals.size(); ++j)
      if (std::abs(vals[i] - vals[j]) < 1e-12 || std::abs(vals[i] + vals[j]) < 1e-12)
        throw Error(Errc::invalid_params, "parameter zeta-values must be distinct up to sign");
}

// lambda(zeta) = (a^2-y^2)(zeta^2-eps^2) / ((zeta^2-y^2)(a^2-eps^2));
// at eps = infinity the (zeta^2-eps^2)/(a^2-eps^2) factor tends to 1.
// Normalized so lambda(a) = 1, lambda(eps) = 0, lambda(+-y) = infinity.
inline Cplx lambda_of(const NodalParams& p, Cplx zeta) {
  Cplx num = p.a * p.a - p.y * p.y;
  Cplx den = zeta * zeta - p.y * p.y;
  if (std::abs(den) == 0.0)
    throw Error(Errc::excluded_lambda, "lambda has a pole at zeta = +-y");
  Cplx r = num / den;
  if (p.eps) {
    Cplx e2 = *p.eps * *p.eps;
    r *= (zeta * zeta - e2) / (p.a * p.a - e2);
  }
  return r;
}

inline Cplx soliton_q(const NodalParams& p) { return lambda_of(p, p.b); }

// h_{k,m}(t) = ((a-t)/(a+t))^k ((b-t)/(b+t))^m, times the parity factor
// (eps+t)/(eps-t) when k+m is odd and eps is finite.  With eps = infinity
// this is a homomorphism Z^2 -> C^* (the discrete exponential data).
inline Cplx h_km(const NodalParams& p, Cplx t, int k, int m) {
  Cplx A = (p.a - t) / (p.a + t);
  Cplx B = (p.b - t) / (p.b + t);
  Cplx r = ipow(A, k) * ipow(B, m);
  if (p.eps && ((k + m) % 2 != 0)) r *= (*p.eps + t) / (*p.eps - t);
  return r;
}

namespace detail {

template <typename F>
DcmLattice fill_lattice(Cplx q, Window w, F&& site) {
  DcmLattice L(q, w);
  for (int m = w.m0; m <= w.m1; ++m) {
    for (int k = w.k0; k <= w.k1; ++k) {
      auto [num, den] = site(k, m);
      double scale = std::max(std::abs(num), std::abs(den));
      if (scale <= 1e-14) {
        L.mark_collapsed(k, m);  // theta-divisor hit: value indeterminate
        continue;
      }
      L.set(k, m, ProjectivePoint(num, den));
    }
  }
  return L;
}

// k-period from the root-of-unity condition on (a+y)/(a-y).
inline std::optional<int> k_period(const NodalParams& p, double tol = 1e-9) {
  Cplx r = (p.a + p.y) / (p.a - p.y);
  if (std::abs(std::abs(r) - 1.0) > tol) return std::nullopt;
  Cplx pw(1.0);
  for (int n = 1; n <= 64; ++n) {
    pw *= r;
    if (std::abs(pw - Cplx(1.0)) <= tol * n) {
      // Finite eps forbids odd periods (the parity factor breaks closure);
      // the doubled period then closes.
      if (p.eps && n % 2 != 0) continue;
      return n;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// z_{k,m} = h_{k,m}(y).
inline DcmLattice gen_exponential(const NodalParams& p, Window w) {
  validate_params(p);
  if (!p.nodes.empty())
    throw Error(Errc::invalid_params, "exponential generator takes no nodes");
  DcmLattice L = detail::fill_lattice(soliton_q(p), w, [&](int k, int m) {
    return std::pair<Cplx, Cplx>(h_km(p, p.y, k, m), Cplx(1.0));
  });
  L.period_n = detail::k_period(p);
  return L;
}

// z = h(y) (w h(x) - E) / (w^{-1} h(x) - E), w = (y-x)/(y+x), E = e^{2 pi i c}.
inline DcmLattice gen_one_soliton(const NodalParams& p, Window w) {
  validate_params(p);
  if (p.nodes.size() != 1)
    throw Error(Errc::invalid_params, "one-soliton generator needs exactly one node");
  const Cplx x = p.nodes[0];
  const Cplx E = std::exp(Cplx(0.0, 2.0 * std::numbers::pi) * p.phases[0]);
  const Cplx wr = (p.y - x) / (p.y + x);
  DcmLattice L = detail::fill_lattice(soliton_q(p), w, [&](int k, int m) {
    Cplx hy = h_km(p, p.y, k, m);
    Cplx hx = h_km(p, x, k, m);
    return std::pair<Cplx, Cplx>(hy * (wr * hx - E), hx / wr - E);
  });
  L.period_n = detail::k_period(p);
  return L;
}

// Two-node tau ratio: z = h(y) F(W1m, W2m) / F(W1p, W2p), where
// Wj(-/+) = ((y -/+ xj)/(y +/- xj)) h(xj) e^{-2 pi i cj} and
// F(X,Y) = det [[X+1, (X-1) x1], [Y+1, (Y-1) x2]].
inline DcmLattice gen_two_soliton(const NodalParams& p, Window w) {
  validate_params(p);
  if (p.nodes.size() != 2)
    throw Error(Errc::invalid_params, "two-soliton generator needs exactly two nodes");
  const Cplx x1 = p.nodes[0], x2 = p.nodes[1];
  const Cplx E1 = std::exp(Cplx(0.0, -2.0 * std::numbers::pi) * p.phases[0]);
  const Cplx E2 = std::exp(Cplx(0.0, -2.0 * std::numbers::pi) * p.phases[1]);
  auto F = [&](Cplx X, Cplx Y) {
    return (X + Cplx(1.0)) * (Y - Cplx(1.0)) * x2 - (X - Cplx(1.0)) * (Y + Cplx(1.0)) * x1;
  };
  DcmLattice L = detail::fill_lattice(soliton_q(p), w, [&](int k, int m) {
    Cplx hy = h_km(p, p.y, k, m);
    Cplx h1 = h_km(p, x1, k, m) * E1;
    Cplx h2 = h_km(p, x2, k, m) * E2;
    Cplx w1 = (p.y - x1) / (p.y + x1);
    Cplx w2 = (p.y - x2) / (p.y + x2);
    return std::pair<Cplx, Cplx>(hy * F(w1 * h1, w2 * h2), F(h1 / w1, h2 / w2));
  });
  L.period_n = detail::k_period(p);
  return L;
}

inline DcmLattice generate(const NodalParams& p, Window w) {
  switch (p.nodes.size()) {
    case 0: return gen_exponential(p, w);
    case 1: return gen_one_soliton(p, w);
    default: return gen_two_soliton(p, w);
  }
}

struct SolverResult {
  NodalParams params;
  Cplx b_other{0.0, 0.0};  // the second root of lambda(b) = q: the Q~ choice,
                           // which reverses the m-direction
};

// Construct parameters whose generated lattice is k-periodic with period n:
// (a+y)/(a-y) and each (a+x_j)/(a-x_j) are set to distinct n-th roots of
// unity e^{2 pi i r/n}, r avoiding 0 and n/2 (those degenerate y or x to 0
// or infinity) and avoiding +-collisions.  Minimal periods: 4 plain, 5 with
// one node, 7 with two.  When q_target is given, b solves lambda(b) = q
// (linear in b^2; both square roots returned).
inline SolverResult periodicity_solver(int n, std::optional<Cplx> q_target,
                                       int num_nodes, std::optional<Cplx> eps) {
  if (num_nodes < 0 || num_nodes > 2)
    throw Error(Errc::invalid_params, "node count must be 0, 1, or 2");
  const int min_n = num_nodes == 0 ? 4 : (num_nodes == 1 ? 5 : 7);
  if (n < min_n)
    throw Error(Errc::no_solution, "period below the minimum for this node count");
  if (eps && n % 2 != 0)
    throw Error(Errc::no_solution, "finite eps requires an even period");

  auto zeta_from_r = [&](int r) {
    Cplx root = std::exp(Cplx(0.0, 2.0 * std::numbers::pi * r / n));
    return (root - Cplx(1.0)) / (root + Cplx(1.0));  // a = 1
  };
  std::vector<int> rs;
  int next = 1;
  while (static_cast<int>(rs.size()) < 1 + num_nodes) {
    if (next >= n) throw Error(Errc::no_solution, "not enough admissible roots of unity");
    bool ok = (2 * next != n);
    for (int r : rs)
      if (next == r || next + r == n) ok = false;  // +- collisions give x_i = +-x_j
    if (ok) rs.push_back(next);
    ++next;
  }

  NodalParams p;
  p.a = Cplx(1.0);
  p.eps = eps;
  p.y = zeta_from_r(rs[0]);
  for (int j = 0; j < num_nodes; ++j) {
    p.nodes.push_back(zeta_from_r(rs[j + 1]));
    p.phases.push_back(Cplx(0.11 + 0.13 * j, 0.0));
  }

  SolverResult out;
  if (q_target) {
    Cplx q = *q_target;
    if (std::abs(q) == 0.0 || std::abs(q - Cplx(1.0)) == 0.0 || !cplx_finite(q))
      throw Error(Errc::invalid_params, "target cross-ratio must avoid {0,1,inf}");
    Cplx a2 = p.a * p.a, y2 = p.y * p.y;
    Cplx b2;
    if (eps) {
      Cplx e2 = *eps * *eps;
      Cplx den = q * (a2 - e2) - (a2 - y2);
      if (std::abs(den) < 1e-14)
        throw Error(Errc::no_solution, "cross-ratio equation degenerates for this eps");
      b2 = (q * y2 * (a2 - e2) - e2 * (a2 - y2)) / den;
    } else {
      b2 = y2 + (a2 - y2) / q;
    }
    p.b = std::sqrt(b2);
  } else {
    p.b = Cplx(0.37, 0.21);
  }
  out.b_other = -p.b;
  out.params = p;
  validate_params(p);
  Cplx q_check = soliton_q(p);
  if (std::abs(q_check) < 1e-12 || std::abs(q_check - Cplx(1.0)) < 1e-12)
    throw Error(Errc::no_solution, "derived cross-ratio degenerate");
  if (q_target && std::abs(q_check - *q_target) > 1e-10 * std::max(1.0, std::abs(*q_target)))
    throw Error(Errc::no_solution, "cross-ratio equation not satisfied");
  return out;
}

}  // namespace dcm
