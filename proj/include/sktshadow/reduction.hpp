#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "sktshadow/basis.hpp"
#include "sktshadow/errors.hpp"
#include "sktshadow/field.hpp"
#include "sktshadow/params.hpp"

namespace sktshadow {

/// Limiting reduction data for one sign of the branch pair.
struct ReducedRoot {
  int j = 0;
  int sign = +1;              // +1 or -1
  double mu0 = 0.0;           // root of h_j(mu) = A/B on the sign's side
  double s0 = 0.0;            // leading amplitude, eq-(sexp) value
  double I1 = 0.0;            // int (1 + mu0 phi_j)^{-1}
  double I2 = 0.0;            // int (1 + mu0 phi_j)^{-2}
  double I3 = 0.0;            // int (1 + mu0 phi_j)^{-3}
  double det_value = 0.0;     // -(g1)_mu (g2)_s at the root
  double lower_bound = 0.0;   // A lambda^2 (1 - B/A) I2 / (d1 |Omega|)
  double c0 = 0.0;            // C0 constant of the eigenvalue reduction
  std::array<double, 3> ineq_margin{};  // strict margins of the three inequalities
};

namespace detail {

/// I_k(mu) = int (1 + mu phi_j)^{-k}, adaptive midpoint quadrature on the
/// analytic eigenfunction (the integrand concentrates near the extrema of
/// phi_j as mu approaches the bracket endpoints).
inline double ik_integral(int k, double mu, const EigenMode& mode, double rel_tol = 1e-11) {
  return integrate_adaptive(
      mode.dom.length(), mode.dom.n(),
      [&](double x) { return std::pow(1.0 + mu * mode.phi_at(x), -k); }, rel_tol, 10);
}

inline void require_in_bracket(double mu, const EigenMode& mode) {
  if (!(mu > mode.m_j && mu < mode.M_j))
    throw OutOfBracket("mu outside (m_j, M_j)");
}

}  // namespace detail

/// h_j(mu) = int (1+mu phi_j)^{-2} / int (1+mu phi_j)^{-1}.
inline double hj(double mu, const EigenMode& mode) {
  detail::require_in_bracket(mu, mode);
  return detail::ik_integral(2, mu, mode) / detail::ik_integral(1, mu, mode);
}

/// Roots of h_j(mu) = A/B, one on each side of zero. Bisection on the
/// brackets [m_j + off, -1e-8] and [1e-8, M_j - off] (off = 1e-6 of the
/// bracket width), then secant polish to |h_j - A/B| <= 1e-12 A/B.
inline std::pair<double, double> solve_mu(const Params& p, const EigenMode& mode) {
  if (!(p.A() > p.B())) throw RatioNotAboveOne("solve_mu requires A > B");
  const double target = p.A() / p.B();
  const double width = mode.M_j - mode.m_j;
  const double off = 1e-6 * width;

  auto solve_side = [&](double lo, double hi) {
    // h - target changes sign from lo (h ~ 1 < target) to hi.
    auto g = [&](double mu) { return hj(mu, mode) - target; };
    double glo = g(lo), ghi = g(hi);
    if (glo * ghi > 0) throw BracketFailure("h_j does not cross A/B inside the bracket");
    double a = lo, b = hi, ga = glo, gb = ghi;
    while (std::abs(b - a) > 1e-12 * width) {
      const double m = 0.5 * (a + b);
      const double gm = g(m);
      if (gm == 0.0) return m;
      if (ga * gm < 0) {
        b = m;
        gb = gm;
      } else {
        a = m;
        ga = gm;
      }
    }
    double x0 = a, x1 = b, g0 = ga, g1 = gb;
    for (int it = 0; it < 8 && std::abs(g1) > 1e-12 * target; ++it) {
      if (g1 == g0) break;
      const double x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
      if (!(x2 > mode.m_j && x2 < mode.M_j)) break;
      x0 = x1;
      g0 = g1;
      x1 = x2;
      g1 = g(x1);
    }
    return std::abs(g1) < std::abs(g0) ? x1 : x0;
  };

  const double mu_plus = solve_side(1e-8, mode.M_j - off);
  const double mu_minus = solve_side(mode.m_j + off, -1e-8);
  return {mu_minus, mu_plus};
}

/// Leading amplitude s0 of the branch, the eq-(sexp) two-term formula.
inline double s_leading(const Params& p, const EigenMode& mode, double mu0) {
  detail::require_in_bracket(mu0, mode);
  if (!(p.A() > p.B())) throw RatioNotAboveOne("s_leading requires A > B");
  const double om = mode.dom.length();
  const double lam = mode.lambda;
  const double I1 = detail::ik_integral(1, mu0, mode);
  const double pref = p.a2 * p.a2 * (p.a2 * p.beta + p.b2) / (p.b2 * p.b2 * mu0 * mu0);
  const double s = pref * p.a1 / (p.d1 * lam * lam) * (om - (p.B() / p.A()) * I1) +
                   pref / lam * (I1 - om);
  if (!(s > 0)) throw NonPositiveAmplitude("s0 <= 0; inconsistent reduction inputs");
  return s;
}

/// Scalar reduced equations g1^0(mu) and g2^0(s, mu), evaluated by projecting
/// the limit kinetics F0 on the adjoint kernel (no removable 1/mu forms).
inline std::pair<double, double> g_scalar(double s, double mu, const Params& p,
                                          const EigenMode& mode) {
  detail::require_in_bracket(mu, mode);
  const double om = mode.dom.length();
  const double lam = mode.lambda;
  const double slope = p.kernel_slope();
  auto f10 = [&](double x) {
    const double ell = 1.0 + mu * mode.phi_at(x);
    const double u0 = p.a2 / (p.b2 * ell);
    return u0 * (p.a1 - p.b1 * u0) / p.d1;
  };
  auto f20 = [&](double x) {
    const double ell = 1.0 + mu * mode.phi_at(x);
    return s * lam * lam * p.b2 / (p.a2 * p.a2) * mu * mode.phi_at(x) +
           lam * (p.a2 * p.beta + p.b2) / (p.b2 * ell);
  };
  const double g1 =
      integrate_adaptive(om, mode.dom.n(), f10, 1e-11, 10) / om;
  const double g2 = integrate_adaptive(
      om, mode.dom.n(),
      [&](double x) { return (-slope * f10(x) + f20(x)) * mode.phi_at(x); }, 1e-11, 10);
  return {g1, g2};
}

namespace detail {

inline double det_from_integrals(const Params& p, const EigenMode& mode, double I1, double I2,
                                 double I3) {
  const double om = mode.dom.length();
  const double r = p.B() / p.A();
  return p.A() * mode.lambda * mode.lambda / (p.d1 * om) *
         (I1 - (1.0 + 2.0 * r) * I2 + 2.0 * r * I3);
}

inline double lower_bound_from_integrals(const Params& p, const EigenMode& mode, double I2) {
  const double om = mode.dom.length();
  return p.A() * mode.lambda * mode.lambda * (1.0 - p.B() / p.A()) * I2 / (p.d1 * om);
}

inline double c0_from_root(const Params& p, const EigenMode& mode, double s0, double I2,
                           double I3) {
  const double om = mode.dom.length();
  const double r = p.B() / p.A();
  const double bracket = (r + 1.0) * I2 - 2.0 * r * I3;
  return p.a2 * p.a2 * p.a1 / (p.d1 * p.b2 * p.b2 * s0 * om) * bracket;
}

}  // namespace detail

/// Full limiting reduction for one sign: root, amplitude, diagnostic
/// integrals, non-degeneracy data, C0 and the Proposition-3.3 margins.
inline ReducedRoot reduce(const Params& p, const EigenMode& mode, int sign) {
  p.validate();
  const auto [mu_minus, mu_plus] = solve_mu(p, mode);
  ReducedRoot root;
  root.j = mode.j;
  root.sign = sign >= 0 ? +1 : -1;
  root.mu0 = root.sign > 0 ? mu_plus : mu_minus;
  root.I1 = detail::ik_integral(1, root.mu0, mode);
  root.I2 = detail::ik_integral(2, root.mu0, mode);
  root.I3 = detail::ik_integral(3, root.mu0, mode);
  root.s0 = s_leading(p, mode, root.mu0);
  root.det_value = detail::det_from_integrals(p, mode, root.I1, root.I2, root.I3);
  root.lower_bound = detail::lower_bound_from_integrals(p, mode, root.I2);
  root.c0 = detail::c0_from_root(p, mode, root.s0, root.I2, root.I3);
  const double om = mode.dom.length();
  root.ineq_margin[0] = root.I1 - om;
  root.ineq_margin[1] = (p.A() / p.B()) * om - root.I1;
  root.ineq_margin[2] = root.I3 - (p.A() / p.B()) * root.I2;
  return root;
}

/// Non-degeneracy determinant -(g1)_mu (g2)_s with the analytic
/// differentiated-under-the-integral form, plus its proven lower bound.
inline std::pair<double, double> nondegeneracy(const ReducedRoot& root, const Params& p,
                                               const EigenMode& mode) {
  const double det = detail::det_from_integrals(p, mode, root.I1, root.I2, root.I3);
  const double lb = detail::lower_bound_from_integrals(p, mode, root.I2);
  if (!(det > 0)) throw DegenerateRoot("non-degeneracy determinant <= 0");
  if (det < lb * (1.0 - 1e-8))
    throw DegenerateRoot("determinant below its analytic lower bound");
  return {det, lb};
}

/// Leading-order branch data: the kernel profile Phi0, the first correction
/// Phi*_0 = -L^{-1}(I-P) F0(s0, mu0), and the physical limits u0, eps*w.
struct Ansatz {
  FieldPair Phi0;
  FieldPair PhiStar0;
  Field u0;
  Field w0_scaled;
};

inline Ansatz build_ansatz(const ReducedRoot& root, const Params& p, const EigenMode& mode) {
  const Domain1D& dom = mode.dom;
  const int n = dom.n();
  const double lam = mode.lambda;
  std::vector<double> ell(n), phi0(n), psi0(n), f10(n), f20(n), u0(n), w0(n);
  for (int k = 0; k < n; ++k) {
    ell[k] = 1.0 + root.mu0 * mode.phi.nodal()[k];
    if (!(ell[k] > 0)) throw PositivityLoss(k);
    phi0[k] = root.s0;
    psi0[k] = root.s0 * (p.beta + (p.b2 / p.a2) * ell[k]);
    const double uk = p.a2 / (p.b2 * ell[k]);
    f10[k] = uk * (p.a1 - p.b1 * uk) / p.d1;
    f20[k] = root.s0 * lam * lam * p.b2 / (p.a2 * p.a2) * root.mu0 * mode.phi.nodal()[k] +
             lam * (p.a2 * p.beta + p.b2) / (p.b2 * ell[k]);
    u0[k] = uk;
    w0[k] = (p.b2 / p.a2) * root.s0 * ell[k];
  }
  FieldPair F0 = make_pair_nodal(dom, std::move(f10), std::move(f20));
  const FieldPair range_part = project_P(F0, mode, p).remainder;
  FieldPair star = solve_L_X0(range_part, mode, p);
  std::vector<double> sp(star.phi.coeff()), ss(star.psi.coeff());
  for (auto& v : sp) v = -v;
  for (auto& v : ss) v = -v;
  return Ansatz{make_pair_nodal(dom, std::move(phi0), std::move(psi0)),
                make_pair_coeff(dom, std::move(sp), std::move(ss)),
                Field::from_nodal(dom, std::move(u0)), Field::from_nodal(dom, std::move(w0))};
}

}  // namespace sktshadow
