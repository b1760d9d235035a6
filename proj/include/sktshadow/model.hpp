#pragma once

#include <cmath>

#include "sktshadow/errors.hpp"
#include "sktshadow/params.hpp"

namespace sktshadow {

/// Pointwise image of the change of variables: u and w_tilde = eps*w as
/// functions of (phi, psi).
struct HPair {
  double u;
  double w_tilde;
};

/// Exact first-order increments rho_i = (h_ie - h_i0)/eps, evaluated in
/// cancellation-free form.
struct Increments {
  double rho1;
  double rho2;
};

/// Reaction pair (f1, f2) of the transformed stationary system.
struct Kinetics {
  double f1;
  double f2;
};

/// Competition remainders (r1, r2) multiplying eta = 1/alpha.
struct Remainders {
  double r1;
  double r2;
};

/// A 2x2 derivative block with respect to (phi, psi).
struct Deriv2x2 {
  double a_phi, a_psi;  // first component
  double b_phi, b_psi;  // second component
};

namespace detail {

struct HCore {
  double d;    // psi - beta*phi
  double s;    // sqrt((d+eps)^2 + 4 eps beta phi)
  double den;  // d + eps + s  (> 0 inside the cone)
  double dm;   // d - eps + s, computed without cancellation
};

inline HCore h_core(double phi, double psi, double eps, double beta) {
  HCore c;
  c.d = psi - beta * phi;
  const double arg = (c.d + eps) * (c.d + eps) + 4.0 * eps * beta * phi;
  if (arg < 0.0) throw NonPositiveDenominator("negative square-root argument");
  c.s = std::sqrt(arg);
  c.den = c.d + eps + c.s;
  if (c.den <= 0.0) throw NonPositiveDenominator("psi - beta*phi + eps + sqrt(...) <= 0");
  // (d - eps + s)(s + eps - d) = 4 eps (d + beta phi) = 4 eps psi
  c.dm = (c.d >= eps) ? (c.d - eps + c.s) : 4.0 * eps * psi / (c.s + eps - c.d);
  return c;
}

}  // namespace detail

/// u = h1e(phi,psi), w_tilde = h2e(phi,psi): closed inverse of
/// phi = (eps + w_tilde) u, psi = (1 + beta u) w_tilde.
inline HPair h_eps(double phi, double psi, const EpsilonContext& ctx, const Params& p) {
  const auto c = detail::h_core(phi, psi, ctx.eps, p.beta);
  return {2.0 * phi / c.den, 0.5 * c.dm};
}

/// rho1 = (h1e - h10)/eps, rho2 = (h2e - h20)/eps as exact algebraic
/// identities; no truncation, no 1/eps cancellation. Requires D > 0.
inline Increments stable_increments(double phi, double psi, double eps, double beta) {
  const double d = psi - beta * phi;
  if (d <= 0.0) throw NonPositiveDenominator("psi - beta*phi <= 0");
  const auto c = detail::h_core(phi, psi, eps, beta);
  const double rho1 = -4.0 * phi * psi / (d * c.den * c.dm);
  const double rho2 = 2.0 * beta * phi / (c.s + d + eps);
  return {rho1, rho2};
}

/// f1 = h1e (a1 - b1 h1e)/d1 and f2 via the compensated expansion
///
///   f2 = lambda/(a2 (a2 - eps lambda)) * { a2 [rho2 G0 - b2 h20 rho1]
///        + lambda h20 G0 - eps a2 b2 rho1 rho2 },   G0 = a2 - b2 h10,
///
/// algebraically identical to the 1/eps difference quotient but exact at
/// eps = 0, where it returns the limit kinetics f2^0.
inline Kinetics nonlinearity(double phi, double psi, const EpsilonContext& ctx, const Params& p) {
  if (!(ctx.d2 > 0.0)) throw ContextInvalid("d2 <= 0");
  const double eps = ctx.eps, lam = ctx.lambda_j;
  const auto h = h_eps(phi, psi, ctx, p);
  const double f1 = h.u * (p.a1 - p.b1 * h.u) / p.d1;

  const double d = psi - p.beta * phi;
  if (d <= 0.0) throw NonPositiveDenominator("psi - beta*phi <= 0");
  const auto inc = stable_increments(phi, psi, eps, p.beta);
  const double h10 = phi / d;
  const double h20 = d;
  const double g0 = p.a2 - p.b2 * h10;
  const double kap = lam / (p.a2 * (p.a2 - eps * lam));
  const double f2 = kap * (p.a2 * (inc.rho2 * g0 - p.b2 * h20 * inc.rho1) + lam * h20 * g0 -
                           eps * p.a2 * p.b2 * inc.rho1 * inc.rho2);
  return {f1, f2};
}

/// r1 = eps c1 h1e h2e / d1, r2 = c2 h2e^2 lambda_j / (eps (a2 - eps lambda_j)).
inline Remainders perturbation_terms(double phi, double psi, const EpsilonContext& ctx,
                                     const Params& p) {
  if (ctx.eps <= 0.0) throw EpsilonZero("perturbation_terms needs eps > 0");
  const auto h = h_eps(phi, psi, ctx, p);
  const double r1 = ctx.eps * p.c1 * h.u * h.w_tilde / p.d1;
  const double r2 = p.c2 * h.w_tilde * h.w_tilde * ctx.lambda_j /
                    (ctx.eps * (p.a2 - ctx.eps * ctx.lambda_j));
  return {r1, r2};
}

/// Analytic partial derivatives of (h1e, h2e).
inline Deriv2x2 d_h_eps(double phi, double psi, const EpsilonContext& ctx, const Params& p) {
  const double eps = ctx.eps, beta = p.beta;
  const auto c = detail::h_core(phi, psi, eps, beta);
  if (c.s <= 0.0) throw NonPositiveDenominator("degenerate state");
  const double s_phi = beta * (eps - c.d) / c.s;
  const double s_psi = (c.d + eps) / c.s;
  Deriv2x2 out;
  out.a_phi = 2.0 / c.den - 2.0 * phi * (-beta + s_phi) / (c.den * c.den);
  out.a_psi = -2.0 * phi * (1.0 + s_psi) / (c.den * c.den);
  out.b_phi = 0.5 * (-beta + s_phi);
  out.b_psi = 0.5 * (1.0 + s_psi);
  return out;
}

namespace detail {

inline void d_increments(double phi, double psi, double eps, double beta, const HCore& c,
                         double s_phi, double s_psi, Deriv2x2* d_rho) {
  // rho2 = 2 beta phi / q, q = s + d + eps
  const double q = c.s + c.d + eps;
  d_rho->b_phi = 2.0 * beta / q - 2.0 * beta * phi * (s_phi - beta) / (q * q);
  d_rho->b_psi = -2.0 * beta * phi * (s_psi + 1.0) / (q * q);
  // rho1 = -4 phi psi / g, g = d * den * dm
  const double g = c.d * c.den * c.dm;
  const double g_phi = -beta * c.den * c.dm + c.d * (-beta + s_phi) * c.dm +
                       c.d * c.den * (-beta + s_phi);
  const double g_psi = c.den * c.dm + c.d * (1.0 + s_psi) * c.dm + c.d * c.den * (1.0 + s_psi);
  d_rho->a_phi = -4.0 * psi / g + 4.0 * phi * psi * g_phi / (g * g);
  d_rho->a_psi = -4.0 * phi / g + 4.0 * phi * psi * g_psi / (g * g);
}

}  // namespace detail

/// Analytic Jacobian of (f1, f2); same compensated algebra as nonlinearity().
inline Deriv2x2 d_nonlinearity(double phi, double psi, const EpsilonContext& ctx,
                               const Params& p) {
  const double eps = ctx.eps, lam = ctx.lambda_j, beta = p.beta;
  const double d = psi - beta * phi;
  if (d <= 0.0) throw NonPositiveDenominator("psi - beta*phi <= 0");
  const auto c = detail::h_core(phi, psi, eps, beta);
  const double s_phi = beta * (eps - c.d) / c.s;
  const double s_psi = (c.d + eps) / c.s;
  const auto dh = d_h_eps(phi, psi, ctx, p);
  const double h1 = 2.0 * phi / c.den;

  Deriv2x2 out;
  const double f1_fac = (p.a1 - 2.0 * p.b1 * h1) / p.d1;
  out.a_phi = f1_fac * dh.a_phi;
  out.a_psi = f1_fac * dh.a_psi;

  const auto inc = stable_increments(phi, psi, eps, beta);
  Deriv2x2 d_rho;
  detail::d_increments(phi, psi, eps, beta, c, s_phi, s_psi, &d_rho);
  const double h10 = phi / d, h20 = d;
  const double g0 = p.a2 - p.b2 * h10;
  const double h10_phi = psi / (d * d), h10_psi = -phi / (d * d);
  const double g0_phi = -p.b2 * h10_phi, g0_psi = -p.b2 * h10_psi;
  const double h20_phi = -beta, h20_psi = 1.0;
  const double kap = lam / (p.a2 * (p.a2 - eps * lam));
  out.b_phi = kap * (p.a2 * (d_rho.b_phi * g0 + inc.rho2 * g0_phi -
                             p.b2 * (h20_phi * inc.rho1 + h20 * d_rho.a_phi)) +
                     lam * (h20_phi * g0 + h20 * g0_phi) -
                     eps * p.a2 * p.b2 * (d_rho.a_phi * inc.rho2 + inc.rho1 * d_rho.b_phi));
  out.b_psi = kap * (p.a2 * (d_rho.b_psi * g0 + inc.rho2 * g0_psi -
                             p.b2 * (h20_psi * inc.rho1 + h20 * d_rho.a_psi)) +
                     lam * (h20_psi * g0 + h20 * g0_psi) -
                     eps * p.a2 * p.b2 * (d_rho.a_psi * inc.rho2 + inc.rho1 * d_rho.b_psi));
  return out;
}

/// Analytic Jacobian of (r1, r2).
inline Deriv2x2 d_perturbation_terms(double phi, double psi, const EpsilonContext& ctx,
                                     const Params& p) {
  if (ctx.eps <= 0.0) throw EpsilonZero("d_perturbation_terms needs eps > 0");
  const auto h = h_eps(phi, psi, ctx, p);
  const auto dh = d_h_eps(phi, psi, ctx, p);
  Deriv2x2 out;
  const double k1 = ctx.eps * p.c1 / p.d1;
  out.a_phi = k1 * (dh.a_phi * h.w_tilde + h.u * dh.b_phi);
  out.a_psi = k1 * (dh.a_psi * h.w_tilde + h.u * dh.b_psi);
  const double k2 = 2.0 * p.c2 * ctx.lambda_j * h.w_tilde /
                    (ctx.eps * (p.a2 - ctx.eps * ctx.lambda_j));
  out.b_phi = k2 * dh.b_phi;
  out.b_psi = k2 * dh.b_psi;
  return out;
}

}  // namespace sktshadow
