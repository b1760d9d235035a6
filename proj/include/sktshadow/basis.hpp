#pragma once

#include <cmath>
#include <vector>

#include "sktshadow/errors.hpp"
#include "sktshadow/field.hpp"
#include "sktshadow/params.hpp"

namespace sktshadow {

/// Simple Neumann eigenpair of -Laplace on (0, L):
/// lambda_j = (j pi / L)^2, phi_j = sqrt(2/L) cos(j pi x / L), ||phi_j|| = 1.
/// m_j and M_j are the bracket endpoints of the reduction variable mu; they
/// use the analytic extrema of phi_j on the closed interval, not grid values.
struct EigenMode {
  int j;
  double lambda;
  Field phi;
  double max_phi;
  double min_phi;
  double m_j;
  double M_j;
  Domain1D dom;

  double amplitude() const { return std::sqrt(2.0 / dom.length()); }
  /// phi_j evaluated off-grid.
  double phi_at(double x) const {
    return amplitude() * std::cos(j * M_PI * x / dom.length());
  }
};

inline EigenMode neumann_eigenpair(const Domain1D& dom, int j) {
  if (j < 1) throw InvalidParameter("mode index j must be >= 1");
  const double L = dom.length();
  const double lambda = (j * M_PI / L) * (j * M_PI / L);
  const double amp = std::sqrt(2.0 / L);
  std::vector<double> vals(dom.n());
  for (int k = 0; k < dom.n(); ++k)
    vals[k] = amp * std::cos(j * M_PI * dom.nodes()[k] / L);
  Field phi = Field::from_nodal(dom, std::move(vals));
  return EigenMode{j, lambda, std::move(phi), amp, -amp, -1.0 / amp, 1.0 / amp, dom};
}

/// Integral over the domain: L times the zeroth cosine coefficient. Exact on
/// the truncated cosine space; spectrally accurate for smooth integrands.
inline double integrate(const Field& f) {
  return f.domain().length() * f.coeff()[0];
}

/// Midpoint quadrature of a callable with grid doubling until two successive
/// values agree to rel_tol. Serves the near-singular reduction integrands.
template <class F>
double integrate_adaptive(double length, int n0, F&& f, double rel_tol = 1e-9,
                          int max_doublings = 8) {
  auto midpoint = [&](int n) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += f((k + 0.5) * length / n);
    return sum * length / n;
  };
  int n = n0;
  double prev = midpoint(n);
  for (int it = 0; it < max_doublings; ++it) {
    n *= 2;
    const double cur = midpoint(n);
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

/// Kernel direction e1 = (1, beta + b2/a2).
inline FieldPair kernel_e1(const Domain1D& dom, const Params& p) {
  return FieldPair{Field::constant(dom, 1.0), Field::constant(dom, p.kernel_slope())};
}

/// Kernel direction e2 = (0, 1) phi_j.
inline FieldPair kernel_e2(const EigenMode& mode) {
  return FieldPair{Field::zero(mode.dom), mode.phi};
}

struct Projection {
  double s;
  double t;
  FieldPair remainder;
};

namespace detail {
/// <cos_j, phi_j> = sqrt(L/2); converts between the psi_j coefficient and the
/// t-coordinate.
inline double t_pairing(const Domain1D& dom) { return std::sqrt(dom.length() / 2.0); }
}  // namespace detail

/// Kernel projection P Phi = s e1 + t e2 with
/// s = (1/|Omega|) int phi, t = int [-(beta + b2/a2) phi + psi] phi_j.
inline Projection project_P(const FieldPair& f, const EigenMode& mode, const Params& p) {
  const Domain1D& dom = f.domain();
  const int j = mode.j;
  const double slope = p.kernel_slope();
  const double cj = detail::t_pairing(dom);
  const double s = f.phi.coeff()[0];
  const double t = (-slope * f.phi.coeff()[j] + f.psi.coeff()[j]) * cj;

  std::vector<double> rphi = f.phi.coeff();
  std::vector<double> rpsi = f.psi.coeff();
  rphi[0] -= s;
  rpsi[0] -= s * slope;
  rpsi[j] -= t * mode.amplitude();
  return Projection{s, t, make_pair_coeff(dom, std::move(rphi), std::move(rpsi), f.role)};
}

/// Degenerate linear operator L = [[Delta, 0], [-(beta+b2/a2) lambda_j,
/// Delta + lambda_j]], applied diagonally per cosine mode.
inline FieldPair apply_L(const FieldPair& f, const EigenMode& mode, const Params& p) {
  const Domain1D& dom = f.domain();
  const int n = dom.n();
  const double slope = p.kernel_slope();
  std::vector<double> r1(n), r2(n);
  for (int m = 0; m < n; ++m) {
    const double lm = dom.lambda_mode(m);
    r1[m] = -lm * f.phi.coeff()[m];
    r2[m] = (mode.lambda - lm) * f.psi.coeff()[m] - slope * mode.lambda * f.phi.coeff()[m];
  }
  return make_pair_coeff(dom, std::move(r1), std::move(r2), FieldRole::Residual);
}

/// Restricted inverse of L on Range(L): returns the unique Phi* in X0 with
/// L Phi* = rhs. Componentwise in cosine modes
///   phi*_m = -r1_m / lambda_m (m != 0),   phi*_0 = 0,
///   psi*_m = (r2_m + (beta+b2/a2) lambda_j phi*_m) / (lambda_j - lambda_m)
///            (m != j),
/// and psi*_j = (beta+b2/a2) phi*_j, which zeroes the t-projection so the
/// result lies in X0 exactly (adding the kernel-e2 multiple does not change
/// L Phi*).
inline FieldPair solve_L_X0(const FieldPair& rhs, const EigenMode& mode, const Params& p,
                            double tol_range = 1e-9) {
  const Domain1D& dom = rhs.domain();
  const int n = dom.n();
  const int j = mode.j;
  const double slope = p.kernel_slope();

  const auto pr = project_P(rhs, mode, p);
  const double scale = std::max(1.0, rhs.linf());
  if (std::abs(pr.s) > tol_range * scale || std::abs(pr.t) > tol_range * scale)
    throw RhsNotInRange(pr.s, pr.t);

  std::vector<double> p1(n, 0.0), p2(n, 0.0);
  for (int m = 1; m < n; ++m) p1[m] = -rhs.phi.coeff()[m] / dom.lambda_mode(m);
  for (int m = 0; m < n; ++m) {
    if (m == j) continue;
    p2[m] = (rhs.psi.coeff()[m] + slope * mode.lambda * p1[m]) /
            (mode.lambda - dom.lambda_mode(m));
  }
  p2[j] = slope * p1[j];
  return make_pair_coeff(dom, std::move(p1), std::move(p2), rhs.role);
}

}  // namespace sktshadow
