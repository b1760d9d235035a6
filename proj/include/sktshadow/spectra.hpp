#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>

#include "sktshadow/solver.hpp"

namespace sktshadow {

/// Generalized pencil sigma T Phi = (L + eps F' [- eta R']) Phi of the
/// linearization at a branch point, in nodal collocation space.
struct SpectralPencil {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;
  double eps = 0.0;
  double eta = 0.0;
  int j = 0;
  double lambda_j = 0.0;
  double mu_ref = 0.0;  // reduced mu of the reference BranchPoint
};

/// Mass side T^eps(x): nodal 2x2 blocks
/// [ (eps/d1) dh1/dphi  (eps/d1) dh1/dpsi ; (1/d2) dh2/dphi  (1/d2) dh2/dpsi ]
/// evaluated at the steady state; stiffness side reuses the solver Jacobian.
inline SpectralPencil assemble_pencil(const BranchPoint& point, const StationaryProblem& prob) {
  const Domain1D& dom = point.Phi.domain();
  const int n = dom.n();
  SpectralPencil pencil;
  pencil.stiffness = jacobian(point.Phi, prob);
  pencil.mass = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const double eps = prob.ctx.eps;
  const double inv_d2 = prob.ctx.inv_d2(prob.params);
  for (int k = 0; k < n; ++k) {
    const auto dh = d_h_eps(point.Phi.phi.nodal()[k], point.Phi.psi.nodal()[k], prob.ctx,
                            prob.params);
    pencil.mass(k, k) = eps / prob.params.d1 * dh.a_phi;
    pencil.mass(k, n + k) = eps / prob.params.d1 * dh.a_psi;
    pencil.mass(n + k, k) = inv_d2 * dh.b_phi;
    pencil.mass(n + k, n + k) = inv_d2 * dh.b_psi;
  }
  pencil.eps = eps;
  pencil.eta = prob.eta;
  pencil.j = prob.mode.j;
  pencil.lambda_j = prob.mode.lambda;
  pencil.mu_ref = point.mu;
  return pencil;
}

/// Full spectrum of T^{-1} A (dense reduction; eigenvalues only).
inline Eigen::VectorXcd pencil_eigenvalues(const SpectralPencil& pencil) {
  const Eigen::MatrixXd M = pencil.mass.partialPivLu().solve(pencil.stiffness);
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues();
}

/// Near-zero unstable eigenpair with the decomposition of the eigenfunction
/// into kernel coordinates and the X0 remainder.
struct EigenResult {
  double sigma = 0.0;
  double Lambda = 0.0;       // sigma / eps
  FieldPair eigfield;        // normalized so its t-projection is (b2/a2) mu0
  double gamma = 0.0;        // kernel-e1 coordinate minus 1
  FieldPair tilde;           // (I - P) eigfield / eps
  double residual_rel = 0.0; // |(A - sigma T) v| / |A v|
  bool complex_pair_warning = false;
  double tilde_psi_mean = 0.0;
  double tilde_psi_supdev = 0.0;  // sup |psi~ - mean| / |mean|
};

/// Solves the generalized eigenproblem by dense reduction, selects the real
/// eigenvalue nearest eps*lambda_j inside [0.2, 5] * eps*lambda_j, recovers
/// the eigenvector by inverse iteration on (A - sigma T), and extracts the
/// kernel decomposition. mu0 is the limiting reduced amplitude used for the
/// t-normalization; pass NaN to use the branch point's mu.
inline EigenResult eigen_near_zero(const SpectralPencil& pencil, const StationaryProblem& prob,
                                   double mu0 = std::numeric_limits<double>::quiet_NaN()) {
  if (!(pencil.eps > 0)) throw EpsilonZero("eigen_near_zero requires eps > 0");
  const Domain1D& dom = prob.dom;
  const int n = dom.n();
  const double target = pencil.eps * pencil.lambda_j;
  const double lo = 0.2 * target, hi = 5.0 * target;

  const Eigen::VectorXcd ev = pencil_eigenvalues(pencil);

  bool complex_warning = false;
  double best = std::numeric_limits<double>::infinity();
  double sigma = 0.0;
  bool found = false;
  double best_any = std::numeric_limits<double>::infinity();
  bool nearest_any_complex = false;
  for (int i = 0; i < ev.size(); ++i) {
    const double re = ev(i).real(), im = ev(i).imag();
    if (re < lo || re > hi) continue;
    const double dist = std::abs(std::complex<double>(re, im) - std::complex<double>(target, 0));
    const bool is_real = std::abs(im) <= 1e-8 * std::max(1.0, std::abs(re));
    if (dist < best_any) {
      best_any = dist;
      nearest_any_complex = !is_real;
    }
    if (is_real && std::abs(re - target) < best) {
      best = std::abs(re - target);
      sigma = re;
      found = true;
    }
  }
  if (nearest_any_complex) complex_warning = true;
  if (!found) throw NoRealEigenvalueNearTarget(lo, hi);

  // inverse iteration on the pencil with a shift slightly off sigma
  const double shift = sigma * (1.0 + 1e-6) + 1e-14;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(pencil.stiffness - shift * pencil.mass);
  Eigen::VectorXd v(2 * n);
  for (int k = 0; k < n; ++k) {
    v(k) = 1.0;
    v(n + k) = prob.params.kernel_slope();
  }
  v.normalize();
  for (int it = 0; it < 6; ++it) {
    v = lu.solve(pencil.mass * v);
    v.normalize();
  }

  const Eigen::VectorXd Av = pencil.stiffness * v;
  const Eigen::VectorXd Tv = pencil.mass * v;
  // one-sided Rayleigh quotient sharpens sigma against the iterated vector
  const double sigma_rq = v.dot(Av) / v.dot(Tv);
  if (std::abs(sigma_rq - sigma) < 0.1 * std::max(std::abs(sigma), target)) sigma = sigma_rq;
  const double resid = (Av - sigma * Tv).norm() / Av.norm();

  std::vector<double> vphi(n), vpsi(n);
  for (int k = 0; k < n; ++k) {
    vphi[k] = v(k);
    vpsi[k] = v(n + k);
  }
  FieldPair eig = make_pair_nodal(dom, std::move(vphi), std::move(vpsi),
                                  FieldRole::Eigenfunction);
  const double mu_norm = std::isnan(mu0) ? pencil.mu_ref : mu0;
  auto pr = project_P(eig, prob.mode, prob.params);
  const double want_t = (prob.params.b2 / prob.params.a2) * mu_norm;
  if (pr.t == 0.0) throw Error("eigenfunction has vanishing t-projection");
  const double scale = want_t / pr.t;
  std::vector<double> sphi(eig.phi.coeff()), spsi(eig.psi.coeff());
  for (auto& x : sphi) x *= scale;
  for (auto& x : spsi) x *= scale;
  eig = make_pair_coeff(dom, std::move(sphi), std::move(spsi), FieldRole::Eigenfunction);

  pr = project_P(eig, prob.mode, prob.params);
  EigenResult out;
  out.sigma = sigma;
  out.Lambda = sigma / pencil.eps;
  out.gamma = pr.s - 1.0;
  std::vector<double> tph(pr.remainder.phi.coeff()), tps(pr.remainder.psi.coeff());
  for (auto& x : tph) x /= pencil.eps;
  for (auto& x : tps) x /= pencil.eps;
  out.tilde = make_pair_coeff(dom, std::move(tph), std::move(tps), FieldRole::Eigenfunction);
  out.eigfield = std::move(eig);
  out.residual_rel = resid;
  out.complex_pair_warning = complex_warning;
  out.tilde_psi_mean = out.tilde.psi.coeff()[0];
  double supdev = 0.0;
  for (double x : out.tilde.psi.nodal())
    supdev = std::max(supdev, std::abs(x - out.tilde_psi_mean));
  out.tilde_psi_supdev = supdev / std::abs(out.tilde_psi_mean);
  return out;
}

/// C0 constant of the eigenvalue reduction; its negativity is what pins
/// gamma(0) = 0.
inline double c0_diagnostic(const ReducedRoot& root, const Params& p, const EigenMode& mode) {
  const double c0 = detail::c0_from_root(p, mode, root.s0, root.I2, root.I3);
  if (!(c0 < 0)) throw SignViolation("C0 >= 0 at a valid root");
  return c0;
}

}  // namespace sktshadow
