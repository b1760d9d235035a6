#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "sktshadow/basis.hpp"
#include "sktshadow/errors.hpp"
#include "sktshadow/model.hpp"
#include "sktshadow/reduction.hpp"

namespace sktshadow {

struct NewtonOptions {
  double tol = 1e-11;       // relative to max(1, |Phi|_inf)
  int max_iter = 25;
  double armijo_c = 1e-4;
  double min_step = 1e-12;
};

struct ContinuationOptions {
  NewtonOptions newton;
  int max_bisections = 5;
};

/// Stationary problem L Phi + eps F(Phi, eps) - eta R(Phi, eps) = 0.
struct StationaryProblem {
  Params params;
  EigenMode mode;
  EpsilonContext ctx;
  double eta = 0.0;
  Domain1D dom;

  static StationaryProblem make(const Params& p, const EigenMode& mode, double eps,
                                double eta = 0.0) {
    p.validate();
    if (eta < 0) throw InvalidParameter("eta must be nonnegative");
    if (eta > 0 && eps <= 0)
      throw EpsilonZero("eta > 0 requires eps > 0 (r2 divides by eps)");
    return StationaryProblem{p, mode, EpsilonContext::make(mode.j, mode.lambda, eps, p),
                             eta, mode.dom};
  }

  StationaryProblem with(double eps, double eta_) const {
    return make(params, mode, eps, eta_);
  }
};

/// One converged continuation record.
struct BranchPoint {
  double eps = 0.0;
  double eta = 0.0;
  FieldPair Phi;
  double s = 0.0;
  double mu = 0.0;
  double residual_norm = 0.0;
  double sigma = std::numeric_limits<double>::quiet_NaN();  // filled by spectra
  Field u;
  Field w;
};

struct Branch {
  int j = 0;
  int sign = +1;
  std::vector<BranchPoint> points;
};

namespace detail {

inline void check_cone(const std::vector<double>& phi, const std::vector<double>& psi,
                       double beta) {
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (!(phi[k] > 0.0) || !(psi[k] - beta * phi[k] > 0.0))
      throw PositivityLoss(static_cast<int>(k));
  }
}

inline bool in_cone(const std::vector<double>& phi, const std::vector<double>& psi,
                    double beta) {
  for (std::size_t k = 0; k < phi.size(); ++k)
    if (!(phi[k] > 0.0) || !(psi[k] - beta * phi[k] > 0.0)) return false;
  return true;
}

}  // namespace detail

/// L Phi + eps F(Phi) - eta R(Phi), evaluated pseudo-spectrally: nonlinear
/// terms nodally, the linear operator diagonally in coefficient space.
inline FieldPair residual(const FieldPair& Phi, const StationaryProblem& prob) {
  const Domain1D& dom = Phi.domain();
  const int n = dom.n();
  const Params& p = prob.params;
  detail::check_cone(Phi.phi.nodal(), Phi.psi.nodal(), p.beta);

  std::vector<double> f1(n), f2(n);
  for (int k = 0; k < n; ++k) {
    const auto f = nonlinearity(Phi.phi.nodal()[k], Phi.psi.nodal()[k], prob.ctx, p);
    f1[k] = f.f1;
    f2[k] = f.f2;
  }
  std::vector<double> f1c(n), f2c(n);
  dom.nodal_to_coeff(f1, f1c);
  dom.nodal_to_coeff(f2, f2c);

  std::vector<double> r1(n), r2(n);
  const double eps = prob.ctx.eps, slope = p.kernel_slope(), lam = prob.mode.lambda;
  for (int m = 0; m < n; ++m) {
    const double lm = dom.lambda_mode(m);
    r1[m] = -lm * Phi.phi.coeff()[m] + eps * f1c[m];
    r2[m] = (lam - lm) * Phi.psi.coeff()[m] - slope * lam * Phi.phi.coeff()[m] + eps * f2c[m];
  }
  if (prob.eta > 0) {
    std::vector<double> q1(n), q2(n), q1c(n), q2c(n);
    for (int k = 0; k < n; ++k) {
      const auto r = perturbation_terms(Phi.phi.nodal()[k], Phi.psi.nodal()[k], prob.ctx, p);
      q1[k] = r.r1;
      q2[k] = r.r2;
    }
    dom.nodal_to_coeff(q1, q1c);
    dom.nodal_to_coeff(q2, q2c);
    for (int m = 0; m < n; ++m) {
      r1[m] -= prob.eta * q1c[m];
      r2[m] -= prob.eta * q2c[m];
    }
  }
  return make_pair_coeff(dom, std::move(r1), std::move(r2), FieldRole::Residual);
}

/// Dense Frechet derivative acting on stacked nodal vectors (phi; psi).
/// The Laplacian block is the precomputed collocation matrix (exactly
/// similar to the diagonal coefficient form); the reaction blocks are nodal
/// diagonals from the analytic model derivatives.
inline Eigen::MatrixXd jacobian(const FieldPair& Phi, const StationaryProblem& prob) {
  const Domain1D& dom = Phi.domain();
  const int n = dom.n();
  const Params& p = prob.params;
  detail::check_cone(Phi.phi.nodal(), Phi.psi.nodal(), p.beta);

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const Eigen::MatrixXd& D = dom.laplacian();
  J.topLeftCorner(n, n) = D;
  J.bottomRightCorner(n, n) = D;
  const double lam = prob.mode.lambda, slope = p.kernel_slope(), eps = prob.ctx.eps;
  for (int k = 0; k < n; ++k) {
    J(n + k, n + k) += lam;
    J(n + k, k) -= slope * lam;
  }
  for (int k = 0; k < n; ++k) {
    auto dF = d_nonlinearity(Phi.phi.nodal()[k], Phi.psi.nodal()[k], prob.ctx, p);
    J(k, k) += eps * dF.a_phi;
    J(k, n + k) += eps * dF.a_psi;
    J(n + k, k) += eps * dF.b_phi;
    J(n + k, n + k) += eps * dF.b_psi;
    if (prob.eta > 0) {
      auto dR = d_perturbation_terms(Phi.phi.nodal()[k], Phi.psi.nodal()[k], prob.ctx, p);
      J(k, k) -= prob.eta * dR.a_phi;
      J(k, n + k) -= prob.eta * dR.a_psi;
      J(n + k, k) -= prob.eta * dR.b_phi;
      J(n + k, n + k) -= prob.eta * dR.b_psi;
    }
  }
  return J;
}

namespace detail {

inline double residual_linf(const FieldPair& r) {
  return std::max(r.phi.linf(), r.psi.linf());
}

inline BranchPoint finish_point(FieldPair Phi, const StationaryProblem& prob, double rnorm) {
  const Domain1D& dom = Phi.domain();
  const int n = dom.n();
  std::vector<double> u(n), w(n);
  for (int k = 0; k < n; ++k) {
    const auto h = h_eps(Phi.phi.nodal()[k], Phi.psi.nodal()[k], prob.ctx, prob.params);
    u[k] = h.u;
    w[k] = h.w_tilde / prob.ctx.eps;
  }
  const auto pr = project_P(Phi, prob.mode, prob.params);
  BranchPoint pt{prob.ctx.eps,
                 prob.eta,
                 std::move(Phi),
                 pr.s,
                 pr.t * prob.params.a2 / (prob.params.b2 * pr.s),
                 rnorm,
                 std::numeric_limits<double>::quiet_NaN(),
                 Field::from_nodal(dom, std::move(u)),
                 Field::from_nodal(dom, std::move(w))};
  if (!(pt.s > 0)) throw NonPositiveAmplitude("converged point has s <= 0");
  return pt;
}

}  // namespace detail

/// Damped Newton iteration: Armijo backtracking on |residual|_inf with the
/// step clipped to keep (phi, psi - beta phi) strictly positive nodally.
inline BranchPoint newton(const FieldPair& initial, const StationaryProblem& prob,
                          const NewtonOptions& opts = {}) {
  if (!(prob.ctx.eps > 0))
    throw InvalidParameter("newton requires eps > 0; the eps = 0 system is degenerate");
  const Domain1D& dom = initial.domain();
  const int n = dom.n();
  FieldPair Phi = initial;

  double rn = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    const FieldPair r = residual(Phi, prob);
    rn = detail::residual_linf(r);
    const double scale = std::max(1.0, Phi.linf());
    if (rn <= opts.tol * scale) return detail::finish_point(std::move(Phi), prob, rn);

    Eigen::MatrixXd J = jacobian(Phi, prob);
    Eigen::VectorXd rhs(2 * n);
    for (int k = 0; k < n; ++k) {
      rhs(k) = -r.phi.nodal()[k];
      rhs(n + k) = -r.psi.nodal()[k];
    }
    const Eigen::VectorXd delta = J.partialPivLu().solve(rhs);

    double step = 1.0;
    bool accepted = false;
    bool saw_positive_candidate = false;
    int bad_node = 0;
    std::vector<double> cphi(n), cpsi(n);
    while (step >= opts.min_step) {
      for (int k = 0; k < n; ++k) {
        cphi[k] = Phi.phi.nodal()[k] + step * delta(k);
        cpsi[k] = Phi.psi.nodal()[k] + step * delta(n + k);
      }
      bool positive = true;
      for (int k = 0; k < n; ++k) {
        if (!(cphi[k] > 0.0) || !(cpsi[k] - prob.params.beta * cphi[k] > 0.0)) {
          positive = false;
          bad_node = k;
          break;
        }
      }
      if (positive) {
        saw_positive_candidate = true;
        FieldPair cand = make_pair_nodal(dom, cphi, cpsi, Phi.role);
        const double rn2 = detail::residual_linf(residual(cand, prob));
        if (rn2 <= (1.0 - opts.armijo_c * step) * rn) {
          Phi = std::move(cand);
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!saw_positive_candidate) throw PositivityLoss(bad_node);
      throw NoConvergence(it + 1, rn);
    }
  }
  const FieldPair r = residual(Phi, prob);
  rn = detail::residual_linf(r);
  const double scale = std::max(1.0, Phi.linf());
  if (rn <= opts.tol * scale) return detail::finish_point(std::move(Phi), prob, rn);
  throw NoConvergence(opts.max_iter, rn);
}

namespace detail {

inline FieldPair ansatz_at(const Ansatz& an, double eps) {
  const Domain1D& dom = an.Phi0.domain();
  const int n = dom.n();
  std::vector<double> a(n), b(n);
  for (int k = 0; k < n; ++k) {
    a[k] = an.Phi0.phi.nodal()[k] + eps * an.PhiStar0.phi.nodal()[k];
    b[k] = an.Phi0.psi.nodal()[k] + eps * an.PhiStar0.psi.nodal()[k];
  }
  return make_pair_nodal(dom, std::move(a), std::move(b));
}

/// Walk from a converged point to target eps, bisecting the step in log
/// space when Newton fails.
inline BranchPoint walk_eps(const BranchPoint& from, double target_eps,
                            const StationaryProblem& tmpl, const ContinuationOptions& opts,
                            int depth = 0) {
  const StationaryProblem prob = tmpl.with(target_eps, tmpl.eta);
  try {
    return newton(from.Phi, prob, opts.newton);
  } catch (const Error& e) {
    if (depth >= opts.max_bisections)
      throw BranchBroken(target_eps, tmpl.eta, e.what());
    const double mid = std::sqrt(from.eps * target_eps);
    const BranchPoint half = walk_eps(from, mid, tmpl, opts, depth + 1);
    return walk_eps(half, target_eps, tmpl, opts, depth + 1);
  }
}

inline BranchPoint walk_eta(const BranchPoint& from, double target_eta,
                            const StationaryProblem& tmpl, const ContinuationOptions& opts,
                            int depth = 0) {
  const StationaryProblem prob = tmpl.with(tmpl.ctx.eps, target_eta);
  try {
    return newton(from.Phi, prob, opts.newton);
  } catch (const Error& e) {
    if (depth >= opts.max_bisections)
      throw BranchBroken(tmpl.ctx.eps, target_eta, e.what());
    const double mid = 0.5 * (from.eta + target_eta);
    const BranchPoint half = walk_eta(from, mid, tmpl, opts, depth + 1);
    return walk_eta(half, target_eta, tmpl, opts, depth + 1);
  }
}

}  // namespace detail

/// Natural continuation of the shadow branch over a descending eps grid.
/// Seeds with the ansatz at the largest eps; if that fails, falls back to
/// seeding at the smallest eps (where the ansatz is asymptotically exact)
/// and marches up.
inline Branch continue_branch(const StationaryProblem& tmpl,
                              const std::vector<double>& eps_grid, int sign,
                              const ContinuationOptions& opts = {}) {
  if (eps_grid.empty()) throw InvalidParameter("empty eps grid");
  for (std::size_t i = 0; i + 1 < eps_grid.size(); ++i)
    if (!(eps_grid[i] > eps_grid[i + 1]))
      throw InvalidParameter("eps grid must be strictly descending");
  if (!(tmpl.params.A() > tmpl.params.B()))
    throw RatioNotAboveOne("continuation requires A > B");

  const ReducedRoot root = reduce(tmpl.params, tmpl.mode, sign);
  const Ansatz an = build_ansatz(root, tmpl.params, tmpl.mode);

  Branch br{tmpl.mode.j, root.sign, {}};
  br.points.reserve(eps_grid.size());

  auto seed_at = [&](double eps) {
    return newton(detail::ansatz_at(an, eps), tmpl.with(eps, tmpl.eta), opts.newton);
  };

  bool march_down = true;
  BranchPoint current;
  try {
    current = seed_at(eps_grid.front());
  } catch (const Error&) {
    current = seed_at(eps_grid.back());
    march_down = false;
  }

  if (march_down) {
    br.points.push_back(current);
    for (std::size_t i = 1; i < eps_grid.size(); ++i) {
      current = detail::walk_eps(br.points.back(), eps_grid[i], tmpl, opts);
      br.points.push_back(current);
    }
  } else {
    std::vector<BranchPoint> up;
    up.push_back(current);
    for (std::size_t i = eps_grid.size() - 1; i-- > 0;) {
      current = detail::walk_eps(up.back(), eps_grid[i], tmpl, opts);
      up.push_back(current);
    }
    br.points.assign(up.rbegin(), up.rend());
  }
  return br;
}

/// Continuation from the shadow limit (eta = 0) to the SKT system at the
/// requested alphas. alphas ascending; continuation runs in ascending eta
/// (descending alpha); the returned points follow the input order.
inline Branch eta_homotopy(const BranchPoint& shadow_point, const StationaryProblem& tmpl,
                           const std::vector<double>& alphas,
                           const ContinuationOptions& opts = {}) {
  if (shadow_point.eta != 0.0)
    throw InvalidParameter("eta_homotopy needs a converged shadow (eta = 0) point");
  for (std::size_t i = 0; i + 1 < alphas.size(); ++i)
    if (!(alphas[i] < alphas[i + 1]))
      throw InvalidParameter("alpha list must be ascending");

  Branch br{tmpl.mode.j, 0, {}};
  std::vector<BranchPoint> walked;
  BranchPoint current = shadow_point;
  for (std::size_t i = alphas.size(); i-- > 0;) {
    const double alpha = alphas[i];
    if (std::isinf(alpha)) {
      walked.push_back(shadow_point);
      continue;
    }
    current = detail::walk_eta(current, 1.0 / alpha, tmpl, opts);
    walked.push_back(current);
  }
  br.points.assign(walked.rbegin(), walked.rend());
  return br;
}

/// Pseudo-arclength trace in a scalar parameter (fold exploration outside
/// the theorem's range; not used by the default pipeline). make_prob maps a
/// parameter value to the stationary problem; the trace follows the solution
/// curve through folds, where the parameter reverses direction.
struct ArclengthPoint {
  double param;
  BranchPoint point;
};

inline std::vector<ArclengthPoint> arclength_continue(
    const BranchPoint& start, const std::function<StationaryProblem(double)>& make_prob,
    double param0, double ds, int max_points, double param_min, double param_max,
    const NewtonOptions& nopts = {}) {
  const Domain1D& dom = start.Phi.domain();
  const int n = dom.n();
  const int N = 2 * n + 1;

  auto pack = [&](const FieldPair& Phi, double q) {
    Eigen::VectorXd X(N);
    for (int k = 0; k < n; ++k) {
      X(k) = Phi.phi.nodal()[k];
      X(n + k) = Phi.psi.nodal()[k];
    }
    X(2 * n) = q;
    return X;
  };
  auto unpack = [&](const Eigen::VectorXd& X) {
    std::vector<double> a(n), b(n);
    for (int k = 0; k < n; ++k) {
      a[k] = X(k);
      b[k] = X(n + k);
    }
    return make_pair_nodal(dom, std::move(a), std::move(b));
  };
  auto res_vec = [&](const FieldPair& Phi, double q) {
    const FieldPair r = residual(Phi, make_prob(q));
    Eigen::VectorXd v(2 * n);
    for (int k = 0; k < n; ++k) {
      v(k) = r.phi.nodal()[k];
      v(n + k) = r.psi.nodal()[k];
    }
    return v;
  };

  std::vector<ArclengthPoint> out;
  out.push_back({param0, start});

  // second point by a small natural step to get a secant tangent
  const double dq0 = ds;
  BranchPoint second = newton(start.Phi, make_prob(param0 + dq0), nopts);
  out.push_back({param0 + dq0, second});

  Eigen::VectorXd Xprev = pack(start.Phi, param0);
  Eigen::VectorXd Xcur = pack(second.Phi, param0 + dq0);

  double h = (Xcur - Xprev).norm();
  for (int step = 0; step < max_points; ++step) {
    Eigen::VectorXd tangent = (Xcur - Xprev).normalized();
    Eigen::VectorXd X = Xcur + h * tangent;
    bool ok = false;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
      Eigen::VectorXd Xt = Xcur + h * tangent;
      X = Xt;
      ok = true;
      for (int it = 0; it < nopts.max_iter; ++it) {
        FieldPair Phi = unpack(X);
        if (!detail::in_cone(Phi.phi.nodal(), Phi.psi.nodal(), make_prob(X(2 * n)).params.beta)) {
          ok = false;
          break;
        }
        Eigen::VectorXd r = res_vec(Phi, X(2 * n));
        Eigen::VectorXd g(N);
        g.head(2 * n) = r;
        g(2 * n) = tangent.dot(X - Xt);
        if (r.lpNorm<Eigen::Infinity>() <= nopts.tol * std::max(1.0, Phi.linf())) break;
        const StationaryProblem prob = make_prob(X(2 * n));
        Eigen::MatrixXd Jb = Eigen::MatrixXd::Zero(N, N);
        Jb.topLeftCorner(2 * n, 2 * n) = jacobian(Phi, prob);
        const double dq = 1e-7 * std::max(1.0, std::abs(X(2 * n)));
        Jb.block(0, 2 * n, 2 * n, 1) =
            (res_vec(Phi, X(2 * n) + dq) - r) / dq;
        Jb.row(2 * n) = tangent.transpose();
        X -= Jb.partialPivLu().solve(g);
        if (it + 1 == nopts.max_iter) ok = false;
      }
      if (!ok) h *= 0.35;
    }
    if (!ok) break;
    Xprev = Xcur;
    Xcur = X;
    const double q = X(2 * n);
    FieldPair Phi = unpack(X);
    const StationaryProblem prob = make_prob(q);
    const double rn = detail::residual_linf(residual(Phi, prob));
    out.push_back({q, detail::finish_point(std::move(Phi), prob, rn)});
    h = std::min(h * 1.4, 40.0 * ds);
    if (q < param_min || q > param_max) break;
  }
  return out;
}

}  // namespace sktshadow
