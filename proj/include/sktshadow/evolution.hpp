#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sktshadow/solver.hpp"
#include "sktshadow/spectra.hpp"

namespace sktshadow {

/// Nodal (u, w) state of the evolution systems.
struct EvolutionState {
  std::vector<double> u;
  std::vector<double> w;
  double t = 0.0;
};

namespace detail {

/// Solves (I - dtd * Delta(c(x) * .)) x = b in nodal space. Constant
/// coefficients go through the diagonal cosine form; variable coefficients
/// use a cached LU of the frozen-coefficient operator plus iterative
/// refinement, refactoring when the coefficient field has drifted.
class ImplicitDiffusion {
 public:
  explicit ImplicitDiffusion(const Domain1D& dom) : dom_(dom) {}

  void solve(const std::vector<double>& c, double dtd, const std::vector<double>& b,
             std::vector<double>& x) {
    const int n = dom_.n();
    const double cmax = *std::max_element(c.begin(), c.end());
    const double cmin = *std::min_element(c.begin(), c.end());
    if (cmax - cmin <= 1e-13 * std::max(1.0, std::abs(cmax))) {
      std::vector<double> bc(n);
      dom_.nodal_to_coeff(b, bc);
      for (int m = 0; m < n; ++m) bc[m] /= 1.0 + dtd * dom_.lambda_mode(m) * cmax;
      x.resize(n);
      dom_.coeff_to_nodal(bc, x);
      return;
    }

    if (!have_lu_ || dtd != lu_dtd_) refactor(c, dtd);
    x.assign(n, 0.0);
    Eigen::Map<Eigen::VectorXd> xv(x.data(), n);
    xv = lu_.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));

    const double bnorm = std::max(1e-300, linf(b));
    std::vector<double> r(n);
    double prev_rel = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 10; ++it) {
      apply_residual(c, dtd, b, x, r);
      const double rel = linf(r) / bnorm;
      if (rel <= 1e-12) return;
      if (rel > 0.3 * prev_rel && it >= 1) {
        refactor(c, dtd);
        xv = lu_.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
        prev_rel = std::numeric_limits<double>::infinity();
        continue;
      }
      prev_rel = rel;
      Eigen::Map<const Eigen::VectorXd> rv(r.data(), n);
      xv += lu_.solve(rv);
    }
    apply_residual(c, dtd, b, x, r);
    if (linf(r) / bnorm > 1e-10)
      throw StepRejected("implicit diffusion solve residual above 1e-10");
  }

 private:
  static double linf(const std::vector<double>& v) {
    double m = 0;
    for (double a : v) m = std::max(m, std::abs(a));
    return m;
  }

  void refactor(const std::vector<double>& c, double dtd) {
    const int n = dom_.n();
    Eigen::MatrixXd M = -dtd * dom_.laplacian();
    for (int k = 0; k < n; ++k) M.col(k) *= c[k];
    M.diagonal().array() += 1.0;
    lu_.compute(M);
    lu_dtd_ = dtd;
    have_lu_ = true;
  }

  /// r = b - (I - dtd Delta(c .)) x, with the Laplacian applied spectrally.
  void apply_residual(const std::vector<double>& c, double dtd, const std::vector<double>& b,
                      const std::vector<double>& x, std::vector<double>& r) const {
    const int n = dom_.n();
    std::vector<double> cx(n), cc(n), lap(n);
    for (int k = 0; k < n; ++k) cx[k] = c[k] * x[k];
    dom_.nodal_to_coeff(cx, cc);
    for (int m = 0; m < n; ++m) cc[m] *= -dom_.lambda_mode(m);
    dom_.coeff_to_nodal(cc, lap);
    r.resize(n);
    for (int k = 0; k < n; ++k) r[k] = b[k] - (x[k] - dtd * lap[k]);
  }

  Domain1D dom_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double lu_dtd_ = -1.0;
  bool have_lu_ = false;
};

}  // namespace detail

/// Linearly-implicit IMEX stepper for the shadow system (alpha infinite) and
/// the transformed SKT system (alpha finite): quasilinear diffusion implicit
/// with frozen cross-coefficients, reactions explicit. Zero-flux boundary
/// conditions are automatic in cosine space.
class ImexStepper {
 public:
  ImexStepper(const Domain1D& dom, const Params& p, double d2,
              double alpha = std::numeric_limits<double>::infinity())
      : dom_(dom), p_(p), d2_(d2), alpha_(alpha), solve_u_(dom), solve_w_(dom) {
    if (!(d2 > 0)) throw InvalidParameter("d2 must be positive");
  }

  void step(EvolutionState& state, double dt) {
    if (!(dt > 0)) throw InvalidParameter("dt must be positive");
    const int n = dom_.n();
    const bool skt = std::isfinite(alpha_);
    std::vector<double> ru(n), rw(n), cu(n), cw(n);
    for (int k = 0; k < n; ++k) {
      const double u = state.u[k], w = state.w[k];
      double fu = u * (p_.a1 - p_.b1 * u);
      double fw = w * (p_.a2 - p_.b2 * u);
      if (skt) {
        fu -= p_.c1 * u * w / alpha_;
        fw -= p_.c2 * w * w / alpha_;
      }
      ru[k] = u + dt * fu;
      rw[k] = w + dt * fw;
      cu[k] = 1.0 + w;
      cw[k] = 1.0 + p_.beta * u;
    }
    std::vector<double> un, wn;
    solve_u_.solve(cu, dt * p_.d1, ru, un);
    solve_w_.solve(cw, dt * d2_, rw, wn);
    for (int k = 0; k < n; ++k)
      if (un[k] < 0.0 || wn[k] < 0.0) throw PositivityLoss(k);
    state.u = std::move(un);
    state.w = std::move(wn);
    state.t += dt;
  }

  const Domain1D& domain() const { return dom_; }

 private:
  Domain1D dom_;
  Params p_;
  double d2_;
  double alpha_;
  detail::ImplicitDiffusion solve_u_;
  detail::ImplicitDiffusion solve_w_;
};

/// One shadow-system step. Stateless convenience wrapper; loops should hold
/// an ImexStepper to keep the cached factorizations.
inline EvolutionState step_shadow(const EvolutionState& state, const Domain1D& dom,
                                  const Params& p, double d2, double dt) {
  ImexStepper stepper(dom, p, d2);
  EvolutionState s = state;
  stepper.step(s, dt);
  return s;
}

/// One step of the transformed SKT system (finite alpha).
inline EvolutionState step_skt(const EvolutionState& state, const Domain1D& dom,
                               const Params& p, double d2, double alpha, double dt) {
  ImexStepper stepper(dom, p, d2, alpha);
  EvolutionState s = state;
  stepper.step(s, dt);
  return s;
}

struct GrowthOptions {
  double dt = 0.0;            // 0: use min(1e-2, 0.1/sigma)
  double growth_factor = 1e3;
  double fit_start_factor = 3.0;
  int max_samples = 1500;
};

struct GrowthSample {
  double t;
  double pert_norm;
  double u_min;
  double u_max;
  double w_max;
};

struct GrowthResult {
  double measured_sigma = 0.0;
  double r_squared = 0.0;
  std::vector<GrowthSample> series;
  std::string exit_reason;
};

/// Perturbs the steady state along the unstable eigenfunction (converted to
/// (u, w) variables through the linearized change of variables), integrates
/// the evolution system, and fits the log-linear growth slope.
inline GrowthResult growth_rate(const BranchPoint& steady, const EigenResult& eig,
                                double delta0, const Params& p, const StationaryProblem& prob,
                                const GrowthOptions& opts = {}) {
  const Domain1D& dom = steady.Phi.domain();
  const int n = dom.n();
  const double steady_norm = std::max(steady.u.linf(), steady.w.linf());
  if (!(delta0 >= 1e-9 * steady_norm && delta0 <= 1e-5 * steady_norm))
    throw InvalidParameter("delta0 outside [1e-9, 1e-5] * |steady|_inf");
  const double sigma = eig.sigma;
  if (!(sigma > 0)) throw InvalidParameter("growth_rate needs sigma > 0");

  // eigenfunction mapped to (u, w) through Dh at the steady state
  std::vector<double> du(n), dw(n);
  for (int k = 0; k < n; ++k) {
    const auto dh = d_h_eps(steady.Phi.phi.nodal()[k], steady.Phi.psi.nodal()[k], prob.ctx, p);
    const double ephi = eig.eigfield.phi.nodal()[k];
    const double epsi = eig.eigfield.psi.nodal()[k];
    du[k] = dh.a_phi * ephi + dh.a_psi * epsi;
    dw[k] = (dh.b_phi * ephi + dh.b_psi * epsi) / prob.ctx.eps;
  }
  double raw = 0.0;
  for (int k = 0; k < n; ++k) raw = std::max({raw, std::abs(du[k]), std::abs(dw[k])});
  const double amp = delta0 / raw;

  EvolutionState state;
  state.u.resize(n);
  state.w.resize(n);
  for (int k = 0; k < n; ++k) {
    state.u[k] = steady.u.nodal()[k] + amp * du[k];
    state.w[k] = steady.w.nodal()[k] + amp * dw[k];
  }

  const double dt = opts.dt > 0 ? opts.dt : std::min(1e-2, 0.1 / sigma);
  const double alpha = prob.eta > 0 ? 1.0 / prob.eta
                                    : std::numeric_limits<double>::infinity();
  ImexStepper stepper(dom, p, prob.ctx.d2, alpha);

  auto pert_norm = [&]() {
    double m = 0;
    for (int k = 0; k < n; ++k) {
      m = std::max(m, std::abs(state.u[k] - steady.u.nodal()[k]));
      m = std::max(m, std::abs(state.w[k] - steady.w.nodal()[k]));
    }
    return m;
  };

  const double target = opts.growth_factor * delta0;
  const double blowup_cap = 1e-2 * steady_norm;
  const double t_no_growth = 10.0 / sigma;
  const double t_hard = 30.0 / sigma;
  const long est_steps = static_cast<long>(std::log(opts.growth_factor) / (sigma * dt)) + 1;
  const long stride = std::max<long>(1, est_steps / opts.max_samples);

  GrowthResult out;
  auto record = [&]() {
    double umin = state.u[0], umax = state.u[0], wmax = state.w[0];
    for (int k = 1; k < n; ++k) {
      umin = std::min(umin, state.u[k]);
      umax = std::max(umax, state.u[k]);
      wmax = std::max(wmax, state.w[k]);
    }
    out.series.push_back({state.t, pert_norm(), umin, umax, wmax});
  };
  record();

  long step_count = 0;
  while (true) {
    stepper.step(state, dt);
    if (++step_count % stride == 0) record();
    const double pn = out.series.back().pert_norm;
    if (pn >= target) {
      out.exit_reason = "grew by 10^3";
      break;
    }
    if (pn >= blowup_cap) {
      out.exit_reason = "reached 1e-2 * |steady| amplitude cap";
      break;
    }
    if (state.t >= t_no_growth && pn < 2.0 * delta0)
      throw NoGrowth("perturbation failed to double within 10/sigma time units");
    if (state.t >= t_hard) {
      out.exit_reason = "hard time cap 30/sigma";
      break;
    }
  }

  // log-linear fit over the window [fit_start_factor * delta0, target]
  std::vector<double> ts, ls;
  for (const auto& smp : out.series) {
    if (smp.pert_norm >= opts.fit_start_factor * delta0 && smp.pert_norm <= target) {
      ts.push_back(smp.t);
      ls.push_back(std::log(smp.pert_norm));
    }
  }
  if (ts.size() < 8) throw NoGrowth("too few samples in the growth window");
  double st = 0, sl = 0, stt = 0, stl = 0;
  const auto m = static_cast<double>(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += ls[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * ls[i];
  }
  const double slope = (m * stl - st * sl) / (m * stt - st * st);
  const double icept = (sl - slope * st) / m;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double fit = slope * ts[i] + icept;
    ss_res += (ls[i] - fit) * (ls[i] - fit);
    ss_tot += (ls[i] - sl / m) * (ls[i] - sl / m);
  }
  out.measured_sigma = slope;
  out.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

}  // namespace sktshadow
