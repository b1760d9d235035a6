#pragma once

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sktshadow/evolution.hpp"
#include "sktshadow/pipeline.hpp"
#include "sktshadow/spectra.hpp"

namespace sktshadow {

struct CriterionResult {
  int id;
  std::string name;
  bool pass;
  std::string details;
};

namespace acceptance {

// Worked parameter set: a1=4, a2=2, b1=b2=c1=c2=1, beta=0, d1=1, L=1, j=1.
inline Params worked_params() { return Params{4, 2, 1, 1, 1, 1, 1, 0}; }

// Oracle anchors, frozen from 40-digit quadrature of the closed forms.
inline constexpr double kS0 = 0.86393527628442258;
inline constexpr double kS0Tol = 1e-5;

inline double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

inline std::string fmt(double v, int prec = 6) {
  std::ostringstream ss;
  ss << std::setprecision(prec) << v;
  return ss.str();
}

struct Context {
  int n = 256;
  Domain1D dom;
  EigenMode mode;
  Params p;
  ReducedRoot root_p, root_m;
  Branch branch;                       // sign +, 16 log points 1e-1 .. 1e-4
  std::vector<EigenResult> eigs;       // one per branch point
  std::vector<double> grid;

  explicit Context(int n_)
      : n(n_), dom(1.0, n_), mode(neumann_eigenpair(dom, 1)), p(worked_params()) {
    RunConfig cfg;
    grid = cfg.eps_grid();  // defaults: 16 log points over [1e-1, 1e-4]
  }
};

/// 1. Quadrature against the closed forms of int (1 + sqrt(2) mu cos(j pi x))^{-k}.
inline CriterionResult criterion_integrals(Context& ctx) {
  const double mus[] = {-0.65, -0.5, -0.25, 0.25, 0.5, 0.65};
  double worst = 0.0;
  for (int j = 1; j <= 3; ++j) {
    const EigenMode mode = neumann_eigenpair(ctx.dom, j);
    for (double mu : mus) {
      const double a = std::sqrt(2.0) * mu;
      const double closed[3] = {1.0 / std::sqrt(1.0 - a * a),
                                std::pow(1.0 - a * a, -1.5),
                                (1.0 + 0.5 * a * a) * std::pow(1.0 - a * a, -2.5)};
      for (int k = 1; k <= 3; ++k) {
        std::vector<double> vals(ctx.dom.n());
        for (int i = 0; i < ctx.dom.n(); ++i)
          vals[i] = std::pow(1.0 + mu * mode.phi.nodal()[i], -k);
        const double got = integrate(Field::from_nodal(ctx.dom, std::move(vals)));
        worst = std::max(worst, std::abs(got - closed[k - 1]) / std::abs(closed[k - 1]));
      }
    }
  }
  return {1, "closed-form integral suite",
          worst <= 1e-10, "max rel err " + fmt(worst, 3) + " (tol 1e-10)"};
}

/// 2. Reduction anchors at the worked set.
inline CriterionResult criterion_reduction(Context& ctx) {
  ctx.root_p = reduce(ctx.p, ctx.mode, +1);
  ctx.root_m = reduce(ctx.p, ctx.mode, -1);
  std::ostringstream d;
  bool ok = true;

  const double mu_err =
      std::max(std::abs(ctx.root_p.mu0 - 0.5), std::abs(ctx.root_m.mu0 + 0.5));
  ok = ok && mu_err <= 1e-10;
  d << "mu err " << fmt(mu_err, 3);

  const double s_err =
      std::max(std::abs(ctx.root_p.s0 - kS0), std::abs(ctx.root_m.s0 - kS0));
  ok = ok && s_err <= kS0Tol;
  d << ", s0 err " << fmt(s_err, 3);

  // C0 bracket integral (B/A + 1) I2 - (2B/A) I3 = -2 sqrt(2) exactly
  const double r = ctx.p.B() / ctx.p.A();
  const double bracket = (r + 1.0) * ctx.root_p.I2 - 2.0 * r * ctx.root_p.I3;
  const double bracket_err = std::abs(bracket + 2.0 * std::sqrt(2.0));
  ok = ok && bracket_err <= 1e-8;
  d << ", C0 bracket err " << fmt(bracket_err, 3);

  for (const auto* root : {&ctx.root_p, &ctx.root_m})
    for (double m : root->ineq_margin) ok = ok && m > 0;
  d << ", margins (" << fmt(ctx.root_p.ineq_margin[0], 4) << ", "
    << fmt(ctx.root_p.ineq_margin[1], 4) << ", " << fmt(ctx.root_p.ineq_margin[2], 4) << ")";

  const double lb_oracle = std::pow(M_PI, 4) * 2.0 * std::sqrt(2.0);  // A lam^2 (1-B/A) I2
  ok = ok && std::abs(ctx.root_p.lower_bound - lb_oracle) <= 1e-6;
  ok = ok && ctx.root_p.det_value >= ctx.root_p.lower_bound * (1 - 1e-8) &&
       ctx.root_p.det_value > ctx.root_p.lower_bound;
  d << ", det " << fmt(ctx.root_p.det_value, 6) << " >= lb " << fmt(ctx.root_p.lower_bound, 6);
  return {2, "reduction anchors (worked set)", ok, d.str()};
}

/// 3. Residual of the first-order ansatz is O(eps^2).
inline CriterionResult criterion_ansatz_order(Context& ctx) {
  const double t0 = now_s();
  const Ansatz an = build_ansatz(ctx.root_p, ctx.p, ctx.mode);
  const double eps_list[3] = {1e-2, 5e-3, 2.5e-3};
  double norms[3];
  for (int i = 0; i < 3; ++i) {
    const auto prob = StationaryProblem::make(ctx.p, ctx.mode, eps_list[i]);
    const FieldPair r = residual(detail::ansatz_at(an, eps_list[i]), prob);
    norms[i] = std::max(r.phi.linf(), r.psi.linf());
  }
  const double o1 = std::log2(norms[0] / norms[1]);
  const double o2 = std::log2(norms[1] / norms[2]);
  const double dt = now_s() - t0;
  const bool ok = o1 >= 1.8 && o2 >= 1.8 && dt < 5.0;
  return {3, "ansatz residual order",
          ok, "orders " + fmt(o1, 4) + ", " + fmt(o2, 4) + " (need >= 1.8), " +
                  fmt(dt, 2) + " s (< 5 s)"};
}

/// 4. Branch asymptotics down to eps = 1e-4.
inline CriterionResult criterion_branch(Context& ctx) {
  const auto tmpl = StationaryProblem::make(ctx.p, ctx.mode, ctx.grid.front());
  ctx.branch = continue_branch(tmpl, ctx.grid, +1);
  const auto& pts = ctx.branch.points;
  const BranchPoint& last = pts.back();

  double ell_min = 1e300, ell_max = -1e300;
  for (double ph : ctx.mode.phi.nodal()) {
    ell_min = std::min(ell_min, 1.0 + ctx.root_p.mu0 * ph);
    ell_max = std::max(ell_max, 1.0 + ctx.root_p.mu0 * ph);
  }
  const double w_limit = (ctx.p.b2 / ctx.p.a2) * ctx.root_p.s0 * ell_max;
  const double u_limit = ctx.p.a2 / (ctx.p.b2 * ell_min);
  const double w_rel = std::abs(last.eps * last.w.max() - w_limit) / w_limit;
  const double u_rel = std::abs(last.u.max() - u_limit) / u_limit;

  bool slopes_ok = true;
  double worst_ratio = 1.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double q1 = (pts[i].s - ctx.root_p.s0) / pts[i].eps;
    const double q2 = (pts[i + 1].s - ctx.root_p.s0) / pts[i + 1].eps;
    const double m1 = (pts[i].mu - ctx.root_p.mu0) / pts[i].eps;
    const double m2 = (pts[i + 1].mu - ctx.root_p.mu0) / pts[i + 1].eps;
    for (double ratio : {q2 / q1, m2 / m1}) {
      slopes_ok = slopes_ok && ratio >= 0.5 && ratio <= 2.0;
      if (std::abs(ratio - 1) > std::abs(worst_ratio - 1)) worst_ratio = ratio;
    }
  }
  const bool ok = w_rel <= 0.02 && u_rel <= 0.02 && slopes_ok;
  return {4, "branch asymptotics",
          ok, "eps*max w rel " + fmt(w_rel, 3) + ", max u rel " + fmt(u_rel, 3) +
                  " (tol 0.02), slope ratios within [0.5,2] (worst " +
                  fmt(worst_ratio, 4) + ")"};
}

/// 5. Unstable eigenvalue ladder.
inline CriterionResult criterion_eigen(Context& ctx) {
  const auto tmpl = StationaryProblem::make(ctx.p, ctx.mode, ctx.grid.front());
  ctx.eigs.clear();
  bool all_positive = true;
  for (auto& pt : ctx.branch.points) {
    const auto prob = tmpl.with(pt.eps, 0.0);
    ctx.eigs.push_back(eigen_near_zero(assemble_pencil(pt, prob), prob, ctx.root_p.mu0));
    pt.sigma = ctx.eigs.back().sigma;
    all_positive = all_positive && ctx.eigs.back().sigma > 0;
  }
  const std::size_t i3 = detail::nearest_index(ctx.branch.points, 1e-3);
  const std::size_t i4 = detail::nearest_index(ctx.branch.points, 1e-4);
  const EigenResult &e3 = ctx.eigs[i3], &e4 = ctx.eigs[i4];
  const double lam = ctx.mode.lambda;
  const double r3 = std::abs(e3.sigma / (ctx.branch.points[i3].eps * lam) - 1.0);
  const double r4 = std::abs(e4.sigma / (ctx.branch.points[i4].eps * lam) - 1.0);
  const bool gamma_ok = std::abs(e4.gamma) <= 0.25 * std::abs(e3.gamma) &&
                        std::abs(e3.gamma) <= 100.0 * 1e-3;
  const double psi_const = ctx.p.b2 * lam / (ctx.p.a2 * ctx.p.a2);  // = pi^2/4
  const double mean_rel = std::abs(e3.tilde_psi_mean - psi_const) / psi_const;
  const bool ok = all_positive && r3 <= 0.05 && r4 <= 0.005 && gamma_ok &&
                  mean_rel <= 0.05 && e3.tilde_psi_supdev <= 0.05;
  std::ostringstream d;
  d << "sigma>0 all: " << (all_positive ? "yes" : "NO") << ", |ratio-1| " << fmt(r3, 3)
    << " @1e-3 (tol .05), " << fmt(r4, 3) << " @1e-4 (tol .005), gamma " << fmt(e3.gamma, 3)
    << " -> " << fmt(e4.gamma, 3) << ", psi~ mean rel " << fmt(mean_rel, 3) << ", supdev "
    << fmt(e3.tilde_psi_supdev, 3) << " (tol .05)";
  return {5, "unstable eigenvalue", ok, d.str()};
}

/// 6. Nonlinear instability: measured growth vs sigma at eps in {1e-2, 1e-3}.
inline CriterionResult criterion_growth(Context& ctx) {
  const double t0 = now_s();
  const auto tmpl = StationaryProblem::make(ctx.p, ctx.mode, ctx.grid.front());
  std::ostringstream d;
  bool ok = true;
  for (double eps_target : {1e-2, 1e-3}) {
    const std::size_t i = detail::nearest_index(ctx.branch.points, eps_target);
    const BranchPoint& pt = ctx.branch.points[i];
    const EigenResult& eig = ctx.eigs[i];
    const auto prob = tmpl.with(pt.eps, 0.0);
    const double steady_norm = std::max(pt.u.linf(), pt.w.linf());
    const GrowthResult g = growth_rate(pt, eig, 1e-7 * steady_norm, ctx.p, prob);
    const double rel = std::abs(g.measured_sigma - eig.sigma) / eig.sigma;
    ok = ok && rel <= 0.10 && g.r_squared >= 0.999;
    d << "eps " << fmt(pt.eps, 2) << ": measured " << fmt(g.measured_sigma, 5) << " vs "
      << fmt(eig.sigma, 5) << " (rel " << fmt(rel, 3) << ", R2 " << fmt(g.r_squared, 6)
      << "); ";
  }
  const double dt = now_s() - t0;
  ok = ok && dt < 60.0;
  d << fmt(dt, 1) << " s (< 60 s)";
  return {6, "nonlinear instability growth rate", ok, d.str()};
}

/// 7. SKT perturbation at eps = 1e-2 over alpha in {1e3, 2e3, 4e3, 8e3},
/// exactly as stated. The eta-branch folds near alpha ~ 3.4e3 for the worked
/// set, so the lower rungs are expected to be unreachable; the criterion
/// reports honestly either way.
inline CriterionResult criterion_skt(Context& ctx) {
  const std::size_t i2 = detail::nearest_index(ctx.branch.points, 1e-2);
  const BranchPoint& shadow = ctx.branch.points[i2];
  const double shadow_sigma = ctx.eigs[i2].sigma;
  const auto tmpl = StationaryProblem::make(ctx.p, ctx.mode, shadow.eps);
  const std::vector<double> ladder = {1e3, 2e3, 4e3, 8e3};

  auto measure = [&](const Branch& br) {
    std::ostringstream d;
    bool ok = true;
    std::vector<double> diffs;
    for (const auto& pt : br.points) {
      double df = 0;
      for (int k = 0; k < ctx.dom.n(); ++k)
        df = std::max(df, std::abs(pt.u.nodal()[k] - shadow.u.nodal()[k]));
      diffs.push_back(df);
    }
    for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
      const double ratio = diffs[i + 1] / diffs[i];
      ok = ok && ratio >= 0.35 && ratio <= 0.65;
      d << "ratio(a=" << fmt(ladder[i + 1], 2) << "/" << fmt(ladder[i], 2) << ") "
        << fmt(ratio, 3) << "; ";
    }
    for (std::size_t i = 0; i < br.points.size(); ++i) {
      const auto prob = tmpl.with(br.points[i].eps, br.points[i].eta);
      const EigenResult eig =
          eigen_near_zero(assemble_pencil(br.points[i], prob), prob, ctx.root_p.mu0);
      const double rel = std::abs(eig.sigma - shadow_sigma) / shadow_sigma;
      ok = ok && rel <= 0.10;
    }
    d << "sigma within 10% of shadow: " << (ok ? "yes" : "see ratios");
    return std::make_pair(ok, d.str());
  };

  try {
    const Branch br = eta_homotopy(shadow, tmpl, ladder);
    auto [ok, details] = measure(br);
    return {7, "SKT perturbation", ok, details};
  } catch (const BranchBroken& e) {
    std::ostringstream d;
    d << "UNATTAINABLE as stated: eta-branch folds before alpha " << fmt(1.0 / e.at_eta, 3)
      << " (" << e.what() << ").";
    try {
      const Branch partial = eta_homotopy(shadow, tmpl, {4e3, 8e3});
      double d8 = 0, d4 = 0;
      for (int k = 0; k < ctx.dom.n(); ++k) {
        d4 = std::max(d4, std::abs(partial.points[0].u.nodal()[k] - shadow.u.nodal()[k]));
        d8 = std::max(d8, std::abs(partial.points[1].u.nodal()[k] - shadow.u.nodal()[k]));
      }
      d << " Reachable rungs behave: |u_a - u_sh| = " << fmt(d4, 4) << " @4e3, " << fmt(d8, 4)
        << " @8e3 (ratio " << fmt(d8 / d4, 3) << ")";
    } catch (const Error&) {
    }
    return {7, "SKT perturbation", false, d.str()};
  }
}

/// 8. Structural suites at module-invariant tolerances.
inline CriterionResult criterion_structural(Context& ctx) {
  std::ostringstream d;
  bool ok = true;
  std::mt19937 rng(20240811);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  {  // basis: kernel, Fredholm orthogonality, restricted inverse
    const auto e1 = kernel_e1(ctx.dom, ctx.p);
    const auto e2 = kernel_e2(ctx.mode);
    const double k1 = apply_L(e1, ctx.mode, ctx.p).linf();
    const double k2 = apply_L(e2, ctx.mode, ctx.p).linf();
    ok = ok && k1 <= 1e-12 && k2 <= 1e-12;
    double fred = 0, inv = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> a(ctx.dom.n()), b(ctx.dom.n());
      for (auto& v : a) v = unif(rng);
      for (auto& v : b) v = unif(rng);
      const FieldPair f = make_pair_nodal(ctx.dom, std::move(a), std::move(b));
      const FieldPair Lf = apply_L(f, ctx.mode, ctx.p);
      const auto pr = project_P(Lf, ctx.mode, ctx.p);
      const double scale = std::max(1.0, Lf.linf());
      fred = std::max({fred, std::abs(pr.s) / scale, std::abs(pr.t) / scale});
      const FieldPair x0 = project_P(f, ctx.mode, ctx.p).remainder;
      const FieldPair back = solve_L_X0(apply_L(x0, ctx.mode, ctx.p), ctx.mode, ctx.p, 1e-6);
      double diff = 0;
      for (int k = 0; k < ctx.dom.n(); ++k)
        diff = std::max({diff, std::abs(back.phi.nodal()[k] - x0.phi.nodal()[k]),
                         std::abs(back.psi.nodal()[k] - x0.psi.nodal()[k])});
      inv = std::max(inv, diff / std::max(1.0, x0.linf()));
    }
    ok = ok && fred <= 1e-12 && inv <= 1e-10;
    d << "basis: kernel " << fmt(std::max(k1, k2), 2) << ", fredholm " << fmt(fred, 2)
      << ", inverse " << fmt(inv, 2) << "; ";
  }

  {  // model: round trip 8 ulps, increment exactness 4 ulps
    const double eps_list[] = {1e-12, 1e-9, 1e-6, 1e-3, 1e-1, 1.0};
    const double beta_list[] = {0.0, 0.5, 1.0};
    double rt = 0, incr = 0;
    for (double beta : beta_list) {
      Params p = ctx.p;
      p.beta = beta;
      for (double eps : eps_list)
        for (int trial = 0; trial < 40; ++trial) {
          const double phi = 0.1 + 2.0 * std::abs(unif(rng));
          const double psi = beta * phi + 0.2 + 3.0 * std::abs(unif(rng));
          const auto ctx_e = EpsilonContext::make(1, ctx.mode.lambda, eps, p);
          const auto h = h_eps(phi, psi, ctx_e, p);
          const double phi_back = (eps + h.w_tilde) * h.u;
          const double psi_back = (1.0 + beta * h.u) * h.w_tilde;
          rt = std::max(rt, std::abs(phi_back - phi) / (8 * DBL_EPSILON * phi));
          rt = std::max(rt, std::abs(psi_back - psi) / (8 * DBL_EPSILON * psi));
          const auto inc = stable_increments(phi, psi, eps, beta);
          const double h10 = phi / (psi - beta * phi), h20 = psi - beta * phi;
          incr = std::max(incr, std::abs(h10 + eps * inc.rho1 - h.u) /
                                    (4 * DBL_EPSILON * std::abs(h.u)));
          incr = std::max(incr, std::abs(h20 + eps * inc.rho2 - h.w_tilde) /
                                    (4 * DBL_EPSILON * std::abs(h.w_tilde)));
        }
    }
    ok = ok && rt <= 1.0 && incr <= 1.0;
    d << "model: round-trip " << fmt(rt, 2) << " x8ulp, increments " << fmt(incr, 2)
      << " x4ulp; ";
  }

  {  // reduction: h_j monotonicity and endpoint blow-up
    bool mono = true;
    for (int i = 0; i < 50; ++i) {
      double mu = 0;
      while (std::abs(mu) < 5e-3)
        mu = ctx.mode.m_j + (ctx.mode.M_j - ctx.mode.m_j) * 0.5 * (unif(rng) * 0.98 + 1.0);
      const double delta = 1e-5;
      mono = mono && mu * (hj(mu + delta, ctx.mode) - hj(mu - delta, ctx.mode)) > 0;
    }
    const double off = 1e-4 * (ctx.mode.M_j - ctx.mode.m_j);
    const bool blow = hj(ctx.mode.M_j - off, ctx.mode) > 1e3 &&
                      hj(ctx.mode.m_j + off, ctx.mode) > 1e3;
    ok = ok && mono && blow;
    d << "reduction: monotone " << (mono ? "yes" : "NO") << ", blow-up " << (blow ? "yes" : "NO")
      << "; ";
  }

  {  // solver: Jacobian vs directional finite differences, eta = 0 and > 0
    double worst = 0;
    for (double eta : {0.0, 1.0 / 8e3}) {
      const auto prob = StationaryProblem::make(ctx.p, ctx.mode, 1e-2, eta);
      const Ansatz an = build_ansatz(ctx.root_p, ctx.p, ctx.mode);
      const FieldPair Phi = detail::ansatz_at(an, 1e-2);
      const Eigen::MatrixXd J = jacobian(Phi, prob);
      std::vector<double> va(ctx.dom.n()), vb(ctx.dom.n());
      for (auto& v : va) v = unif(rng);
      for (auto& v : vb) v = unif(rng);
      const double h = 1e-6;
      std::vector<double> pp(ctx.dom.n()), pm(ctx.dom.n()), sp(ctx.dom.n()), sm(ctx.dom.n());
      for (int k = 0; k < ctx.dom.n(); ++k) {
        pp[k] = Phi.phi.nodal()[k] + h * va[k];
        pm[k] = Phi.phi.nodal()[k] - h * va[k];
        sp[k] = Phi.psi.nodal()[k] + h * vb[k];
        sm[k] = Phi.psi.nodal()[k] - h * vb[k];
      }
      const FieldPair rp = residual(make_pair_nodal(ctx.dom, pp, sp), prob);
      const FieldPair rm = residual(make_pair_nodal(ctx.dom, pm, sm), prob);
      Eigen::VectorXd dir(2 * ctx.dom.n());
      for (int k = 0; k < ctx.dom.n(); ++k) {
        dir(k) = va[k];
        dir(ctx.dom.n() + k) = vb[k];
      }
      const Eigen::VectorXd Jv = J * dir;
      double err = 0, scale = 0;
      for (int k = 0; k < ctx.dom.n(); ++k) {
        const double fd1 = (rp.phi.nodal()[k] - rm.phi.nodal()[k]) / (2 * h);
        const double fd2 = (rp.psi.nodal()[k] - rm.psi.nodal()[k]) / (2 * h);
        err = std::max({err, std::abs(Jv(k) - fd1), std::abs(Jv(ctx.dom.n() + k) - fd2)});
        scale = std::max({scale, std::abs(fd1), std::abs(fd2)});
      }
      worst = std::max(worst, err / scale);
    }
    ok = ok && worst <= 1e-6;
    d << "solver: J-vs-FD rel " << fmt(worst, 2) << " (tol 1e-6)";
  }

  return {8, "structural suites", ok, d.str()};
}

}  // namespace acceptance

/// Runs every acceptance criterion, printing one pass/fail line each.
inline std::vector<CriterionResult> run_acceptance(std::ostream& out, int n = 256) {
  acceptance::Context ctx(n);
  std::vector<CriterionResult> results;
  auto run = [&](auto&& fn, int id, const std::string& name) {
    CriterionResult r;
    try {
      r = fn(ctx);
    } catch (const std::exception& e) {
      r = CriterionResult{id, name, false, std::string("exception: ") + e.what()};
    }
    out << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.name << " -- " << r.details
        << '\n';
    out.flush();
    results.push_back(std::move(r));
  };
  using namespace acceptance;
  run([](Context& c) { return criterion_integrals(c); }, 1, "closed-form integral suite");
  run([](Context& c) { return criterion_reduction(c); }, 2, "reduction anchors (worked set)");
  run([](Context& c) { return criterion_ansatz_order(c); }, 3, "ansatz residual order");
  run([](Context& c) { return criterion_branch(c); }, 4, "branch asymptotics");
  run([](Context& c) { return criterion_eigen(c); }, 5, "unstable eigenvalue");
  run([](Context& c) { return criterion_growth(c); }, 6, "nonlinear instability growth rate");
  run([](Context& c) { return criterion_skt(c); }, 7, "SKT perturbation");
  run([](Context& c) { return criterion_structural(c); }, 8, "structural suites");
  return results;
}

}  // namespace sktshadow
