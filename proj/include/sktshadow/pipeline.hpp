#pragma once

#include <cmath>
#include <cstdlib>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sktshadow/config.hpp"
#include "sktshadow/evolution.hpp"
#include "sktshadow/io.hpp"
#include "sktshadow/spectra.hpp"

namespace sktshadow {

inline int thread_budget() {
  if (const char* env = std::getenv("SKTSHADOW_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 2;
}

namespace detail {

inline std::size_t nearest_index(const std::vector<BranchPoint>& pts, double eps) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = std::abs(std::log(pts[i].eps / eps));
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

struct SignRun {
  int sign = +1;
  ReducedRoot root;
  std::optional<Branch> branch;
  std::vector<io::SpectrumRow> spectrum;
  std::optional<GrowthResult> growth;
  double growth_eps = 0.0;
  double growth_sigma = 0.0;
  std::optional<Branch> skt;
  std::vector<double> skt_udiff;
  std::vector<double> skt_sigma;
  double skt_shadow_sigma = 0.0;
  nlohmann::json checks = nlohmann::json::object();
  // set when a stage aborted
  bool failed = false;
  std::string fail_stage;
  std::string fail_message;
  double fail_eps = 0.0;
};

inline void add_check(nlohmann::json& checks, const std::string& name, bool pass,
                      double measured, double expected, double tol) {
  checks[name] = {{"pass", pass}, {"measured", measured}, {"expected", expected}, {"tol", tol}};
}

inline SignRun run_sign(const RunConfig& cfg, int sign) {
  SignRun out;
  out.sign = sign;
  const Domain1D dom(cfg.length, cfg.n);
  const EigenMode mode = neumann_eigenpair(dom, cfg.j);
  std::string stage = "reduce";
  try {
    out.root = reduce(cfg.params, mode, sign);
    add_check(out.checks, "reduction_det_above_bound",
              out.root.det_value >= out.root.lower_bound * (1 - 1e-8), out.root.det_value,
              out.root.lower_bound, 0.0);
    add_check(out.checks, "reduction_c0_negative", out.root.c0 < 0, out.root.c0, -1.0, 0.0);

    if (!cfg.stages.count("branch")) return out;
    stage = "branch";
    const StationaryProblem tmpl =
        StationaryProblem::make(cfg.params, mode, cfg.eps_grid().front(), 0.0);
    ContinuationOptions copts;
    copts.newton = cfg.newton;
    out.branch = continue_branch(tmpl, cfg.eps_grid(), sign, copts);

    {  // asymptotics of the deepest point against the limiting profile
      const BranchPoint& last = out.branch->points.back();
      double ell_min = 1e300, ell_max = -1e300;
      for (double ph : mode.phi.nodal()) {
        const double ell = 1.0 + out.root.mu0 * ph;
        ell_min = std::min(ell_min, ell);
        ell_max = std::max(ell_max, ell);
      }
      const double w_limit = (cfg.params.b2 / cfg.params.a2) * out.root.s0 * ell_max;
      const double u_limit = cfg.params.a2 / (cfg.params.b2 * ell_min);
      add_check(out.checks, "branch_eps_wmax_vs_limit",
                std::abs(last.eps * last.w.max() - w_limit) <= 0.02 * w_limit,
                last.eps * last.w.max(), w_limit, 0.02);
      add_check(out.checks, "branch_umax_vs_limit",
                std::abs(last.u.max() - u_limit) <= 0.02 * u_limit, last.u.max(), u_limit,
                0.02);
    }

    std::optional<EigenResult> growth_eig;
    std::size_t growth_idx = 0;
    if (cfg.stages.count("stability")) {
      stage = "stability";
      growth_idx = nearest_index(out.branch->points, 1e-2);
      for (std::size_t i = 0; i < out.branch->points.size(); ++i) {
        auto& pt = out.branch->points[i];
        const StationaryProblem prob = tmpl.with(pt.eps, 0.0);
        const SpectralPencil pencil = assemble_pencil(pt, prob);
        const EigenResult eig = eigen_near_zero(pencil, prob, out.root.mu0);
        pt.sigma = eig.sigma;
        out.spectrum.push_back({pt.eps, eig.sigma, eig.Lambda / mode.lambda, eig.gamma,
                                eig.tilde_psi_supdev, eig.residual_rel});
        if (i == growth_idx) growth_eig = eig;
      }
      const auto& deepest = out.spectrum.back();
      add_check(out.checks, "sigma_positive_all",
                std::all_of(out.spectrum.begin(), out.spectrum.end(),
                            [](const io::SpectrumRow& r) { return r.sigma > 0; }),
                deepest.sigma, 0.0, 0.0);
      add_check(out.checks, "lambda_ratio_deepest",
                std::abs(deepest.lambda_ratio - 1.0) <= 0.05, deepest.lambda_ratio, 1.0, 0.05);
    }

    if (cfg.stages.count("evolve") && growth_eig) {
      stage = "evolve";
      const BranchPoint& pt = out.branch->points[growth_idx];
      const StationaryProblem prob = tmpl.with(pt.eps, 0.0);
      const double steady_norm = std::max(pt.u.linf(), pt.w.linf());
      out.growth = growth_rate(pt, *growth_eig, 1e-7 * steady_norm, cfg.params, prob);
      out.growth_eps = pt.eps;
      out.growth_sigma = growth_eig->sigma;
      add_check(out.checks, "growth_matches_sigma",
                std::abs(out.growth->measured_sigma - growth_eig->sigma) <=
                    0.1 * growth_eig->sigma,
                out.growth->measured_sigma, growth_eig->sigma, 0.1);
      add_check(out.checks, "growth_r_squared", out.growth->r_squared >= 0.999,
                out.growth->r_squared, 1.0, 1e-3);
    }

    if (cfg.stages.count("skt") && !cfg.alphas.empty()) {
      stage = "skt";
      const std::size_t idx = nearest_index(out.branch->points, 1e-2);
      const BranchPoint& shadow = out.branch->points[idx];
      const StationaryProblem prob0 = tmpl.with(shadow.eps, 0.0);
      ContinuationOptions copts2;
      copts2.newton = cfg.newton;
      out.skt = eta_homotopy(shadow, prob0, cfg.alphas, copts2);
      out.skt_shadow_sigma = shadow.sigma;
      for (auto& pt : out.skt->points) {
        double d = 0;
        for (int k = 0; k < dom.n(); ++k)
          d = std::max(d, std::abs(pt.u.nodal()[k] - shadow.u.nodal()[k]));
        out.skt_udiff.push_back(d);
        const StationaryProblem prob = tmpl.with(pt.eps, pt.eta);
        const EigenResult eig = eigen_near_zero(assemble_pencil(pt, prob), prob, out.root.mu0);
        pt.sigma = eig.sigma;
        out.skt_sigma.push_back(eig.sigma);
      }
      bool ratios_ok = out.skt_udiff.size() >= 2;
      for (std::size_t i = 0; i + 1 < out.skt_udiff.size(); ++i) {
        const double ratio = out.skt_udiff[i + 1] / out.skt_udiff[i];
        ratios_ok = ratios_ok && ratio >= 0.35 && ratio <= 0.65;
      }
      add_check(out.checks, "skt_udiff_halving", ratios_ok,
                out.skt_udiff.empty() ? 0.0 : out.skt_udiff.back(), 0.0, 0.15);
      if (!std::isnan(out.skt_shadow_sigma)) {
        bool sig_ok = true;
        for (double s : out.skt_sigma)
          sig_ok = sig_ok && std::abs(s - out.skt_shadow_sigma) <= 0.1 * out.skt_shadow_sigma;
        add_check(out.checks, "skt_sigma_near_shadow", sig_ok,
                  out.skt_sigma.empty() ? 0.0 : out.skt_sigma.back(), out.skt_shadow_sigma,
                  0.1);
      }
    }
  } catch (const Error& e) {
    out.failed = true;
    out.fail_stage = stage;
    out.fail_message = e.what();
    if (const auto* bb = dynamic_cast<const BranchBroken*>(&e)) out.fail_eps = bb->at_eps;
    return out;
  }
  return out;
}

inline void write_sign_artifacts(const RunConfig& cfg, const SignRun& r) {
  const std::string tag = "j" + std::to_string(cfg.j) + (r.sign > 0 ? "_plus" : "_minus");
  const auto& dir = cfg.outputs;
  {
    auto out = io::open_out(dir / ("reduction_" + tag + ".json"));
    out << io::reduction_report(r.root).dump(2) << '\n';
  }
  const double lambda_j = std::pow(cfg.j * M_PI / cfg.length, 2);
  if (r.branch) {
    io::write_branch_csv(dir / ("branch_" + tag + ".csv"), *r.branch, cfg.params, lambda_j);
    for (std::size_t i = 0; i < r.branch->points.size(); ++i) {
      const auto& pt = r.branch->points[i];
      char idx[8];
      std::snprintf(idx, sizeof(idx), "%02zu", i);
      const auto stem = dir / "profiles" / ("profile_" + tag + "_ep" + idx + "_");
      io::write_profile(stem.string() + "u.dat", pt.u);
      io::write_profile(stem.string() + "w.dat", pt.w);
      io::write_profile(stem.string() + "phi.dat", pt.Phi.phi);
      io::write_profile(stem.string() + "psi.dat", pt.Phi.psi);
    }
  }
  if (!r.spectrum.empty())
    io::write_spectrum_csv(dir / ("spectrum_" + tag + ".csv"), r.spectrum);
  if (r.growth) {
    char eps_tag[32];
    std::snprintf(eps_tag, sizeof(eps_tag), "%.0e", r.growth_eps);
    io::write_growth_csv(dir / ("growth_" + tag + "_eps" + eps_tag + ".csv"),
                         r.growth->series);
  }
  if (r.skt) io::write_branch_csv(dir / ("skt_branch_" + tag + ".csv"), *r.skt, cfg.params,
                                  lambda_j);
}

}  // namespace detail

/// Executes the requested stages for each sign, writes all artifacts and a
/// summary with per-check pass/fail. Returns 0 on success, 3 on numerical
/// failure (stage and eps recorded in the summary).
inline int run_pipeline(const RunConfig& cfg, std::ostream& log) {
  std::vector<int> signs;
  if (cfg.sign != SignChoice::Minus) signs.push_back(+1);
  if (cfg.sign != SignChoice::Plus) signs.push_back(-1);

  std::vector<detail::SignRun> runs(signs.size());
  if (signs.size() == 2 && thread_budget() >= 2) {
    auto fut = std::async(std::launch::async,
                          [&] { return detail::run_sign(cfg, signs[1]); });
    runs[0] = detail::run_sign(cfg, signs[0]);
    runs[1] = fut.get();
  } else {
    for (std::size_t i = 0; i < signs.size(); ++i) runs[i] = detail::run_sign(cfg, signs[i]);
  }

  nlohmann::json summary;
  summary["stages"] = nlohmann::json::array();
  for (const auto& st : all_stages())
    if (cfg.stages.count(st)) summary["stages"].push_back(st);
  bool any_failed = false;
  bool all_checks_pass = true;
  for (const auto& r : runs) {
    detail::write_sign_artifacts(cfg, r);
    nlohmann::json block;
    block["sign"] = r.sign > 0 ? "+" : "-";
    block["checks"] = r.checks;
    for (const auto& [name, c] : r.checks.items())
      all_checks_pass = all_checks_pass && c.at("pass").get<bool>();
    if (r.failed) {
      any_failed = true;
      block["failure"] = {{"stage", r.fail_stage},
                          {"message", r.fail_message},
                          {"eps", r.fail_eps}};
      log << "stage " << r.fail_stage << " failed for sign " << (r.sign > 0 ? "+" : "-")
          << ": " << r.fail_message << '\n';
    }
    summary[r.sign > 0 ? "plus" : "minus"] = block;
  }
  summary["all_checks_pass"] = all_checks_pass && !any_failed;
  {
    auto out = io::open_out(cfg.outputs / "summary.json");
    out << summary.dump(2) << '\n';
  }
  log << "artifacts written to " << cfg.outputs.string() << '\n';
  return any_failed ? 3 : 0;
}

}  // namespace sktshadow
