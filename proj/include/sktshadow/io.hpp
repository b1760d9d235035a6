#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sktshadow/reduction.hpp"
#include "sktshadow/solver.hpp"

namespace sktshadow::io {

/// 17 significant digits: round-trip exact for 64-bit doubles.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

inline void write_branch_csv(const std::filesystem::path& path, const Branch& br,
                             const Params& p, double lambda_j) {
  auto out = open_out(path);
  out << "eps,d2,eta,alpha,s,mu,residual,u_min,u_max,w_max,eps_w_max,sigma,"
         "sigma_over_eps_lambda\n";
  for (const auto& pt : br.points) {
    const double d2 = p.a2 / lambda_j - pt.eps;
    const double alpha =
        pt.eta > 0 ? 1.0 / pt.eta : std::numeric_limits<double>::infinity();
    const double wmax = pt.w.max();
    out << fmt17(pt.eps) << ',' << fmt17(d2) << ',' << fmt17(pt.eta) << ','
        << fmt17(alpha) << ',' << fmt17(pt.s) << ',' << fmt17(pt.mu) << ','
        << fmt17(pt.residual_norm) << ',' << fmt17(pt.u.min()) << ','
        << fmt17(pt.u.max()) << ',' << fmt17(wmax) << ',' << fmt17(pt.eps * wmax)
        << ',' << fmt17(pt.sigma) << ',' << fmt17(pt.sigma / (pt.eps * lambda_j))
        << '\n';
  }
}

struct SpectrumRow {
  double eps;
  double sigma;
  double lambda_ratio;
  double gamma;
  double tilde_dev;
  double resid;
};

inline void write_spectrum_csv(const std::filesystem::path& path,
                               const std::vector<SpectrumRow>& rows) {
  auto out = open_out(path);
  out << "eps,sigma,lambda_ratio,gamma,tilde_dev,resid\n";
  for (const auto& r : rows)
    out << fmt17(r.eps) << ',' << fmt17(r.sigma) << ',' << fmt17(r.lambda_ratio) << ','
        << fmt17(r.gamma) << ',' << fmt17(r.tilde_dev) << ',' << fmt17(r.resid) << '\n';
}

inline void write_profile(const std::filesystem::path& path, const Field& f) {
  auto out = open_out(path);
  const auto& xs = f.domain().nodes();
  for (std::size_t k = 0; k < xs.size(); ++k)
    out << fmt17(xs[k]) << ' ' << fmt17(f.nodal()[k]) << '\n';
}

template <class Series>
inline void write_growth_csv(const std::filesystem::path& path, const Series& series) {
  auto out = open_out(path);
  out << "t,pert_norm,u_min,u_max,w_max\n";
  for (const auto& s : series)
    out << fmt17(s.t) << ',' << fmt17(s.pert_norm) << ',' << fmt17(s.u_min) << ','
        << fmt17(s.u_max) << ',' << fmt17(s.w_max) << '\n';
}

inline nlohmann::json reduction_report(const ReducedRoot& root) {
  return nlohmann::json{{"j", root.j},
                        {"sign", root.sign > 0 ? "+" : "-"},
                        {"mu0", root.mu0},
                        {"s0", root.s0},
                        {"I1", root.I1},
                        {"I2", root.I2},
                        {"I3", root.I3},
                        {"det_value", root.det_value},
                        {"lower_bound", root.lower_bound},
                        {"c0", root.c0},
                        {"inequalities",
                         {{"i", root.ineq_margin[0]},
                          {"ii", root.ineq_margin[1]},
                          {"iii", root.ineq_margin[2]}}}};
}

}  // namespace sktshadow::io
