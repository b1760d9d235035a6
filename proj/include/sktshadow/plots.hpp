#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sktshadow/errors.hpp"
#include "sktshadow/io.hpp"

namespace sktshadow {

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

/// Emits gnuplot-ready .dat files and a driver script for the branch
/// diagram, the eigenvalue ratio, steady profiles and growth curves found in
/// a completed (possibly partial) run directory.
inline void export_plots(const std::filesystem::path& run_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(run_dir)) throw MissingArtifacts("no run directory " + run_dir.string());

  const fs::path plot_dir = run_dir / "plots";
  std::vector<std::string> branch_dats, eig_dats, growth_dats, profile_sets;

  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("branch_", 0) == 0 && entry.path().extension() == ".csv") {
      const auto rows = detail::read_csv(entry.path());
      if (rows.size() < 2) continue;
      const std::string out_name = entry.path().stem().string() + ".dat";
      auto out = io::open_out(plot_dir / out_name);
      out << "# d2  eps_w_max  eps  u_max\n";
      for (std::size_t i = 1; i < rows.size(); ++i)
        out << rows[i][1] << ' ' << rows[i][10] << ' ' << rows[i][0] << ' ' << rows[i][8]
            << '\n';
      branch_dats.push_back(out_name);
    } else if (name.rfind("spectrum_", 0) == 0 && entry.path().extension() == ".csv") {
      const auto rows = detail::read_csv(entry.path());
      if (rows.size() < 2) continue;
      const std::string out_name = entry.path().stem().string() + ".dat";
      auto out = io::open_out(plot_dir / out_name);
      out << "# eps  lambda_ratio  gamma\n";
      for (std::size_t i = 1; i < rows.size(); ++i)
        out << rows[i][0] << ' ' << rows[i][2] << ' ' << rows[i][3] << '\n';
      eig_dats.push_back(out_name);
    } else if (name.rfind("growth_", 0) == 0 && entry.path().extension() == ".csv") {
      const auto rows = detail::read_csv(entry.path());
      if (rows.size() < 2) continue;
      const std::string out_name = entry.path().stem().string() + ".dat";
      auto out = io::open_out(plot_dir / out_name);
      out << "# t  pert_norm\n";
      for (std::size_t i = 1; i < rows.size(); ++i)
        out << rows[i][0] << ' ' << rows[i][1] << '\n';
      growth_dats.push_back(out_name);
    }
  }
  if (fs::is_directory(run_dir / "profiles")) {
    for (const auto& entry : fs::directory_iterator(run_dir / "profiles"))
      profile_sets.push_back("../profiles/" + entry.path().filename().string());
  }

  if (branch_dats.empty() && eig_dats.empty() && growth_dats.empty() && profile_sets.empty())
    throw MissingArtifacts("no branch/spectrum/growth artifacts in " + run_dir.string());

  auto gp = io::open_out(plot_dir / "plots.gp");
  gp << "set terminal pngcairo size 900,650\n";
  if (!branch_dats.empty()) {
    gp << "set output 'branch_diagram.png'\n"
       << "set xlabel 'd2'\nset ylabel 'eps * max w'\nset key left\n"
       << "plot";
    for (std::size_t i = 0; i < branch_dats.size(); ++i)
      gp << (i ? ", " : " ") << "'" << branch_dats[i] << "' using 1:2 with linespoints title '"
         << branch_dats[i] << "'";
    gp << "\n\n";
  }
  if (!eig_dats.empty()) {
    gp << "set output 'eigenvalue_ratio.png'\n"
       << "set xlabel 'eps'\nset ylabel 'Lambda/lambda_j'\nset logscale x\n"
       << "plot";
    for (std::size_t i = 0; i < eig_dats.size(); ++i)
      gp << (i ? ", " : " ") << "'" << eig_dats[i] << "' using 1:2 with linespoints title '"
         << eig_dats[i] << "'";
    gp << "\nunset logscale x\n\n";
  }
  if (!profile_sets.empty()) {
    gp << "set output 'profiles.png'\nset xlabel 'x'\nset ylabel 'value'\nplot";
    std::size_t count = 0;
    for (const auto& pr : profile_sets) {
      if (pr.find("_u.dat") == std::string::npos && pr.find("_w.dat") == std::string::npos)
        continue;
      gp << (count++ ? ", " : " ") << "'" << pr << "' with lines notitle";
      if (count >= 8) break;
    }
    gp << "\n\n";
  }
  if (!growth_dats.empty()) {
    gp << "set output 'growth.png'\nset xlabel 't'\nset ylabel 'perturbation norm'\n"
       << "set logscale y\nplot";
    for (std::size_t i = 0; i < growth_dats.size(); ++i)
      gp << (i ? ", " : " ") << "'" << growth_dats[i] << "' using 1:2 with lines title '"
         << growth_dats[i] << "'";
    gp << "\n";
  }
}

}  // namespace sktshadow
