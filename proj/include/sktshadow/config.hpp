#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sktshadow/errors.hpp"
#include "sktshadow/params.hpp"
#include "sktshadow/solver.hpp"

namespace sktshadow {

enum class SignChoice { Plus, Minus, Both };

inline const std::vector<std::string>& all_stages() {
  static const std::vector<std::string> s = {"reduce", "branch", "stability", "evolve", "skt"};
  return s;
}

struct RunConfig {
  Params params;
  double length = 1.0;
  int n = 256;
  int j = 1;
  SignChoice sign = SignChoice::Both;
  double eps_start = 1e-1;
  double eps_end = 1e-4;
  int eps_count = 16;
  std::string spacing = "log";
  std::vector<double> alphas;
  NewtonOptions newton;
  std::filesystem::path outputs = "out";
  std::set<std::string> stages{all_stages().begin(), all_stages().end()};

  std::vector<double> eps_grid() const {
    std::vector<double> grid(eps_count);
    if (eps_count == 1) {
      grid[0] = eps_start;
      return grid;
    }
    for (int i = 0; i < eps_count; ++i) {
      const double f = static_cast<double>(i) / (eps_count - 1);
      grid[i] = spacing == "log"
                    ? eps_start * std::pow(eps_end / eps_start, f)
                    : eps_start + f * (eps_end - eps_start);
    }
    return grid;
  }

  void validate() const {
    try {
      params.validate();
    } catch (const InvalidParameter& e) {
      throw ConfigError(e.what());
    }
    if (!(length > 0)) throw ConfigError("domain.length must be positive");
    if (n < 64 || (n & (n - 1)) != 0) throw ConfigError("domain.n must be a power of two >= 64");
    if (j < 1) throw ConfigError("mode.j must be >= 1");
    if (!(eps_start > eps_end && eps_end > 0))
      throw ConfigError("epsilon: need start > end > 0");
    if (eps_count < 1) throw ConfigError("epsilon.count must be >= 1");
    if (spacing != "log" && spacing != "linear")
      throw ConfigError("epsilon.spacing must be \"log\" or \"linear\"");
    for (double a : alphas)
      if (!(a > 0)) throw ConfigError("alpha entries must be positive");
    if (!(newton.tol > 0) || newton.max_iter < 1) throw ConfigError("invalid newton block");
    for (const auto& st : stages) {
      bool known = false;
      for (const auto& k : all_stages()) known = known || k == st;
      if (!known) throw ConfigError("unknown stage \"" + st + "\"");
    }
    if (stages.count("stability") && !stages.count("branch"))
      throw ConfigError("stage \"stability\" requires \"branch\"");
    if (stages.count("evolve") && !stages.count("stability"))
      throw ConfigError("stage \"evolve\" requires \"stability\"");
    if (stages.count("skt") && !stages.count("branch"))
      throw ConfigError("stage \"skt\" requires \"branch\"");
  }

  static RunConfig from_json(const nlohmann::json& js) {
    RunConfig cfg;
    try {
      const auto& pb = js.at("params");
      cfg.params.a1 = pb.at("a1");
      cfg.params.a2 = pb.at("a2");
      cfg.params.b1 = pb.at("b1");
      cfg.params.b2 = pb.at("b2");
      cfg.params.c1 = pb.at("c1");
      cfg.params.c2 = pb.at("c2");
      cfg.params.d1 = pb.at("d1");
      cfg.params.beta = pb.at("beta");
      const auto& db = js.at("domain");
      cfg.length = db.at("length");
      cfg.n = db.at("n");
      const auto& mb = js.at("mode");
      cfg.j = mb.at("j");
      const std::string sign = mb.value("sign", "both");
      if (sign == "+" || sign == "plus")
        cfg.sign = SignChoice::Plus;
      else if (sign == "-" || sign == "minus")
        cfg.sign = SignChoice::Minus;
      else if (sign == "both")
        cfg.sign = SignChoice::Both;
      else
        throw ConfigError("mode.sign must be \"+\", \"-\" or \"both\"");
      const auto& eb = js.at("epsilon");
      cfg.eps_start = eb.at("start");
      cfg.eps_end = eb.at("end");
      cfg.eps_count = eb.at("count");
      cfg.spacing = eb.value("spacing", "log");
      cfg.alphas = js.value("alpha", std::vector<double>{});
      if (js.contains("newton")) {
        cfg.newton.tol = js["newton"].value("tol", cfg.newton.tol);
        cfg.newton.max_iter = js["newton"].value("max_iter", cfg.newton.max_iter);
      }
      cfg.outputs = std::string(js.value("outputs", "out"));
      if (js.contains("stages")) {
        cfg.stages.clear();
        for (const auto& st : js.at("stages")) cfg.stages.insert(st.get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    cfg.validate();
    return cfg;
  }

  /// Loads a config file; the outputs directory resolves relative to the
  /// config's own location.
  static RunConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    nlohmann::json js;
    try {
      in >> js;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg = from_json(js);
    if (cfg.outputs.is_relative())
      cfg.outputs = path.has_parent_path() ? path.parent_path() / cfg.outputs : cfg.outputs;
    return cfg;
  }
};

}  // namespace sktshadow
