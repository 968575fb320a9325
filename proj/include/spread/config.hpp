#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spread/error.hpp"
#include "spread/geometry.hpp"
#include "spread/io.hpp"
#include "spread/kernel.hpp"

namespace spread {

inline constexpr const char* kToolVersion = "0.1.0";

// Fully-resolved run configuration; defaults applied and echoed to metadata.
struct RunConfig {
  std::string subcommand;

  std::size_t d = 2;
  double r = 4;
  std::vector<double> r_list;
  double lambda = 2;
  std::vector<double> lambda_grid;
  nlohmann::json kernel_json = {{"shape", "ball"}};
  double window_scale = 48;  // window side = window_scale * r
  Boundary boundary = Boundary::torus;
  std::string provenance = "poisson";
  double intensity = 1.0;
  double jitter = 0.25;
  std::size_t replicates = 32;
  std::uint64_t seed = 0;
  std::string out;
  std::string stats_out;
  std::string raw_out;
  std::string spanning_out;

  double box_L = 8;      // renorm / opnorm box side
  double a = 0;          // good-event threshold; <= 0 means pilot-calibrated
  std::size_t pilot_replicates = 50;
  int m = 64;            // operator grid resolution
  std::string variant = "box";  // opnorm: box | torus | double
  double tol = 0.01;
  double theta = 0.05;
  std::string criterion = "wrap";
  double lambda_lo = 0.25;
  double lambda_hi = 4.0;
  long long grid_nx = 8, grid_ny = 8;    // renorm bond-field shape
  long long bond_nx = 64, bond_ny = 64;  // iid bond window
  double p = 0.5;

  KernelSpec kernel() const { return kernel_from_json(kernel_json, d); }

  Window window() const {
    return Window::cube(d, window_scale * r, boundary);
  }

  nlohmann::json to_json() const;
};

namespace config_detail {

inline const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::set<std::string> ensemble_keys = {
      "d",         "r",       "lambda",     "kernel", "window_scale", "boundary",
      "provenance", "intensity", "jitter",  "replicates", "seed",     "out"};
  static const std::map<std::string, std::set<std::string>> table = [] {
    std::map<std::string, std::set<std::string>> t;
    auto with = [&](std::set<std::string> extra) {
      std::set<std::string> keys = ensemble_keys;
      keys.merge(extra);
      return keys;
    };
    t["sample"] = with({"stats_out"});
    t["sweep"] = with({"lambda_grid", "raw_out"});
    t["threshold"] = with({"r_list", "criterion", "theta", "tol", "lambda_lo", "lambda_hi"});
    t["gw"] = {"lambda", "lambda_grid", "seed", "out"};
    t["opnorm"] = {"d", "lambda", "kernel", "L", "m", "variant", "tol", "seed", "out"};
    t["renorm"] = with({"L", "a", "pilot_replicates", "grid_nx", "grid_ny", "spanning_out"});
    t["bond"] = {"p", "bond_nx", "bond_ny", "replicates", "seed", "out"};
    return t;
  }();
  return table;
}

template <typename T>
T get_checked(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidConfigError("config key '" + key + "' has the wrong type");
  }
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidConfigError(message);
}

}  // namespace config_detail

// Validates the merged JSON against the subcommand's key set and constraints;
// unknown keys are an error listing them, violations name the field and bound.
inline RunConfig parse_config(const nlohmann::json& merged, const std::string& subcommand) {
  using config_detail::get_checked;
  using config_detail::require;
  const auto& table = config_detail::allowed_keys();
  const auto it = table.find(subcommand);
  if (it == table.end()) throw InvalidConfigError("unknown subcommand: " + subcommand);
  std::vector<std::string> unknown;
  for (const auto& [key, value] : merged.items()) {
    if (!it->second.count(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw InvalidConfigError(msg);
  }

  RunConfig cfg;
  cfg.subcommand = subcommand;
  {
    const long long d = get_checked<long long>(merged, "d", 2);
    require(d >= 1, "d must be >= 1 (got " + std::to_string(d) + ")");
    cfg.d = static_cast<std::size_t>(d);
  }
  cfg.r = get_checked<double>(merged, "r", cfg.r);
  require(cfg.r > 0 && std::isfinite(cfg.r), "r must be finite and > 0");
  cfg.lambda = get_checked<double>(merged, "lambda", cfg.lambda);
  require(cfg.lambda >= 0 && std::isfinite(cfg.lambda), "lambda must be finite and >= 0");
  cfg.r_list = get_checked<std::vector<double>>(merged, "r_list", {});
  for (std::size_t i = 0; i < cfg.r_list.size(); ++i) {
    require(cfg.r_list[i] > 0 && std::isfinite(cfg.r_list[i]),
            "r_list entry " + std::to_string(i) + " (" + std::to_string(cfg.r_list[i]) +
                ") must be finite and > 0");
  }
  cfg.lambda_grid = get_checked<std::vector<double>>(merged, "lambda_grid", {});
  for (std::size_t i = 1; i < cfg.lambda_grid.size(); ++i) {
    require(cfg.lambda_grid[i] > cfg.lambda_grid[i - 1],
            "lambda_grid must be strictly increasing (entry " + std::to_string(i) + ")");
  }
  if (merged.contains("kernel")) {
    require(merged.at("kernel").is_object(), "kernel must be an object");
    cfg.kernel_json = merged.at("kernel");
  }
  cfg.window_scale = get_checked<double>(merged, "window_scale", cfg.window_scale);
  require(cfg.window_scale > 0 && std::isfinite(cfg.window_scale),
          "window_scale must be finite and > 0");
  {
    const std::string b = get_checked<std::string>(merged, "boundary", "torus");
    require(b == "torus" || b == "free", "boundary must be torus or free");
    cfg.boundary = b == "torus" ? Boundary::torus : Boundary::free;
  }
  cfg.provenance = get_checked<std::string>(merged, "provenance", cfg.provenance);
  require(cfg.provenance == "poisson" || cfg.provenance == "lattice" ||
              cfg.provenance == "jittered",
          "provenance must be poisson, lattice, or jittered");
  cfg.intensity = get_checked<double>(merged, "intensity", cfg.intensity);
  require(cfg.intensity >= 0 && std::isfinite(cfg.intensity), "intensity must be finite and >= 0");
  cfg.jitter = get_checked<double>(merged, "jitter", cfg.jitter);
  require(cfg.jitter >= 0 && std::isfinite(cfg.jitter), "jitter must be finite and >= 0");
  {
    const long long rep = get_checked<long long>(merged, "replicates", 32);
    require(rep >= 1, "replicates must be >= 1");
    cfg.replicates = static_cast<std::size_t>(rep);
  }
  cfg.seed = get_checked<std::uint64_t>(merged, "seed", 0);
  cfg.out = get_checked<std::string>(merged, "out", "");
  cfg.stats_out = get_checked<std::string>(merged, "stats_out", "");
  cfg.raw_out = get_checked<std::string>(merged, "raw_out", "");
  cfg.spanning_out = get_checked<std::string>(merged, "spanning_out", "");

  cfg.box_L = get_checked<double>(merged, "L", cfg.box_L);
  require(cfg.box_L > 0 && std::isfinite(cfg.box_L), "L must be finite and > 0");
  cfg.a = get_checked<double>(merged, "a", cfg.a);
  {
    const long long pilot = get_checked<long long>(merged, "pilot_replicates", 50);
    require(pilot >= 2, "pilot_replicates must be >= 2");
    cfg.pilot_replicates = static_cast<std::size_t>(pilot);
  }
  cfg.m = static_cast<int>(get_checked<long long>(merged, "m", cfg.m));
  require(cfg.m >= 8, "m must be >= 8");
  cfg.variant = get_checked<std::string>(merged, "variant", cfg.variant);
  require(cfg.variant == "box" || cfg.variant == "torus" || cfg.variant == "double",
          "variant must be box, torus, or double");
  cfg.tol = get_checked<double>(merged, "tol", cfg.tol);
  require(cfg.tol > 0 && std::isfinite(cfg.tol), "tol must be finite and > 0");
  cfg.theta = get_checked<double>(merged, "theta", cfg.theta);
  require(cfg.theta > 0 && cfg.theta < 1, "theta must be in (0,1)");
  cfg.criterion = get_checked<std::string>(merged, "criterion", cfg.criterion);
  require(cfg.criterion == "wrap" || cfg.criterion == "giant",
          "criterion must be wrap or giant");
  cfg.lambda_lo = get_checked<double>(merged, "lambda_lo", cfg.lambda_lo);
  cfg.lambda_hi = get_checked<double>(merged, "lambda_hi", cfg.lambda_hi);
  require(cfg.lambda_lo > 0 && cfg.lambda_hi > cfg.lambda_lo,
          "need 0 < lambda_lo < lambda_hi");
  cfg.grid_nx = get_checked<long long>(merged, "grid_nx", cfg.grid_nx);
  cfg.grid_ny = get_checked<long long>(merged, "grid_ny", cfg.grid_ny);
  require(cfg.grid_nx >= 1 && cfg.grid_ny >= 1, "grid_nx/grid_ny must be >= 1");
  cfg.bond_nx = get_checked<long long>(merged, "bond_nx", cfg.bond_nx);
  cfg.bond_ny = get_checked<long long>(merged, "bond_ny", cfg.bond_ny);
  require(cfg.bond_nx >= 2 && cfg.bond_ny >= 2, "bond_nx/bond_ny must be >= 2");
  cfg.p = get_checked<double>(merged, "p", cfg.p);
  require(cfg.p >= 0 && cfg.p <= 1, "p must be in [0,1]");

  // cross-field checks
  if (subcommand == "threshold" && cfg.r_list.empty()) cfg.r_list = {cfg.r};
  for (std::size_t i = 1; i < cfg.r_list.size(); ++i) {
    require(cfg.r_list[i] > cfg.r_list[i - 1], "r_list must be strictly increasing");
  }
  if (cfg.provenance == "jittered" && cfg.jitter > 0) {
    require(cfg.boundary == Boundary::torus, "jittered provenance needs a torus boundary");
  }
  cfg.kernel();  // validates the kernel description early
  return cfg;
}

inline nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {
      {"subcommand", subcommand},
      {"d", d},
      {"r", r},
      {"lambda", lambda},
      {"kernel", kernel_json},
      {"window_scale", window_scale},
      {"boundary", to_string(boundary)},
      {"provenance", provenance},
      {"intensity", intensity},
      {"jitter", jitter},
      {"replicates", replicates},
      {"seed", seed},
      {"out", out},
  };
  if (!r_list.empty()) j["r_list"] = r_list;
  if (!lambda_grid.empty()) j["lambda_grid"] = lambda_grid;
  if (!stats_out.empty()) j["stats_out"] = stats_out;
  if (!raw_out.empty()) j["raw_out"] = raw_out;
  if (!spanning_out.empty()) j["spanning_out"] = spanning_out;
  if (subcommand == "renorm" || subcommand == "opnorm") {
    j["L"] = box_L;
    j["m"] = m;
  }
  if (subcommand == "renorm") {
    j["a"] = a;
    j["pilot_replicates"] = pilot_replicates;
    j["grid_nx"] = grid_nx;
    j["grid_ny"] = grid_ny;
  }
  if (subcommand == "opnorm") j["variant"] = variant;
  if (subcommand == "threshold") {
    j["criterion"] = criterion;
    j["theta"] = theta;
    j["tol"] = tol;
    j["lambda_lo"] = lambda_lo;
    j["lambda_hi"] = lambda_hi;
  }
  if (subcommand == "bond") {
    j["p"] = p;
    j["bond_nx"] = bond_nx;
    j["bond_ny"] = bond_ny;
  }
  return j;
}

}  // namespace spread
