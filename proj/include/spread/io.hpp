#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "spread/error.hpp"
#include "spread/geometry.hpp"
#include "spread/kernel.hpp"

namespace spread {

// Shortest round-trip decimal form; the frozen format behind byte-identical
// output guarantees.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline void write_point_cloud_csv(std::ostream& os, const PointCloud& cloud) {
  os << "id";
  for (std::size_t k = 0; k < cloud.dim; ++k) os << ",x" << k;
  os << "\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    os << i;
    const auto p = cloud.point(i);
    for (std::size_t k = 0; k < cloud.dim; ++k) os << "," << format_double(p[k]);
    os << "\n";
  }
}

inline nlohmann::json window_to_json(const Window& w) {
  return {{"sides", w.sides}, {"lo", w.lo}, {"boundary", to_string(w.boundary)}};
}

inline nlohmann::json cloud_metadata(const PointCloud& cloud) {
  nlohmann::json meta = {
      {"window", window_to_json(cloud.window)},
      {"provenance", to_string(cloud.provenance.kind)},
      {"seed", cloud.seed},
      {"points", cloud.size()},
  };
  if (cloud.provenance.kind == Provenance::Kind::poisson) {
    meta["intensity"] = cloud.provenance.param;
  } else if (cloud.provenance.kind == Provenance::Kind::jittered) {
    meta["jitter_bound"] = cloud.provenance.param;
  }
  return meta;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
}

// Two-column CSV (radius,value), optional header line.
inline std::pair<std::vector<double>, std::vector<double>> load_radial_table_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open radial table: " + path);
  std::vector<double> knots, values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InvalidConfigError("radial table line " + std::to_string(lineno) +
                               ": expected radius,value");
    }
    try {
      knots.push_back(std::stod(line.substr(0, comma)));
      values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      if (lineno == 1) {  // header
        knots.clear();
        values.clear();
        continue;
      }
      throw InvalidConfigError("radial table line " + std::to_string(lineno) +
                               ": cannot parse numbers");
    }
  }
  return {std::move(knots), std::move(values)};
}

// Kernel description as it appears in config files: {shape, parameters, d}.
inline KernelSpec kernel_from_json(const nlohmann::json& j, std::size_t d) {
  const std::string shape = j.value("shape", "ball");
  if (shape == "ball") return KernelSpec::ball(d);
  if (shape == "annulus") {
    if (!j.contains("inner") || !j.contains("outer")) {
      throw InvalidConfigError("annulus kernel: need inner and outer");
    }
    return KernelSpec::annulus(d, j["inner"].get<double>(), j["outer"].get<double>());
  }
  if (shape == "table") {
    if (j.contains("path")) {
      auto [knots, values] = load_radial_table_csv(j["path"].get<std::string>());
      if (j.contains("constant")) {
        return KernelSpec::radial_table(d, knots, values, j["constant"].get<double>());
      }
      return KernelSpec::radial_table(d, knots, values);
    }
    if (j.contains("knots") && j.contains("values")) {
      auto knots = j["knots"].get<std::vector<double>>();
      auto values = j["values"].get<std::vector<double>>();
      if (j.contains("constant")) {
        return KernelSpec::radial_table(d, knots, values, j["constant"].get<double>());
      }
      return KernelSpec::radial_table(d, knots, values);
    }
    throw InvalidConfigError("table kernel: need path or knots/values");
  }
  throw InvalidConfigError("unknown kernel shape: " + shape);
}

inline nlohmann::json kernel_to_json(const KernelSpec& spec) {
  nlohmann::json j = {{"shape", to_string(spec.shape())},
                      {"d", spec.dim()},
                      {"truncation_radius", spec.truncation_radius()},
                      {"normalization_constant", spec.normalization_constant()}};
  return j;
}

}  // namespace spread
