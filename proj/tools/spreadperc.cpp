// Experiment driver for the spread-out percolation toolkit: subcommand
// dispatch, seed management, CSV emission with JSON metadata sidecars.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "spread/branching.hpp"
#include "spread/config.hpp"
#include "spread/error.hpp"
#include "spread/estimate.hpp"
#include "spread/geometry.hpp"
#include "spread/graph.hpp"
#include "spread/io.hpp"
#include "spread/renorm.hpp"
#include "spread/rng.hpp"
#include "spread/spectral.hpp"

namespace {

using nlohmann::json;

void write_sidecar(const spread::RunConfig& cfg, const std::vector<std::string>& outputs,
                   const json& extra = json::object()) {
  json meta = {
      {"tool", "spreadperc"},
      {"version", spread::kToolVersion},
      {"subcommand", cfg.subcommand},
      {"config", cfg.to_json()},
      {"seed", cfg.seed},
      {"outputs", outputs},
  };
  for (const auto& [key, value] : extra.items()) meta[key] = value;
  spread::write_text_file(cfg.out + ".meta.json", meta.dump(2) + "\n");
}

spread::PointCloud make_cloud(const spread::RunConfig& cfg, std::size_t replicate) {
  const spread::Window window = cfg.window();
  auto stream = spread::replicate_stream(cfg.seed, spread::stream_tag::points, replicate);
  if (cfg.provenance == "poisson") return spread::sample_poisson(window, cfg.intensity, stream);
  if (cfg.provenance == "lattice") return spread::lattice_points(window);
  return spread::jittered_lattice(window, cfg.jitter, stream);
}

void append_stats_row(std::ostream& os, std::size_t replicate, const spread::RunConfig& cfg,
                      double lambda, std::size_t n, std::size_t c1, std::size_t c2,
                      std::size_t components, bool wrap_any) {
  os << replicate << "," << cfg.d << "," << spread::format_double(cfg.r) << ","
     << spread::format_double(lambda) << "," << n << "," << c1 << "," << c2 << ","
     << components << "," << (wrap_any ? 1 : 0) << "\n";
}

int run_sample_cmd(spread::RunConfig& cfg) {
  if (cfg.out.empty()) cfg.out = "cloud.csv";
  const spread::PointCloud cloud = make_cloud(cfg, 0);
  std::ostringstream csv;
  spread::write_point_cloud_csv(csv, cloud);
  spread::write_text_file(cfg.out, csv.str());
  std::vector<std::string> outputs = {cfg.out};
  if (!cfg.stats_out.empty()) {
    const spread::KernelSpec kernel = cfg.kernel();
    spread::GraphSample gs{&cloud, &kernel, cfg.lambda, cfg.r,
                           spread::replicate_key(cfg.seed, spread::stream_tag::edges, 0),
                           spread::Coupling::monotone};
    const auto stats = spread::sample_graph(gs);
    std::ostringstream stats_csv;
    stats_csv << "replicate,d,r,lambda,n,C1,C2,components,wrap_any\n";
    append_stats_row(stats_csv, 0, cfg, cfg.lambda, stats.n, stats.c1, stats.c2,
                     stats.component_count, stats.wrap_any());
    spread::write_text_file(cfg.stats_out, stats_csv.str());
    outputs.push_back(cfg.stats_out);
  }
  write_sidecar(cfg, outputs, json{{"cloud", spread::cloud_metadata(cloud)}});
  return 0;
}

int run_sweep_cmd(spread::RunConfig& cfg) {
  if (cfg.out.empty()) cfg.out = "sweep.csv";
  if (cfg.lambda_grid.empty()) {
    for (double l = 0.25; l <= 3.0 + 1e-12; l += 0.25) cfg.lambda_grid.push_back(l);
  }
  spread::EnsembleParams params{cfg.kernel(), cfg.r, cfg.window(),
                                cfg.provenance == "poisson"
                                    ? spread::Provenance::poisson(cfg.intensity)
                                    : (cfg.provenance == "lattice"
                                           ? spread::Provenance::lattice()
                                           : spread::Provenance::jittered(cfg.jitter)),
                                cfg.replicates, cfg.seed};
  const auto result = spread::sweep_table(params, cfg.lambda_grid);
  std::ostringstream csv;
  csv << "lambda,c1_frac_mean,c2_frac_mean,ci_lo,ci_hi\n";
  for (const auto& row : result.rows) {
    csv << spread::format_double(row.lambda) << "," << spread::format_double(row.c1_frac_mean)
        << "," << spread::format_double(row.c2_frac_mean) << ","
        << spread::format_double(row.ci_lo) << "," << spread::format_double(row.ci_hi) << "\n";
  }
  spread::write_text_file(cfg.out, csv.str());
  std::vector<std::string> outputs = {cfg.out};
  if (!cfg.raw_out.empty()) {
    std::ostringstream raw;
    raw << "replicate,d,r,lambda,n,C1,C2,components,wrap_any\n";
    for (const auto& rec : result.raw) {
      append_stats_row(raw, rec.replicate, cfg, rec.lambda, rec.n, rec.c1, rec.c2,
                       rec.components, rec.wrap_any);
    }
    spread::write_text_file(cfg.raw_out, raw.str());
    outputs.push_back(cfg.raw_out);
  }
  write_sidecar(cfg, outputs);
  return 0;
}

int run_threshold_cmd(spread::RunConfig& cfg) {
  if (cfg.out.empty()) cfg.out = "threshold.csv";
  const spread::KernelSpec kernel = cfg.kernel();
  const auto criterion = cfg.criterion == "wrap"
                             ? spread::ThresholdCriterion::wrap()
                             : spread::ThresholdCriterion::giant(cfg.theta);
  const auto report = spread::threshold_trend(kernel, cfg.r_list, cfg.window_scale,
                                              cfg.replicates, cfg.seed, criterion,
                                              cfg.lambda_lo, cfg.lambda_hi, cfg.tol);
  std::ostringstream csv;
  csv << "r,lambda_c,ci_lo,ci_hi,criterion\n";
  for (const auto& est : report.estimates) {
    csv << spread::format_double(est.r) << "," << spread::format_double(est.lambda_c) << ","
        << spread::format_double(est.ci_lo) << "," << spread::format_double(est.ci_hi) << ","
        << est.criterion.name() << "\n";
  }
  spread::write_text_file(cfg.out, csv.str());
  write_sidecar(cfg, {cfg.out});
  if (report.nonincreasing_within_ci.has_value()) {
    std::cout << "trend nonincreasing within CIs: "
              << (*report.nonincreasing_within_ci ? "yes" : "no")
              << ", last |lambda_c - 1| = "
              << spread::format_double(report.last_distance_to_one) << "\n";
  }
  return 0;
}

int run_gw_cmd(spread::RunConfig& cfg) {
  if (cfg.out.empty()) cfg.out = "gw.csv";
  std::vector<double> lambdas = cfg.lambda_grid;
  if (lambdas.empty()) lambdas = {cfg.lambda};
  std::ostringstream csv;
  csv << "lambda,psi,residual\n";
  for (double l : lambdas) {
    const auto res = spread::survival_probability(l);
    csv << spread::format_double(res.lambda) << "," << spread::format_double(res.psi) << ","
        << spread::format_double(res.residual) << "\n";
  }
  spread::write_text_file(cfg.out, csv.str());
  write_sidecar(cfg, {cfg.out});
  return 0;
}

int run_opnorm_cmd(spread::RunConfig& cfg) {
  if (cfg.out.empty()) cfg.out = "opnorm.csv";
  const spread::KernelSpec kernel = cfg.kernel();
  spread::OperatorGrid grid =
      cfg.variant == "torus"
          ? spread::OperatorGrid::torus(kernel, cfg.lambda, cfg.box_L, cfg.m)
          : (cfg.variant == "double"
                 ? spread::OperatorGrid::double_box(kernel, cfg.lambda, cfg.box_L, cfg.m)
                 : spread::OperatorGrid::box(kernel, cfg.lambda, cfg.box_L, cfg.m));
  const auto result = spread::operator_norm(grid, cfg.tol > 0 ? std::min(cfg.tol, 1e-6) : 1e-9);
  std::ostringstream csv;
  csv << "d,lambda,L,m,norm,iterations\n";
  csv << cfg.d << "," << spread::format_double(cfg.lambda) << ","
      << spread::format_double(cfg.box_L) << "," << cfg.m << ","
      << spread::format_double(result.norm) << "," << result.iterations << "\n";
  spread::write_text_file(cfg.out, csv.str());
  write_sidecar(cfg, {cfg.out});
  return 0;
}

int run_renorm_cmd(spread::RunConfig& cfg) {
  if (cfg.out.empty()) cfg.out = "renorm.csv";
  const spread::KernelSpec kernel = cfg.kernel();
  double a = cfg.a;
  if (!(a > 0)) {
    a = spread::calibrate_component_threshold(kernel, cfg.lambda, cfg.r, cfg.box_L,
                                              cfg.pilot_replicates, cfg.seed);
    cfg.a = a;  // echoed to the sidecar
  }
  const auto est = spread::estimate_good_probability(kernel, cfg.lambda, cfg.r, cfg.box_L, a,
                                                     cfg.replicates, cfg.seed);
  std::ostringstream csv;
  csv << "r,lambda,L,a,p_good,ci_lo,ci_hi\n";
  csv << spread::format_double(cfg.r) << "," << spread::format_double(cfg.lambda) << ","
      << spread::format_double(cfg.box_L) << "," << spread::format_double(a) << ","
      << spread::format_double(est.p_hat) << "," << spread::format_double(est.ci.lo) << ","
      << spread::format_double(est.ci.hi) << "\n";
  spread::write_text_file(cfg.out, csv.str());
  std::vector<std::string> outputs = {cfg.out};
  if (!cfg.spanning_out.empty()) {
    const double rho = std::pow(cfg.r, static_cast<double>(cfg.d));
    const spread::BoxGrid grid(cfg.d, cfg.box_L, cfg.grid_nx, cfg.grid_ny);
    const spread::GoodEventConfig gcfg(a, rho);
    std::vector<double> sides(cfg.d, cfg.box_L * cfg.r);
    sides[0] = static_cast<double>(cfg.grid_nx) * cfg.box_L * cfg.r;
    sides[1] = static_cast<double>(cfg.grid_ny) * cfg.box_L * cfg.r;
    const spread::Window window(sides, spread::Boundary::free);
    std::ostringstream span;
    span << "replicate,spanning\n";
    for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
      const auto cloud = spread::sample_poisson(
          window, 1.0, spread::replicate_stream(cfg.seed, spread::stream_tag::points, rep));
      spread::GraphSample gs{&cloud, &kernel, cfg.lambda, cfg.r,
                             spread::replicate_key(cfg.seed, spread::stream_tag::edges, rep),
                             spread::Coupling::monotone};
      const auto bonds = spread::derived_bond_field(gs, grid, gcfg);
      span << rep << "," << (spread::spanning_exists(bonds, 0) ? 1 : 0) << "\n";
    }
    spread::write_text_file(cfg.spanning_out, span.str());
    outputs.push_back(cfg.spanning_out);
  }
  write_sidecar(cfg, outputs);
  return 0;
}

int run_bond_cmd(spread::RunConfig& cfg) {
  if (cfg.out.empty()) cfg.out = "bond.csv";
  std::ostringstream csv;
  csv << "replicate,spanning\n";
  std::size_t crossings = 0;
  for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
    const auto bonds = spread::iid_bond_sample(
        cfg.p, cfg.bond_nx, cfg.bond_ny,
        spread::replicate_stream(cfg.seed, spread::stream_tag::bonds, rep));
    const bool span = spread::spanning_exists(bonds, 0);
    crossings += span ? 1 : 0;
    csv << rep << "," << (span ? 1 : 0) << "\n";
  }
  spread::write_text_file(cfg.out, csv.str());
  write_sidecar(cfg, {cfg.out});
  std::cout << "crossing frequency: "
            << spread::format_double(static_cast<double>(crossings) /
                                     static_cast<double>(cfg.replicates))
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spread-out percolation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  json flags;  // only explicitly-set flags land here, overriding the file

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option_function<long long>("--d", [&](long long v) { flags["d"] = v; });
    sub->add_option_function<double>("--r", [&](double v) { flags["r"] = v; });
    sub->add_option_function<double>("--lambda", [&](double v) { flags["lambda"] = v; });
    sub->add_option_function<std::string>(
        "--kernel", [&](std::string v) { flags["kernel"] = json{{"shape", v}}; },
        "kernel shape (ball; use a config file for annulus/table parameters)");
    sub->add_option_function<double>("--window-scale",
                                     [&](double v) { flags["window_scale"] = v; });
    sub->add_option_function<std::string>("--boundary",
                                          [&](std::string v) { flags["boundary"] = v; });
    sub->add_option_function<long long>("--replicates",
                                        [&](long long v) { flags["replicates"] = v; });
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { flags["seed"] = v; });
    sub->add_option_function<std::string>("--out", [&](std::string v) { flags["out"] = v; });
  };

  auto* sample = app.add_subcommand("sample", "generate a point cloud (CSV + metadata)");
  add_common(sample);
  sample->add_option_function<std::string>("--provenance",
                                           [&](std::string v) { flags["provenance"] = v; });
  sample->add_option_function<double>("--intensity", [&](double v) { flags["intensity"] = v; });
  sample->add_option_function<double>("--jitter", [&](double v) { flags["jitter"] = v; });
  sample->add_option_function<std::string>("--stats-out",
                                           [&](std::string v) { flags["stats_out"] = v; });

  auto* sweep = app.add_subcommand("sweep", "giant-component curve over a lambda grid");
  add_common(sweep);
  sweep->add_option_function<std::vector<double>>(
      "--lambda-grid", [&](std::vector<double> v) { flags["lambda_grid"] = v; })
      ->delimiter(',');
  sweep->add_option_function<std::string>("--raw-out",
                                          [&](std::string v) { flags["raw_out"] = v; });

  auto* threshold = app.add_subcommand("threshold", "threshold estimates over an r list");
  add_common(threshold);
  threshold->add_option_function<std::vector<double>>(
      "--r-list", [&](std::vector<double> v) { flags["r_list"] = v; })
      ->delimiter(',');
  threshold->add_option_function<std::string>("--criterion",
                                              [&](std::string v) { flags["criterion"] = v; });
  threshold->add_option_function<double>("--theta", [&](double v) { flags["theta"] = v; });
  threshold->add_option_function<double>("--tol", [&](double v) { flags["tol"] = v; });
  threshold->add_option_function<double>("--lambda-lo", [&](double v) { flags["lambda_lo"] = v; });
  threshold->add_option_function<double>("--lambda-hi", [&](double v) { flags["lambda_hi"] = v; });

  auto* gw = app.add_subcommand("gw", "Galton-Watson survival probabilities");
  gw->add_option("--config", config_path, "JSON config file");
  gw->add_option_function<double>("--lambda", [&](double v) { flags["lambda"] = v; });
  gw->add_option_function<std::vector<double>>(
      "--lambda-grid", [&](std::vector<double> v) { flags["lambda_grid"] = v; })
      ->delimiter(',');
  gw->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { flags["seed"] = v; });
  gw->add_option_function<std::string>("--out", [&](std::string v) { flags["out"] = v; });

  auto* opnorm = app.add_subcommand("opnorm", "integral-operator norm on a box");
  opnorm->add_option("--config", config_path, "JSON config file");
  opnorm->add_option_function<long long>("--d", [&](long long v) { flags["d"] = v; });
  opnorm->add_option_function<double>("--lambda", [&](double v) { flags["lambda"] = v; });
  opnorm->add_option_function<std::string>(
      "--kernel", [&](std::string v) { flags["kernel"] = json{{"shape", v}}; });
  opnorm->add_option_function<double>("--L", [&](double v) { flags["L"] = v; });
  opnorm->add_option_function<long long>("--m", [&](long long v) { flags["m"] = v; });
  opnorm->add_option_function<std::string>("--variant",
                                           [&](std::string v) { flags["variant"] = v; });
  opnorm->add_option_function<double>("--tol", [&](double v) { flags["tol"] = v; });
  opnorm->add_option_function<std::uint64_t>("--seed",
                                             [&](std::uint64_t v) { flags["seed"] = v; });
  opnorm->add_option_function<std::string>("--out", [&](std::string v) { flags["out"] = v; });

  auto* renorm = app.add_subcommand("renorm", "good-event probability and derived bond field");
  add_common(renorm);
  renorm->add_option_function<double>("--L", [&](double v) { flags["L"] = v; });
  renorm->add_option_function<double>("--a", [&](double v) { flags["a"] = v; });
  renorm->add_option_function<long long>("--pilot-replicates",
                                         [&](long long v) { flags["pilot_replicates"] = v; });
  renorm->add_option_function<long long>("--grid-nx", [&](long long v) { flags["grid_nx"] = v; });
  renorm->add_option_function<long long>("--grid-ny", [&](long long v) { flags["grid_ny"] = v; });
  renorm->add_option_function<std::string>("--spanning-out",
                                           [&](std::string v) { flags["spanning_out"] = v; });

  auto* bond = app.add_subcommand("bond", "iid bond percolation crossing runs");
  bond->add_option("--config", config_path, "JSON config file");
  bond->add_option_function<double>("--p", [&](double v) { flags["p"] = v; });
  bond->add_option_function<long long>("--bond-nx", [&](long long v) { flags["bond_nx"] = v; });
  bond->add_option_function<long long>("--bond-ny", [&](long long v) { flags["bond_ny"] = v; });
  bond->add_option_function<long long>("--replicates",
                                       [&](long long v) { flags["replicates"] = v; });
  bond->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { flags["seed"] = v; });
  bond->add_option_function<std::string>("--out", [&](std::string v) { flags["out"] = v; });

  CLI11_PARSE(app, argc, argv);

  try {
    json merged = json::object();
    if (!config_path.empty()) {
      merged = json::parse(spread::read_text_file(config_path));
      if (!merged.is_object()) throw spread::InvalidConfigError("config file must hold an object");
    }
    for (const auto& [key, value] : flags.items()) merged[key] = value;

    const std::string subcommand = app.get_subcommands().front()->get_name();
    spread::RunConfig cfg = spread::parse_config(merged, subcommand);
    if (cfg.d == 1 && subcommand != "gw" && subcommand != "bond") {
      std::cerr << "note: d = 1 is outside the model's hypotheses (d >= 2); "
                   "allowed for testing only\n";
    }

    if (subcommand == "sample") return run_sample_cmd(cfg);
    if (subcommand == "sweep") return run_sweep_cmd(cfg);
    if (subcommand == "threshold") return run_threshold_cmd(cfg);
    if (subcommand == "gw") return run_gw_cmd(cfg);
    if (subcommand == "opnorm") return run_opnorm_cmd(cfg);
    if (subcommand == "renorm") return run_renorm_cmd(cfg);
    if (subcommand == "bond") return run_bond_cmd(cfg);
    std::cerr << "unknown subcommand\n";
    return 1;
  } catch (const spread::ConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const spread::BracketError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const spread::NotNormalizedError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const spread::InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const spread::InvalidArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
