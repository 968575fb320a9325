// Acceptance suite: one line per criterion, pass/fail with the measured
// values, nonzero exit if anything fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spread/branching.hpp"
#include "spread/estimate.hpp"
#include "spread/graph.hpp"
#include "spread/io.hpp"
#include "spread/parallel.hpp"
#include "spread/renorm.hpp"
#include "spread/spectral.hpp"
#include "spread/stats.hpp"

using namespace spread;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] %2d. %-28s %s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion_1_branching_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream detail;

  const double psi2 = survival_probability(2.0).psi;
  const double oracle2 = oracles::psi_bisect(2.0);
  pass &= std::abs(psi2 - oracle2) < 1e-9;
  pass &= std::abs(psi2 - 0.796812) < 1e-5;
  pass &= survival_probability(0.5).psi == 0.0;
  pass &= survival_probability(1.0).psi == 0.0;
  double worst_residual = 0;
  for (double lambda = 1.01; lambda <= 10.0 + 1e-9; lambda += 0.01) {
    worst_residual = std::max(worst_residual, survival_probability(lambda).residual);
  }
  pass &= worst_residual < 1e-12;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  pass &= seconds < 1.0;
  detail << "psi(2)=" << fmt(psi2) << " |psi-oracle|=" << fmt(std::abs(psi2 - oracle2))
         << " worst residual=" << fmt(worst_residual) << " time=" << fmt(seconds) << "s";
  report(1, "branching oracle", pass, detail.str());
}

EnsembleParams desk_ensemble(double side, double r, std::size_t replicates,
                             std::uint64_t seed) {
  return EnsembleParams{KernelSpec::ball(2), r, Window::cube(2, side, Boundary::torus),
                        Provenance::poisson(1.0), replicates, seed};
}

void criterion_2_giant_fraction() {
  const auto cmp = gw_comparison(desk_ensemble(64.0, 8.0, 40, 0xACC2), 2.0);
  const double diff = std::abs(cmp.mean_c1_fraction - 0.7968);
  const bool pass = diff < 0.03;
  report(2, "giant fraction vs psi(2)", pass,
         "mean C1/n=" + fmt(cmp.mean_c1_fraction) + " psi=" + fmt(cmp.psi) +
             " |diff|=" + fmt(diff) + " (< 0.03)");
}

void criterion_3_subcritical() {
  const auto params64 = desk_ensemble(64.0, 8.0, 40, 0xACC3);
  const auto params128 = desk_ensemble(128.0, 8.0, 20, 0xACC3 + 1);
  const auto frac_at = [](const EnsembleParams& params) {
    std::vector<double> fracs(params.replicates);
    parallel_for(params.replicates, [&](std::size_t rep) {
      const PointCloud cloud = ensemble_cloud(params, rep);
      const GraphSample gs = ensemble_sample(params, cloud, 0.8, rep);
      const auto st = sample_graph(gs);
      fracs[rep] = st.n > 0 ? double(st.c1) / double(st.n) : 0.0;
    });
    return mean(fracs);
  };
  const double f64 = frac_at(params64);
  const double f128 = frac_at(params128);
  const bool pass = f64 < 0.02 && f128 < f64;
  report(3, "subcritical extinction", pass,
         "mean C1/n side64=" + fmt(f64) + " (< 0.02), side128=" + fmt(f128) +
             " (decreasing)");
}

void criterion_4_threshold_trend() {
  const std::vector<double> r_list{2.0, 4.0, 8.0};
  const auto trend = threshold_trend(KernelSpec::ball(2), r_list, 48.0, 32, 0xACC4,
                                     ThresholdCriterion::wrap(), 0.25, 4.0, 0.01);
  std::ostringstream detail;
  for (const auto& est : trend.estimates) {
    if (est.censored) {
      detail << "r=" << fmt(est.r) << ": > " << fmt(est.lambda_c) << " (censored)  ";
    } else {
      detail << "r=" << fmt(est.r) << ": " << fmt(est.lambda_c) << " [" << fmt(est.ci_lo)
             << "," << fmt(est.ci_hi) << "]  ";
    }
  }
  const auto& last = trend.estimates.back();
  const bool in_interval = !last.censored && last.lambda_c >= 1.0 && last.lambda_c <= 1.35;
  const bool pass = trend.nonincreasing_within_ci.value_or(false) && in_interval;
  detail << "nonincreasing=" << (trend.nonincreasing_within_ci.value_or(false) ? "yes" : "no")
         << " lambda_c(8) in [1.0,1.35]=" << (in_interval ? "yes" : "no");
  if (!in_interval) {
    // cross-check with the secondary (giant-fraction) criterion for context
    const auto params = desk_ensemble(384.0, 8.0, 12, 0xACC4 + 9);
    const auto giant = threshold_bisect(params, ThresholdCriterion::giant(0.05), 0.25, 4.0, 0.01);
    detail << "  [giant theta=0.05 cross-check: " << fmt(giant.lambda_c) << " ["
           << fmt(giant.ci_lo) << "," << fmt(giant.ci_hi) << "]]";
  }
  report(4, "threshold trend", pass, detail.str());
}

void criterion_5_path_counts() {
  // rescaled side 32 at r=4 -> original side 128; U = unit rescaled box
  const auto params = desk_ensemble(128.0, 4.0, 200, 0xACC5);
  const Box origin{{0.0, 0.0}, {4.0, 4.0}};
  const int max_len = 3;
  std::vector<std::vector<double>> counts(max_len + 1,
                                          std::vector<double>(params.replicates, 0.0));
  parallel_for(params.replicates, [&](std::size_t rep) {
    const PointCloud cloud = ensemble_cloud(params, rep);
    const GraphSample gs = ensemble_sample(params, cloud, 0.8, rep);
    const auto c = count_directed_paths(gs, origin, max_len);
    for (int n = 0; n <= max_len; ++n) counts[n][rep] = c[n];
  });
  bool pass = true;
  std::ostringstream detail;
  for (int n = 1; n <= max_len; ++n) {
    const double expected = expected_paths(4.0, 2, 0.8, n);  // 16 * 0.8^n
    const double m = mean(counts[n]);
    const double se = std_error(counts[n]);
    const bool ok = std::abs(m - expected) < 3 * se;
    pass &= ok;
    detail << "n=" << n << ": " << fmt(m) << " vs " << fmt(expected) << " (3se=" << fmt(3 * se)
           << ")  ";
  }
  report(5, "path-count law", pass, detail.str());
}

void criterion_6_operator_norm() {
  const auto k = KernelSpec::ball(2);
  bool pass = true;
  std::ostringstream detail;

  const double torus_norm = operator_norm(OperatorGrid::torus(k, 1.5, 4.0, 64), 1e-10).norm;
  pass &= std::abs(torus_norm - 1.5) < 1e-6;
  detail << "torus |norm-lambda|=" << fmt(std::abs(torus_norm - 1.5));

  double prev = 0;
  bool monotone = true, bounded = true;
  double crossing_norm_small = 0, crossing_norm_large = 0;
  for (int scale : {1, 2, 4}) {
    const double norm =
        operator_norm(OperatorGrid::box(k, 1.5, 4.0 * scale, 32 * scale), 1e-9).norm;
    bounded &= norm <= 1.5 * (1 + 1e-6);
    monotone &= norm >= prev - 1e-7;
    if (scale == 1) crossing_norm_small = norm;
    if (scale == 4) crossing_norm_large = norm;
    prev = norm;
  }
  const double tiny_box = operator_norm(OperatorGrid::box(k, 1.5, 0.75, 16), 1e-9).norm;
  pass &= bounded && monotone;
  pass &= tiny_box < 1.0 && crossing_norm_large > 1.0;  // crossing at finite L
  detail << " box bounded=" << (bounded ? "yes" : "no")
         << " nondecreasing=" << (monotone ? "yes" : "no") << " norm(L=0.75)=" << fmt(tiny_box)
         << " norm(L=16)=" << fmt(crossing_norm_large);

  bool rejected = false;
  try {
    minimal_supercritical_L(k, 1.0, 0.01);
  } catch (const InvalidArgumentError&) {
    rejected = true;
  }
  pass &= rejected;
  detail << " lambda<=1 rejected=" << (rejected ? "yes" : "no")
         << " (small=" << fmt(crossing_norm_small) << ")";
  report(6, "operator norm", pass, detail.str());
}

void criterion_7_mean_degree() {
  const auto k = KernelSpec::ball(2);
  bool pass = true;
  std::ostringstream detail;
  {
    const auto params = desk_ensemble(64.0, 8.0, 30, 0xACC7);
    std::vector<double> degrees(params.replicates);
    parallel_for(params.replicates, [&](std::size_t rep) {
      const PointCloud cloud = ensemble_cloud(params, rep);
      GraphSample gs = ensemble_sample(params, cloud, 2.0, rep);
      degrees[rep] = mean_degree_expected(gs);
    });
    const double m = mean(degrees);
    const double se = std_error(degrees);
    pass &= std::abs(m - 2.0) < 3 * se + 1e-3;
    detail << "r=8 lambda=2: " << fmt(m) << " (3se=" << fmt(3 * se) << ")";
  }
  {
    // clamping binds at r=2 once lambda r^-d > 1; lambda = 5 gives p = 1.25 -> 1
    const auto params = desk_ensemble(64.0, 2.0, 30, 0xACC7 + 1);
    std::vector<double> degrees(params.replicates);
    parallel_for(params.replicates, [&](std::size_t rep) {
      const PointCloud cloud = ensemble_cloud(params, rep);
      GraphSample gs = ensemble_sample(params, cloud, 5.0, rep);
      degrees[rep] = mean_degree_expected(gs);
    });
    const double m = mean(degrees);
    pass &= m < 5.0 - 0.5;
    detail << "  clamped r=2 lambda=5: " << fmt(m) << " (< 4.5)";
  }
  report(7, "mean degree -> lambda", pass, detail.str());
}

void criterion_8_small_instance() {
  const auto k = KernelSpec::ball(2);
  PointCloud cloud;
  cloud.dim = 2;
  cloud.window = Window::cube(2, 4.0, Boundary::free);
  cloud.coords = {0.5, 0.5, 0.8, 0.6, 0.6, 0.9, 1.3, 1.3, 1.5, 1.1, 1.05, 0.95};
  const double lambda = 0.6, r = 1.0;
  const auto law = oracles::enumerate_c1c2(cloud, k, lambda, r);
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  std::vector<double> expected;
  for (const auto& [key, w] : law) {
    cells.push_back(key);
    expected.push_back(w);
  }
  const int reps = 100000;
  std::vector<std::size_t> observed(cells.size(), 0);
  bool support_ok = true;
  std::vector<std::size_t> per_thread_hits(reps, 0);
  std::vector<std::uint32_t> outcome(reps, 0);
  parallel_for(reps, [&](std::size_t rep) {
    GraphSample gs{&cloud, &k, lambda, r, replicate_key(0xACC8, stream_tag::edges, rep),
                   Coupling::monotone};
    const auto st = sample_graph(gs);
    const auto it = std::find(cells.begin(), cells.end(), std::make_pair(st.c1, st.c2));
    outcome[rep] =
        it == cells.end() ? std::numeric_limits<std::uint32_t>::max()
                          : static_cast<std::uint32_t>(it - cells.begin());
  });
  for (int rep = 0; rep < reps; ++rep) {
    if (outcome[rep] == std::numeric_limits<std::uint32_t>::max()) {
      support_ok = false;
    } else {
      ++observed[outcome[rep]];
    }
  }
  std::vector<double> expected_counts;
  for (double w : expected) expected_counts.push_back(w * reps);
  const double p = oracles::chi_square_p(observed, expected_counts);
  const bool pass = support_ok && p > 0.01;
  report(8, "small-instance equivalence", pass,
         "chi-square p=" + fmt(p) + " over " + std::to_string(cells.size()) +
             " outcomes, 1e5 samples");
}

void criterion_9_renormalization() {
  const auto k = KernelSpec::ball(2);
  bool pass = true;
  std::ostringstream detail;

  // good-event probability rises from r=4 to r=8 at lambda=2
  const double L = 4.0;
  const double a = calibrate_component_threshold(k, 2.0, 4.0, L, 50, 0xACC9);
  const auto p4 = estimate_good_probability(k, 2.0, 4.0, L, a, 200, 0xACC9 + 1);
  const auto p8 = estimate_good_probability(k, 2.0, 8.0, L, a, 200, 0xACC9 + 2);
  const double pooled =
      double(p4.successes + p8.successes) / double(p4.replicates + p8.replicates);
  const double z = (p8.p_hat - p4.p_hat) /
                   std::sqrt(pooled * (1 - pooled) * (1.0 / 200 + 1.0 / 200) + 1e-300);
  const bool grows = p8.p_hat > p4.p_hat && z > 1.645;  // one-sided 95%
  pass &= grows;
  pass &= p8.p_hat > 0.8639;  // the 1-independent product-measure benchmark is attainable
  detail << "p_good r=4: " << fmt(p4.p_hat) << ", r=8: " << fmt(p8.p_hat) << " (z=" << fmt(z)
         << ", p_0(1)=0.8639 attained=" << (p8.p_hat > 0.8639 ? "yes" : "no") << ")";

  // derived bond field: distance-(d+1) bonds uncorrelated
  {
    const double r = 4.0, lambda = 2.0, rho = 16.0;
    const BoxGrid grid(2, L, 8, 8);
    const Window window = scale_window(grid, r);
    const GoodEventConfig cfg(a, rho);
    const int reps = 150;
    std::vector<double> b_near(reps), b_far(reps), b_adj(reps);
    parallel_for(reps, [&](std::size_t rep) {
      const auto cloud =
          sample_poisson(window, 1.0, replicate_stream(0xACC9 + 3, stream_tag::points, rep));
      GraphSample gs{&cloud, &k, lambda, r,
                     replicate_key(0xACC9 + 3, stream_tag::edges, rep), Coupling::monotone};
      const auto bonds = derived_bond_field(gs, grid, cfg);
      b_near[rep] = bonds.h(0, 0);
      b_adj[rep] = bonds.h(1, 0);
      b_far[rep] = bonds.h(5, 0);
    });
    const double corr_far = sample_correlation(b_near, b_far);
    const bool independent = std::abs(corr_far) < 3.0 / std::sqrt(double(reps));
    pass &= independent;
    detail << "  far-bond corr=" << fmt(corr_far) << " (3sigma=" << fmt(3.0 / std::sqrt(150.0))
           << ")";
  }

  // iid baseline at the p_0(1) level vs deep subcritical
  {
    int high = 0, low = 0;
    const int reps = 500;
    std::vector<char> high_hits(reps, 0), low_hits(reps, 0);
    parallel_for(reps, [&](std::size_t rep) {
      high_hits[rep] = spanning_exists(
          iid_bond_sample(0.8639, 64, 64, replicate_stream(0xACC9 + 4, stream_tag::bonds, rep)),
          0);
      low_hits[rep] = spanning_exists(
          iid_bond_sample(0.30, 64, 64, replicate_stream(0xACC9 + 5, stream_tag::bonds, rep)),
          0);
    });
    for (int rep = 0; rep < reps; ++rep) {
      high += high_hits[rep];
      low += low_hits[rep];
    }
    const double fh = double(high) / reps, fl = double(low) / reps;
    pass &= fh > 0.99 && fl < 0.01;
    detail << "  crossing at p=0.8639: " << fmt(fh) << ", at p=0.3: " << fmt(fl);
  }
  report(9, "renormalization layer", pass, detail.str());
}

void criterion_10_determinism() {
#ifndef SPREADPERC_BIN
  report(10, "determinism", false, "tool path not wired into the build");
#else
  const std::string bin = SPREADPERC_BIN;
  const std::string dir = "acceptance_tmp";
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
  const auto run = [&](const std::string& threads, const std::string& out) {
    const std::string cmd = "cd " + dir + " && SPREAD_THREADS=" + threads + " " + bin +
                            " sweep --d 2 --r 2 --window-scale 12 --replicates 6" +
                            " --lambda-grid 0.5,1.0,1.5,2.0 --seed 7 --out " + out +
                            " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  bool pass = run("1", "a.csv") == 0 && run("4", "b.csv") == 0 && run("2", "c.csv") == 0;
  std::string a, b, c;
  if (pass) {
    a = read_text_file(dir + "/a.csv");
    b = read_text_file(dir + "/b.csv");
    c = read_text_file(dir + "/c.csv");
    pass = !a.empty() && a == b && b == c;
  }
  // gw CSV value check through the tool
  bool gw_ok = false;
  if (std::system(("cd " + dir + " && " + bin + " gw --lambda 2 --out gw.csv > /dev/null 2>&1")
                      .c_str()) == 0) {
    const std::string csv = read_text_file(dir + "/gw.csv");
    gw_ok = csv.find("0.796812") != std::string::npos;
  }
  pass &= gw_ok;
  // exit codes: 1 for config errors, 2 for numerical errors
  const auto exit_of = [&](const std::string& args) {
    const int status =
        std::system(("cd " + dir + " && " + bin + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  const bool codes_ok =
      exit_of("sweep --d 0 --out x.csv") == 1 &&
      exit_of("threshold --r-list 8 --window-scale 6 --replicates 4 --lambda-lo 3 "
              "--lambda-hi 4 --seed 3 --out x.csv") == 2;
  pass &= codes_ok;
  std::system(("rm -rf " + dir).c_str());
  report(10, "determinism", pass,
         std::string("byte-identical across SPREAD_THREADS in {1,2,4}: ") +
             (pass ? "yes" : "no") + ", gw CSV psi ok: " + std::string(gw_ok ? "yes" : "no") +
             ", exit codes ok: " + (codes_ok ? "yes" : "no"));
#endif
}

}  // namespace

int main() {
  std::printf("acceptance suite (d=2 ball kernel desk-scale targets)\n");
  criterion_1_branching_oracle();
  criterion_2_giant_fraction();
  criterion_3_subcritical();
  criterion_4_threshold_trend();
  criterion_5_path_counts();
  criterion_6_operator_norm();
  criterion_7_mean_degree();
  criterion_8_small_instance();
  criterion_9_renormalization();
  criterion_10_determinism();
  if (failures > 0) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
