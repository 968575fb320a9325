#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spread/branching.hpp"
#include "spread/error.hpp"
#include "spread/geometry.hpp"
#include "spread/graph.hpp"
#include "spread/parallel.hpp"
#include "spread/rng.hpp"
#include "spread/stats.hpp"

namespace spread {

// Shared Monte Carlo ensemble: one cloud per replicate (keyed by the master
// seed), monotone-coupled edges on top of it.
struct EnsembleParams {
  KernelSpec spec;
  double r = 1;
  Window window;
  Provenance provenance = Provenance::poisson(1.0);
  std::size_t replicates = 32;
  std::uint64_t master_seed = 0;
};

inline PointCloud ensemble_cloud(const EnsembleParams& params, std::size_t replicate) {
  auto stream = replicate_stream(params.master_seed, stream_tag::points, replicate);
  switch (params.provenance.kind) {
    case Provenance::Kind::poisson:
      return sample_poisson(params.window, params.provenance.param, stream);
    case Provenance::Kind::lattice:
      return lattice_points(params.window);
    case Provenance::Kind::jittered:
    default:
      return jittered_lattice(params.window, params.provenance.param, stream);
  }
}

inline GraphSample ensemble_sample(const EnsembleParams& params, const PointCloud& cloud,
                                   double lambda, std::size_t replicate) {
  return GraphSample{&cloud, &params.spec, lambda, params.r,
                     replicate_key(params.master_seed, stream_tag::edges, replicate),
                     Coupling::monotone};
}

struct GiantCurveRow {
  double lambda = 0;
  double c1_frac_mean = 0;
  double c2_frac_mean = 0;
  double ci_lo = 0, ci_hi = 0;  // normal CI on the C1 fraction mean
};

namespace estimate_detail {

struct SweepPoint {
  std::size_t c1 = 0, c2 = 0;
  std::size_t components = 0;
  bool wrap_any = false;
};

// Replays the monotone edge filtration through the checkpoint lambdas; edge
// open at lambda iff its critical value < lambda, matching direct sampling.
inline std::vector<SweepPoint> sweep_checkpoints(const GraphSample& gs,
                                                 std::span<const double> lambdas) {
  const PointCloud& cloud = *gs.cloud;
  const std::size_t n = cloud.size();
  const std::size_t d = cloud.dim;
  std::vector<SweepPoint> out(lambdas.size());
  if (lambdas.empty() || n == 0) return out;
  const double lambda_max = lambdas.back();
  std::vector<EdgeEvent> events =
      lambda_max > 0 ? edge_filtration(gs, lambda_max) : std::vector<EdgeEvent>{};
  OffsetUnionFind uf(n, d);
  bool wrapped = false;
  std::size_t components = n;
  std::vector<double> delta(d);
  std::size_t next_event = 0;
  for (std::size_t g = 0; g < lambdas.size(); ++g) {
    while (next_event < events.size() && events[next_event].lambda < lambdas[g]) {
      const auto& ev = events[next_event++];
      displacement_into(cloud.point(ev.i), cloud.point(ev.j), cloud.window, delta);
      const auto result = uf.unite(ev.i, ev.j, delta, cloud.window.sides);
      if (result.merged) --components;
      if (result.wrap_mask != 0) wrapped = true;
    }
    std::size_t best = 0, second = 0;
    for (std::uint32_t x = 0; x < n; ++x) {
      if (!uf.is_root(x)) continue;
      const std::size_t sz = uf.component_size(x);
      if (sz > best) {
        second = best;
        best = sz;
      } else if (sz > second) {
        second = sz;
      }
    }
    out[g] = {best, second, components, wrapped};
  }
  return out;
}

// Critical lambda of the first wrapping union, +inf if none occurs up to
// lambda_max.  The graph wraps at lambda iff this value is < lambda.
inline double wrap_critical_lambda(const GraphSample& gs, double lambda_max) {
  const PointCloud& cloud = *gs.cloud;
  if (cloud.window.boundary != Boundary::torus) {
    throw InvalidConfigError("wrap criterion needs a torus window");
  }
  const std::size_t n = cloud.size();
  if (n == 0) return std::numeric_limits<double>::infinity();
  const auto events = edge_filtration(gs, lambda_max);
  OffsetUnionFind uf(n, cloud.dim);
  std::vector<double> delta(cloud.dim);
  for (const auto& ev : events) {
    displacement_into(cloud.point(ev.i), cloud.point(ev.j), cloud.window, delta);
    if (uf.unite(ev.i, ev.j, delta, cloud.window.sides).wrap_mask != 0) return ev.lambda;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace estimate_detail

// One ComponentStats-style record per (replicate, lambda).
struct SweepRawRecord {
  std::size_t replicate = 0;
  double lambda = 0;
  std::size_t n = 0, c1 = 0, c2 = 0, components = 0;
  bool wrap_any = false;
};

struct SweepResult {
  std::vector<GiantCurveRow> rows;
  std::vector<SweepRawRecord> raw;  // replicate-major, lambda-minor
};

// Component fractions over the ensemble along an increasing lambda grid;
// per-replicate curves are monotone in lambda by the coupling.
inline SweepResult sweep_table(const EnsembleParams& params, std::vector<double> lambda_grid) {
  if (lambda_grid.empty()) throw InvalidArgumentError("sweep: empty lambda grid");
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > lambda_grid[i - 1])) {
      throw InvalidArgumentError("sweep: lambda grid must be strictly increasing");
    }
  }
  if (!(lambda_grid.front() >= 0)) throw InvalidArgumentError("sweep: lambda must be >= 0");
  const std::size_t R = params.replicates;
  if (R == 0) throw InvalidArgumentError("sweep: need >= 1 replicate");
  const std::size_t G = lambda_grid.size();
  SweepResult result;
  result.raw.assign(R * G, {});
  parallel_for(R, [&](std::size_t rep) {
    const PointCloud cloud = ensemble_cloud(params, rep);
    const GraphSample gs = ensemble_sample(params, cloud, lambda_grid.back(), rep);
    const auto points = estimate_detail::sweep_checkpoints(gs, lambda_grid);
    for (std::size_t g = 0; g < G; ++g) {
      result.raw[rep * G + g] = {rep,          lambda_grid[g],       cloud.size(),
                                 points[g].c1, points[g].c2,         points[g].components,
                                 points[g].wrap_any};
    }
  });
  result.rows.resize(G);
  std::vector<double> c1_frac(R), c2_frac(R);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t rep = 0; rep < R; ++rep) {
      const auto& rec = result.raw[rep * G + g];
      c1_frac[rep] = rec.n > 0 ? static_cast<double>(rec.c1) / static_cast<double>(rec.n) : 0.0;
      c2_frac[rep] = rec.n > 0 ? static_cast<double>(rec.c2) / static_cast<double>(rec.n) : 0.0;
    }
    auto& row = result.rows[g];
    row.lambda = lambda_grid[g];
    row.c1_frac_mean = mean(c1_frac);
    row.c2_frac_mean = mean(c2_frac);
    const auto ci = mean_ci(c1_frac);
    row.ci_lo = ci.lo;
    row.ci_hi = ci.hi;
  }
  return result;
}

inline std::vector<GiantCurveRow> giant_curve(const EnsembleParams& params,
                                              std::vector<double> lambda_grid) {
  return sweep_table(params, std::move(lambda_grid)).rows;
}

struct ThresholdCriterion {
  enum class Kind { wrap_probability_half, giant_fraction_crossing };
  Kind kind = Kind::wrap_probability_half;
  double theta = 0.05;  // giant-fraction crossing level

  static ThresholdCriterion wrap() { return {Kind::wrap_probability_half, 0.0}; }
  static ThresholdCriterion giant(double theta) {
    if (!(theta > 0) || !(theta < 1)) {
      throw InvalidArgumentError("giant-fraction criterion: theta must be in (0,1)");
    }
    return {Kind::giant_fraction_crossing, theta};
  }

  // bisection target for the statistic
  double target() const { return kind == Kind::wrap_probability_half ? 0.5 : theta; }

  std::string name() const {
    return kind == Kind::wrap_probability_half ? "wrap" : "giant";
  }
};

struct ThresholdEstimate {
  double r = 0;
  double lambda_c = 0;
  double ci_lo = 0, ci_hi = 0;
  ThresholdCriterion criterion;
  Window window;
  std::size_t replicates = 0;
  // The statistic never reached the target below lambda_hi: the threshold is
  // somewhere past the bracket, perhaps infinite.  lambda_c holds lambda_hi
  // and the CI is [lambda_hi, inf).
  bool censored = false;
};

// Bisection of a monotone-nondecreasing statistic against a target level.
// Maintains stat(lo) < target <= stat(hi); throws BracketError otherwise.
template <typename StatFn>
double bisect_statistic(StatFn&& stat, double lo, double hi, double target, double tol) {
  if (!(lo < hi)) throw InvalidArgumentError("bisect_statistic: need lo < hi");
  if (!(tol > 0)) throw InvalidArgumentError("bisect_statistic: tol must be > 0");
  const double stat_lo = stat(lo);
  const double stat_hi = stat(hi);
  if (!(stat_lo < target) || !(stat_hi >= target)) {
    throw BracketError("statistic not bracketed: stat(" + std::to_string(lo) + ") = " +
                           std::to_string(stat_lo) + ", stat(" + std::to_string(hi) + ") = " +
                           std::to_string(stat_hi) + ", target " + std::to_string(target),
                       stat_lo, stat_hi);
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (stat(mid) >= target) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

inline ThresholdEstimate threshold_bisect(const EnsembleParams& params,
                                          ThresholdCriterion criterion, double lambda_lo,
                                          double lambda_hi, double tol) {
  const std::size_t R = params.replicates;
  if (R < 2) throw InvalidArgumentError("threshold_bisect: need >= 2 replicates");
  if (!(tol > 0)) throw InvalidArgumentError("threshold_bisect: tol must be > 0");

  // statistic over a replicate range, as a function of lambda
  std::function<double(std::size_t, std::size_t, double)> range_stat;
  std::vector<double> wrap_lambdas;
  if (criterion.kind == ThresholdCriterion::Kind::wrap_probability_half) {
    wrap_lambdas.assign(R, 0.0);
    parallel_for(R, [&](std::size_t rep) {
      const PointCloud cloud = ensemble_cloud(params, rep);
      const GraphSample gs = ensemble_sample(params, cloud, lambda_hi, rep);
      wrap_lambdas[rep] = estimate_detail::wrap_critical_lambda(gs, lambda_hi);
    });
    range_stat = [&wrap_lambdas](std::size_t begin, std::size_t end, double lambda) {
      std::size_t hits = 0;
      for (std::size_t rep = begin; rep < end; ++rep) {
        if (wrap_lambdas[rep] < lambda) ++hits;
      }
      return static_cast<double>(hits) / static_cast<double>(end - begin);
    };
  } else {
    range_stat = [&params](std::size_t begin, std::size_t end, double lambda) {
      std::vector<double> fracs(end - begin, 0.0);
      parallel_for(end - begin, [&](std::size_t k) {
        const std::size_t rep = begin + k;
        const PointCloud cloud = ensemble_cloud(params, rep);
        const GraphSample gs = ensemble_sample(params, cloud, lambda, rep);
        const auto st = sample_graph(gs);
        fracs[k] = st.n > 0 ? static_cast<double>(st.c1) / static_cast<double>(st.n) : 0.0;
      });
      return mean(fracs);
    };
  }

  ThresholdEstimate est;
  est.r = params.r;
  est.criterion = criterion;
  est.window = params.window;
  est.replicates = R;
  est.lambda_c = bisect_statistic(
      [&](double lambda) { return range_stat(0, R, lambda); }, lambda_lo, lambda_hi,
      criterion.target(), tol);

  // CI from independent replicate batches, each bisected on its own
  const std::size_t batches = std::clamp<std::size_t>(R / 8, 4, 8);
  std::vector<double> batch_estimates;
  if (R >= 2 * batches) {
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * R / batches;
      const std::size_t end = (b + 1) * R / batches;
      try {
        batch_estimates.push_back(bisect_statistic(
            [&](double lambda) { return range_stat(begin, end, lambda); }, lambda_lo, lambda_hi,
            criterion.target(), tol));
      } catch (const BracketError&) {
        // batch landed outside the bracket; fewer batches widen the CI below
      }
    }
  }
  double halfwidth = tol;
  if (batch_estimates.size() >= 2) {
    const double sd = stddev(batch_estimates);
    const double t = t_quantile_975(batch_estimates.size() - 1);
    halfwidth = std::max(tol, t * sd / std::sqrt(static_cast<double>(batch_estimates.size())));
  } else if (batch_estimates.size() < 2 && R >= 2 * batches) {
    halfwidth = std::max(tol, 0.5 * (lambda_hi - lambda_lo));  // batches failed; be wide
  }
  est.ci_lo = est.lambda_c - halfwidth;
  est.ci_hi = est.lambda_c + halfwidth;
  return est;
}

struct TrendReport {
  std::vector<ThresholdEstimate> estimates;
  std::optional<bool> nonincreasing_within_ci;  // absent for single-element r lists
  double last_distance_to_one = 0;
};

// Threshold estimates across increasing r with a shared criterion; windows
// scale as side = window_scale * r so the rescaled geometry is constant.
inline TrendReport threshold_trend(const KernelSpec& spec, std::span<const double> r_list,
                                   double window_scale, std::size_t replicates,
                                   std::uint64_t master_seed, ThresholdCriterion criterion,
                                   double lambda_lo, double lambda_hi, double tol) {
  if (r_list.empty()) throw InvalidArgumentError("threshold_trend: empty r list");
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    if (!(r_list[i] > 0)) {
      throw InvalidArgumentError("threshold_trend: r entry " + std::to_string(i) +
                                 " must be > 0");
    }
    if (i > 0 && !(r_list[i] > r_list[i - 1])) {
      throw InvalidArgumentError("threshold_trend: r list must be strictly increasing");
    }
  }
  TrendReport report;
  for (std::size_t idx = 0; idx < r_list.size(); ++idx) {
    EnsembleParams params{spec, r_list[idx],
                          Window::cube(spec.dim(), window_scale * r_list[idx], Boundary::torus),
                          Provenance::poisson(1.0), replicates,
                          derive_key(master_seed, idx)};
    try {
      report.estimates.push_back(threshold_bisect(params, criterion, lambda_lo, lambda_hi, tol));
    } catch (const BracketError& e) {
      if (e.stat_hi < criterion.target()) {
        // subcritical through the whole bracket: the threshold at this r is
        // past lambda_hi, perhaps infinite; record a right-censored estimate
        ThresholdEstimate est;
        est.r = r_list[idx];
        est.lambda_c = lambda_hi;
        est.ci_lo = lambda_hi;
        est.ci_hi = std::numeric_limits<double>::infinity();
        est.criterion = criterion;
        est.window = params.window;
        est.replicates = replicates;
        est.censored = true;
        report.estimates.push_back(est);
      } else {
        throw;  // already supercritical at lambda_lo: a genuinely bad bracket
      }
    }
  }
  if (report.estimates.size() >= 2) {
    bool ok = true;
    for (std::size_t i = 1; i < report.estimates.size(); ++i) {
      const auto& prev = report.estimates[i - 1];
      const auto& cur = report.estimates[i];
      // nonincreasing within CIs: either the point estimates decrease or the
      // intervals overlap
      if (cur.lambda_c > prev.lambda_c && cur.ci_lo > prev.ci_hi) ok = false;
    }
    report.nonincreasing_within_ci = ok;
  }
  report.last_distance_to_one = std::abs(report.estimates.back().lambda_c - 1.0);
  return report;
}

struct GwComparison {
  double lambda = 0;
  double mean_c1_fraction = 0;
  Interval ci{0, 0};
  double psi = 0;
  double difference = 0;  // mean fraction - psi
};

// Supercritical giant fraction against the Poisson Galton-Watson survival
// probability psi(lambda).
inline GwComparison gw_comparison(const EnsembleParams& params, double lambda) {
  if (!(lambda > 1)) {
    throw InvalidArgumentError("gw_comparison: lambda must be > 1 (psi = 0 otherwise)");
  }
  const std::size_t R = params.replicates;
  if (R < 2) throw InvalidArgumentError("gw_comparison: need >= 2 replicates");
  std::vector<double> fracs(R, 0.0);
  parallel_for(R, [&](std::size_t rep) {
    const PointCloud cloud = ensemble_cloud(params, rep);
    const GraphSample gs = ensemble_sample(params, cloud, lambda, rep);
    const auto st = sample_graph(gs);
    fracs[rep] = st.n > 0 ? static_cast<double>(st.c1) / static_cast<double>(st.n) : 0.0;
  });
  GwComparison cmp;
  cmp.lambda = lambda;
  cmp.mean_c1_fraction = mean(fracs);
  cmp.ci = mean_ci(fracs);
  cmp.psi = survival_probability(lambda).psi;
  cmp.difference = cmp.mean_c1_fraction - cmp.psi;
  return cmp;
}

}  // namespace spread
