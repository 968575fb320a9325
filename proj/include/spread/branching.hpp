#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "spread/error.hpp"
#include "spread/rng.hpp"

namespace spread {

// Survival probability of the Galton-Watson process with Poisson(lambda)
// offspring: the largest root of psi = 1 - exp(-lambda * psi).
struct GWResult {
  double lambda = 0;
  double psi = 0;
  double residual = 0;  // |1 - exp(-lambda psi) - psi|
};

// Bracketed Newton with bisection fallback on [eps, 1].  Returns exact 0 for
// lambda <= 1: the root structure there is analytic, not numerical.
inline GWResult survival_probability(double lambda, double tol = 1e-14) {
  if (!std::isfinite(lambda) || !(lambda > 0)) {
    throw InvalidArgumentError("survival_probability: lambda must be finite and > 0");
  }
  if (!(tol > 0) || tol > 1e-6) {
    throw InvalidArgumentError("survival_probability: tol must be in (0, 1e-6]");
  }
  if (lambda <= 1) return {lambda, 0.0, 0.0};

  const auto f = [lambda](double psi) { return 1.0 - std::exp(-lambda * psi) - psi; };
  const auto df = [lambda](double psi) { return lambda * std::exp(-lambda * psi) - 1.0; };

  // f(0)=0 with f'(0)=lambda-1>0, f(1)<0: unique positive root in (lo, 1)
  double lo = 1e-12, hi = 1.0;
  double x = 1.0 - 1.0 / lambda;  // mean-field starting point
  for (int iter = 0; iter < 200; ++iter) {
    const double fx = f(x);
    if (fx > 0) lo = x;
    else hi = x;
    const double step = df(x);
    double next = step != 0 ? x - fx / step : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < tol) {
      x = next;
      break;
    }
    x = next;
  }
  return {lambda, x, std::abs(f(x))};
}

enum class GWOutcome { extinct, survived_to_cap };

struct GWRun {
  GWOutcome outcome = GWOutcome::extinct;
  std::vector<std::uint64_t> generation_sizes;  // starts with 1 (the root)
};

// Poisson(lambda) offspring count; Knuth's product method, fine for the
// moderate lambdas used here.
inline std::uint64_t poisson_offspring(RngStream& stream, double lambda) {
  const double limit = std::exp(-lambda);
  std::uint64_t k = 0;
  double prod = stream.next_unit();
  while (prod >= limit) {
    ++k;
    prod *= stream.next_unit();
  }
  return k;
}

// Generation-by-generation simulation from a single ancestor.  Hitting the
// population cap is reported as survived_to_cap, a distinct outcome from
// proven extinction.
inline GWRun gw_simulate(double lambda, std::size_t max_generations,
                         std::uint64_t population_cap, RngStream stream) {
  if (!std::isfinite(lambda) || lambda < 0) {
    throw InvalidArgumentError("gw_simulate: lambda must be finite and >= 0");
  }
  if (max_generations == 0 || population_cap == 0) {
    throw InvalidArgumentError("gw_simulate: caps must be positive");
  }
  GWRun run;
  run.generation_sizes.push_back(1);
  std::uint64_t current = 1;
  for (std::size_t gen = 0; gen < max_generations; ++gen) {
    std::uint64_t next = 0;
    for (std::uint64_t p = 0; p < current; ++p) {
      next += poisson_offspring(stream, lambda);
      if (next >= population_cap) break;
    }
    run.generation_sizes.push_back(next);
    current = next;
    if (current == 0) {
      run.outcome = GWOutcome::extinct;
      return run;
    }
    if (current >= population_cap) {
      run.outcome = GWOutcome::survived_to_cap;
      return run;
    }
  }
  run.outcome = GWOutcome::survived_to_cap;
  return run;
}

// Expected number of paths of length n starting in a fixed unit box of the
// rescaled graph: exactly r^d lambda^n.
inline double expected_paths(double r, std::size_t d, double lambda, std::size_t n) {
  if (!(r > 0) || !std::isfinite(lambda) || lambda < 0) {
    throw InvalidArgumentError("expected_paths: need r > 0 and lambda >= 0");
  }
  return std::pow(r, static_cast<double>(d)) * std::pow(lambda, static_cast<double>(n));
}

}  // namespace spread
