#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "spread/error.hpp"
#include "spread/geometry.hpp"
#include "spread/kernel.hpp"

namespace spread {

// Midpoint discretization of T_kappa f(x) = integral lambda phi(x-y) f(y) dy
// on a box (or its torus variant).  The grid is uniform with the same spacing
// on every axis, so the matrix action is a stationary stencil.  The stencil is
// rescaled so its total mass is exactly lambda: raw midpoint sampling of an
// indicator kernel carries O(h) mass error, which would swamp the analytic
// facts the tests pin down (torus norm = lambda, box norm <= lambda).
class OperatorGrid {
 public:
  OperatorGrid(KernelSpec spec, double lambda, double box_side, int cells_per_side,
               Boundary boundary, int first_axis_multiple = 1)
      : spec_(std::move(spec)),
        lambda_(lambda),
        box_side_(box_side),
        m_(cells_per_side),
        boundary_(boundary) {
    const std::size_t d = spec_.dim();
    if (!(box_side > 0)) throw InvalidConfigError("operator grid: box side must be > 0");
    if (!(lambda >= 0) || !std::isfinite(lambda)) {
      throw InvalidConfigError("operator grid: lambda must be finite and >= 0");
    }
    if (m_ < 8) throw InvalidConfigError("operator grid: resolution must be >= 8 cells per axis");
    if (d >= 3 && m_ > 48) {
      throw InvalidConfigError(
          "operator grid: d >= 3 limited to 48 cells per axis (memory guard)");
    }
    if (first_axis_multiple < 1) throw InvalidConfigError("operator grid: bad axis multiple");
    h_ = box_side_ / static_cast<double>(m_);
    shape_.assign(d, static_cast<long long>(m_));
    shape_[0] *= first_axis_multiple;
    cell_count_ = 1;
    for (long long s : shape_) cell_count_ *= static_cast<std::size_t>(s);
    if (boundary_ == Boundary::torus) {
      const double min_side = box_side_;  // non-first axes are the shortest
      if (!(spec_.truncation_radius() < 0.5 * min_side)) {
        throw InvalidConfigError(
            "operator grid: torus variant needs support radius < half the box side");
      }
    }
    build_stencil();
  }

  static OperatorGrid box(const KernelSpec& spec, double lambda, double L, int m) {
    return OperatorGrid(spec, lambda, L, m, Boundary::free);
  }

  // S_2 = [0,2L) x [0,L)^{d-1}
  static OperatorGrid double_box(const KernelSpec& spec, double lambda, double L, int m) {
    return OperatorGrid(spec, lambda, L, m, Boundary::free, 2);
  }

  static OperatorGrid torus(const KernelSpec& spec, double lambda, double L, int m) {
    return OperatorGrid(spec, lambda, L, m, Boundary::torus);
  }

  std::size_t dim() const { return spec_.dim(); }
  std::size_t cell_count() const { return cell_count_; }
  double lambda() const { return lambda_; }
  double box_side() const { return box_side_; }
  int resolution() const { return m_; }
  double spacing() const { return h_; }
  Boundary boundary() const { return boundary_; }
  const KernelSpec& spec() const { return spec_; }

  // out = T v
  void apply(const std::vector<double>& v, std::vector<double>& out) const {
    const std::size_t d = shape_.size();
    std::vector<long long> coord(d, 0);
    for (std::size_t cell = 0; cell < cell_count_; ++cell) {
      double acc = 0;
      for (const auto& entry : stencil_) {
        std::size_t rank = 0;
        bool valid = true;
        for (std::size_t k = 0; k < d; ++k) {
          long long c = coord[k] + entry.offset[k];
          if (boundary_ == Boundary::torus) {
            if (c < 0) c += shape_[k];
            else if (c >= shape_[k]) c -= shape_[k];
          } else if (c < 0 || c >= shape_[k]) {
            valid = false;
            break;
          }
          rank = rank * static_cast<std::size_t>(shape_[k]) + static_cast<std::size_t>(c);
        }
        if (valid) acc += entry.weight * v[rank];
      }
      out[cell] = acc;
      for (std::size_t k = d; k-- > 0;) {
        if (++coord[k] < shape_[k]) break;
        coord[k] = 0;
      }
    }
  }

  // Row sum at each cell of the free box: (T 1)(x) with boundary truncation.
  std::vector<double> row_masses() const {
    std::vector<double> ones(cell_count_, 1.0), out(cell_count_);
    apply(ones, out);
    return out;
  }

  // Distance from the cell midpoint to the box boundary.
  double midpoint_boundary_distance(std::size_t cell) const {
    const std::size_t d = shape_.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = d; k-- > 0;) {
      const long long c = static_cast<long long>(cell % static_cast<std::size_t>(shape_[k]));
      cell /= static_cast<std::size_t>(shape_[k]);
      const double x = (static_cast<double>(c) + 0.5) * h_;
      const double side = static_cast<double>(shape_[k]) * h_;
      best = std::min({best, x, side - x});
    }
    return best;
  }

 private:
  struct StencilEntry {
    std::vector<int> offset;
    double weight;
  };

  void build_stencil() {
    const std::size_t d = spec_.dim();
    const double support = spec_.truncation_radius();
    const int reach = static_cast<int>(std::ceil(support / h_));
    std::vector<int> off(d, -reach);
    double raw_mass = 0;
    const double hd = std::pow(h_, static_cast<double>(d));
    for (;;) {
      double n2 = 0;
      for (std::size_t k = 0; k < d; ++k) n2 += (off[k] * h_) * (off[k] * h_);
      const double value = spec_.phi_radial(std::sqrt(n2)) * hd;
      if (value > 0) {
        stencil_.push_back({off, value});
        raw_mass += value;
      }
      std::size_t k = d;
      bool done = false;
      while (k > 0) {
        --k;
        if (++off[k] <= reach) break;
        off[k] = -reach;
        if (k == 0) done = true;
      }
      if (done) break;
    }
    // normalize the discrete kernel mass to exactly lambda
    const double corr = raw_mass > 0 ? lambda_ / raw_mass : 0.0;
    for (auto& e : stencil_) e.weight *= corr;
    if (corr == 0.0) stencil_.clear();
  }

  KernelSpec spec_;
  double lambda_;
  double box_side_;
  int m_;
  Boundary boundary_;
  double h_ = 0;
  std::vector<long long> shape_;
  std::size_t cell_count_ = 0;
  std::vector<StencilEntry> stencil_;
};

struct NormResult {
  double norm = 0;
  int iterations = 0;
};

// Power iteration for the largest eigenvalue; Rayleigh quotient convergence.
inline NormResult operator_norm(const OperatorGrid& grid, double tol = 1e-9,
                                int max_iter = 2000) {
  if (!(tol > 0)) throw InvalidArgumentError("operator_norm: tol must be > 0");
  const std::size_t n = grid.cell_count();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> w(n, 0.0);
  double rq_prev = -1;
  int stable = 0;
  for (int iter = 1; iter <= max_iter; ++iter) {
    grid.apply(v, w);
    double rq = 0, norm2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      rq += v[i] * w[i];
      norm2 += w[i] * w[i];
    }
    if (norm2 == 0) return {0.0, iter};  // zero operator
    const double scale = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] * scale;
    if (iter > 1 && std::abs(rq - rq_prev) < tol) {
      if (++stable >= 3) return {rq, iter};
    } else {
      stable = 0;
    }
    rq_prev = rq;
  }
  throw ConvergenceError("operator_norm: power iteration did not converge", rq_prev, max_iter);
}

struct InteriorMassReport {
  double min_mass = 0;           // min of (T 1)(x) over cells at distance >= K
  double full_mass = 0;          // lambda, for reference
  std::optional<double> minimal_bound_distance;  // smallest K with mass >= (1+lambda)/2
};

// Scans (T_kappa 1)(x) = lambda * phi-mass of (S - x) over the free box grid.
inline InteriorMassReport interior_row_mass(const KernelSpec& spec, double lambda, double L,
                                            double K, int m) {
  if (!(K >= 0) || K >= 0.5 * L) {
    throw InvalidArgumentError("interior_row_mass: need 0 <= K < L/2");
  }
  const OperatorGrid grid = OperatorGrid::box(spec, lambda, L, m);
  const auto masses = grid.row_masses();
  struct Rec {
    double dist, mass;
  };
  std::vector<Rec> recs(masses.size());
  for (std::size_t c = 0; c < masses.size(); ++c) {
    recs[c] = {grid.midpoint_boundary_distance(c), masses[c]};
  }
  InteriorMassReport report;
  report.full_mass = lambda;
  double min_mass = std::numeric_limits<double>::infinity();
  for (const auto& rec : recs) {
    if (rec.dist >= K) min_mass = std::min(min_mass, rec.mass);
  }
  if (!std::isfinite(min_mass)) {
    throw InvalidConfigError("interior_row_mass: no grid point at distance >= K");
  }
  report.min_mass = min_mass;

  // minimal K on the distance grid with min-over-interior >= (1+lambda)/2
  std::sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) { return a.dist < b.dist; });
  const double target = 0.5 * (1.0 + lambda);
  double suffix_min = std::numeric_limits<double>::infinity();
  std::optional<double> best;
  for (std::size_t i = recs.size(); i-- > 0;) {
    suffix_min = std::min(suffix_min, recs[i].mass);
    if (suffix_min >= target) best = recs[i].dist;
  }
  report.minimal_bound_distance = best;
  return report;
}

struct MinimalLResult {
  double L_star = 0;
  double norm_s1 = 0;  // at L_star + tol, cube S_1
  double norm_s2 = 0;  // at L_star + tol, double box S_2
};

// Bisection over L of operator_norm(S_1) - 1; requires lambda > 1, since the
// Schur bound caps the norm at lambda.
inline MinimalLResult minimal_supercritical_L(const KernelSpec& spec, double lambda, double tol,
                                              int probe_resolution = 0) {
  if (!(lambda > 1)) {
    throw InvalidArgumentError(
        "minimal_supercritical_L: lambda <= 1 has no finite L (norm <= lambda <= 1)");
  }
  if (!(tol > 0)) throw InvalidArgumentError("minimal_supercritical_L: tol must be > 0");
  const double support = spec.truncation_radius();
  const auto resolution = [&](double L) {
    if (probe_resolution > 0) return probe_resolution;
    int m = static_cast<int>(std::ceil(6.0 * L / support));
    m = std::clamp(m, 16, spec.dim() >= 3 ? 40 : 128);
    return std::max(m, 8);
  };
  const auto norm_at = [&](double L) {
    return operator_norm(OperatorGrid::box(spec, lambda, L, resolution(L)), 1e-8, 4000).norm;
  };

  double hi = std::max(support, 4 * tol);
  int guard = 0;
  while (norm_at(hi) <= 1.0) {
    hi *= 2;
    if (++guard > 60) {
      throw ConvergenceError("minimal_supercritical_L: no supercritical box found", hi, guard);
    }
  }
  double lo = 0.5 * hi;
  while (lo > tol && norm_at(lo) > 1.0) lo *= 0.5;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (norm_at(mid) > 1.0) hi = mid;
    else lo = mid;
  }
  MinimalLResult res;
  res.L_star = 0.5 * (lo + hi);
  const double probe = res.L_star + tol;
  const int m = resolution(probe);
  res.norm_s1 = operator_norm(OperatorGrid::box(spec, lambda, probe, m), 1e-8, 4000).norm;
  res.norm_s2 = operator_norm(OperatorGrid::double_box(spec, lambda, probe, m), 1e-8, 4000).norm;
  return res;
}

}  // namespace spread
