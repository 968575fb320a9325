#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spread/error.hpp"
#include "spread/geometry.hpp"
#include "spread/graph.hpp"
#include "spread/parallel.hpp"
#include "spread/rng.hpp"
#include "spread/stats.hpp"

namespace spread {

// Partition of the rescaled window into boxes S_v of side L.  Renormalization
// always runs on a Z^2 slice of boxes: higher-dimensional windows are one box
// thick in the remaining axes.
struct BoxGrid {
  std::size_t d = 2;
  double box_side = 0;  // L, rescaled units
  long long nx = 0, ny = 0;

  BoxGrid(std::size_t dim, double L, long long nx_, long long ny_)
      : d(dim), box_side(L), nx(nx_), ny(ny_) {
    if (dim < 2) throw InvalidConfigError("box grid: dimension must be >= 2");
    if (!(L > 0)) throw InvalidConfigError("box grid: box side must be > 0");
    if (nx_ < 1 || ny_ < 1) throw InvalidConfigError("box grid: shape must be >= 1x1");
  }

  bool in_range(long long vx, long long vy) const {
    return vx >= 0 && vx < nx && vy >= 0 && vy < ny;
  }

  // S_v in rescaled units
  Box box(long long vx, long long vy) const {
    if (!in_range(vx, vy)) throw InvalidArgumentError("box grid: box outside the window");
    Box b;
    b.lo.assign(d, 0.0);
    b.sides.assign(d, box_side);
    b.lo[0] = static_cast<double>(vx) * box_side;
    b.lo[1] = static_cast<double>(vy) * box_side;
    return b;
  }

  // S_e = S_v union S_w for adjacent v, w
  Box union_box(long long vx, long long vy, long long wx, long long wy) const {
    if (std::abs(vx - wx) + std::abs(vy - wy) != 1) {
      throw InvalidArgumentError("box grid: boxes are not adjacent");
    }
    Box a = box(vx, vy), b = box(wx, wy);
    Box u = a;
    u.lo[0] = std::min(a.lo[0], b.lo[0]);
    u.lo[1] = std::min(a.lo[1], b.lo[1]);
    u.sides[0] += (vx != wx) ? box_side : 0.0;
    u.sides[1] += (vy != wy) ? box_side : 0.0;
    return u;
  }

  // the rescaled window tiled by the grid
  Window window(Boundary boundary = Boundary::free) const {
    std::vector<double> sides(d, box_side);
    sides[0] = static_cast<double>(nx) * box_side;
    sides[1] = static_cast<double>(ny) * box_side;
    return Window(sides, boundary);
  }
};

inline Box scale_box(const Box& b, double r) {
  Box out = b;
  for (auto& x : out.lo) x *= r;
  for (auto& s : out.sides) s *= r;
  return out;
}

// The original-units window covered by an r-scaled box grid.
inline Window scale_window(const BoxGrid& grid, double r, Boundary boundary = Boundary::free) {
  std::vector<double> sides(grid.d, grid.box_side * r);
  sides[0] = static_cast<double>(grid.nx) * grid.box_side * r;
  sides[1] = static_cast<double>(grid.ny) * grid.box_side * r;
  return Window(sides, boundary);
}

struct GoodEventConfig {
  double a = 0;    // component-fraction threshold, in units of rho
  double rho = 1;  // r^d

  GoodEventConfig(double a_, double rho_) : a(a_), rho(rho_) {
    if (!(a > 0)) throw InvalidConfigError("good event: threshold a must be > 0");
    if (!(rho > 0)) throw InvalidConfigError("good event: rho must be > 0");
  }

  double size_threshold() const { return a * rho; }
};

// good(e) for e = {v, w}: both boxes hold a component larger than a*rho while
// the union box has second-largest component smaller than a*rho.
inline bool good_event(const GraphSample& gs, const BoxGrid& grid, long long vx, long long vy,
                       long long wx, long long wy, const GoodEventConfig& cfg) {
  const double threshold = cfg.size_threshold();
  const auto half_v = box_stats(gs, scale_box(grid.box(vx, vy), gs.r));
  if (!(static_cast<double>(half_v.c1) > threshold)) return false;
  const auto half_w = box_stats(gs, scale_box(grid.box(wx, wy), gs.r));
  if (!(static_cast<double>(half_w.c1) > threshold)) return false;
  const auto both = box_stats(gs, scale_box(grid.union_box(vx, vy, wx, wy), gs.r));
  return static_cast<double>(both.c2) < threshold;
}

struct GoodProbEstimate {
  double p_hat = 0;
  Interval ci{0, 0};
  std::size_t successes = 0;
  std::size_t replicates = 0;
};

// Pr(good(e)) by fresh independent samples of the two-box window S_e.
inline GoodProbEstimate estimate_good_probability(const KernelSpec& spec, double lambda,
                                                  double r, double L, double a,
                                                  std::size_t replicates,
                                                  std::uint64_t master_seed) {
  if (replicates < 30) {
    throw InvalidArgumentError("estimate_good_probability: need >= 30 replicates");
  }
  const std::size_t d = spec.dim();
  const BoxGrid grid(d, L, 2, 1);
  const double rho = std::pow(r, static_cast<double>(d));
  const GoodEventConfig cfg(a, rho);
  std::vector<char> good(replicates, 0);
  std::vector<double> sides(d, L * r);
  sides[0] = 2 * L * r;
  const Window window(sides, Boundary::free);
  parallel_for(replicates, [&](std::size_t rep) {
    const PointCloud cloud =
        sample_poisson(window, 1.0, replicate_stream(master_seed, stream_tag::points, rep));
    GraphSample gs{&cloud, &spec, lambda, r,
                   replicate_key(master_seed, stream_tag::edges, rep), Coupling::monotone};
    good[rep] = good_event(gs, grid, 0, 0, 1, 0, cfg) ? 1 : 0;
  });
  GoodProbEstimate est;
  est.replicates = replicates;
  for (char g : good) est.successes += static_cast<std::size_t>(g);
  est.p_hat = static_cast<double>(est.successes) / static_cast<double>(replicates);
  est.ci = wilson_interval(est.successes, replicates);
  return est;
}

// Pilot calibration of a: half the median of C1(G'[S_1]) / rho.
inline double calibrate_component_threshold(const KernelSpec& spec, double lambda, double r,
                                            double L, std::size_t pilot_replicates,
                                            std::uint64_t master_seed) {
  if (pilot_replicates < 2) {
    throw InvalidArgumentError("calibrate_component_threshold: need >= 2 pilot replicates");
  }
  const std::size_t d = spec.dim();
  const double rho = std::pow(r, static_cast<double>(d));
  const Window window(std::vector<double>(d, L * r), Boundary::free);
  std::vector<double> fractions(pilot_replicates, 0.0);
  parallel_for(pilot_replicates, [&](std::size_t rep) {
    const PointCloud cloud =
        sample_poisson(window, 1.0, replicate_stream(master_seed, stream_tag::pilot, 2 * rep));
    GraphSample gs{&cloud, &spec, lambda, r,
                   replicate_key(master_seed, stream_tag::pilot, 2 * rep + 1),
                   Coupling::monotone};
    fractions[rep] = static_cast<double>(sample_graph(gs).c1) / rho;
  });
  return 0.5 * median(fractions);
}

// Open/closed state for every nearest-neighbor bond of a finite Z^2 window.
struct BondConfig {
  long long nx = 0, ny = 0;
  std::vector<char> horizontal;  // (nx-1) * ny, bond (x,y)-(x+1,y), x-major
  std::vector<char> vertical;    // nx * (ny-1), bond (x,y)-(x,y+1)

  BondConfig(long long nx_, long long ny_) : nx(nx_), ny(ny_) {
    if (nx_ < 2 || ny_ < 2) throw InvalidConfigError("bond config: window must be >= 2x2");
    horizontal.assign(static_cast<std::size_t>((nx - 1) * ny), 0);
    vertical.assign(static_cast<std::size_t>(nx * (ny - 1)), 0);
  }

  char& h(long long x, long long y) { return horizontal[static_cast<std::size_t>(y * (nx - 1) + x)]; }
  char h(long long x, long long y) const { return horizontal[static_cast<std::size_t>(y * (nx - 1) + x)]; }
  char& v(long long x, long long y) { return vertical[static_cast<std::size_t>(y * nx + x)]; }
  char v(long long x, long long y) const { return vertical[static_cast<std::size_t>(y * nx + x)]; }

  std::size_t bond_count() const { return horizontal.size() + vertical.size(); }
  std::size_t open_count() const {
    std::size_t c = 0;
    for (char b : horizontal) c += static_cast<std::size_t>(b);
    for (char b : vertical) c += static_cast<std::size_t>(b);
    return c;
  }
};

// Bond e open iff good(e) holds in one shared sample; this is the dependent,
// (d+1)-independent measure of the renormalization argument.
inline BondConfig derived_bond_field(const GraphSample& gs, const BoxGrid& grid,
                                     const GoodEventConfig& cfg) {
  if (grid.nx < 8 || grid.ny < 8) {
    throw InvalidConfigError("derived_bond_field: window must tile into >= 8x8 boxes");
  }
  const double threshold = cfg.size_threshold();
  // per-box largest-component flags, then per-edge union checks
  std::vector<char> box_big(static_cast<std::size_t>(grid.nx * grid.ny), 0);
  std::vector<std::uint32_t> box_c1(static_cast<std::size_t>(grid.nx * grid.ny), 0);
  parallel_for(static_cast<std::size_t>(grid.nx * grid.ny), [&](std::size_t idx) {
    const long long vx = static_cast<long long>(idx) % grid.nx;
    const long long vy = static_cast<long long>(idx) / grid.nx;
    const auto st = box_stats(gs, scale_box(grid.box(vx, vy), gs.r));
    box_c1[idx] = static_cast<std::uint32_t>(st.c1);
    box_big[idx] = static_cast<double>(st.c1) > threshold ? 1 : 0;
  });
  BondConfig bonds(grid.nx, grid.ny);
  const auto box_idx = [&](long long x, long long y) {
    return static_cast<std::size_t>(y * grid.nx + x);
  };
  // horizontal bonds
  parallel_for(static_cast<std::size_t>((grid.nx - 1) * grid.ny), [&](std::size_t idx) {
    const long long x = static_cast<long long>(idx) % (grid.nx - 1);
    const long long y = static_cast<long long>(idx) / (grid.nx - 1);
    if (!box_big[box_idx(x, y)] || !box_big[box_idx(x + 1, y)]) return;
    const auto both = box_stats(gs, scale_box(grid.union_box(x, y, x + 1, y), gs.r));
    if (static_cast<double>(both.c2) < threshold) bonds.h(x, y) = 1;
  });
  // vertical bonds
  parallel_for(static_cast<std::size_t>(grid.nx * (grid.ny - 1)), [&](std::size_t idx) {
    const long long x = static_cast<long long>(idx) % grid.nx;
    const long long y = static_cast<long long>(idx) / grid.nx;
    if (!box_big[box_idx(x, y)] || !box_big[box_idx(x, y + 1)]) return;
    const auto both = box_stats(gs, scale_box(grid.union_box(x, y, x, y + 1), gs.r));
    if (static_cast<double>(both.c2) < threshold) bonds.v(x, y) = 1;
  });
  return bonds;
}

inline BondConfig iid_bond_sample(double p, long long nx, long long ny, RngStream stream) {
  if (!(p >= 0) || !(p <= 1)) throw InvalidArgumentError("iid_bond_sample: p must be in [0,1]");
  BondConfig bonds(nx, ny);
  for (auto& b : bonds.horizontal) b = stream.next_unit() < p ? 1 : 0;
  for (auto& b : bonds.vertical) b = stream.next_unit() < p ? 1 : 0;
  return bonds;
}

// Open path joining the two opposite faces along `axis` (0 = left-right).
inline bool spanning_exists(const BondConfig& bonds, int axis) {
  if (axis != 0 && axis != 1) throw InvalidArgumentError("spanning_exists: axis must be 0 or 1");
  const long long nx = bonds.nx, ny = bonds.ny;
  std::vector<std::uint32_t> parent(static_cast<std::size_t>(nx * ny));
  std::iota(parent.begin(), parent.end(), 0u);
  const auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[a] = b;
  };
  const auto vid = [&](long long x, long long y) {
    return static_cast<std::uint32_t>(y * nx + x);
  };
  for (long long y = 0; y < ny; ++y) {
    for (long long x = 0; x + 1 < nx; ++x) {
      if (bonds.h(x, y)) unite(vid(x, y), vid(x + 1, y));
    }
  }
  for (long long y = 0; y + 1 < ny; ++y) {
    for (long long x = 0; x < nx; ++x) {
      if (bonds.v(x, y)) unite(vid(x, y), vid(x, y + 1));
    }
  }
  // roots present on the low face
  std::vector<std::uint32_t> low_roots;
  if (axis == 0) {
    for (long long y = 0; y < ny; ++y) low_roots.push_back(find(vid(0, y)));
  } else {
    for (long long x = 0; x < nx; ++x) low_roots.push_back(find(vid(x, 0)));
  }
  std::sort(low_roots.begin(), low_roots.end());
  low_roots.erase(std::unique(low_roots.begin(), low_roots.end()), low_roots.end());
  if (axis == 0) {
    for (long long y = 0; y < ny; ++y) {
      if (std::binary_search(low_roots.begin(), low_roots.end(), find(vid(nx - 1, y)))) return true;
    }
  } else {
    for (long long x = 0; x < nx; ++x) {
      if (std::binary_search(low_roots.begin(), low_roots.end(), find(vid(x, ny - 1)))) return true;
    }
  }
  return false;
}

}  // namespace spread
