#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "spread/error.hpp"
#include "spread/geometry.hpp"
#include "spread/kernel.hpp"
#include "spread/rng.hpp"

namespace spread {

// Bucket grid over the window; cell side >= interaction radius, so every pair
// with positive edge probability sits in the same or an adjacent cell.
struct CellIndex {
  std::vector<long long> shape;      // cells per axis
  std::vector<double> cell_sides;    // per axis, >= interaction radius
  std::vector<std::uint32_t> offsets;  // CSR over cell rank
  std::vector<std::uint32_t> ids;
  double interaction_radius = 0;
  bool torus = false;

  std::size_t cell_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

inline CellIndex build_cell_index(const PointCloud& cloud, double interaction_radius,
                                  std::span<const std::uint32_t> subset = {}) {
  if (!(interaction_radius > 0) || !std::isfinite(interaction_radius)) {
    throw InvalidConfigError("cell index: interaction radius must be positive");
  }
  const Window& win = cloud.window;
  const std::size_t d = cloud.dim;
  CellIndex index;
  index.interaction_radius = interaction_radius;
  index.torus = win.boundary == Boundary::torus;
  index.shape.resize(d);
  index.cell_sides.resize(d);
  std::size_t ncells = 1;
  for (std::size_t k = 0; k < d; ++k) {
    if (index.torus && interaction_radius >= 0.5 * win.sides[k]) {
      throw InvalidConfigError(
          "cell index: interaction radius must be < half the torus side "
          "(minimal image would be ambiguous)");
    }
    index.shape[k] = std::max<long long>(1, static_cast<long long>(
                                                std::floor(win.sides[k] / interaction_radius)));
    index.cell_sides[k] = win.sides[k] / static_cast<double>(index.shape[k]);
    ncells *= static_cast<std::size_t>(index.shape[k]);
  }

  std::vector<std::uint32_t> all;
  if (subset.empty()) {
    all.resize(cloud.size());
    std::iota(all.begin(), all.end(), 0u);
    subset = all;
  }

  const auto cell_rank = [&](std::span<const double> x) {
    std::size_t rank = 0;
    for (std::size_t k = 0; k < d; ++k) {
      long long c = static_cast<long long>((x[k] - win.lo[k]) / index.cell_sides[k]);
      c = std::clamp<long long>(c, 0, index.shape[k] - 1);
      rank = rank * static_cast<std::size_t>(index.shape[k]) + static_cast<std::size_t>(c);
    }
    return rank;
  };

  index.offsets.assign(ncells + 1, 0);
  for (std::uint32_t id : subset) ++index.offsets[cell_rank(cloud.point(id)) + 1];
  for (std::size_t c = 0; c < ncells; ++c) index.offsets[c + 1] += index.offsets[c];
  index.ids.resize(subset.size());
  std::vector<std::uint32_t> cursor(index.offsets.begin(), index.offsets.end() - 1);
  for (std::uint32_t id : subset) index.ids[cursor[cell_rank(cloud.point(id))]++] = id;
  return index;
}

namespace graph_detail {

// Neighbor cell ranks with rank >= the cell's own, deduplicated (torus wrap
// can alias offsets when an axis has only two cells).
inline void neighbor_ranks_at_or_above(const CellIndex& index, std::size_t rank,
                                       std::vector<std::size_t>& out) {
  out.clear();
  const std::size_t d = index.shape.size();
  std::vector<long long> coord(d);
  {
    std::size_t rest = rank;
    for (std::size_t k = d; k-- > 0;) {
      coord[k] = static_cast<long long>(rest % static_cast<std::size_t>(index.shape[k]));
      rest /= static_cast<std::size_t>(index.shape[k]);
    }
  }
  std::vector<int> off(d, -1);
  for (;;) {
    bool valid = true;
    std::size_t nrank = 0;
    for (std::size_t k = 0; k < d && valid; ++k) {
      long long c = coord[k] + off[k];
      if (index.torus) {
        if (c < 0) c += index.shape[k];
        else if (c >= index.shape[k]) c -= index.shape[k];
      } else if (c < 0 || c >= index.shape[k]) {
        valid = false;
      }
      nrank = nrank * static_cast<std::size_t>(index.shape[k]) + static_cast<std::size_t>(valid ? c : 0);
    }
    if (valid && nrank >= rank) out.push_back(nrank);
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++off[k] <= 1) break;
      off[k] = -1;
      if (k == 0) {
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return;
      }
    }
  }
}

template <std::size_t D>
inline double dist2_fixed(const double* p, const double* q, const double* sides, bool torus) {
  double acc = 0;
  for (std::size_t k = 0; k < D; ++k) {
    double delta = q[k] - p[k];
    if (torus) {
      if (delta > 0.5 * sides[k]) delta -= sides[k];
      else if (delta <= -0.5 * sides[k]) delta += sides[k];
    }
    acc += delta * delta;
  }
  return acc;
}

inline double dist2_any(const double* p, const double* q, const double* sides, bool torus,
                        std::size_t d) {
  switch (d) {
    case 1: return dist2_fixed<1>(p, q, sides, torus);
    case 2: return dist2_fixed<2>(p, q, sides, torus);
    case 3: return dist2_fixed<3>(p, q, sides, torus);
    default: {
      double acc = 0;
      for (std::size_t k = 0; k < d; ++k) {
        double delta = q[k] - p[k];
        if (torus) {
          if (delta > 0.5 * sides[k]) delta -= sides[k];
          else if (delta <= -0.5 * sides[k]) delta += sides[k];
        }
        acc += delta * delta;
      }
      return acc;
    }
  }
}

}  // namespace graph_detail

// Visits every unordered pair within interaction range exactly once, plus the
// in-range filter's near misses inside adjacent cells; f(id_i, id_j, dist2).
template <typename F>
void for_candidate_pairs(const CellIndex& index, const PointCloud& cloud, F&& f) {
  const std::size_t d = cloud.dim;
  const double* sides = cloud.window.sides.data();
  const bool torus = index.torus;
  const double cut2 = index.interaction_radius * index.interaction_radius;
  std::vector<std::size_t> nbors;
  for (std::size_t cell = 0; cell < index.cell_count(); ++cell) {
    const std::uint32_t a0 = index.offsets[cell], a1 = index.offsets[cell + 1];
    if (a0 == a1) continue;
    graph_detail::neighbor_ranks_at_or_above(index, cell, nbors);
    for (std::size_t nrank : nbors) {
      const std::uint32_t b0 = index.offsets[nrank], b1 = index.offsets[nrank + 1];
      if (nrank == cell) {
        for (std::uint32_t a = a0; a < a1; ++a) {
          const double* pa = cloud.coords.data() + index.ids[a] * d;
          for (std::uint32_t b = a + 1; b < a1; ++b) {
            const double* pb = cloud.coords.data() + index.ids[b] * d;
            const double d2 = graph_detail::dist2_any(pa, pb, sides, torus, d);
            if (d2 <= cut2) f(index.ids[a], index.ids[b], d2);
          }
        }
      } else {
        for (std::uint32_t a = a0; a < a1; ++a) {
          const double* pa = cloud.coords.data() + index.ids[a] * d;
          for (std::uint32_t b = b0; b < b1; ++b) {
            const double* pb = cloud.coords.data() + index.ids[b] * d;
            const double d2 = graph_detail::dist2_any(pa, pb, sides, torus, d);
            if (d2 <= cut2) f(index.ids[a], index.ids[b], d2);
          }
        }
      }
    }
  }
}

// fresh: per-pair uniforms also keyed by lambda; monotone: uniforms fixed by
// (stream, ids) so the open set grows with lambda replicate-by-replicate.
enum class Coupling { fresh, monotone };

// One sampled graph G_{r,lambda}(X): the cloud plus everything that determines
// the edge outcomes.
struct GraphSample {
  const PointCloud* cloud = nullptr;
  const KernelSpec* spec = nullptr;
  double lambda = 1;
  double r = 1;
  std::uint64_t edge_key = 0;
  Coupling coupling = Coupling::monotone;

  std::uint64_t effective_key() const {
    return coupling == Coupling::fresh
               ? derive_key(edge_key, std::bit_cast<std::uint64_t>(lambda))
               : edge_key;
  }
};

struct ComponentStats {
  std::size_t n = 0;
  std::size_t c1 = 0;
  std::size_t c2 = 0;
  std::size_t component_count = 0;
  std::vector<bool> wrapping;  // per axis; empty for free-boundary windows
  std::vector<std::uint32_t> largest_component_ids;

  bool wrap_any() const {
    for (bool w : wrapping) {
      if (w) return true;
    }
    return false;
  }
};

// Union-find with per-node displacement to the root; a union closing a cycle
// whose accumulated displacement disagrees with the edge vector by a window
// period has wrapped the torus.
class OffsetUnionFind {
 public:
  OffsetUnionFind(std::size_t n, std::size_t dim)
      : dim_(dim), parent_(n), size_(n, 1), offset_(n * dim, 0.0) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    std::uint32_t root = x;
    while (parent_[root] != root) root = parent_[root];
    // rewrite the path to point straight at the root, offsets included
    std::uint32_t cur = x;
    path_.clear();
    while (parent_[cur] != cur) {
      path_.push_back(cur);
      cur = parent_[cur];
    }
    for (std::size_t idx = path_.size(); idx-- > 0;) {
      const std::uint32_t node = path_[idx];
      const std::uint32_t par = parent_[node];
      if (par != root) {
        for (std::size_t k = 0; k < dim_; ++k) {
          offset_[node * dim_ + k] += offset_[par * dim_ + k];
        }
        parent_[node] = root;
      }
    }
    return root;
  }

  struct UniteResult {
    bool merged = false;         // two components became one
    std::uint32_t wrap_mask = 0; // per-axis winding when a cycle closes
  };

  // delta = unwrapped position of j minus unwrapped position of i, as carried
  // by the edge; a cycle whose accumulated displacement disagrees with delta
  // by a window period has wound around those axes.
  UniteResult unite(std::uint32_t i, std::uint32_t j, std::span<const double> delta,
                    std::span<const double> window_sides) {
    const std::uint32_t ri = find(i), rj = find(j);
    if (ri == rj) {
      std::uint32_t mask = 0;
      for (std::size_t k = 0; k < dim_; ++k) {
        const double wind = off(i, k) + delta[k] - off(j, k);
        if (std::abs(wind) > 0.5 * window_sides[k]) mask |= (1u << k);
      }
      return {false, mask};
    }
    if (size_[ri] < size_[rj]) {
      // attach ri under rj
      for (std::size_t k = 0; k < dim_; ++k) {
        offset_[ri * dim_ + k] = off(j, k) - delta[k] - off(i, k);
      }
      parent_[ri] = rj;
      size_[rj] += size_[ri];
    } else {
      for (std::size_t k = 0; k < dim_; ++k) {
        offset_[rj * dim_ + k] = off(i, k) + delta[k] - off(j, k);
      }
      parent_[rj] = ri;
      size_[ri] += size_[rj];
    }
    return {true, 0};
  }

  std::uint32_t component_size(std::uint32_t root) const { return size_[root]; }
  bool is_root(std::uint32_t x) const { return parent_[x] == x; }
  std::size_t count() const { return parent_.size(); }

 private:
  double off(std::uint32_t x, std::size_t k) const {
    return parent_[x] == x ? 0.0 : offset_[x * dim_ + k];
  }

  std::size_t dim_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::vector<double> offset_;
  std::vector<std::uint32_t> path_;
};

namespace graph_detail {

struct SampleResult {
  OffsetUnionFind uf;
  std::vector<bool> wrapping;
  std::size_t edges = 0;
};

// Core pass: enumerate candidate pairs of `subset` (all points when null),
// open each with the keyed per-pair uniform, merge with union-find.
inline SampleResult run_sample(const GraphSample& gs,
                               const std::vector<std::uint32_t>* subset) {
  const PointCloud& cloud = *gs.cloud;
  const std::size_t d = cloud.dim;
  if (gs.spec->dim() != d) throw InvalidArgumentError("sample_graph: kernel dimension mismatch");
  const EdgeProbability prob(*gs.spec, gs.lambda, gs.r);
  const std::uint64_t key = gs.effective_key();
  const bool torus = cloud.window.boundary == Boundary::torus;

  const std::size_t n = subset ? subset->size() : cloud.size();
  // dense position of each cloud id within the subset
  std::vector<std::uint32_t> dense;
  if (subset) {
    dense.assign(cloud.size(), std::numeric_limits<std::uint32_t>::max());
    for (std::uint32_t pos = 0; pos < subset->size(); ++pos) dense[(*subset)[pos]] = pos;
  }

  SampleResult res{OffsetUnionFind(n, d), std::vector<bool>(torus ? d : 0, false), 0};
  if (n == 0 || gs.lambda == 0) return res;

  const CellIndex index = build_cell_index(cloud, prob.interaction_radius(),
                                           subset ? std::span<const std::uint32_t>(*subset)
                                                  : std::span<const std::uint32_t>{});
  std::vector<double> delta(d);
  for_candidate_pairs(index, cloud, [&](std::uint32_t i, std::uint32_t j, double dist2) {
    const double p = prob(dist2);
    if (p <= 0) return;
    if (pair_uniform(key, i, j) < p) {
      displacement_into(cloud.point(i), cloud.point(j), cloud.window, delta);
      const std::uint32_t a = subset ? dense[i] : i;
      const std::uint32_t b = subset ? dense[j] : j;
      const auto result = res.uf.unite(a, b, delta, cloud.window.sides);
      if (result.wrap_mask && torus) {
        for (std::size_t k = 0; k < d; ++k) {
          if (result.wrap_mask & (1u << k)) res.wrapping[k] = true;
        }
      }
      ++res.edges;
    }
  });
  return res;
}

inline ComponentStats stats_from_uf(OffsetUnionFind& uf, std::vector<bool> wrapping,
                                    std::span<const std::uint32_t> subset,
                                    bool want_largest_ids) {
  ComponentStats st;
  st.n = uf.count();
  st.wrapping = std::move(wrapping);
  if (st.n == 0) return st;
  std::size_t best = 0, second = 0, count = 0;
  std::uint32_t best_root = 0;
  for (std::uint32_t x = 0; x < uf.count(); ++x) {
    if (!uf.is_root(x)) continue;
    ++count;
    const std::size_t sz = uf.component_size(x);
    if (sz > best) {
      second = best;
      best = sz;
      best_root = x;
    } else if (sz > second) {
      second = sz;
    }
  }
  st.c1 = best;
  st.c2 = second;
  st.component_count = count;
  if (want_largest_ids && best > 0) {
    st.largest_component_ids.reserve(best);
    for (std::uint32_t x = 0; x < uf.count(); ++x) {
      if (uf.find(x) == best_root) {
        st.largest_component_ids.push_back(subset.empty() ? x : subset[x]);
      }
    }
  }
  return st;
}

}  // namespace graph_detail

inline ComponentStats sample_graph(const GraphSample& gs, bool want_largest_ids = false) {
  auto res = graph_detail::run_sample(gs, nullptr);
  return graph_detail::stats_from_uf(res.uf, std::move(res.wrapping), {}, want_largest_ids);
}

inline std::vector<std::uint32_t> ids_in_box(const PointCloud& cloud, const Box& box) {
  std::vector<std::uint32_t> ids;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    if (box.contains(cloud.point(i))) ids.push_back(i);
  }
  return ids;
}

// Stats of the subgraph induced by the points in `box`, with edges re-derived
// from the same keyed randomness as the full sample.
inline ComponentStats box_stats(const GraphSample& gs, const Box& box,
                                bool want_largest_ids = false) {
  if (box.dim() != gs.cloud->dim) throw InvalidArgumentError("box_stats: dimension mismatch");
  if (!gs.cloud->window.contains(box)) {
    throw InvalidArgumentError("box_stats: box not inside the window");
  }
  const auto ids = ids_in_box(*gs.cloud, box);
  auto res = graph_detail::run_sample(gs, &ids);
  return graph_detail::stats_from_uf(res.uf, std::move(res.wrapping), ids, want_largest_ids);
}

// Component label (root id within the subset numbering) for every point of the
// box; used to check how box components sit inside union-box components.
struct LabeledComponents {
  std::vector<std::uint32_t> ids;    // cloud ids, ascending
  std::vector<std::uint32_t> label;  // per position: dense root index
  ComponentStats stats;

  // label of a cloud id, or npos when the id is not in the box
  std::uint32_t label_of(std::uint32_t cloud_id) const {
    const auto it = std::lower_bound(ids.begin(), ids.end(), cloud_id);
    if (it == ids.end() || *it != cloud_id) return std::numeric_limits<std::uint32_t>::max();
    return label[static_cast<std::size_t>(it - ids.begin())];
  }
};

inline LabeledComponents box_components(const GraphSample& gs, const Box& box) {
  LabeledComponents out;
  out.ids = ids_in_box(*gs.cloud, box);
  auto res = graph_detail::run_sample(gs, &out.ids);
  out.label.resize(out.ids.size());
  for (std::uint32_t pos = 0; pos < out.ids.size(); ++pos) out.label[pos] = res.uf.find(pos);
  out.stats = graph_detail::stats_from_uf(res.uf, std::move(res.wrapping), out.ids, false);
  return out;
}

inline double mean_degree_sampled(const GraphSample& gs) {
  if (gs.cloud->size() == 0) throw UndefinedStatisticError("mean degree of an empty cloud");
  auto res = graph_detail::run_sample(gs, nullptr);
  return 2.0 * static_cast<double>(res.edges) / static_cast<double>(gs.cloud->size());
}

// sum of pair probabilities * 2/n; no sampling involved.
inline double mean_degree_expected(const GraphSample& gs) {
  const PointCloud& cloud = *gs.cloud;
  if (cloud.size() == 0) throw UndefinedStatisticError("mean degree of an empty cloud");
  const EdgeProbability prob(*gs.spec, gs.lambda, gs.r);
  if (gs.lambda == 0) return 0.0;
  const CellIndex index = build_cell_index(cloud, prob.interaction_radius());
  double acc = 0;
  for_candidate_pairs(index, cloud,
                      [&](std::uint32_t, std::uint32_t, double dist2) { acc += prob(dist2); });
  return 2.0 * acc / static_cast<double>(cloud.size());
}

// f(i, j) for every open edge.
template <typename F>
void for_open_edges(const GraphSample& gs, F&& f) {
  const PointCloud& cloud = *gs.cloud;
  if (cloud.size() == 0 || gs.lambda == 0) return;
  const EdgeProbability prob(*gs.spec, gs.lambda, gs.r);
  const std::uint64_t key = gs.effective_key();
  const CellIndex index = build_cell_index(cloud, prob.interaction_radius());
  for_candidate_pairs(index, cloud, [&](std::uint32_t i, std::uint32_t j, double dist2) {
    const double p = prob(dist2);
    if (p > 0 && pair_uniform(key, i, j) < p) f(i, j);
  });
}

// Number of injective paths (v_0, ..., v_m) with v_0 in origin_box and every
// consecutive pair an open edge, for m = 0..max_len.  Ordered counts, matching
// the expected-path bookkeeping of the subcritical argument.
inline std::vector<double> count_directed_paths(const GraphSample& gs, const Box& origin_box,
                                                int max_len) {
  if (max_len < 0) throw InvalidArgumentError("count_directed_paths: max_len must be >= 0");
  const PointCloud& cloud = *gs.cloud;
  std::vector<std::vector<std::uint32_t>> adj(cloud.size());
  for_open_edges(gs, [&](std::uint32_t i, std::uint32_t j) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  });
  std::vector<double> counts(static_cast<std::size_t>(max_len) + 1, 0.0);
  std::vector<char> visited(cloud.size(), 0);
  const auto dfs = [&](auto&& self, std::uint32_t v, int depth) -> void {
    visited[v] = 1;
    ++counts[static_cast<std::size_t>(depth)];
    if (depth < max_len) {
      for (std::uint32_t w : adj[v]) {
        if (!visited[w]) self(self, w, depth + 1);
      }
    }
    visited[v] = 0;
  };
  for (std::uint32_t v = 0; v < cloud.size(); ++v) {
    if (origin_box.contains(cloud.point(v))) dfs(dfs, v, 0);
  }
  return counts;
}

// Monotone-coupling edge filtration: for each candidate pair, the smallest
// lambda at which it is open, restricted to lambda_open <= lambda_max.
// Sorted ascending; replaying unions along it sweeps the whole lambda axis in
// one pass.
struct EdgeEvent {
  double lambda;
  std::uint32_t i, j;
};

inline std::vector<EdgeEvent> edge_filtration(const GraphSample& gs, double lambda_max) {
  if (!(lambda_max > 0)) throw InvalidArgumentError("edge_filtration: lambda_max must be > 0");
  const PointCloud& cloud = *gs.cloud;
  std::vector<EdgeEvent> events;
  if (cloud.size() == 0) return events;
  // probe at lambda_max: pair open at some lambda <= lambda_max iff u < p(lambda_max)
  const EdgeProbability prob(*gs.spec, lambda_max, gs.r);
  const std::uint64_t key = gs.edge_key;  // filtration is monotone by construction
  const double rd = std::pow(gs.r, -static_cast<double>(cloud.dim));
  const CellIndex index = build_cell_index(cloud, prob.interaction_radius());
  for_candidate_pairs(index, cloud, [&](std::uint32_t i, std::uint32_t j, double dist2) {
    const double p_max = prob(dist2);
    if (p_max <= 0) return;
    const double u = pair_uniform(key, i, j);
    if (u >= p_max) return;
    // u < min(lambda * c, 1) first holds at lambda = u / c; c > 0 since p_max > 0
    const double c = rd * gs.spec->phi_radial(std::sqrt(dist2) / gs.r);
    events.push_back({u / c, i, j});
  });
  std::sort(events.begin(), events.end(), [](const EdgeEvent& a, const EdgeEvent& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  return events;
}

}  // namespace spread
