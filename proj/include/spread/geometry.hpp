#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spread/error.hpp"
#include "spread/rng.hpp"

namespace spread {

enum class Boundary { torus, free };

inline std::string to_string(Boundary b) { return b == Boundary::torus ? "torus" : "free"; }

// Axis-aligned half-open box [lo_i, lo_i + side_i).
struct Box {
  std::vector<double> lo;
  std::vector<double> sides;

  std::size_t dim() const { return sides.size(); }

  double volume() const {
    double v = 1;
    for (double s : sides) v *= s;
    return v;
  }

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < sides.size(); ++i) {
      if (!(x[i] >= lo[i] && x[i] < lo[i] + sides[i])) return false;
    }
    return true;
  }
};

// Finite stand-in for R^d.
struct Window {
  std::vector<double> sides;
  Boundary boundary = Boundary::torus;
  std::vector<double> lo;  // empty means origin

  Window() = default;
  Window(std::vector<double> sides_, Boundary b, std::vector<double> lo_ = {})
      : sides(std::move(sides_)), boundary(b), lo(std::move(lo_)) {
    if (sides.empty()) throw InvalidConfigError("window: dimension must be >= 1");
    for (double s : sides) {
      if (!(s > 0) || !std::isfinite(s)) {
        throw InvalidConfigError("window: all sides must be positive and finite");
      }
    }
    if (lo.empty()) lo.assign(sides.size(), 0.0);
    if (lo.size() != sides.size()) throw InvalidConfigError("window: lo/sides dimension mismatch");
    for (double x : lo) {
      if (!std::isfinite(x)) throw InvalidConfigError("window: lo must be finite");
    }
  }

  static Window cube(std::size_t d, double side, Boundary b = Boundary::torus) {
    return Window(std::vector<double>(d, side), b);
  }

  std::size_t dim() const { return sides.size(); }

  double volume() const {
    double v = 1;
    for (double s : sides) v *= s;
    return v;
  }

  Box bounds() const { return Box{lo, sides}; }

  bool contains(std::span<const double> x) const { return bounds().contains(x); }

  bool contains(const Box& region) const {
    for (std::size_t i = 0; i < dim(); ++i) {
      if (region.lo[i] < lo[i] - 1e-12 ||
          region.lo[i] + region.sides[i] > lo[i] + sides[i] + 1e-12) {
        return false;
      }
    }
    return true;
  }
};

struct Provenance {
  enum class Kind { poisson, lattice, jittered };
  Kind kind = Kind::poisson;
  double param = 1.0;  // intensity or jitter bound

  static Provenance poisson(double intensity) { return {Kind::poisson, intensity}; }
  static Provenance lattice() { return {Kind::lattice, 0.0}; }
  static Provenance jittered(double bound) { return {Kind::jittered, bound}; }
};

inline std::string to_string(Provenance::Kind k) {
  switch (k) {
    case Provenance::Kind::poisson: return "poisson";
    case Provenance::Kind::lattice: return "lattice";
    default: return "jittered";
  }
}

// A realization of X restricted to the window.  Immutable after creation;
// vertex id == position in generation order.
struct PointCloud {
  std::size_t dim = 0;
  std::vector<double> coords;  // n * dim, row-major
  Window window;
  Provenance provenance;
  std::uint64_t seed = 0;  // stream key that generated the cloud

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }

  std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * dim, dim};
  }
};

inline PointCloud sample_poisson(const Window& window, double intensity, RngStream stream) {
  if (!std::isfinite(intensity) || intensity < 0) {
    throw InvalidConfigError("sample_poisson: intensity must be finite and >= 0");
  }
  PointCloud cloud;
  cloud.dim = window.dim();
  cloud.window = window;
  cloud.provenance = Provenance::poisson(intensity);
  cloud.seed = stream.key();
  const std::uint64_t n = poisson_count(stream, intensity * window.volume());
  cloud.coords.resize(n * cloud.dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < cloud.dim; ++k) {
      cloud.coords[i * cloud.dim + k] =
          stream.next_in(window.lo[k], window.lo[k] + window.sides[k]);
    }
  }
  return cloud;
}

namespace geom_detail {

// Integer range [ceil(lo), ...) intersected with [lo, lo+side).
inline void integer_range(double lo, double side, long long& first, long long& count) {
  first = static_cast<long long>(std::ceil(lo));
  const double hi = lo + side;
  long long last = static_cast<long long>(std::floor(hi));
  if (static_cast<double>(last) >= hi) --last;  // half-open: exclude hi itself
  count = last >= first ? last - first + 1 : 0;
}

}  // namespace geom_detail

// Exactly the integer vectors inside the window, lexicographic order.
inline PointCloud lattice_points(const Window& window) {
  PointCloud cloud;
  cloud.dim = window.dim();
  cloud.window = window;
  cloud.provenance = Provenance::lattice();
  const std::size_t d = window.dim();
  std::vector<long long> first(d), count(d);
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) {
    geom_detail::integer_range(window.lo[k], window.sides[k], first[k], count[k]);
    total *= static_cast<std::size_t>(count[k]);
  }
  cloud.coords.reserve(total * d);
  if (total == 0) return cloud;
  std::vector<long long> idx(d, 0);
  for (;;) {
    for (std::size_t k = 0; k < d; ++k) {
      cloud.coords.push_back(static_cast<double>(first[k] + idx[k]));
    }
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++idx[k] < count[k]) break;
      idx[k] = 0;
      if (k == 0) return cloud;
    }
  }
}

// Lattice displaced by iid uniforms in [-bound, bound]^d, wrapped on the torus.
inline PointCloud jittered_lattice(const Window& window, double jitter_bound, RngStream stream) {
  if (!(jitter_bound >= 0) || !std::isfinite(jitter_bound)) {
    throw InvalidConfigError("jittered_lattice: jitter bound must be finite and >= 0");
  }
  if (jitter_bound > 0 && window.boundary != Boundary::torus) {
    throw InvalidConfigError("jittered_lattice: jitter requires a torus window");
  }
  PointCloud cloud = lattice_points(window);
  cloud.provenance = Provenance::jittered(jitter_bound);
  cloud.seed = stream.key();
  if (jitter_bound == 0) return cloud;
  const std::size_t d = cloud.dim;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      double x = cloud.coords[i * d + k] + stream.next_in(-jitter_bound, jitter_bound);
      const double lo = window.lo[k], side = window.sides[k];
      x = lo + std::fmod(x - lo, side);
      if (x < lo) x += side;
      cloud.coords[i * d + k] = x;
    }
  }
  return cloud;
}

// q - p under the window's boundary; torus components lie in (-side/2, side/2].
inline void displacement_into(std::span<const double> p, std::span<const double> q,
                              const Window& window, std::span<double> out) {
  const std::size_t d = window.dim();
  if (p.size() != d || q.size() != d || out.size() != d) {
    throw InvalidArgumentError("displacement: dimension mismatch");
  }
  for (std::size_t k = 0; k < d; ++k) {
    double delta = q[k] - p[k];
    if (window.boundary == Boundary::torus) {
      const double side = window.sides[k];
      // both points in-window, so |delta| < side
      if (delta > 0.5 * side) delta -= side;
      else if (delta <= -0.5 * side) delta += side;
    }
    out[k] = delta;
  }
}

inline std::vector<double> displacement(std::span<const double> p, std::span<const double> q,
                                        const Window& window) {
  std::vector<double> out(window.dim());
  displacement_into(p, q, window, out);
  return out;
}

inline double empirical_density(const PointCloud& cloud, const Box& region) {
  if (region.dim() != cloud.dim) throw InvalidArgumentError("empirical_density: dimension mismatch");
  if (!(region.volume() > 0)) throw InvalidArgumentError("empirical_density: zero-volume region");
  if (!cloud.window.contains(region)) {
    throw InvalidArgumentError("empirical_density: region not inside the window");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (region.contains(cloud.point(i))) ++count;
  }
  return static_cast<double>(count) / region.volume();
}

}  // namespace spread
