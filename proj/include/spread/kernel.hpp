#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "spread/error.hpp"

namespace spread {

inline double unit_ball_volume(std::size_t d) {
  return std::pow(std::numbers::pi, 0.5 * static_cast<double>(d)) /
         std::tgamma(0.5 * static_cast<double>(d) + 1.0);
}

namespace kernel_detail {

// 16-point Gauss-Legendre on [-1,1]; positive half, mirrored in use.
inline constexpr double kGlNodes[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
inline constexpr double kGlWeights[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

template <typename F>
double gauss16(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0;
  for (int i = 0; i < 8; ++i) {
    acc += kGlWeights[i] * (f(mid + half * kGlNodes[i]) + f(mid - half * kGlNodes[i]));
  }
  return acc * half;
}

}  // namespace kernel_detail

// Radial connection function phi: symmetric, nonnegative, normalized so that
// the integral over R^d is 1, compactly supported within truncation_radius.
class KernelSpec {
 public:
  enum class Shape { ball, annulus, radial_table };

  // Indicator of the ball of volume 1 centred at the origin.
  static KernelSpec ball(std::size_t d) {
    check_dim(d);
    KernelSpec k(d, Shape::ball);
    k.ball_radius_ = std::pow(1.0 / unit_ball_volume(d), 1.0 / static_cast<double>(d));
    k.truncation_radius_ = k.ball_radius_;
    k.constant_ = 1.0;
    return k;
  }

  // Constant on {inner <= |x| <= outer}, scaled to unit mass.
  static KernelSpec annulus(std::size_t d, double inner, double outer) {
    check_dim(d);
    if (!(inner >= 0) || !(outer > inner) || !std::isfinite(outer)) {
      throw InvalidConfigError("annulus kernel: need 0 <= inner < outer < inf");
    }
    KernelSpec k(d, Shape::annulus);
    k.annulus_inner_ = inner;
    k.annulus_outer_ = outer;
    k.truncation_radius_ = outer;
    const double shell = unit_ball_volume(d) * (std::pow(outer, static_cast<double>(d)) -
                                                std::pow(inner, static_cast<double>(d)));
    k.constant_ = 1.0 / shell;
    return k;
  }

  // Piecewise-linear radial profile; the normalization constant is computed.
  static KernelSpec radial_table(std::size_t d, std::vector<double> knots,
                                 std::vector<double> values) {
    KernelSpec k = table_unchecked(d, std::move(knots), std::move(values));
    const double raw = k.radial_mass(1.0);
    if (!(raw > 0)) throw InvalidConfigError("radial table kernel: zero total mass");
    k.constant_ = 1.0 / raw;
    return k;
  }

  // As above but with a caller-supplied constant, verified instead of trusted.
  static KernelSpec radial_table(std::size_t d, std::vector<double> knots,
                                 std::vector<double> values, double constant) {
    KernelSpec k = table_unchecked(d, std::move(knots), std::move(values));
    if (!(constant > 0) || !std::isfinite(constant)) {
      throw InvalidConfigError("radial table kernel: constant must be positive");
    }
    k.constant_ = constant;
    const double integral = k.radial_mass(k.constant_);
    if (std::abs(integral - 1.0) > 1e-6) throw NotNormalizedError(integral);
    return k;
  }

  std::size_t dim() const { return dim_; }
  Shape shape() const { return shape_; }
  double truncation_radius() const { return truncation_radius_; }
  double normalization_constant() const { return constant_; }

  // phi as a function of |x|; includes the normalization constant.
  double phi_radial(double rho) const {
    switch (shape_) {
      case Shape::ball:
        return rho <= ball_radius_ ? 1.0 : 0.0;
      case Shape::annulus:
        return (rho >= annulus_inner_ && rho <= annulus_outer_) ? constant_ : 0.0;
      case Shape::radial_table:
      default: {
        if (rho < knots_.front() || rho > knots_.back()) return 0.0;
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), rho);
        if (it == knots_.begin()) return constant_ * values_.front();
        const std::size_t j = static_cast<std::size_t>(it - knots_.begin());
        if (j >= knots_.size()) return constant_ * values_.back();
        const double t = (rho - knots_[j - 1]) / (knots_[j] - knots_[j - 1]);
        return constant_ * ((1 - t) * values_[j - 1] + t * values_[j]);
      }
    }
  }

  double phi(std::span<const double> x) const {
    if (x.size() != dim_) throw InvalidArgumentError("phi: dimension mismatch");
    double n2 = 0;
    for (double v : x) n2 += v * v;
    return phi_radial(std::sqrt(n2));
  }

  // min{lambda r^{-d} phi(delta / r), 1}
  double edge_probability(double lambda, double r, std::span<const double> delta) const {
    if (delta.size() != dim_) throw InvalidArgumentError("edge_probability: dimension mismatch");
    if (!(lambda >= 0) || !std::isfinite(lambda) || !(r > 0)) {
      throw InvalidArgumentError("edge_probability: need lambda >= 0 and r > 0");
    }
    double n2 = 0;
    for (double v : delta) n2 += v * v;
    const double p = lambda * std::pow(r, -static_cast<double>(dim_)) *
                     phi_radial(std::sqrt(n2) / r);
    return std::min(p, 1.0);
  }

  // The G_rho(kappa) form used on rescaled vertex sets: min{lambda phi(u)/rho, 1}.
  double rescaled_edge_probability(double lambda, double rho, std::span<const double> u) const {
    if (u.size() != dim_) throw InvalidArgumentError("rescaled_edge_probability: dimension mismatch");
    if (!(rho > 0)) throw InvalidArgumentError("rescaled_edge_probability: need rho > 0");
    double n2 = 0;
    for (double v : u) n2 += v * v;
    return std::min(lambda * phi_radial(std::sqrt(n2)) / rho, 1.0);
  }

  // Radius beyond which at most eps of the phi-mass remains; exact support for
  // the compact shapes.
  double support_radius(double eps) const {
    if (!(eps > 0)) throw InvalidArgumentError("support_radius: eps must be > 0");
    switch (shape_) {
      case Shape::ball:
        return ball_radius_;
      case Shape::annulus:
        return annulus_outer_;
      case Shape::radial_table:
      default: {
        // walk inward from the tail in sub-knot steps until eps mass is passed
        double best = knots_.back();
        for (std::size_t seg = knots_.size() - 1; seg > 0; --seg) {
          const double a = knots_[seg - 1], b = knots_[seg];
          constexpr int kSteps = 64;
          for (int s = kSteps; s >= 0; --s) {
            const double rho = a + (b - a) * s / kSteps;
            if (tail_mass(rho) <= eps) best = rho;
            else return best;
          }
        }
        return best;
      }
    }
  }

  // Irreducibility hypothesis of the supercriticality result; advisory, not
  // enforced at construction.
  bool positive_near_origin() const {
    switch (shape_) {
      case Shape::ball:
        return true;
      case Shape::annulus:
        return annulus_inner_ == 0.0;
      case Shape::radial_table:
      default:
        return knots_.front() == 0.0 && values_.front() > 0.0;
    }
  }

  // Radii where the profile changes analytic form; quadrature splits here.
  std::vector<double> radial_breakpoints() const {
    switch (shape_) {
      case Shape::ball:
        return {0.0, ball_radius_};
      case Shape::annulus:
        return {0.0, annulus_inner_, annulus_outer_};
      case Shape::radial_table:
      default: {
        std::vector<double> b = knots_;
        if (b.front() > 0.0) b.insert(b.begin(), 0.0);
        return b;
      }
    }
  }

  // integral over R^d of c * profile(|x|), via the radial reduction
  double radial_mass(double c) const {
    const double d = static_cast<double>(dim_);
    const double sphere = d * unit_ball_volume(dim_);
    const auto breaks = radial_breakpoints();
    double acc = 0;
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
      acc += kernel_detail::gauss16(
          [&](double rho) {
            return (phi_radial(rho) / constant_) * c * std::pow(rho, d - 1);
          },
          breaks[s], breaks[s + 1]);
    }
    return acc * sphere;
  }

 private:
  KernelSpec(std::size_t d, Shape s) : dim_(d), shape_(s) {}

  static void check_dim(std::size_t d) {
    if (d < 1) throw InvalidConfigError("kernel: dimension must be >= 1");
  }

  static KernelSpec table_unchecked(std::size_t d, std::vector<double> knots,
                                    std::vector<double> values) {
    check_dim(d);
    if (knots.size() < 2 || knots.size() != values.size()) {
      throw InvalidConfigError("radial table kernel: need matching knots/values, >= 2 entries");
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (!std::isfinite(knots[i]) || knots[i] < 0 ||
          (i > 0 && knots[i] <= knots[i - 1])) {
        throw InvalidConfigError("radial table kernel: knots must be >= 0, strictly increasing");
      }
      if (!(values[i] >= 0) || !std::isfinite(values[i])) {
        throw InvalidConfigError("radial table kernel: values must be finite and >= 0");
      }
    }
    KernelSpec k(d, Shape::radial_table);
    k.knots_ = std::move(knots);
    k.values_ = std::move(values);
    k.truncation_radius_ = k.knots_.back();
    k.constant_ = 1.0;  // placeholder until the factory fixes it
    return k;
  }

  // normalized mass beyond radius rho
  double tail_mass(double rho) const {
    const double d = static_cast<double>(dim_);
    const double sphere = d * unit_ball_volume(dim_);
    const auto breaks = radial_breakpoints();
    double acc = 0;
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
      const double a = std::max(breaks[s], rho), b = breaks[s + 1];
      if (b <= a) continue;
      acc += kernel_detail::gauss16(
          [&](double t) { return phi_radial(t) * std::pow(t, d - 1); }, a, b);
    }
    return acc * sphere;
  }

  std::size_t dim_;
  Shape shape_;
  double truncation_radius_ = 0;
  double constant_ = 1;
  double ball_radius_ = 0;
  double annulus_inner_ = 0, annulus_outer_ = 0;
  std::vector<double> knots_, values_;
};

inline std::string to_string(KernelSpec::Shape s) {
  switch (s) {
    case KernelSpec::Shape::ball: return "ball";
    case KernelSpec::Shape::annulus: return "annulus";
    default: return "table";
  }
}

// Numerical check of the unit-mass condition and of the rescaled identity
// integral r^{-d} phi(x/r) dx = 1; throws NotNormalizedError beyond 1e-4.
inline double normalization_integral(const KernelSpec& spec, std::size_t quadrature_points) {
  if (quadrature_points < 1000) {
    throw InvalidArgumentError("normalization_integral: need >= 1000 quadrature points");
  }
  const double d = static_cast<double>(spec.dim());
  const double sphere = d * unit_ball_volume(spec.dim());
  const auto integrate = [&](double scale) {
    // integral of scale^{-d} phi(rho/scale) over R^d, radially reduced
    const auto breaks = spec.radial_breakpoints();
    const std::size_t segments = breaks.size() - 1;
    const std::size_t per_segment =
        std::max<std::size_t>(1, quadrature_points / (16 * segments));
    double acc = 0;
    for (std::size_t s = 0; s < segments; ++s) {
      const double a = breaks[s] * scale, b = breaks[s + 1] * scale;
      const double step = (b - a) / static_cast<double>(per_segment);
      for (std::size_t j = 0; j < per_segment; ++j) {
        acc += kernel_detail::gauss16(
            [&](double rho) {
              return std::pow(scale, -d) * spec.phi_radial(rho / scale) *
                     std::pow(rho, d - 1);
            },
            a + step * static_cast<double>(j), a + step * static_cast<double>(j + 1));
      }
    }
    return acc * sphere;
  };
  const double plain = integrate(1.0);
  if (std::abs(plain - 1.0) > 1e-4) throw NotNormalizedError(plain);
  for (double r : {0.5, 2.0}) {
    const double rescaled = integrate(r);
    if (std::abs(rescaled - 1.0) > 1e-4) throw NotNormalizedError(rescaled);
  }
  return plain;
}

// Evaluator for fixed (spec, lambda, r); the ball shape reduces to a single
// squared-distance compare, which is the hot path of graph sampling.
class EdgeProbability {
 public:
  EdgeProbability(const KernelSpec& spec, double lambda, double r)
      : spec_(&spec), lambda_(lambda), r_(r) {
    if (!(lambda >= 0) || !std::isfinite(lambda) || !(r > 0)) {
      throw InvalidArgumentError("EdgeProbability: need lambda >= 0 and r > 0");
    }
    prefactor_ = lambda * std::pow(r, -static_cast<double>(spec.dim()));
    interaction_radius_ = r * spec.truncation_radius();
    cutoff2_ = interaction_radius_ * interaction_radius_;
    if (spec.shape() == KernelSpec::Shape::ball) {
      flat_value_ = std::min(prefactor_, 1.0);
    }
  }

  double interaction_radius() const { return interaction_radius_; }
  double lambda() const { return lambda_; }
  double r() const { return r_; }
  const KernelSpec& spec() const { return *spec_; }

  double operator()(double dist2) const {
    if (dist2 > cutoff2_) return 0.0;
    if (flat_value_ >= 0) return flat_value_;
    return std::min(prefactor_ * spec_->phi_radial(std::sqrt(dist2) / r_), 1.0);
  }

 private:
  const KernelSpec* spec_;
  double lambda_, r_;
  double prefactor_ = 0;
  double interaction_radius_ = 0;
  double cutoff2_ = 0;
  double flat_value_ = -1;  // >= 0 only for the ball indicator
};

}  // namespace spread
