#pragma once

// Single-bubble profiles of the singular Liouville equation on the plane and
// their projections onto the unit disk. All radii are passed as log_r = ln r;
// log_r = -infinity stands for the origin.

#include "errors.hpp"
#include "quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bubbletower {

struct BubbleInstance {
  double alpha = 2.0;
  double log_delta = 0.0;
  int sign = 1;         // alternation in the tower
  double weight = 1.0;  // 1 or 1/gamma

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("bubble alpha must be positive");
    if (!std::isfinite(log_delta)) throw ConfigError("bubble delta must be positive and finite");
  }
};

// ln(e^a + e^b), tolerating b = -infinity.
inline double log_add_exp(double a, double b) {
  if (std::isinf(a) && a < 0) return b;
  if (std::isinf(b) && b < 0) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::fabs(a - b)));
}

// ln(delta^alpha + r^alpha)
inline double log_denominator(const BubbleInstance& b, double log_r) {
  return log_add_exp(b.alpha * b.log_delta, b.alpha * log_r);
}

// w = ln(2 alpha^2 delta^alpha) - 2 ln(delta^alpha + r^alpha)
inline double bubble_eval(const BubbleInstance& b, double log_r) {
  return std::log(2.0 * b.alpha * b.alpha) + b.alpha * b.log_delta - 2.0 * log_denominator(b, log_r);
}

// ln(r^(alpha-2) e^w), the log of the bubble density.
inline double log_bubble_density(const BubbleInstance& b, double log_r) {
  return (b.alpha - 2.0) * log_r + bubble_eval(b, log_r);
}

inline double bubble_density(const BubbleInstance& b, double log_r) {
  return std::exp(log_bubble_density(b, log_r));
}

// r^2 times the density: a sech^2 well of depth alpha^2/2 in t = ln r.
inline double bubble_well(const BubbleInstance& b, double log_r) {
  const double x = 0.5 * b.alpha * (log_r - b.log_delta);
  const double c = std::cosh(x);
  return b.alpha * b.alpha / (2.0 * c * c);
}

// Integral of the well over t < log_r (closed form).
inline double bubble_well_mass_below(const BubbleInstance& b, double log_r) {
  const double x = b.alpha * (log_r - b.log_delta);
  return 2.0 * b.alpha / (1.0 + std::exp(-x));
}

// Mass of r^(alpha-2) e^w over the ball of radius exp(outer_log_r).
inline double liouville_mass_quad(const BubbleInstance& b, double outer_log_r,
                                  const QuadratureOptions& opt = {}) {
  b.validate();
  const double two_pi = 2.0 * std::numbers::pi;
  auto integrand = [&](double s) {
    const double x = b.alpha * s;
    const double soft = log_add_exp(0.0, x);
    return two_pi * std::exp(std::log(2.0 * b.alpha * b.alpha) + x - 2.0 * soft);
  };
  const double upper = outer_log_r - b.log_delta;
  const double inf = std::numeric_limits<double>::infinity();
  if (std::isinf(outer_log_r)) {
    if (outer_log_r < 0) return 0.0;
    return integrate(integrand, -inf, 0.0, opt).value + integrate(integrand, 0.0, inf, opt).value;
  }
  if (upper <= 0.0) return integrate(integrand, -inf, upper, opt).value;
  return integrate(integrand, -inf, 0.0, opt).value + integrate(integrand, 0.0, upper, opt).value;
}

// Green function of the unit disk at the origin: G = -ln r / 2pi, H = 0.
struct GreenValue {
  double singular = 0;
  double regular = 0;
  double total() const { return singular + regular; }
};

inline GreenValue greens_disk(double log_r) {
  if (log_r > 0.0) throw ConfigError("point outside the unit disk");
  return {-log_r / (2.0 * std::numbers::pi), 0.0};
}

// Pw = w - w(1), the projection with zero boundary values.
inline double project_disk(const BubbleInstance& b, double log_r) {
  return 2.0 * (log_denominator(b, 0.0) - log_denominator(b, log_r));
}

// Z = (delta^alpha - r^alpha) / (delta^alpha + r^alpha), the dilation kernel.
inline double z_eval(const BubbleInstance& b, double log_r) {
  if (std::isinf(log_r) && log_r < 0) return 1.0;
  return std::tanh(0.5 * b.alpha * (b.log_delta - log_r));
}

inline double project_z_disk(const BubbleInstance& b, double log_r) {
  return z_eval(b, log_r) - z_eval(b, 0.0);
}

}  // namespace bubbletower
