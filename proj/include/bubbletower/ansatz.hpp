#pragma once

// The alternating tower W = sum_i (-1)^(i-1) P w_i / gamma^sigma(i) on the
// unit disk, evaluated pointwise in log radius.

#include "bubble.hpp"
#include "errors.hpp"
#include "parameters.hpp"
#include "radial_field.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace bubbletower {

class Ansatz {
 public:
  // Requires delta_1 < ... < delta_k < 1 with consecutive ratios of at least
  // 10^min_gap_decades.
  Ansatz(BubbleFamily family, double rho, double min_gap_decades = 1.0)
      : family_(std::move(family)), rho_(rho) {
    if (!(rho > 0.0) || !(rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
    const double g = family_.spec.gamma.value();
    for (int j = 1; j <= family_.k(); ++j) {
      BubbleInstance b;
      b.alpha = to_double(family_[j].alpha);
      b.log_delta = static_cast<double>(family_.log_delta(j, rho));
      b.sign = family_[j].sign;
      b.weight = is_odd(j) ? 1.0 : 1.0 / g;
      bubbles_.push_back(b);
    }
    const double min_gap = min_gap_decades * std::numbers::ln10;
    for (std::size_t j = 0; j + 1 < bubbles_.size(); ++j) {
      const double gap = bubbles_[j + 1].log_delta - bubbles_[j].log_delta;
      if (gap < min_gap)
        throw ScaleCollapse("delta_" + std::to_string(j + 2) + "/delta_" + std::to_string(j + 1) + " = 10^" +
                            std::to_string(gap / std::numbers::ln10) + " at rho = " + std::to_string(rho));
    }
    if (!(bubbles_.back().log_delta < 0.0))
      throw ScaleCollapse("delta_k >= 1 at rho = " + std::to_string(rho));
  }

  Ansatz(const TowerSpec& spec, double rho) : Ansatz(bubble_family(spec), rho) {}

  const BubbleFamily& family() const noexcept { return family_; }
  const TowerSpec& spec() const noexcept { return family_.spec; }
  int k() const noexcept { return family_.k(); }
  double rho() const noexcept { return rho_; }
  double log_rho() const { return std::log(rho_); }
  double gamma() const { return family_.spec.gamma.value(); }
  double tau() const { return family_.spec.tau; }
  const std::vector<BubbleInstance>& bubbles() const noexcept { return bubbles_; }
  const BubbleInstance& bubble(int j) const { return bubbles_.at(static_cast<std::size_t>(j - 1)); }
  double log_delta(int j) const { return bubble(j).log_delta; }

  // Signed, weighted coefficient of P w_j in W.
  double coefficient(int j) const {
    const auto& b = bubble(j);
    return b.sign * b.weight;
  }

  double value(double log_r) const {
    double w = 0;
    for (int j = 1; j <= k(); ++j) w += coefficient(j) * project_disk(bubble(j), log_r);
    return w;
  }

  // Bubble density |x|^(alpha_j - 2) e^(w_j).
  double density(int j, double log_r) const { return bubble_density(bubble(j), log_r); }

  double total_density(double log_r) const {
    double v = 0;
    for (const auto& b : bubbles_) v += bubble_density(b, log_r);
    return v;
  }

  // -Laplacian of W, exact.
  double minus_laplacian(double log_r) const {
    double v = 0;
    for (int j = 1; j <= k(); ++j) v += coefficient(j) * density(j, log_r);
    return v;
  }

  double plus_nonlinearity(double log_r) const { return plus_from_value(value(log_r)); }
  double minus_nonlinearity(double log_r) const { return minus_from_value(value(log_r)); }

  // rho e^u and rho tau e^(-gamma u) evaluated without forming e^u.
  double plus_from_value(double u) const { return std::exp(log_rho() + u); }
  double minus_from_value(double u) const { return std::exp(log_rho() + std::log(tau()) - gamma() * u); }

  FieldHeader header(std::string quantity) const {
    FieldHeader h;
    for (const auto& b : bubbles_) {
      h.alpha.push_back(b.alpha);
      h.delta_log.push_back(b.log_delta);
    }
    h.rho = rho_;
    h.gamma = family_.spec.gamma.str();
    h.k = k();
    h.quantity = std::move(quantity);
    return h;
  }

  // Innermost radius used by grids and solvers: delta_1 / 100.
  double inner_log_r() const { return bubbles_.front().log_delta - 2.0 * std::numbers::ln10; }

  LogGrid default_grid(double points_per_decade = 192.0) const {
    return LogGrid::uniform(inner_log_r(), 0.0, points_per_decade);
  }

 private:
  BubbleFamily family_;
  double rho_;
  std::vector<BubbleInstance> bubbles_;
};

inline RadialField ansatz_assemble(const Ansatz& ansatz, const LogGrid& grid) {
  return RadialField::sample(grid, [&](double t) { return ansatz.value(t); }, 0, ansatz.header("W"));
}

inline RadialField ansatz_assemble(const TowerSpec& spec, double rho) {
  const Ansatz ansatz(spec, rho);
  return ansatz_assemble(ansatz, ansatz.default_grid());
}

inline RadialField project_disk(const BubbleInstance& b, const LogGrid& grid) {
  return RadialField::sample(grid, [&](double t) { return project_disk(b, t); });
}

inline RadialField pz_disk(const BubbleInstance& b, const LogGrid& grid) {
  return RadialField::sample(grid, [&](double t) { return project_z_disk(b, t); });
}

// Largest |W(r) - M_k G(r, 0)| over the given radii.
inline double far_field_check(const Ansatz& ansatz, const std::vector<double>& radii) {
  const double total_mass = blowup_masses(ansatz.spec()).total;
  double worst = 0;
  for (double r : radii) {
    if (!(r > 0.0) || r > 1.0) throw ConfigError("far-field radius must lie in (0, 1]");
    const double t = std::log(r);
    worst = std::max(worst, std::fabs(ansatz.value(t) - total_mass * greens_disk(t).total()));
  }
  return worst;
}

}  // namespace bubbletower
