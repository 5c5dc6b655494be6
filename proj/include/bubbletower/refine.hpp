#pragma once

// Radial correction phi with u = W + phi solving -Laplacian u = rho f(u),
// f(t) = e^t - tau e^(-gamma t), found as the fixed point of
//   T(phi) = L^{-1} (N(phi) + S phi + R)
// on the mode-0 discretization. A damped Newton solve of the same discrete
// equation serves as an independent check.

#include "ansatz.hpp"
#include "errors.hpp"
#include "linear.hpp"
#include "parameters.hpp"
#include "radial_field.hpp"
#include "residual.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bubbletower {

struct RefineConfig {
  int max_iters = 50;
  double tol_rel = 1e-10;
  double ball_radius_factor = 1.0;
  double p = 1.05;
  double r = 1.1;
  double points_per_decade = 192.0;
  std::uint64_t seed = 20240601;

  void validate() const {
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(tol_rel > 0.0)) throw ConfigError("tol_rel must be positive");
    if (!(ball_radius_factor > 0.0)) throw ConfigError("ball radius factor must be positive");
    if (!(p > 1.0) || !(r > 1.0)) throw ConfigError("p and r must exceed 1");
    if (!(points_per_decade >= 48.0)) throw ConfigError("grid density must be >= 48 points per decade");
  }
};

// e^x - 1 - x without cancellation near 0.
inline double expm1_minus_x(double x) {
  if (std::fabs(x) > 0.1) return std::expm1(x) - x;
  double term = 0.5 * x * x;
  double sum = term;
  for (int n = 3; n < 30; ++n) {
    term *= x / n;
    sum += term;
    if (std::fabs(term) <= 1e-17 * std::fabs(sum)) break;
  }
  return sum;
}

namespace detail {

inline constexpr double kLogBudget = 700.0;

inline void guard_exponent(double e) {
  if (e > kLogBudget) throw OverflowGuard("exponent " + std::to_string(e) + " exceeds the log-space budget");
}

}  // namespace detail

// N(phi) = rho [f(W + phi) - f(W) - f'(W) phi], pointwise.
inline double nonlinear_remainder_at(double w, double phi, double log_rho, double tau, double gamma) {
  const double up = log_rho + w;
  const double down = log_rho + std::log(tau) - gamma * w;
  detail::guard_exponent(up + phi);
  detail::guard_exponent(down - gamma * phi);
  return std::exp(up) * expm1_minus_x(phi) - std::exp(down) * expm1_minus_x(-gamma * phi);
}

inline RadialField nonlinear_remainder(const RadialField& w, const RadialField& phi, const TowerSpec& spec,
                                       double rho) {
  if (!(w.grid == phi.grid)) throw ConfigError("W and phi live on different grids");
  std::vector<double> out(w.size());
  const double lr = std::log(rho);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = nonlinear_remainder_at(w[i], phi[i], lr, spec.tau, spec.gamma.value());
  return RadialField(w.grid, std::move(out), 0, w.header);
}

class FixedPointProblem {
 public:
  explicit FixedPointProblem(Ansatz ansatz, double points_per_decade = 192.0)
      : ansatz_(std::move(ansatz)),
        grid_(ansatz_.default_grid(points_per_decade)),
        op_(mode_operator(ansatz_, grid_, 0)) {
    const ResidualModel model(ansatz_, grid_.t_min());
    std::vector<double> w(grid_.size()), r(grid_.size()), s(grid_.size()), lap(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const ResidualPoint p = model.at(grid_[i]);
      w[i] = ansatz_.value(grid_[i]);
      r[i] = p.r();
      s[i] = p.s(ansatz_.gamma());
      lap[i] = ansatz_.minus_laplacian(grid_[i]);
    }
    w_ = RadialField(grid_, std::move(w), 0, ansatz_.header("W"));
    r_ = RadialField(grid_, std::move(r), 0, ansatz_.header("R"));
    s_ = RadialField(grid_, std::move(s), 0, ansatz_.header("S"));
    minus_lap_w_ = RadialField(grid_, std::move(lap), 0, ansatz_.header("-Laplacian W"));
  }

  const Ansatz& ansatz() const noexcept { return ansatz_; }
  const LogGrid& grid() const noexcept { return grid_; }
  const ModeOperator& op() const noexcept { return op_; }
  const RadialField& w() const noexcept { return w_; }
  const RadialField& r() const noexcept { return r_; }
  const RadialField& s() const noexcept { return s_; }
  const RadialField& minus_laplacian_w() const noexcept { return minus_lap_w_; }

  RadialField zero() const { return RadialField(grid_, std::vector<double>(grid_.size(), 0.0), 0, ansatz_.header("phi")); }

  RadialField remainder(const RadialField& phi) const {
    return nonlinear_remainder(w_, phi, ansatz_.spec(), ansatz_.rho());
  }

  // L^{-1} psi with zero boundary value.
  RadialField inverse(const RadialField& psi) const {
    return op_.extend(op_.solve_load(op_.load(psi)), ansatz_.header("phi"));
  }

  // T(phi) = L^{-1}(N(phi) + S phi + R)
  RadialField apply_map(const RadialField& phi) const {
    const RadialField n = remainder(phi);
    std::vector<double> rhs(grid_.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = n[i] + s_[i] * phi[i] + r_[i];
    return inverse(RadialField(grid_, std::move(rhs)));
  }

  // Discrete Dirichlet energy, approximating ||grad phi||_L2 on the disk.
  double energy_norm(const RadialField& phi) const {
    std::vector<double> x(phi.values.begin(), phi.values.end() - 1);
    return std::sqrt(2.0 * std::numbers::pi * op_.stiffness().dot(x, x));
  }

  double energy_distance(const RadialField& a, const RadialField& b) const {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
    return energy_norm(RadialField(grid_, std::move(d)));
  }

 private:
  Ansatz ansatz_;
  LogGrid grid_;
  ModeOperator op_;
  RadialField w_, r_, s_, minus_lap_w_;
};

inline RadialField t_apply(const FixedPointProblem& problem, const RadialField& phi) {
  return problem.apply_map(phi);
}

// ---- verification ------------------------------------------------------------------------

struct Verification {
  double pde_residual_lp = 0;     // ||-Laplacian u - rho f(u)||_p
  double ansatz_residual_lp = 0;  // same functional at phi = 0
  MassPair masses;
  double far_field_dev = 0;
  double ansatz_far_field_dev = 0;
  int sign_changes = 0;
};

namespace detail {

// -Laplacian of a radial grid function: fourth-order differences in t away
// from the ends, second order next to them, even reflection at the inner end.
inline std::vector<double> minus_laplacian(const RadialField& phi) {
  const std::size_t n = phi.size();
  const double h = phi.grid.step();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double tt;
    if (i >= 2 && i + 2 < n) {
      tt = (-phi[i - 2] + 16.0 * phi[i - 1] - 30.0 * phi[i] + 16.0 * phi[i + 1] - phi[i + 2]) / (12.0 * h * h);
    } else {
      const double left = i == 0 ? phi[1] : phi[i - 1];
      tt = (left - 2.0 * phi[i] + phi[i + 1]) / (h * h);
    }
    out[i] = -std::exp(-2.0 * phi.log_r(i)) * tt;
  }
  return out;
}

inline MassPair grid_masses(const FixedPointProblem& problem, const RadialField& u) {
  const Ansatz& a = problem.ansatz();
  const double two_pi = 2.0 * std::numbers::pi;
  const double h = u.grid.step();
  MassPair m;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double wgt = (i == 0 || i + 1 == u.size()) ? 0.5 * h : h;
    const double area = two_pi * std::exp(2.0 * u.log_r(i)) * wgt;
    m.plus += area * a.plus_from_value(u[i]);
    m.minus += area * a.minus_from_value(u[i]);
  }
  const double disk = std::numbers::pi * std::exp(2.0 * u.grid.t_min());
  m.plus += disk * a.plus_from_value(u[0]);
  m.minus += disk * a.minus_from_value(u[0]);
  return m;
}

}  // namespace detail

inline Verification verify_solution(const FixedPointProblem& problem, const RadialField& phi, double p = 1.0) {
  const Ansatz& a = problem.ansatz();
  const auto& w = problem.w();
  const auto& r = problem.r();
  const auto lap_phi = detail::minus_laplacian(phi);
  const double lr = a.log_rho();
  std::vector<double> res(phi.size(), 0.0), base(phi.size(), 0.0);
  // -Lap u - rho f(u) = -R - Lap phi - rho [f(W + phi) - f(W)], last node excluded.
  for (std::size_t i = 0; i + 1 < phi.size(); ++i) {
    const double up = std::exp(lr + w[i]);
    const double down = std::exp(lr + std::log(a.tau()) - a.gamma() * w[i]);
    const double df = up * std::expm1(phi[i]) - down * std::expm1(-a.gamma() * phi[i]);
    res[i] = -r[i] + lap_phi[i] - df;
    base[i] = -r[i];
  }
  Verification v;
  v.pde_residual_lp = lp_norm(RadialField(phi.grid, std::move(res)), p);
  v.ansatz_residual_lp = lp_norm(RadialField(phi.grid, std::move(base)), p);
  std::vector<double> u(phi.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = w[i] + phi[i];
  const RadialField uf(phi.grid, std::move(u), 0, a.header("u"));
  v.masses = detail::grid_masses(problem, uf);
  v.sign_changes = sign_changes(uf);
  const double total = blowup_masses(a.spec()).total;
  for (double radius : {0.25, 0.5, 0.75}) {
    const double t = std::log(radius);
    const double g = total * greens_disk(t).total();
    v.far_field_dev = std::max(v.far_field_dev, std::fabs(a.value(t) + phi.at(t) - g));
    v.ansatz_far_field_dev = std::max(v.ansatz_far_field_dev, std::fabs(a.value(t) - g));
  }
  return v;
}

// ---- iteration ------------------------------------------------------------------------------

struct SolutionReport {
  double rho = 0;
  bool converged = false;
  int iters = 0;
  double phi_norm = 0;
  double bound_ratio = 0;  // phi_norm / (R rho^beta_bar |ln rho|)
  std::optional<double> contraction_factor;  // from consecutive iterates above the noise floor
  double probe_factor = 0;                   // local rate of T around the fixed point
  bool relaxed = false;
  std::vector<double> increments;
  double pde_residual_lp = 0;
  double ansatz_residual_lp = 0;
  int sign_changes = 0;
  MassPair masses;
  double mass_identity_rel = 0;  // |8pi(m+ + m-/gamma) - (m+ - m-)^2| / (m+ - m-)^2
  double far_field_dev = 0;
  double ansatz_far_field_dev = 0;
  RadialField phi;
};

// Growth rate of T near phi: power iteration on finite differences of size
// eps * ||phi|| in the energy norm.
inline double probe_contraction(const FixedPointProblem& problem, const RadialField& phi, std::uint64_t seed,
                                int steps = 6, double eps = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const RadialField base = problem.apply_map(phi);
  const double size = eps * std::max(problem.energy_norm(phi), 1e-300);
  // Start from a smooth direction: L^{-1} of noise.
  std::vector<double> noise(phi.size());
  for (auto& x : noise) x = normal(rng);
  RadialField dir = problem.inverse(RadialField(phi.grid, std::move(noise)));
  double rate = 0;
  for (int s = 0; s < steps; ++s) {
    const double n = problem.energy_norm(dir);
    if (!(n > 0.0)) return 0.0;
    std::vector<double> shifted(phi.size());
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = phi[i] + size * dir[i] / n;
    const RadialField image = problem.apply_map(RadialField(phi.grid, std::move(shifted)));
    std::vector<double> diff(phi.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = image[i] - base[i];
    dir = RadialField(phi.grid, std::move(diff));
    rate = problem.energy_norm(dir) / size;
  }
  return rate;
}

inline SolutionReport iterate_to_fixed_point(const FixedPointProblem& problem, const RefineConfig& cfg = {}) {
  cfg.validate();
  const Ansatz& a = problem.ansatz();
  SolutionReport rep;
  rep.rho = a.rho();
  RadialField phi = problem.zero();
  double relaxation = 1.0;
  std::optional<double> last_inc;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    RadialField next = problem.apply_map(phi);
    if (relaxation != 1.0)
      for (std::size_t i = 0; i < next.size(); ++i) next.values[i] = phi[i] + relaxation * (next[i] - phi[i]);
    const double inc = problem.energy_distance(next, phi);
    const double size = problem.energy_norm(next);
    const double floor = 1e-12 * size;
    rep.increments.push_back(inc);
    rep.iters = it;
    if (last_inc && *last_inc > floor && inc > floor) {
      const double factor = inc / *last_inc;
      rep.contraction_factor = std::max(rep.contraction_factor.value_or(0.0), factor);
      if (factor >= 1.0) throw NoContraction("iteration expands at rho = " + std::to_string(a.rho()), factor);
      if (factor >= 0.9 && relaxation == 1.0) {
        relaxation = 0.5;
        rep.relaxed = true;
      }
    }
    last_inc = inc;
    phi = std::move(next);
    if (inc <= cfg.tol_rel * size) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged)
    throw NoContraction("no convergence in " + std::to_string(cfg.max_iters) + " iterations at rho = " +
                            std::to_string(a.rho()),
                        rep.contraction_factor.value_or(1.0));
  rep.probe_factor = probe_contraction(problem, phi, cfg.seed);
  if (rep.probe_factor >= 1.0)
    throw NoContraction("map is not contracting near the fixed point", rep.probe_factor);
  rep.phi_norm = problem.energy_norm(phi);
  const double beta = to_double(a.family().beta_bar);
  rep.bound_ratio = rep.phi_norm / (cfg.ball_radius_factor * std::exp(beta * a.log_rho()) * std::fabs(a.log_rho()));

  const Verification v = verify_solution(problem, phi, 1.0);
  rep.pde_residual_lp = v.pde_residual_lp;
  rep.ansatz_residual_lp = v.ansatz_residual_lp;
  rep.sign_changes = v.sign_changes;
  rep.masses = v.masses;
  rep.far_field_dev = v.far_field_dev;
  rep.ansatz_far_field_dev = v.ansatz_far_field_dev;
  const double diff = rep.masses.plus - rep.masses.minus;
  const double lhs = 8.0 * std::numbers::pi * (rep.masses.plus + rep.masses.minus / a.gamma());
  rep.mass_identity_rel = std::fabs(lhs - diff * diff) / (diff * diff);
  rep.phi = std::move(phi);
  return rep;
}

inline SolutionReport iterate_to_fixed_point(const TowerSpec& spec, double rho, const RefineConfig& cfg = {}) {
  cfg.validate();
  const FixedPointProblem problem(Ansatz(spec, rho), cfg.points_per_decade);
  return iterate_to_fixed_point(problem, cfg);
}

// ---- Newton check -------------------------------------------------------------------------------

struct NewtonResult {
  RadialField phi;
  int iters = 0;
  double residual = 0;  // ||G(phi)|| / ||M R||
};

// Damped Newton on G(phi) = A phi - M (N(phi) + S phi + R) = 0 from phi = 0,
// with backtracking on ||G||.
inline NewtonResult newton_solve(const FixedPointProblem& problem, int max_iters = 50, double tol = 1e-14) {
  const ModeOperator& op = problem.op();
  const Ansatz& a = problem.ansatz();
  const std::size_t n = op.unknowns();
  const auto& w = problem.w();
  const auto& s = problem.s();
  const auto& r = problem.r();
  const auto& mass = op.mass();
  const double lr = a.log_rho();
  const double g = a.gamma();
  const double ltau = std::log(a.tau());

  auto residual = [&](const std::vector<double>& x) {
    auto out = op.matrix().multiply(x);
    for (std::size_t i = 0; i < n; ++i) {
      const double nl = nonlinear_remainder_at(w[i], x[i], lr, a.tau(), g);
      out[i] -= mass[i] * (nl + s[i] * x[i] + r[i]);
    }
    return out;
  };
  auto norm = [](const std::vector<double>& v) {
    double q = 0;
    for (double x : v) q += x * x;
    return std::sqrt(q);
  };

  std::vector<double> x(n, 0.0);
  std::vector<double> mr(n);
  for (std::size_t i = 0; i < n; ++i) mr[i] = mass[i] * r[i];
  const double scale = std::max(norm(mr), 1e-300);
  auto gx = residual(x);
  NewtonResult out;
  for (int it = 1; it <= max_iters; ++it) {
    SymmetricTridiagonal jac = op.matrix();
    for (std::size_t i = 0; i < n; ++i) {
      // d/dphi of N + S phi = rho f'(W + phi) - sum V
      const double dn = std::exp(lr + w[i]) * std::expm1(x[i]) +
                        g * std::exp(lr + ltau - g * w[i]) * std::expm1(-g * x[i]);
      jac.diag[i] -= mass[i] * (s[i] + dn);
    }
    auto step = TridiagonalLu(jac).solve(gx);
    double lambda = 1.0;
    const double g0 = norm(gx);
    std::vector<double> trial(n);
    std::vector<double> gt;
    for (int back = 0; back < 30; ++back) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - lambda * step[i];
      gt = residual(trial);
      if (norm(gt) < (1.0 - 1e-4 * lambda) * g0 || norm(gt) <= tol * scale) break;
      lambda *= 0.5;
    }
    x = trial;
    gx = std::move(gt);
    out.iters = it;
    if (norm(step) * lambda <= tol * std::max(norm(x), 1e-300) || norm(gx) <= tol * scale) break;
  }
  out.residual = norm(gx) / scale;
  out.phi = op.extend(std::move(x), a.header("phi"));
  return out;
}

}  // namespace bubbletower
