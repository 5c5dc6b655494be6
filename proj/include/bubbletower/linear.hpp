#pragma once

// The linearized operator -Laplacian - V around the tower, split into Fourier
// modes. Each mode is a tridiagonal weak form on the uniform grid in t = ln r
// with phi = 0 at r = 1 and decaying harmonic behaviour below the grid.

#include "ansatz.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "parameters.hpp"
#include "quadrature.hpp"
#include "radial_field.hpp"
#include "tridiagonal.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bubbletower {

class SymmetryClass {
 public:
  explicit SymmetryClass(const GammaRatio& gamma)
      : gamma_(gamma), period_(gamma.is_rational() ? std::lcm(2LL, gamma.m() + gamma.n()) : 2LL) {}

  long long period() const noexcept { return period_; }
  bool allows(long long mode) const { return mode % period_ == 0; }
  const GammaRatio& gamma() const noexcept { return gamma_; }

  std::vector<long long> first_modes(int count) const {
    std::vector<long long> out;
    for (int i = 0; i < count; ++i) out.push_back(period_ * i);
    return out;
  }

 private:
  GammaRatio gamma_;
  long long period_;
};

class ModeOperator {
 public:
  // well[i] = r_i^2 V(r_i) at the grid nodes; inner_well is the integral of
  // r^2 V dt below the grid, lumped into the first node for mode 0.
  ModeOperator(LogGrid grid, std::vector<double> well, int mode, double inner_well = 0.0)
      : grid_(std::move(grid)), well_(std::move(well)), mode_(mode) {
    if (well_.size() != grid_.size()) throw ConfigError("potential does not match the grid");
    if (grid_.size() < 3) throw ConfigError("grid too small for a mode solve");
    const std::size_t n = grid_.size() - 1;  // last node carries the Dirichlet value
    const double h = grid_.step();
    const double ell = std::abs(mode_);
    weights_.assign(n, h);
    weights_[0] = 0.5 * h;
    stiffness_.diag.assign(n, 2.0 / h);
    stiffness_.off.assign(n - 1, -1.0 / h);
    stiffness_.diag[0] = 1.0 / h + ell;
    for (std::size_t i = 0; i < n; ++i) stiffness_.diag[i] += ell * ell * weights_[i];

    matrix_ = stiffness_;
    for (std::size_t i = 0; i < n; ++i) matrix_.diag[i] -= weights_[i] * well_[i];
    if (mode_ == 0) matrix_.diag[0] -= inner_well;

    mass_.resize(n);
    for (std::size_t i = 0; i < n; ++i) mass_[i] = weights_[i] * std::exp(2.0 * grid_[i]);
    mass_[0] += std::exp(2.0 * grid_[0]) / (2.0 + ell);
    lu_.emplace(matrix_);
  }

  int mode() const noexcept { return mode_; }
  const LogGrid& grid() const noexcept { return grid_; }
  std::size_t unknowns() const noexcept { return mass_.size(); }
  const SymmetricTridiagonal& matrix() const noexcept { return matrix_; }
  const SymmetricTridiagonal& stiffness() const noexcept { return stiffness_; }
  const std::vector<double>& mass() const noexcept { return mass_; }
  const std::vector<double>& well() const noexcept { return well_; }

  // A^{-1} b for a weak-form load vector b.
  std::vector<double> solve_load(std::vector<double> b) const { return lu_->solve(std::move(b)); }

  std::vector<double> load(const RadialField& rhs) const {
    if (!(rhs.grid == grid_)) throw ConfigError("right-hand side lives on a different grid");
    std::vector<double> b(unknowns());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = mass_[i] * rhs[i];
    return b;
  }

  RadialField extend(std::vector<double> interior, FieldHeader header = {}) const {
    interior.push_back(0.0);
    return RadialField(grid_, std::move(interior), mode_, std::move(header));
  }

  // Discrete action of the operator: (A phi) / M at the interior nodes.
  RadialField apply(const RadialField& phi) const {
    std::vector<double> x(phi.values.begin(), phi.values.end() - 1);
    auto y = matrix_.multiply(x);
    const double h = grid_.step();
    // The boundary value enters the last interior row.
    y.back() -= phi.values.back() / h;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] /= mass_[i];
    y.push_back(0.0);
    return RadialField(grid_, std::move(y), mode_, phi.header);
  }

  double relative_residual(const RadialField& phi, const RadialField& rhs) const {
    std::vector<double> x(phi.values.begin(), phi.values.end() - 1);
    const auto ax = matrix_.multiply(x);
    const auto b = load(rhs);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      num += (ax[i] - b[i]) * (ax[i] - b[i]);
      den += b[i] * b[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  }

  // Eigenvalue of -d_tt + mode^2 - r^2 V nearest zero, with respect to dt.
  double nearest_eigenvalue() const { return eigenvalue_nearest_zero(matrix_.scaled(weights_)); }

  double smallest_singular_value() const { return std::fabs(nearest_eigenvalue()); }

  // Norm of the inverse from H^-1 to H^1_0 (both measured with the stiffness
  // form) by power iteration on A^{-1} S from random starts.
  double inverse_norm_estimate(std::uint64_t seed, int starts = 8, int steps = 12) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double best = 0;
    for (int s = 0; s < starts; ++s) {
      std::vector<double> x(unknowns());
      for (auto& v : x) v = normal(rng);
      double norm = std::sqrt(stiffness_.dot(x, x));
      for (auto& v : x) v /= norm;
      double estimate = 0;
      for (int it = 0; it < steps; ++it) {
        auto y = solve_load(stiffness_.multiply(x));
        estimate = std::sqrt(stiffness_.dot(y, y));
        for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] / estimate;
      }
      best = std::max(best, estimate);
    }
    return best;
  }

 private:
  LogGrid grid_;
  std::vector<double> well_;
  int mode_;
  std::vector<double> weights_;
  SymmetricTridiagonal stiffness_;
  SymmetricTridiagonal matrix_;
  std::vector<double> mass_;
  std::optional<TridiagonalLu> lu_;
};

// V = sum of the k bubble densities on the grid.
inline RadialField potential_assemble(const Ansatz& ansatz, const LogGrid& grid) {
  return RadialField::sample(grid, [&](double t) { return ansatz.total_density(t); }, 0, ansatz.header("V"));
}

inline RadialField potential_assemble(const TowerSpec& spec, double rho) {
  const Ansatz ansatz(spec, rho);
  return potential_assemble(ansatz, ansatz.default_grid());
}

inline ModeOperator mode_operator(const std::vector<BubbleInstance>& bubbles, const LogGrid& grid, int mode) {
  std::vector<double> well(grid.size(), 0.0);
  double inner = 0;
  for (const auto& b : bubbles) {
    for (std::size_t i = 0; i < grid.size(); ++i) well[i] += bubble_well(b, grid[i]);
    inner += bubble_well_mass_below(b, grid.t_min());
  }
  return ModeOperator(grid, std::move(well), mode, inner);
}

inline ModeOperator mode_operator(const Ansatz& ansatz, const LogGrid& grid, int mode) {
  return mode_operator(ansatz.bubbles(), grid, mode);
}

// Smallest singular value of a mode extrapolated to zero grid step from
// points_per_decade and twice that (the scheme is second order). Resolves
// values far below the O(h^2 mode^4) floor of a single grid.
inline double extrapolated_singular_value(const Ansatz& ansatz, int mode, double points_per_decade = 192.0) {
  const double coarse = mode_operator(ansatz, ansatz.default_grid(points_per_decade), mode).nearest_eigenvalue();
  const double fine = mode_operator(ansatz, ansatz.default_grid(2.0 * points_per_decade), mode).nearest_eigenvalue();
  return std::fabs((4.0 * fine - coarse) / 3.0);
}

// Solves the mode equation and verifies the discrete residual.
inline RadialField solve_mode(const ModeOperator& op, const RadialField& rhs, double tolerance = 1e-8) {
  auto phi = op.extend(op.solve_load(op.load(rhs)), rhs.header);
  const double residual = op.relative_residual(phi, rhs);
  if (!(residual <= tolerance)) {
    const double sigma = op.smallest_singular_value();
    throw NearSingular("mode " + std::to_string(op.mode()) + " solve residual " + std::to_string(residual) +
                           "; smallest singular value " + std::to_string(sigma),
                       sigma);
  }
  return phi;
}

// ---- kernel modes ----------------------------------------------------------------------

struct KernelModeEntry {
  int j = 0;
  Rational half_alpha;
  bool integral = false;
  long long residue = 0;  // (alpha_j / 2) mod period
  bool allowed = false;
};

struct KernelModeReport {
  long long period = 2;
  long long coprime_sum = 0;
  std::vector<KernelModeEntry> entries;
};

// For every integral alpha_j / 2 the dilation-type kernels of that mode must
// fall outside the symmetric class; a hit throws SymmetryViolation.
inline KernelModeReport kernel_mode_check(const TowerSpec& spec) {
  spec.validate();
  if (!spec.gamma.is_rational()) throw ConfigError("kernel mode check needs a rational gamma");
  const SymmetryClass symmetry(spec.gamma);
  KernelModeReport out;
  out.period = symmetry.period();
  out.coprime_sum = spec.gamma.m() + spec.gamma.n();
  for (int j = 1; j <= spec.k; ++j) {
    const CoprimeForm form = coprime_form(j, spec.gamma);
    KernelModeEntry e;
    e.j = j;
    e.half_alpha = form.half_alpha;
    e.integral = form.status == CoprimeForm::Status::form;
    if (e.integral) {
      const BigInt h = boost::multiprecision::numerator(form.half_alpha);
      e.residue = static_cast<long long>(h % out.period);
      e.allowed = symmetry.allows(static_cast<long long>(h));
      if (e.allowed)
        throw SymmetryViolation("alpha_" + std::to_string(j) + "/2 = " + h.str() +
                                " is an admissible Fourier mode for gamma = " + spec.gamma.str());
    }
    out.entries.push_back(e);
  }
  return out;
}

// ---- whole-plane identities ---------------------------------------------------------------

// The three plane integrals of 2 alpha^2 |y|^(alpha-2) / (1+|y|^alpha)^2 * Z
// against 1, ln(1+|y|^alpha)^2 and ln|y|, with Z = (1-|y|^alpha)/(1+|y|^alpha).
inline std::array<double, 3> intid_check(double alpha, const QuadratureOptions& opt = {}) {
  if (!(alpha >= 2.0)) throw ConfigError("alpha must be >= 2");
  const double pi = std::numbers::pi;
  auto kernel = [alpha, pi](double s) {
    const double x = 0.5 * alpha * s;
    const double c = std::cosh(x);
    return -2.0 * pi * 2.0 * alpha * alpha * std::tanh(x) / (4.0 * c * c);
  };
  const double inf = std::numeric_limits<double>::infinity();
  auto plane = [&](auto&& f) {
    return integrate(f, -inf, 0.0, opt).value + integrate(f, 0.0, inf, opt).value;
  };
  return {plane([&](double s) { return kernel(s); }),
          plane([&](double s) { return kernel(s) * 2.0 * log_add_exp(0.0, alpha * s); }),
          plane([&](double s) { return kernel(s) * s; })};
}

// ---- inverse norm probes -------------------------------------------------------------------

struct InverseNormSample {
  double rho = 0;
  int mode = 0;
  double smallest_singular_value = 0;
  double extrapolated_singular_value = 0;
  double inv_norm_estimate = 0;
};

inline std::vector<InverseNormSample> inverse_norm_probe(const TowerSpec& spec, const std::vector<double>& ladder,
                                                         const std::vector<int>& modes, std::uint64_t seed,
                                                         unsigned workers = 1,
                                                         double points_per_decade = 192.0) {
  const BubbleFamily fam = bubble_family(spec);
  const std::size_t per_rho = modes.size();
  return parallel_map<InverseNormSample>(ladder.size() * per_rho, workers, [&](std::size_t idx) {
    const double rho = ladder[idx / per_rho];
    const int mode = modes[idx % per_rho];
    const Ansatz ansatz(fam, rho);
    const auto op = mode_operator(ansatz, ansatz.default_grid(points_per_decade), mode);
    InverseNormSample s;
    s.rho = rho;
    s.mode = mode;
    s.smallest_singular_value = op.smallest_singular_value();
    s.extrapolated_singular_value = extrapolated_singular_value(ansatz, mode, points_per_decade);
    s.inv_norm_estimate = op.inverse_norm_estimate(seed + idx);
    return s;
  });
}

struct LinearGrowthFit {
  double slope = 0;  // empirical c in ||L^-1|| ~ c |ln rho|
  double intercept = 0;
  double r2 = 0;
  double ratio_spread = 0;  // max/min of norm / |ln rho|
};

inline LinearGrowthFit fit_log_growth(const std::vector<double>& rho, const std::vector<double>& norm) {
  if (rho.size() != norm.size() || rho.size() < 3) throw DegenerateFit("growth fit needs >= 3 points");
  const auto n = static_cast<double>(rho.size());
  std::vector<double> x;
  for (double r : rho) x.push_back(std::fabs(std::log(r)));
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(norm.begin(), norm.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  double lo = INFINITY, hi = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (norm[i] - my);
    syy += (norm[i] - my) * (norm[i] - my);
    lo = std::min(lo, norm[i] / x[i]);
    hi = std::max(hi, norm[i] / x[i]);
  }
  LinearGrowthFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  out.ratio_spread = hi / lo;
  return out;
}

}  // namespace bubbletower
