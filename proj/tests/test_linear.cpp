#include <bubbletower/bubbletower.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

using namespace bubbletower;

namespace {

constexpr double kPi = std::numbers::pi;

TowerSpec make_spec(int k, long long m, long long n) {
  TowerSpec s;
  s.k = k;
  s.gamma = GammaRatio::rational(m, n);
  return s;
}

ModeOperator free_operator(const LogGrid& grid, int mode) {
  return ModeOperator(grid, std::vector<double>(grid.size(), 0.0), mode);
}

// Floor below which a grid-extrapolated singular value is indistinguishable
// from zero; admissible modes sit at O(1) and above.
constexpr double kExtrapolationFloor = 1e-6;

bool tends_to_zero(double first, double last) { return last <= std::max(1e-2 * first, kExtrapolationFloor); }

// max |L Z| / max |V Z| for the mode-0 operator of one bubble applied to its
// dilation kernel Z, both scaled by r^2 (the form in t = ln r), interior nodes.
double kernel_defect(double alpha, double log_delta, double ppd) {
  BubbleInstance b;
  b.alpha = alpha;
  b.log_delta = log_delta;
  const auto grid = LogGrid::uniform(log_delta - 12.0, 0.0, ppd);
  const auto op = mode_operator(std::vector<BubbleInstance>{b}, grid, 0);
  std::vector<double> z(op.unknowns());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = z_eval(b, grid[i]);
  auto lz = op.matrix().multiply(z);
  const double h = grid.step();
  lz.back() -= z_eval(b, grid.t_max()) / h;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    num = std::max(num, std::fabs(lz[i]) / (i == 0 ? 0.5 * h : h));
    den = std::max(den, std::fabs(bubble_well(b, grid[i]) * z[i]));
  }
  return num / den;
}

}  // namespace

TEST(Symmetry, Period) {
  EXPECT_EQ(SymmetryClass(GammaRatio::rational(1, 1)).period(), 2);
  EXPECT_EQ(SymmetryClass(GammaRatio::rational(1, 2)).period(), 6);
  EXPECT_EQ(SymmetryClass(GammaRatio::rational(1, 3)).period(), 4);
  EXPECT_EQ(SymmetryClass(GammaRatio::rational(2, 5)).period(), 14);
  EXPECT_EQ(SymmetryClass(GammaRatio::real(0.7)).period(), 2);
}

TEST(Symmetry, AllowedModes) {
  const SymmetryClass h(GammaRatio::rational(1, 2));
  EXPECT_EQ(h.first_modes(4), (std::vector<long long>{0, 6, 12, 18}));
  EXPECT_TRUE(h.allows(12));
  EXPECT_FALSE(h.allows(3));
  EXPECT_FALSE(h.allows(1));
}

TEST(KernelModes, Examples) {
  // gamma = 1/2: alpha = 2, 4, 14, 10 -> alpha/2 = 1, 2, 7, 5, period 6.
  const auto r = kernel_mode_check(make_spec(4, 1, 2));
  EXPECT_EQ(r.period, 6);
  EXPECT_EQ(r.coprime_sum, 3);
  ASSERT_EQ(r.entries.size(), 4u);
  const long long expected[] = {1, 2, 1, 5};
  for (int i = 0; i < 4; ++i) {
    EXPECT_TRUE(r.entries[i].integral);
    EXPECT_FALSE(r.entries[i].allowed);
    EXPECT_EQ(r.entries[i].residue, expected[i]);
  }
}

TEST(KernelModes, NonIntegralEntries) {
  // gamma = 1/3: alpha_2/2 = 5/3 is not a Fourier mode.
  const auto r = kernel_mode_check(make_spec(2, 1, 3));
  EXPECT_TRUE(r.entries[0].integral);
  EXPECT_FALSE(r.entries[1].integral);
}

TEST(KernelModes, ExcludedForAllRationalGamma) {
  for (long long m = 1; m <= 12; ++m)
    for (long long n = m; n <= 12; ++n) {
      if (std::gcd(m, n) != 1) continue;
      const auto r = kernel_mode_check(make_spec(12, m, n));
      const long long s = m + n;
      for (const auto& e : r.entries) {
        if (!e.integral) continue;
        EXPECT_FALSE(e.allowed);
        const long long mod = e.residue % s;
        EXPECT_TRUE(mod == 1 % s || mod == s - 1) << m << '/' << n << " j=" << e.j;
      }
    }
}

TEST(KernelModes, RealGammaRejected) {
  TowerSpec s;
  s.k = 2;
  s.gamma = GammaRatio::real(0.7);
  EXPECT_THROW(kernel_mode_check(s), ConfigError);
}

TEST(ModeSolve, FreeOperatorPolynomialLoads) {
  // -Laplacian phi = r^l, phi(1) = 0  =>  phi = (r^l - r^(l+2)) / (4(l+1)).
  const auto grid = LogGrid::uniform(-12.0, 0.0, 192.0);
  for (int l : {0, 1, 2, 6}) {
    const auto op = free_operator(grid, l);
    const auto rhs = RadialField::sample(grid, [&](double t) { return std::exp(l * t); }, l);
    const auto phi = solve_mode(op, rhs);
    double err = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double r = std::exp(grid[i]);
      err = std::max(err, std::fabs(phi[i] - (std::pow(r, l) - std::pow(r, l + 2)) / (4.0 * (l + 1))));
    }
    EXPECT_LT(err, 2e-5) << "l=" << l;
    EXPECT_LE(op.relative_residual(phi, rhs), 1e-8);
  }
}

TEST(ModeSolve, SecondOrderConvergence) {
  std::vector<double> errs;
  for (double ppd : {48.0, 96.0, 192.0}) {
    const auto grid = LogGrid::uniform(-10.0, 0.0, ppd);
    const auto phi = solve_mode(free_operator(grid, 0), RadialField::sample(grid, [](double) { return 1.0; }));
    double err = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::fabs(phi[i] - (1 - std::exp(2 * grid[i])) / 4));
    errs.push_back(err);
  }
  EXPECT_GT(errs[0] / errs[1], 3.5);
  EXPECT_GT(errs[1] / errs[2], 3.5);
}

TEST(ModeSolve, TowerOperatorResidual) {
  const Ansatz a(make_spec(2, 1, 2), 1e-3);
  const auto grid = a.default_grid(192.0);
  for (int mode : {0, 6, 12}) {
    const auto op = mode_operator(a, grid, mode);
    const auto rhs = RadialField::sample(grid, [](double t) { return std::sin(3 * t); }, mode);
    const auto phi = solve_mode(op, rhs);
    EXPECT_LE(op.relative_residual(phi, rhs), 1e-8);
  }
}

TEST(ModeSolve, MaximumPrinciple) {
  const auto grid = LogGrid::uniform(-8.0, 0.0, 96.0);
  for (int mode : {0, 2}) {
    const auto rhs = RadialField::sample(grid, [](double t) { return std::exp(-t * t); }, mode);
    const auto phi = solve_mode(free_operator(grid, mode), rhs);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_GE(phi[i], 0.0);
  }
}

TEST(ModeSolve, GridMismatchRejected) {
  const auto op = free_operator(LogGrid::uniform(-4.0, 0.0, 48.0), 0);
  const auto other = RadialField::sample(LogGrid::uniform(-4.0, 0.0, 96.0), [](double) { return 1.0; });
  EXPECT_THROW(op.load(other), ConfigError);
  EXPECT_THROW(ModeOperator(LogGrid::uniform(-4.0, 0.0, 48.0), std::vector<double>(3, 0.0), 0), ConfigError);
}

TEST(Potential, PeakValue) {
  BubbleInstance b;  // alpha = 2, delta = 1
  EXPECT_NEAR(bubble_density(b, -30.0), 8.0, 1e-12);
}

TEST(Potential, TotalMass) {
  // Integral of V over the disk: every bubble carries 4 pi alpha_j, less its
  // closed-form tail outside r = 1.
  for (const auto& spec : {make_spec(1, 1, 1), make_spec(2, 1, 2), make_spec(3, 1, 2)}) {
    const Ansatz a(spec, spec.k == 3 ? 1e-5 : 1e-3);
    const auto v = potential_assemble(a, a.default_grid(192.0));
    double expected = 0, full = 0;
    for (const auto& b : a.bubbles()) {
      expected += 2 * kPi * bubble_well_mass_below(b, 0.0);
      full += 4 * kPi * b.alpha;
    }
    EXPECT_NEAR(lp_norm(v, 1.0), expected, 1e-4 * expected);
    EXPECT_NEAR(expected, full, 0.01 * full);
  }
}

TEST(Potential, WellMassClosedForm) {
  BubbleInstance b;
  b.alpha = 10.0 / 3.0;
  b.log_delta = -2.0;
  const double total = integrate([&](double t) { return bubble_well(b, t); }, -40.0, 40.0).value;
  EXPECT_NEAR(total, 2 * b.alpha, 1e-10);
  EXPECT_NEAR(bubble_well_mass_below(b, -2.0), b.alpha, 1e-14);
}

TEST(PlaneIdentities, KernelIntegrals) {
  for (double alpha : {2.0, 3.0, 10.0 / 3.0, 14.0 / 3.0}) {
    const auto v = intid_check(alpha);
    const double tol = 1e-6 * 4 * kPi * alpha;
    EXPECT_NEAR(v[0], 0.0, tol);
    EXPECT_NEAR(v[1], -4 * kPi * alpha, tol);
    EXPECT_NEAR(v[2], -4 * kPi, tol);
  }
  EXPECT_THROW(intid_check(1.5), ConfigError);
}

TEST(PlaneKernel, AnnihilatedToSecondOrder) {
  const double d48 = kernel_defect(3.0, std::log(1e-3), 48.0);
  const double d96 = kernel_defect(3.0, std::log(1e-3), 96.0);
  const double d192 = kernel_defect(3.0, std::log(1e-3), 192.0);
  EXPECT_LT(d192, 1e-3);
  EXPECT_NEAR(d48 / d96, 4.0, 0.5);
  EXPECT_NEAR(d96 / d192, 4.0, 0.5);
}

TEST(InverseNorm, FreeOperatorIndependentOfScale) {
  // With V = 0 nothing depends on rho; the norm is 1 in the energy pairing.
  const auto op = free_operator(LogGrid::uniform(-12.0, 0.0, 96.0), 0);
  EXPECT_NEAR(op.inverse_norm_estimate(1), 1.0, 1e-9);
  EXPECT_NEAR(free_operator(LogGrid::uniform(-24.0, 0.0, 96.0), 0).inverse_norm_estimate(1), 1.0, 1e-9);
}

TEST(InverseNorm, GrowsLinearlyInLogRho) {
  for (const auto& spec : {make_spec(1, 1, 1), make_spec(2, 1, 2)}) {
    const auto ladder = default_ladder(bubble_family(spec), 9).values();
    ASSERT_GE(std::log10(ladder.front() / ladder.back()), 4.0 - 1e-9);
    const auto series = inverse_norm_probe(spec, ladder, {0}, 7, 1, 96.0);
    std::vector<double> rho, norm;
    for (const auto& s : series) {
      rho.push_back(s.rho);
      norm.push_back(s.inv_norm_estimate);
    }
    const auto fit = fit_log_growth(rho, norm);
    EXPECT_GE(fit.r2, 0.9);
    EXPECT_GT(fit.slope, 0.0);
    EXPECT_LT(fit.ratio_spread, 2.5);
  }
}

TEST(InverseNorm, AdmissibleModesStayBounded) {
  const auto spec = make_spec(2, 1, 2);
  const auto series = inverse_norm_probe(spec, {1e-2, 1e-4}, {6, 12}, 3, 1, 96.0);
  for (const auto& s : series) {
    EXPECT_LT(s.inv_norm_estimate, 5.0);
    EXPECT_GT(s.smallest_singular_value, 1.0);
  }
}

TEST(InverseNorm, ProbeIsDeterministicAndParallelSafe) {
  const auto spec = make_spec(1, 1, 1);
  const auto a = inverse_norm_probe(spec, {1e-2, 1e-3}, {0, 1}, 11, 1, 48.0);
  const auto b = inverse_norm_probe(spec, {1e-2, 1e-3}, {0, 1}, 11, 3, 48.0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].inv_norm_estimate, b[i].inv_norm_estimate);
    EXPECT_EQ(a[i].extrapolated_singular_value, b[i].extrapolated_singular_value);
  }
}

TEST(InverseNorm, FitRejectsShortSeries) {
  EXPECT_THROW(fit_log_growth({1e-2, 1e-3}, {1, 2}), DegenerateFit);
  const auto fit = fit_log_growth({1e-1, 1e-2, 1e-3}, {std::log(10.0), 2 * std::log(10.0), 3 * std::log(10.0)});
  EXPECT_NEAR(fit.slope, 1.0, 1e-12);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
  EXPECT_NEAR(fit.ratio_spread, 1.0, 1e-12);
}

TEST(DiagnosticMode, SingularValueVanishes) {
  struct Case {
    TowerSpec spec;
    int mode;
  };
  // alpha_j / 2 for gamma = 1: 1, 3 ; for gamma = 1/2: 1, 2.
  for (const auto& c : {Case{make_spec(1, 1, 1), 1}, Case{make_spec(2, 1, 1), 3}, Case{make_spec(2, 1, 2), 1},
                        Case{make_spec(2, 1, 2), 2}}) {
    const auto ladder = default_ladder(bubble_family(c.spec), 8).values();
    const auto series = inverse_norm_probe(c.spec, ladder, {c.mode}, 5, 1, 96.0);
    EXPECT_TRUE(tends_to_zero(series.front().extrapolated_singular_value, series.back().extrapolated_singular_value))
        << series.front().extrapolated_singular_value << " -> " << series.back().extrapolated_singular_value;
  }
}

TEST(DiagnosticMode, SingleGridStallsAtDiscretizationFloor) {
  const Ansatz a(make_spec(2, 1, 2), 1e-4);
  const double coarse = mode_operator(a, a.default_grid(96.0), 1).smallest_singular_value();
  const double fine = mode_operator(a, a.default_grid(192.0), 1).smallest_singular_value();
  EXPECT_NEAR(coarse / fine, 4.0, 0.2);
  EXPECT_LT(extrapolated_singular_value(a, 1, 96.0), 1e-2 * fine);
}

TEST(DiagnosticMode, OuterBubbleDecaysLikeRho) {
  const auto spec = make_spec(1, 1, 1);
  const auto series = inverse_norm_probe(spec, {1e-2, 1e-4}, {1}, 5, 1, 96.0);
  const double rate = std::log(series[0].extrapolated_singular_value / series[1].extrapolated_singular_value) /
                      std::log(1e-2 / 1e-4);
  EXPECT_NEAR(rate, 1.0, 0.1);
}
