// Acceptance runner: one PASS/FAIL line per criterion, followed by indented
// measurements. `--criterion N` runs a single criterion and sets the exit code.

#include <bubbletower/bubbletower.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace bt = bubbletower;

namespace {

constexpr double kPi = std::numbers::pi;

class Criterion {
 public:
  void check(bool ok, const std::string& what) {
    pass_ = pass_ && ok;
    lines_.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { lines_.push_back("     " + what); }
  bool passed() const { return pass_; }
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  bool pass_ = true;
  std::vector<std::string> lines_;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bt::TowerSpec make_spec(int k, long long m, long long n) {
  bt::TowerSpec s;
  s.k = k;
  s.gamma = bt::GammaRatio::rational(m, n);
  return s;
}

struct Fixture {
  int k;
  long long m, n;
  std::string name() const { return fmt("k=%d gamma=%lld/%lld", k, m, n); }
  bt::TowerSpec spec() const { return make_spec(k, m, n); }
};

const Fixture kFixtures[] = {{1, 1, 1}, {2, 1, 2}, {2, 1, 1}, {3, 1, 2}};

// Measured rates may beat a predicted exponent but not undershoot it by more
// than 10% of its size.
double slope_floor(double predicted) { return predicted - 0.1 * std::fabs(predicted); }

std::vector<std::pair<long long, long long>> coprime_gammas(long long limit) {
  std::vector<std::pair<long long, long long>> out;
  for (long long m = 1; m <= limit; ++m)
    for (long long n = m; n <= limit; ++n)
      if (std::gcd(m, n) == 1) out.emplace_back(m, n);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: exact algebra ------------------------------------------------------------------

void exact_algebra(Criterion& c) {
  using bt::Rational;
  const auto t0 = std::chrono::steady_clock::now();
  long checks = 0, failures = 0;
  auto expect = [&](bool ok) {
    ++checks;
    if (!ok) ++failures;
  };
  for (const auto& [m, n] : coprime_gammas(12)) {
    const Rational g(m, n);
    const auto gamma = bt::GammaRatio::rational(m, n);
    for (int k = 1; k <= 12; ++k) {
      const auto spec = make_spec(k, m, n);
      const auto alphas = bt::alpha_recursive<Rational>(k, g);
      for (int j = 1; j <= k; ++j) expect(alphas[j - 1] == bt::alpha_closed<Rational>(j, g));
      const auto direct = bt::alpha_sums_direct<Rational>(k, g);
      const auto closed = bt::alpha_sums_closed<Rational>(k, g);
      expect(direct.sum_odd == closed.sum_odd);
      expect(direct.sum_even_over_gamma == closed.sum_even_over_gamma);
      expect(direct.signed_sum == closed.signed_sum);
      expect(bt::parity_sums(k) == bt::parity_sums_enumerated(k));
      const auto fam = bt::bubble_family(spec);
      for (int j = 1; j <= k; ++j) {
        expect(fam[j].r == fam[j].alpha * fam[j].s);
        if (j < k) expect(fam[j].q && *fam[j].q == fam[j].s - fam[j + 1].s);
        const auto form = bt::coprime_form(j, gamma);
        if (form.status == bt::CoprimeForm::Status::form) {
          const long long h = static_cast<long long>(boost::multiprecision::numerator(form.half_alpha));
          const long long r = h % (m + n);
          expect(r == 1 % (m + n) || r == m + n - 1);
        }
      }
      expect(bt::delta_recursive_check(fam, 1e-3) == 0.0);
      expect(bt::mass_identity_residual(bt::blowup_masses(spec), gamma) == 0.0);
      const auto routes = bt::physics_routes<Rational>(k, g);
      expect(routes.lambda_direct == routes.lambda_from_total);
      expect(routes.lambda_direct == routes.lambda_closed);
      expect(routes.p_bar_direct == routes.p_bar_closed);
      expect(routes.p_bar_direct >= 0 && routes.p_bar_direct <= 1);
    }
  }
  const double secs = seconds_since(t0);
  c.check(failures == 0, fmt("%ld exact comparisons over coprime m <= n <= 12, k <= 12; %ld mismatches", checks,
                             failures));
  c.check(secs < 1.0, fmt("runtime %.3f s (< 1 s)", secs));
}

// ---- 2: spot values ----------------------------------------------------------------------

void spot_values(Criterion& c) {
  using bt::Rational;
  bool ok = true;
  for (const auto& [m, n] : coprime_gammas(6)) {
    const Rational g(m, n);
    const auto alphas = bt::alpha_recursive<Rational>(8, g);
    for (int h = 1; h <= 4; ++h) {
      ok = ok && alphas[2 * h - 2] == 2 * (Rational(2 * h - 1) + Rational(2 * (h - 1)) / g);
      ok = ok && alphas[2 * h - 1] == 2 * (Rational(2 * h - 1) + 2 * h * g);
    }
  }
  c.check(ok, "alpha_1..alpha_8 match the explicit odd/even lists for all coprime m <= n <= 6");
  bool rates = true;
  for (const auto& [m, n] : coprime_gammas(6)) {
    const Rational g(m, n);
    const auto fam = bt::bubble_family(make_spec(2, m, n));
    rates = rates && fam[1].s == (2 + g) / (2 * g) && fam[2].s == 1 / (2 * (1 + 2 * g));
  }
  c.check(rates, "k=2: s_1 = (2+gamma)/(2 gamma), s_2 = 1/(2(1+2 gamma))");
  const auto half = bt::bubble_family(make_spec(2, 1, 2));
  c.note("gamma=1/2: alpha = " + bt::to_string(half[1].alpha) + ", " + bt::to_string(half[2].alpha) +
         "; s = " + bt::to_string(half[1].s) + ", " + bt::to_string(half[2].s));
}

// ---- 3: quadrature identities ------------------------------------------------------------------

void quadrature_identities(Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const double inf = std::numeric_limits<double>::infinity();
  for (double alpha : {2.0, 3.0, 10.0 / 3.0, 14.0 / 3.0}) {
    bt::BubbleInstance b;
    b.alpha = alpha;
    b.log_delta = std::log(1e-3);
    const double mass = bt::liouville_mass_quad(b, inf);
    const double rel = std::fabs(mass / (4 * kPi * alpha) - 1);
    c.check(rel <= 1e-8, fmt("alpha=%.6g: mass/(4 pi alpha) - 1 = %.2e", alpha, rel));
    const auto v = bt::intid_check(alpha);
    const double tol = 1e-6 * 4 * kPi * alpha;
    const double err = std::max({std::fabs(v[0]), std::fabs(v[1] + 4 * kPi * alpha), std::fabs(v[2] + 4 * kPi)});
    c.check(err <= tol, fmt("alpha=%.6g: plane integrals (%.3e, %.9g, %.9g), max error %.2e", alpha, v[0], v[1],
                            v[2], err));
  }
  const double secs = seconds_since(t0);
  c.check(secs < 10.0, fmt("runtime %.3f s (< 10 s)", secs));
}

// ---- 4: projection exactness ----------------------------------------------------------------

void projection_bounds(Criterion& c) {
  const double eps = 4 * std::numeric_limits<double>::epsilon();
  for (double d : {1e-1, 1e-3, 1e-6}) {
    double worst_w = 0, worst_z = 0;
    bool ok = true;
    for (double alpha : {2.0, 3.0, 10.0 / 3.0, 14.0 / 3.0}) {
      bt::BubbleInstance b;
      b.alpha = alpha;
      b.log_delta = std::log(d);
      const double da = std::exp(alpha * b.log_delta);
      for (double t = std::log(d) - 30; t <= 0; t += 0.01) {
        const double pw = bt::project_disk(b, t);
        const double w = bt::bubble_eval(b, t);
        const double shift = std::log(2 * alpha * alpha) + alpha * b.log_delta;
        const double dw = std::fabs(pw - w + shift);
        const double pz = bt::project_z_disk(b, t);
        const double z = bt::z_eval(b, t);
        const double dz = std::fabs(pz - z - 1.0);
        // The bounds are attained, so allow rounding of the O(1) operands.
        const double bound_w = 2 * da + eps * (std::fabs(pw) + std::fabs(w) + std::fabs(shift));
        const double bound_z = 2 * da / (1 + da) + eps * (std::fabs(pz) + std::fabs(z) + 1.0);
        ok = ok && dw <= bound_w && dz <= bound_z;
        worst_w = std::max(worst_w, dw / bound_w);
        worst_z = std::max(worst_z, dz / bound_z);
      }
    }
    c.check(ok, fmt("delta=%.0e: sup defect / (bound + rounding) = %.6f (Pw), %.6f (PZ)", d, worst_w, worst_z));
  }
}

// ---- 5, 6: residual analysis along the ladder ---------------------------------------------------------

struct LadderRun {
  bt::BubbleFamily fam;
  std::vector<double> ladder;
  bt::SweepReport sweep;
  double seconds = 0;
};

LadderRun run_ladder(const Fixture& f, const std::vector<double>& p_list) {
  const auto t0 = std::chrono::steady_clock::now();
  LadderRun out{bt::bubble_family(f.spec()), {}, {}, 0};
  out.ladder = bt::default_ladder(out.fam, 8).values();
  out.sweep = bt::residual_sweep(f.spec(), out.ladder, p_list, bt::worker_count_from_env());
  out.seconds = seconds_since(t0);
  return out;
}

void theta_cancellation(Criterion& c) {
  for (const auto& f : kFixtures) {
    const auto run = run_ladder(f, {1.0});
    const double beta = bt::to_double(run.fam.beta_bar);
    double bracket = 0;
    std::vector<double> sup;
    for (const auto& p : run.sweep.points) {
      bracket = std::max(bracket, p.identities.theta_bracket);
      sup.push_back(*std::max_element(p.theta_sup.begin(), p.theta_sup.end()));
    }
    bool finite = true, decreasing = true;
    for (std::size_t i = 0; i < sup.size(); ++i) {
      finite = finite && std::isfinite(sup[i]);
      if (i > 0) decreasing = decreasing && sup[i] < sup[i - 1];
    }
    c.check(bracket <= 1e-9, f.name() + fmt(": Theta identity max rel. error %.2e", bracket));
    c.check(finite && decreasing,
            f.name() + fmt(": sup_j |Theta_j| %.3e -> %.3e over rho %.1e -> %.1e", sup.front(), sup.back(),
                           run.ladder.front(), run.ladder.back()));
    try {
      const auto fit = bt::decay_fit(run.ladder, sup);
      c.check(fit.slope >= 0.9 * beta && fit.r2 >= 0.98,
              f.name() + fmt(": slope %.4f vs 0.9 beta_bar = %.4f, r2 %.5f", fit.slope, 0.9 * beta, fit.r2));
    } catch (const bt::DegenerateFit& e) {
      c.check(false, f.name() + ": sup fit failed: " + e.what());
    }
    c.check(run.seconds <= 120.0, f.name() + fmt(": runtime %.2f s", run.seconds));
  }
}

std::optional<bt::DecayFit> find_fit(const bt::SweepReport& s, const std::string& series, double p) {
  for (const auto& f : s.fits)
    if (f.series == series && std::fabs(f.p - p) < 1e-12) return f.fit;
  return std::nullopt;
}

void residual_decay(Criterion& c) {
  constexpr double q = 1.1;
  for (const auto& f : kFixtures) {
    const auto run = run_ladder(f, {1.0, 1.05});
    const double beta = bt::to_double(run.fam.beta_bar);
    for (double p : {1.0, 1.05}) {
      const double pred = bt::predicted_residual_slope(run.fam, p);
      const auto fit = find_fit(run.sweep, "E+ + E-", p);
      if (!fit) {
        c.check(false, f.name() + fmt(": no fit for ||E+||_%.2f + ||E-||_%.2f", p, p));
        continue;
      }
      c.check(fit->slope >= slope_floor(pred) && fit->r2 >= 0.98,
              f.name() + fmt(": p=%.2f slope %.4f vs floor %.4f (predicted %.4f), r2 %.5f", p, fit->slope,
                             slope_floor(pred), pred, fit->r2));
    }
    double r_split = 0, s_split = 0;
    for (const auto& pt : run.sweep.points) {
      r_split = std::max(r_split, pt.identities.r_split);
      s_split = std::max(s_split, pt.identities.s_split);
    }
    c.check(r_split <= 1e-10 && s_split <= 1e-10,
            f.name() + fmt(": R split %.2e, S split %.2e (rel.)", r_split, s_split));

    // q-moment of rho e^W against the stated exponent 2 s_k (1 - q).
    std::vector<double> moments;
    for (double rho : run.ladder) {
      const bt::Ansatz a(run.fam, rho);
      const bt::ResidualModel model(a);
      moments.push_back(std::pow(bt::lp_norm(model, bt::Component::plus_density, q).total, q));
    }
    const double stated = 2 * bt::to_double(run.fam[f.k].s) * (1 - q);
    const double innermost = 2 * bt::to_double(run.fam[1].s) * (1 - q);
    const auto fit = bt::decay_fit(run.ladder, moments);
    c.check(fit.slope >= slope_floor(stated) && fit.r2 >= 0.98,
            f.name() + fmt(": q-moment slope %.4f vs floor %.4f from 2 s_k (1-q) = %.4f, r2 %.5f", fit.slope,
                           slope_floor(stated), stated, fit.r2));
    c.note(f.name() + fmt(": 2 s_1 (1-q) = %.4f for comparison; beta_bar = %.4f", innermost, beta));
  }
}

// ---- 7: masses ----------------------------------------------------------------------------------

void mass_concentration(Criterion& c) {
  for (const auto& f : kFixtures) {
    if (f.k > 2) continue;
    const auto spec = f.spec();
    const auto fam = bt::bubble_family(spec);
    const double rho = bt::default_ladder(fam, 8).values().back();
    const bt::Ansatz a(fam, rho);
    const bt::ResidualModel model(a);
    const auto full = bt::mass_concentration(model, 1.0);
    const auto inner = bt::mass_concentration(model, 0.3);
    const auto limit = bt::blowup_masses(spec);
    // A vanishing limit is compared on the scale of the total mass m+ + m-.
    const double plus_scale = limit.plus > 0 ? limit.plus : limit.plus + limit.minus;
    const double minus_scale = limit.minus > 0 ? limit.minus : limit.plus + limit.minus;
    const double four_pi = 4 * kPi;
    c.check(std::fabs(full.plus - limit.plus) <= 0.02 * plus_scale &&
                std::fabs(full.minus - limit.minus) <= 0.02 * minus_scale,
            f.name() + fmt(" rho=%.1e: m+/4pi = %.5f (limit %.5f), m-/4pi = %.5f (limit %.5f)", rho,
                           full.plus / four_pi, limit.plus / four_pi, full.minus / four_pi, limit.minus / four_pi));
    c.check(std::fabs(inner.plus - full.plus) <= 0.01 * plus_scale &&
                std::fabs(inner.minus - full.minus) <= 0.01 * minus_scale,
            f.name() + fmt(": ball 0.3 vs 1.0: m+/4pi %.5f vs %.5f, m-/4pi %.5f vs %.5f", inner.plus / four_pi,
                           full.plus / four_pi, inner.minus / four_pi, full.minus / four_pi));
  }
}

// ---- 8: linear theory ------------------------------------------------------------------------------

double kernel_defect(double alpha, double ppd) {
  bt::BubbleInstance b;
  b.alpha = alpha;
  b.log_delta = std::log(1e-3);
  const auto grid = bt::LogGrid::uniform(b.log_delta - 12.0, 0.0, ppd);
  const auto op = bt::mode_operator(std::vector<bt::BubbleInstance>{b}, grid, 0);
  std::vector<double> z(op.unknowns());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = bt::z_eval(b, grid[i]);
  auto lz = op.matrix().multiply(z);
  const double h = grid.step();
  lz.back() -= bt::z_eval(b, grid.t_max()) / h;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    num = std::max(num, std::fabs(lz[i]) / (i == 0 ? 0.5 * h : h));
    den = std::max(den, std::fabs(bt::bubble_well(b, grid[i]) * z[i]));
  }
  return num / den;
}

// Below this a grid-extrapolated singular value is not resolved; admissible
// modes sit at O(1) and above.
constexpr double kExtrapolationFloor = 1e-6;

void linear_theory(Criterion& c) {
  long entries = 0, hits = 0;
  for (const auto& [m, n] : coprime_gammas(12)) {
    try {
      for (const auto& e : bt::kernel_mode_check(make_spec(12, m, n)).entries)
        if (e.integral) ++entries;
    } catch (const bt::SymmetryViolation&) {
      ++hits;
    }
  }
  c.check(hits == 0, fmt("kernel modes excluded for all coprime m <= n <= 12, k = 12 (%ld integral alpha_j/2)",
                         entries));

  for (double alpha : {2.0, 3.0, 10.0 / 3.0, 14.0 / 3.0}) {
    const double d96 = kernel_defect(alpha, 96), d192 = kernel_defect(alpha, 192), d384 = kernel_defect(alpha, 384);
    const double order = std::log2(d192 / d384);
    c.check(d384 <= 1e-3 && order > 1.8 && std::log2(d96 / d192) > 1.8,
            fmt("alpha=%.4g: |L phi0| / |V phi0| = %.2e, %.2e, %.2e at 96/192/384 per decade (order %.2f)", alpha,
                d96, d192, d384, order));
  }

  for (const auto& f : kFixtures) {
    const auto spec = f.spec();
    const auto fam = bt::bubble_family(spec);
    const auto ladder = bt::default_ladder(fam, 9).values();
    const auto series = bt::inverse_norm_probe(spec, ladder, {0}, 20240601, bt::worker_count_from_env(), 96.0);
    std::vector<double> rho, norm;
    for (const auto& s : series) {
      rho.push_back(s.rho);
      norm.push_back(s.inv_norm_estimate);
    }
    const auto fit = bt::fit_log_growth(rho, norm);
    const double decades = std::log10(rho.front() / rho.back());
    c.check(fit.r2 >= 0.9 && decades >= 4.0 - 1e-9,
            f.name() + fmt(": ||L^-1|| = %.3f |ln rho| + %.3f over %.1f decades, r2 %.5f, ratio spread %.3f",
                           fit.slope, fit.intercept, decades, fit.r2, fit.ratio_spread));

    const auto short_ladder = bt::default_ladder(fam, 8).values();
    for (int j = 1; j <= f.k; ++j) {
      const auto form = bt::coprime_form(j, spec.gamma);
      if (form.status != bt::CoprimeForm::Status::form) continue;
      const int mode = static_cast<int>(boost::multiprecision::numerator(form.half_alpha));
      const auto diag = bt::inverse_norm_probe(spec, short_ladder, {mode}, 1, bt::worker_count_from_env(), 192.0);
      const double first = diag.front().extrapolated_singular_value;
      const double last = diag.back().extrapolated_singular_value;
      c.check(last <= std::max(1e-2 * first, kExtrapolationFloor),
              f.name() + fmt(": mode %d (j=%d) smallest singular value %.2e -> %.2e over rho %.1e -> %.1e", mode,
                             j, first, last, short_ladder.front(), short_ladder.back()));
    }
  }
}

// ---- 9: fixed point ------------------------------------------------------------------------------

void fixed_point(Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const Fixture& f : {Fixture{1, 1, 1}, Fixture{1, 1, 2}, Fixture{2, 1, 2}}) {
    try {
      const bt::FixedPointProblem problem(bt::Ansatz(f.spec(), 1e-3));
      const auto rep = bt::iterate_to_fixed_point(problem);
      const auto newton = bt::newton_solve(problem);
      double diff = 0;
      for (std::size_t i = 0; i < rep.phi.size(); ++i) diff = std::max(diff, std::fabs(rep.phi[i] - newton.phi[i]));
      const double cf = rep.contraction_factor.value_or(0.0);
      c.check(rep.converged && cf < 1.0 && rep.probe_factor < 1.0,
              f.name() + fmt(": converged in %d iterations, contraction factor %.2e, local rate %.2e", rep.iters,
                             cf, rep.probe_factor));
      c.check(10 * rep.pde_residual_lp <= rep.ansatz_residual_lp,
              f.name() + fmt(": PDE residual L1 %.3e vs ansatz %.3e (x%.0f)", rep.pde_residual_lp,
                             rep.ansatz_residual_lp, rep.ansatz_residual_lp / rep.pde_residual_lp));
      c.check(diff <= 1e-6, f.name() + fmt(": max |phi_Picard - phi_Newton| = %.2e (Newton residual %.1e)", diff,
                                           newton.residual));
      c.check(rep.sign_changes == f.k - 1, f.name() + fmt(": sign changes %d", rep.sign_changes));
      c.check(rep.mass_identity_rel < 0.01,
              f.name() + fmt(": mass identity rel. error %.2e (m+/4pi %.5f, m-/4pi %.5f)", rep.mass_identity_rel,
                             rep.masses.plus / (4 * kPi), rep.masses.minus / (4 * kPi)));
    } catch (const bt::Error& e) {
      c.check(false, f.name() + ": " + e.what());
    }
  }
  const double secs = seconds_since(t0);
  c.check(secs <= 300.0, fmt("runtime %.2f s", secs));
}

// ---- 10: excluded --------------------------------------------------------------------------------

void excluded(Criterion& c) {
  c.note("the literal rho -> 0 limit and the compactness arguments are not computable;");
  c.note("they are represented only by the trend and slope checks of criteria 5 to 9");
}

struct Entry {
  int id;
  const char* title;
  std::function<void(Criterion&)> run;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries{
      {1, "exact algebra", exact_algebra},
      {2, "spot values", spot_values},
      {3, "quadrature identities", quadrature_identities},
      {4, "projection exactness", projection_bounds},
      {5, "Theta cancellation", theta_cancellation},
      {6, "residual decay", residual_decay},
      {7, "mass concentration", mass_concentration},
      {8, "linear theory", linear_theory},
      {9, "fixed point", fixed_point},
      {10, "excluded limit (not reproducible by design)", excluded},
  };
  return entries;
}

bool run(const Entry& e) {
  Criterion c;
  try {
    e.run(c);
  } catch (const std::exception& ex) {
    c.check(false, std::string("unexpected error: ") + ex.what());
  }
  std::cout << "criterion " << e.id << ": " << (c.passed() ? "PASS" : "FAIL") << "  " << e.title << '\n';
  for (const auto& line : c.lines()) std::cout << "    " << line << '\n';
  std::cout.flush();
  return c.passed();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int selected = 0;
  app.add_option("--criterion", selected, "run one criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (const auto& e : registry())
    if (selected == 0 || e.id == selected) all = run(e) && all;
  return all ? 0 : 1;
}
