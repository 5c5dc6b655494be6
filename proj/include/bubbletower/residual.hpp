#pragma once

// Error of the tower ansatz: annuli, the error functions Theta_j, the
// E+/E- decomposition and its L^p decay along rho ladders.

#include "ansatz.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bubbletower {

enum class Component {
  e_plus_1, e_plus_2, e_plus_3,
  e_minus_1, e_minus_2, e_minus_3,
  e_plus, e_minus, r, s,
  plus_density,   // rho e^W
  minus_density,  // rho tau e^(-gamma W)
};

inline std::string_view component_name(Component c) {
  switch (c) {
    case Component::e_plus_1: return "E+1";
    case Component::e_plus_2: return "E+2";
    case Component::e_plus_3: return "E+3";
    case Component::e_minus_1: return "E-1";
    case Component::e_minus_2: return "E-2";
    case Component::e_minus_3: return "E-3";
    case Component::e_plus: return "E+";
    case Component::e_minus: return "E-";
    case Component::r: return "R";
    case Component::s: return "S";
    case Component::plus_density: return "rho_exp_W";
    case Component::minus_density: return "rho_tau_exp_minus_gamma_W";
  }
  return "?";
}

inline Component parse_component(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Component::minus_density); ++i)
    if (component_name(static_cast<Component>(i)) == name) return static_cast<Component>(i);
  throw ConfigError("unknown residual component '" + std::string(name) + "'");
}

inline constexpr Component kSplitComponents[] = {
    Component::e_plus_1,  Component::e_plus_2,  Component::e_plus_3, Component::e_minus_1,
    Component::e_minus_2, Component::e_minus_3, Component::r,        Component::s};

// ---- annuli ---------------------------------------------------------------------

// cuts[j-1] <= ln r < cuts[j] is annulus j. cuts.front() is the grid minimum
// standing in for the origin and cuts.back() is the boundary ln 1 = 0.
struct AnnulusSet {
  std::vector<double> cuts;

  int count() const { return static_cast<int>(cuts.size()) - 1; }
  double inner(int j) const { return cuts.at(static_cast<std::size_t>(j - 1)); }
  double outer(int j) const { return cuts.at(static_cast<std::size_t>(j)); }

  int locate(double log_r) const {
    for (int j = 1; j < count(); ++j)
      if (log_r < cuts[static_cast<std::size_t>(j)]) return j;
    return count();
  }
};

inline AnnulusSet build_annuli(const Ansatz& ansatz, std::optional<double> inner_log_r = {}) {
  AnnulusSet out;
  out.cuts.push_back(inner_log_r.value_or(ansatz.inner_log_r()));
  for (int j = 1; j < ansatz.k(); ++j)
    out.cuts.push_back(0.5 * (ansatz.log_delta(j) + ansatz.log_delta(j + 1)));
  out.cuts.push_back(0.0);
  for (std::size_t i = 0; i + 1 < out.cuts.size(); ++i)
    if (!(out.cuts[i] < out.cuts[i + 1])) throw ScaleCollapse("annulus cuts are not increasing");
  return out;
}

// ---- pointwise residual ------------------------------------------------------------

struct ResidualPoint {
  int annulus = 1;
  double e_plus_parts[3] = {0, 0, 0};
  double e_minus_parts[3] = {0, 0, 0};
  double e_plus = 0;   // sum of parts
  double e_minus = 0;  // sum of parts
  // Same quantities straight from their definitions.
  double e_plus_direct = 0;
  double e_minus_direct = 0;
  double r_direct = 0;
  double s_direct = 0;
  // Matching-parity bracket on the local annulus, evaluated as a difference.
  double bracket_direct = 0;
  double bracket_theta = 0;
  double scale = 0;  // sum of magnitudes of all terms, for relative checks
  double plus_density = 0;
  double minus_density = 0;

  double r() const { return e_plus - e_minus; }
  double s(double gamma) const { return e_plus + gamma * e_minus; }
};

class ResidualModel {
 public:
  explicit ResidualModel(const Ansatz& ansatz, std::optional<double> inner_log_r = {})
      : ansatz_(&ansatz), annuli_(build_annuli(ansatz, inner_log_r)) {
    prepare_theta();
  }

  const Ansatz& ansatz() const { return *ansatz_; }
  const AnnulusSet& annuli() const { return annuli_; }

  // Theta_j at |x| = exp(log_x), from the exact disk projections. The terms
  // linear in ln r and ln rho cancel by the choice of parameters; their
  // coefficients are summed exactly and only the bounded remainders are
  // evaluated in floating point.
  double theta_at(int j, double log_x) const {
    const auto& c = theta_[static_cast<std::size_t>(j - 1)];
    const long double t = log_x;
    long double v = c.slope * t + c.constant;
    const int k = ansatz_->k();
    for (int i = 1; i <= k; ++i) {
      if (i == j) continue;
      const auto ii = static_cast<std::size_t>(i - 1);
      const long double x = i < j ? scales_[ii] - alphas_[ii] * t : alphas_[ii] * t - scales_[ii];
      v -= 2.0L * c.weights[ii] * softplus(x);
    }
    return static_cast<double>(v);
  }

  // Theta_j at the rescaled point y = x / delta_j, which must lie in A_j / delta_j.
  double theta_eval(int j, double log_y) const {
    const double log_x = log_y + ansatz_->log_delta(j);
    const double lo = j == 1 ? -std::numeric_limits<double>::infinity() : annuli_.inner(j);
    if (log_x < lo || log_x > annuli_.outer(j))
      throw std::domain_error("point outside annulus " + std::to_string(j));
    return theta_at(j, log_x);
  }

  ResidualPoint at(double log_r) const {
    const Ansatz& a = *ansatz_;
    const double g = a.gamma();
    ResidualPoint p;
    p.annulus = annuli_.locate(log_r);
    const int j = p.annulus;
    const double w = a.value(log_r);
    p.plus_density = a.plus_from_value(w);
    p.minus_density = a.minus_from_value(w);

    double odd_sum = 0, even_sum = 0, odd_other = 0, even_other = 0, signed_sum = 0;
    for (int i = 1; i <= a.k(); ++i) {
      const double v = a.density(i, log_r);
      signed_sum += a.coefficient(i) * v;
      if (is_odd(i)) {
        odd_sum += v;
        if (i != j) odd_other += v;
      } else {
        even_sum += v;
        if (i != j) even_other += v;
      }
    }
    const double vj = a.density(j, log_r);
    const double em1 = std::expm1(theta_at(j, log_r));
    if (is_odd(j)) {
      p.bracket_direct = p.plus_density - vj;
      p.bracket_theta = vj * em1;
      p.e_plus_parts[0] = p.bracket_theta;
      p.e_minus_parts[1] = p.minus_density;
    } else {
      p.bracket_direct = p.minus_density - vj / g;
      p.bracket_theta = vj * em1 / g;
      p.e_minus_parts[0] = p.bracket_theta;
      p.e_plus_parts[1] = p.plus_density;
    }
    p.e_plus_parts[2] = -odd_other;
    p.e_minus_parts[2] = -even_other / g;
    p.e_plus = p.e_plus_parts[0] + p.e_plus_parts[1] + p.e_plus_parts[2];
    p.e_minus = p.e_minus_parts[0] + p.e_minus_parts[1] + p.e_minus_parts[2];

    p.e_plus_direct = p.plus_density - odd_sum;
    p.e_minus_direct = p.minus_density - even_sum / g;
    p.r_direct = p.plus_density - p.minus_density - signed_sum;
    p.s_direct = p.plus_density + g * p.minus_density - odd_sum - even_sum;
    p.scale = p.plus_density + p.minus_density + odd_sum + even_sum / g;
    return p;
  }

  double component(Component c, double log_r) const {
    const ResidualPoint p = at(log_r);
    switch (c) {
      case Component::e_plus_1: return p.e_plus_parts[0];
      case Component::e_plus_2: return p.e_plus_parts[1];
      case Component::e_plus_3: return p.e_plus_parts[2];
      case Component::e_minus_1: return p.e_minus_parts[0];
      case Component::e_minus_2: return p.e_minus_parts[1];
      case Component::e_minus_3: return p.e_minus_parts[2];
      case Component::e_plus: return p.e_plus;
      case Component::e_minus: return p.e_minus;
      case Component::r: return p.r();
      case Component::s: return p.s(ansatz_->gamma());
      case Component::plus_density: return p.plus_density;
      case Component::minus_density: return p.minus_density;
    }
    return 0;
  }

  // Quadrature breakpoints inside annulus j: its cuts plus a few bubble
  // widths around every scale that falls inside.
  std::vector<double> breakpoints(int j) const {
    const double lo = j == 1 ? -std::numeric_limits<double>::infinity() : annuli_.inner(j);
    const double hi = annuli_.outer(j);
    std::vector<double> pts{lo, hi};
    for (const auto& b : ansatz_->bubbles())
      for (int m = -4; m <= 4; ++m) {
        const double t = b.log_delta + 2.0 * m / b.alpha;
        if (t > lo && t < hi) pts.push_back(t);
      }
    if (j == 1) pts.push_back(std::min(hi - 1.0, annuli_.inner(1)));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  }

 private:
  struct ThetaCoefficients {
    long double slope = 0;     // exactly zero for consistent parameters
    long double constant = 0;
    std::vector<long double> weights;
  };

  static long double softplus(long double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }

  void prepare_theta() {
    const Ansatz& a = *ansatz_;
    const BubbleFamily& fam = a.family();
    const int k = a.k();
    const Rational& g = fam.spec.gamma.exact();
    const long double lr = std::log(static_cast<long double>(a.rho()));
    const long double gl = fam.spec.gamma.value_ld();
    for (int i = 1; i <= k; ++i) {
      alphas_.push_back(to_long_double(fam[i].alpha));
      scales_.push_back(fam[i].log_c + to_long_double(fam[i].r) * lr);  // alpha_i ln delta_i
    }
    for (int j = 1; j <= k; ++j) {
      // Theta_j = sum_{i != j} w_i P w_i - w_j(1) - (alpha_j - 2) ln r + ln rho (+ ln tau gamma)
      // with w_i the tower coefficient, times -gamma on even j.
      ThetaCoefficients c;
      Rational slope = -(fam[j].alpha - 2);
      Rational rho_coef = 1 - fam[j].r;
      long double constant = -std::log(2.0L * alphas_[static_cast<std::size_t>(j - 1)] *
                                       alphas_[static_cast<std::size_t>(j - 1)]) -
                             fam[j].log_c;
      if (!is_odd(j)) constant += std::log(static_cast<long double>(a.tau()) * gl);
      const auto jj = static_cast<std::size_t>(j - 1);
      constant += 2.0L * softplus(scales_[jj]);  // 2 ln(1 + delta_j^alpha_j)
      for (int i = 1; i <= k; ++i) {
        const Rational w = is_odd(j) ? Rational(fam[i].weight) : Rational(-g * fam[i].weight);
        const long double wl = to_long_double(w);
        c.weights.push_back(i == j ? 0.0L : wl);
        if (i == j) continue;
        const auto ii = static_cast<std::size_t>(i - 1);
        // P w_i = 2 ln(1 + delta_i^alpha_i) - 2 ln(delta_i^alpha_i + r^alpha_i)
        constant += 2.0L * wl * softplus(scales_[ii]);
        if (i < j) {
          slope -= 2 * w * fam[i].alpha;
        } else {
          rho_coef -= 2 * w * fam[i].r;
          constant -= 2.0L * wl * fam[i].log_c;
        }
      }
      c.slope = to_long_double(slope);
      c.constant = constant + to_long_double(rho_coef) * lr;
      theta_.push_back(std::move(c));
    }
  }

  const Ansatz* ansatz_;
  AnnulusSet annuli_;
  std::vector<long double> alphas_;
  std::vector<long double> scales_;
  std::vector<ThetaCoefficients> theta_;
};

// ---- identities ---------------------------------------------------------------------

struct IdentityCheck {
  double r_split = 0;        // R = E+ - E-
  double s_split = 0;        // S = E+ + gamma E-
  double plus_parts = 0;     // E+ = E+1 + E+2 + E+3
  double minus_parts = 0;
  double theta_bracket = 0;  // bracket = V_j (e^Theta_j - 1), scaled by 1/gamma on even annuli
};

// Largest discrepancies on the grid, each relative to the magnitude of the
// terms involved at that node.
inline IdentityCheck check_identities(const ResidualModel& model, const LogGrid& grid) {
  IdentityCheck out;
  const double g = model.ansatz().gamma();
  for (double t : grid.nodes()) {
    const ResidualPoint p = model.at(t);
    const double scale = p.scale;
    if (!(scale > 0.0)) continue;
    out.r_split = std::max(out.r_split, std::fabs(p.r_direct - p.r()) / scale);
    out.s_split = std::max(out.s_split, std::fabs(p.s_direct - p.s(g)) / scale);
    out.plus_parts = std::max(out.plus_parts, std::fabs(p.e_plus_direct - p.e_plus) / scale);
    out.minus_parts = std::max(out.minus_parts, std::fabs(p.e_minus_direct - p.e_minus) / scale);
    out.theta_bracket = std::max(out.theta_bracket, std::fabs(p.bracket_direct - p.bracket_theta) / scale);
  }
  return out;
}

// ---- Theta scans --------------------------------------------------------------------

struct ThetaScan {
  double sup = 0;
  double arg_log_y = 0;
  double bound_scale = 0;  // delta_j |y|_max + rho^beta_bar
  double bound_ratio = 0;  // sup / bound_scale
};

inline ThetaScan theta_sup_scan(const ResidualModel& model, int j, double step = 0.01) {
  const Ansatz& a = model.ansatz();
  const double ld = a.log_delta(j);
  const double lo = model.annuli().inner(j) - ld;
  const double hi = model.annuli().outer(j) - ld;
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  ThetaScan out;
  for (std::size_t i = 0; i <= n; ++i) {
    const double y = std::min(hi, lo + step * static_cast<double>(i));
    const double v = std::fabs(model.theta_eval(j, y));
    if (v > out.sup || i == 0) {
      out.sup = v;
      out.arg_log_y = y;
    }
  }
  const double beta = to_double(a.family().beta_bar);
  out.bound_scale = std::exp(ld + hi) + std::exp(beta * a.log_rho());
  out.bound_ratio = out.sup / out.bound_scale;
  return out;
}

// ---- L^p norms ------------------------------------------------------------------------

struct LpNorm {
  double p = 1;
  std::vector<double> per_annulus;  // integral of |f|^p over each annulus
  double total = 0;                 // (sum)^(1/p)
};

// Adds the zeros of f inside each finite piece, so that |f|^p is smooth
// between consecutive breakpoints.
template <class F>
std::vector<double> split_at_sign_changes(F&& f, const std::vector<double>& pts, int samples = 64) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    out.push_back(pts[i]);
    const double a = pts[i], b = pts[i + 1];
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    double x0 = a, f0 = f(a);
    for (int s = 1; s <= samples; ++s) {
      const double x1 = a + (b - a) * s / samples;
      const double f1 = f(x1);
      if (f0 != 0.0 && f1 != 0.0 && (f0 < 0.0) != (f1 < 0.0)) {
        boost::uintmax_t iters = 100;
        const auto root = boost::math::tools::toms748_solve(
            f, x0, x1, f0, f1, boost::math::tools::eps_tolerance<double>(48), iters);
        out.push_back(0.5 * (root.first + root.second));
      }
      x0 = x1;
      f0 = f1;
    }
  }
  out.push_back(pts.back());
  return out;
}

// Adaptive quadrature of |f|^p 2 pi r dr, split per annulus, at the bubble
// scales and at the sign changes of f.
template <class F>
LpNorm lp_norm(const ResidualModel& model, F&& f, double p, const QuadratureOptions& opt = {}) {
  if (!(p >= 1.0)) throw ConfigError("L^p norm needs p >= 1");
  const double two_pi = 2.0 * std::numbers::pi;
  auto integrand = [&](double t) {
    const double v = std::fabs(f(t));
    if (v == 0.0) return 0.0;
    return two_pi * std::exp(2.0 * t + p * std::log(v));
  };
  LpNorm out;
  out.p = p;
  std::vector<std::vector<double>> groups;
  for (int j = 1; j <= model.annuli().count(); ++j)
    groups.push_back(split_at_sign_changes(f, model.breakpoints(j)));
  double sum = 0;
  for (const auto& part : integrate_groups(integrand, groups, opt)) {
    out.per_annulus.push_back(part.value);
    sum += part.value;
  }
  out.total = std::pow(sum, 1.0 / p);
  return out;
}

inline LpNorm lp_norm(const ResidualModel& model, Component c, double p, const QuadratureOptions& opt = {}) {
  return lp_norm(model, [&](double t) { return model.component(c, t); }, p, opt);
}

// L^p norm of a sampled field: |f|^p linear in t between nodes, integrated
// exactly against r^2 dt, plus the disk below the grid (taken as constant).
inline double lp_norm(const RadialField& f, double p) {
  if (!(p >= 1.0)) throw ConfigError("L^p norm needs p >= 1");
  const double h = f.grid.step();
  double sum = 0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double g0 = std::pow(std::fabs(f[i]), p);
    const double g1 = std::pow(std::fabs(f[i + 1]), p);
    const double e0 = std::exp(2.0 * f.log_r(i));
    const double e1 = std::exp(2.0 * f.log_r(i + 1));
    sum += 0.5 * g0 * (e1 - e0) + (g1 - g0) / h * (0.5 * h * e1 - 0.25 * (e1 - e0));
  }
  sum += 0.5 * std::exp(2.0 * f.grid.t_min()) * std::pow(std::fabs(f.values.front()), p);
  return std::pow(2.0 * std::numbers::pi * sum, 1.0 / p);
}

// ---- masses -----------------------------------------------------------------------------

struct MassPair {
  double plus = 0;   // integral of rho e^W over the ball
  double minus = 0;  // integral of rho tau e^(-gamma W) over the ball
};

inline MassPair mass_concentration(const ResidualModel& model, double ball_radius,
                                   const QuadratureOptions& opt = {}) {
  if (!(ball_radius > 0.0) || ball_radius > 1.0) throw ConfigError("ball radius must lie in (0, 1]");
  const Ansatz& a = model.ansatz();
  const double top = std::log(ball_radius);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> pts{-std::numeric_limits<double>::infinity(), top};
  for (const auto& b : a.bubbles())
    for (int m = -4; m <= 4; ++m) {
      const double t = b.log_delta + 2.0 * m / b.alpha;
      if (t < top) pts.push_back(t);
    }
  for (double c : model.annuli().cuts)
    if (c < top) pts.push_back(c);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  MassPair out;
  out.plus = integrate_piecewise(
                 [&](double t) { return two_pi * std::exp(2.0 * t + a.log_rho() + a.value(t)); }, pts, opt)
                 .value;
  out.minus = integrate_piecewise(
                  [&](double t) {
                    return two_pi * std::exp(2.0 * t + a.log_rho() + std::log(a.tau()) - a.gamma() * a.value(t));
                  },
                  pts, opt)
                  .value;
  return out;
}

// ---- decay fits ---------------------------------------------------------------------------

struct DecayFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  std::size_t points = 0;
};

// Least squares of ln(norm) against ln(rho).
inline DecayFit decay_fit(const std::vector<double>& rho, const std::vector<double>& norm,
                          double noise_floor = 0.0) {
  if (rho.size() != norm.size()) throw ConfigError("fit needs matching rho and norm series");
  if (rho.size() < 4) throw DegenerateFit("fit needs at least 4 ladder points");
  const auto n = static_cast<double>(rho.size());
  double sx = 0, sy = 0;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(norm[i] > noise_floor) || !std::isfinite(norm[i]) || !(rho[i] > 0.0))
      throw DegenerateFit("norm " + std::to_string(norm[i]) + " at rho = " + std::to_string(rho[i]) +
                          " is at the noise floor");
    x.push_back(std::log(rho[i]));
    y.push_back(std::log(norm[i]));
    sx += x.back();
    sy += y.back();
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateFit("ladder has a single rho value");
  DecayFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  out.points = x.size();
  return out;
}

// ---- rho ladders -----------------------------------------------------------------------------

struct RhoLadder {
  double start = 1e-2;
  double ratio = 0.31622776601683794;  // 10^(-1/2)
  int count = 8;

  std::vector<double> values() const {
    if (count < 1) throw ConfigError("ladder count must be >= 1");
    if (!(start > 0.0) || !(start < 1.0)) throw ConfigError("ladder start must lie in (0, 1)");
    if (!(ratio > 0.0) || !(ratio < 1.0)) throw ConfigError("ladder ratio must lie in (0, 1)");
    std::vector<double> out;
    const double ls = std::log10(start), lr = std::log10(ratio);
    for (int i = 0; i < count; ++i) out.push_back(std::pow(10.0, ls + lr * i));
    return out;
  }
};

// Largest rho with every delta_{j+1}/delta_j >= 10 and delta_k < 1.
inline double separation_limit(const BubbleFamily& fam) {
  const int k = fam.k();
  double lr = -static_cast<double>(fam[k].log_d) / to_double(fam[k].s);
  for (int j = 1; j < k; ++j) {
    const double dd = static_cast<double>(fam[j + 1].log_d - fam[j].log_d);
    lr = std::min(lr, (dd - std::numbers::ln10) / to_double(*fam[j].q));
  }
  return std::exp(lr);
}

// Half-decade ladder from the largest separated rho, capped at 10^-1.
inline RhoLadder default_ladder(const BubbleFamily& fam, int count = 8) {
  const double limit = std::min(separation_limit(fam), 0.1);
  // Snap down onto 10^(-m/2); the tiny slack keeps exact powers on the grid.
  const double m = std::ceil(-2.0 * std::log10(limit) - 1e-9);
  RhoLadder out;
  out.start = std::pow(10.0, -m / 2.0);
  out.count = count;
  return out;
}

// ---- reports --------------------------------------------------------------------------------------

struct NormEntry {
  Component component = Component::e_plus;
  LpNorm norm;
};

struct ResidualReport {
  double rho = 0;
  Rational beta_bar;
  std::vector<double> theta_sup;  // index j - 1
  std::vector<ThetaScan> theta_scans;
  std::vector<NormEntry> norms;
  IdentityCheck identities;
  MassPair masses;
  MassPair masses_inner;  // ball radius 0.3

  const LpNorm& find(Component c, double p) const {
    for (const auto& e : norms)
      if (e.component == c && std::fabs(e.norm.p - p) < 1e-12) return e.norm;
    throw ConfigError("no norm recorded for " + std::string(component_name(c)));
  }
};

inline ResidualReport analyze_residuals(const Ansatz& ansatz, const std::vector<double>& p_list,
                                        const QuadratureOptions& opt = {}) {
  const ResidualModel model(ansatz);
  ResidualReport out;
  out.rho = ansatz.rho();
  out.beta_bar = ansatz.family().beta_bar;
  for (int j = 1; j <= ansatz.k(); ++j) {
    out.theta_scans.push_back(theta_sup_scan(model, j));
    out.theta_sup.push_back(out.theta_scans.back().sup);
  }
  std::vector<Component> comps(std::begin(kSplitComponents), std::end(kSplitComponents));
  comps.push_back(Component::e_plus);
  comps.push_back(Component::e_minus);
  for (double p : p_list)
    for (Component c : comps) out.norms.push_back({c, lp_norm(model, c, p, opt)});
  out.identities = check_identities(model, ansatz.default_grid(48.0));
  out.masses = mass_concentration(model, 1.0, opt);
  out.masses_inner = mass_concentration(model, 0.3, opt);
  return out;
}

struct SeriesFit {
  std::string series;  // component name, or "E+ + E-"
  double p = 1;
  std::optional<DecayFit> fit;
  std::optional<double> predicted;
  std::string note;
};

struct SweepReport {
  std::vector<ResidualReport> points;
  std::vector<SeriesFit> fits;
};

// Exponent for ||E+||_p + ||E-||_p along a ladder: beta_bar - 2 s_1 (p - 1) / p.
inline double predicted_residual_slope(const BubbleFamily& fam, double p) {
  return to_double(fam.beta_bar) - 2.0 * to_double(fam[1].s) * (p - 1.0) / p;
}

inline SweepReport residual_sweep(const TowerSpec& spec, const std::vector<double>& ladder,
                                  const std::vector<double>& p_list, unsigned workers = 1,
                                  const QuadratureOptions& opt = {}) {
  const BubbleFamily fam = bubble_family(spec);
  SweepReport out;
  out.points = parallel_map<ResidualReport>(ladder.size(), workers, [&](std::size_t i) {
    const Ansatz ansatz(fam, ladder[i]);
    return analyze_residuals(ansatz, p_list, opt);
  });
  if (ladder.size() < 4) return out;
  auto fit_series = [&](std::string name, double p, auto value, std::optional<double> predicted) {
    SeriesFit f;
    f.series = std::move(name);
    f.p = p;
    f.predicted = predicted;
    std::vector<double> norms;
    for (const auto& r : out.points) norms.push_back(value(r));
    try {
      f.fit = decay_fit(ladder, norms, 1e-300);
    } catch (const DegenerateFit& e) {
      f.note = e.what();
    }
    out.fits.push_back(std::move(f));
  };
  for (double p : p_list) {
    fit_series("E+ + E-", p,
               [&](const ResidualReport& r) {
                 return r.find(Component::e_plus, p).total + r.find(Component::e_minus, p).total;
               },
               predicted_residual_slope(fam, p));
    for (Component c : kSplitComponents)
      fit_series(std::string(component_name(c)), p,
                 [&](const ResidualReport& r) { return r.find(c, p).total; }, std::nullopt);
  }
  for (int j = 1; j <= spec.k; ++j)
    fit_series("theta_sup_" + std::to_string(j), 0.0,
               [&](const ResidualReport& r) { return r.theta_sup[static_cast<std::size_t>(j - 1)]; },
               to_double(fam.beta_bar));
  return out;
}

}  // namespace bubbletower
