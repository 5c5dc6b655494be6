#pragma once

// Exponents, scale constants and limiting masses of a k-bubble tower.
//
// Exponents are exact rationals (for a real gamma they are exact functions of
// the stored binary value). Scale constants live in log space. The Precision
// flag of a TowerSpec selects whether identity checks are evaluated
// symbolically or in long double arithmetic.

#include "errors.hpp"
#include "gamma.hpp"
#include "rational.hpp"
#include "tower_spec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace bubbletower {

namespace detail {

inline void require_index(int j, int k) {
  if (j < 1 || j > k)
    throw ConfigError("bubble index " + std::to_string(j) + " outside 1.." + std::to_string(k));
}

inline Rational abs_value(const Rational& x) { return x < 0 ? Rational(-x) : x; }

}  // namespace detail

// ---- concentration exponents ---------------------------------------------

template <class S>
S alpha_closed(int j, const S& gamma) {
  if (j < 1) throw ConfigError("bubble index must be >= 1");
  const S one(1);
  const S jj(j);
  if (is_odd(j)) return S(2) * ((one + one / gamma) * jj - one / gamma);
  return S(2) * ((one + gamma) * jj - one);
}

// Builds alpha_1..alpha_k from the two-step recursion, each bubble absorbing
// the mass of the previous one.
template <class S>
std::vector<S> alpha_recursive(int k, const S& gamma) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::vector<S> out;
  out.reserve(static_cast<std::size_t>(k));
  const S one(1);
  out.push_back(S(2));
  for (int j = 2; j <= k; ++j) {
    const S& prev = out.back();
    if (is_odd(j))
      out.push_back(prev / gamma + S(2) * (one + one / gamma));
    else
      out.push_back(gamma * prev + S(2) * (one + gamma));
  }
  return out;
}

inline std::vector<Rational> alpha_recursive(const TowerSpec& spec) {
  spec.validate();
  return alpha_recursive<Rational>(spec.k, spec.gamma.exact());
}

// Signed weight of bubble j in the ansatz: (-1)^(j-1) / gamma^sigma(j).
template <class S>
S bubble_weight(int j, const S& gamma) {
  return is_odd(j) ? S(1) : S(S(-1) / gamma);
}

template <class S>
struct AlphaSums {
  S sum_odd;             // sum of alpha_i over odd i
  S sum_even_over_gamma; // sum of alpha_i / gamma over even i
  S signed_sum;          // sum of (-1)^i alpha_i / gamma^sigma(i)
};

template <class S>
AlphaSums<S> alpha_sums_direct(int k, const S& gamma) {
  AlphaSums<S> out{S(0), S(0), S(0)};
  const auto alphas = alpha_recursive<S>(k, gamma);
  for (int i = 1; i <= k; ++i) {
    const S& a = alphas[static_cast<std::size_t>(i - 1)];
    if (is_odd(i)) {
      out.sum_odd += a;
      out.signed_sum -= a;
    } else {
      out.sum_even_over_gamma += a / gamma;
      out.signed_sum += a / gamma;
    }
  }
  return out;
}

template <class S>
AlphaSums<S> alpha_sums_closed(int k, const S& gamma) {
  const S one(1);
  const S kk(k);
  const S g1 = one + one / gamma;
  if (is_odd(k)) {
    const S bracket = g1 * kk + one - one / gamma;
    return {(kk + one) / S(2) * bracket, (kk - one) / S(2) * bracket,
            -(g1 * kk) + one / gamma - one};
  }
  return {kk * (g1 * kk / S(2) - one / gamma), kk * (g1 * kk / S(2) + one), g1 * kk};
}

inline AlphaSums<Rational> alpha_sums(const TowerSpec& spec) {
  spec.validate();
  return alpha_sums_direct<Rational>(spec.k, spec.gamma.exact());
}

// ---- index bookkeeping ------------------------------------------------------

struct ParitySums {
  long long count_odd = 0;
  long long count_even = 0;
  long long sum_odd = 0;
  long long sum_even = 0;

  friend bool operator==(const ParitySums&, const ParitySums&) = default;
};

inline ParitySums parity_sums(long long k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (k % 2 != 0) return {(k + 1) / 2, (k - 1) / 2, (k + 1) * (k + 1) / 4, (k - 1) * (k + 1) / 4};
  return {k / 2, k / 2, k * k / 4, k * (k + 2) / 4};
}

inline ParitySums parity_sums_enumerated(long long k) {
  ParitySums out;
  for (long long j = 1; j <= k; ++j) {
    if (j % 2 != 0) {
      ++out.count_odd;
      out.sum_odd += j;
    } else {
      ++out.count_even;
      out.sum_even += j;
    }
  }
  return out;
}

struct CoprimeForm {
  enum class Status { form, not_integer, not_applicable };
  Status status = Status::not_applicable;
  Rational half_alpha;
  long long multiplier = 0;  // k_j in alpha_j / 2 = (m + n) k_j +/- 1
  int sign = 0;              // +1 for odd j, -1 for even j
};

inline CoprimeForm coprime_form(int j, const GammaRatio& gamma) {
  if (j < 1) throw ConfigError("bubble index must be >= 1");
  CoprimeForm out;
  out.half_alpha = alpha_closed<Rational>(j, gamma.exact()) / 2;
  if (!gamma.is_rational()) return out;
  if (!is_integer(out.half_alpha)) {
    out.status = CoprimeForm::Status::not_integer;
    return out;
  }
  const BigInt h = boost::multiprecision::numerator(out.half_alpha);
  const BigInt period = gamma.m() + gamma.n();
  out.sign = is_odd(j) ? 1 : -1;
  const BigInt shifted = h - out.sign;
  if (shifted % period != 0)
    throw std::logic_error("integral alpha/2 without coprime decomposition");
  out.multiplier = static_cast<long long>(shifted / period);
  out.status = CoprimeForm::Status::form;
  return out;
}

// Pairs h with alpha_{2h} < alpha_{2h-1}.
inline std::vector<int> monotonicity_violations(const TowerSpec& spec) {
  spec.validate();
  const auto alphas = alpha_recursive(spec);
  std::vector<int> out;
  for (int h = 1; 2 * h <= spec.k; ++h)
    if (alphas[static_cast<std::size_t>(2 * h - 1)] < alphas[static_cast<std::size_t>(2 * h - 2)])
      out.push_back(h);
  return out;
}

// ---- rates and scale constants ---------------------------------------------

template <class S>
S s_closed(int j, int k, const S& gamma) {
  detail::require_index(j, k);
  const S one(1);
  const S gk = one + gamma;
  const S den = S(2) * (gk * S(j) - one);
  const S tail = is_odd(k) ? gamma : one;
  return (gk * S(k - j) + tail) / den;
}

// r_j = alpha_j s_j written per parity of k and j.
template <class S>
S r_closed(int j, int k, const S& gamma) {
  detail::require_index(j, k);
  const S one(1);
  const S gi = one + one / gamma;
  const S kj(k - j);
  if (is_odd(k)) return is_odd(j) ? S(gi * kj + one) : S((one + gamma) * kj + gamma);
  return is_odd(j) ? S(gi * kj + one / gamma) : S((one + gamma) * kj + one);
}

template <class S>
S q_closed(int j, int k, const S& gamma) {
  if (j < 1 || j >= k) throw ConfigError("gap rate needs 1 <= j < k");
  const S one(1);
  const S gk = one + gamma;
  const S den = S(2) * (gk * S(j) + gamma) * (gk * S(j) - one);
  if (is_odd(k)) return gk * (gk * S(k) + gamma - one) / den;
  return gk * gk * S(k) / den;
}

struct BubbleEntry {
  int index = 0;
  Rational alpha;
  Rational s;                // delta_j = d_j rho^s_j
  Rational r;                // delta_j^alpha_j = c_j rho^r_j
  std::optional<Rational> q; // delta_j / delta_{j+1} ~ rho^q_j, absent for j = k
  long double log_kappa = 0;
  long double log_c = 0;
  long double log_d = 0;
  int sign = 1;              // (-1)^(j-1)
  Rational weight;           // sign / gamma^sigma(j)
};

struct BubbleFamily {
  TowerSpec spec;
  std::vector<BubbleEntry> bubbles;
  Rational signed_alpha_sum;
  Rational beta_bar;  // min over r_i and q_i

  int k() const noexcept { return spec.k; }
  const BubbleEntry& operator[](int j) const { return bubbles.at(static_cast<std::size_t>(j - 1)); }

  long double log_delta(int j, double rho) const {
    const auto& b = (*this)[j];
    return b.log_d + to_long_double(b.s) * std::log(static_cast<long double>(rho));
  }

  std::vector<double> log_deltas(double rho) const {
    std::vector<double> out;
    for (int j = 1; j <= k(); ++j) out.push_back(static_cast<double>(log_delta(j, rho)));
    return out;
  }
};

namespace detail {

// Exponent of kappa_i in c_j: 1 and e_j alternate, e_j = 1/gamma for odd j
// and gamma for even j.
inline Rational c_exponent(int j, int i, const Rational& gamma) {
  if ((i - j) % 2 == 0) return Rational(1);
  return is_odd(j) ? Rational(1) / gamma : gamma;
}

inline Rational step_exponent(int j, const Rational& gamma) {
  return is_odd(j) ? Rational(1) / gamma : gamma;
}

}  // namespace detail

inline BubbleFamily bubble_family(const TowerSpec& spec) {
  spec.validate();
  const int k = spec.k;
  const Rational& g = spec.gamma.exact();
  const long double gl = spec.gamma.value_ld();
  const long double log_tau_gamma = std::log(static_cast<long double>(spec.tau) * gl);
  const long double ln2 = std::numbers::ln2_v<long double>;
  const long double four_pi_h = 4.0L * std::numbers::pi_v<long double> * spec.robin_at_origin;

  BubbleFamily fam;
  fam.spec = spec;
  const auto alphas = alpha_recursive<Rational>(k, g);
  fam.signed_alpha_sum = alpha_sums_closed<Rational>(k, g).signed_sum;
  const long double a_k = to_long_double(fam.signed_alpha_sum);

  for (int j = 1; j <= k; ++j) {
    BubbleEntry b;
    b.index = j;
    b.alpha = alphas[static_cast<std::size_t>(j - 1)];
    b.s = s_closed<Rational>(j, k, g);
    b.r = r_closed<Rational>(j, k, g);
    if (j < k) b.q = q_closed<Rational>(j, k, g);
    b.sign = is_odd(j) ? 1 : -1;
    b.weight = bubble_weight<Rational>(j, g);
    const long double la = std::log(to_long_double(b.alpha));
    if (j == k) {
      b.log_kappa = is_odd(k) ? -four_pi_h * a_k - ln2 - 2.0L * la
                              : log_tau_gamma + four_pi_h * a_k - ln2 - 2.0L * la;
    } else {
      const long double la_next = std::log(to_long_double(alphas[static_cast<std::size_t>(j)]));
      if (is_odd(j))
        b.log_kappa = log_tau_gamma / gl - (1.0L + 1.0L / gl) * ln2 - 2.0L * la - 2.0L / gl * la_next;
      else
        b.log_kappa = log_tau_gamma - (1.0L + gl) * ln2 - 2.0L * la - 2.0L * gl * la_next;
    }
    fam.bubbles.push_back(std::move(b));
  }
  for (int j = 1; j <= k; ++j) {
    auto& b = fam.bubbles[static_cast<std::size_t>(j - 1)];
    long double lc = 0;
    for (int i = j; i <= k; ++i)
      lc += to_long_double(detail::c_exponent(j, i, g)) * fam[i].log_kappa;
    b.log_c = lc;
    b.log_d = lc / to_long_double(b.alpha);
  }
  Rational beta = fam.bubbles.front().r;
  for (const auto& b : fam.bubbles) {
    beta = std::min(beta, b.r);
    if (b.q) beta = std::min(beta, *b.q);
  }
  fam.beta_bar = beta;
  return fam;
}

// Discrepancy between delta_j^alpha_j from the recursion
//   delta_k^alpha_k = kappa_k rho,
//   delta_j^alpha_j = kappa_j rho^(1+e_j) (delta_{j+1}^alpha_{j+1})^e_j
// and the closed form c_j rho^r_j. Exact mode compares the exponents of rho
// and of every kappa_i symbolically; floating mode compares log values.
inline double delta_recursive_check(const BubbleFamily& fam, double rho) {
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  const int k = fam.k();
  const Rational& g = fam.spec.gamma.exact();
  if (fam.spec.precision == Precision::exact) {
    std::vector<Rational> kappa_exp(static_cast<std::size_t>(k) + 1, Rational(0));
    kappa_exp[static_cast<std::size_t>(k)] = 1;
    Rational rho_exp = 1;
    Rational worst = detail::abs_value(rho_exp - fam[k].r);
    for (int j = k - 1; j >= 1; --j) {
      const Rational e = detail::step_exponent(j, g);
      for (auto& x : kappa_exp) x *= e;
      kappa_exp[static_cast<std::size_t>(j)] += 1;
      rho_exp = Rational(1) + e + e * rho_exp;
      worst = std::max(worst, detail::abs_value(rho_exp - fam[j].r));
      for (int i = j; i <= k; ++i)
        worst = std::max(worst, detail::abs_value(kappa_exp[static_cast<std::size_t>(i)] -
                                                  detail::c_exponent(j, i, g)));
    }
    return to_double(worst);
  }
  const long double lr = std::log(static_cast<long double>(rho));
  long double rec = fam[k].log_kappa + lr;
  long double worst = std::fabs(rec - (fam[k].log_c + to_long_double(fam[k].r) * lr));
  for (int j = k - 1; j >= 1; --j) {
    const long double e = to_long_double(detail::step_exponent(j, g));
    rec = fam[j].log_kappa + (1.0L + e) * lr + e * rec;
    const long double closed = fam[j].log_c + to_long_double(fam[j].r) * lr;
    worst = std::max(worst, std::fabs(rec - closed) / std::max(1.0L, std::fabs(closed)));
  }
  return static_cast<double>(worst);
}

// ---- limiting masses ----------------------------------------------------------

template <class S>
struct MassesOver4Pi {
  S plus;
  S minus;
  S total;  // plus - minus
};

template <class S>
MassesOver4Pi<S> masses_closed(int k, const S& gamma) {
  const S one(1);
  const S kk(k);
  const S g1 = one + one / gamma;
  if (is_odd(k)) {
    const S bracket = g1 * kk + one - one / gamma;
    return {(kk + one) / S(2) * bracket, (kk - one) / S(2) * bracket, bracket};
  }
  return {kk * (g1 * kk / S(2) - one / gamma), kk * (g1 * kk / S(2) + one), -(g1 * kk)};
}

struct MassReport {
  Precision precision = Precision::exact;
  Rational plus_over_4pi;
  Rational minus_over_4pi;
  Rational total_over_4pi;
  double plus = 0;   // m_plus
  double minus = 0;  // m_minus
  double total = 0;  // M_k
};

inline MassReport blowup_masses(const TowerSpec& spec) {
  spec.validate();
  const Rational& g = spec.gamma.exact();
  const auto closed = masses_closed<Rational>(spec.k, g);
  const auto sums = alpha_sums_direct<Rational>(spec.k, g);
  if (closed.plus != sums.sum_odd || closed.minus != sums.sum_even_over_gamma ||
      closed.total != -sums.signed_sum)
    throw std::logic_error("closed-form masses disagree with bubble sums");
  const double four_pi = 4.0 * std::numbers::pi;
  MassReport out;
  out.precision = spec.precision;
  out.plus_over_4pi = closed.plus;
  out.minus_over_4pi = closed.minus;
  out.total_over_4pi = closed.total;
  out.plus = four_pi * to_double(closed.plus);
  out.minus = four_pi * to_double(closed.minus);
  out.total = four_pi * to_double(closed.total);
  return out;
}

// 8 pi (m_plus + m_minus / gamma) - (m_plus - m_minus)^2.
inline double mass_identity_residual(const MassReport& masses, const GammaRatio& gamma) {
  const double sixteen_pi2 = 16.0 * std::numbers::pi * std::numbers::pi;
  if (masses.precision == Precision::exact) {
    const Rational& a = masses.plus_over_4pi;
    const Rational& b = masses.minus_over_4pi;
    const Rational res = 2 * (a + b / gamma.exact()) - (a - b) * (a - b);
    return sixteen_pi2 * to_double(res);
  }
  const long double pi = std::numbers::pi_v<long double>;
  const long double mp = 4.0L * pi * to_long_double(masses.plus_over_4pi);
  const long double mm = 4.0L * pi * to_long_double(masses.minus_over_4pi);
  const long double res = 8.0L * pi * (mp + mm / gamma.value_ld()) - (mp - mm) * (mp - mm);
  return static_cast<double>(res);
}

struct PhysicsParams {
  Rational lambda_over_2pi;
  Rational p_bar;
  double lambda = 0;
  double p_bar_value = 0;
};

template <class S>
struct PhysicsRoutes {
  S lambda_direct;   // (m_plus + m_minus / gamma) / 2pi
  S lambda_from_total;
  S lambda_closed;
  S p_bar_direct;
  S p_bar_closed;
};

template <class S>
PhysicsRoutes<S> physics_routes(int k, const S& gamma) {
  const S one(1);
  const S kk(k);
  const S g1 = one + one / gamma;
  const auto m = masses_closed<S>(k, gamma);
  PhysicsRoutes<S> out;
  out.lambda_direct = S(2) * (m.plus + m.minus / gamma);
  out.lambda_from_total = m.total * m.total;
  if (is_odd(k)) {
    const S bracket = g1 * kk + one - one / gamma;
    out.lambda_closed = bracket * bracket;
    out.p_bar_closed = (kk + one) / bracket;
  } else {
    out.lambda_closed = g1 * g1 * kk * kk;
    out.p_bar_closed = (g1 * kk - S(2) / gamma) / (g1 * g1 * kk);
  }
  out.p_bar_direct = S(2) * m.plus / out.lambda_direct;
  return out;
}

inline PhysicsParams physics_params(const TowerSpec& spec) {
  spec.validate();
  const auto routes = physics_routes<Rational>(spec.k, spec.gamma.exact());
  if (routes.lambda_direct != routes.lambda_from_total || routes.lambda_direct != routes.lambda_closed ||
      routes.p_bar_direct != routes.p_bar_closed)
    throw std::logic_error("physical parameter routes disagree");
  PhysicsParams out;
  out.lambda_over_2pi = routes.lambda_direct;
  out.p_bar = routes.p_bar_direct;
  out.lambda = 2.0 * std::numbers::pi * to_double(out.lambda_over_2pi);
  out.p_bar_value = to_double(out.p_bar);
  return out;
}

}  // namespace bubbletower
