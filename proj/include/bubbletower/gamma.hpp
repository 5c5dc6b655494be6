#pragma once

#include "errors.hpp"
#include "rational.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>

namespace bubbletower {

// Asymmetry exponent gamma in (0, 1]. Rational values keep their reduced
// m/n form because the admissible symmetry class depends on m + n.
class GammaRatio {
 public:
  enum class Kind { rational, real };

  static GammaRatio rational(long long m, long long n) {
    if (n <= 0 || m <= 0) throw ConfigError("gamma must be a positive ratio m/n");
    const long long g = std::gcd(m, n);
    m /= g;
    n /= g;
    if (m > n) throw ConfigError("gamma must satisfy 0 < gamma <= 1");
    GammaRatio out;
    out.kind_ = Kind::rational;
    out.m_ = m;
    out.n_ = n;
    out.exact_ = Rational(m, n);
    out.value_ = static_cast<long double>(m) / static_cast<long double>(n);
    return out;
  }

  // The exact value is the binary rational of the stored float.
  static GammaRatio real(long double value) {
    if (!(value > 0.0L) || value > 1.0L || !std::isfinite(value))
      throw ConfigError("gamma must satisfy 0 < gamma <= 1");
    GammaRatio out;
    out.kind_ = Kind::real;
    out.value_ = value;
    out.exact_ = Rational(static_cast<double>(value));
    return out;
  }

  // "m/n" gives an exact rational; a decimal literal gives a real gamma.
  static GammaRatio parse(std::string_view text) {
    const auto slash = text.find('/');
    if (slash != std::string_view::npos) {
      long long m = 0;
      long long n = 0;
      const auto lhs = text.substr(0, slash);
      const auto rhs = text.substr(slash + 1);
      const auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), m);
      const auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), n);
      if (r1.ec != std::errc{} || r1.ptr != lhs.data() + lhs.size() || r2.ec != std::errc{} ||
          r2.ptr != rhs.data() + rhs.size())
        throw ConfigError("cannot parse gamma '" + std::string(text) + "'");
      return rational(m, n);
    }
    std::string owned(text);
    std::size_t used = 0;
    long double v = 0;
    try {
      v = std::stold(owned, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse gamma '" + owned + "'");
    }
    if (used != owned.size()) throw ConfigError("cannot parse gamma '" + owned + "'");
    if (v == 1.0L) return rational(1, 1);
    return real(v);
  }

  Kind kind() const noexcept { return kind_; }
  bool is_rational() const noexcept { return kind_ == Kind::rational; }
  long long m() const {
    if (!is_rational()) throw ConfigError("real gamma has no coprime form");
    return m_;
  }
  long long n() const {
    if (!is_rational()) throw ConfigError("real gamma has no coprime form");
    return n_;
  }
  const Rational& exact() const noexcept { return exact_; }
  double value() const noexcept { return static_cast<double>(value_); }
  long double value_ld() const noexcept { return value_; }

  std::string str() const {
    if (is_rational()) return n_ == 1 ? std::to_string(m_) : std::to_string(m_) + "/" + std::to_string(n_);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17Lg", value_);
    return buf;
  }

 private:
  GammaRatio() = default;
  Kind kind_ = Kind::rational;
  long long m_ = 1;
  long long n_ = 1;
  Rational exact_ = 1;
  long double value_ = 1.0L;
};

}  // namespace bubbletower
