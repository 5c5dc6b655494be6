#pragma once

#include "errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace bubbletower {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  unsigned max_depth = 24;
};

struct QuadratureResult {
  double value = 0;
  double error = 0;
  double l1 = 0;
};

// Adaptive 31-point Gauss-Kronrod; either endpoint may be infinite. Throws
// QuadratureError when the error estimate misses the requested tolerance.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  if (a == b) return out;
  out.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, opt.max_depth, opt.rel_tol, &out.error, &out.l1);
  const double budget = 100.0 * opt.rel_tol * out.l1 + 1e-300;
  if (!std::isfinite(out.value) || out.error > budget)
  {
    char msg[160];
    std::snprintf(msg, sizeof msg, "quadrature on [%.6g, %.6g] stopped at error %.3e (budget %.3e)", a, b,
                  out.error, budget);
    throw QuadratureError(msg);
  }
  return out;
}

// Adaptive integrals over groups of consecutive breakpoints, one result per
// group. The tolerance applies to the grand total: a coarse pass sizes each
// piece, and small pieces get a looser relative target so that rounding noise
// in them cannot stall the refinement.
template <class F>
std::vector<QuadratureResult> integrate_groups(F&& f, const std::vector<std::vector<double>>& groups,
                                               const QuadratureOptions& opt = {}) {
  struct Piece {
    std::size_t group;
    double a, b, size;
  };
  std::vector<Piece> pieces;
  double total = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& br = groups[g];
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      if (!(br[i] < br[i + 1])) continue;
      double err = 0, l1 = 0;
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, br[i], br[i + 1], 0, 1.0, &err, &l1);
      pieces.push_back({g, br[i], br[i + 1], l1 + err});
      total += l1 + err;
    }
  }
  std::vector<QuadratureResult> out(groups.size());
  for (const auto& pc : pieces) {
    QuadratureOptions local = opt;
    if (pc.size > 0) local.rel_tol = std::min(1.0, std::max(opt.rel_tol, opt.rel_tol * total / pc.size));
    const auto part = integrate(f, pc.a, pc.b, local);
    auto& o = out[pc.group];
    o.value += part.value;
    o.error += part.error;
    o.l1 += part.l1;
  }
  return out;
}

template <class F>
QuadratureResult integrate_piecewise(F&& f, const std::vector<double>& breaks,
                                     const QuadratureOptions& opt = {}) {
  return integrate_groups(f, std::vector<std::vector<double>>{breaks}, opt).front();
}

}  // namespace bubbletower
