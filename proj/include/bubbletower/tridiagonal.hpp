#pragma once

#include "errors.hpp"

#include <lapacke.h>

#include <cmath>
#include <string>
#include <vector>

namespace bubbletower {

struct SymmetricTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples i and i + 1

  std::size_t size() const noexcept { return diag.size(); }

  std::vector<double> multiply(const std::vector<double>& x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = diag[i] * x[i];
      if (i > 0) v += off[i - 1] * x[i - 1];
      if (i + 1 < n) v += off[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }

  double dot(const std::vector<double>& x, const std::vector<double>& y) const {
    const auto ax = multiply(x);
    double s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += ax[i] * y[i];
    return s;
  }

  // D^(-1/2) A D^(-1/2) for positive weights d.
  SymmetricTridiagonal scaled(const std::vector<double>& d) const {
    SymmetricTridiagonal out = *this;
    for (std::size_t i = 0; i < size(); ++i) out.diag[i] /= d[i];
    for (std::size_t i = 0; i + 1 < size(); ++i) out.off[i] /= std::sqrt(d[i] * d[i + 1]);
    return out;
  }
};

// LU with partial pivoting (LAPACK gttrf/gttrs), factored once and reused.
class TridiagonalLu {
 public:
  explicit TridiagonalLu(const SymmetricTridiagonal& a)
      : n_(static_cast<lapack_int>(a.size())), lower_(a.off), diag_(a.diag), upper_(a.off),
        upper2_(a.size() > 2 ? a.size() - 2 : 1), pivots_(a.size()) {
    const lapack_int info =
        LAPACKE_dgttrf(n_, lower_.data(), diag_.data(), upper_.data(), upper2_.data(), pivots_.data());
    if (info < 0) throw std::logic_error("dgttrf: bad argument " + std::to_string(-info));
    if (info > 0) throw NearSingular("tridiagonal system is exactly singular", 0.0);
  }

  std::vector<double> solve(std::vector<double> b) const {
    const lapack_int info = LAPACKE_dgttrs(LAPACK_COL_MAJOR, 'N', n_, 1, lower_.data(), diag_.data(),
                                           upper_.data(), upper2_.data(), pivots_.data(), b.data(), n_);
    if (info != 0) throw std::logic_error("dgttrs failed");
    return b;
  }

 private:
  lapack_int n_;
  std::vector<double> lower_, diag_, upper_, upper2_;
  std::vector<lapack_int> pivots_;
};

// Number of eigenvalues below shift (Sturm sequence via LDL^T pivots).
inline std::size_t count_below(const SymmetricTridiagonal& a, double shift) {
  std::size_t count = 0;
  double pivot = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double coupling = i == 0 ? 0.0 : a.off[i - 1] * a.off[i - 1];
    pivot = a.diag[i] - shift - (i == 0 ? 0.0 : coupling / pivot);
    if (pivot == 0.0) pivot = -1e-300;
    if (pivot < 0.0) ++count;
  }
  return count;
}

// Eigenvalue of smallest magnitude (bisection, LAPACK stebz).
inline double eigenvalue_nearest_zero(const SymmetricTridiagonal& a) {
  const auto n = static_cast<lapack_int>(a.size());
  const auto negatives = static_cast<lapack_int>(count_below(a, 0.0));
  const lapack_int lo = std::max<lapack_int>(1, negatives);
  const lapack_int hi = std::min<lapack_int>(n, negatives + 1);
  std::vector<double> d = a.diag, e = a.off, w(static_cast<std::size_t>(n));
  std::vector<lapack_int> block(static_cast<std::size_t>(n)), split(static_cast<std::size_t>(n));
  lapack_int found = 0, nsplit = 0;
  if (e.empty()) e.push_back(0.0);
  const lapack_int info = LAPACKE_dstebz('I', 'E', n, 0.0, 0.0, lo, hi, 0.0, d.data(), e.data(), &found,
                                         &nsplit, w.data(), block.data(), split.data());
  if (info != 0 || found < 1) throw std::logic_error("dstebz failed");
  double best = w[0];
  for (lapack_int i = 1; i < found; ++i)
    if (std::fabs(w[static_cast<std::size_t>(i)]) < std::fabs(best)) best = w[static_cast<std::size_t>(i)];
  return best;
}

}  // namespace bubbletower
