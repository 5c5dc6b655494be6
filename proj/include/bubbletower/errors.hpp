#pragma once

#include <stdexcept>
#include <string>

namespace bubbletower {

// Every failure the library reports derives from Error so callers can map
// the category to a process exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Adjacent concentration scales are too close for the requested rho.
class ScaleCollapse : public Error {
 public:
  using Error::Error;
};

class NoContraction : public Error {
 public:
  NoContraction(const std::string& what, double factor) : Error(what), factor_(factor) {}
  double factor() const noexcept { return factor_; }

 private:
  double factor_;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class SymmetryViolation : public Error {
 public:
  using Error::Error;
};

class NearSingular : public Error {
 public:
  NearSingular(const std::string& what, double sigma) : Error(what), sigma_(sigma) {}
  double smallest_singular_value() const noexcept { return sigma_; }

 private:
  double sigma_;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class OverflowGuard : public Error {
 public:
  using Error::Error;
};

enum class ExitStatus : int {
  ok = 0,
  failure = 1,
  config = 2,
  scale_collapse = 3,
  no_contraction = 4,
  quadrature = 5,
};

}  // namespace bubbletower
