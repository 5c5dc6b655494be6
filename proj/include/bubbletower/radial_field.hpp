#pragma once

// Radial functions sampled on a uniform grid in t = ln r, t in [t_min, 0].

#include "errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bubbletower {

class LogGrid {
 public:
  LogGrid() = default;

  // Uniform nodes from t_min to t_max with at least points_per_decade nodes
  // per factor 10 in r.
  static LogGrid uniform(double t_min, double t_max, double points_per_decade) {
    if (!(t_min < t_max) || !std::isfinite(t_min) || !std::isfinite(t_max))
      throw ConfigError("grid needs finite t_min < t_max");
    if (!(points_per_decade >= 1.0)) throw ConfigError("grid density must be >= 1 per decade");
    const double decades = (t_max - t_min) / std::numbers::ln10;
    const auto intervals = static_cast<std::size_t>(std::ceil(decades * points_per_decade));
    return with_intervals(t_min, t_max, std::max<std::size_t>(intervals, 2));
  }

  static LogGrid with_intervals(double t_min, double t_max, std::size_t intervals) {
    LogGrid g;
    g.step_ = (t_max - t_min) / static_cast<double>(intervals);
    g.t_.resize(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) g.t_[i] = t_min + g.step_ * static_cast<double>(i);
    g.t_.back() = t_max;
    return g;
  }

  std::size_t size() const noexcept { return t_.size(); }
  double step() const noexcept { return step_; }
  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }
  double operator[](std::size_t i) const { return t_[i]; }
  const std::vector<double>& nodes() const noexcept { return t_; }

  friend bool operator==(const LogGrid& a, const LogGrid& b) { return a.t_ == b.t_; }

 private:
  std::vector<double> t_;
  double step_ = 0;
};

// Metadata carried alongside a field so that files are self-describing.
struct FieldHeader {
  std::vector<double> alpha;
  std::vector<double> delta_log;
  double rho = 0;
  std::string gamma;
  int k = 0;
  std::string quantity;
};

inline void to_json(nlohmann::json& j, const FieldHeader& h) {
  j = nlohmann::json{{"alpha", h.alpha}, {"delta_log", h.delta_log}, {"rho", h.rho},
                     {"gamma", h.gamma}, {"k", h.k},         {"quantity", h.quantity}};
}

inline void from_json(const nlohmann::json& j, FieldHeader& h) {
  j.at("alpha").get_to(h.alpha);
  j.at("delta_log").get_to(h.delta_log);
  j.at("rho").get_to(h.rho);
  j.at("gamma").get_to(h.gamma);
  j.at("k").get_to(h.k);
  h.quantity = j.value("quantity", std::string{});
}

struct RadialField {
  LogGrid grid;
  std::vector<double> values;
  int mode = 0;
  FieldHeader header;

  RadialField() = default;
  RadialField(LogGrid g, std::vector<double> v, int m = 0, FieldHeader h = {})
      : grid(std::move(g)), values(std::move(v)), mode(m), header(std::move(h)) {
    if (values.size() != grid.size()) throw ConfigError("field size does not match its grid");
  }

  template <class F>
  static RadialField sample(const LogGrid& g, F&& f, int mode = 0, FieldHeader h = {}) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g[i]);
    return RadialField(g, std::move(v), mode, std::move(h));
  }

  std::size_t size() const noexcept { return values.size(); }
  double log_r(std::size_t i) const { return grid[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  // Linear interpolation in t; constant extrapolation below the grid.
  double at(double log_r) const {
    if (log_r <= grid.t_min()) return values.front();
    if (log_r >= grid.t_max()) return values.back();
    const double x = (log_r - grid.t_min()) / grid.step();
    const auto i = std::min(static_cast<std::size_t>(x), grid.size() - 2);
    const double frac = x - static_cast<double>(i);
    return (1.0 - frac) * values[i] + frac * values[i + 1];
  }
};

// Number of strict sign alternations between nodes, skipping |value| below
// the noise floor.
inline int sign_changes(const RadialField& f, double noise_floor = 1e-12) {
  int count = 0;
  int last = 0;
  for (double v : f.values) {
    if (std::fabs(v) < noise_floor) continue;
    const int s = v > 0 ? 1 : -1;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

// ---- serialization ------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const RadialField& f) {
  os << "log_r,value,mode\r\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    os << format_number(f.log_r(i)) << ',' << format_number(f[i]) << ',' << f.mode << "\r\n";
}

inline nlohmann::json header_json(const RadialField& f) {
  nlohmann::json j = f.header;
  j["mode"] = f.mode;
  j["points"] = f.size();
  j["log_r_min"] = f.grid.t_min();
  j["log_r_max"] = f.grid.t_max();
  return j;
}

// Reads the CSV written by write_csv; the grid must be uniform.
inline RadialField read_csv(std::istream& is, const FieldHeader& header = {}) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty field file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "log_r,value,mode") throw ConfigError("unexpected field header '" + line + "'");
  std::vector<double> t;
  std::vector<double> v;
  int mode = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
      throw ConfigError("malformed field row '" + line + "'");
    t.push_back(std::stod(a));
    v.push_back(std::stod(b));
    mode = std::stoi(c);
  }
  if (t.size() < 3) throw ConfigError("field file has too few rows");
  auto grid = LogGrid::with_intervals(t.front(), t.back(), t.size() - 1);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::fabs(grid[i] - t[i]) > 1e-9 * (1.0 + std::fabs(t[i])))
      throw ConfigError("field grid is not uniform in log r");
  return RadialField(std::move(grid), std::move(v), mode, header);
}

}  // namespace bubbletower
