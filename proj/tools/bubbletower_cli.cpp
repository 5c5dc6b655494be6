// Command-line front end: parameter tables, ansatz fields, residual and
// linear-theory probes, fixed-point refinement and rho sweeps.

#include <bubbletower/bubbletower.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

namespace bt = bubbletower;

namespace {

struct RunConfig {
  std::string command;
  std::string gamma = "1";
  int k = 1;
  double tau = 1.0;
  std::string precision = "exact";
  std::optional<double> rho;
  std::optional<double> rho_start;
  double ratio = 0.31622776601683794;
  int count = 8;
  std::vector<double> p{1.0, 1.05, 1.1};
  std::vector<int> modes;
  std::string out = "bubbletower";
  std::uint64_t seed = 20240601;
  int max_iters = 50;
  double tol_rel = 1e-10;
  double ball_radius = 1.0;
  double points_per_decade = 192.0;

  bt::TowerSpec spec() const {
    bt::TowerSpec s;
    s.k = k;
    s.gamma = bt::GammaRatio::parse(gamma);
    s.tau = tau;
    if (precision == "exact")
      s.precision = bt::Precision::exact;
    else if (precision == "float")
      s.precision = bt::Precision::floating;
    else
      throw bt::ConfigError("precision must be 'exact' or 'float'");
    s.validate();
    return s;
  }

  double single_rho() const {
    if (!rho) throw bt::ConfigError("--rho is required for '" + command + "'");
    return *rho;
  }

  std::vector<double> ladder(const bt::BubbleFamily& fam) const {
    if (count < 1) throw bt::ConfigError("ladder count must be >= 1");
    bt::RhoLadder l = bt::default_ladder(fam, count);
    if (rho_start) l.start = *rho_start;
    l.ratio = ratio;
    return l.values();
  }

  bt::Json json() const {
    bt::Json j{{"command", command}, {"gamma", gamma},   {"k", k},          {"tau", tau},
               {"precision", precision}, {"ratio", ratio}, {"count", count}, {"p", p},
               {"out", out},         {"seed", seed},     {"max_iters", max_iters},
               {"tol_rel", tol_rel}, {"ball_radius", ball_radius},
               {"points_per_decade", points_per_decade}};
    j["rho"] = rho ? bt::Json(*rho) : bt::Json(nullptr);
    j["rho_start"] = rho_start ? bt::Json(*rho_start) : bt::Json(nullptr);
    j["modes"] = modes;
    return j;
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw bt::ConfigError("cannot write '" + path + "'");
  return os;
}

void write_json(const std::string& path, const bt::Json& j) {
  auto os = open_output(path);
  os << j.dump(2) << '\n';
  std::cerr << "wrote " << path << '\n';
}

void emit(const RunConfig& cfg, const std::string& suffix, bt::Json payload) {
  write_json(cfg.out + suffix, bt::envelope(cfg.command, cfg.json(), std::move(payload)));
}

void run_params(const RunConfig& cfg) {
  const auto spec = cfg.spec();
  const auto fam = bt::bubble_family(spec);
  {
    auto os = open_output(cfg.out + "_params.csv");
    bt::write_parameter_csv(os, fam);
  }
  {
    auto os = open_output(cfg.out + "_summary.csv");
    bt::write_summary_csv(os, spec);
  }
  bt::Json payload{{"spec", bt::spec_json(spec)}, {"family", bt::family_json(fam)},
                   {"summary", bt::summary_json(spec)}};
  payload["monotonicity_violations"] = bt::monotonicity_violations(spec);
  payload["delta_recursion_discrepancy"] = bt::delta_recursive_check(fam, 1e-3);
  if (spec.gamma.is_rational()) payload["kernel_modes"] = bt::kernel_json(bt::kernel_mode_check(spec));
  payload["separation_limit_rho"] = bt::separation_limit(fam);
  emit(cfg, "_params.json", std::move(payload));
}

void run_ansatz(const RunConfig& cfg) {
  const auto spec = cfg.spec();
  const bt::Ansatz ansatz(spec, cfg.single_rho());
  const auto grid = ansatz.default_grid(cfg.points_per_decade);
  const auto field = bt::ansatz_assemble(ansatz, grid);
  {
    auto os = open_output(cfg.out + "_W.csv");
    bt::write_csv(os, field);
  }
  bt::Json payload{{"spec", bt::spec_json(spec)},
                   {"field_header", bt::header_json(field)},
                   {"sign_changes", bt::sign_changes(field)},
                   {"far_field_dev", bt::far_field_check(ansatz, {0.25, 0.5, 0.75})},
                   {"scale_gaps_decades", bt::Json::array()}};
  for (int j = 1; j < ansatz.k(); ++j)
    payload["scale_gaps_decades"].push_back((ansatz.log_delta(j + 1) - ansatz.log_delta(j)) / std::numbers::ln10);
  emit(cfg, "_W.json", std::move(payload));
}

void run_residual(const RunConfig& cfg) {
  const auto spec = cfg.spec();
  const bt::Ansatz ansatz(spec, cfg.single_rho());
  const auto report = bt::analyze_residuals(ansatz, cfg.p);
  emit(cfg, "_residual.json", bt::Json{{"spec", bt::spec_json(spec)}, {"report", bt::residual_json(report)}});
}

void run_linear(const RunConfig& cfg) {
  const auto spec = cfg.spec();
  const auto fam = bt::bubble_family(spec);
  const std::vector<double> rhos = cfg.rho ? std::vector<double>{*cfg.rho} : cfg.ladder(fam);
  std::vector<int> modes = cfg.modes;
  if (modes.empty()) {
    const bt::SymmetryClass symmetry(spec.gamma);
    for (long long m : symmetry.first_modes(3)) modes.push_back(static_cast<int>(m));
  }
  const auto series = bt::inverse_norm_probe(spec, rhos, modes, cfg.seed, bt::worker_count_from_env(),
                                             cfg.points_per_decade);
  {
    auto os = open_output(cfg.out + "_probe.csv");
    bt::write_probe_csv(os, series);
  }
  bt::Json samples = bt::Json::array();
  for (const auto& s : series) samples.push_back(bt::probe_json(s));
  bt::Json payload{{"spec", bt::spec_json(spec)}, {"samples", samples}};
  if (spec.gamma.is_rational()) payload["kernel_modes"] = bt::kernel_json(bt::kernel_mode_check(spec));
  emit(cfg, "_linear.json", std::move(payload));
}

void run_solve(const RunConfig& cfg) {
  const auto spec = cfg.spec();
  bt::RefineConfig rc;
  rc.max_iters = cfg.max_iters;
  rc.tol_rel = cfg.tol_rel;
  rc.ball_radius_factor = cfg.ball_radius;
  rc.points_per_decade = cfg.points_per_decade;
  rc.seed = cfg.seed;
  rc.validate();
  const bt::FixedPointProblem problem(bt::Ansatz(spec, cfg.single_rho()), rc.points_per_decade);
  const auto report = bt::iterate_to_fixed_point(problem, rc);
  std::vector<double> u(report.phi.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = problem.w()[i] + report.phi[i];
  const bt::RadialField field(report.phi.grid, std::move(u), 0, problem.ansatz().header("u"));
  {
    auto os = open_output(cfg.out + "_u.csv");
    bt::write_csv(os, field);
  }
  emit(cfg, "_solution.json",
       bt::Json{{"spec", bt::spec_json(spec)},
                {"field_header", bt::header_json(field)},
                {"solution", bt::solution_json(report)}});
}

void run_sweep(const RunConfig& cfg) {
  const auto spec = cfg.spec();
  const auto fam = bt::bubble_family(spec);
  const auto ladder = cfg.ladder(fam);
  const auto sweep = bt::residual_sweep(spec, ladder, cfg.p, bt::worker_count_from_env());
  {
    auto os = open_output(cfg.out + "_decay.csv");
    bt::write_decay_csv(os, sweep);
  }
  emit(cfg, "_sweep.json", bt::Json{{"spec", bt::spec_json(spec)}, {"ladder", ladder}, {"sweep", bt::sweep_json(sweep)}});
}

int exit_code(bt::ExitStatus s) { return static_cast<int>(s); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-changing bubble-tower constructions for the asymmetric sinh-Poisson equation"};
  app.set_version_flag("--version", std::string(bt::kVersion));
  app.set_config("--config", "", "flat key = value file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  app.add_option("--gamma", cfg.gamma, "asymmetry exponent as m/n (exact) or a decimal (real)");
  app.add_option("--k", cfg.k, "number of bubbles");
  app.add_option("--tau", cfg.tau, "coefficient of the negative exponential");
  app.add_option("--precision", cfg.precision, "identity checks: exact or float")
      ->check(CLI::IsMember({"exact", "float"}));
  app.add_option("--rho", cfg.rho, "single rho value");
  app.add_option("--rho-start", cfg.rho_start, "first ladder value (default: largest separated half-decade)");
  app.add_option("--ratio", cfg.ratio, "geometric ladder ratio");
  app.add_option("--count", cfg.count, "ladder length");
  app.add_option("--p", cfg.p, "L^p exponents")->delimiter(',');
  app.add_option("--modes", cfg.modes, "Fourier modes for linear probes")->delimiter(',');
  app.add_option("--out", cfg.out, "output path prefix");
  app.add_option("--seed", cfg.seed, "seed for randomized probes");
  app.add_option("--max-iters", cfg.max_iters, "fixed-point iteration cap");
  app.add_option("--tol", cfg.tol_rel, "relative increment tolerance");
  app.add_option("--ball-radius", cfg.ball_radius, "R in the bound ||phi|| <= R rho^beta |ln rho|");
  app.add_option("--points-per-decade", cfg.points_per_decade, "grid density in log r");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"params", "exponents, scale constants and limiting masses"},
      {"ansatz", "tower ansatz on the grid"},
      {"residual", "error decomposition and norms at one rho"},
      {"linear", "kernel modes and inverse-norm probes"},
      {"solve", "fixed-point refinement at one rho"},
      {"sweep", "residual decay along a rho ladder"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(bt::ExitStatus::config);
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (cfg.command == "params") run_params(cfg);
    else if (cfg.command == "ansatz") run_ansatz(cfg);
    else if (cfg.command == "residual") run_residual(cfg);
    else if (cfg.command == "linear") run_linear(cfg);
    else if (cfg.command == "solve") run_solve(cfg);
    else if (cfg.command == "sweep") run_sweep(cfg);
  } catch (const bt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_code(bt::ExitStatus::config);
  } catch (const bt::ScaleCollapse& e) {
    std::cerr << "scale collapse: " << e.what() << '\n';
    return exit_code(bt::ExitStatus::scale_collapse);
  } catch (const bt::NoContraction& e) {
    std::cerr << "no contraction: " << e.what() << " (factor " << e.factor() << ")\n";
    return exit_code(bt::ExitStatus::no_contraction);
  } catch (const bt::QuadratureError& e) {
    std::cerr << "quadrature failure: " << e.what() << '\n';
    return exit_code(bt::ExitStatus::quadrature);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(bt::ExitStatus::failure);
  }
  return 0;
}
