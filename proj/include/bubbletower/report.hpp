#pragma once

// JSON and CSV renderings of the library results. Masses are normalized by
// 4 pi and lambda by 2 pi; logarithms are natural.

#include "linear.hpp"
#include "parameters.hpp"
#include "radial_field.hpp"
#include "refine.hpp"
#include "residual.hpp"
#include "version.hpp"

#include <json.hpp>

#include <numbers>
#include <ostream>
#include <string>

namespace bubbletower {

using Json = nlohmann::ordered_json;

inline Json rational_json(const Rational& q) {
  return Json{{"exact", to_string(q)}, {"value", to_double(q)}};
}

// Wraps a payload with schema and artifact identification and the resolved
// run configuration.
inline Json envelope(std::string_view command, const Json& config, Json payload) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["artifact"] = "bubbletower";
  j["version"] = std::string(kVersion);
  j["command"] = std::string(command);
  j["config"] = config;
  j["result"] = std::move(payload);
  return j;
}

inline Json spec_json(const TowerSpec& spec) {
  return Json{{"k", spec.k},
              {"gamma", spec.gamma.str()},
              {"gamma_kind", spec.gamma.is_rational() ? "rational" : "real"},
              {"tau", spec.tau},
              {"precision", spec.precision == Precision::exact ? "exact" : "float"}};
}

inline Json family_json(const BubbleFamily& fam) {
  Json rows = Json::array();
  for (const auto& b : fam.bubbles) {
    Json row{{"j", b.index},
             {"alpha", rational_json(b.alpha)},
             {"s", rational_json(b.s)},
             {"r", rational_json(b.r)},
             {"q", b.q ? rational_json(*b.q) : Json(nullptr)},
             {"kappa_log", static_cast<double>(b.log_kappa)},
             {"c_log", static_cast<double>(b.log_c)},
             {"d_log", static_cast<double>(b.log_d)}};
    rows.push_back(std::move(row));
  }
  return Json{{"bubbles", rows},
              {"signed_alpha_sum", rational_json(fam.signed_alpha_sum)},
              {"beta_bar", rational_json(fam.beta_bar)}};
}

inline Json summary_json(const TowerSpec& spec) {
  const MassReport m = blowup_masses(spec);
  const PhysicsParams phys = physics_params(spec);
  return Json{{"m_plus_over_4pi", rational_json(m.plus_over_4pi)},
              {"m_minus_over_4pi", rational_json(m.minus_over_4pi)},
              {"M_k_over_4pi", rational_json(m.total_over_4pi)},
              {"lambda_over_2pi", rational_json(phys.lambda_over_2pi)},
              {"p_bar", rational_json(phys.p_bar)},
              {"identity_residual", mass_identity_residual(m, spec.gamma)}};
}

inline void write_parameter_csv(std::ostream& os, const BubbleFamily& fam) {
  os << "gamma,k,j,alpha,s,r,q,kappa_log,c_log,d_log\r\n";
  for (const auto& b : fam.bubbles) {
    os << fam.spec.gamma.str() << ',' << fam.k() << ',' << b.index << ',' << to_string(b.alpha) << ','
       << to_string(b.s) << ',' << to_string(b.r) << ',' << (b.q ? to_string(*b.q) : std::string{}) << ','
       << format_number(static_cast<double>(b.log_kappa)) << ',' << format_number(static_cast<double>(b.log_c))
       << ',' << format_number(static_cast<double>(b.log_d)) << "\r\n";
  }
}

inline void write_summary_csv(std::ostream& os, const TowerSpec& spec) {
  const MassReport m = blowup_masses(spec);
  const PhysicsParams phys = physics_params(spec);
  os << "gamma,k,m_plus_over_4pi,m_minus_over_4pi,M_k_over_4pi,lambda_over_2pi,p_bar,identity_residual\r\n";
  os << spec.gamma.str() << ',' << spec.k << ',' << to_string(m.plus_over_4pi) << ','
     << to_string(m.minus_over_4pi) << ',' << to_string(m.total_over_4pi) << ','
     << to_string(phys.lambda_over_2pi) << ',' << to_string(phys.p_bar) << ','
     << format_number(mass_identity_residual(m, spec.gamma)) << "\r\n";
}

inline Json mass_pair_json(const MassPair& m) {
  const double four_pi = 4.0 * std::numbers::pi;
  return Json{{"plus_over_4pi", m.plus / four_pi}, {"minus_over_4pi", m.minus / four_pi}};
}

inline Json identity_json(const IdentityCheck& c) {
  return Json{{"R_split", c.r_split},
              {"S_split", c.s_split},
              {"E_plus_parts", c.plus_parts},
              {"E_minus_parts", c.minus_parts},
              {"theta_bracket", c.theta_bracket}};
}

inline Json residual_json(const ResidualReport& r) {
  Json norms = Json::array();
  for (const auto& e : r.norms)
    norms.push_back(Json{{"component", std::string(component_name(e.component))},
                         {"p", e.norm.p},
                         {"per_annulus", e.norm.per_annulus},
                         {"norm", e.norm.total}});
  Json theta = Json::array();
  for (std::size_t j = 0; j < r.theta_scans.size(); ++j) {
    const auto& s = r.theta_scans[j];
    theta.push_back(Json{{"j", j + 1},
                         {"sup", s.sup},
                         {"argmax_log_y", s.arg_log_y},
                         {"bound_scale", s.bound_scale},
                         {"bound_ratio", s.bound_ratio}});
  }
  return Json{{"rho", r.rho},
              {"beta_bar_expected", rational_json(r.beta_bar)},
              {"theta_sup", theta},
              {"norms", norms},
              {"identities", identity_json(r.identities)},
              {"masses_ball_1", mass_pair_json(r.masses)},
              {"masses_ball_0.3", mass_pair_json(r.masses_inner)}};
}

inline Json sweep_json(const SweepReport& s) {
  Json points = Json::array();
  for (const auto& p : s.points) points.push_back(residual_json(p));
  Json fits = Json::array();
  for (const auto& f : s.fits) {
    Json j{{"series", f.series}, {"p", f.p}};
    if (f.fit) {
      j["slope"] = f.fit->slope;
      j["intercept"] = f.fit->intercept;
      j["r2"] = f.fit->r2;
    }
    if (f.predicted) j["predicted_slope"] = *f.predicted;
    if (!f.note.empty()) j["note"] = f.note;
    fits.push_back(std::move(j));
  }
  return Json{{"points", points}, {"fits", fits}};
}

inline void write_decay_csv(std::ostream& os, const SweepReport& s) {
  os << "rho,component,p,norm\r\n";
  for (const auto& r : s.points)
    for (const auto& e : r.norms)
      os << format_number(r.rho) << ',' << component_name(e.component) << ',' << format_number(e.norm.p) << ','
         << format_number(e.norm.total) << "\r\n";
}

inline Json probe_json(const InverseNormSample& s) {
  return Json{{"rho", s.rho},
              {"mode", s.mode},
              {"smallest_singular_value", s.smallest_singular_value},
              {"extrapolated_singular_value", s.extrapolated_singular_value},
              {"inv_norm_estimate", s.inv_norm_estimate}};
}

inline void write_probe_csv(std::ostream& os, const std::vector<InverseNormSample>& series) {
  os << "rho,mode,smallest_singular_value,extrapolated_singular_value,inv_norm_estimate\r\n";
  for (const auto& s : series)
    os << format_number(s.rho) << ',' << s.mode << ',' << format_number(s.smallest_singular_value) << ','
       << format_number(s.extrapolated_singular_value) << ','
       << format_number(s.inv_norm_estimate) << "\r\n";
}

inline Json kernel_json(const KernelModeReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    Json j{{"j", e.j}, {"half_alpha", to_string(e.half_alpha)}, {"integral", e.integral}};
    if (e.integral) {
      j["residue_mod_period"] = e.residue;
      j["allowed"] = e.allowed;
    }
    entries.push_back(std::move(j));
  }
  return Json{{"period", r.period}, {"m_plus_n", r.coprime_sum}, {"entries", entries}};
}

inline Json solution_json(const SolutionReport& s) {
  Json j{{"rho", s.rho},
         {"converged", s.converged},
         {"iters", s.iters},
         {"phi_norm", s.phi_norm},
         {"bound_ratio", s.bound_ratio},
         {"contraction_factor", s.contraction_factor ? Json(*s.contraction_factor) : Json(nullptr)},
         {"probe_factor", s.probe_factor},
         {"relaxed", s.relaxed},
         {"increments", s.increments},
         {"pde_residual_Lp", s.pde_residual_lp},
         {"ansatz_residual_Lp", s.ansatz_residual_lp},
         {"sign_changes", s.sign_changes},
         {"masses", mass_pair_json(s.masses)},
         {"mass_identity_rel", s.mass_identity_rel},
         {"far_field_dev", s.far_field_dev},
         {"ansatz_far_field_dev", s.ansatz_far_field_dev}};
  return j;
}

}  // namespace bubbletower
