#pragma once

// JSON and CSV renderings of analysis results. Every number is printed with
// 9 significant digits, and the JSON carries exactly the rounded value the
// CSV prints, so the two outputs agree digit for digit.

#include <rocof/grid_model.hpp>
#include <rocof/inertia_dispatch.hpp>
#include <rocof/rocof_engine.hpp>
#include <rocof/swing_oracle.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>

namespace rocof::io {

using Json = nlohmann::ordered_json;

inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline double rounded(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

inline Json validation_json(const ValidationReport& report) {
  Json j;
  j["ok"] = report.ok;
  j["issues"] = Json::array();
  for (const auto& i : report.issues)
    j["issues"].push_back({{"severity", i.severity == Severity::error ? "error" : "warning"},
                           {"message", i.message},
                           {"id", i.offending_id}});
  return j;
}

inline Json report_json(const RoCoFReport& r) {
  Json j;
  j["disturbance"] = {{"bus", r.disturbance.bus.value}, {"p_dis_mw", rounded(r.disturbance.p_dis_mw)}};
  j["worst_bus"] = r.worst_bus.value;
  j["worst_bus_kind"] = to_string(r.worst_kind);
  j["worst_rocof_hz_per_s"] = rounded(r.worst_rocof);
  j["buses"] = Json::array();
  for (const auto& b : r.buses())
    j["buses"].push_back({{"id", b.id.value}, {"kind", to_string(b.kind)}, {"rocof_hz_per_s", rounded(b.rocof_hz_per_s)}});
  j["generators"] = Json::array();
  for (std::size_t i = 0; i < r.generator_ids.size(); ++i)
    j["generators"].push_back({{"id", r.generator_ids[i].value},
                               {"delta_pg_mw", rounded(r.impact.delta_pg_mw[static_cast<Eigen::Index>(i)])}});
  j["conservation_residual_mw"] = rounded(r.impact.conservation_residual_mw);
  if (r.propagation) {
    j["propagation"] = {{"max_row_sum_error", rounded(r.propagation->max_row_sum_error)},
                        {"min_entry", rounded(r.propagation->min_entry)},
                        {"nonnegative", r.propagation->nonnegative}};
  }
  return j;
}

/// bus_id,bus_kind,rocof_hz_per_s
inline void write_report_csv(const RoCoFReport& r, std::ostream& os) {
  os << "bus_id,bus_kind,rocof_hz_per_s\n";
  for (const auto& b : r.buses()) os << b.id << ',' << to_string(b.kind) << ',' << format_number(b.rocof_hz_per_s) << '\n';
}

inline Json screening_json(const ScreeningResult& s) {
  Json j;
  j["contingencies"] = Json::array();
  for (const auto& r : s.reports) j["contingencies"].push_back(report_json(r));
  const auto& worst = s.reports[s.worst_report];
  Json summary;
  summary["worst"] = {{"disturbance_bus", worst.disturbance.bus.value},
                      {"worst_bus", worst.worst_bus.value},
                      {"worst_rocof_hz_per_s", rounded(worst.worst_rocof)}};
  summary["generators"] = Json::array();
  const auto& ids = worst.generator_ids;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    summary["generators"].push_back(
        {{"id", ids[i].value},
         {"max_abs_delta_pg_mw", rounded(s.max_abs_delta_pg_mw[static_cast<Eigen::Index>(i)])},
         {"binding_disturbance_bus", s.reports[s.binding_contingency[i]].disturbance.bus.value}});
  }
  j["summary"] = summary;
  return j;
}

/// disturbance_bus,bus_id,bus_kind,rocof_hz_per_s
inline void write_screening_csv(const ScreeningResult& s, std::ostream& os) {
  os << "disturbance_bus,bus_id,bus_kind,rocof_hz_per_s\n";
  for (const auto& r : s.reports)
    for (const auto& b : r.buses())
      os << r.disturbance.bus << ',' << b.id << ',' << to_string(b.kind) << ',' << format_number(b.rocof_hz_per_s)
         << '\n';
}

inline Json dispatch_json(const GridModel& grid, const std::vector<Disturbance>& contingencies,
                          const DispatchSolution& s) {
  Json j;
  j["status"] = lp::to_string(s.status);
  if (s.status != lp::Status::optimal) {
    j["infeasible"] = Json::array();
    for (const auto& [g, k] : s.infeasible_pairs)
      j["infeasible"].push_back({{"generator", grid.generators[g].bus.value},
                                 {"contingency", k},
                                 {"disturbance_bus", contingencies[k].bus.value}});
    return j;
  }
  j["objective"] = rounded(s.objective);
  j["awards"] = Json::array();
  for (std::size_t i = 0; i < grid.generators.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    j["awards"].push_back({{"bus", grid.generators[i].bus.value},
                           {"h_v_mws", rounded(s.h_v_mws[ii])},
                           {"price_per_mws", rounded(s.prices[ii])}});
  }
  j["audit"] = {{"worst_bus", s.audit.worst_bus.value},
                {"worst_rocof_hz_per_s", rounded(s.audit.worst_rocof_hz_per_s)},
                {"disturbance_bus", contingencies[s.audit.worst_contingency].bus.value}};
  j["degenerate"] = s.degenerate;
  j["kkt_max_residual"] = rounded(s.kkt.max());
  return j;
}

/// bus,h_v_mws,price_per_mws
inline void write_dispatch_csv(const GridModel& grid, const DispatchSolution& s, std::ostream& os) {
  os << "bus,h_v_mws,price_per_mws\n";
  if (s.status != lp::Status::optimal) return;
  for (std::size_t i = 0; i < grid.generators.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    os << grid.generators[i].bus << ',' << format_number(s.h_v_mws[ii]) << ',' << format_number(s.prices[ii]) << '\n';
  }
}

inline Json initial_rocof_json(const SimulationTrace& trace, const Vector& estimate, const Vector* algebraic) {
  Json j;
  j["dt_s"] = trace.dt;
  j["samples"] = trace.num_samples();
  j["buses"] = Json::array();
  for (std::size_t b = 0; b < trace.bus_ids.size(); ++b) {
    const auto bb = static_cast<Eigen::Index>(b);
    Json row = {{"id", trace.bus_ids[b].value},
                {"kind", to_string(trace.bus_kinds[b])},
                {"initial_rocof_hz_per_s", rounded(estimate[bb])}};
    if (algebraic) row["algebraic_rocof_hz_per_s"] = rounded((*algebraic)[bb]);
    j["buses"].push_back(row);
  }
  return j;
}

}  // namespace rocof::io
