#pragma once

#include <string>
#include <vector>

#include "eoam/io.hpp"
#include "eoam/scenario.hpp"

#include "json.hpp"

namespace eoam {

// File emitters for runs and sweeps. Every artifact carries the table
// provenance hash; timestamps only ever appear in the manifest.

inline std::string timeseries_csv(const ScenarioResult& r, const std::string& provenance) {
  CsvWriter csv({"t_s", "mode", "fcw", "sector", "delta_cmd_rad", "f_t_cmd_n", "x_m", "y_m",
                 "v_x_ms", "psi_rad", "v_target_ms", "ax_target_ms2", "ax_actual_ms2",
                 "y_target_m", "e_offset_m", "e_lookahead_m", "dx_m", "rel_dist_m",
                 "rel_speed_ms", "a_y_body_ms2"});
  csv.comment("manifest " + provenance);
  for (const TickRecord& k : r.series) {
    csv.row({fmt_double_short(k.t), std::to_string(k.mode), k.fcw ? "1" : "0",
             std::string(1, k.sector), fmt_double_short(k.delta_cmd), fmt_double_short(k.f_t_cmd),
             fmt_double_short(k.x), fmt_double_short(k.y), fmt_double_short(k.v_x),
             fmt_double_short(k.psi), fmt_double_short(k.v_target), fmt_double_short(k.ax_target),
             fmt_double_short(k.ax_actual), fmt_double_short(k.y_target),
             fmt_double_short(k.e_offset), fmt_double_short(k.e_lookahead), fmt_double_short(k.dx),
             fmt_double_short(k.rel_dist), fmt_double_short(k.rel_speed),
             fmt_double_short(k.a_y_body)});
  }
  return csv.str();
}

inline std::string phase_trace_csv(const ScenarioResult& r, const std::string& provenance) {
  CsvWriter csv({"t_s", "rel_dist_m", "rel_speed_ms", "sector"});
  csv.comment("manifest " + provenance);
  for (const PhaseTracePoint& p : r.phase_trace)
    csv.row({fmt_double_short(p.t), fmt_double_short(p.rel_dist), fmt_double_short(p.rel_speed),
             std::string(1, p.sector)});
  return csv.str();
}

inline nlohmann::json outcome_json(const ScenarioResult& r, const std::string& provenance) {
  nlohmann::json j;
  j["outcome"] = to_string(r.outcome);
  j["provenance"] = provenance;
  j["end_time_s"] = r.end_time;
  j["maneuver_triggered"] = r.maneuver_triggered;
  j["steer_triggered"] = r.steer_triggered;
  j["return_completed"] = r.return_completed;
  j["handback"] = r.handback;
  j["limit_braking_before_pnr"] = r.limit_braking_before_pnr;
  if (r.contact) {
    j["collision"] = {{"time_s", r.contact->time},
                      {"object", r.contact->role == ObjectRole::InLaneAro      ? "in_lane"
                                 : r.contact->role == ObjectRole::OncomingAro ? "oncoming"
                                                                              : "parked"},
                      {"closing_speed_ms", r.contact->closing_speed},
                      {"frontal", r.contact->frontal}};
  }
  return j;
}

// Per-channel plot files for the standard dynamic output set.
inline std::vector<std::pair<std::string, std::string>> plot_channel_csvs(
    const ScenarioResult& r, const std::string& provenance, double steering_ratio = 16.0) {
  auto col = [&](const std::string& name, auto getter) {
    CsvWriter csv({"t_s", name});
    csv.comment("manifest " + provenance);
    for (const TickRecord& k : r.series) csv.row({fmt_double_short(k.t), getter(k)});
    return csv.str();
  };
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("mode.csv", col("mode", [](const TickRecord& k) { return std::to_string(k.mode); }));
  out.emplace_back("fcw.csv", col("fcw", [](const TickRecord& k) { return std::string(k.fcw ? "1" : "0"); }));
  out.emplace_back("speed_tracking.csv", [&] {
    CsvWriter csv({"t_s", "v_target_ms", "v_x_ms"});
    csv.comment("manifest " + provenance);
    for (const TickRecord& k : r.series)
      csv.row({fmt_double_short(k.t), fmt_double_short(k.v_target), fmt_double_short(k.v_x)});
    return csv.str();
  }());
  out.emplace_back("accel_tracking.csv", [&] {
    CsvWriter csv({"t_s", "ax_target_ms2", "ax_actual_ms2"});
    csv.comment("manifest " + provenance);
    for (const TickRecord& k : r.series)
      csv.row({fmt_double_short(k.t), fmt_double_short(k.ax_target), fmt_double_short(k.ax_actual)});
    return csv.str();
  }());
  out.emplace_back("lateral_tracking.csv", [&] {
    CsvWriter csv({"t_s", "y_target_m", "y_m"});
    csv.comment("manifest " + provenance);
    for (const TickRecord& k : r.series)
      csv.row({fmt_double_short(k.t), fmt_double_short(k.y_target), fmt_double_short(k.y)});
    return csv.str();
  }());
  out.emplace_back("lateral_errors.csv", [&] {
    CsvWriter csv({"t_s", "e_offset_m", "e_lookahead_m"});
    csv.comment("manifest " + provenance);
    for (const TickRecord& k : r.series)
      csv.row({fmt_double_short(k.t), fmt_double_short(k.e_offset), fmt_double_short(k.e_lookahead)});
    return csv.str();
  }());
  out.emplace_back("differential_x.csv",
                   col("dx_m", [](const TickRecord& k) { return fmt_double_short(k.dx); }));
  out.emplace_back("steering.csv", [&] {
    CsvWriter csv({"t_s", "delta_rad", "handwheel_deg"});
    csv.comment("manifest " + provenance);
    for (const TickRecord& k : r.series)
      csv.row({fmt_double_short(k.t), fmt_double_short(k.delta_cmd),
               fmt_double_short(rad_to_deg(k.delta_cmd * steering_ratio))});
    return csv.str();
  }());
  out.emplace_back("gg_samples.csv", [&] {
    CsvWriter csv({"t_s", "a_x_ms2", "a_y_ms2"});
    csv.comment("manifest " + provenance);
    for (const TickRecord& k : r.series)
      csv.row({fmt_double_short(k.t), fmt_double_short(k.a_x_body), fmt_double_short(k.a_y_body)});
    return csv.str();
  }());
  return out;
}

inline nlohmann::json make_manifest(const std::vector<std::string>& config_paths,
                                    const std::string& provenance, const std::string& out_dir,
                                    const std::string& timestamp) {
  nlohmann::json j;
  j["configs"] = config_paths;
  j["provenance"] = provenance;
  j["tool_version"] = kToolVersion;
  j["timestamp"] = timestamp;
  j["output_dir"] = out_dir;
  return j;
}

}  // namespace eoam
