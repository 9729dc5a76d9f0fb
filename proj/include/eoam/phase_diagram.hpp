#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eoam/grid.hpp"
#include "eoam/io.hpp"
#include "eoam/units.hpp"
#include "eoam/vehicle.hpp"

namespace eoam {

// Straight-line stopping distance without lockup: v^2 / (2 mu g decel_eff).
inline double stopping_distance(double x_dot_0, double mu, const VehicleParams& params) {
  if (!(x_dot_0 >= 0.0)) throw std::invalid_argument("stopping_distance: speed must be >= 0");
  return x_dot_0 * x_dot_0 / (2.0 * mu * kGravity * params.decel_eff);
}

inline constexpr double kNoThreatTtc = std::numeric_limits<double>::infinity();

// Time to collision; an opening or static gap is no threat.
inline double ttc(double rel_dist, double rel_speed) {
  if (!(rel_dist >= 0.0)) throw std::invalid_argument("ttc: rel_dist must be >= 0");
  if (rel_speed <= 0.0) return kNoThreatTtc;
  return rel_dist / rel_speed;
}

struct ClearingResult {
  double x_clearance = 0.0;  // m, CG start to the grazing corner
  double t_c = 0.0;          // s
};

// Corner-clearance geometry for a left lane change around a square object:
// the ego front-right corner grazes the object's rear-left corner. The
// required CG lateral offset at heading psi is
//   y_clearance = wid_obj/2 - (d_f sin(psi) - wid_ego/2 cos(psi))
// and t_c is the first time the trajectory's y reaches it. Evaluated on the
// piecewise-linear node data of the maneuver segment.
inline ClearingResult min_clearing_distance(const FullTrajectory& traj, double wid_obj,
                                            const VehicleParams& params) {
  if (!(wid_obj > 0.0)) throw std::invalid_argument("min_clearing_distance: wid_obj must be > 0");
  const Transcription& tr = traj.transcription;
  if (tr.states.size() < 2)
    throw std::invalid_argument("min_clearing_distance: trajectory has no maneuver segment");

  auto y_clear = [&](double psi) {
    return 0.5 * wid_obj - (params.d_f * std::sin(psi) - 0.5 * params.wid_ego * std::cos(psi));
  };
  auto gap_at = [&](double x_frac, std::size_t i) {
    // linear blend between nodes i and i+1
    double y = tr.states[i][2] + x_frac * (tr.states[i + 1][2] - tr.states[i][2]);
    double psi = tr.states[i][4] + x_frac * (tr.states[i + 1][4] - tr.states[i][4]);
    return y - y_clear(psi);
  };

  const std::size_t n = tr.states.size();
  const double h = tr.horizon / static_cast<double>(n - 1);
  std::size_t seg = n;  // first segment with a sign change
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (gap_at(0.0, i) <= 0.0 && gap_at(1.0, i) > 0.0) {
      seg = i;
      break;
    }
  }
  if (seg == n)
    throw std::runtime_error("min_clearing_distance: trajectory never reaches a clearing configuration");

  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (gap_at(mid, seg) <= 0.0) lo = mid; else hi = mid;
  }
  double f = 0.5 * (lo + hi);
  double x = tr.states[seg][0] + f * (tr.states[seg + 1][0] - tr.states[seg][0]);
  double psi = tr.states[seg][4] + f * (tr.states[seg + 1][4] - tr.states[seg][4]);

  ClearingResult res;
  res.t_c = h * (static_cast<double>(seg) + f);
  res.x_clearance = x + params.d_f * std::cos(psi) + 0.5 * params.wid_ego * std::sin(psi);
  return res;
}

enum class Sector : int { A = 0, B, C, D, E, F, G };

inline char sector_char(Sector s) { return "ABCDEFG"[static_cast<int>(s)]; }

// Caution ordering used by the buffer-dominance property: higher rank means
// a more cautious (more endangered) classification. C and D share a rank.
inline int sector_caution_rank(Sector s) {
  switch (s) {
    case Sector::G: return 0;
    case Sector::E: return 1;
    case Sector::C: return 2;
    case Sector::D: return 2;
    case Sector::F: return 3;
    case Sector::B: return 3;
    case Sector::A: return 4;
  }
  return -1;
}

// TTC threshold per friction page, linear in mu between the design anchors.
inline double ttc_threshold_for_mu(double mu) {
  struct Anchor { double mu, ttc; };
  static constexpr Anchor anchors[] = {{0.1, 20.0}, {0.3, 5.0}, {0.7, 2.5}, {1.0, 2.5}};
  if (mu <= anchors[0].mu) return anchors[0].ttc;
  for (int i = 0; i < 3; ++i) {
    if (mu <= anchors[i + 1].mu) {
      double w = (mu - anchors[i].mu) / (anchors[i + 1].mu - anchors[i].mu);
      return anchors[i].ttc + w * (anchors[i + 1].ttc - anchors[i].ttc);
    }
  }
  return anchors[3].ttc;
}

// Per-mu decision boundaries over relative speed. Distances are front-bumper
// to nearest-object-face gaps: stopping curves compare directly (contact
// means bumper at face), clearing curves are the corner-clearance values
// shifted by len_front into the same coordinate.
struct PhaseDiagram {
  double mu = 1.0;
  double buffer_factor = 1.15;
  double ttc_threshold = 2.5;  // s
  double decel_eff = 0.9;
  double len_front = 2.0;
  double steering_floor = 12.0;  // m/s, no steering boundaries below

  std::vector<double> speeds;          // m/s, ascending
  std::vector<double> stop;            // m
  std::vector<double> stop_buffered;   // m
  std::vector<double> clear_subopt;    // m, +inf where no steering maneuver exists
  std::vector<double> clear_const;     // m
  std::vector<double> clear_buffered;  // m, buffered suboptimal curve

  double stop_at(double v) const {
    return v * v / (2.0 * mu * kGravity * decel_eff);
  }

  // Clearing curves interpolated over the stored speed grid; +inf below the
  // steering floor, linear extension above the grid.
  double clear_at(double v, bool buffered) const {
    const std::vector<double>& c = buffered ? clear_buffered : clear_subopt;
    if (speeds.empty() || v < steering_floor) return std::numeric_limits<double>::infinity();
    if (v <= speeds.front()) return c.front();
    std::size_t n = speeds.size();
    if (v >= speeds.back()) {
      if (n < 2) return c.back();
      double slope = (c[n - 1] - c[n - 2]) / (speeds[n - 1] - speeds[n - 2]);
      return c[n - 1] + slope * (v - speeds[n - 1]);
    }
    std::size_t i = 0;
    while (i + 1 < n && speeds[i + 1] < v) ++i;
    double w = (v - speeds[i]) / (speeds[i + 1] - speeds[i]);
    double a = c[i], b = c[i + 1];
    if (std::isinf(a) || std::isinf(b)) return std::numeric_limits<double>::infinity();
    return a + w * (b - a);
  }
};

// First-match sector ladder. The steering trigger is the buffered suboptimal
// clearing boundary; braking bands split at the raw and buffered stopping
// curves; B is the wedge where the steering trigger is crossed while a full
// stop is still available.
inline Sector classify_phase(const PhaseDiagram& d, double rel_dist, double rel_speed) {
  if (!(rel_dist >= 0.0)) throw std::invalid_argument("classify_phase: rel_dist must be >= 0");
  if (rel_speed <= 0.0) return Sector::G;
  if (rel_dist >= d.ttc_threshold * rel_speed) return Sector::G;

  double s = d.stop_at(rel_speed);
  double sb = s * d.buffer_factor;
  double c = d.clear_at(rel_speed, false);
  double cb = d.clear_at(rel_speed, true);

  if (rel_dist < s && rel_dist < c) return Sector::A;
  if (rel_dist >= sb) return Sector::E;
  if (rel_dist >= c && rel_dist < cb)
    return rel_dist >= s ? Sector::B : Sector::F;
  if (rel_dist >= s) return Sector::D;
  return Sector::C;
}

struct BufferPolicy {
  double factor = 1.15;
};

// Assemble the per-mu diagram from the trajectory grid. wid_obj is the
// design obstacle width used for the clearing boundaries.
inline PhaseDiagram build_phase_diagram(const GridResult& grid, double mu,
                                        const VehicleParams& params,
                                        const BufferPolicy& buffers,
                                        double wid_obj = 2.0) {
  PhaseDiagram d;
  d.mu = mu;
  d.buffer_factor = buffers.factor;
  d.ttc_threshold = ttc_threshold_for_mu(mu);
  d.decel_eff = params.decel_eff;
  d.len_front = params.len_front;

  const double inf = std::numeric_limits<double>::infinity();
  for (const GridPoint& pt : grid) {
    if (std::abs(pt.mu - mu) > 1e-12) continue;
    d.speeds.push_back(pt.speed);
    d.stop.push_back(stopping_distance(pt.speed, mu, params));
    d.stop_buffered.push_back(d.stop.back() * buffers.factor);
    if (pt.status == OcpStatus::Ok || pt.status == OcpStatus::IterLimit) {
      double sub = min_clearing_distance(pt.suboptimal, wid_obj, params).x_clearance;
      double con = min_clearing_distance(pt.constant_speed, wid_obj, params).x_clearance;
      d.clear_subopt.push_back(std::max(0.0, sub - params.len_front));
      d.clear_const.push_back(std::max(0.0, con - params.len_front));
      d.clear_buffered.push_back(d.clear_subopt.back() * buffers.factor);
    } else {
      d.clear_subopt.push_back(inf);
      d.clear_const.push_back(inf);
      d.clear_buffered.push_back(inf);
    }
  }
  if (d.speeds.empty())
    throw std::runtime_error("build_phase_diagram: grid has no points for this mu");
  for (std::size_t i = 0; i + 1 < d.speeds.size(); ++i) {
    if (!(d.speeds[i + 1] > d.speeds[i]))
      throw std::runtime_error("build_phase_diagram: speed grid not ascending");
    bool finite = !std::isinf(d.clear_subopt[i]) && !std::isinf(d.clear_subopt[i + 1]);
    if (!(d.stop[i + 1] > d.stop[i]) || (finite && !(d.clear_subopt[i + 1] > d.clear_subopt[i])))
      throw std::runtime_error("build_phase_diagram: non-monotone boundary curve, upstream grid defect");
  }
  d.steering_floor = d.speeds.front();
  return d;
}

inline std::string serialize_phase_diagram(const PhaseDiagram& d) {
  std::ostringstream ss;
  ss << "EOAM_PHASE v1\n";
  ss << "units speed=m/s distance=m ttc=s\n";
  ss << "mu " << fmt_double(d.mu) << "\n";
  ss << "buffer_factor " << fmt_double(d.buffer_factor) << "\n";
  ss << "ttc_threshold " << fmt_double(d.ttc_threshold) << "\n";
  ss << "decel_eff " << fmt_double(d.decel_eff) << "\n";
  ss << "len_front " << fmt_double(d.len_front) << "\n";
  ss << "steering_floor " << fmt_double(d.steering_floor) << "\n";
  auto row = [&ss](const char* name, const std::vector<double>& v) {
    ss << name << " " << v.size();
    for (double x : v) ss << " " << fmt_double(x);
    ss << "\n";
  };
  row("speeds", d.speeds);
  row("stop", d.stop);
  row("stop_buffered", d.stop_buffered);
  row("clear_subopt", d.clear_subopt);
  row("clear_const", d.clear_const);
  row("clear_buffered", d.clear_buffered);
  return ss.str();
}

// Token-based double parsing so "inf" round-trips (stream extraction of
// doubles rejects it).
inline double parse_double_token(std::istream& ss) {
  std::string tok;
  if (!(ss >> tok)) throw std::runtime_error("truncated numeric data");
  if (tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(tok);
}

inline PhaseDiagram parse_phase_diagram(const std::string& text) {
  std::istringstream ss(text);
  std::string magic, version;
  ss >> magic >> version;
  if (magic != "EOAM_PHASE" || version != "v1")
    throw std::runtime_error("phase diagram: bad header");
  PhaseDiagram d;
  std::string key;
  auto read_row = [&ss](std::vector<double>& v) {
    std::size_t n;
    ss >> n;
    v.resize(n);
    for (auto& x : v) x = parse_double_token(ss);
  };
  while (ss >> key) {
    if (key == "units") { std::string rest; std::getline(ss, rest); }
    else if (key == "mu") d.mu = parse_double_token(ss);
    else if (key == "buffer_factor") d.buffer_factor = parse_double_token(ss);
    else if (key == "ttc_threshold") d.ttc_threshold = parse_double_token(ss);
    else if (key == "decel_eff") d.decel_eff = parse_double_token(ss);
    else if (key == "len_front") d.len_front = parse_double_token(ss);
    else if (key == "steering_floor") d.steering_floor = parse_double_token(ss);
    else if (key == "speeds") read_row(d.speeds);
    else if (key == "stop") read_row(d.stop);
    else if (key == "stop_buffered") read_row(d.stop_buffered);
    else if (key == "clear_subopt") read_row(d.clear_subopt);
    else if (key == "clear_const") read_row(d.clear_const);
    else if (key == "clear_buffered") read_row(d.clear_buffered);
    else throw std::runtime_error("phase diagram: unknown key '" + key + "'");
  }
  if (d.speeds.empty()) throw std::runtime_error("phase diagram: no curves");
  return d;
}

// Curve export for plotting, one row per grid speed.
inline std::string phase_diagram_csv(const PhaseDiagram& d) {
  std::ostringstream ss;
  ss << "speed_ms,stop_m,stop_buffered_m,clear_subopt_m,clear_const_m,clear_buffered_m,ttc_boundary_m\n";
  for (std::size_t i = 0; i < d.speeds.size(); ++i) {
    ss << fmt_double_short(d.speeds[i]) << ',' << fmt_double_short(d.stop[i]) << ','
       << fmt_double_short(d.stop_buffered[i]) << ',' << fmt_double_short(d.clear_subopt[i]) << ','
       << fmt_double_short(d.clear_const[i]) << ',' << fmt_double_short(d.clear_buffered[i]) << ','
       << fmt_double_short(d.ttc_threshold * d.speeds[i]) << "\n";
  }
  return ss.str();
}

}  // namespace eoam
