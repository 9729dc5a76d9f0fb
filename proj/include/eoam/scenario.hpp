#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "eoam/config.hpp"
#include "eoam/io.hpp"
#include "eoam/lookup_table.hpp"
#include "eoam/phase_diagram.hpp"
#include "eoam/runtime.hpp"
#include "eoam/units.hpp"
#include "eoam/vehicle.hpp"

namespace eoam {

// World construction, idealized range/FOV sensing, closed-loop execution,
// collision detection and outcome classification on a straight two-lane
// highway. The ego starts centered in the right lane; the adjacent lane
// carries opposing traffic.

struct SensorSpec {
  double range = 150.0;                    // m
  double half_angle = deg_to_rad(20.0);    // rad
};

// Time constant of the longitudinal-acceleration measurement filter.
inline constexpr double kAccelMeasTau = 0.02;  // s

struct ScenarioConfig {
  double ego_speed = kmh_to_ms(120.0);  // m/s
  double mu = 1.0;
  double lane_width = 3.5;      // m
  double aro_init_dist = 120.0; // m ahead of the ego CG
  double aro_init_speed = kmh_to_ms(60.0);  // m/s
  double aro_brake_start = 1.0; // s
  double aro_decel = 6.0;       // m/s^2 to rest
  double aro_length = 4.8, aro_width = 2.0;
  bool oncoming_enabled = false;
  double oncoming_init_dist = 300.0;  // m
  double oncoming_speed = 20.0;       // m/s
  double oncoming_length = 4.8, oncoming_width = 2.0;
  bool parked_cars_enabled = true;
  double parked_length = 4.5, parked_width = 1.9;
  SensorSpec sensor;
  double dt = 1e-3;   // s
  double t_end = 40.0;  // s
  unsigned seed = 0;  // reserved; the loop itself is deterministic
  bool eoam_enabled = true;

  void validate() const {
    if (!(aro_init_dist > 0.0)) throw std::invalid_argument("scenario: aro_init_dist must be > 0");
    if (!(lane_width > 0.0)) throw std::invalid_argument("scenario: lane_width must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("scenario: dt must be > 0");
    if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("scenario: mu must be in (0, 1]");
  }

  static ScenarioConfig from_config(const Config& cfg) {
    ScenarioConfig s;
    s.ego_speed = kmh_to_ms(cfg.get_double("ego_speed_kmh"));
    s.mu = cfg.get_double("mu");
    s.lane_width = cfg.get_double("lane_width_m", 3.5);
    s.aro_init_dist = cfg.get_double("aro_init_dist_m", 120.0);
    s.aro_init_speed = kmh_to_ms(cfg.get_double("aro_init_speed_kmh", 60.0));
    s.aro_brake_start = cfg.get_double("aro_brake_start_s", 1.0);
    s.aro_decel = cfg.get_double("aro_decel_ms2", 6.0);
    s.oncoming_enabled = cfg.get_bool("oncoming_enabled", false);
    s.oncoming_init_dist = cfg.get_double("oncoming_init_dist_m", 300.0);
    s.oncoming_speed = cfg.get_double("oncoming_speed_ms", 20.0);
    s.parked_cars_enabled = cfg.get_bool("parked_cars_enabled", true);
    s.sensor.range = cfg.get_double("sensor_range_m", 150.0);
    s.sensor.half_angle = deg_to_rad(cfg.get_double("sensor_half_angle_deg", 20.0));
    s.dt = cfg.get_double("dt_s", 1e-3);
    s.t_end = cfg.get_double("t_end_s", 40.0);
    s.seed = static_cast<unsigned>(cfg.get_double("seed", 0));
    s.eoam_enabled = cfg.get_bool("eoam_enabled", true);
    s.validate();
    return s;
  }
};

enum class ObjectRole { InLaneAro, OncomingAro, Parked };

struct WorldObject {
  ObjectRole role = ObjectRole::InLaneAro;
  double x = 0.0, y = 0.0, heading = 0.0;
  double length = 4.8, width = 2.0;
  double speed = 0.0;  // m/s along heading
};

// In-lane object speed schedule: constant, then a constant-deceleration
// emergency stop, then rest.
inline double aro_speed_profile(double t, const ScenarioConfig& cfg) {
  if (t < 0.0) throw std::invalid_argument("aro_speed_profile: t must be >= 0");
  if (t <= cfg.aro_brake_start) return cfg.aro_init_speed;
  double v = cfg.aro_init_speed - cfg.aro_decel * (t - cfg.aro_brake_start);
  return v > 0.0 ? v : 0.0;
}

struct Detection {
  ObjectRole role = ObjectRole::InLaneAro;
  double rel_dist = 0.0;   // m, ego front bumper to nearest object face, along the lane axis
  double rel_speed = 0.0;  // m/s, closing rate (positive = closing)
  bool in_travel_lane = false;  // within the ego's original lane
  bool oncoming = false;
  bool out_of_lane = false;  // laterally outside the travel lanes
};

// Idealized sensing: every object inside range and the FOV cone is reported
// with its lane classification. Objects beyond the travel lanes (parked cars)
// are flagged out-of-lane and never feed the decision module.
inline std::vector<Detection> sensor_scan(const VehicleState& ego,
                                          const std::vector<WorldObject>& objects,
                                          const SensorSpec& sensor, double lane_width,
                                          double y_origin, const VehicleParams& params) {
  std::vector<Detection> out;
  for (const WorldObject& obj : objects) {
    double rx = obj.x - ego.x;
    double ry = obj.y - ego.y;
    double range = std::hypot(rx, ry);
    if (range > sensor.range) continue;
    double bearing = wrap_angle(std::atan2(ry, rx) - ego.psi);
    if (std::abs(bearing) > sensor.half_angle) continue;

    Detection d;
    d.role = obj.role;
    d.rel_dist = (obj.x - 0.5 * obj.length) - (ego.x + params.len_front);
    double ego_vx_global = ego.v_x * std::cos(ego.psi) - ego.v_y * std::sin(ego.psi);
    double obj_vx_global = obj.speed * std::cos(obj.heading);
    d.rel_speed = ego_vx_global - obj_vx_global;
    double lane_lo = y_origin - 0.5 * lane_width;
    double lane_hi = y_origin + 0.5 * lane_width;
    double adj_hi = y_origin + 1.5 * lane_width;
    d.in_travel_lane = obj.y >= lane_lo && obj.y <= lane_hi;
    bool in_adjacent = obj.y > lane_hi && obj.y <= adj_hi;
    d.out_of_lane = !d.in_travel_lane && !in_adjacent;
    d.oncoming = !d.out_of_lane && std::abs(wrap_angle(obj.heading - kPi)) < 0.5 * kPi &&
                 d.rel_speed > 0.0;
    out.push_back(d);
  }
  return out;
}

struct Contact {
  double time = 0.0;
  ObjectRole role = ObjectRole::InLaneAro;
  double normal_angle = 0.0;   // rad, global, pointing from ego toward the object
  double closing_speed = 0.0;  // m/s at contact
  bool frontal = false;        // normal within 45 deg of the ego heading
};

namespace sat_detail {

struct Obb {
  double cx, cy, heading, half_len, half_wid;
};

// Separating axis test for two oriented rectangles; reports the minimum
// translation axis on overlap.
inline bool obb_overlap(const Obb& a, const Obb& b, double& mtv_angle, double& mtv_depth) {
  const Obb* boxes[2] = {&a, &b};
  double best_depth = std::numeric_limits<double>::infinity();
  double best_angle = 0.0;
  for (int bi = 0; bi < 2; ++bi) {
    double h = boxes[bi]->heading;
    const double axes[2] = {h, h + 0.5 * kPi};
    for (double axis : axes) {
      double ux = std::cos(axis), uy = std::sin(axis);
      auto project = [&](const Obb& o, double& lo, double& hi) {
        double c = o.cx * ux + o.cy * uy;
        double ex = std::abs((std::cos(o.heading) * ux + std::sin(o.heading) * uy)) * o.half_len +
                    std::abs((-std::sin(o.heading) * ux + std::cos(o.heading) * uy)) * o.half_wid;
        lo = c - ex;
        hi = c + ex;
      };
      double alo, ahi, blo, bhi;
      project(a, alo, ahi);
      project(b, blo, bhi);
      double overlap = std::min(ahi, bhi) - std::max(alo, blo);
      if (overlap < -1e-9) return false;  // separated; grazing contact tolerated to roundoff
      if (overlap < best_depth) {
        best_depth = overlap;
        // orient the axis from a toward b
        double dc = (b.cx - a.cx) * ux + (b.cy - a.cy) * uy;
        best_angle = dc >= 0.0 ? axis : axis + kPi;
      }
    }
  }
  mtv_angle = wrap_angle(best_angle);
  mtv_depth = best_depth;
  return true;
}

}  // namespace sat_detail

inline std::optional<Contact> collision_check(const VehicleState& ego,
                                              const VehicleParams& params,
                                              const WorldObject& obj, double t) {
  // ego rectangle: front bumper len_front ahead of the CG, rear bumper a
  // little behind the rear axle
  double half_len = 0.5 * (params.len_front + params.d_r + 0.8);
  double mid_offset = params.len_front - half_len;
  sat_detail::Obb ego_box;
  ego_box.cx = ego.x + mid_offset * std::cos(ego.psi);
  ego_box.cy = ego.y + mid_offset * std::sin(ego.psi);
  ego_box.heading = ego.psi;
  ego_box.half_len = half_len;
  ego_box.half_wid = 0.5 * params.wid_ego;

  sat_detail::Obb obj_box{obj.x, obj.y, obj.heading, 0.5 * obj.length, 0.5 * obj.width};

  double angle, depth;
  if (!sat_detail::obb_overlap(ego_box, obj_box, angle, depth)) return std::nullopt;
  Contact c;
  c.time = t;
  c.role = obj.role;
  c.normal_angle = angle;
  double rel = std::abs(wrap_angle(angle - ego.psi));
  c.frontal = rel <= deg_to_rad(45.0);
  return c;
}

enum class Outcome { Green, Yellow, Orange, Red };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Green: return "green";
    case Outcome::Yellow: return "yellow";
    case Outcome::Orange: return "orange";
    case Outcome::Red: return "red";
  }
  return "?";
}

struct TickRecord {
  double t = 0.0;
  int mode = 0;
  bool fcw = false;
  char sector = 'G';
  double delta_cmd = 0.0, f_t_cmd = 0.0;
  double x = 0.0, y = 0.0, v_x = 0.0, psi = 0.0;
  double v_target = 0.0, ax_target = 0.0, ax_actual = 0.0;
  double y_target = 0.0, e_offset = 0.0, e_lookahead = 0.0;
  double dx = 0.0;
  double rel_dist = 0.0, rel_speed = 0.0;
  bool in_lane_seen = false;
  double a_x_body = 0.0, a_y_body = 0.0;  // g-g samples
};

struct PhaseTracePoint {
  double t = 0.0, rel_dist = 0.0, rel_speed = 0.0;
  char sector = 'G';
};

struct ModeChange {
  double t = 0.0;
  EoamMode mode = EoamMode::Normal;
  double ego_y = 0.0;  // lateral position at the transition
};

struct ScenarioResult {
  Outcome outcome = Outcome::Green;
  std::optional<Contact> contact;
  double end_time = 0.0;
  bool maneuver_triggered = false;  // any EOAM intervention
  bool steer_triggered = false;     // entered mode 2 or 4
  bool limit_braking_before_pnr = false;
  bool return_completed = false;
  bool handback = false;
  double min_gap = std::numeric_limits<double>::infinity();
  std::vector<TickRecord> series;       // decimated
  std::vector<PhaseTracePoint> phase_trace;
  std::vector<ModeChange> mode_trace;
  double mean_tick_seconds = 0.0;  // online part only; not serialized
  VehicleState final_state;
};

inline Outcome classify_outcome(const ScenarioResult& run) {
  if (!run.contact) return Outcome::Green;
  const Contact& c = *run.contact;
  if (!c.frontal) return Outcome::Orange;
  if (c.role == ObjectRole::OncomingAro) return Outcome::Red;
  return Outcome::Yellow;
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg, const VehicleParams& params,
                                   const LookupTable3D& table,
                                   const std::vector<PhaseDiagram>& diagrams,
                                   std::size_t record_every = 10) {
  cfg.validate();
  params.validate();

  const PhaseDiagram* diagram = nullptr;
  double best = 1e9;
  for (const auto& d : diagrams) {
    double gap = std::abs(d.mu - cfg.mu);
    if (gap < best) {
      best = gap;
      diagram = &d;
    }
  }
  if (!diagram || best > 0.25)
    throw std::runtime_error("run_scenario: no phase diagram page near mu=" + fmt_double_short(cfg.mu));

  // world
  std::vector<WorldObject> objects;
  WorldObject aro;
  aro.role = ObjectRole::InLaneAro;
  aro.x = cfg.aro_init_dist;
  aro.y = 0.0;
  aro.heading = 0.0;
  aro.length = cfg.aro_length;
  aro.width = cfg.aro_width;
  aro.speed = aro_speed_profile(0.0, cfg);
  objects.push_back(aro);
  if (cfg.oncoming_enabled) {
    WorldObject onc;
    onc.role = ObjectRole::OncomingAro;
    onc.x = cfg.oncoming_init_dist;
    onc.y = cfg.lane_width;
    onc.heading = kPi;
    onc.length = cfg.oncoming_length;
    onc.width = cfg.oncoming_width;
    onc.speed = cfg.oncoming_speed;
    objects.push_back(onc);
  }
  if (cfg.parked_cars_enabled) {
    double y_parked = -0.5 * cfg.lane_width - 1.5 - 0.5 * cfg.parked_width;
    for (double px : {60.0, 130.0, 200.0}) {
      WorldObject p;
      p.role = ObjectRole::Parked;
      p.x = px;
      p.y = y_parked;
      p.heading = 0.0;
      p.length = cfg.parked_length;
      p.width = cfg.parked_width;
      p.speed = 0.0;
      objects.push_back(p);
    }
  }

  VehicleState ego;
  ego.v_x = cfg.ego_speed;
  EoamContext ctx;
  ctx.mu_est = cfg.mu;
  ctx.y_f = cfg.lane_width;
  RuntimeGains gains;
  Pid accel_pid{gains.accel_kp, gains.accel_ki, gains.accel_kd};
  Pid speed_pid{gains.speed_kp, gains.speed_ki, 0.0};

  ScenarioResult res;
  res.mode_trace.push_back({0.0, EoamMode::Normal, 0.0});

  double t = 0.0;
  double prev_speed = ego.speed();
  double ax_actual = 0.0;
  std::size_t tick = 0;
  double handback_grace_until = 0.0;
  double v_hold = cfg.ego_speed;  // speed setpoint; reduced after a handback
  std::chrono::nanoseconds online_ns{0};
  std::size_t online_ticks = 0;

  const int n_steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
  for (int step_i = 0; step_i < n_steps; ++step_i, ++tick) {
    auto t0 = std::chrono::steady_clock::now();

    // ---- online part: scan -> classify -> transition -> control ----
    std::vector<Detection> dets =
        sensor_scan(ego, objects, cfg.sensor, cfg.lane_width, ctx.y_origin, params);
    PhaseInput in;
    for (const Detection& d : dets) {
      if (d.out_of_lane) continue;
      if (d.oncoming) in.oncoming_detected = true;
      if (d.in_travel_lane && !d.oncoming && d.rel_dist >= 0.0) {
        if (!in.in_lane_valid || d.rel_dist < in.rel_dist) {
          in.in_lane_valid = true;
          in.rel_dist = d.rel_dist;
          in.rel_speed = d.rel_speed;
        }
      }
    }

    EoamMode prev_mode = ctx.mode;
    if (cfg.eoam_enabled) update_mode(ctx, in, ego, *diagram);
    if (ctx.mode != prev_mode) {
      res.mode_trace.push_back({t, ctx.mode, ego.y});
      if (ctx.mode != EoamMode::Normal) res.maneuver_triggered = true;
      if (ctx.mode == EoamMode::UpdateSteerBrake || ctx.mode == EoamMode::OncomingSteerBrake)
        res.steer_triggered = true;
      if (ctx.mode == EoamMode::Return) res.return_completed = false;
      if (prev_mode == EoamMode::Return && ctx.mode == EoamMode::Normal)
        res.return_completed = true;
      if ((ctx.mode == EoamMode::UpdateBrake || ctx.mode == EoamMode::OncomingBrake) &&
          std::abs(ego.y - ctx.y_origin) < ctx.y_pnr())
        res.limit_braking_before_pnr = true;
      if (ctx.mode == EoamMode::UpdateSteerBrake || ctx.mode == EoamMode::Return) {
        accel_pid.reset();
      }
    }

    // track maneuver progress
    if (ctx.mode == EoamMode::UpdateSteerBrake || ctx.mode == EoamMode::OncomingSteerBrake ||
        ctx.mode == EoamMode::Return) {
      ctx.maneuver_timer += cfg.dt;
      ctx.dx = std::max(0.0, ego.x - ctx.x_at_maneuver_start);
    }
    if (ctx.mode != EoamMode::Normal && ego.v_x < 0.05)
      ctx.standstill_timer += cfg.dt;
    else
      ctx.standstill_timer = 0.0;

    ControlInput u;
    ManeuverReference ref = maneuver_reference(ctx, table);
    LateralErrors errs = lateral_errors(ego, ctx, table, gains);
    u.delta = steering_control(ctx, ego, table, params, gains, cfg.dt);
    switch (ctx.mode) {
      case EoamMode::Normal:
        u.f_t = speed_control(speed_pid, v_hold, ego.v_x, cfg.dt, cfg.mu, params);
        break;
      case EoamMode::UpdateBrake:
      case EoamMode::OncomingBrake:
        u.f_t = limit_brake_force(cfg.mu, params);
        break;
      case EoamMode::UpdateSteerBrake:
      case EoamMode::OncomingSteerBrake:
      case EoamMode::Return:
        u.f_t = accel_control(accel_pid, ref.ax_target, ax_actual, cfg.dt, cfg.mu, params);
        break;
    }

    auto t1 = std::chrono::steady_clock::now();
    online_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0);
    ++online_ticks;

    // ---- record ----
    if (tick % record_every == 0) {
      TickRecord r;
      r.t = t;
      r.mode = static_cast<int>(ctx.mode);
      r.fcw = ctx.fcw_active;
      r.sector = in.in_lane_valid ? sector_char(classify_phase(*diagram, in.rel_dist, in.rel_speed))
                                  : sector_char(ctx.last_sector);
      r.delta_cmd = u.delta;
      r.f_t_cmd = u.f_t;
      r.x = ego.x;
      r.y = ego.y;
      r.v_x = ego.v_x;
      r.psi = ego.psi;
      r.v_target = v_hold;
      r.ax_target = ref.ax_target;
      r.ax_actual = ax_actual;
      r.y_target = ref.y_target;
      r.e_offset = errs.offset;
      r.e_lookahead = errs.lookahead;
      r.dx = ctx.dx;
      r.rel_dist = in.rel_dist;
      r.rel_speed = in.rel_speed;
      r.in_lane_seen = in.in_lane_valid;
      res.series.push_back(r);
    }
    // the trace simply stops when the in-lane object leaves the field of view
    if (in.in_lane_valid) {
      if (tick % record_every == 0)
        res.phase_trace.push_back(
            {t, in.rel_dist, in.rel_speed,
             sector_char(classify_phase(*diagram, in.rel_dist, in.rel_speed))});
      res.min_gap = std::min(res.min_gap, in.rel_dist);
    }

    // ---- plant and world ----
    VehicleState next = plant_step(ego, u, cfg.mu, cfg.dt, params);
    // measured longitudinal acceleration: speed-change quotient through a
    // first-order sensor filter; the raw one-tick quotient responds
    // algebraically to the force command and closes a chattering loop with
    // the PID
    double new_speed = next.speed();
    double ax_raw = (new_speed - prev_speed) / cfg.dt;
    prev_speed = new_speed;
    ax_actual += (ax_raw - ax_actual) * (cfg.dt / (kAccelMeasTau + cfg.dt));
    // g-g sample from the body-frame force balance
    double a_y_body = 0.0;
    double a_x_body = u.f_t / params.m;
    if (ego.v_x > kVxFloor) {
      TireForces tf = tire_forces(ego, u.delta, cfg.mu, params);
      a_y_body = (tf.rear + tf.front * std::cos(u.delta)) / params.m;
      a_x_body = (u.f_t - tf.front * std::sin(u.delta)) / params.m;
    }
    if (tick % record_every == 0 && !res.series.empty()) {
      res.series.back().ax_actual = ax_actual;
      res.series.back().a_x_body = a_x_body;
      res.series.back().a_y_body = a_y_body;
    }
    ego = next;

    t += cfg.dt;
    for (WorldObject& obj : objects) {
      if (obj.role == ObjectRole::InLaneAro) {
        obj.speed = aro_speed_profile(t, cfg);
        obj.x += obj.speed * cfg.dt;
      } else if (obj.role == ObjectRole::OncomingAro) {
        obj.x -= obj.speed * cfg.dt;
      }
    }

    // ---- collision / termination ----
    bool done = false;
    for (const WorldObject& obj : objects) {
      if (std::abs(obj.x - ego.x) > 30.0) continue;  // broad phase
      auto contact = collision_check(ego, params, obj, t);
      if (contact) {
        double ego_vx_global = ego.v_x * std::cos(ego.psi);
        double obj_vx_global = obj.speed * std::cos(obj.heading);
        contact->closing_speed = ego_vx_global - obj_vx_global;
        res.contact = contact;
        done = true;
        break;
      }
    }
    if (ctx.handback_pending && !res.handback) {
      res.handback = true;
      handback_grace_until = t + 2.0;  // let the world play out briefly
      v_hold = ego.v_x;
      ctx.handback_pending = false;
    }
    if (res.handback && t >= handback_grace_until) done = true;
    if (done) break;
  }

  res.end_time = t;
  res.final_state = ego;
  if (online_ticks > 0)
    res.mean_tick_seconds = static_cast<double>(online_ns.count()) * 1e-9 /
                            static_cast<double>(online_ticks);
  res.outcome = classify_outcome(res);
  return res;
}

// ---- sweep ----

struct SweepCell {
  double ego_speed_kmh = 0.0;
  double mu = 1.0;
  double oncoming_dist = 0.0;  // 0 = no oncoming
  Outcome outcome = Outcome::Green;
  bool steer_triggered = false;
  bool return_completed = false;
  bool handback = false;
  bool limit_braking_before_pnr = false;
  bool oncoming_brake_entered = false;
  double final_speed = 0.0;  // m/s
  std::string error;
};

struct SweepSpec {
  std::vector<double> speeds_kmh{165.0, 120.0, 90.0, 55.0};
  std::vector<double> mus{1.0, 0.7, 0.3, 0.1};
  std::vector<double> oncoming_dists{0.0, 500.0, 400.0, 300.0};
  int workers = 0;
};

inline std::vector<SweepCell> sweep_matrix(const SweepSpec& spec, const ScenarioConfig& base,
                                           const VehicleParams& params,
                                           const LookupTable3D& table,
                                           const std::vector<PhaseDiagram>& diagrams) {
  std::size_t n = spec.speeds_kmh.size() * spec.mus.size() * spec.oncoming_dists.size();
  std::vector<SweepCell> cells(n);
  std::atomic<std::size_t> next{0};
  unsigned workers = spec.workers > 0 ? static_cast<unsigned>(spec.workers)
                                      : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

  auto work = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      std::size_t per_traffic = spec.speeds_kmh.size() * spec.mus.size();
      double dist = spec.oncoming_dists[i / per_traffic];
      std::size_t j = i % per_traffic;
      double speed_kmh = spec.speeds_kmh[j / spec.mus.size()];
      double mu = spec.mus[j % spec.mus.size()];

      SweepCell& cell = cells[i];
      cell.ego_speed_kmh = speed_kmh;
      cell.mu = mu;
      cell.oncoming_dist = dist;
      try {
        ScenarioConfig cfg = base;
        cfg.ego_speed = kmh_to_ms(speed_kmh);
        cfg.mu = mu;
        cfg.oncoming_enabled = dist > 0.0;
        cfg.oncoming_init_dist = dist;
        ScenarioResult r = run_scenario(cfg, params, table, diagrams, 50);
        cell.outcome = r.outcome;
        cell.steer_triggered = r.steer_triggered;
        cell.return_completed = r.return_completed;
        cell.handback = r.handback;
        cell.limit_braking_before_pnr = r.limit_braking_before_pnr;
        cell.final_speed = r.final_state.v_x;
        for (const ModeChange& m : r.mode_trace)
          if (m.mode == EoamMode::OncomingBrake) cell.oncoming_brake_entered = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return cells;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells,
                             const std::string& provenance = "") {
  CsvWriter csv({"oncoming_dist_m", "ego_speed_kmh", "mu", "outcome", "steer_triggered",
                 "return_completed", "handback", "limit_braking_before_pnr", "error"});
  if (!provenance.empty()) csv.comment("manifest " + provenance);
  for (const SweepCell& c : cells) {
    csv.row({fmt_double_short(c.oncoming_dist), fmt_double_short(c.ego_speed_kmh),
             fmt_double_short(c.mu), to_string(c.outcome), c.steer_triggered ? "1" : "0",
             c.return_completed ? "1" : "0", c.handback ? "1" : "0",
             c.limit_braking_before_pnr ? "1" : "0", c.error});
  }
  return csv.str();
}

// Text grid mirroring the experiment matrix layout, one row per (traffic,
// speed), one column per mu.
inline std::string sweep_table_text(const SweepSpec& spec, const std::vector<SweepCell>& cells,
                                    const std::string& provenance = "") {
  std::ostringstream ss;
  if (!provenance.empty()) ss << "# manifest " << provenance << "\n";
  ss << "traffic          speed   ";
  for (double mu : spec.mus) ss << "mu=" << fmt_double_short(mu) << "   ";
  ss << "\n";
  std::size_t i = 0;
  for (double dist : spec.oncoming_dists) {
    for (double v : spec.speeds_kmh) {
      char label[32];
      if (dist > 0.0)
        std::snprintf(label, sizeof(label), "oncoming %3.0fm", dist);
      else
        std::snprintf(label, sizeof(label), "no oncoming ");
      char speed[16];
      std::snprintf(speed, sizeof(speed), "%3.0f km/h", v);
      ss << label << "   " << speed << "  ";
      for (std::size_t k = 0; k < spec.mus.size(); ++k) {
        const SweepCell& c = cells[i++];
        char buf[12];
        std::snprintf(buf, sizeof(buf), "%-8s", c.error.empty() ? to_string(c.outcome) : "error");
        ss << buf;
      }
      ss << "\n";
    }
  }
  return ss.str();
}

}  // namespace eoam
