#pragma once

#include <cmath>
#include <stdexcept>

#include "eoam/lookup_table.hpp"
#include "eoam/phase_diagram.hpp"
#include "eoam/units.hpp"
#include "eoam/vehicle.hpp"

namespace eoam {

// Online maneuver domain: the six-mode state machine with point-of-no-return
// and warning logic, plus the steering and longitudinal controllers that
// track the lookup-table references.

enum class EoamMode : int {
  Normal = 0,
  UpdateBrake = 1,
  UpdateSteerBrake = 2,
  OncomingBrake = 3,
  OncomingSteerBrake = 4,
  Return = 5
};

inline const char* to_string(EoamMode m) {
  switch (m) {
    case EoamMode::Normal: return "NORMAL";
    case EoamMode::UpdateBrake: return "UPDATE_BRAKE";
    case EoamMode::UpdateSteerBrake: return "UPDATE_STEER_BRAKE";
    case EoamMode::OncomingBrake: return "ONCOMING_BRAKE";
    case EoamMode::OncomingSteerBrake: return "ONCOMING_STEER_BRAKE";
    case EoamMode::Return: return "RETURN";
  }
  return "?";
}

struct RuntimeGains {
  // steering: feedforward + feedback + yaw damping, road-wheel angle
  double k_offset = 0.05;     // rad/m
  double k_lookahead = 0.1;   // rad/m
  double lookahead_dist = 15.0;  // m
  double k_yaw_damp = 0.15;   // s
  double k_understeer = 0.0015;  // s^2/m
  double steer_rate_limit = 0.8;  // rad/s
  // longitudinal acceleration PID (maneuver) and speed PID (normal driving)
  double accel_kp = 0.8, accel_ki = 0.4, accel_kd = 0.02;
  double speed_kp = 1.2, speed_ki = 0.3;
};

// Point of no return: fraction of the lane-change offset beyond which an
// initiated lane change must complete rather than revert to braking.
inline constexpr double kPnrFraction = 0.3;

struct EoamContext {
  EoamMode mode = EoamMode::Normal;
  bool fcw_active = false;
  double maneuver_timer = 0.0;  // s in the current steering maneuver
  double dx = 0.0;              // m since maneuver start (or return start)
  double x_at_maneuver_start = 0.0;
  double x_dot_0_at_trigger = 0.0;  // m/s, table row key
  double y_origin = 0.0;            // m, initial-lane reference
  double y_f = 3.5;                 // m, lane change offset
  bool pnr_crossed = false;
  double mu_est = 1.0;
  bool handback_pending = false;
  Sector last_sector = Sector::G;
  bool have_phase = false;  // a phase input has been seen this maneuver
  double return_speed_key = 0.0;  // m/s, table row key for the return path
  double prev_delta_cmd = 0.0;
  double standstill_timer = 0.0;  // s at (near) zero speed during a maneuver

  double y_pnr() const { return kPnrFraction * y_f; }
};

// Phase-relevant detections, already separated by the sensor model.
struct PhaseInput {
  bool in_lane_valid = false;
  double rel_dist = 0.0;   // m, bumper to face gap
  double rel_speed = 0.0;  // m/s, closing positive
  bool oncoming_detected = false;
};

// Mode transition function. Loss of the in-lane detection freezes the phase
// input (the last sector holds) and the timers complete the active maneuver.
inline EoamMode update_mode(EoamContext& ctx, const PhaseInput& in, const VehicleState& ego,
                            const PhaseDiagram& diagram) {
  Sector sector = ctx.last_sector;
  if (in.in_lane_valid) {
    sector = classify_phase(diagram, in.rel_dist, in.rel_speed);
    ctx.last_sector = sector;
    ctx.have_phase = true;
  } else if (!ctx.have_phase) {
    sector = Sector::G;
  }

  const double lateral = std::abs(ego.y - ctx.y_origin);
  if (ctx.mode == EoamMode::UpdateSteerBrake && lateral >= ctx.y_pnr()) ctx.pnr_crossed = true;

  // a maneuver that ends at a standstill cannot complete geometrically; the
  // vehicle is in a safe state, so control goes back to the high-level system
  if (ctx.mode != EoamMode::Normal && ctx.standstill_timer > 1.0) {
    ctx.mode = EoamMode::Normal;
    ctx.handback_pending = true;
    ctx.fcw_active = false;
    ctx.have_phase = false;
    return ctx.mode;
  }

  switch (ctx.mode) {
    case EoamMode::Normal: {
      if (sector != Sector::G) ctx.fcw_active = true;
      else ctx.fcw_active = false;
      if (sector == Sector::C || sector == Sector::D || sector == Sector::A) {
        ctx.mode = EoamMode::UpdateBrake;
      } else if (sector == Sector::F || sector == Sector::B) {
        ctx.mode = EoamMode::UpdateSteerBrake;
        ctx.x_dot_0_at_trigger = in.rel_speed;
        ctx.x_at_maneuver_start = ego.x;
        ctx.dx = 0.0;
        ctx.maneuver_timer = 0.0;
        ctx.pnr_crossed = false;
      }
      break;
    }
    case EoamMode::UpdateBrake: {
      if (in.oncoming_detected) {
        ctx.mode = lateral < ctx.y_pnr() ? EoamMode::OncomingBrake : EoamMode::OncomingSteerBrake;
        break;
      }
      if (sector == Sector::F || sector == Sector::B) {
        ctx.mode = EoamMode::UpdateSteerBrake;
        ctx.x_dot_0_at_trigger = in.rel_speed;
        ctx.x_at_maneuver_start = ego.x;
        ctx.dx = 0.0;
        ctx.maneuver_timer = 0.0;
        ctx.pnr_crossed = false;
      } else if (sector == Sector::G) {
        // threat receded or the gap stopped closing: hand control back
        ctx.mode = EoamMode::Normal;
        ctx.handback_pending = true;
        ctx.fcw_active = false;
        ctx.have_phase = false;
      }
      break;
    }
    case EoamMode::UpdateSteerBrake: {
      if (in.oncoming_detected) {
        // the latch decides: once past the point of no return the lane change
        // must complete even if the instantaneous offset were to dip back
        ctx.mode = ctx.pnr_crossed ? EoamMode::OncomingSteerBrake : EoamMode::OncomingBrake;
        break;
      }
      if (ctx.maneuver_timer >= kManeuverWindowS) {
        ctx.mode = EoamMode::Return;
        ctx.return_speed_key = ego.v_x;
        ctx.x_at_maneuver_start = ego.x;
        ctx.dx = 0.0;
      }
      break;
    }
    case EoamMode::OncomingBrake: {
      if (!in.oncoming_detected && sector == Sector::G) {
        ctx.mode = EoamMode::Normal;
        ctx.handback_pending = true;
        ctx.fcw_active = false;
        ctx.have_phase = false;
      }
      break;
    }
    case EoamMode::OncomingSteerBrake: {
      bool lane_change_done =
          std::abs(ego.y - (ctx.y_origin + ctx.y_f)) < 0.25 && std::abs(ego.psi) < 0.05;
      if (lane_change_done || ctx.maneuver_timer >= kManeuverWindowS) {
        ctx.mode = EoamMode::Return;
        ctx.return_speed_key = ego.v_x;
        ctx.x_at_maneuver_start = ego.x;
        ctx.dx = 0.0;
      }
      break;
    }
    case EoamMode::Return: {
      bool at_origin =
          std::abs(ego.y - ctx.y_origin) < 0.15 && std::abs(ego.psi) < 0.03;
      if (at_origin) {
        ctx.mode = EoamMode::Normal;
        ctx.handback_pending = true;
        ctx.fcw_active = false;
        ctx.have_phase = false;
        ctx.maneuver_timer = 0.0;
      }
      break;
    }
  }
  return ctx.mode;
}

// Reference pose for the active maneuver. During RETURN the lane-change
// planes are mirrored about the lane offset and keyed by the speed at return
// start; the acceleration plane applies unmirrored, since each stored path is
// only dynamically feasible together with its own speed profile.
struct ManeuverReference {
  double y_target = 0.0;
  double theta_target = 0.0;
  double kappa_target = 0.0;
  double ax_target = 0.0;
};

inline ManeuverReference maneuver_reference(const EoamContext& ctx, const LookupTable3D& table) {
  ManeuverReference ref;
  if (ctx.mode == EoamMode::UpdateSteerBrake || ctx.mode == EoamMode::OncomingSteerBrake) {
    TableQuery q = interpolate(table, ctx.x_dot_0_at_trigger, ctx.dx, ctx.mu_est);
    ref.y_target = ctx.y_origin + q.y_target;
    ref.theta_target = q.theta_target;
    ref.kappa_target = q.kappa_target;
    ref.ax_target = q.ax_target;
  } else if (ctx.mode == EoamMode::Return) {
    TableQuery q = interpolate(table, ctx.return_speed_key, ctx.dx, ctx.mu_est);
    ref.y_target = ctx.y_origin + ctx.y_f - q.y_target;
    ref.theta_target = -q.theta_target;
    ref.kappa_target = -q.kappa_target;
    ref.ax_target = q.ax_target;
  } else {
    ref.y_target = ctx.y_origin;
  }
  return ref;
}

struct LateralErrors {
  double offset = 0.0;     // m
  double lookahead = 0.0;  // m
};

inline LateralErrors lateral_errors(const VehicleState& ego, const EoamContext& ctx,
                                    const LookupTable3D& table, const RuntimeGains& gains) {
  ManeuverReference here = maneuver_reference(ctx, table);
  LateralErrors e;
  e.offset = ego.y - here.y_target;
  e.lookahead = e.offset + gains.lookahead_dist * std::sin(ego.psi - here.theta_target);
  return e;
}

// Steering command: kinematic plus understeer feedforward on the reference
// curvature, proportional feedback on the offset and lookahead errors, and
// yaw-rate damping against the curvature-implied yaw rate. Rate limited and
// clamped to the road-wheel bounds.
inline double steering_control(EoamContext& ctx, const VehicleState& ego,
                               const LookupTable3D& table, const VehicleParams& params,
                               const RuntimeGains& gains, double dt) {
  ManeuverReference ref = maneuver_reference(ctx, table);
  LateralErrors err = lateral_errors(ego, ctx, table, gains);

  double ff = params.wheelbase() * ref.kappa_target +
              gains.k_understeer * ref.kappa_target * ego.v_x * ego.v_x;
  double fb = -gains.k_offset * err.offset - gains.k_lookahead * err.lookahead;
  double yd = -gains.k_yaw_damp * (ego.psi_dot - ref.kappa_target * ego.v_x);
  double cmd = ff + fb + yd;

  double max_step = gains.steer_rate_limit * dt;
  cmd = clamp(cmd, ctx.prev_delta_cmd - max_step, ctx.prev_delta_cmd + max_step);
  cmd = clamp(cmd, params.delta_min, params.delta_max);
  ctx.prev_delta_cmd = cmd;
  return cmd;
}

// Incremental PID with clamped output, integrator freeze at the clamp, and a
// first-order filter on the derivative (a raw difference quotient at 1 kHz
// turns measurement steps into rail-to-rail chatter).
struct Pid {
  double kp = 0.0, ki = 0.0, kd = 0.0;
  double deriv_tau = 0.02;  // s
  double integral = 0.0;
  double prev_error = 0.0;
  double deriv_filtered = 0.0;
  bool primed = false;

  void reset() {
    integral = 0.0;
    prev_error = 0.0;
    deriv_filtered = 0.0;
    primed = false;
  }

  double step(double error, double dt, double out_lo, double out_hi) {
    double deriv_raw = primed ? (error - prev_error) / dt : 0.0;
    deriv_filtered += (deriv_raw - deriv_filtered) * (dt / (deriv_tau + dt));
    double trial_integral = integral + error * dt;
    double out = kp * error + ki * trial_integral + kd * deriv_filtered;
    if (out > out_hi) {
      out = out_hi;
    } else if (out < out_lo) {
      out = out_lo;
    } else {
      integral = trial_integral;  // anti-windup: only integrate when unclamped
    }
    prev_error = error;
    primed = true;
    return out;
  }
};

// Longitudinal acceleration tracking during the maneuver: reference
// feedforward plus PID on the acceleration error, scaled by the mass and
// clamped to the mu-scaled force caps. The PID's internal clamp window is
// shifted by the feedforward so the integrator freezes exactly at the real
// saturation.
inline double accel_control(Pid& pid, double ax_target, double ax_actual, double dt, double mu,
                            const VehicleParams& params) {
  double a_lo = mu * params.f_t_min_brk / params.m;
  double a_hi = mu * params.f_t_max_eng / params.m;
  double a = ax_target +
             pid.step(ax_target - ax_actual, dt, a_lo - ax_target, a_hi - ax_target);
  return params.m * clamp(a, a_lo, a_hi);
}

// Speed holding for normal driving (stand-in for the high-level system).
inline double speed_control(Pid& pid, double v_target, double v_actual, double dt, double mu,
                            const VehicleParams& params) {
  double f_lo = mu * params.f_t_min_brk;
  double f_hi = mu * params.f_t_max_eng;
  double a = pid.step(v_target - v_actual, dt, f_lo / params.m, f_hi / params.m);
  return clamp(params.m * a, f_lo, f_hi);
}

// Limit braking command used by the pure-braking modes.
inline double limit_brake_force(double mu, const VehicleParams& params) {
  return mu * params.f_t_min_brk * params.decel_eff;
}

}  // namespace eoam
