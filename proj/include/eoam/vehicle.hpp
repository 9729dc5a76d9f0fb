#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "eoam/config.hpp"
#include "eoam/units.hpp"

namespace eoam {

// Planar 3-DOF single-track model with a saturating linear tire. Pure
// functions over value types; used both as the closed-loop plant and as the
// dynamics inside the trajectory optimizer.

struct VehicleParams {
  double m = 1650.0;             // kg
  double i_z = 2900.0;           // kg m^2
  double d_f = 1.40;             // m, CG to front axle
  double d_r = 1.65;             // m, CG to rear axle
  double wid_ego = 1.88;         // m
  double len_front = 2.0;        // m, CG to front bumper
  double c_alpha_f = 1.2e5;      // N/rad, per axle
  double c_alpha_r = 1.2e5;      // N/rad, per axle
  double alpha_star = deg_to_rad(5.0);  // rad, saturation slip angle
  double delta_min = -0.5;       // rad, road wheel
  double delta_max = 0.5;        // rad
  double steering_ratio = 16.0;  // handwheel / road wheel
  double f_t_max_eng = 6000.0;   // N, unscaled engine tractive limit
  double f_t_min_brk = -1650.0 * kGravity;  // N, unscaled braking limit (negative)
  double decel_eff = 0.9;        // fraction of mu*g reachable without lockup

  double wheelbase() const { return d_f + d_r; }

  void validate() const {
    if (!(m > 0.0 && i_z > 0.0 && d_f > 0.0 && d_r > 0.0))
      throw std::invalid_argument("vehicle params: mass/inertia/geometry must be positive");
    if (!(c_alpha_f > 0.0 && c_alpha_r > 0.0 && alpha_star > 0.0))
      throw std::invalid_argument("vehicle params: tire stiffness and saturation slip must be positive");
    if (!(delta_min < 0.0 && 0.0 < delta_max))
      throw std::invalid_argument("vehicle params: steering bounds must straddle zero");
    if (!(f_t_min_brk < 0.0 && 0.0 < f_t_max_eng))
      throw std::invalid_argument("vehicle params: force bounds must straddle zero");
    if (!(decel_eff > 0.0 && decel_eff <= 1.0))
      throw std::invalid_argument("vehicle params: decel_eff must be in (0, 1]");
  }

  static VehicleParams from_config(const Config& cfg) {
    VehicleParams p;
    p.m = cfg.get_double("mass_kg");
    p.i_z = cfg.get_double("yaw_inertia_kgm2");
    p.d_f = cfg.get_double("cg_to_front_axle_m");
    p.d_r = cfg.get_double("cg_to_rear_axle_m");
    p.wid_ego = cfg.get_double("width_m");
    p.len_front = cfg.get_double("cg_to_front_bumper_m");
    p.c_alpha_f = cfg.get_double("cornering_stiffness_front_nprad");
    p.c_alpha_r = cfg.get_double("cornering_stiffness_rear_nprad");
    p.alpha_star = deg_to_rad(cfg.get_double("saturation_slip_deg"));
    p.delta_max = cfg.get_double("road_wheel_angle_max_rad");
    p.delta_min = cfg.get_double("road_wheel_angle_min_rad", -p.delta_max);
    p.steering_ratio = cfg.get_double("steering_ratio", 16.0);
    p.f_t_max_eng = cfg.get_double("engine_force_max_n");
    p.f_t_min_brk = cfg.get_double("brake_force_min_n", -p.m * kGravity);
    p.decel_eff = cfg.get_double("decel_eff", 0.9);
    p.validate();
    return p;
  }
};

struct VehicleState {
  double x = 0.0;        // m, global
  double y = 0.0;        // m, global
  double v_x = 0.0;      // m/s, body frame
  double v_y = 0.0;      // m/s, body frame
  double psi = 0.0;      // rad, global heading
  double psi_dot = 0.0;  // rad/s

  // Body slip angle, derived only.
  double beta() const { return std::atan2(v_y, v_x); }
  double speed() const { return std::hypot(v_x, v_y); }
};

struct ControlInput {
  double f_t = 0.0;    // N, tractive force, negative = braking
  double delta = 0.0;  // rad, road wheel angle
};

struct StateDerivative {
  double x_dot = 0.0;
  double y_dot = 0.0;
  double v_x_dot = 0.0;
  double v_y_dot = 0.0;
  double psi_dot = 0.0;
  double psi_ddot = 0.0;
};

// Below this speed the slip-angle model is invalid; the plant freezes lateral
// dynamics instead (see plant_step).
inline constexpr double kVxFloor = 1.0;  // m/s

// Saturating linear tire: -mu*C*alpha inside the linear range, plateau at
// -+mu*C*alpha_star beyond. Odd in alpha, plateau scales linearly with mu.
inline double lateral_tire_force(double c_alpha, double alpha, double mu,
                                 double alpha_star) {
  if (std::abs(alpha) < alpha_star) return -mu * c_alpha * alpha;
  return alpha > 0.0 ? -mu * c_alpha * alpha_star : mu * c_alpha * alpha_star;
}

struct SlipAngles {
  double front = 0.0;
  double rear = 0.0;
};

inline SlipAngles slip_angles(const VehicleState& s, double delta,
                              const VehicleParams& p) {
  if (!(s.v_x > kVxFloor))
    throw std::domain_error("slip_angles: v_x at or below model validity floor");
  SlipAngles a;
  a.front = std::atan((s.v_y + p.d_f * s.psi_dot) / s.v_x) - delta;
  a.rear = std::atan((s.v_y - p.d_r * s.psi_dot) / s.v_x);
  return a;
}

struct TireForces {
  double front = 0.0;  // N, lateral, left positive
  double rear = 0.0;
};

inline TireForces tire_forces(const VehicleState& s, double delta, double mu,
                              const VehicleParams& p) {
  SlipAngles a = slip_angles(s, delta, p);
  return {lateral_tire_force(p.c_alpha_f, a.front, mu, p.alpha_star),
          lateral_tire_force(p.c_alpha_r, a.rear, mu, p.alpha_star)};
}

// Body-frame force/moment balance plus the kinematic map to global pose rates.
inline StateDerivative derivatives(const VehicleState& s, const ControlInput& u,
                                   double mu, const VehicleParams& p) {
  TireForces f = tire_forces(s, u.delta, mu, p);
  StateDerivative d;
  d.v_x_dot = s.v_y * s.psi_dot + (u.f_t - f.front * std::sin(u.delta)) / p.m;
  d.v_y_dot = -s.v_x * s.psi_dot + (f.rear + f.front * std::cos(u.delta)) / p.m;
  d.psi_ddot = (p.d_f * f.front * std::cos(u.delta) - p.d_r * f.rear) / p.i_z;
  d.psi_dot = s.psi_dot;
  d.x_dot = s.v_x * std::cos(s.psi) - s.v_y * std::sin(s.psi);
  d.y_dot = s.v_x * std::sin(s.psi) + s.v_y * std::cos(s.psi);
  return d;
}

namespace detail {
inline VehicleState advance(const VehicleState& s, const StateDerivative& d, double h) {
  VehicleState n = s;
  n.x += h * d.x_dot;
  n.y += h * d.y_dot;
  n.v_x += h * d.v_x_dot;
  n.v_y += h * d.v_y_dot;
  n.psi += h * d.psi_dot;
  n.psi_dot += h * d.psi_ddot;
  return n;
}
}  // namespace detail

// Classic fixed-step fourth-order integration of derivatives().
inline VehicleState step(const VehicleState& s, const ControlInput& u, double mu,
                         double dt, const VehicleParams& p) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  StateDerivative k1 = derivatives(s, u, mu, p);
  StateDerivative k2 = derivatives(detail::advance(s, k1, dt / 2.0), u, mu, p);
  StateDerivative k3 = derivatives(detail::advance(s, k2, dt / 2.0), u, mu, p);
  StateDerivative k4 = derivatives(detail::advance(s, k3, dt), u, mu, p);
  VehicleState n = s;
  n.x += dt / 6.0 * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot);
  n.y += dt / 6.0 * (k1.y_dot + 2.0 * k2.y_dot + 2.0 * k3.y_dot + k4.y_dot);
  n.v_x += dt / 6.0 * (k1.v_x_dot + 2.0 * k2.v_x_dot + 2.0 * k3.v_x_dot + k4.v_x_dot);
  n.v_y += dt / 6.0 * (k1.v_y_dot + 2.0 * k2.v_y_dot + 2.0 * k3.v_y_dot + k4.v_y_dot);
  n.psi += dt / 6.0 * (k1.psi_dot + 2.0 * k2.psi_dot + 2.0 * k3.psi_dot + k4.psi_dot);
  n.psi_dot += dt / 6.0 * (k1.psi_ddot + 2.0 * k2.psi_ddot + 2.0 * k3.psi_ddot + k4.psi_ddot);
  return n;
}

// Plant stepping for the closed loop: clamps v_x at zero and freezes lateral
// dynamics below the validity floor so limit-braking runs can ride to a
// standstill. Above the floor this is exactly step(). The switch carries a
// margin so the integrator's internal stages cannot dip under the floor.
inline VehicleState plant_step(const VehicleState& s, const ControlInput& u,
                               double mu, double dt, const VehicleParams& p) {
  const double stage_margin = 0.25 + 20.0 * dt;
  if (s.v_x > kVxFloor + stage_margin) {
    VehicleState n = step(s, u, mu, dt, p);
    if (n.v_x < 0.0) n.v_x = 0.0;
    return n;
  }
  VehicleState n = s;
  n.v_y = 0.0;
  n.psi_dot = 0.0;
  n.v_x = s.v_x + dt * u.f_t / p.m;
  if (n.v_x < 0.0) n.v_x = 0.0;
  double v_avg = 0.5 * (s.v_x + n.v_x);
  n.x += dt * v_avg * std::cos(s.psi);
  n.y += dt * v_avg * std::sin(s.psi);
  return n;
}

// 1 - (a_x/(mu g))^2 - (a_y/(mu g))^2; >= 0 means inside the ellipse.
inline double friction_ellipse_margin(double a_x, double a_y, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("friction_ellipse_margin: mu must be positive");
  double gx = a_x / (mu * kGravity);
  double gy = a_y / (mu * kGravity);
  return 1.0 - gx * gx - gy * gy;
}

}  // namespace eoam
