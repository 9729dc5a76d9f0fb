#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "eoam/inverse_dynamics.hpp"
#include "eoam/path.hpp"
#include "eoam/units.hpp"
#include "eoam/vehicle.hpp"

namespace eoam {

// Distance-minimizing longitudinal profile for the lane change.
//
// The steering input delta(s) is fixed by the inverse-dynamics stage (up to
// one global scale that absorbs the quasi-steady reconstruction error so the
// terminal lateral offset can bind exactly). The free variables are the
// tractive-force profile, the horizon, and that steering scale.
//
// Transcription: trapezoidal collocation on n_nodes nodes with piecewise-
// linear u1. The state sequence is produced by Newton-exact implicit
// trapezoid marching, so collocation defects are at roundoff level by
// construction and the independent audit re-checks them from the stored
// arrays. The outer search over throttle-fraction knots is a deterministic
// projected gradient descent with backtracking; the zero-acceleration
// candidate is always evaluated first, which guarantees the returned
// distance never exceeds the constant-speed baseline.

struct OcpSpec {
  double x_dot_0 = 0.0;  // m/s, relative speed at maneuver start
  double mu = 1.0;
  double y_f = 3.5;  // m
  VehicleParams params;
  int n_nodes = 61;
  int n_knots = 8;            // throttle-fraction knots, linear in scaled time
  double utilization = 0.8;   // fraction of force/acceleration caps the solver may use
  double defect_tol = 1e-4;
  double constraint_tol = 1e-4;
  int max_outer_iters = 30;
  double outer_tol = 1e-3;     // m, stop when an iteration gains less than this
  double design_floor = 12.0;  // m/s, no optimization below this speed

  void validate() const {
    if (!(x_dot_0 >= design_floor))
      throw std::invalid_argument("ocp: initial speed below the design-space floor");
    if (!(y_f > 0.0)) throw std::invalid_argument("ocp: y_f must be positive");
    if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("ocp: mu must be in (0, 1]");
    if (n_nodes < 11) throw std::invalid_argument("ocp: need at least 11 nodes");
    if (n_knots < 2 || n_knots > n_nodes) throw std::invalid_argument("ocp: bad knot count");
  }
};

enum class OcpStatus {
  Ok,
  IterLimit,        // outer loop hit the iteration cap, best feasible iterate returned
  Infeasible,       // no steering solution exists, braking-only fallback applies
  BelowDesignFloor  // speed under the optimization floor, empty result
};

inline const char* to_string(OcpStatus s) {
  switch (s) {
    case OcpStatus::Ok: return "ok";
    case OcpStatus::IterLimit: return "iter_limit";
    case OcpStatus::Infeasible: return "infeasible";
    case OcpStatus::BelowDesignFloor: return "below_design_floor";
  }
  return "?";
}

// Node data of the transcription, kept for the constraint audit.
struct Transcription {
  double horizon = 0.0;  // s
  double c_delta = 1.0;  // steering scale
  std::vector<std::array<double, 7>> states;  // x, xdot, y, ydot, psi, psidot, s
  std::vector<double> u1;                     // N at nodes
  std::vector<double> delta;                  // rad at nodes (scaled table value)
};

struct FullTrajectory {
  std::vector<double> dx;            // m from maneuver start
  std::vector<double> y_target;      // m
  std::vector<double> ax_target;     // m/s^2, tangential
  std::vector<double> theta_target;  // rad
  std::vector<double> kappa_target;  // 1/m
  std::vector<double> vx_ref;        // m/s, reference only
  std::vector<double> t;             // s at samples

  double x_dot_0 = 0.0;
  double mu = 1.0;
  double y_f = 3.5;
  double t_f_achieved = 0.0;   // s, lane-change segment duration
  double j_distance = 0.0;     // m, x at lane-change completion
  double j_baseline = 0.0;     // m, constant-speed candidate distance
  OcpStatus status = OcpStatus::Ok;

  Transcription transcription;  // lane-change segment nodes

  bool empty() const { return dx.empty(); }
  double maneuver_length() const { return dx.empty() ? 0.0 : dx.back(); }
};

namespace ocp_detail {

struct DynContext {
  const VehicleParams* p = nullptr;
  double mu = 1.0;
  const std::vector<double>* s_grid = nullptr;
  const std::vector<double>* delta_grid = nullptr;
  double c_delta = 1.0;
};

inline double delta_at(const DynContext& c, double s) {
  return c.c_delta * interp_path(*c.s_grid, *c.delta_grid, s);
}

struct Eval {
  std::array<double, 7> f;
  double alpha_f, alpha_r, f_f, f_r, delta, vx_body, vy_body;
};

inline Eval eval_dynamics(const DynContext& c, const std::array<double, 7>& z, double u1) {
  const VehicleParams& p = *c.p;
  Eval e;
  double cp = std::cos(z[4]), sp = std::sin(z[4]);
  e.vx_body = z[1] * cp + z[3] * sp;
  e.vy_body = -z[1] * sp + z[3] * cp;
  double vx = std::max(e.vx_body, 0.5);  // numerical guard inside Newton steps
  e.delta = delta_at(c, z[6]);
  e.alpha_f = std::atan((e.vy_body + p.d_f * z[5]) / vx) - e.delta;
  e.alpha_r = std::atan((e.vy_body - p.d_r * z[5]) / vx);
  e.f_f = lateral_tire_force(p.c_alpha_f, e.alpha_f, c.mu, p.alpha_star);
  e.f_r = lateral_tire_force(p.c_alpha_r, e.alpha_r, c.mu, p.alpha_star);
  double cd = std::cos(e.delta);
  e.f[0] = z[1];
  e.f[1] = (u1 * cp - e.f_r * sp - e.f_f * std::sin(z[4] + e.delta)) / p.m;
  e.f[2] = z[3];
  e.f[3] = (u1 * sp + e.f_r * cp + e.f_f * std::cos(z[4] + e.delta)) / p.m;
  e.f[4] = z[5];
  e.f[5] = (p.d_f * e.f_f * cd - p.d_r * e.f_r) / p.i_z;
  e.f[6] = std::hypot(z[1], z[3]);
  return e;
}

// Admissible tractive force at a state: mu-scaled engine cap, the rear-force
// ellipse remainder, and the acceleration circle, all derated by the
// utilization margin. Braking authority tapers to zero below 10 m/s so the
// march cannot push the speed through the model validity floor.
struct ForceBounds {
  double lo = 0.0, hi = 0.0;
};

inline ForceBounds force_bounds(const DynContext& c, const std::array<double, 7>& z,
                                double utilization) {
  const VehicleParams& p = *c.p;
  Eval e = eval_dynamics(c, z, 0.0);
  double fy_max_r = c.mu * p.c_alpha_r * p.alpha_star;
  double ratio = e.f_r / fy_max_r;
  double ellipse = c.mu * std::abs(p.f_t_min_brk) * std::sqrt(std::max(0.0, 1.0 - ratio * ratio));
  double a_y_body = (e.f_r + e.f_f * std::cos(e.delta)) / p.m;
  double a_cap = utilization * c.mu * kGravity;
  double circle_acc = std::sqrt(std::max(0.0, a_cap * a_cap - a_y_body * a_y_body));
  double circle = p.m * circle_acc;
  double cap = std::min(utilization * ellipse, circle);
  ForceBounds b;
  b.hi = std::min(utilization * c.mu * p.f_t_max_eng, cap);
  double v = e.f[6];
  double taper = clamp((v - 8.0) / 4.0, 0.0, 1.0);
  b.lo = -cap * taper;
  if (b.hi < 0.0) b.hi = 0.0;
  if (b.lo > 0.0) b.lo = 0.0;
  return b;
}

// 7x7 dense solve, Gaussian elimination with partial pivoting.
inline bool solve7(std::array<std::array<double, 7>, 7>& a, std::array<double, 7>& b) {
  for (int col = 0; col < 7; ++col) {
    int piv = col;
    for (int r = col + 1; r < 7; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-14) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 7; ++r) {
      double f = a[r][col] / a[col][col];
      for (int k = col; k < 7; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (int col = 6; col >= 0; --col) {
    double acc = b[col];
    for (int k = col + 1; k < 7; ++k) acc -= a[col][k] * b[k];
    b[col] = acc / a[col][col];
  }
  return true;
}

// One implicit trapezoid step solved to roundoff with a damped Newton
// iteration; the finite-difference Jacobian is cheap at this dimension.
inline bool implicit_trapezoid_step(const DynContext& c, const std::array<double, 7>& z0,
                                    double u1_0, double u1_1, double h,
                                    std::array<double, 7>& z1_out) {
  Eval e0 = eval_dynamics(c, z0, u1_0);
  std::array<double, 7> w;
  for (int k = 0; k < 7; ++k) w[k] = z0[k] + h * e0.f[k];

  auto residual = [&](const std::array<double, 7>& w_) {
    Eval e1 = eval_dynamics(c, w_, u1_1);
    std::array<double, 7> r;
    for (int k = 0; k < 7; ++k)
      r[k] = w_[k] - z0[k] - 0.5 * h * (e0.f[k] + e1.f[k]);
    return r;
  };

  for (int it = 0; it < 20; ++it) {
    std::array<double, 7> r = residual(w);
    double rn = 0.0;
    for (int k = 0; k < 7; ++k) rn = std::max(rn, std::abs(r[k]));
    if (rn < 1e-12) {
      z1_out = w;
      return true;
    }
    std::array<std::array<double, 7>, 7> jac{};
    for (int j = 0; j < 7; ++j) {
      double eps = 1e-7 * std::max(1.0, std::abs(w[j]));
      std::array<double, 7> wp = w;
      wp[j] += eps;
      std::array<double, 7> rp = residual(wp);
      for (int k = 0; k < 7; ++k) jac[k][j] = (rp[k] - r[k]) / eps;
    }
    std::array<double, 7> rhs;
    for (int k = 0; k < 7; ++k) rhs[k] = -r[k];
    if (!solve7(jac, rhs)) return false;
    for (int k = 0; k < 7; ++k) w[k] += rhs[k];
  }
  return false;
}

struct MarchResult {
  bool ok = false;
  bool front_ok = true;  // front slip within saturation at all nodes
  Transcription tr;
  double y_end = 0.0, s_end = 0.0, j = 0.0;
};

// Throttle fraction at scaled time tau from the linear knot profile.
inline double knot_value(const std::vector<double>& knots, double tau) {
  std::size_t nk = knots.size();
  double u = tau * static_cast<double>(nk - 1);
  std::size_t i = static_cast<std::size_t>(u);
  if (i >= nk - 1) return knots.back();
  double w = u - static_cast<double>(i);
  return knots[i] + w * (knots[i + 1] - knots[i]);
}

inline MarchResult march(const OcpSpec& spec, const DynContext& ctx,
                         const std::vector<double>& knots, double horizon) {
  MarchResult out;
  const int n = spec.n_nodes;
  const double h = horizon / static_cast<double>(n - 1);
  out.tr.horizon = horizon;
  out.tr.c_delta = ctx.c_delta;
  out.tr.states.resize(n);
  out.tr.u1.assign(n, 0.0);
  out.tr.delta.assign(n, 0.0);

  std::array<double, 7> z{0.0, spec.x_dot_0, 0.0, 0.0, 0.0, 0.0, 0.0};
  out.tr.states[0] = z;
  ForceBounds b0 = force_bounds(ctx, z, spec.utilization);
  double xi0 = knot_value(knots, 0.0);
  out.tr.u1[0] = xi0 >= 0.0 ? xi0 * b0.hi : -xi0 * b0.lo;
  out.tr.delta[0] = delta_at(ctx, z[6]);

  for (int i = 0; i + 1 < n; ++i) {
    // control at the next node from the Euler-predicted state
    Eval ei = eval_dynamics(ctx, z, out.tr.u1[i]);
    std::array<double, 7> zp;
    for (int k = 0; k < 7; ++k) zp[k] = z[k] + h * ei.f[k];
    ForceBounds bn = force_bounds(ctx, zp, spec.utilization);
    double xin = knot_value(knots, static_cast<double>(i + 1) / (n - 1));
    double u1n = xin >= 0.0 ? xin * bn.hi : -xin * bn.lo;

    std::array<double, 7> z1;
    if (!implicit_trapezoid_step(ctx, z, out.tr.u1[i], u1n, h, z1)) return out;
    z = z1;
    out.tr.states[i + 1] = z;
    out.tr.u1[i + 1] = u1n;
    out.tr.delta[i + 1] = delta_at(ctx, z[6]);
    Eval e1 = eval_dynamics(ctx, z, u1n);
    if (std::abs(e1.alpha_f) > ctx.p->alpha_star || std::abs(e1.alpha_r) > ctx.p->alpha_star)
      out.front_ok = false;
  }
  out.ok = true;
  out.y_end = z[2];
  out.s_end = z[6];
  out.j = z[0];
  return out;
}

// Solve (horizon, c_delta) so that the march ends exactly at the end of the
// steering arc with the full lateral offset: s(T) = s_total, y(T) = y_f.
inline bool solve_terminal(const OcpSpec& spec, DynContext& ctx,
                           const std::vector<double>& knots, double s_total,
                           double& horizon, double& c_delta, MarchResult& res) {
  double T = horizon, c = c_delta;
  const double t_lo = 0.25 * s_total / spec.x_dot_0, t_hi = 6.0 * s_total / spec.x_dot_0;
  for (int it = 0; it < 40; ++it) {
    ctx.c_delta = c;
    MarchResult m0 = march(spec, ctx, knots, T);
    if (!m0.ok) return false;
    double r1 = m0.s_end - s_total;
    double r2 = m0.y_end - spec.y_f;
    if (std::abs(r1) < 1e-9 * std::max(1.0, s_total) && std::abs(r2) < 1e-10) {
      horizon = T;
      c_delta = c;
      res = m0;
      return true;
    }
    double dT = 1e-6 * std::max(1.0, T);
    MarchResult mT = march(spec, ctx, knots, T + dT);
    if (!mT.ok) return false;
    double dc = 1e-7;
    ctx.c_delta = c + dc;
    MarchResult mc = march(spec, ctx, knots, T);
    if (!mc.ok) return false;

    double a11 = (mT.s_end - m0.s_end) / dT, a12 = (mc.s_end - m0.s_end) / dc;
    double a21 = (mT.y_end - m0.y_end) / dT, a22 = (mc.y_end - m0.y_end) / dc;
    double det = a11 * a22 - a12 * a21;
    if (std::abs(det) < 1e-12) return false;
    double step_T = (-r1 * a22 + r2 * a12) / det;
    double step_c = (-a11 * r2 + a21 * r1) / det;
    // damp large steps
    double scale = 1.0;
    if (std::abs(step_T) > 0.3 * T) scale = std::min(scale, 0.3 * T / std::abs(step_T));
    if (std::abs(step_c) > 0.2) scale = std::min(scale, 0.2 / std::abs(step_c));
    T = clamp(T + scale * step_T, t_lo, t_hi);
    c = clamp(c + scale * step_c, 0.5, 1.5);
  }
  return false;
}

}  // namespace ocp_detail

struct AuditReport {
  double max_defect = 0.0;            // normalized collocation defect
  double max_boundary_error = 0.0;    // m (terminal lateral) and initial states
  double max_front_force_excess = 0.0;   // normalized, demand over plateau
  double max_steer_excess = 0.0;         // normalized vs bounds
  double max_ellipse_excess = 0.0;       // g3 value above zero
  double max_engine_excess = 0.0;        // normalized
  double baseline_gap = 0.0;             // j - j_baseline (<= 0 expected)
  bool pass = false;
};

// Independent re-evaluation of dynamics defects, boundary conditions and the
// path/control constraints from the stored node arrays. Works only from the
// returned profile, never from solver internals.
inline AuditReport audit_trajectory(const FullTrajectory& traj, const OcpSpec& spec,
                                    const InverseSolution& steering) {
  const Transcription& tr = traj.transcription;
  AuditReport rep;
  if (tr.states.empty()) return rep;
  const int n = static_cast<int>(tr.states.size());
  const double h = tr.horizon / static_cast<double>(n - 1);

  ocp_detail::DynContext ctx;
  ctx.p = &spec.params;
  ctx.mu = spec.mu;
  ctx.s_grid = &steering.s;
  ctx.delta_grid = &steering.delta;
  ctx.c_delta = tr.c_delta;

  const VehicleParams& p = spec.params;
  const double plateau_f = spec.mu * p.c_alpha_f * p.alpha_star;
  const double fy_max_r = spec.mu * p.c_alpha_r * p.alpha_star;
  const double fx_max = spec.mu * std::abs(p.f_t_min_brk);
  const double eng = spec.mu * p.f_t_max_eng;

  std::vector<ocp_detail::Eval> evals(n);
  for (int i = 0; i < n; ++i) evals[i] = ocp_detail::eval_dynamics(ctx, tr.states[i], tr.u1[i]);

  for (int i = 0; i + 1 < n; ++i) {
    for (int k = 0; k < 7; ++k) {
      double d = tr.states[i + 1][k] - tr.states[i][k] -
                 0.5 * h * (evals[i].f[k] + evals[i + 1].f[k]);
      double scale = std::max({1.0, std::abs(tr.states[i][k]), std::abs(tr.states[i + 1][k])});
      rep.max_defect = std::max(rep.max_defect, std::abs(d) / scale);
    }
  }

  const auto& z0 = tr.states.front();
  const auto& zN = tr.states.back();
  rep.max_boundary_error = std::max({std::abs(z0[0]), std::abs(z0[1] - traj.x_dot_0),
                                     std::abs(z0[2]), std::abs(z0[3]), std::abs(z0[4]),
                                     std::abs(z0[5]), std::abs(zN[2] - traj.y_f)});

  for (int i = 0; i < n; ++i) {
    const auto& e = evals[i];
    // front force demand vs the saturation plateau (linear-law demand)
    double demand = spec.mu * p.c_alpha_f * std::abs(e.alpha_f);
    rep.max_front_force_excess =
        std::max(rep.max_front_force_excess, (demand - plateau_f) / plateau_f);
    double steer_hi = (e.delta - p.delta_max) / p.delta_max;
    double steer_lo = (p.delta_min - e.delta) / (-p.delta_min);
    rep.max_steer_excess = std::max({rep.max_steer_excess, steer_hi, steer_lo});
    double g3 = (tr.u1[i] / fx_max) * (tr.u1[i] / fx_max) +
                (e.f_r / fy_max_r) * (e.f_r / fy_max_r) - 1.0;
    rep.max_ellipse_excess = std::max(rep.max_ellipse_excess, g3);
    rep.max_engine_excess = std::max(rep.max_engine_excess, (tr.u1[i] - eng) / eng);
  }

  rep.baseline_gap = traj.j_distance - traj.j_baseline;
  rep.pass = rep.max_defect <= spec.defect_tol &&
             rep.max_boundary_error <= 1e-8 &&
             rep.max_front_force_excess <= spec.constraint_tol &&
             rep.max_steer_excess <= spec.constraint_tol &&
             rep.max_ellipse_excess <= spec.constraint_tol &&
             rep.max_engine_excess <= spec.constraint_tol &&
             rep.baseline_gap <= 1e-9;
  return rep;
}

namespace ocp_detail {

// Assemble the lane-change segment plus the speed-recovery tail into the
// sampled reference arrays consumed by the lookup tables.
inline FullTrajectory assemble(const OcpSpec& spec, const MarchResult& m, double j_baseline,
                               OcpStatus status, double maneuver_window_s) {
  FullTrajectory out;
  out.x_dot_0 = spec.x_dot_0;
  out.mu = spec.mu;
  out.y_f = spec.y_f;
  out.status = status;
  out.t_f_achieved = m.tr.horizon;
  out.j_distance = m.j;
  out.j_baseline = j_baseline;
  out.transcription = m.tr;

  const int n = static_cast<int>(m.tr.states.size());
  const double h = m.tr.horizon / static_cast<double>(n - 1);

  for (int i = 0; i < n; ++i) {
    const auto& z = m.tr.states[i];
    double delta = m.tr.delta[i];
    double cp = std::cos(z[4]), sp = std::sin(z[4]);
    double vxb = z[1] * cp + z[3] * sp;
    double vyb = -z[1] * sp + z[3] * cp;
    double vx = std::max(vxb, 0.5);
    double af = std::atan((vyb + spec.params.d_f * z[5]) / vx) - delta;
    double ar = std::atan((vyb - spec.params.d_r * z[5]) / vx);
    double ff = lateral_tire_force(spec.params.c_alpha_f, af, spec.mu, spec.params.alpha_star);
    double fr = lateral_tire_force(spec.params.c_alpha_r, ar, spec.mu, spec.params.alpha_star);
    double fx_dot = (m.tr.u1[i] * cp - fr * sp - ff * std::sin(z[4] + delta)) / spec.params.m;
    double fy_dot = (m.tr.u1[i] * sp + fr * cp + ff * std::cos(z[4] + delta)) / spec.params.m;
    double speed = std::hypot(z[1], z[3]);
    double sp2 = speed * speed;

    out.dx.push_back(z[0]);
    out.y_target.push_back(z[2]);
    out.theta_target.push_back(std::atan2(z[3], z[1]));
    out.kappa_target.push_back((z[1] * fy_dot - z[3] * fx_dot) / (sp2 * speed));
    out.vx_ref.push_back(speed);
    out.ax_target.push_back((z[1] * fx_dot + z[3] * fy_dot) / speed);
    out.t.push_back(h * static_cast<double>(i));
  }

  // Recovery tail: acceleration ramps up from the lane-change terminal value
  // and decays as the reference speed approaches the entry speed, until the
  // maneuver window closes. Straight-line segment, lateral references held;
  // the speed samples are the trapezoid integral of the stored acceleration
  // samples so the pair stays consistent under re-integration.
  double t_cur = out.t.back();
  double v_cur = out.vx_ref.back();
  double dx_cur = out.dx.back();
  double a_prev = out.ax_target.back();
  double a_rec = std::min(spec.mu * spec.params.f_t_max_eng / spec.params.m,
                          0.4 * spec.mu * kGravity);
  const double ramp_rate = a_rec / 1.0;  // 1/s to full recovery authority
  const double k_approach = 1.0;         // 1/s decay toward the entry speed
  const double dt = 0.1;
  while (t_cur < maneuver_window_s - 1e-9) {
    double a_next = std::min(std::max(0.0, a_prev) + ramp_rate * dt,
                             std::min(a_rec, k_approach * (spec.x_dot_0 - v_cur)));
    if (a_next < 0.0) a_next = 0.0;
    double v_next = v_cur + 0.5 * (a_prev + a_next) * dt;
    dx_cur += 0.5 * (v_cur + v_next) * dt;
    t_cur += dt;
    v_cur = v_next;
    a_prev = a_next;
    out.t.push_back(t_cur);
    out.dx.push_back(dx_cur);
    out.y_target.push_back(spec.y_f);
    out.theta_target.push_back(0.0);
    out.kappa_target.push_back(0.0);
    out.vx_ref.push_back(v_cur);
    out.ax_target.push_back(a_prev);
  }
  return out;
}

}  // namespace ocp_detail

inline constexpr double kManeuverWindowS = 8.0;

// Constant-speed candidate: zero throttle-fraction profile through the same
// terminal solve. Always feasible when the steering solution is feasible.
inline FullTrajectory constant_speed_trajectory(const OcpSpec& spec,
                                                const InverseSolution& steering) {
  spec.validate();
  if (!steering.all_feasible())
    throw std::runtime_error("constant_speed_trajectory: infeasible steering solution");
  ocp_detail::DynContext ctx;
  ctx.p = &spec.params;
  ctx.mu = spec.mu;
  ctx.s_grid = &steering.s;
  ctx.delta_grid = &steering.delta;
  ctx.c_delta = 1.0;

  std::vector<double> knots(static_cast<std::size_t>(spec.n_knots), 0.0);
  double s_total = steering.s.back();
  double horizon = s_total / spec.x_dot_0;
  double c_delta = 1.0;
  ocp_detail::MarchResult m;
  if (!ocp_detail::solve_terminal(spec, ctx, knots, s_total, horizon, c_delta, m) || !m.front_ok)
    throw std::runtime_error("constant_speed_trajectory: terminal solve failed");
  return ocp_detail::assemble(spec, m, m.j, OcpStatus::Ok, kManeuverWindowS);
}

inline FullTrajectory solve_ocp(const OcpSpec& spec, const InverseSolution& steering) {
  if (spec.x_dot_0 < spec.design_floor) {
    FullTrajectory out;
    out.x_dot_0 = spec.x_dot_0;
    out.mu = spec.mu;
    out.status = OcpStatus::BelowDesignFloor;
    return out;
  }
  spec.validate();
  if (!steering.all_feasible()) {
    FullTrajectory out;
    out.x_dot_0 = spec.x_dot_0;
    out.mu = spec.mu;
    out.status = OcpStatus::Infeasible;
    return out;
  }

  ocp_detail::DynContext ctx;
  ctx.p = &spec.params;
  ctx.mu = spec.mu;
  ctx.s_grid = &steering.s;
  ctx.delta_grid = &steering.delta;

  const double s_total = steering.s.back();
  const std::size_t nk = static_cast<std::size_t>(spec.n_knots);

  struct Candidate {
    bool ok = false;
    double j = std::numeric_limits<double>::infinity();
    double horizon = 0.0, c_delta = 1.0;
    ocp_detail::MarchResult m;
  };

  // Evaluate a knot profile: terminal solve + feasibility screen.
  double warm_T = s_total / spec.x_dot_0;
  double warm_c = 1.0;
  auto evaluate = [&](const std::vector<double>& knots) {
    Candidate c;
    c.horizon = warm_T;
    c.c_delta = warm_c;
    if (!ocp_detail::solve_terminal(spec, ctx, knots, s_total, c.horizon, c.c_delta, c.m))
      return c;
    if (!c.m.front_ok) return c;
    c.ok = true;
    c.j = c.m.j;
    return c;
  };

  std::vector<double> knots(nk, 0.0);
  Candidate base = evaluate(knots);
  if (!base.ok) {
    FullTrajectory out;
    out.x_dot_0 = spec.x_dot_0;
    out.mu = spec.mu;
    out.status = OcpStatus::Infeasible;
    return out;
  }
  const double j_baseline = base.j;
  Candidate best = base;
  std::vector<double> best_knots = knots;

  // Projected gradient descent on the throttle fractions.
  OcpStatus status = OcpStatus::Ok;
  bool converged = spec.max_outer_iters == 0;
  int iter = 0;
  for (; iter < spec.max_outer_iters; ++iter) {
    warm_T = best.horizon;
    warm_c = best.c_delta;
    // forward-difference gradient; infeasible neighbors get a one-sided retry
    std::vector<double> grad(nk, 0.0);
    const double fd = 1e-3;
    bool any = false;
    for (std::size_t k = 0; k < nk; ++k) {
      std::vector<double> probe = best_knots;
      probe[k] = clamp(probe[k] + fd, -1.0, 1.0);
      Candidate cp = evaluate(probe);
      if (cp.ok) {
        grad[k] = (cp.j - best.j) / (probe[k] - best_knots[k]);
        any = true;
        continue;
      }
      probe = best_knots;
      probe[k] = clamp(probe[k] - fd, -1.0, 1.0);
      Candidate cm = evaluate(probe);
      if (cm.ok && probe[k] != best_knots[k]) {
        grad[k] = (best.j - cm.j) / (best_knots[k] - probe[k]);
        any = true;
      }
    }
    if (!any) {
      converged = true;
      break;
    }
    double gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
    if (gnorm < 1e-12) {
      converged = true;
      break;
    }

    bool improved = false;
    for (double lr = 0.5 / gnorm; lr > 1e-4 / gnorm; lr *= 0.5) {
      std::vector<double> trial(nk);
      for (std::size_t k = 0; k < nk; ++k) trial[k] = clamp(best_knots[k] - lr * grad[k], -1.0, 1.0);
      Candidate ct = evaluate(trial);
      if (ct.ok && ct.j < best.j - 1e-9) {
        double gain = best.j - ct.j;
        best = ct;
        best_knots = trial;
        improved = gain > spec.outer_tol;
        break;
      }
    }
    if (!improved) {
      converged = true;
      break;
    }
  }
  if (!converged) status = OcpStatus::IterLimit;

  FullTrajectory out = ocp_detail::assemble(spec, best.m, j_baseline, status, kManeuverWindowS);
  return out;
}

}  // namespace eoam
