#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "eoam/path.hpp"
#include "eoam/units.hpp"
#include "eoam/vehicle.hpp"

namespace eoam {

// Quasi-steady inverse dynamics along an arc-length path: at each station the
// path demands a_y = kappa*vx^2 and psi_ddot = d(kappa*vx)/ds * vx; the axle
// force/moment balance is solved for the front and rear lateral forces, the
// saturating tire law is inverted for slip angles, and the steering angle is
// recovered from the front-axle kinematic relation. The 2x2 solve iterates
// the cos(delta) coefficient so the exact balance residuals vanish.

struct InverseSolution {
  std::vector<double> s;        // m
  std::vector<double> delta;    // rad
  std::vector<double> alpha_f;  // rad
  std::vector<double> alpha_r;  // rad
  std::vector<double> f_yf;     // N
  std::vector<double> f_yr;     // N
  std::vector<bool> feasible;   // per sample

  bool all_feasible() const {
    for (bool f : feasible)
      if (!f) return false;
    return true;
  }
};

struct AccelEnvelope {
  std::vector<double> s;
  std::vector<double> ax_min;  // m/s^2
  std::vector<double> ax_max;  // m/s^2
  std::vector<bool> empty;     // lateral demand saturates the ellipse
};

inline InverseSolution solve_inverse(const ArcPath& arc, const std::vector<double>& vx_of_s,
                                     double mu, const VehicleParams& params) {
  std::size_t n = arc.size();
  if (vx_of_s.size() != n)
    throw std::invalid_argument("solve_inverse: speed profile size mismatch");
  for (double v : vx_of_s)
    if (!(v > kVxFloor))
      throw std::domain_error("solve_inverse: speed profile at or below validity floor");

  InverseSolution sol;
  sol.s = arc.s;
  sol.delta.assign(n, 0.0);
  sol.alpha_f.assign(n, 0.0);
  sol.alpha_r.assign(n, 0.0);
  sol.f_yf.assign(n, 0.0);
  sol.f_yr.assign(n, 0.0);
  sol.feasible.assign(n, true);

  const double length = params.wheelbase();
  const double plateau_f = mu * params.c_alpha_f * params.alpha_star;
  const double plateau_r = mu * params.c_alpha_r * params.alpha_star;

  // d(kappa*vx)/ds, central differences inside, one-sided at the ends.
  std::vector<double> kv(n);
  for (std::size_t i = 0; i < n; ++i) kv[i] = arc.kappa_of_s[i] * vx_of_s[i];
  auto dkv_ds = [&](std::size_t i) {
    if (i == 0) return (kv[1] - kv[0]) / (arc.s[1] - arc.s[0]);
    if (i == n - 1) return (kv[n - 1] - kv[n - 2]) / (arc.s[n - 1] - arc.s[n - 2]);
    return (kv[i + 1] - kv[i - 1]) / (arc.s[i + 1] - arc.s[i - 1]);
  };

  for (std::size_t i = 0; i < n; ++i) {
    double vx = vx_of_s[i];
    double psi_dot = arc.kappa_of_s[i] * vx;
    double a_y = arc.kappa_of_s[i] * vx * vx;
    double psi_ddot = dkv_ds(i) * vx;

    double cos_d = 1.0;
    double f_yf = 0.0, f_yr = 0.0, af = 0.0, ar = 0.0, delta = 0.0;
    bool ok = true;
    for (int it = 0; it < 30; ++it) {
      f_yf = (params.i_z * psi_ddot + params.d_r * params.m * a_y) / (cos_d * length);
      f_yr = (params.m * a_y * params.d_f - params.i_z * psi_ddot) / length;
      if (std::abs(f_yf) > plateau_f || std::abs(f_yr) > plateau_r) {
        ok = false;
        break;
      }
      af = -f_yf / (mu * params.c_alpha_f);
      ar = -f_yr / (mu * params.c_alpha_r);
      double v_y = vx * std::tan(ar) + params.d_r * psi_dot;
      double new_delta = std::atan((v_y + params.d_f * psi_dot) / vx) - af;
      double change = std::abs(new_delta - delta);
      delta = new_delta;
      cos_d = std::cos(delta);
      if (change < 1e-15) break;
    }
    if (!ok || delta < params.delta_min || delta > params.delta_max) {
      sol.feasible[i] = false;
      continue;
    }
    sol.delta[i] = delta;
    sol.alpha_f[i] = af;
    sol.alpha_r[i] = ar;
    sol.f_yf[i] = f_yf;
    sol.f_yr[i] = f_yr;
  }
  return sol;
}

// Admissible longitudinal acceleration band given the rear-force share of the
// force ellipse, the mu-scaled engine cap and the mu-scaled braking cap.
inline AccelEnvelope accel_envelope(const InverseSolution& sol,
                                    const std::vector<double>& vx_of_s, double mu,
                                    const VehicleParams& params) {
  (void)vx_of_s;
  std::size_t n = sol.s.size();
  AccelEnvelope env;
  env.s = sol.s;
  env.ax_min.assign(n, 0.0);
  env.ax_max.assign(n, 0.0);
  env.empty.assign(n, false);

  const double fx_max = mu * std::abs(params.f_t_min_brk);
  const double fy_max_r = mu * params.c_alpha_r * params.alpha_star;
  const double eng = mu * params.f_t_max_eng;

  for (std::size_t i = 0; i < n; ++i) {
    double ratio = sol.f_yr[i] / fy_max_r;
    double rem = 1.0 - ratio * ratio;
    if (rem < 0.0) {
      env.empty[i] = true;
      continue;
    }
    double ellipse_cap = fx_max * std::sqrt(rem);
    env.ax_max[i] = std::min(eng, ellipse_cap) / params.m;
    env.ax_min[i] = -ellipse_cap / params.m;
  }
  return env;
}

}  // namespace eoam
