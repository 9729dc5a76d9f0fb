#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "eoam/units.hpp"

namespace eoam {

// Rest-to-rest quintic lane change at constant longitudinal speed:
// x(t) = v0*t, y(t) a fifth-order polynomial with zero lateral velocity and
// acceleration at both ends.
struct QuinticPath {
  double coeffs[6] = {0, 0, 0, 0, 0, 0};  // y(t) = sum coeffs[i] * t^i
  double v0 = 0.0;   // m/s
  double t_f = 0.0;  // s
  double y_f = 0.0;  // m

  double y(double t) const {
    double acc = 0.0;
    for (int i = 5; i >= 0; --i) acc = acc * t + coeffs[i];
    return acc;
  }
  double y_dot(double t) const {
    double acc = 0.0;
    for (int i = 5; i >= 1; --i) acc = acc * t + i * coeffs[i];
    return acc;
  }
  double y_ddot(double t) const {
    double acc = 0.0;
    for (int i = 5; i >= 2; --i) acc = acc * t + i * (i - 1) * coeffs[i];
    return acc;
  }
  double x(double t) const { return v0 * t; }
};

inline QuinticPath quintic_lane_change(double v0, double t_f, double y_f) {
  if (!(v0 > 0.0)) throw std::invalid_argument("quintic_lane_change: v0 must be positive");
  if (!(t_f > 0.0)) throw std::invalid_argument("quintic_lane_change: t_f must be positive");
  QuinticPath p;
  p.v0 = v0;
  p.t_f = t_f;
  p.y_f = y_f;
  // Unique quintic through y(0)=y'(0)=y''(0)=0, y(tf)=y_f, y'(tf)=y''(tf)=0.
  double t2 = t_f * t_f;
  p.coeffs[3] = 10.0 * y_f / (t2 * t_f);
  p.coeffs[4] = -15.0 * y_f / (t2 * t2);
  p.coeffs[5] = 6.0 * y_f / (t2 * t2 * t_f);
  return p;
}

// Signed curvature from the parametric quotient (xd*ydd - yd*xdd) / |v|^3.
// For the quintic, xd = v0 and xdd = 0.
inline double curvature_at(const QuinticPath& p, double t) {
  if (t < 0.0 || t > p.t_f) throw std::out_of_range("curvature_at: t outside [0, t_f]");
  double yd = p.y_dot(t);
  double ydd = p.y_ddot(t);
  double speed2 = p.v0 * p.v0 + yd * yd;
  return p.v0 * ydd / (speed2 * std::sqrt(speed2));
}

inline double path_yaw_at(const QuinticPath& p, double t) {
  return std::atan2(p.y_dot(t), p.v0);
}

// Arc-length parameterized path with tangent angle and curvature samples.
struct ArcPath {
  std::vector<double> s;       // m, strictly increasing from 0
  std::vector<double> x_of_s;  // m
  std::vector<double> y_of_s;  // m
  std::vector<double> theta_of_s;  // rad, path tangent
  std::vector<double> kappa_of_s;  // 1/m, signed

  double total_length() const { return s.empty() ? 0.0 : s.back(); }
  std::size_t size() const { return s.size(); }
};

// Parametric curve sample used by the generic parameterizer.
struct CurvePoint {
  double x, y;      // position
  double xd, yd;    // first time derivatives
  double xdd, ydd;  // second time derivatives
};

// Arc-length parameterization of any C2 parametric curve on [0, t_end].
// s(t) comes from composite Simpson quadrature of the speed; the uniform-s
// grid is then mapped back to parameter values by bisection on the monotone
// cumulative, and positions/tangents/curvatures are evaluated exactly at
// those parameters.
template <typename CurveFn>
ArcPath arc_length_parameterize_curve(CurveFn&& curve, double t_end, std::size_t n_samples) {
  if (n_samples < 50) throw std::invalid_argument("arc_length_parameterize: need >= 50 samples");
  std::size_t n = n_samples;
  if (n % 2 == 0) ++n;  // Simpson pairs need an even interval count

  const double h = t_end / static_cast<double>(n - 1);
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) {
    CurvePoint c = curve(h * static_cast<double>(i));
    speed[i] = std::hypot(c.xd, c.yd);
  }

  // Cumulative Simpson over interval pairs, second-order trapezoid fill-in at
  // the odd midpoints (only used for the bisection bracket, not the output).
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 2; i < n; i += 2)
    cum[i] = cum[i - 2] + h / 3.0 * (speed[i - 2] + 4.0 * speed[i - 1] + speed[i]);
  for (std::size_t i = 1; i < n; i += 2)
    cum[i] = cum[i - 1] + h / 2.0 * (speed[i - 1] + speed[i]);
  for (std::size_t i = 2; i < n; i += 2)
    if (cum[i] < cum[i - 1]) cum[i] = cum[i - 1];  // guard monotonicity at roundoff level

  const double total = cum.back();
  auto s_of_t = [&](double t) {
    // Simpson value at the nearest even node below, plus an exact half-pair
    // correction by three-point quadrature.
    double u = t / h;
    std::size_t k = static_cast<std::size_t>(u);
    if (k >= n - 1) return total;
    std::size_t k0 = k - (k % 2);
    double base = cum[k0];
    double t0 = h * static_cast<double>(k0);
    // 5-point Boole integration of speed over [t0, t]
    double span = t - t0;
    if (span <= 0.0) return base;
    double acc = 0.0;
    const double w[5] = {7.0, 32.0, 12.0, 32.0, 7.0};
    for (int j = 0; j < 5; ++j) {
      CurvePoint c = curve(t0 + span * j / 4.0);
      acc += w[j] * std::hypot(c.xd, c.yd);
    }
    return base + span / 90.0 * acc;
  };

  ArcPath out;
  out.s.resize(n);
  out.x_of_s.resize(n);
  out.y_of_s.resize(n);
  out.theta_of_s.resize(n);
  out.kappa_of_s.resize(n);

  const double ds = total / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double target = ds * static_cast<double>(i);
    double t;
    if (i == 0) {
      t = 0.0;
    } else if (i == n - 1) {
      t = t_end;
    } else {
      double lo = 0.0, hi = t_end;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (s_of_t(mid) < target) lo = mid; else hi = mid;
      }
      t = 0.5 * (lo + hi);
    }
    CurvePoint c = curve(t);
    double sp2 = c.xd * c.xd + c.yd * c.yd;
    out.s[i] = target;
    out.x_of_s[i] = c.x;
    out.y_of_s[i] = c.y;
    out.theta_of_s[i] = std::atan2(c.yd, c.xd);
    out.kappa_of_s[i] = (c.xd * c.ydd - c.yd * c.xdd) / (sp2 * std::sqrt(sp2));
  }
  return out;
}

inline ArcPath arc_length_parameterize(const QuinticPath& p, std::size_t n_samples) {
  return arc_length_parameterize_curve(
      [&p](double t) {
        CurvePoint c;
        c.x = p.x(t);
        c.y = p.y(t);
        c.xd = p.v0;
        c.yd = p.y_dot(t);
        c.xdd = 0.0;
        c.ydd = p.y_ddot(t);
        return c;
      },
      p.t_f, n_samples);
}

// Linear interpolation on an increasing (not necessarily uniform) grid,
// clamped at the ends.
inline double interp_path(const std::vector<double>& s, const std::vector<double>& v, double q) {
  if (q <= s.front()) return v.front();
  if (q >= s.back()) return v.back();
  std::size_t lo = 0, hi = s.size() - 1;
  while (hi - lo > 1) {
    std::size_t mid = (lo + hi) / 2;
    if (s[mid] <= q) lo = mid; else hi = mid;
  }
  double w = (q - s[lo]) / (s[lo + 1] - s[lo]);
  return v[lo] + w * (v[lo + 1] - v[lo]);
}

}  // namespace eoam
