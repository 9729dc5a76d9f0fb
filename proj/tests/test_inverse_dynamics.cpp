#include <cmath>
#include <vector>

#include "doctest.h"
#include "eoam/grid.hpp"
#include "eoam/inverse_dynamics.hpp"
#include "eoam/path.hpp"
#include "eoam/vehicle.hpp"

using namespace eoam;

namespace {

ArcPath straight_path(double length) {
  return arc_length_parameterize_curve(
      [](double t) {
        CurvePoint c;
        c.x = t;
        c.y = 0.0;
        c.xd = 1.0;
        c.yd = 0.0;
        c.xdd = c.ydd = 0.0;
        return c;
      },
      length, 101);
}

// exact balance residuals recomputed from the returned arrays, nothing reused
// from the solver internals
struct Residuals {
  double force = 0.0, moment = 0.0;
};

Residuals worst_residuals(const ArcPath& arc, const std::vector<double>& vx,
                          const InverseSolution& sol, const VehicleParams& p) {
  Residuals worst;
  std::size_t n = arc.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!sol.feasible[i]) continue;
    double a_y = arc.kappa_of_s[i] * vx[i] * vx[i];
    double kv_p = (i + 1 < n ? arc.kappa_of_s[i + 1] * vx[i + 1] : arc.kappa_of_s[i] * vx[i]);
    double kv_m = (i > 0 ? arc.kappa_of_s[i - 1] * vx[i - 1] : arc.kappa_of_s[i] * vx[i]);
    double ds = (i == 0)     ? arc.s[1] - arc.s[0]
                : (i == n - 1) ? arc.s[n - 1] - arc.s[n - 2]
                               : arc.s[i + 1] - arc.s[i - 1];
    double psi_ddot = (kv_p - kv_m) / ds * vx[i];
    double cd = std::cos(sol.delta[i]);
    double r_force = sol.f_yr[i] + sol.f_yf[i] * cd - p.m * a_y;
    double r_moment = p.d_f * sol.f_yf[i] * cd - p.d_r * sol.f_yr[i] - p.i_z * psi_ddot;
    worst.force = std::max(worst.force, std::abs(r_force));
    worst.moment = std::max(worst.moment, std::abs(r_moment));
  }
  return worst;
}

}  // namespace

TEST_CASE("straight path needs no steering") {
  VehicleParams p;
  ArcPath arc = straight_path(100.0);
  std::vector<double> vx(arc.size(), 25.0);
  InverseSolution sol = solve_inverse(arc, vx, 1.0, p);
  CHECK(sol.all_feasible());
  for (std::size_t i = 0; i < sol.s.size(); ++i) {
    CHECK(std::abs(sol.delta[i]) < 1e-12);
    CHECK(std::abs(sol.f_yf[i]) < 1e-9);
    CHECK(std::abs(sol.f_yr[i]) < 1e-9);
  }
}

TEST_CASE("balance residuals vanish at every feasible node") {
  VehicleParams p;
  double t_f = maneuver_duration(3.5, 1.0, 0.70);
  QuinticPath q = quintic_lane_change(27.78, t_f, 3.5);
  ArcPath arc = arc_length_parameterize(q, 401);
  std::vector<double> vx(arc.size(), 27.78);
  InverseSolution sol = solve_inverse(arc, vx, 1.0, p);
  REQUIRE(sol.all_feasible());

  Residuals worst = worst_residuals(arc, vx, sol, p);
  CHECK(worst.force < 1e-6 * p.m * kGravity);
  CHECK(worst.moment < 1e-6 * p.i_z);

  SUBCASE("forces stay inside the saturation plateaus") {
    for (std::size_t i = 0; i < sol.s.size(); ++i) {
      CHECK(std::abs(sol.f_yf[i]) <= 1.0 * p.c_alpha_f * p.alpha_star + 1e-9);
      CHECK(std::abs(sol.f_yr[i]) <= 1.0 * p.c_alpha_r * p.alpha_star + 1e-9);
    }
  }
}

TEST_CASE("steering profile has the S shape") {
  VehicleParams p;
  double t_f = maneuver_duration(3.5, 1.0, 0.70);
  QuinticPath q = quintic_lane_change(27.78, t_f, 3.5);
  ArcPath arc = arc_length_parameterize(q, 401);
  std::vector<double> vx(arc.size(), 27.78);
  InverseSolution sol = solve_inverse(arc, vx, 1.0, p);

  // dominant structure: a left lobe followed by a right lobe with a single
  // crossing between the extrema (the short terminal recovery caused by the
  // quintic's nonzero end jerk is not part of the main S)
  std::size_t i_max = 0, i_min = 0;
  for (std::size_t i = 0; i < sol.delta.size(); ++i) {
    if (sol.delta[i] > sol.delta[i_max]) i_max = i;
    if (sol.delta[i] < sol.delta[i_min]) i_min = i;
  }
  CHECK(sol.delta[i_max] > 0.0);
  CHECK(sol.delta[i_min] < 0.0);
  CHECK(i_max < i_min);
  int crossings = 0;
  for (std::size_t i = i_max; i + 1 <= i_min; ++i)
    if ((sol.delta[i] > 0.0) != (sol.delta[i + 1] > 0.0)) ++crossings;
  CHECK(crossings == 1);
  CHECK(std::abs(sol.delta[i_min]) > 0.5 * sol.delta[i_max]);
}

TEST_CASE("open-loop replay lands near the target offset") {
  // quasi-steady approximation bound: replaying delta(s) open loop at the
  // design speed reproduces the lateral endpoint within 10% of y_f
  VehicleParams p;
  double t_f = maneuver_duration(3.5, 1.0, 0.70);
  QuinticPath q = quintic_lane_change(27.78, t_f, 3.5);
  ArcPath arc = arc_length_parameterize(q, 401);
  std::vector<double> vx(arc.size(), 27.78);
  InverseSolution sol = solve_inverse(arc, vx, 1.0, p);
  REQUIRE(sol.all_feasible());

  VehicleState s;
  s.v_x = 27.78;
  double travelled = 0.0;
  double dt = 1e-3;
  while (travelled < arc.total_length()) {
    double delta = interp_path(sol.s, sol.delta, travelled);
    TireForces f = tire_forces(s, delta, 1.0, p);
    ControlInput u{f.front * std::sin(delta), delta};  // cancel the steer drag
    s = step(s, u, 1.0, dt, p);
    travelled += s.speed() * dt;
  }
  CHECK(std::abs(s.y - 3.5) < 0.35);
}

TEST_CASE("acceleration envelope") {
  VehicleParams p;
  double mu = 1.0;
  double fy_max_r = mu * p.c_alpha_r * p.alpha_star;
  double fx_max = mu * std::abs(p.f_t_min_brk);

  InverseSolution sol;
  sol.s = {0.0, 1.0, 2.0};
  sol.f_yr = {0.0, fy_max_r, 0.6 * fy_max_r};
  sol.f_yf = {0.0, 0.0, 0.0};
  sol.delta = {0.0, 0.0, 0.0};
  sol.alpha_f = sol.alpha_r = {0.0, 0.0, 0.0};
  sol.feasible = {true, true, true};
  std::vector<double> vx{27.78, 27.78, 27.78};

  AccelEnvelope env = accel_envelope(sol, vx, mu, p);

  SUBCASE("unloaded ellipse") {
    CHECK(env.ax_max[0] == doctest::Approx(std::min(mu * p.f_t_max_eng, fx_max) / p.m));
    CHECK(env.ax_min[0] == doctest::Approx(-fx_max / p.m));
  }
  SUBCASE("plateau leaves no longitudinal capacity") {
    CHECK(env.ax_max[1] == doctest::Approx(0.0));
    CHECK(env.ax_min[1] == doctest::Approx(0.0));
    CHECK_FALSE(env.empty[1]);
  }
  SUBCASE("matches a dense ellipse-intersection oracle") {
    // brute force: largest |u1| with (u1/fx_max)^2 + (f_yr/fy_max)^2 <= 1
    double best = 0.0;
    for (int i = 0; i <= 2000000; ++i) {
      double u1 = fx_max * i / 2000000.0;
      double g3 = (u1 / fx_max) * (u1 / fx_max) + 0.36 - 1.0;
      if (g3 <= 0.0) best = u1;
    }
    CHECK(env.ax_min[2] == doctest::Approx(-best / p.m).epsilon(1e-3));
    CHECK(env.ax_max[2] ==
          doctest::Approx(std::min(mu * p.f_t_max_eng, best) / p.m).epsilon(1e-3));
  }
  SUBCASE("envelope widens with mu") {
    AccelEnvelope lo = accel_envelope(sol, vx, 0.99, p);
    // same normalized rear load: scale f_yr with mu for a fair comparison
    InverseSolution scaled = sol;
    for (auto& f : scaled.f_yr) f *= 0.5;
    AccelEnvelope half = accel_envelope(scaled, vx, 0.5, p);
    for (std::size_t i = 0; i < env.s.size(); ++i) {
      CHECK(half.ax_max[i] <= env.ax_max[i] + 1e-12);
      CHECK(half.ax_min[i] >= env.ax_min[i] - 1e-12);
    }
    (void)lo;
  }
}

TEST_CASE("mu monotonicity of the envelope along a real maneuver") {
  VehicleParams p;
  double t_f = maneuver_duration(3.5, 0.7, 0.70);
  QuinticPath q = quintic_lane_change(20.0, t_f, 3.5);
  ArcPath arc = arc_length_parameterize(q, 401);
  std::vector<double> vx(arc.size(), 20.0);
  InverseSolution hi = solve_inverse(arc, vx, 0.9, p);
  InverseSolution lo = solve_inverse(arc, vx, 0.7, p);
  REQUIRE(hi.all_feasible());
  REQUIRE(lo.all_feasible());
  AccelEnvelope env_hi = accel_envelope(hi, vx, 0.9, p);
  AccelEnvelope env_lo = accel_envelope(lo, vx, 0.7, p);
  for (std::size_t i = 0; i < env_hi.s.size(); ++i) {
    CHECK(env_hi.ax_max[i] >= env_lo.ax_max[i] - 1e-9);
    CHECK(env_hi.ax_min[i] <= env_lo.ax_min[i] + 1e-9);
  }
}

TEST_CASE("saturated demand marks samples infeasible") {
  VehicleParams p;
  // demand far beyond what mu = 0.1 tires can hold
  double t_f = maneuver_duration(3.5, 1.0, 0.70);
  QuinticPath q = quintic_lane_change(27.78, t_f, 3.5);
  ArcPath arc = arc_length_parameterize(q, 401);
  std::vector<double> vx(arc.size(), 27.78);
  InverseSolution sol = solve_inverse(arc, vx, 0.1, p);
  CHECK_FALSE(sol.all_feasible());

  SUBCASE("speed profile below the validity floor is rejected") {
    std::vector<double> slow(arc.size(), 0.5);
    CHECK_THROWS_AS(solve_inverse(arc, slow, 1.0, p), std::domain_error);
  }
}
