#include <cmath>
#include <vector>

#include "doctest.h"
#include "eoam/path.hpp"

using namespace eoam;

TEST_CASE("quintic boundary conditions") {
  QuinticPath q = quintic_lane_change(20.0, 2.5, 3.5);
  CHECK(std::abs(q.y(0.0)) < 1e-9);
  CHECK(std::abs(q.y_dot(0.0)) < 1e-9);
  CHECK(std::abs(q.y_ddot(0.0)) < 1e-9);
  CHECK(std::abs(q.y(2.5) - 3.5) < 1e-9);
  CHECK(std::abs(q.y_dot(2.5)) < 1e-9);
  CHECK(std::abs(q.y_ddot(2.5)) < 1e-9);
  CHECK(std::abs(q.y(1.25) - 1.75) < 1e-9);  // antisymmetry about the midpoint

  CHECK_THROWS_AS(quintic_lane_change(0.0, 2.5, 3.5), std::invalid_argument);
  CHECK_THROWS_AS(quintic_lane_change(20.0, -1.0, 3.5), std::invalid_argument);
}

TEST_CASE("quintic peak lateral rate") {
  QuinticPath q = quintic_lane_change(20.0, 2.5, 3.5);
  // dense-sampling oracle for max |y_dot|
  double peak = 0.0;
  for (int i = 0; i <= 100000; ++i)
    peak = std::max(peak, std::abs(q.y_dot(2.5 * i / 100000.0)));
  double closed_form = 15.0 * 3.5 / (8.0 * 2.5);
  CHECK(peak == doctest::Approx(closed_form).epsilon(1e-8));
}

TEST_CASE("arc length of elementary curves") {
  SUBCASE("straight segment") {
    ArcPath arc = arc_length_parameterize_curve(
        [](double t) {
          CurvePoint c;
          c.x = 3.0 * t;
          c.y = 4.0 * t;
          c.xd = 3.0;
          c.yd = 4.0;
          c.xdd = c.ydd = 0.0;
          return c;
        },
        10.0, 101);
    CHECK(arc.total_length() == doctest::Approx(50.0).epsilon(1e-10));
    for (double k : arc.kappa_of_s) CHECK(std::abs(k) < 1e-12);
  }
  SUBCASE("quarter circle") {
    double r = 50.0;
    ArcPath arc = arc_length_parameterize_curve(
        [r](double t) {
          CurvePoint c;
          c.x = r * std::sin(t);
          c.y = r * (1.0 - std::cos(t));
          c.xd = r * std::cos(t);
          c.yd = r * std::sin(t);
          c.xdd = -r * std::sin(t);
          c.ydd = r * std::cos(t);
          return c;
        },
        kPi / 2.0, 201);
    CHECK(arc.total_length() == doctest::Approx(kPi * r / 2.0).epsilon(1e-9));
    for (double k : arc.kappa_of_s) CHECK(k == doctest::Approx(1.0 / r).epsilon(1e-9));
  }
  SUBCASE("sample count precondition") {
    QuinticPath q = quintic_lane_change(20.0, 2.5, 3.5);
    CHECK_THROWS_AS(arc_length_parameterize(q, 10), std::invalid_argument);
  }
}

TEST_CASE("arc length against a brute-force quadrature oracle") {
  QuinticPath q = quintic_lane_change(27.78, 2.0, 3.5);
  ArcPath arc = arc_length_parameterize(q, 401);

  // 1e6-sample trapezoid of the speed
  const int n = 1000000;
  double h = q.t_f / n;
  double total = 0.0;
  double prev = std::hypot(q.v0, q.y_dot(0.0));
  for (int i = 1; i <= n; ++i) {
    double sp = std::hypot(q.v0, q.y_dot(h * i));
    total += 0.5 * h * (prev + sp);
    prev = sp;
  }
  CHECK(std::abs(arc.total_length() - total) < 1e-4);
  CHECK(arc.total_length() > 27.78 * 2.0);  // slightly above the straight chord
}

TEST_CASE("curvature closed form") {
  QuinticPath q = quintic_lane_change(20.0, 2.5, 3.5);
  CHECK(curvature_at(q, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(curvature_at(q, 2.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(curvature_at(q, -0.1), std::out_of_range);
  CHECK_THROWS_AS(curvature_at(q, 2.6), std::out_of_range);

  // finite-difference oracle: kappa = theta_dot / speed
  double t = 1.25, h = 1e-5;
  double th_p = path_yaw_at(q, t + h), th_m = path_yaw_at(q, t - h);
  double speed = std::hypot(q.v0, q.y_dot(t));
  double kappa_fd = (th_p - th_m) / (2.0 * h) / speed;
  CHECK(curvature_at(q, t) == doctest::Approx(kappa_fd).epsilon(1e-6));
}

TEST_CASE("arc path reconstruction round trip") {
  QuinticPath q = quintic_lane_change(27.78, 2.0, 3.5);
  ArcPath arc = arc_length_parameterize(q, 401);

  // theta from the curvature integral (Simpson over sample pairs, trapezoid
  // for the odd in-between points)
  std::vector<double> theta_rec(arc.size(), 0.0);
  for (std::size_t i = 2; i < arc.size(); i += 2) {
    double h = arc.s[i] - arc.s[i - 2];
    theta_rec[i] = theta_rec[i - 2] + h / 6.0 * (arc.kappa_of_s[i - 2] +
                                                 4.0 * arc.kappa_of_s[i - 1] + arc.kappa_of_s[i]);
  }
  for (std::size_t i = 1; i < arc.size(); i += 2) {
    double ds = arc.s[i] - arc.s[i - 1];
    theta_rec[i] = theta_rec[i - 1] + 0.5 * ds * (arc.kappa_of_s[i - 1] + arc.kappa_of_s[i]);
  }
  for (std::size_t i = 0; i < arc.size(); i += 2)
    CHECK(std::abs(theta_rec[i] - arc.theta_of_s[i]) < 1e-6);

  // position from the tangent integrals
  double x = arc.x_of_s[0], y = arc.y_of_s[0];
  double worst = 0.0;
  for (std::size_t i = 1; i < arc.size(); ++i) {
    double ds = arc.s[i] - arc.s[i - 1];
    x += 0.5 * ds * (std::cos(arc.theta_of_s[i - 1]) + std::cos(arc.theta_of_s[i]));
    y += 0.5 * ds * (std::sin(arc.theta_of_s[i - 1]) + std::sin(arc.theta_of_s[i]));
    worst = std::max(worst, std::hypot(x - arc.x_of_s[i], y - arc.y_of_s[i]));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("lane change curvature changes sign exactly once") {
  QuinticPath q = quintic_lane_change(22.0, 1.9, 3.5);
  ArcPath arc = arc_length_parameterize(q, 401);
  int sign_changes = 0;
  double prev = 0.0;
  for (double k : arc.kappa_of_s) {
    if (std::abs(k) < 1e-6) continue;
    if (prev != 0.0 && (k > 0) != (prev > 0)) ++sign_changes;
    prev = k;
  }
  CHECK(sign_changes == 1);
}

TEST_CASE("speed scaling of the quintic") {
  QuinticPath a = quintic_lane_change(15.0, 2.2, 3.5);
  QuinticPath b = quintic_lane_change(30.0, 2.2, 3.5);
  for (int i = 0; i <= 20; ++i) {
    double t = 2.2 * i / 20.0;
    CHECK(a.y(t) == doctest::Approx(b.y(t)).epsilon(1e-14));  // lateral profile untouched
  }
  double la = arc_length_parameterize(a, 201).total_length();
  double lb = arc_length_parameterize(b, 201).total_length();
  CHECK(lb < 2.0 * la);
  CHECK(lb > la);
}
