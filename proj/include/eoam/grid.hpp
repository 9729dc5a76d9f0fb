#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "eoam/inverse_dynamics.hpp"
#include "eoam/ocp.hpp"
#include "eoam/path.hpp"
#include "eoam/units.hpp"
#include "eoam/vehicle.hpp"

namespace eoam {

// Offline pipeline settings for one table build: speed range, friction pages,
// lane geometry and the maneuver aggressiveness.
struct GridSpec {
  std::vector<double> speeds;  // m/s, ascending
  std::vector<double> mus;     // pages, any order, deduplicated ascending on build
  double y_f = 3.5;            // m, lane change offset
  double lat_accel_frac = 0.70;  // peak quintic lateral accel as a fraction of mu*g
  std::size_t path_samples = 401;
  int workers = 0;  // 0 = hardware concurrency

  void validate() const {
    if (speeds.empty() || mus.empty())
      throw std::invalid_argument("grid: speeds and mus must be non-empty");
    for (double v : speeds)
      if (!(v >= 12.0)) throw std::invalid_argument("grid: speeds must be >= 12 m/s");
    for (double m : mus)
      if (!(m > 0.0 && m <= 1.0)) throw std::invalid_argument("grid: mu must be in (0, 1]");
    if (!(y_f > 0.0)) throw std::invalid_argument("grid: y_f must be positive");
    if (!(lat_accel_frac > 0.0 && lat_accel_frac < 1.2))
      throw std::invalid_argument("grid: lat_accel_frac out of range");
  }

  static std::vector<double> default_speeds() {
    std::vector<double> v;
    for (double s = 12.0; s <= 46.0 + 1e-9; s += 2.0) v.push_back(s);
    return v;
  }
  static std::vector<double> default_mus() { return {1.0, 0.7, 0.3, 0.1}; }
};

// Maneuver duration from the peak-lateral-acceleration pin: the rest-to-rest
// quintic peaks at 10/sqrt(3) * y_f / t_f^2.
inline double maneuver_duration(double y_f, double mu, double lat_accel_frac) {
  double peak = 10.0 / std::sqrt(3.0) * y_f;
  return std::sqrt(peak / (lat_accel_frac * mu * kGravity));
}

struct GridPoint {
  double speed = 0.0;  // m/s
  double mu = 1.0;
  OcpStatus status = OcpStatus::Ok;
  std::string message;
  FullTrajectory suboptimal;
  FullTrajectory constant_speed;
  InverseSolution steering;
  double t_f_path = 0.0;  // s, quintic duration used
};

using GridResult = std::vector<GridPoint>;

inline GridPoint build_grid_point(double speed, double mu, const VehicleParams& params,
                                  const GridSpec& spec) {
  GridPoint pt;
  pt.speed = speed;
  pt.mu = mu;
  pt.t_f_path = maneuver_duration(spec.y_f, mu, spec.lat_accel_frac);
  try {
    QuinticPath q = quintic_lane_change(speed, pt.t_f_path, spec.y_f);
    ArcPath arc = arc_length_parameterize(q, spec.path_samples);
    std::vector<double> vx(arc.size(), speed);
    pt.steering = solve_inverse(arc, vx, mu, params);
    if (!pt.steering.all_feasible()) {
      pt.status = OcpStatus::Infeasible;
      pt.message = "no steering maneuver available";
      return pt;
    }
    OcpSpec ospec;
    ospec.x_dot_0 = speed;
    ospec.mu = mu;
    ospec.y_f = spec.y_f;
    ospec.params = params;
    pt.suboptimal = solve_ocp(ospec, pt.steering);
    pt.status = pt.suboptimal.status;
    if (pt.status == OcpStatus::Ok || pt.status == OcpStatus::IterLimit)
      pt.constant_speed = constant_speed_trajectory(ospec, pt.steering);
  } catch (const std::exception& e) {
    pt.status = OcpStatus::Infeasible;
    pt.message = e.what();
  }
  return pt;
}

// One trajectory pair per (speed, mu). Points are independent; they are
// distributed over a fixed worker pool and written to preassigned slots, so
// the result does not depend on the worker count.
inline GridResult generate_grid(const std::vector<double>& speeds,
                                const std::vector<double>& mus,
                                const VehicleParams& params, const GridSpec& spec) {
  GridSpec local = spec;
  local.speeds = speeds;
  local.mus = mus;
  local.validate();
  params.validate();

  GridResult grid(speeds.size() * mus.size());
  std::atomic<std::size_t> next{0};
  unsigned workers = spec.workers > 0 ? static_cast<unsigned>(spec.workers)
                                      : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(grid.size()));

  auto work = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      double mu = mus[i / speeds.size()];
      double speed = speeds[i % speeds.size()];
      grid[i] = build_grid_point(speed, mu, params, local);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return grid;
}

}  // namespace eoam
