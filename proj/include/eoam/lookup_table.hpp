#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eoam/grid.hpp"
#include "eoam/io.hpp"

namespace eoam {

// Offline lane-change references: four value planes over speed x differential
// x-distance, one page per surface mu. Steering angle is deliberately not a
// plane; the runtime rebuilds it from curvature and the controllers.

enum class TablePlane : int { YTarget = 0, AxTarget, ThetaTarget, KappaTarget };
inline constexpr int kNumPlanes = 4;
inline constexpr const char* kPlaneNames[kNumPlanes] = {"y_target", "ax_target",
                                                        "theta_target", "kappa_target"};

struct TableQuery {
  double y_target = 0.0;
  double ax_target = 0.0;
  double theta_target = 0.0;
  double kappa_target = 0.0;
  bool clamped = false;
};

class LookupTable3D {
 public:
  LookupTable3D() = default;
  LookupTable3D(const LookupTable3D& o)
      : speeds(o.speeds), dxs(o.dxs), mus(o.mus), data(o.data), row_status(o.row_status),
        row_maneuver_len(o.row_maneuver_len) {}
  LookupTable3D& operator=(const LookupTable3D& o) {
    speeds = o.speeds;
    dxs = o.dxs;
    mus = o.mus;
    data = o.data;
    row_status = o.row_status;
    row_maneuver_len = o.row_maneuver_len;
    clamp_count_ = 0;
    return *this;
  }

  std::vector<double> speeds;  // m/s, ascending
  std::vector<double> dxs;     // m, ascending from 0
  std::vector<double> mus;     // ascending pages
  std::vector<double> data;    // [plane][mu][speed][dx]
  std::vector<std::string> row_status;   // per (mu, speed)
  std::vector<double> row_maneuver_len;  // m, lane-change segment length per row

  double& at(int plane, std::size_t i_mu, std::size_t i_speed, std::size_t i_dx) {
    return data[((static_cast<std::size_t>(plane) * mus.size() + i_mu) * speeds.size() + i_speed) *
                    dxs.size() +
                i_dx];
  }
  double at(int plane, std::size_t i_mu, std::size_t i_speed, std::size_t i_dx) const {
    return data[((static_cast<std::size_t>(plane) * mus.size() + i_mu) * speeds.size() + i_speed) *
                    dxs.size() +
                i_dx];
  }

  std::uint64_t clamp_events() const { return clamp_count_.load(); }
  void note_clamp() const { clamp_count_.fetch_add(1, std::memory_order_relaxed); }

 private:
  mutable std::atomic<std::uint64_t> clamp_count_{0};
};

namespace table_detail {

struct AxisPos {
  std::size_t i = 0;
  double w = 0.0;
  bool clamped = false;
};

inline AxisPos locate(const std::vector<double>& axis, double q) {
  AxisPos p;
  if (axis.size() == 1 || q <= axis.front()) {
    p.clamped = q < axis.front() - 1e-12;
    return p;
  }
  if (q >= axis.back()) {
    p.i = axis.size() - 2;
    p.w = 1.0;
    p.clamped = q > axis.back() + 1e-12;
    return p;
  }
  std::size_t lo = 0, hi = axis.size() - 1;
  while (hi - lo > 1) {
    std::size_t mid = (lo + hi) / 2;
    if (axis[mid] <= q) lo = mid; else hi = mid;
  }
  p.i = lo;
  p.w = (q - axis[lo]) / (axis[lo + 1] - axis[lo]);
  return p;
}

}  // namespace table_detail

// Bilinear in (speed, dx), linear across mu pages. Queries outside the hull
// clamp to the boundary and bump the table's clamp counter.
inline TableQuery interpolate(const LookupTable3D& t, double speed, double dx, double mu) {
  using table_detail::locate;
  table_detail::AxisPos ps = locate(t.speeds, speed);
  table_detail::AxisPos px = locate(t.dxs, dx);
  table_detail::AxisPos pm = locate(t.mus, mu);

  TableQuery q;
  q.clamped = ps.clamped || px.clamped || pm.clamped;
  if (q.clamped) t.note_clamp();

  // endpoint-exact blend so grid-node queries return stored values bit for bit
  auto lerp = [](double a, double b, double w) {
    return w == 0.0 ? a : (w == 1.0 ? b : a + w * (b - a));
  };
  auto plane_value = [&](int plane) {
    auto corner = [&](std::size_t im, std::size_t is, std::size_t ix) {
      return t.at(plane, im, is, ix);
    };
    auto bilinear = [&](std::size_t im) {
      std::size_t s1 = t.speeds.size() > 1 ? ps.i + 1 : ps.i;
      std::size_t x1 = t.dxs.size() > 1 ? px.i + 1 : px.i;
      double a = lerp(corner(im, ps.i, px.i), corner(im, ps.i, x1), px.w);
      double b = lerp(corner(im, s1, px.i), corner(im, s1, x1), px.w);
      return lerp(a, b, ps.w);
    };
    double v0 = bilinear(pm.i);
    if (t.mus.size() == 1 || pm.w == 0.0) return v0;
    return lerp(v0, bilinear(pm.i + 1), pm.w);
  };

  q.y_target = plane_value(static_cast<int>(TablePlane::YTarget));
  q.ax_target = plane_value(static_cast<int>(TablePlane::AxTarget));
  q.theta_target = plane_value(static_cast<int>(TablePlane::ThetaTarget));
  q.kappa_target = plane_value(static_cast<int>(TablePlane::KappaTarget));
  return q;
}

// Resample every grid trajectory onto shared speed/dx axes. Rows without a
// steering maneuver are filled with neutral references and flagged, and the
// planes hold their terminal values beyond each maneuver's length.
inline LookupTable3D build_lookup_tables(const GridResult& grid, double dx_step = 1.0) {
  if (grid.empty()) throw std::invalid_argument("build_lookup_tables: empty grid");

  LookupTable3D t;
  for (const GridPoint& pt : grid) {
    bool have_mu = false, have_speed = false;
    for (double m : t.mus) have_mu |= std::abs(m - pt.mu) < 1e-12;
    for (double s : t.speeds) have_speed |= std::abs(s - pt.speed) < 1e-12;
    if (!have_mu) t.mus.push_back(pt.mu);
    if (!have_speed) t.speeds.push_back(pt.speed);
  }
  std::sort(t.mus.begin(), t.mus.end());
  std::sort(t.speeds.begin(), t.speeds.end());
  if (t.mus.size() * t.speeds.size() != grid.size())
    throw std::invalid_argument("build_lookup_tables: grid is not a full speed x mu matrix");

  double dx_max = 0.0;
  for (const GridPoint& pt : grid)
    if (!pt.suboptimal.empty()) dx_max = std::max(dx_max, pt.suboptimal.dx.back());
  if (dx_max <= 0.0) throw std::runtime_error("build_lookup_tables: no usable trajectories");
  std::size_t n_dx = static_cast<std::size_t>(std::ceil(dx_max / dx_step)) + 1;
  t.dxs.resize(n_dx);
  for (std::size_t i = 0; i < n_dx; ++i) t.dxs[i] = dx_step * static_cast<double>(i);

  t.data.assign(static_cast<std::size_t>(kNumPlanes) * t.mus.size() * t.speeds.size() * n_dx, 0.0);
  t.row_status.assign(t.mus.size() * t.speeds.size(), "missing");
  t.row_maneuver_len.assign(t.mus.size() * t.speeds.size(), 0.0);

  auto axis_index = [](const std::vector<double>& axis, double v) {
    for (std::size_t i = 0; i < axis.size(); ++i)
      if (std::abs(axis[i] - v) < 1e-12) return i;
    throw std::logic_error("axis value lookup failed");
  };

  for (const GridPoint& pt : grid) {
    std::size_t im = axis_index(t.mus, pt.mu);
    std::size_t is = axis_index(t.speeds, pt.speed);
    std::size_t row = im * t.speeds.size() + is;
    t.row_status[row] = to_string(pt.status);
    if (pt.suboptimal.empty()) continue;
    const FullTrajectory& tr = pt.suboptimal;
    t.row_maneuver_len[row] = tr.dx.back();
    for (std::size_t ix = 0; ix < n_dx; ++ix) {
      double dx = t.dxs[ix];
      t.at(0, im, is, ix) = interp_path(tr.dx, tr.y_target, dx);
      t.at(1, im, is, ix) = interp_path(tr.dx, tr.ax_target, dx);
      t.at(2, im, is, ix) = interp_path(tr.dx, tr.theta_target, dx);
      t.at(3, im, is, ix) = interp_path(tr.dx, tr.kappa_target, dx);
    }
  }
  return t;
}

inline std::string serialize_table_payload(const LookupTable3D& t) {
  std::ostringstream ss;
  ss << "units speed=m/s dx=m mu=- y_target=m ax_target=m/s^2 theta_target=rad kappa_target=1/m\n";
  auto axis = [&ss](const char* name, const std::vector<double>& v) {
    ss << name << " " << v.size();
    for (double x : v) ss << " " << fmt_double(x);
    ss << "\n";
  };
  axis("mus", t.mus);
  axis("speeds", t.speeds);
  axis("dx", t.dxs);
  ss << "row_status " << t.row_status.size();
  for (const auto& s : t.row_status) ss << " " << s;
  ss << "\n";
  axis("row_maneuver_len", t.row_maneuver_len);
  for (int plane = 0; plane < kNumPlanes; ++plane) {
    ss << "plane " << kPlaneNames[plane] << "\n";
    for (std::size_t im = 0; im < t.mus.size(); ++im) {
      for (std::size_t is = 0; is < t.speeds.size(); ++is) {
        for (std::size_t ix = 0; ix < t.dxs.size(); ++ix) {
          if (ix) ss << " ";
          ss << fmt_double(t.at(plane, im, is, ix));
        }
        ss << "\n";
      }
    }
  }
  return ss.str();
}

inline std::string serialize_table(const LookupTable3D& t) {
  std::string payload = serialize_table_payload(t);
  std::ostringstream ss;
  ss << "EOAM_TABLE3D v1\n";
  ss << "provenance " << hash_to_hex(fnv1a64(payload)) << "\n";
  ss << payload;
  return ss.str();
}

inline std::uint64_t table_provenance(const LookupTable3D& t) {
  return fnv1a64(serialize_table_payload(t));
}

inline LookupTable3D parse_table(const std::string& text) {
  std::istringstream ss(text);
  std::string magic, version;
  ss >> magic >> version;
  if (magic != "EOAM_TABLE3D" || version != "v1")
    throw std::runtime_error("lookup table: bad header");
  std::string key;
  ss >> key;
  if (key != "provenance") throw std::runtime_error("lookup table: missing provenance");
  std::string hash_hex;
  ss >> hash_hex;
  std::string rest_of_line;
  std::getline(ss, rest_of_line);
  std::string payload;
  {
    std::ostringstream rest;
    rest << ss.rdbuf();
    payload = rest.str();
  }
  if (hash_to_hex(fnv1a64(payload)) != hash_hex)
    throw std::runtime_error("lookup table: provenance hash mismatch, file corrupted");

  std::istringstream ps(payload);
  LookupTable3D t;
  auto read_axis = [&ps](std::vector<double>& v) {
    std::size_t n;
    ps >> n;
    v.resize(n);
    for (auto& x : v) {
      std::string tok;
      ps >> tok;
      x = std::stod(tok);
    }
  };
  while (ps >> key) {
    if (key == "units") { std::string line; std::getline(ps, line); }
    else if (key == "mus") read_axis(t.mus);
    else if (key == "speeds") read_axis(t.speeds);
    else if (key == "dx") read_axis(t.dxs);
    else if (key == "row_maneuver_len") read_axis(t.row_maneuver_len);
    else if (key == "row_status") {
      std::size_t n;
      ps >> n;
      t.row_status.resize(n);
      for (auto& s : t.row_status) ps >> s;
    } else if (key == "plane") {
      std::string name;
      ps >> name;
      int plane = -1;
      for (int i = 0; i < kNumPlanes; ++i)
        if (name == kPlaneNames[i]) plane = i;
      if (plane < 0) throw std::runtime_error("lookup table: unknown plane " + name);
      if (t.data.empty())
        t.data.assign(static_cast<std::size_t>(kNumPlanes) * t.mus.size() * t.speeds.size() *
                          t.dxs.size(),
                      0.0);
      for (std::size_t im = 0; im < t.mus.size(); ++im)
        for (std::size_t is = 0; is < t.speeds.size(); ++is)
          for (std::size_t ix = 0; ix < t.dxs.size(); ++ix) {
            std::string tok;
            if (!(ps >> tok)) throw std::runtime_error("lookup table: truncated plane data");
            t.at(plane, im, is, ix) = std::stod(tok);
          }
    } else {
      throw std::runtime_error("lookup table: unknown key '" + key + "'");
    }
  }
  if (t.data.empty()) throw std::runtime_error("lookup table: no plane data");
  return t;
}

}  // namespace eoam
