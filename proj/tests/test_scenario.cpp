#include <cmath>

#include "doctest.h"
#include "eoam/grid.hpp"
#include "eoam/outputs.hpp"
#include "eoam/scenario.hpp"

using namespace eoam;

namespace {

struct Stack {
  VehicleParams params;
  LookupTable3D table;
  std::vector<PhaseDiagram> diagrams;
};

// one mu=1.0 stack covering the trigger speeds of a 120 km/h baseline
const Stack& dry_stack() {
  static Stack s = [] {
    Stack st;
    GridSpec spec;
    GridResult grid = generate_grid({12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34},
                                    {1.0}, st.params, spec);
    st.table = build_lookup_tables(grid, 1.0);
    st.diagrams.push_back(build_phase_diagram(grid, 1.0, st.params, BufferPolicy{1.15}, 2.0));
    return st;
  }();
  return s;
}

}  // namespace

TEST_CASE("sensor scan") {
  VehicleParams p;
  SensorSpec sensor;
  VehicleState ego;
  ego.v_x = 20.0;

  SUBCASE("object beyond range is not reported") {
    WorldObject far;
    far.x = 200.0;
    auto dets = sensor_scan(ego, {far}, sensor, 3.5, 0.0, p);
    CHECK(dets.empty());
  }
  SUBCASE("object outside the cone is not reported") {
    WorldObject side;
    side.x = 20.0;
    side.y = 30.0;  // bearing way beyond 20 degrees
    auto dets = sensor_scan(ego, {side}, sensor, 3.5, 0.0, p);
    CHECK(dets.empty());
  }
  SUBCASE("parked cars are flagged out of lane") {
    WorldObject parked;
    parked.role = ObjectRole::Parked;
    parked.x = 80.0;
    parked.y = -0.5 * 3.5 - 1.5 - 0.95;
    auto dets = sensor_scan(ego, {parked}, sensor, 3.5, 0.0, p);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].out_of_lane);
    CHECK_FALSE(dets[0].in_travel_lane);
    CHECK_FALSE(dets[0].oncoming);
  }
  SUBCASE("closing in-lane object at 100 m") {
    WorldObject aro;
    aro.x = 100.0 + 0.5 * aro.length + p.len_front;
    aro.speed = 20.0 - 11.1;
    auto dets = sensor_scan(ego, {aro}, sensor, 3.5, 0.0, p);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].rel_dist == doctest::Approx(100.0));
    CHECK(dets[0].rel_speed == doctest::Approx(11.1));
    CHECK(dets[0].in_travel_lane);
    CHECK_FALSE(dets[0].oncoming);
  }
  SUBCASE("opposing traffic carries the oncoming flag") {
    WorldObject onc;
    onc.role = ObjectRole::OncomingAro;
    onc.x = 120.0;
    onc.y = 3.5;
    onc.heading = kPi;
    onc.speed = 20.0;
    auto dets = sensor_scan(ego, {onc}, sensor, 3.5, 0.0, p);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].oncoming);
    CHECK(dets[0].rel_speed == doctest::Approx(40.0));
  }
}

TEST_CASE("in-lane object speed schedule") {
  ScenarioConfig cfg;
  CHECK(aro_speed_profile(0.0, cfg) == doctest::Approx(kmh_to_ms(60.0)).epsilon(1e-12));
  double stop_time = cfg.aro_brake_start + cfg.aro_init_speed / cfg.aro_decel;
  CHECK(aro_speed_profile(stop_time, cfg) == doctest::Approx(0.0));
  CHECK(aro_speed_profile(stop_time + 5.0, cfg) == 0.0);
  double mid = cfg.aro_brake_start + 1.0;
  CHECK(aro_speed_profile(mid, cfg) == doctest::Approx(cfg.aro_init_speed - cfg.aro_decel));
  CHECK_THROWS_AS(aro_speed_profile(-0.1, cfg), std::invalid_argument);
}

TEST_CASE("oriented rectangle collision") {
  VehicleParams p;
  VehicleState ego;

  SUBCASE("disjoint") {
    WorldObject obj;
    obj.x = 50.0;
    CHECK_FALSE(collision_check(ego, p, obj, 0.0).has_value());
  }
  SUBCASE("coincident") {
    WorldObject obj;
    obj.x = 0.0;
    auto c = collision_check(ego, p, obj, 1.5);
    REQUIRE(c.has_value());
    CHECK(c->time == 1.5);
  }
  SUBCASE("corner tangency from the clearing geometry") {
    // front-right ego corner exactly at the obstacle's rear-left corner
    double corner_x = p.len_front;
    double corner_y = -0.5 * p.wid_ego;
    WorldObject obj;
    obj.length = 4.8;
    obj.width = 2.0;
    obj.x = corner_x + 0.5 * obj.length;
    obj.y = corner_y - 0.5 * obj.width;
    CHECK(collision_check(ego, p, obj, 0.0).has_value());  // zero clearance grazes
    obj.y -= 1e-3;                                         // one millimetre of air
    CHECK_FALSE(collision_check(ego, p, obj, 0.0).has_value());
  }
  SUBCASE("frontal face classification") {
    WorldObject obj;
    obj.x = p.len_front + 0.5 * obj.length - 0.05;  // shallow frontal overlap
    auto c = collision_check(ego, p, obj, 0.0);
    REQUIRE(c.has_value());
    CHECK(c->frontal);
    WorldObject side;
    side.x = 0.0;
    side.y = 0.5 * p.wid_ego + 0.5 * side.width - 0.05;  // shallow side overlap
    auto cs = collision_check(ego, p, side, 0.0);
    REQUIRE(cs.has_value());
    CHECK_FALSE(cs->frontal);
  }
}

TEST_CASE("baseline closed loop at 120 km/h on the dry surface") {
  const Stack& st = dry_stack();
  ScenarioConfig cfg;
  cfg.ego_speed = kmh_to_ms(120.0);
  cfg.mu = 1.0;
  ScenarioResult r = run_scenario(cfg, st.params, st.table, st.diagrams);

  CHECK(r.outcome == Outcome::Green);
  CHECK(r.steer_triggered);
  CHECK(r.return_completed);
  CHECK(r.handback);
  CHECK_FALSE(r.contact.has_value());
  CHECK(r.min_gap > 0.0);

  SUBCASE("mode sequence goes brake, steer, return, handback") {
    std::vector<EoamMode> modes;
    for (const auto& m : r.mode_trace) modes.push_back(m.mode);
    REQUIRE(modes.size() == 5);
    CHECK(modes[0] == EoamMode::Normal);
    CHECK(modes[1] == EoamMode::UpdateBrake);
    CHECK(modes[2] == EoamMode::UpdateSteerBrake);
    CHECK(modes[3] == EoamMode::Return);
    CHECK(modes[4] == EoamMode::Normal);
  }
  SUBCASE("phase trace moves left and down before the intervention") {
    double t_intervention = 0.0;
    for (const auto& m : r.mode_trace)
      if (m.mode == EoamMode::UpdateBrake) t_intervention = m.t;
    double prev_d = 1e18;
    for (const auto& ptp : r.phase_trace) {
      if (ptp.t >= t_intervention) break;
      CHECK(ptp.rel_dist <= prev_d + 1e-9);
      prev_d = ptp.rel_dist;
    }
  }
  SUBCASE("phase trace truncates when the object leaves the field of view") {
    REQUIRE(!r.phase_trace.empty());
    double t_last = r.phase_trace.back().t;
    CHECK(t_last < r.end_time - 1.0);  // lost well before the run ended
    for (const auto& k : r.series)
      if (k.t > t_last + 0.1) CHECK_FALSE(k.in_lane_seen);
  }
  SUBCASE("warning precedes the intervention and clears after handback") {
    bool fcw_before_mode1 = false;
    double t_mode1 = 0.0;
    for (const auto& m : r.mode_trace)
      if (m.mode == EoamMode::UpdateBrake) t_mode1 = m.t;
    for (const auto& k : r.series) {
      if (k.t < t_mode1 && k.fcw) fcw_before_mode1 = true;
      if (k.t < t_mode1 - 1.0) CHECK(k.mode == 0);
    }
    CHECK(fcw_before_mode1);
    CHECK_FALSE(r.series.back().fcw);
  }
}

TEST_CASE("an opening gap never triggers the maneuver") {
  const Stack& st = dry_stack();
  ScenarioConfig cfg;
  cfg.ego_speed = kmh_to_ms(60.0);
  cfg.aro_init_speed = kmh_to_ms(80.0);
  cfg.aro_brake_start = 1e9;  // never brakes
  cfg.mu = 1.0;
  cfg.t_end = 10.0;
  ScenarioResult r = run_scenario(cfg, st.params, st.table, st.diagrams);
  CHECK(r.outcome == Outcome::Green);
  CHECK_FALSE(r.maneuver_triggered);
  CHECK(r.mode_trace.size() == 1);
}

TEST_CASE("false-positive immunity of parked cars") {
  const Stack& st = dry_stack();
  ScenarioConfig with = {};
  with.ego_speed = kmh_to_ms(120.0);
  with.mu = 1.0;
  with.parked_cars_enabled = true;
  ScenarioConfig without = with;
  without.parked_cars_enabled = false;

  ScenarioResult a = run_scenario(with, st.params, st.table, st.diagrams);
  ScenarioResult b = run_scenario(without, st.params, st.table, st.diagrams);
  REQUIRE(a.mode_trace.size() == b.mode_trace.size());
  for (std::size_t i = 0; i < a.mode_trace.size(); ++i) {
    CHECK(a.mode_trace[i].t == b.mode_trace[i].t);
    CHECK(a.mode_trace[i].mode == b.mode_trace[i].mode);
  }
}

TEST_CASE("disabling the module turns the baseline into a collision") {
  const Stack& st = dry_stack();
  ScenarioConfig cfg;
  cfg.ego_speed = kmh_to_ms(120.0);
  cfg.mu = 1.0;
  cfg.eoam_enabled = false;
  ScenarioResult r = run_scenario(cfg, st.params, st.table, st.diagrams);
  REQUIRE(r.contact.has_value());
  CHECK(r.contact->role == ObjectRole::InLaneAro);
  CHECK(r.contact->frontal);
  CHECK(r.outcome == Outcome::Yellow);
}

TEST_CASE("runs are deterministic byte for byte") {
  const Stack& st = dry_stack();
  ScenarioConfig cfg;
  cfg.ego_speed = kmh_to_ms(120.0);
  cfg.mu = 1.0;
  ScenarioResult a = run_scenario(cfg, st.params, st.table, st.diagrams);
  ScenarioResult b = run_scenario(cfg, st.params, st.table, st.diagrams);
  CHECK(timeseries_csv(a, "x") == timeseries_csv(b, "x"));
  CHECK(phase_trace_csv(a, "x") == phase_trace_csv(b, "x"));
  CHECK(outcome_json(a, "x").dump() == outcome_json(b, "x").dump());
}

TEST_CASE("outcome classification") {
  ScenarioResult run;
  SUBCASE("no contact is green") {
    CHECK(classify_outcome(run) == Outcome::Green);
  }
  SUBCASE("frontal with the in-lane object is yellow") {
    run.contact = Contact{5.0, ObjectRole::InLaneAro, 0.0, 10.0, true};
    CHECK(classify_outcome(run) == Outcome::Yellow);
  }
  SUBCASE("side contact with any object is orange") {
    run.contact = Contact{5.0, ObjectRole::OncomingAro, 1.3, 10.0, false};
    CHECK(classify_outcome(run) == Outcome::Orange);
    run.contact->role = ObjectRole::InLaneAro;
    CHECK(classify_outcome(run) == Outcome::Orange);
  }
  SUBCASE("frontal with opposing traffic is red") {
    run.contact = Contact{5.0, ObjectRole::OncomingAro, 0.1, 50.0, true};
    CHECK(classify_outcome(run) == Outcome::Red);
  }
}

TEST_CASE("single-cell sweep equals a direct run") {
  const Stack& st = dry_stack();
  SweepSpec spec;
  spec.speeds_kmh = {120.0};
  spec.mus = {1.0};
  spec.oncoming_dists = {0.0};
  ScenarioConfig base;
  auto cells = sweep_matrix(spec, base, st.params, st.table, st.diagrams);
  REQUIRE(cells.size() == 1);
  ScenarioConfig cfg;
  cfg.ego_speed = kmh_to_ms(120.0);
  cfg.mu = 1.0;
  ScenarioResult direct = run_scenario(cfg, st.params, st.table, st.diagrams, 50);
  CHECK(cells[0].outcome == direct.outcome);
  CHECK(cells[0].steer_triggered == direct.steer_triggered);

  SUBCASE("parallel and serial sweeps agree") {
    SweepSpec grid_spec;
    grid_spec.speeds_kmh = {120.0, 90.0};
    grid_spec.mus = {1.0};
    grid_spec.oncoming_dists = {0.0, 300.0};
    grid_spec.workers = 1;
    auto serial = sweep_matrix(grid_spec, base, st.params, st.table, st.diagrams);
    grid_spec.workers = 4;
    auto parallel = sweep_matrix(grid_spec, base, st.params, st.table, st.diagrams);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i)
      CHECK(serial[i].outcome == parallel[i].outcome);
    CHECK(sweep_csv(serial) == sweep_csv(parallel));
  }
}

TEST_CASE("missing diagram page aborts before the run starts") {
  const Stack& st = dry_stack();
  ScenarioConfig cfg;
  cfg.ego_speed = kmh_to_ms(120.0);
  cfg.mu = 0.3;  // only the 1.0 page exists in this stack
  CHECK_THROWS_AS(run_scenario(cfg, st.params, st.table, st.diagrams), std::runtime_error);
}
