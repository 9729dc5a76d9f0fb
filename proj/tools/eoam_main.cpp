// Command-line front end: offline precompute, single closed-loop runs, the
// full experiment sweep, and validation of persisted artifacts.
//
// Exit codes: 0 green, 10 yellow, 20 orange, 30 red, 64 usage, 65 data error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eoam/eoam.hpp"

namespace fs = std::filesystem;
using namespace eoam;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitDataError = 65;

int outcome_exit_code(Outcome o) {
  switch (o) {
    case Outcome::Green: return 0;
    case Outcome::Yellow: return 10;
    case Outcome::Orange: return 20;
    case Outcome::Red: return 30;
  }
  return kExitDataError;
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Config load_config_file(const std::string& path) {
  return Config::parse(read_text_file(path), path);
}

struct GridConfig {
  std::vector<double> speeds;
  std::vector<double> mus;
  GridSpec spec;
  double buffer_factor = 1.15;
  double wid_obj = 2.0;
  double dx_step = 1.0;
};

GridConfig load_grid_config(const std::string& path) {
  Config cfg = load_config_file(path);
  GridConfig g;
  g.speeds = cfg.get_list("speeds_ms");
  g.mus = cfg.get_list("mus");
  g.spec.y_f = cfg.get_double("lane_change_offset_m", 3.5);
  g.spec.lat_accel_frac = cfg.get_double("lat_accel_frac", 0.85);
  g.spec.path_samples = static_cast<std::size_t>(cfg.get_double("path_samples", 401));
  g.buffer_factor = cfg.get_double("buffer_factor", 1.15);
  g.wid_obj = cfg.get_double("design_obstacle_width_m", 2.0);
  g.dx_step = cfg.get_double("dx_step_m", 1.0);
  if (g.speeds.empty() || g.mus.empty())
    throw std::runtime_error(path + ": empty grid specification");
  return g;
}

std::string mu_file_tag(double mu) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", static_cast<int>(std::lround(mu * 100)));
  return buf;
}

struct Artifacts {
  VehicleParams params;
  LookupTable3D table;
  std::vector<PhaseDiagram> diagrams;
  std::string provenance;
};

Artifacts load_artifacts(const std::string& tables_dir) {
  Artifacts a;
  fs::path dir(tables_dir);
  if (!fs::exists(dir / "tables.dat"))
    throw std::runtime_error("missing " + (dir / "tables.dat").string() +
                             " (run precompute first)");
  a.params = VehicleParams::from_config(load_config_file((dir / "vehicle.cfg").string()));
  a.table = parse_table(read_text_file((dir / "tables.dat").string()));
  a.provenance = hash_to_hex(table_provenance(a.table));
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("phase_mu_", 0) == 0 && entry.path().extension() == ".dat")
      a.diagrams.push_back(parse_phase_diagram(read_text_file(entry.path().string())));
  }
  if (a.diagrams.empty()) throw std::runtime_error("no phase diagram pages in " + tables_dir);
  std::sort(a.diagrams.begin(), a.diagrams.end(),
            [](const PhaseDiagram& x, const PhaseDiagram& y) { return x.mu < y.mu; });
  return a;
}

int cmd_precompute(const std::string& vehicle_path, const std::string& grid_path,
                   const std::string& out_dir, int workers) {
  VehicleParams params = VehicleParams::from_config(load_config_file(vehicle_path));
  GridConfig grid = load_grid_config(grid_path);
  grid.spec.workers = workers;

  GridResult result = generate_grid(grid.speeds, grid.mus, params, grid.spec);

  std::size_t ok = 0;
  std::ostringstream log;
  log << "speed_ms mu status t_f_path_s t_f_achieved_s j_m j_baseline_m message\n";
  for (const GridPoint& pt : result) {
    if (pt.status == OcpStatus::Ok || pt.status == OcpStatus::IterLimit) ++ok;
    log << fmt_double_short(pt.speed) << " " << fmt_double_short(pt.mu) << " "
        << to_string(pt.status) << " " << fmt_double_short(pt.t_f_path) << " "
        << fmt_double_short(pt.suboptimal.t_f_achieved) << " "
        << fmt_double_short(pt.suboptimal.j_distance) << " "
        << fmt_double_short(pt.suboptimal.j_baseline) << " "
        << (pt.message.empty() ? "-" : pt.message) << "\n";
  }
  if (ok == 0) {
    std::cerr << "precompute: every grid point failed\n" << log.str();
    return kExitDataError;
  }

  LookupTable3D table = build_lookup_tables(result, grid.dx_step);
  std::string table_text = serialize_table(table);
  std::string provenance = hash_to_hex(table_provenance(table));

  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  write_text_file((dir / "tables.dat").string(), table_text);
  write_text_file((dir / "vehicle.cfg").string(), read_text_file(vehicle_path));
  write_text_file((dir / "solver_log.txt").string(), log.str());

  BufferPolicy buffers{grid.buffer_factor};
  for (double mu : grid.mus) {
    PhaseDiagram d = build_phase_diagram(result, mu, params, buffers, grid.wid_obj);
    std::string tag = mu_file_tag(mu);
    write_text_file((dir / ("phase_mu_" + tag + ".dat")).string(), serialize_phase_diagram(d));
    write_text_file((dir / ("phase_mu_" + tag + ".csv")).string(),
                    "# manifest " + provenance + "\n" + phase_diagram_csv(d));
  }

  auto manifest = make_manifest({vehicle_path, grid_path}, provenance, out_dir, utc_timestamp());
  write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");

  std::cout << "precompute: " << ok << "/" << result.size() << " grid points, "
            << grid.mus.size() << " friction pages, provenance " << provenance << "\n";
  return 0;
}

int cmd_run(const std::string& scenario_path, const std::string& tables_dir,
            const std::string& out_dir, bool dump_plots) {
  Artifacts art = load_artifacts(tables_dir);
  ScenarioConfig cfg = ScenarioConfig::from_config(load_config_file(scenario_path));

  ScenarioResult r = run_scenario(cfg, art.params, art.table, art.diagrams);

  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  write_text_file((dir / "timeseries.csv").string(), timeseries_csv(r, art.provenance));
  write_text_file((dir / "phase_trace.csv").string(), phase_trace_csv(r, art.provenance));
  write_text_file((dir / "outcome.json").string(), outcome_json(r, art.provenance).dump(2) + "\n");
  if (dump_plots) {
    fs::create_directories(dir / "plots");
    for (const auto& [name, content] : plot_channel_csvs(r, art.provenance, art.params.steering_ratio))
      write_text_file((dir / "plots" / name).string(), content);
  }
  auto manifest =
      make_manifest({scenario_path, tables_dir}, art.provenance, out_dir, utc_timestamp());
  write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");

  std::cout << "outcome: " << to_string(r.outcome) << " (t_end=" << fmt_double_short(r.end_time)
            << " s, mean online tick " << fmt_double_short(r.mean_tick_seconds * 1e6)
            << " us)\n";
  return outcome_exit_code(r.outcome);
}

int cmd_sweep(const std::string& matrix_path, const std::string& tables_dir,
              const std::string& out_dir, int parallel) {
  Artifacts art = load_artifacts(tables_dir);
  Config mcfg = load_config_file(matrix_path);
  SweepSpec spec;
  spec.speeds_kmh = mcfg.get_list("speeds_kmh");
  spec.mus = mcfg.get_list("mus");
  spec.oncoming_dists = mcfg.get_list("oncoming_dists_m");
  spec.workers = parallel;

  ScenarioConfig base;  // scenario defaults; per-cell fields overridden by the sweep
  std::vector<SweepCell> cells = sweep_matrix(spec, base, art.params, art.table, art.diagrams);

  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  write_text_file((dir / "sweep.csv").string(), sweep_csv(cells, art.provenance));
  std::string table_txt = sweep_table_text(spec, cells, art.provenance);
  write_text_file((dir / "sweep_table.txt").string(), table_txt);
  auto manifest =
      make_manifest({matrix_path, tables_dir}, art.provenance, out_dir, utc_timestamp());
  write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");

  // colored console rendering of the outcome grid
  std::string colored = table_txt;
  auto colorize = [&colored](const std::string& word, const char* code) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
      std::size_t hit = colored.find(word, pos);
      if (hit == std::string::npos) {
        out += colored.substr(pos);
        break;
      }
      out += colored.substr(pos, hit - pos);
      out += std::string("\033[") + code + "m" + word + "\033[0m";
      pos = hit + word.size();
    }
    colored = out;
  };
  colorize("green", "32");
  colorize("yellow", "33");
  colorize("orange", "35");
  colorize("red", "31");
  std::cout << colored;

  std::size_t errors = 0;
  for (const auto& c : cells)
    if (!c.error.empty()) ++errors;
  if (errors) std::cout << errors << " cell(s) recorded errors, see sweep.csv\n";
  return 0;
}

int cmd_validate(const std::string& tables_dir) {
  Artifacts art = load_artifacts(tables_dir);
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << what << "\n";
    if (!ok) ++failures;
  };

  const LookupTable3D& t = art.table;
  bool axes_ok = !t.speeds.empty() && !t.dxs.empty() && !t.mus.empty();
  for (std::size_t i = 0; i + 1 < t.speeds.size(); ++i) axes_ok &= t.speeds[i + 1] > t.speeds[i];
  for (std::size_t i = 0; i + 1 < t.dxs.size(); ++i) axes_ok &= t.dxs[i + 1] > t.dxs[i];
  for (std::size_t i = 0; i + 1 < t.mus.size(); ++i) axes_ok &= t.mus[i + 1] > t.mus[i];
  check(axes_ok, "lookup table axes strictly increasing");

  bool nodes_ok = true;
  for (std::size_t im = 0; im < t.mus.size() && nodes_ok; im += std::max<std::size_t>(1, t.mus.size() / 2))
    for (std::size_t is = 0; is < t.speeds.size() && nodes_ok; is += 3)
      for (std::size_t ix = 0; ix < t.dxs.size() && nodes_ok; ix += 17) {
        TableQuery q = interpolate(t, t.speeds[is], t.dxs[ix], t.mus[im]);
        nodes_ok &= q.y_target == t.at(0, im, is, ix) && q.ax_target == t.at(1, im, is, ix) &&
                    q.theta_target == t.at(2, im, is, ix) && q.kappa_target == t.at(3, im, is, ix);
      }
  check(nodes_ok, "grid-node queries return stored values exactly");

  for (const PhaseDiagram& d : art.diagrams) {
    std::string tag = "mu=" + fmt_double_short(d.mu);
    bool buf_ok = true, mono_ok = true;
    for (std::size_t i = 0; i < d.speeds.size(); ++i) {
      buf_ok &= d.stop_buffered[i] >= d.stop[i];
      if (!std::isinf(d.clear_subopt[i])) buf_ok &= d.clear_buffered[i] >= d.clear_subopt[i];
      if (i + 1 < d.speeds.size() && !std::isinf(d.clear_subopt[i + 1]))
        mono_ok &= d.clear_subopt[i + 1] > d.clear_subopt[i] && d.stop[i + 1] > d.stop[i];
    }
    check(buf_ok, tag + ": buffered curves dominate unbuffered");
    check(mono_ok, tag + ": boundary curves monotone in speed");

    bool partition_ok = true;
    // deterministic coverage sample of the (distance, speed) quadrant
    for (int i = 0; i < 3000 && partition_ok; ++i) {
      double v = 0.4 + 0.017 * static_cast<double>(i % 300);
      double dist = 0.05 * static_cast<double>((i * 7919) % 4000);
      Sector s = classify_phase(d, dist, v);
      partition_ok &= s >= Sector::A && s <= Sector::G;
    }
    check(partition_ok, tag + ": sector classification total over the quadrant");
  }
  return failures == 0 ? 0 : kExitDataError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emergency obstacle avoidance maneuver toolkit"};
  app.require_subcommand(1);

  std::string vehicle_path, grid_path, scenario_path, matrix_path, tables_dir, out_dir;
  bool dump_plots = false;
  int workers = 0;

  auto* pre = app.add_subcommand("precompute", "build lookup tables and phase diagrams offline");
  pre->add_option("--vehicle", vehicle_path, "vehicle parameter file")->required();
  pre->add_option("--grid", grid_path, "grid specification file")->required();
  pre->add_option("--out", out_dir, "output directory")->required();
  pre->add_option("--workers", workers, "worker thread count (0 = all cores)");

  auto* run = app.add_subcommand("run", "run one closed-loop scenario");
  run->add_option("--scenario", scenario_path, "scenario file")->required();
  run->add_option("--tables", tables_dir, "precomputed tables directory")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--dump-plots", dump_plots, "write per-channel plot CSVs");

  auto* sweep = app.add_subcommand("sweep", "run the scenario matrix");
  sweep->add_option("--matrix", matrix_path, "matrix specification file")->required();
  sweep->add_option("--tables", tables_dir, "precomputed tables directory")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--parallel", workers, "worker thread count (0 = all cores)");

  auto* validate = app.add_subcommand("validate", "check persisted artifacts");
  validate->add_option("--tables", tables_dir, "precomputed tables directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (pre->parsed()) return cmd_precompute(vehicle_path, grid_path, out_dir, workers);
    if (run->parsed()) return cmd_run(scenario_path, tables_dir, out_dir, dump_plots);
    if (sweep->parsed()) return cmd_sweep(matrix_path, tables_dir, out_dir, workers);
    if (validate->parsed()) return cmd_validate(tables_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}
