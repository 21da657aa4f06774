#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cav/feasibility.hpp"
#include "cav/fez.hpp"
#include "cav/io.hpp"
#include "cav/simulator.hpp"

namespace cav::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.3.0";

void configure_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  spdlog::set_default_logger(spdlog::stderr_color_mt("cavsim"));
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CAV_CORRIDOR_LOG"))
    spdlog::set_level(spdlog::level::from_str(env));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot read");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load(const std::string& path, const std::vector<std::string>& overrides,
                    bool validate = true) {
  if (path.empty()) return parse_config("{}", overrides, "<defaults>", validate);
  return parse_config(read_file(path), overrides, path, validate);
}

// 44 -> "44.0", 36.6666667 -> "36.666667"
std::string metres(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

std::pair<double, double> parse_range(const std::string& s, const char* what) {
  double a = 0, b = 0;
  char sep = 0;
  std::istringstream in(s);
  if (!(in >> a >> sep >> b) || sep != ',' || !(a < b))
    throw ConfigError(std::string("--") + what + ": expected lo,hi with lo < hi");
  return {a, b};
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
  std::size_t n = 0, m = 0;
  char x = 0;
  std::istringstream in(s);
  if (!(in >> n >> x >> m) || (x != 'x' && x != 'X') || n < 2 || m < 2)
    throw ConfigError("--grid: expected NxM with N, M >= 2");
  return {n, m};
}

struct LeaderSpec {
  double t0, v0, tm, vm;
};

LeaderSpec parse_leader(const std::string& s, const SystemParams& prm) {
  if (s.rfind("const:", 0) == 0) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str() + 6, &end);
    if (end == s.c_str() + 6 || *end != '\0' || !(v > 0.0))
      throw ConfigError("--leader: expected const:<speed>");
    return {0.0, v, prm.L / v, v};
  }
  LeaderSpec l{};
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream in(s);
  if (!(in >> l.t0 >> c1 >> l.v0 >> c2 >> l.tm >> c3 >> l.vm) || c1 != ',' || c2 != ',' ||
      c3 != ',')
    throw ConfigError("--leader: expected t0,v0,tm,vm or const:<speed>");
  return l;
}

void write_sim_outputs(const SimLog& log, const fs::path& dir) {
  fs::create_directories(dir);
  write_atomic(dir / "trajectories.csv", trajectories_csv(log));
  write_atomic(dir / "events.csv", events_csv(log));
  write_atomic(dir / "gaps.csv", gaps_csv(log));
  write_atomic(dir / "schedule.csv", schedule_csv(log));
  write_atomic(dir / "profiles.json", profiles_json(log).dump(1) + "\n");
  if (log.config.fez_enabled)
    write_atomic(dir / "fez_plans.json", fez_plans_json(log).dump(1) + "\n");

  json violators = json::array();
  for (const SafetyRecord& s : log.safety)
    if (s.violation) violators.push_back(s.follower);
  json flagged = json::array();
  std::size_t fallbacks = 0;
  for (const VehicleRecord& r : log.vehicles) {
    if (r.unconstrained_solution_invalid()) flagged.push_back(r.id);
    if (r.planned && r.approach.fallback) ++fallbacks;
  }
  const SafetySummary summary = safety_report(log);
  json manifest{{"command", "simulate"},
                {"version", kVersion},
                {"seed", log.config.seed},
                {"config", to_json(log.config)},
                {"violations", {{"count", summary.violations}, {"vehicles", violators}}},
                {"unconstrained_solution_invalid", flagged},
                {"fez_fallbacks", fallbacks},
                {"min_gap_histogram",
                 {{"origin", summary.histogram_origin},
                  {"bin_width", summary.bin_width},
                  {"counts", summary.histogram}}}};
  write_atomic(dir / "manifest.json", manifest.dump(1) + "\n");
}

int finish_simulation(const SimLog& log, const fs::path& out_dir, bool fail_on_violation,
                      std::ostream& out) {
  write_sim_outputs(log, out_dir);
  const std::size_t v = log.violation_count();
  std::size_t flagged = 0;
  for (const VehicleRecord& r : log.vehicles) flagged += r.unconstrained_solution_invalid();
  out << "vehicles: " << log.vehicles.size() << "\n"
      << "safety violations: " << v << "\n"
      << "unconstrained-solution-invalid: " << flagged << "\n"
      << "outputs: " << out_dir.string() << "\n";
  return (fail_on_violation && v > 0) ? kExitViolation : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Signal-free intersection coordination simulator", "cavsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, out_dir = "out", grid = "200x200", leader = "const:10";
  std::string tau_range, upsilon_range, manifest_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool no_fez = false, fail_on_violation = false, keep_constrained = false;

  auto* sim = app.add_subcommand("simulate", "Run a seeded scenario and export CSV logs");
  sim->add_option("--config", config_path, "Scenario JSON");
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_flag("--no-fez", no_fez, "Disable the feasibility enforcement zone");
  sim->add_flag("--fail-on-violation", fail_on_violation, "Exit 2 if any gap drops below delta");
  sim->add_option("--set", overrides, "key=value override")->take_all();

  auto* fmap = app.add_subcommand("feasibility-map", "Raster the feasible entry region");
  fmap->add_option("--config", config_path, "Scenario JSON (only params are used)");
  fmap->add_option("--out", out_dir, "Output directory");
  fmap->add_option("--leader", leader, "t0,v0,tm,vm or const:<speed>");
  fmap->add_option("--grid", grid, "NxM nodes over tau x upsilon");
  fmap->add_option("--tau-range", tau_range, "lo,hi");
  fmap->add_option("--upsilon-range", upsilon_range, "lo,hi");
  fmap->add_flag("--keep-constrained", keep_constrained,
                 "Report s* for cells whose solution activates a bound");
  fmap->add_option("--set", overrides, "key=value override")->take_all();

  auto* fez = app.add_subcommand("fez-design", "Print the FEZ length and parameter condition");
  fez->add_option("--config", config_path, "Scenario JSON");
  fez->add_option("--set", overrides, "key=value override")->take_all();

  auto* replay = app.add_subcommand("replay", "Re-run a simulation from its manifest");
  replay->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  replay->add_option("--out", out_dir, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      if (seed) overrides.push_back("seed=" + std::to_string(*seed));
      if (no_fez) overrides.push_back("fez_enabled=false");
      const ScenarioConfig cfg = load(config_path, overrides);
      return finish_simulation(run(cfg), out_dir, fail_on_violation, out);
    }

    if (replay->parsed()) {
      const json manifest = json::parse(read_file(manifest_path), nullptr, false);
      if (manifest.is_discarded() || !manifest.contains("config"))
        throw ConfigError(manifest_path + ": not a simulation manifest");
      const ScenarioConfig cfg = parse_config(manifest["config"].dump(), manifest_path);
      return finish_simulation(run(cfg), out_dir, false, out);
    }

    if (fez->parsed()) {
      const ScenarioConfig cfg = load(config_path, overrides, false);
      const SystemParams& p = cfg.params;
      const double f = fez_length(p.v_min, p.v_max, p.u_B);
      const bool ok = check_parameter_condition(p);
      out << "F_bar = " << metres(f) << " m\n"
          << "(v_min - v_max)/u_B = " << metres((p.v_min - p.v_max) / p.u_B)
          << " s, delta/v_min = " << metres(p.delta / p.v_min) << " s\n"
          << (ok ? "condition holds" : "condition fails") << "\n";
      return kExitOk;
    }

    if (fmap->parsed()) {
      const ScenarioConfig cfg = load(config_path, overrides);
      const SystemParams& p = cfg.params;
      const LeaderSpec l = parse_leader(leader, p);
      const FeasibilityContext ctx = same_lane_context(l.t0, l.v0, l.tm, l.vm, p);
      const auto [n_tau, n_up] = parse_grid(grid);
      auto [tau_lo, tau_hi] = std::pair{l.t0, l.tm + p.S / l.vm + 5.0};
      auto [up_lo, up_hi] = std::pair{p.v_min, p.v_max};
      if (!tau_range.empty()) std::tie(tau_lo, tau_hi) = parse_range(tau_range, "tau-range");
      if (!upsilon_range.empty())
        std::tie(up_lo, up_hi) = parse_range(upsilon_range, "upsilon-range");

      GridOptions opts;
      opts.mask_constrained = !keep_constrained;
      const FeasibilityGrid g =
          feasibility_grid(ctx, tau_lo, tau_hi, up_lo, up_hi, n_tau, n_up, opts);
      std::size_t feasible = 0;
      for (std::size_t iu = 0; iu < g.upsilon.size(); ++iu)
        for (std::size_t it = 0; it < g.tau.size(); ++it) feasible += g.feasible(iu, it);

      const fs::path dir = out_dir;
      fs::create_directories(dir);
      write_atomic(dir / "raster.csv", raster_csv(g));
      write_atomic(dir / "boundary.csv", boundary_csv(g));
      json manifest{{"command", "feasibility-map"},
                    {"version", kVersion},
                    {"params", to_json(p)},
                    {"leader", {{"t0", l.t0}, {"v0", l.v0}, {"tm", l.tm}, {"vm", l.vm}}},
                    {"grid", {{"n_tau", n_tau}, {"n_upsilon", n_up}}},
                    {"tau_range", {tau_lo, tau_hi}},
                    {"upsilon_range", {up_lo, up_hi}},
                    {"feasible_cells", feasible},
                    {"constrained_cells", g.constrained_cells},
                    {"nan_cells", (opts.mask_constrained ? g.constrained_cells : 0) +
                                      g.error_cells},
                    {"error_cells", g.error_cells},
                    {"boundary_polylines", g.boundary.size()}};
      write_atomic(dir / "manifest.json", manifest.dump(1) + "\n");
      out << "feasible cells: " << feasible << " of " << n_tau * n_up << "\n"
          << "constrained cells: " << g.constrained_cells << "\n"
          << "boundary polylines: " << g.boundary.size() << "\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace cav::cli
