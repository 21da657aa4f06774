#include "cav/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "cav/fez.hpp"

namespace cav {

using nlohmann::json;

nlohmann::json to_json(const SystemParams& p) {
  return json{{"L", p.L},         {"S", p.S},         {"D", p.D},
              {"delta", p.delta}, {"v_min", p.v_min}, {"v_max", p.v_max},
              {"u_min", p.u_min}, {"u_max", p.u_max}, {"u_B", p.u_B},
              {"K", p.K},         {"fez_length", p.fez_length}};
}

nlohmann::json to_json(const ScenarioConfig& c) {
  json j{{"params", to_json(c.params)},
         {"lambda", c.lambda},
         {"lambda_per_lane", c.lambda_per_lane},
         {"n_vehicles", c.n_vehicles},
         {"seed", c.seed},
         {"fez_enabled", c.fez_enabled},
         {"dt", c.dt},
         {"intersections", c.intersections}};
  if (c.corridor_gap) j["corridor_gap"] = *c.corridor_gap;
  return j;
}

namespace {

const std::set<std::string> kTopKeys{"params", "lambda",      "lambda_per_lane",
                                     "n_vehicles", "seed",    "fez_enabled",
                                     "dt",     "intersections", "corridor_gap"};
const std::set<std::string> kParamKeys{"L",     "S",     "D",     "delta",
                                       "v_min", "v_max", "u_min", "u_max",
                                       "u_B",   "K",     "fez_length"};

struct Anchor {
  std::string_view text;
  std::string source;

  // Line of the first occurrence of "key" in the document, 0 if absent.
  std::size_t line_of(const std::string& key) const {
    const std::string quoted = "\"" + key + "\"";
    const auto pos = text.find(quoted);
    if (pos == std::string_view::npos) return 0;
    return 1 + static_cast<std::size_t>(
                   std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::size_t line = key.empty() ? 0 : line_of(key);
    throw ConfigError(source + (line ? ":" + std::to_string(line) : std::string()) +
                      ": " + msg);
  }
};

double get_number(const json& j, const std::string& key, const Anchor& a) {
  if (!j.is_number()) a.fail(key, "'" + key + "' must be a number");
  return j.get<double>();
}

bool get_bool(const json& j, const std::string& key, const Anchor& a) {
  if (!j.is_boolean()) a.fail(key, "'" + key + "' must be true or false");
  return j.get<bool>();
}

std::uint64_t get_count(const json& j, const std::string& key, const Anchor& a) {
  if (!j.is_number_integer() || (j.is_number_integer() && j.get<long long>() < 0 &&
                                 !j.is_number_unsigned()))
    a.fail(key, "'" + key + "' must be a non-negative integer");
  return j.get<std::uint64_t>();
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set " + o + ": expected key=value");
    std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* target = &doc;
    if (key.rfind("params.", 0) == 0) {
      key = key.substr(7);
      target = &doc["params"];
      if (!kParamKeys.count(key)) throw ConfigError("--set " + o + ": unknown key '" + key + "'");
    } else if (!kTopKeys.count(key)) {
      if (!kParamKeys.count(key)) throw ConfigError("--set " + o + ": unknown key '" + key + "'");
      target = &doc["params"];
    }
    (*target)[key] = value;
  }
}

ScenarioConfig from_json(const json& doc, const Anchor& a, bool validate) {
  if (!doc.is_object()) a.fail("", "top level must be an object");
  ScenarioConfig c;
  for (auto& [key, value] : doc.items()) {
    if (!kTopKeys.count(key)) a.fail(key, "unknown key '" + key + "'");
    if (key == "params") {
      if (!value.is_object()) a.fail(key, "'params' must be an object");
      for (auto& [pk, pv] : value.items()) {
        if (!kParamKeys.count(pk)) a.fail(pk, "unknown key 'params." + pk + "'");
      }
    }
  }
  bool fez_given = false;
  if (doc.contains("params")) {
    const json& p = doc["params"];
    SystemParams& s = c.params;
    auto num = [&](const char* k, double& dst) {
      if (p.contains(k)) dst = get_number(p[k], k, a);
    };
    num("L", s.L);
    num("S", s.S);
    num("D", s.D);
    num("delta", s.delta);
    num("v_min", s.v_min);
    num("v_max", s.v_max);
    num("u_min", s.u_min);
    num("u_max", s.u_max);
    num("u_B", s.u_B);
    num("K", s.K);
    if (p.contains("fez_length")) {
      s.fez_length = get_number(p["fez_length"], "fez_length", a);
      fez_given = true;
    }
  }
  if (!fez_given && c.params.u_B < 0.0)
    c.params.fez_length = fez_length(c.params.v_min, c.params.v_max, c.params.u_B);

  if (doc.contains("lambda")) c.lambda = get_number(doc["lambda"], "lambda", a);
  if (doc.contains("lambda_per_lane"))
    c.lambda_per_lane = get_bool(doc["lambda_per_lane"], "lambda_per_lane", a);
  if (doc.contains("n_vehicles"))
    c.n_vehicles = static_cast<std::size_t>(get_count(doc["n_vehicles"], "n_vehicles", a));
  if (doc.contains("seed")) c.seed = get_count(doc["seed"], "seed", a);
  if (doc.contains("fez_enabled")) c.fez_enabled = get_bool(doc["fez_enabled"], "fez_enabled", a);
  if (doc.contains("dt")) c.dt = get_number(doc["dt"], "dt", a);
  if (doc.contains("intersections"))
    c.intersections = static_cast<int>(get_count(doc["intersections"], "intersections", a));
  if (doc.contains("corridor_gap"))
    c.corridor_gap = get_number(doc["corridor_gap"], "corridor_gap", a);

  if (!validate) return c;
  try {
    c.validate();
  } catch (const ParameterError& e) {
    // Anchor on the first field named in the message that the document sets.
    static const std::regex ident("[A-Za-z_][A-Za-z_0-9]*");
    const std::string msg = e.what();
    std::string key;
    for (std::sregex_iterator it(msg.begin(), msg.end(), ident), end; it != end; ++it) {
      const std::string w = it->str();
      if ((kParamKeys.count(w) || kTopKeys.count(w)) && a.line_of(w)) {
        key = w;
        break;
      }
    }
    a.fail(key, msg);
  }
  return c;
}

}  // namespace

ScenarioConfig parse_config(std::string_view text, const std::vector<std::string>& overrides,
                            const std::string& source, bool validate) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ConfigError(source + ":" + std::to_string(line) + ": malformed JSON");
  }
  apply_overrides(doc, overrides);
  return from_json(doc, Anchor{text, source}, validate);
}

ScenarioConfig parse_config(std::string_view text, const std::string& source) {
  return parse_config(text, std::vector<std::string>{}, source);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot read");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

namespace {

std::string label_or_empty(const std::optional<SubsetLabel>& l) {
  return l ? std::string(to_string(*l)) : std::string();
}

std::string flags(const std::vector<ConstraintViolation>& v) {
  std::set<std::string> kinds;
  for (const ConstraintViolation& c : v) kinds.insert(std::string(to_string(c.kind)));
  std::string out;
  for (const std::string& k : kinds) out += (out.empty() ? "" : "|") + k;
  return out;
}

}  // namespace

std::string trajectories_csv(const SimLog& log) {
  std::string out = "t,id,p,v,u,phase\n";
  for (const TrajectorySample& s : log.trajectories) {
    out += format_number(s.t) + ',' + std::to_string(s.id) + ',' + format_number(s.p) + ',' +
           format_number(s.v) + ',' + format_number(s.u) + ',' +
           std::string(to_string(s.phase)) + '\n';
  }
  return out;
}

std::string events_csv(const SimLog& log) {
  std::string out =
      "id,lane,subset_label,case_tag,t_F,t0,tm,tf,vm,violations,intersection,"
      "constraint_flags\n";
  for (const VehicleRecord& r : log.vehicles) {
    for (const Crossing& c : r.crossings) {
      std::size_t violations = 0;
      for (const SafetyRecord& s : log.safety)
        if (s.follower == r.id && s.intersection == c.intersection && s.violation)
          ++violations;
      out += std::to_string(r.id) + ',' + std::string(to_string(r.lane.heading)) + ',' +
             label_or_empty(c.label) + ',' + std::string(to_string(c.schedule.case_tag)) +
             ',' + (c.intersection == 1 ? format_number(r.t_F) : std::string()) + ',' +
             format_number(c.profile.t0()) + ',' + format_number(c.schedule.tm) + ',' +
             format_number(c.schedule.tf) + ',' + format_number(c.schedule.vm) + ',' +
             std::to_string(violations) + ',' + std::to_string(c.intersection) + ',' +
             flags(c.constraints) + '\n';
    }
  }
  return out;
}

std::string gaps_csv(const SimLog& log) {
  std::string out = "t,follower_id,leader_id,s\n";
  for (const GapSample& g : log.gaps)
    out += format_number(g.t) + ',' + std::to_string(g.follower) + ',' +
           std::to_string(g.leader) + ',' + format_number(g.s) + '\n';
  return out;
}

std::string schedule_csv(const SimLog& log) {
  std::string out = "id,case_tag,t0,tm,tf,vm,bound_active,intersection\n";
  for (const VehicleRecord& r : log.vehicles)
    for (const Crossing& c : r.crossings)
      out += std::to_string(r.id) + ',' + std::string(to_string(c.schedule.case_tag)) + ',' +
             format_number(c.profile.t0()) + ',' + format_number(c.schedule.tm) + ',' +
             format_number(c.schedule.tf) + ',' + format_number(c.schedule.vm) + ',' +
             (c.schedule.bound_active ? "1" : "0") + ',' + std::to_string(c.intersection) +
             '\n';
  return out;
}

nlohmann::json profiles_json(const SimLog& log) {
  json arr = json::array();
  for (const VehicleRecord& r : log.vehicles)
    for (const Crossing& c : r.crossings) {
      const OptimalProfile& p = c.profile;
      arr.push_back({{"id", r.id},
                     {"intersection", c.intersection},
                     {"a", p.a()},
                     {"b", p.b()},
                     {"c", p.c()},
                     {"d", p.d()},
                     {"u0", p.initial_control()},
                     {"t0", p.t0()},
                     {"v0", p.v0()},
                     {"tm", p.tm()},
                     {"tf", p.tf()},
                     {"vm", p.vm()},
                     {"unconstrained_solution_invalid", !c.constraints.empty()}});
    }
  return arr;
}

nlohmann::json fez_plans_json(const SimLog& log) {
  json arr = json::array();
  for (const VehicleRecord& r : log.vehicles) {
    if (!r.planned) continue;
    const FezPlan& f = r.approach;
    json segs = json::array();
    for (const FezSegment& s : f.segments) segs.push_back({{"u", s.u}, {"duration", s.duration}});
    json plan{{"id", r.id},          {"t_F", f.t_F},           {"v_F", f.v_F},
              {"segments", segs},    {"tau", f.tau},           {"upsilon", f.upsilon},
              {"feasible", f.feasible}, {"constrained", f.constrained},
              {"fallback", f.fallback}};
    if (f.minimum) plan["s_star"] = f.minimum->s_star;
    arr.push_back(plan);
  }
  return arr;
}

std::string raster_csv(const FeasibilityGrid& g) {
  std::string out = "tau,upsilon,s_star,feasible\n";
  for (std::size_t iu = 0; iu < g.upsilon.size(); ++iu)
    for (std::size_t it = 0; it < g.tau.size(); ++it)
      out += format_number(g.tau[it]) + ',' + format_number(g.upsilon[iu]) + ',' +
             format_number(g.value(iu, it)) + ',' + (g.feasible(iu, it) ? "1" : "0") + '\n';
  return out;
}

std::string boundary_csv(const FeasibilityGrid& g) {
  std::string out = "polyline,tau,upsilon\n";
  for (std::size_t k = 0; k < g.boundary.size(); ++k)
    for (auto [tau, up] : g.boundary[k])
      out += std::to_string(k) + ',' + format_number(tau) + ',' + format_number(up) + '\n';
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace cav
