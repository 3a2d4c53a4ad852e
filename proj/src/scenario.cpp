#include "sdv/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace sdv {
namespace {

std::string loc(const std::string& file, const YAML::Node& n) {
  if (n.IsDefined() && n.Mark().line >= 0)
    return file + ":" + std::to_string(n.Mark().line + 1);
  return file;
}

[[noreturn]] void fail(const std::string& file, const YAML::Node& n, const std::string& msg) {
  throw ScenarioError(loc(file, n) + ": " + msg);
}

double as_double(const std::string& file, const YAML::Node& n, const std::string& what) {
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail(file, n, what + " must be a number");
  }
}

std::string as_string(const std::string& file, const YAML::Node& n, const std::string& what) {
  try {
    return n.as<std::string>();
  } catch (const YAML::Exception&) {
    fail(file, n, what + " must be a string");
  }
}

Vec2 as_point(const std::string& file, const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() != 2) fail(file, n, what + " must be a [x, y] pair");
  return {as_double(file, n[0], what), as_double(file, n[1], what)};
}

SpeedProfile as_profile(const std::string& file, const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() == 0)
    fail(file, n, what + " must be a non-empty list of [t, v] pairs");
  SpeedProfile p;
  double prev_t = -1e18;
  for (const auto& item : n) {
    if (!item.IsSequence() || item.size() != 2)
      fail(file, item, what + " entries must be [t, v] pairs");
    const double t = as_double(file, item[0], what + " time");
    const double v = as_double(file, item[1], what + " speed");
    if (t <= prev_t) fail(file, item, what + " times must be strictly increasing");
    prev_t = t;
    p.points.emplace_back(t, v);
  }
  return p;
}

std::string resolve(const std::string& scenario_file, const std::string& rel) {
  namespace fs = std::filesystem;
  fs::path p(rel);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (fs::path(scenario_file).parent_path() / p).lexically_normal().string();
}

const std::set<std::string> kKinds{"sdv", "pdt", "ego", "pedestrian", "static"};

AgentSpec parse_agent(const std::string& file, const YAML::Node& n) {
  if (!n.IsMap()) fail(file, n, "agent entries must be maps");
  AgentSpec a;
  if (!n["name"]) fail(file, n, "agent needs a name");
  a.name = as_string(file, n["name"], "agent name");
  const std::string where = "agent '" + a.name + "'";
  if (!n["kind"]) fail(file, n, where + " needs a kind");
  a.kind = as_string(file, n["kind"], where + " kind");
  if (!kKinds.count(a.kind))
    fail(file, n["kind"], where + ": unknown kind '" + a.kind + "'");
  if (n["active"]) a.active = n["active"].as<bool>();
  if (n["external"]) a.external = n["external"].as<bool>();
  if (n["length"]) a.length = as_double(file, n["length"], where + " length");
  if (n["width"]) a.width = as_double(file, n["width"], where + " width");

  if (n["start"]) {
    const YAML::Node st = n["start"];
    if (!st.IsMap() || !st["x"] || !st["y"])
      fail(file, st, where + " start must be a map with x and y");
    a.has_start = true;
    a.start_x = as_double(file, st["x"], "start x");
    a.start_y = as_double(file, st["y"], "start y");
    if (st["speed"]) a.start_speed = as_double(file, st["speed"], "start speed");
    if (st["heading"]) {
      a.heading_given = true;
      a.start_heading = as_double(file, st["heading"], "start heading");
    }
  }
  if (n["route"]) {
    if (!n["route"].IsSequence()) fail(file, n["route"], where + " route must be a list");
    for (const auto& pt : n["route"]) a.route.push_back(as_point(file, pt, "route point"));
  }
  if (n["tree"]) a.tree = as_string(file, n["tree"], where + " tree");
  if (n["overrides"]) {
    if (!n["overrides"].IsMap()) fail(file, n["overrides"], where + " overrides must be a map");
    for (const auto& kv : n["overrides"]) {
      const std::string key = as_string(file, kv.first, "override key");
      const std::string text = as_string(file, kv.second, "override value");
      try {
        parse_param_value(text, where);
      } catch (const ParseError& e) {
        fail(file, kv.second, where + ": bad override '" + key + "': " + e.what());
      }
      a.overrides[key] = text;
    }
  }
  if (n["script"]) {
    const YAML::Node sc = n["script"];
    if (!sc.IsMap() || !sc["polyline"] || !sc["profile"])
      fail(file, sc, where + " script needs polyline and profile");
    a.has_script = true;
    for (const auto& pt : sc["polyline"])
      a.script.polyline.push_back(as_point(file, pt, "polyline point"));
    if (a.script.polyline.size() < 2)
      fail(file, sc["polyline"], where + " polyline needs at least 2 points");
    a.script.profile = as_profile(file, sc["profile"], where + " profile");
    if (sc["alternates"]) {
      if (!sc["alternates"].IsMap())
        fail(file, sc["alternates"], where + " alternates must be a map");
      for (const auto& kv : sc["alternates"]) {
        const std::string pname = as_string(file, kv.first, "alternate profile name");
        a.script.alternates[pname] =
            as_profile(file, kv.second, where + " alternate '" + pname + "'");
      }
    }
  }
  return a;
}

TriggerSpec parse_trigger(const std::string& file, const YAML::Node& n, size_t index) {
  const std::string where = "trigger " + std::to_string(index);
  if (!n.IsMap() || !n["when"] || !n["do"]) fail(file, n, where + " needs `when` and `do`");
  TriggerSpec t;
  const YAML::Node when = n["when"];
  if (when["time"]) {
    t.when = TriggerSpec::When::Time;
    t.time = as_double(file, when["time"], where + " time");
  } else if (when["region"]) {
    const YAML::Node r = when["region"];
    if (!r.IsMap() || !r["agent"] || !r["x"] || !r["y"])
      fail(file, r, where + " region needs agent, x range, y range");
    t.when = TriggerSpec::When::Region;
    t.region_agent = as_string(file, r["agent"], "region agent");
    if (!r["x"].IsSequence() || r["x"].size() != 2 || !r["y"].IsSequence() || r["y"].size() != 2)
      fail(file, r, where + " region x/y must be [lo, hi] pairs");
    t.x_min = as_double(file, r["x"][0], "region x");
    t.x_max = as_double(file, r["x"][1], "region x");
    t.y_min = as_double(file, r["y"][0], "region y");
    t.y_max = as_double(file, r["y"][1], "region y");
  } else if (when["gap"]) {
    const YAML::Node g = when["gap"];
    if (!g.IsMap() || !g["from"] || !g["to"] || !g["below"])
      fail(file, g, where + " gap needs from, to, below");
    t.when = TriggerSpec::When::Gap;
    t.gap_from = as_string(file, g["from"], "gap from");
    t.gap_to = as_string(file, g["to"], "gap to");
    t.gap_below = as_double(file, g["below"], "gap below");
  } else {
    fail(file, when, where + " `when` needs one of time, region, gap");
  }

  const YAML::Node act = n["do"];
  if (act["activate"]) {
    t.action = TriggerSpec::Action::Activate;
    t.target_agent = as_string(file, act["activate"], "activate target");
  } else if (act["switch_profile"]) {
    const YAML::Node sp = act["switch_profile"];
    if (!sp.IsMap() || !sp["agent"] || !sp["profile"])
      fail(file, sp, where + " switch_profile needs agent and profile");
    t.action = TriggerSpec::Action::SwitchProfile;
    t.target_agent = as_string(file, sp["agent"], "switch_profile agent");
    t.profile_name = as_string(file, sp["profile"], "switch_profile profile");
  } else if (act["end"]) {
    t.action = TriggerSpec::Action::End;
    t.end_reason = as_string(file, act["end"], "end reason");
  } else {
    fail(file, act, where + " `do` needs one of activate, switch_profile, end");
  }
  return t;
}

void validate(const Scenario& s, const std::string& file) {
  std::set<std::string> names;
  int ego_count = 0;
  for (const AgentSpec& a : s.agents) {
    const std::string where = file + ": agent '" + a.name + "'";
    if (!names.insert(a.name).second)
      throw ScenarioError(file + ": duplicate agent name '" + a.name + "'");
    if (a.kind == "ego") ++ego_count;
    if (a.kind == "sdv" || (a.kind == "ego" && a.drives_tree())) {
      if (!a.has_start) throw ScenarioError(where + ": planning agent needs a start");
      if (a.tree.empty()) throw ScenarioError(where + ": planning agent needs a tree");
    } else if (a.external) {
      if (a.kind != "ego") throw ScenarioError(where + ": only ego agents can be external");
      if (!a.has_start) throw ScenarioError(where + ": external agent needs a start");
    } else {
      if (!a.has_script) throw ScenarioError(where + ": scripted agent needs a script");
    }
  }
  if (ego_count > 1) throw ScenarioError(file + ": more than one ego agent");
  for (size_t i = 0; i < s.triggers.size(); ++i) {
    const TriggerSpec& t = s.triggers[i];
    const std::string where = file + ": trigger " + std::to_string(i);
    auto need_agent = [&](const std::string& name) -> const AgentSpec& {
      for (const AgentSpec& a : s.agents)
        if (a.name == name) return a;
      throw ScenarioError(where + ": unknown agent '" + name + "'");
    };
    if (t.when == TriggerSpec::When::Region) need_agent(t.region_agent);
    if (t.when == TriggerSpec::When::Gap) {
      need_agent(t.gap_from);
      need_agent(t.gap_to);
    }
    if (t.action == TriggerSpec::Action::Activate) need_agent(t.target_agent);
    if (t.action == TriggerSpec::Action::SwitchProfile) {
      const AgentSpec& a = need_agent(t.target_agent);
      if (!a.has_script)
        throw ScenarioError(where + ": switch_profile target '" + a.name +
                            "' has no script");
      if (!a.script.alternates.count(t.profile_name))
        throw ScenarioError(where + ": agent '" + a.name + "' has no profile '" +
                            t.profile_name + "'");
    }
  }
}

// Lane direction at the point nearest to p; used when a start omits heading.
double heading_on_map(const Map& m, const Vec2& p) {
  const MapMatch mm = m.match(p);
  if (mm.segment_id < 0) return 0.0;
  const std::vector<Vec2>& cl = m.at(mm.segment_id).centerline;
  double run = 0.0;
  double heading = 0.0;
  for (size_t i = 1; i < cl.size(); ++i) {
    const Vec2 seg = cl[i] - cl[i - 1];
    const double len = seg.norm();
    if (len < 1e-12) continue;
    heading = std::atan2(seg.y(), seg.x());
    if (run + len >= mm.s - 1e-9) break;
    run += len;
  }
  return heading;
}

CartesianState make_start(const AgentSpec& a, const Map& m) {
  CartesianState c;
  c.x = a.start_x;
  c.y = a.start_y;
  c.theta = a.heading_given ? a.start_heading : heading_on_map(m, {a.start_x, a.start_y});
  c.x_dot = a.start_speed * std::cos(c.theta);
  c.y_dot = a.start_speed * std::sin(c.theta);
  return c;
}

ActorType actor_type_of(const std::string& kind) {
  if (kind == "ego") return ActorType::Ego;
  if (kind == "pdt") return ActorType::PDT;
  if (kind == "pedestrian") return ActorType::Pedestrian;
  if (kind == "static") return ActorType::Static;
  return ActorType::SDV;
}

}  // namespace

Scenario parse_scenario(const std::string& yaml_text, const std::string& filename) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ScenarioError(filename + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ScenarioError(filename + ": scenario must be a YAML map");
  if (root["format_version"] && root["format_version"].as<int>() != 1)
    fail(filename, root["format_version"], "unsupported format_version");

  Scenario s;
  s.file = filename;
  s.name = root["name"] ? as_string(filename, root["name"], "name")
                        : std::filesystem::path(filename).stem().string();
  if (!root["map"]) throw ScenarioError(filename + ": scenario needs a map reference");
  s.map_file = resolve(filename, as_string(filename, root["map"], "map"));
  if (root["seed"]) s.seed = root["seed"].as<std::uint64_t>();

  if (root["end"]) {
    const YAML::Node e = root["end"];
    if (e["timeout"]) s.end.timeout = as_double(filename, e["timeout"], "end timeout");
    if (e["on_collision"]) s.end.on_collision = e["on_collision"].as<bool>();
    if (e["goal"]) s.end.goal_vehicle = as_string(filename, e["goal"], "end goal");
    if (e["goal_margin"])
      s.end.goal_margin = as_double(filename, e["goal_margin"], "end goal_margin");
  }
  if (root["trees"]) {
    for (const auto& t : root["trees"])
      s.tree_files.push_back(resolve(filename, as_string(filename, t, "tree file")));
  }
  if (root["signals"]) {
    for (const auto& kv : root["signals"]) {
      const std::string name = as_string(filename, kv.first, "signal name");
      std::vector<std::pair<double, std::string>> schedule;
      for (const auto& entry : kv.second) {
        if (!entry.IsSequence() || entry.size() != 2)
          fail(filename, entry, "signal entries must be [t, phase] pairs");
        schedule.emplace_back(as_double(filename, entry[0], "signal time"),
                              as_string(filename, entry[1], "signal phase"));
      }
      s.signals[name] = std::move(schedule);
    }
  }
  if (root["agents"]) {
    for (const auto& a : root["agents"]) s.agents.push_back(parse_agent(filename, a));
  }
  if (s.agents.empty()) throw ScenarioError(filename + ": scenario needs at least one agent");
  if (root["triggers"]) {
    size_t i = 0;
    for (const auto& t : root["triggers"])
      s.triggers.push_back(parse_trigger(filename, t, i++));
  }
  validate(s, filename);
  return s;
}

Scenario load_scenario(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ScenarioError("cannot open scenario file '" + file + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), file);

  // Resolve cross-file references now so callers get located errors up front.
  const Map map = Map::load(s.map_file);
  TreeLibrary lib;
  for (const std::string& tf : s.tree_files)
    for (ParsedTree& t : parse_tree_file(tf)) lib.add(std::move(t));
  lib.link();
  for (const AgentSpec& a : s.agents) {
    if (a.drives_tree() && !lib.has_tree(a.tree))
      throw ScenarioError(file + ": agent '" + a.name + "': unknown tree '" + a.tree + "'");
    if (a.has_start) {
      const MapMatch mm = map.match({a.start_x, a.start_y});
      if (mm.segment_id < 0 || mm.distance() > 10.0)
        throw ScenarioError(file + ": agent '" + a.name +
                            "': start is not near any lane segment");
    }
  }
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(12);
  out << YAML::BeginMap;
  out << YAML::Key << "format_version" << YAML::Value << 1;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "map" << YAML::Value << s.map_file;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "end" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "timeout" << YAML::Value << s.end.timeout;
  out << YAML::Key << "on_collision" << YAML::Value << s.end.on_collision;
  if (s.end.goal_vehicle) {
    out << YAML::Key << "goal" << YAML::Value << *s.end.goal_vehicle;
    out << YAML::Key << "goal_margin" << YAML::Value << s.end.goal_margin;
  }
  out << YAML::EndMap;
  if (!s.tree_files.empty()) {
    out << YAML::Key << "trees" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : s.tree_files) out << t;
    out << YAML::EndSeq;
  }
  if (!s.signals.empty()) {
    out << YAML::Key << "signals" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, schedule] : s.signals) {
      out << YAML::Key << name << YAML::Value << YAML::BeginSeq;
      for (const auto& [t, phase] : schedule)
        out << YAML::Flow << YAML::BeginSeq << t << phase << YAML::EndSeq;
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::Key << "agents" << YAML::Value << YAML::BeginSeq;
  for (const AgentSpec& a : s.agents) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << a.name;
    out << YAML::Key << "kind" << YAML::Value << a.kind;
    if (!a.active) out << YAML::Key << "active" << YAML::Value << false;
    if (a.external) out << YAML::Key << "external" << YAML::Value << true;
    out << YAML::Key << "length" << YAML::Value << a.length;
    out << YAML::Key << "width" << YAML::Value << a.width;
    if (a.has_start) {
      out << YAML::Key << "start" << YAML::Value << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "x" << YAML::Value << a.start_x;
      out << YAML::Key << "y" << YAML::Value << a.start_y;
      out << YAML::Key << "speed" << YAML::Value << a.start_speed;
      if (a.heading_given) out << YAML::Key << "heading" << YAML::Value << a.start_heading;
      out << YAML::EndMap;
    }
    if (!a.route.empty()) {
      out << YAML::Key << "route" << YAML::Value << YAML::BeginSeq;
      for (const Vec2& p : a.route)
        out << YAML::Flow << YAML::BeginSeq << p.x() << p.y() << YAML::EndSeq;
      out << YAML::EndSeq;
    }
    if (!a.tree.empty()) out << YAML::Key << "tree" << YAML::Value << a.tree;
    if (!a.overrides.empty()) {
      out << YAML::Key << "overrides" << YAML::Value << YAML::BeginMap;
      for (const auto& [k, v] : a.overrides) out << YAML::Key << k << YAML::Value << v;
      out << YAML::EndMap;
    }
    if (a.has_script) {
      out << YAML::Key << "script" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "polyline" << YAML::Value << YAML::BeginSeq;
      for (const Vec2& p : a.script.polyline)
        out << YAML::Flow << YAML::BeginSeq << p.x() << p.y() << YAML::EndSeq;
      out << YAML::EndSeq;
      out << YAML::Key << "profile" << YAML::Value << YAML::BeginSeq;
      for (const auto& [t, v] : a.script.profile.points)
        out << YAML::Flow << YAML::BeginSeq << t << v << YAML::EndSeq;
      out << YAML::EndSeq;
      if (!a.script.alternates.empty()) {
        out << YAML::Key << "alternates" << YAML::Value << YAML::BeginMap;
        for (const auto& [name, prof] : a.script.alternates) {
          out << YAML::Key << name << YAML::Value << YAML::BeginSeq;
          for (const auto& [t, v] : prof.points)
            out << YAML::Flow << YAML::BeginSeq << t << v << YAML::EndSeq;
          out << YAML::EndSeq;
        }
        out << YAML::EndMap;
      }
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  if (!s.triggers.empty()) {
    out << YAML::Key << "triggers" << YAML::Value << YAML::BeginSeq;
    for (const TriggerSpec& t : s.triggers) {
      out << YAML::BeginMap;
      out << YAML::Key << "when" << YAML::Value << YAML::BeginMap;
      if (t.when == TriggerSpec::When::Time) {
        out << YAML::Key << "time" << YAML::Value << t.time;
      } else if (t.when == TriggerSpec::When::Region) {
        out << YAML::Key << "region" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "agent" << YAML::Value << t.region_agent;
        out << YAML::Key << "x" << YAML::Value << YAML::Flow << YAML::BeginSeq << t.x_min
            << t.x_max << YAML::EndSeq;
        out << YAML::Key << "y" << YAML::Value << YAML::Flow << YAML::BeginSeq << t.y_min
            << t.y_max << YAML::EndSeq;
        out << YAML::EndMap;
      } else {
        out << YAML::Key << "gap" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "from" << YAML::Value << t.gap_from;
        out << YAML::Key << "to" << YAML::Value << t.gap_to;
        out << YAML::Key << "below" << YAML::Value << t.gap_below;
        out << YAML::EndMap;
      }
      out << YAML::EndMap;
      out << YAML::Key << "do" << YAML::Value << YAML::BeginMap;
      if (t.action == TriggerSpec::Action::Activate) {
        out << YAML::Key << "activate" << YAML::Value << t.target_agent;
      } else if (t.action == TriggerSpec::Action::SwitchProfile) {
        out << YAML::Key << "switch_profile" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "agent" << YAML::Value << t.target_agent;
        out << YAML::Key << "profile" << YAML::Value << t.profile_name;
        out << YAML::EndMap;
      } else {
        out << YAML::Key << "end" << YAML::Value << t.end_reason;
      }
      out << YAML::EndMap;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ScenarioRun::ScenarioRun(const Scenario& scenario, const RunOptions& opts)
    : scenario_(scenario), opts_(opts), map_(Map::load(scenario.map_file)) {
  for (const std::string& tf : scenario_.tree_files)
    for (ParsedTree& t : parse_tree_file(tf)) library_.add(std::move(t));
  library_.link();

  SimClock clock;
  clock.realtime = opts_.realtime.value_or(false);
  sim_ = std::make_unique<Simulation>(map_, clock, opts_.seed.value_or(scenario_.seed));
  sim_->planner_threads = opts_.planner_threads;
  sim_->debug_candidates = opts_.debug_candidates;
  for (const auto& [name, schedule] : scenario_.signals) sim_->add_signal(name, schedule);

  for (const AgentSpec& a : scenario_.agents) {
    int id = 0;
    if (a.drives_tree()) {
      agent_trees_.push_back(library_.tree(a.tree));  // private copy per agent
      BTNode& mine = agent_trees_.back();
      for (const auto& [key, text] : a.overrides) {
        const ParamValue v = parse_param_value(text, scenario_.file);
        if (override_param(mine, key, v) == 0) {
          throw ScenarioError(scenario_.file + ": agent '" + a.name +
                              "': override of undeclared parameter '" + key + "'");
        }
      }
      id = sim_->add_sdv(a.name, &mine, make_start(a, map_), a.route, actor_type_of(a.kind));
    } else if (a.external) {
      id = sim_->add_external(a.name, make_start(a, map_));
    } else {
      id = sim_->add_scripted(a.name, actor_type_of(a.kind), a.script.polyline,
                              a.script.profile, a.active, a.length, a.width);
      scripts_[a.name] = a.script;
    }
    ids_[a.name] = id;
  }
  fired_.assign(scenario_.triggers.size(), false);
  sim_->pre_tick_hook = [this](Simulation& s) { eval_triggers(s); };
}

int ScenarioRun::agent_id(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) throw ScenarioError("unknown agent '" + name + "'");
  return it->second;
}

void ScenarioRun::eval_triggers(Simulation& sim) {
  for (size_t i = 0; i < scenario_.triggers.size(); ++i) {
    if (fired_[i]) continue;
    const TriggerSpec& t = scenario_.triggers[i];
    bool hit = false;
    switch (t.when) {
      case TriggerSpec::When::Time:
        hit = sim.sim_time() >= t.time - 1e-9;
        break;
      case TriggerSpec::When::Region: {
        const VehicleRuntime* v = sim.find_vehicle(t.region_agent);
        if (v && v->active) {
          hit = v->state.x >= t.x_min && v->state.x <= t.x_max && v->state.y >= t.y_min &&
                v->state.y <= t.y_max;
        }
        break;
      }
      case TriggerSpec::When::Gap: {
        const VehicleRuntime* a = sim.find_vehicle(t.gap_from);
        const VehicleRuntime* b = sim.find_vehicle(t.gap_to);
        if (a && b && a->active && b->active)
          hit = (a->state.position() - b->state.position()).norm() <= t.gap_below;
        break;
      }
    }
    if (!hit) continue;
    fired_[i] = true;
    switch (t.action) {
      case TriggerSpec::Action::Activate:
        sim.activate(agent_id(t.target_agent));
        sim.log_event("trigger", "index=" + std::to_string(i) +
                                     " activate=" + t.target_agent);
        break;
      case TriggerSpec::Action::SwitchProfile: {
        const ScriptSpec& sc = scripts_.at(t.target_agent);
        sim.switch_profile(agent_id(t.target_agent), sc.alternates.at(t.profile_name));
        sim.log_event("trigger", "index=" + std::to_string(i) + " switch_profile=" +
                                     t.target_agent + "/" + t.profile_name);
        break;
      }
      case TriggerSpec::Action::End:
        sim.request_end(t.end_reason);
        sim.log_event("trigger", "index=" + std::to_string(i) + " end=" + t.end_reason);
        break;
    }
  }
}

EndConditions ScenarioRun::effective_end() const {
  EndConditions end = scenario_.end;
  if (opts_.until) end.timeout = *opts_.until;
  if (opts_.fail_on_collision) end.on_collision = true;
  return end;
}

SimulationResult ScenarioRun::run() { return sim_->run(effective_end()); }

SimulationResult run_scenario(const Scenario& scenario, const RunOptions& opts) {
  ScenarioRun run(scenario, opts);
  return run.run();
}

}  // namespace sdv
