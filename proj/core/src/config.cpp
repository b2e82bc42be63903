#include "cbi/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbi/error.hpp"
#include "cbi/stlang.hpp"
#include "json.hpp"

namespace cbi {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

std::string dir_of(const std::string& path) {
  fs::path p = fs::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

std::string resolve(const std::string& base, const std::string& rel) {
  fs::path p(rel);
  return p.is_absolute() ? rel : (fs::path(base) / p).string();
}

class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(where_ + (key.empty() ? "" : "." + key) + ": " + why);
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& at(const std::string& key) const {
    if (!has(key)) fail(key, "required field missing");
    return j_.at(key);
  }

  std::string str(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, const std::string& fallback) const { return has(key) ? str(key) : fallback; }

  double num(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

  std::int64_t integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::vector<std::string> strings(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of strings");
    for (const auto& x : v) {
      if (!x.is_string()) fail(key, "expected an array of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  std::map<std::string, double, KeyLess> numbers(const std::string& key) const {
    std::map<std::string, double, KeyLess> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_object()) fail(key, "expected an object of numbers");
    for (const auto& [k, x] : v.items()) {
      if (!x.is_number()) fail(key + "." + k, "expected a number");
      out[k] = x.get<double>();
    }
    return out;
  }

  void only(std::initializer_list<const char*> allowed) const {
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(k, "unknown field");
    }
  }

 private:
  const json& j_;
  std::string where_;
};

const json& list_or_wrapped(const json& j, const char* key, const std::string& what) {
  if (j.is_array()) return j;
  if (j.is_object() && j.contains(key) && j.at(key).is_array()) return j.at(key);
  throw ConfigError(what + ": expected an array or an object with \"" + key + "\"");
}

}  // namespace

FileReader disk_reader(const std::string& base_dir) {
  return [base_dir](const std::string& rel) { return read_file(resolve(base_dir, rel)); };
}

std::vector<PlcSource> parse_manifest(const std::string& text, const FileReader& read) {
  json doc = parse_json(text, "manifest");
  const json& list = list_or_wrapped(doc, "plcs", "manifest");
  if (list.empty()) throw ConfigError("manifest lists no PLCs");
  std::vector<PlcSource> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    Fields f(list[i], "manifest[" + std::to_string(i) + "]");
    f.only({"plc_name", "st_source_path", "exec_budget_ms"});
    PlcSource p;
    p.name = f.str("plc_name");
    p.unit = parse_program(read(f.str("st_source_path")));
    double budget = f.num("exec_budget_ms");
    if (!(budget >= 0)) f.fail("exec_budget_ms", "must be >= 0");
    p.unit.program.exec_budget = Millis(static_cast<std::int64_t>(budget));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PlcSource> load_manifest(const std::string& path) {
  try {
    return parse_manifest(read_file(path), disk_reader(dir_of(path)));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

PlantTopology parse_topology(const std::string& text) {
  json doc = parse_json(text, "topology");
  Fields top(doc, "topology");
  top.only({"tanks", "flows", "passthrough", "thresholds"});
  PlantTopology t;
  if (top.has("tanks")) {
    const json& tanks = top.at("tanks");
    if (!tanks.is_array()) top.fail("tanks", "expected an array");
    for (std::size_t i = 0; i < tanks.size(); ++i) {
      Fields f(tanks[i], "topology.tanks[" + std::to_string(i) + "]");
      f.only({"level_sensor", "inflow", "outflow", "F_c", "capacity"});
      TankModel m;
      m.level_sensor = f.str("level_sensor");
      m.inflow = f.strings("inflow");
      m.outflow = f.strings("outflow");
      m.f_c = f.num("F_c");
      const json& cap = f.at("capacity");
      if (!cap.is_array() || cap.size() != 2 || !cap[0].is_number() || !cap[1].is_number())
        f.fail("capacity", "expected [lo, hi]");
      m.capacity = {cap[0].get<double>(), cap[1].get<double>()};
      t.tanks.push_back(std::move(m));
    }
  }
  if (top.has("flows")) {
    const json& flows = top.at("flows");
    if (!flows.is_array()) top.fail("flows", "expected an array");
    for (std::size_t i = 0; i < flows.size(); ++i) {
      Fields f(flows[i], "topology.flows[" + std::to_string(i) + "]");
      f.only({"flow_sensor", "base_rate", "gates"});
      t.flows.push_back({f.str("flow_sensor"), f.num("base_rate"), f.strings("gates")});
    }
  }
  for (const auto& s : top.strings("passthrough")) t.passthrough.insert(s);
  t.thresholds = top.numbers("thresholds");
  t.validate();
  for (const auto& tank : t.tanks)
    for (const auto* list : {&tank.inflow, &tank.outflow})
      for (const auto& f : *list)
        if (!t.flow(f) && !t.passthrough.count(f))
          throw ConfigError("topology: tank '" + tank.level_sensor + "' refers to undeclared flow sensor '" + f + "'");
  return t;
}

PlantTopology load_topology(const std::string& path) {
  try {
    return parse_topology(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::map<std::string, double, KeyLess> parse_margins(const std::string& text, const std::string& what) {
  json doc = parse_json(text, what);
  if (!doc.is_object()) throw ConfigError(what + ": expected an object mapping sensor names to numbers");
  std::map<std::string, double, KeyLess> out;
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_number()) throw ConfigError(what + "." + k + ": expected a number");
    double x = v.get<double>();
    if (!(x >= 0) || !std::isfinite(x)) throw ConfigError(what + "." + k + ": must be finite and >= 0");
    if (!out.emplace(k, x).second) throw ConfigError(what + "." + k + ": given twice");
  }
  return out;
}

std::map<std::string, double, KeyLess> load_margins(const std::string& path, const std::string& what) {
  return parse_margins(read_file(path), what + " (" + path + ")");
}

std::vector<AttackScenario> parse_attacks(const std::string& text, const FileReader& read) {
  json doc = parse_json(text, "attacks");
  const json& list = list_or_wrapped(doc, "attacks", "attacks");
  std::vector<AttackScenario> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string where = "attacks[" + std::to_string(i) + "]";
    Fields f(list[i], where);
    f.only({"name", "kind", "window", "stealth", "plc", "source", "source_path", "target", "recorded_from", "freeze",
            "amount", "ramp", "value", "constant_site", "new_value"});
    AttackScenario a;
    a.name = f.str("name", where);
    auto kind = parse_attack_kind(f.str("kind"));
    if (!kind) f.fail("kind", "unknown attack kind");
    a.kind = *kind;
    const json& w = f.at("window");
    if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer())
      f.fail("window", "expected [start_cycle, end_cycle]");
    a.window = {w[0].get<std::int64_t>(), w[1].get<std::int64_t>()};
    a.stealth = f.boolean("stealth", false);
    switch (a.kind) {
      case AttackKind::LogicReplace:
        a.plc = f.str("plc");
        if (f.has("source"))
          a.source = f.str("source");
        else
          a.source = read(f.str("source_path"));
        break;
      case AttackKind::ThresholdTamper:
        a.plc = f.str("plc");
        a.constant_site = static_cast<int>(f.integer("constant_site"));
        a.new_value = f.num("new_value");
        break;
      case AttackKind::SensorReplay:
        a.target = f.str("target");
        a.recorded_from = f.integer("recorded_from");
        a.freeze = f.boolean("freeze", false);
        break;
      case AttackKind::SensorBias:
        a.target = f.str("target");
        a.amount = f.num("amount");
        a.ramp = f.boolean("ramp", false);
        break;
      case AttackKind::ActuationOverride:
        a.target = f.str("target");
        if (f.has("value") && f.at("value").is_boolean())
          a.value = f.at("value").get<bool>() ? 1.0 : 0.0;
        else
          a.value = f.num("value");
        break;
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<AttackScenario> load_attacks(const std::string& path) {
  try {
    return parse_attacks(read_file(path), disk_reader(dir_of(path)));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

SimConfig parse_sim_config(const std::string& text, PlantTopology topology) {
  json doc = parse_json(text, "sim");
  Fields f(doc, "sim");
  f.only({"manifest", "topology", "cycles", "seed", "mismatch", "noise", "initial_levels"});
  SimConfig c;
  c.topology = std::move(topology);
  c.cycles = f.integer("cycles");
  if (c.cycles < 0) f.fail("cycles", "must be >= 0");
  std::int64_t seed = f.integer("seed", 1);
  if (seed < 0) f.fail("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.mismatch = f.numbers("mismatch");
  c.noise = f.numbers("noise");
  for (const auto& [k, v] : f.numbers("initial_levels")) c.initial_levels[k] = v;
  return c;
}

SimSetup load_sim(const std::string& path) {
  std::string text = read_file(path);
  json doc = parse_json(text, path);
  Fields f(doc, path);
  std::string base = dir_of(path);
  SimSetup s;
  s.plcs = load_manifest(resolve(base, f.str("manifest")));
  try {
    s.config = parse_sim_config(text, load_topology(resolve(base, f.str("topology"))));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

}  // namespace cbi
