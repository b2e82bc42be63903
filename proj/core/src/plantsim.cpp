#include "cbi/plantsim.hpp"

#include <algorithm>
#include <random>

#include "cbi/error.hpp"
#include "cbi/stlang.hpp"

namespace cbi {

std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::LogicReplace:
      return "logic_replace";
    case AttackKind::SensorReplay:
      return "sensor_replay";
    case AttackKind::SensorBias:
      return "sensor_bias";
    case AttackKind::ActuationOverride:
      return "actuation_override";
    case AttackKind::ThresholdTamper:
      return "threshold_tamper";
  }
  return "?";
}

std::optional<AttackKind> parse_attack_kind(std::string_view s) {
  for (auto k : {AttackKind::LogicReplace, AttackKind::SensorReplay, AttackKind::SensorBias,
                 AttackKind::ActuationOverride, AttackKind::ThresholdTamper})
    if (iequals(s, to_string(k))) return k;
  return std::nullopt;
}

std::vector<Window> windows_of(const std::vector<AttackScenario>& attacks) {
  std::vector<Window> out;
  for (const auto& a : attacks) out.push_back(a.window);
  return out;
}

namespace {

template <class F>
void visit_literals(Expr& e, F& f) {
  if (e.kind == Expr::Kind::Literal && e.literal.type() != Type::Bool) f(e);
  for (auto& o : e.operands) visit_literals(o, f);
}

template <class F>
void visit_literals(std::vector<Statement>& body, F& f) {
  for (auto& s : body) {
    switch (s.kind) {
      case Statement::Kind::Assign:
        visit_literals(s.value, f);
        break;
      case Statement::Kind::FbCall:
        for (auto& a : s.args) visit_literals(a.value, f);
        break;
      case Statement::Kind::If:
        for (auto& b : s.branches) {
          visit_literals(b.cond, f);
          visit_literals(b.body, f);
        }
        break;
      case Statement::Kind::Case:
        visit_literals(s.value, f);
        for (auto& a : s.arms) visit_literals(a.body, f);
        break;
    }
    visit_literals(s.else_body, f);
  }
}

double param(const std::map<std::string, double, KeyLess>& m, const std::string& specific, const std::string& global) {
  if (auto it = m.find(specific); it != m.end()) return it->second;
  if (auto it = m.find(global); it != m.end()) return it->second;
  return 0.0;
}

bool active(const AttackScenario& a, std::int64_t n) { return a.window.first <= n && n <= a.window.second; }

struct Plc {
  std::string name;
  Executable exe;
  MachineState state;
  std::vector<std::string> reads;    // sensors of its own model
  std::vector<std::string> writes;   // actuators of its own model
};

struct Attacked {
  const AttackScenario* attack;
  std::size_t plc;
  Executable exe;
  std::vector<std::string> reads;
  std::optional<MachineState> state;
};

Inputs inputs_for(const std::vector<std::string>& reads, const ValueMap& sensors, const ValueMap& bus) {
  Inputs in;
  for (const auto& s : reads) {
    auto it = sensors.find(s);
    in[s] = it != sensors.end() ? it->second : bus.at(s);
  }
  return in;
}

// Uniform double in [-1, 1] from raw engine bits, identical on every platform.
double symmetric_unit(std::mt19937_64& rng) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

double f32(double x) { return static_cast<double>(static_cast<float>(x)); }

}  // namespace

std::vector<Value> numeric_constants(const StProgram& prog) {
  StProgram copy = prog;
  std::vector<Value> out;
  auto f = [&](Expr& e) { out.push_back(e.literal); };
  visit_literals(copy.body, f);
  return out;
}

StProgram tamper_constant(const StProgram& prog, int site, double new_value) {
  StProgram copy = prog;
  int index = 0;
  bool done = false;
  auto f = [&](Expr& e) {
    if (index++ == site) {
      e.literal = Value::from_double(e.literal.type(), new_value);
      done = true;
    }
  };
  visit_literals(copy.body, f);
  if (!done)
    throw ConfigError("program '" + prog.name + "' has " + std::to_string(index) + " numeric constants, no site " +
                      std::to_string(site));
  return copy;
}

void simulate(const SimConfig& cfg, const std::vector<PlcSource>& plcs, const std::vector<AttackScenario>& attacks,
              const SimSink& sink) {
  const PlantTopology& topo = cfg.topology;
  topo.validate();
  if (cfg.cycles < 0) throw ConfigError("cycles must be >= 0");
  auto programs = programs_of(plcs);
  TimingReport timing = check_timing(programs);
  if (!timing.ok)
    throw ConfigError("timing check failed: execution budgets sum to " + std::to_string(timing.sum_budget.count()) +
                      " ms, shortest task interval is " + std::to_string(timing.min_interval.count()) + " ms");
  StModel model = consolidate(plcs);

  std::set<std::string, KeyLess> sensors, actuators;
  for (const auto& s : model.sensors()) sensors.insert(s);
  for (const auto& a : model.actuators()) actuators.insert(a);
  std::set<std::string, KeyLess> simulated;
  for (const auto& t : topo.tanks) {
    simulated.insert(t.level_sensor);
    for (const auto* list : {&t.inflow, &t.outflow})
      for (const auto& f : *list)
        if (!topo.flow(f)) throw ConfigError("tank '" + t.level_sensor + "' refers to unknown flow '" + f + "'");
  }
  for (const auto& f : topo.flows) {
    simulated.insert(f.flow_sensor);
    for (const auto& g : f.gates)
      if (!actuators.count(g)) throw ConfigError("flow '" + f.flow_sensor + "' is gated by unknown actuator '" + g + "'");
  }
  for (const auto& s : simulated)
    if (!sensors.count(s)) throw ConfigError("topology sensor '" + s + "' is not read by any PLC");
  for (const auto& s : sensors)
    if (!simulated.count(s)) throw ConfigError("sensor '" + s + "' has no tank or flow model to simulate it");
  for (const auto& [s, b] : cfg.noise)
    if (!simulated.count(s) || !(b >= 0) || !std::isfinite(b)) throw ConfigError("bad noise bound for '" + s + "'");
  for (const auto& [k, eta] : cfg.mismatch)
    if (!std::isfinite(eta) || eta <= -1.0) throw ConfigError("bad mismatch for '" + k + "'");

  std::vector<Plc> plant;
  for (const auto& p : plcs) {
    StModel m = consolidate({p});
    Plc plc{p.name, Executable(m), {}, m.sensors(), m.actuators()};
    plc.state = plc.exe.initial_state();
    plant.push_back(std::move(plc));
  }
  auto plc_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < plant.size(); ++i)
      if (iequals(plant[i].name, name)) return i;
    throw ConfigError("attack refers to unknown PLC '" + name + "'");
  };

  std::vector<Attacked> tampered;
  std::map<std::size_t, std::vector<double>> recorded;  // attack index -> sensor history
  for (std::size_t i = 0; i < attacks.size(); ++i) {
    const AttackScenario& a = attacks[i];
    std::string where = "attack '" + a.name + "': ";
    if (a.window.first < 0 || a.window.first > a.window.second || a.window.second >= cfg.cycles)
      throw ConfigError(where + "window outside the run");
    switch (a.kind) {
      case AttackKind::LogicReplace:
      case AttackKind::ThresholdTamper: {
        std::size_t p = plc_index(a.plc);
        StModel m;
        if (a.kind == AttackKind::LogicReplace) {
          ParsedUnit unit = parse_program(a.source);
          unit.program.exec_budget = plcs[p].unit.program.exec_budget;
          m = consolidate({PlcSource{plcs[p].name, unit}});
          for (const auto& w : m.actuators())
            if (std::find_if(plant[p].writes.begin(), plant[p].writes.end(),
                             [&](const std::string& x) { return iequals(x, w); }) == plant[p].writes.end())
              throw ConfigError(where + "replacement writes '" + w + "', which PLC '" + a.plc + "' does not own");
          for (const auto& r : m.sensors())
            if (!sensors.count(r) && !actuators.count(r)) throw ConfigError(where + "replacement reads unknown '" + r + "'");
        } else {
          PlcSource src = plcs[p];
          src.unit.program = tamper_constant(src.unit.program, a.constant_site, a.new_value);
          m = consolidate({src});
        }
        Executable exe(m);
        tampered.push_back({&a, p, std::move(exe), m.sensors(), std::nullopt});
        break;
      }
      case AttackKind::SensorReplay:
        if (!sensors.count(a.target)) throw ConfigError(where + "unknown sensor '" + a.target + "'");
        if (a.recorded_from < 0 || a.recorded_from >= a.window.first)
          throw ConfigError(where + "recorded_from must lie before the window");
        recorded[i];
        break;
      case AttackKind::SensorBias:
        if (!sensors.count(a.target)) throw ConfigError(where + "unknown sensor '" + a.target + "'");
        break;
      case AttackKind::ActuationOverride:
        if (!actuators.count(a.target)) throw ConfigError(where + "unknown actuator '" + a.target + "'");
        break;
    }
  }

  std::mt19937_64 rng(cfg.seed);
  ValueMap levels;
  for (const auto& t : topo.tanks) {
    auto it = cfg.initial_levels.find(t.level_sensor);
    levels[t.level_sensor] = it != cfg.initial_levels.end() ? it->second : t.capacity.center();
  }
  for (const auto& [s, v] : cfg.initial_levels)
    if (!topo.tank(s)) throw ConfigError("initial level for unknown tank '" + s + "'");
  Executable master(model);
  MachineState init = master.initial_state();
  ValueMap applied;
  for (const auto& a : model.actuators()) applied[a] = master.get(init, a).to_double();
  double seconds = static_cast<double>(model.master.task_interval.count()) / 1000.0;

  for (std::int64_t n = 0; n < cfg.cycles; ++n) {
    ValueMap flows;
    for (const auto& f : topo.flows) {
      double rate = f.base_rate * (1.0 + param(cfg.mismatch, f.flow_sensor + ".base_rate", "base_rate"));
      for (const auto& g : f.gates) rate *= applied.at(g) != 0.0 ? 1.0 : 0.0;
      flows[f.flow_sensor] = f32(rate);
    }

    ValueMap sampled;
    for (const auto* src : {&levels, &flows})
      for (const auto& [s, v] : *src) {
        double x = v;
        auto nb = cfg.noise.find(s);
        if (nb != cfg.noise.end() && nb->second > 0) x += nb->second * symmetric_unit(rng);
        sampled[s] = x;
      }
    for (const auto& a : attacks)
      if (a.kind == AttackKind::SensorBias && active(a, n))
        sampled.at(a.target) += a.ramp ? a.amount * static_cast<double>(n - a.window.first + 1) : a.amount;
    for (auto& [s, v] : sampled) v = f32(v);

    ValueMap bus = applied, commanded, reported_act;
    for (std::size_t i = 0; i < plant.size(); ++i) {
      Plc& plc = plant[i];
      MachineState before = plc.state;
      CycleResult genuine = plc.exe.run_cycle(plc.state, inputs_for(plc.reads, sampled, bus));
      plc.state = std::move(genuine.next);
      std::map<std::string, Value, KeyLess> cmds = genuine.actuators, reports = genuine.actuators;
      for (auto& t : tampered) {
        if (t.plc != i) continue;
        if (!active(*t.attack, n)) {
          t.state.reset();
          continue;
        }
        if (!t.state) t.state = t.attack->kind == AttackKind::ThresholdTamper ? before : t.exe.initial_state();
        CycleResult r = t.exe.run_cycle(*t.state, inputs_for(t.reads, sampled, bus));
        t.state = std::move(r.next);
        for (const auto& [a, v] : r.actuators) {
          cmds[a] = v;
          if (!t.attack->stealth) reports[a] = v;
        }
      }
      for (const auto& [a, v] : cmds) {
        bus[a] = v.to_double();
        commanded[a] = v.to_double();
      }
      for (const auto& [a, v] : reports) reported_act[a] = v.to_double();
    }

    applied = commanded;
    for (const auto& a : attacks)
      if (a.kind == AttackKind::ActuationOverride && active(a, n)) {
        applied.at(a.target) = a.value;
        if (!a.stealth) reported_act.at(a.target) = a.value;
      }

    CycleSnapshot truth{n, static_cast<double>(n) * seconds, sampled, applied};
    CycleSnapshot reported{n, truth.timestamp, sampled, reported_act};
    for (std::size_t i = 0; i < attacks.size(); ++i) {
      const AttackScenario& a = attacks[i];
      if (a.kind != AttackKind::SensorReplay) continue;
      auto& hist = recorded.at(i);
      if (active(a, n)) {
        auto k = static_cast<std::size_t>(a.recorded_from + (a.freeze ? 0 : n - a.window.first));
        reported.sensors.at(a.target) = hist.at(k);
      }
      hist.push_back(sampled.at(a.target));
    }
    sink(truth, reported);

    ValueMap next;
    for (const auto& t : topo.tanks) {
      double fc = t.f_c * (1.0 + param(cfg.mismatch, t.level_sensor + ".F_c", "F_c"));
      next[t.level_sensor] = tank_step(t, levels.at(t.level_sensor), flows, fc);
    }
    levels = std::move(next);
  }
}

SimResult simulate(const SimConfig& cfg, const std::vector<PlcSource>& plcs, const std::vector<AttackScenario>& attacks) {
  SimResult r;
  simulate(cfg, plcs, attacks, [&](const CycleSnapshot& t, const CycleSnapshot& rep) {
    r.truth.push_back(t);
    r.reported.push_back(rep);
  });
  return r;
}

}  // namespace cbi
