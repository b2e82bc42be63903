#include "cbi/estimator.hpp"

#include <algorithm>

#include "cbi/error.hpp"

namespace cbi {

const TankModel* PlantTopology::tank(std::string_view level_sensor) const {
  for (const auto& t : tanks)
    if (iequals(t.level_sensor, level_sensor)) return &t;
  return nullptr;
}

const FlowModel* PlantTopology::flow(std::string_view flow_sensor) const {
  for (const auto& f : flows)
    if (iequals(f.flow_sensor, flow_sensor)) return &f;
  return nullptr;
}

void PlantTopology::validate() const {
  std::set<std::string, KeyLess> modelled;
  auto claim = [&](const std::string& s) {
    if (s.empty()) throw ConfigError("topology: empty sensor name");
    if (!modelled.insert(s).second) throw ConfigError("topology: sensor '" + s + "' is modelled twice");
    if (passthrough.count(s)) throw ConfigError("topology: sensor '" + s + "' is both modelled and passthrough");
  };
  for (const auto& t : tanks) {
    claim(t.level_sensor);
    if (!(t.f_c > 0) || !std::isfinite(t.f_c)) throw ConfigError("topology: F_c of '" + t.level_sensor + "' must be > 0");
    if (!(t.capacity.lo <= t.capacity.hi))
      throw ConfigError("topology: capacity of '" + t.level_sensor + "' has lo > hi");
  }
  for (const auto& f : flows) {
    claim(f.flow_sensor);
    if (!std::isfinite(f.base_rate)) throw ConfigError("topology: base_rate of '" + f.flow_sensor + "' is not finite");
  }
  for (const auto& [s, tau] : thresholds)
    if (!(tau >= 0)) throw ConfigError("topology: threshold of '" + s + "' must be >= 0");
}

namespace {

double tau_of(const ThresholdSpec& tau, const std::string& sensor) {
  auto it = tau.find(sensor);
  return it == tau.end() ? 0.0 : it->second;
}

double rounded(double x) { return static_cast<double>(static_cast<float>(x)); }

// Flow rate implied by the gate states, or nullopt when a gate is missing.
std::optional<double> flow_rate(const FlowModel& f, const ValueMap& actuators) {
  double rate = f.base_rate;
  for (const auto& g : f.gates) {
    auto it = actuators.find(g);
    if (it == actuators.end()) return std::nullopt;
    rate *= it->second != 0.0 ? 1.0 : 0.0;
  }
  return rounded(rate);
}

struct Modelled {
  std::vector<const TankModel*> tanks;
  std::vector<const FlowModel*> flows;
};

// Models whose inputs are all present in `accepted`; the others are reported
// as warnings.
Modelled usable(const PlantTopology& topo, const CycleSnapshot& accepted, std::vector<std::string>& warnings) {
  Modelled m;
  for (const auto& f : topo.flows) {
    std::vector<std::string> missing;
    if (!accepted.sensors.count(f.flow_sensor)) missing.push_back(f.flow_sensor);
    for (const auto& g : f.gates)
      if (!accepted.actuators.count(g)) missing.push_back(g);
    if (missing.empty()) {
      m.flows.push_back(&f);
    } else {
      std::string w = f.flow_sensor + ": missing";
      for (const auto& x : missing) w += " " + x;
      warnings.push_back(w + "; treated as passthrough");
    }
  }
  for (const auto& t : topo.tanks) {
    std::vector<std::string> missing;
    if (!accepted.sensors.count(t.level_sensor)) missing.push_back(t.level_sensor);
    for (const auto* list : {&t.inflow, &t.outflow})
      for (const auto& s : *list)
        if (!accepted.sensors.count(s)) missing.push_back(s);
    if (missing.empty()) {
      m.tanks.push_back(&t);
    } else {
      std::string w = t.level_sensor + ": missing";
      for (const auto& x : missing) w += " " + x;
      warnings.push_back(w + "; treated as passthrough");
    }
  }
  return m;
}

Interval widen(double center, double half, const Interval* clamp_to) {
  Interval iv{center - half, center + half};
  if (clamp_to) {
    iv.lo = std::clamp(iv.lo, clamp_to->lo, clamp_to->hi);
    iv.hi = std::clamp(iv.hi, clamp_to->lo, clamp_to->hi);
  }
  return iv;
}

}  // namespace

double tank_step(const TankModel& t, double level, const ValueMap& flows, double f_c) {
  double net = 0.0;
  for (const auto& s : t.inflow) net += flows.at(s);
  for (const auto& s : t.outflow) net -= flows.at(s);
  double c = rounded(level + net * f_c);
  return std::clamp(c, t.capacity.lo, t.capacity.hi);
}

Prediction predict(const PlantTopology& topology, const CycleSnapshot& accepted, const ThresholdSpec& tau) {
  return predict_n(topology, accepted, tau, 1);
}

Prediction predict_n(const PlantTopology& topology, const CycleSnapshot& accepted, const ThresholdSpec& tau, int n,
                     const std::vector<ValueMap>& schedule) {
  if (n < 1) throw ConfigError("predict_n: n must be >= 1");
  Prediction out;
  for (const auto& [name, v] : accepted.sensors) out.intervals[name] = Interval::everything();
  Modelled m = usable(topology, accepted, out.warnings);

  ValueMap levels, flows = accepted.sensors;
  for (const auto* t : m.tanks) levels[t->level_sensor] = accepted.sensors.at(t->level_sensor);
  ValueMap actuators = accepted.actuators;
  std::map<std::string, Interval, KeyLess> hull;
  for (int step = 1; step <= n; ++step) {
    ValueMap next_levels;
    for (const auto* t : m.tanks) next_levels[t->level_sensor] = tank_step(*t, levels.at(t->level_sensor), flows, t->f_c);
    ValueMap next_flows = flows;
    for (const auto* f : m.flows) next_flows[f->flow_sensor] = *flow_rate(*f, actuators);
    levels = std::move(next_levels);
    flows = std::move(next_flows);
    if (static_cast<std::size_t>(step - 1) < schedule.size())
      for (const auto& [a, v] : schedule[static_cast<std::size_t>(step - 1)]) actuators[a] = v;

    for (const auto* t : m.tanks) {
      Interval iv = widen(levels.at(t->level_sensor), step * tau_of(tau, t->level_sensor), &t->capacity);
      auto [it, fresh] = hull.emplace(t->level_sensor, iv);
      if (!fresh) it->second = it->second.hull(iv);
    }
    for (const auto* f : m.flows) {
      Interval iv = widen(flows.at(f->flow_sensor), step * tau_of(tau, f->flow_sensor), nullptr);
      auto [it, fresh] = hull.emplace(f->flow_sensor, iv);
      if (!fresh) it->second = it->second.hull(iv);
    }
  }
  for (const auto* t : m.tanks) out.centers[t->level_sensor] = levels.at(t->level_sensor);
  for (const auto* f : m.flows) out.centers[f->flow_sensor] = flows.at(f->flow_sensor);
  for (auto& [name, iv] : hull) out.intervals[name] = iv;
  return out;
}

}  // namespace cbi
