#include "cbi/selftest/plant.hpp"

#include <cmath>

#include "cbi/selftest/assets.hpp"

namespace cbi::selftest {

Plant load_plant() {
  FileReader read = asset_reader("data/plant");
  Plant p;
  p.plcs = parse_manifest(read("manifest.json"), read);
  p.topology = parse_topology(read("topology.json"));
  p.eps = parse_margins(read("eps.json"), "eps");
  p.tau = parse_margins(read("tau.json"), "tau");
  p.benign = parse_sim_config(read("sim.json"), p.topology);
  p.attacked = parse_sim_config(read("sim_attacked.json"), p.topology);
  p.attacks = parse_attacks(read("attacks.json"), read);
  return p;
}

ErrorMarginSpec induced_error_bound(const PlantTopology& topology, double eta) {
  ErrorMarginSpec out;
  for (const auto& t : topology.tanks) {
    double sum = 0.0;
    for (const auto* list : {&t.inflow, &t.outflow})
      for (const auto& f : *list)
        if (const FlowModel* m = topology.flow(f)) sum += std::fabs(m->base_rate);
    out[t.level_sensor] = sum * t.f_c * std::fabs(eta) + 1e-3;
  }
  return out;
}

std::vector<double> roc_thresholds() { return {0.0, 0.1, 0.2, 0.35, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 1000.0}; }

MonitorConfig plant_monitor_config(const Plant& plant) {
  MonitorConfig c;
  c.mode = Mode::Lazy;
  c.on_alarm = OnAlarm::Continue;
  c.eps = plant.eps;
  c.tau = plant.tau;
  return c;
}

}  // namespace cbi::selftest
