#pragma once

// The shipped 3-stage plant and its attack suite, loaded from the embedded
// data files.

#include <vector>

#include "cbi/config.hpp"
#include "cbi/monitor.hpp"
#include "cbi/plantsim.hpp"

namespace cbi::selftest {

struct Plant {
  std::vector<PlcSource> plcs;
  PlantTopology topology;
  ErrorMarginSpec eps;
  ThresholdSpec tau;
  SimConfig benign;    // sim.json
  SimConfig attacked;  // sim_attacked.json
  std::vector<AttackScenario> attacks;
};

Plant load_plant();

/// Error margin that covers a relative F_c error of `eta` on every tank:
/// (Σ inflow base rates + Σ outflow base rates)·F_c·|eta|, plus 1e-3.
ErrorMarginSpec induced_error_bound(const PlantTopology& topology, double eta);

/// Tank level thresholds swept for the ROC curve.
std::vector<double> roc_thresholds();

/// Monitor settings used by the suites: lazy, continue, the plant's ε and τ.
MonitorConfig plant_monitor_config(const Plant& plant);

}  // namespace cbi::selftest
