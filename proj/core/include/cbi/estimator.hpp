#pragma once

// Physical state estimation for tank/flow plants.

#include <set>
#include <string>
#include <vector>

#include "cbi/snapshot.hpp"

namespace cbi {

struct TankModel {
  std::string level_sensor;
  std::vector<std::string> inflow;   // flow sensors
  std::vector<std::string> outflow;  // flow sensors
  double f_c{1.0};                   // level units per flow unit per cycle
  Interval capacity{0.0, 0.0};
};

struct FlowModel {
  std::string flow_sensor;
  double base_rate{0.0};
  std::vector<std::string> gates;  // actuators; BOOL maps to 0/1
};

/// Deviation threshold τ per sensor.
using ThresholdSpec = std::map<std::string, double, KeyLess>;

struct PlantTopology {
  std::vector<TankModel> tanks;
  std::vector<FlowModel> flows;
  std::set<std::string, KeyLess> passthrough;
  ThresholdSpec thresholds;

  const TankModel* tank(std::string_view level_sensor) const;
  const FlowModel* flow(std::string_view flow_sensor) const;
  /// Throws ConfigError on F_c <= 0, inverted capacity, negative τ or a
  /// sensor modelled twice.
  void validate() const;
};

struct Prediction {
  std::map<std::string, Interval, KeyLess> intervals;
  /// Point estimate of every modelled sensor.
  ValueMap centers;
  /// Modelled sensors demoted to passthrough, with the reason.
  std::vector<std::string> warnings;
};

/// One cycle of the tank equation: level + (Σinflow - Σoutflow)·f_c, rounded
/// to binary32 and clamped to the capacity. `flows` must hold every
/// referenced flow sensor.
double tank_step(const TankModel& t, double level, const ValueMap& flows, double f_c);

/// Interval of every sensor of `accepted` for the next cycle. Sensors
/// without a model, or whose inputs are missing from `accepted`, map to
/// [-inf, +inf].
Prediction predict(const PlantTopology& topology, const CycleSnapshot& accepted, const ThresholdSpec& tau);

/// n-step prediction. `schedule[i]` holds the actuator values applied after
/// step i (missing entries hold `accepted.actuators`). Half-widths grow by τ
/// per step; each interval is the hull over all n steps.
Prediction predict_n(const PlantTopology& topology, const CycleSnapshot& accepted, const ThresholdSpec& tau, int n,
                     const std::vector<ValueMap>& schedule = {});

}  // namespace cbi
