#pragma once

// Per-cycle detection loop: sensor readings are checked against the
// estimator, actuator commands against (multi-)execution of the
// consolidated model.

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cbi/estimator.hpp"
#include "cbi/exec.hpp"
#include "cbi/historian.hpp"
#include "cbi/snapshot.hpp"

namespace cbi {

enum class Mode : std::uint8_t { Single, Multi, Lazy };
enum class OnAlarm : std::uint8_t { Continue, Halt };
/// Sensor values fed to the model: the estimator's point prediction (for
/// modelled sensors) or the reported readings.
enum class ExecInput : std::uint8_t { Estimate, Reported };
enum class Status : std::uint8_t { Ok, SensorDeviation, ActuationDeviation, ModelFault };

std::string_view to_string(Mode m);
std::string_view to_string(Status s);
std::optional<Mode> parse_mode(std::string_view s);

struct MonitorConfig {
  Mode mode{Mode::Lazy};
  OnAlarm on_alarm{OnAlarm::Continue};
  ExecInput exec_input{ExecInput::Estimate};
  ThresholdSpec tau;
  ErrorMarginSpec eps;
  MultiOptions multi;
  /// Cycles between the accepted snapshot and the predicted one. With
  /// estimate inputs, modelled sensors fork over predict_n·ε.
  int predict_n{1};
};

struct Detail {
  std::string variable;
  double reported{0.0};
  std::optional<Interval> interval;  // sensor checks
  std::vector<double> allowed;       // actuation checks
  std::string note;
};

struct DetectionVerdict {
  std::int64_t cycle_index{0};
  Status status{Status::Ok};
  std::vector<Detail> details;
  Mode mode{Mode::Lazy};
  /// Forks explored by multi-execution this cycle (0 when not run).
  std::size_t forks{0};

  bool ok() const { return status == Status::Ok; }
};

class Monitor {
 public:
  Monitor(const StModel& model, PlantTopology topology, MonitorConfig cfg);
  /// Shares an already compiled model.
  Monitor(std::shared_ptr<const Executable> exe, PlantTopology topology, MonitorConfig cfg);

  /// Checks one incoming snapshot and advances. Throws ConfigError when
  /// called after a halt.
  DetectionVerdict step(const CycleSnapshot& incoming);

  bool halted() const { return halted_; }
  const std::optional<CycleSnapshot>& accepted() const { return accepted_; }
  const MachineState& state() const { return state_; }
  const MonitorConfig& config() const { return cfg_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  Prediction prediction() const;
  Inputs exec_inputs(const CycleSnapshot& incoming, const Prediction* pred) const;
  void check_actuators(const CycleSnapshot& incoming, const Inputs& inputs, DetectionVerdict& v, MachineState& next);
  void accept(const CycleSnapshot& s);

  std::shared_ptr<const Executable> exe_;
  PlantTopology topo_;
  MonitorConfig cfg_;
  ErrorMarginSpec exec_eps_;  // cfg_.eps, widened for n-step estimates
  std::vector<std::string> sensors_, actuators_;
  MachineState state_;
  std::optional<CycleSnapshot> accepted_;
  std::deque<CycleSnapshot> history_;  // last predict_n accepted snapshots
  std::vector<std::string> warnings_;
  bool halted_{false};
};

/// Attack window [start, end], inclusive.
using Window = std::pair<std::int64_t, std::int64_t>;

struct StreamSummary {
  std::size_t cycles{0};
  std::size_t alarms{0};
  std::map<std::string, std::size_t> by_status;
  /// Fraction of labelled windows with at least one alarm inside.
  std::optional<double> tpr;
  /// Alarms outside windows over cycles outside windows (all cycles when
  /// unlabelled).
  double fpr{0.0};
  /// First alarm cycle per window (nullopt: missed).
  std::vector<std::optional<std::int64_t>> first_detection;
  bool halted{false};
};

using VerdictSink = std::function<void(const DetectionVerdict&)>;

StreamSummary run_stream(Monitor& monitor, SnapshotSource& stream, const std::vector<Window>& windows = {},
                         const VerdictSink& sink = {});
StreamSummary run_stream(const StModel& model, const PlantTopology& topology, const std::vector<CycleSnapshot>& stream,
                         const MonitorConfig& cfg, const std::vector<Window>& windows = {},
                         std::vector<DetectionVerdict>* verdicts = nullptr);

struct RocPoint {
  double tau{0.0};
  Mode mode{Mode::Single};
  double tpr{0.0};
  double fpr{0.0};
};

/// Sweeps τ of every tank level sensor (other sensors keep cfg.tau) in
/// single and multi mode. FPR comes from `benign`, TPR from `attacked`.
/// Throws LabelMissing when `windows` is empty.
std::vector<RocPoint> roc_sweep(const StModel& model, const PlantTopology& topology,
                                const std::vector<CycleSnapshot>& benign, const std::vector<CycleSnapshot>& attacked,
                                const std::vector<Window>& windows, std::vector<double> thresholds,
                                const MonitorConfig& cfg);

std::string roc_csv(const std::vector<RocPoint>& points);

std::string verdict_json(const DetectionVerdict& v);
std::string summary_json(const StreamSummary& s);

}  // namespace cbi
