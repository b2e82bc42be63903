#include "cbi/monitor.hpp"

#include <algorithm>
#include <cstdio>

#include "cbi/error.hpp"
#include "json.hpp"

namespace cbi {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Single:
      return "single";
    case Mode::Multi:
      return "multi";
    case Mode::Lazy:
      return "lazy";
  }
  return "?";
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Ok:
      return "OK";
    case Status::SensorDeviation:
      return "SensorDeviation";
    case Status::ActuationDeviation:
      return "ActuationDeviation";
    case Status::ModelFault:
      return "ModelFault";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (iequals(s, "single")) return Mode::Single;
  if (iequals(s, "multi")) return Mode::Multi;
  if (iequals(s, "lazy")) return Mode::Lazy;
  return std::nullopt;
}

namespace {

bool matches(const Value& v, double reported) { return Value::from_double(v.type(), reported) == v; }

std::vector<double> doubles(const std::set<Value>& set) {
  std::vector<double> out;
  for (const auto& v : set) out.push_back(v.to_double());
  return out;
}

}  // namespace

Monitor::Monitor(const StModel& model, PlantTopology topology, MonitorConfig cfg)
    : Monitor(std::make_shared<const Executable>(model), std::move(topology), std::move(cfg)) {}

Monitor::Monitor(std::shared_ptr<const Executable> exe, PlantTopology topology, MonitorConfig cfg)
    : exe_(std::move(exe)), topo_(std::move(topology)), cfg_(std::move(cfg)) {
  if (cfg_.predict_n < 1) throw ConfigError("predict_n must be >= 1");
  for (const auto& [s, t] : topo_.thresholds) cfg_.tau.emplace(s, t);
  for (const auto& [s, t] : cfg_.tau)
    if (!(t >= 0)) throw ConfigError("tau of '" + s + "' must be >= 0");
  for (const auto& [s, e] : cfg_.eps)
    if (!(e >= 0) || !std::isfinite(e)) throw ConfigError("epsilon of '" + s + "' must be finite and >= 0");
  topo_.validate();
  // An n-step estimate can be off by up to n per-cycle errors.
  exec_eps_ = cfg_.eps;
  if (cfg_.exec_input == ExecInput::Estimate)
    for (auto& [s, e] : exec_eps_)
      if (topo_.tank(s) || topo_.flow(s)) e *= cfg_.predict_n;
  sensors_ = exe_->model().sensors();
  actuators_ = exe_->model().actuators();
  state_ = exe_->initial_state();
}

Prediction Monitor::prediction() const {
  std::vector<ValueMap> schedule;
  for (std::size_t i = 1; i < history_.size(); ++i) schedule.push_back(history_[i].actuators);
  return predict_n(topo_, history_.front(), cfg_.tau, static_cast<int>(history_.size()), schedule);
}

Inputs Monitor::exec_inputs(const CycleSnapshot& incoming, const Prediction* pred) const {
  Inputs in;
  for (const auto& s : sensors_) {
    double x = incoming.sensors.at(s);
    if (pred && cfg_.exec_input == ExecInput::Estimate) {
      auto c = pred->centers.find(s);
      if (c != pred->centers.end()) x = c->second;
    }
    in[s] = x;
  }
  if (accepted_)
    for (const auto& a : actuators_) in[a] = accepted_->actuators.at(a);
  return in;
}

void Monitor::check_actuators(const CycleSnapshot& incoming, const Inputs& inputs, DetectionVerdict& v,
                              MachineState& next) {
  auto mismatches = [&](const auto& allowed) {
    std::vector<std::string> bad;
    for (const auto& a : actuators_)
      if (!allowed(a, incoming.actuators.at(a))) bad.push_back(a);
    return bad;
  };
  auto run_multi = [&]() {
    MultiResult m = exe_->run_cycle_multi(state_, inputs, exec_eps_, cfg_.multi);
    v.forks = m.set.fork_count;
    auto bad = mismatches([&](const std::string& a, double r) {
      const auto& set = m.set.values.at(a);
      return std::any_of(set.begin(), set.end(), [&](const Value& x) { return matches(x, r); });
    });
    for (const auto& a : bad)
      v.details.push_back({a, incoming.actuators.at(a), std::nullopt, doubles(m.set.values.at(a)), "multi"});
    next = std::move(m.next);
  };

  if (cfg_.mode == Mode::Multi) {
    run_multi();
  } else {
    CycleResult r = exe_->run_cycle(state_, inputs);
    auto bad = mismatches([&](const std::string& a, double x) { return matches(r.actuators.at(a), x); });
    if (!bad.empty() && cfg_.mode == Mode::Lazy) {
      run_multi();
    } else {
      for (const auto& a : bad)
        v.details.push_back({a, incoming.actuators.at(a), std::nullopt, {r.actuators.at(a).to_double()}, "single"});
      next = std::move(r.next);
    }
  }
  if (!v.details.empty()) v.status = Status::ActuationDeviation;
}

void Monitor::accept(const CycleSnapshot& s) {
  accepted_ = s;
  history_.push_back(s);
  while (history_.size() > static_cast<std::size_t>(cfg_.predict_n)) history_.pop_front();
}

DetectionVerdict Monitor::step(const CycleSnapshot& raw) {
  if (halted_) throw ConfigError("monitor halted at cycle " + std::to_string(accepted_ ? accepted_->cycle_index : 0));
  DetectionVerdict v;
  v.cycle_index = raw.cycle_index;
  v.mode = cfg_.mode;

  auto fault = [&](const std::string& variable, double reported, const std::string& note) {
    v.status = Status::ModelFault;
    v.details.push_back({variable, reported, std::nullopt, {}, note});
  };

  CycleSnapshot incoming = raw;
  bool incomplete = false;
  for (const auto* names : {&sensors_, &actuators_}) {
    bool is_sensor = names == &sensors_;
    ValueMap& m = is_sensor ? incoming.sensors : incoming.actuators;
    for (const auto& n : *names) {
      if (m.count(n)) continue;
      if (accepted_) {
        m[n] = (is_sensor ? accepted_->sensors : accepted_->actuators).at(n);
        std::string w = "cycle " + std::to_string(raw.cycle_index) + ": '" + n + "' missing, previous value kept";
        if (warnings_.size() < 100) warnings_.push_back(w);
      } else {
        fault(n, 0.0, "missing from the first snapshot");
        incomplete = true;
      }
    }
  }

  if (!incomplete && accepted_ && raw.cycle_index != accepted_->cycle_index + 1) {
    fault("cycle_index", static_cast<double>(raw.cycle_index),
          "stream gap, expected " + std::to_string(accepted_->cycle_index + 1));
    history_.clear();
  } else if (!incomplete) {
    std::optional<Prediction> pred;
    if (accepted_) {
      pred = prediction();
      for (const auto& w : pred->warnings)
        if (warnings_.size() < 100 && std::find(warnings_.begin(), warnings_.end(), w) == warnings_.end())
          warnings_.push_back(w);
      for (const auto& s : sensors_) {
        auto it = pred->intervals.find(s);
        if (it == pred->intervals.end()) continue;
        double r = incoming.sensors.at(s);
        if (!it->second.contains(r)) v.details.push_back({s, r, it->second, {}, ""});
      }
      if (!v.details.empty()) v.status = Status::SensorDeviation;
    }
    Inputs inputs = exec_inputs(incoming, pred ? &*pred : nullptr);
    try {
      MachineState next;
      if (v.status == Status::Ok) {
        check_actuators(incoming, inputs, v, next);
      } else {
        next = exe_->run_cycle(state_, inputs).next;
      }
      state_ = std::move(next);
    } catch (const EvalError& e) {
      v.details.clear();
      fault("", 0.0, e.what());
    } catch (const ForkBudgetExceeded& e) {
      v.details.clear();
      fault("", 0.0, e.what());
    }
  }

  if (!v.ok() && cfg_.on_alarm == OnAlarm::Halt) {
    halted_ = true;
    return v;
  }
  if (!incomplete) accept(incoming);
  return v;
}

StreamSummary run_stream(Monitor& monitor, SnapshotSource& stream, const std::vector<Window>& windows,
                         const VerdictSink& sink) {
  StreamSummary s;
  s.first_detection.assign(windows.size(), std::nullopt);
  std::size_t outside = 0, outside_alarms = 0;
  while (auto snap = stream.next()) {
    DetectionVerdict v = monitor.step(*snap);
    if (sink) sink(v);
    ++s.cycles;
    ++s.by_status[std::string(to_string(v.status))];
    bool inside = false;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      if (v.cycle_index < windows[w].first || v.cycle_index > windows[w].second) continue;
      inside = true;
      if (!v.ok() && !s.first_detection[w]) s.first_detection[w] = v.cycle_index;
    }
    if (!v.ok()) ++s.alarms;
    if (!inside) {
      ++outside;
      if (!v.ok()) ++outside_alarms;
    }
    if (monitor.halted()) {
      s.halted = true;
      break;
    }
  }
  if (!windows.empty()) {
    auto hit = std::count_if(s.first_detection.begin(), s.first_detection.end(), [](const auto& d) { return d.has_value(); });
    s.tpr = static_cast<double>(hit) / static_cast<double>(windows.size());
  }
  s.fpr = outside ? static_cast<double>(outside_alarms) / static_cast<double>(outside) : 0.0;
  return s;
}

StreamSummary run_stream(const StModel& model, const PlantTopology& topology, const std::vector<CycleSnapshot>& stream,
                         const MonitorConfig& cfg, const std::vector<Window>& windows,
                         std::vector<DetectionVerdict>* verdicts) {
  Monitor m(model, topology, cfg);
  VectorSource src(stream);
  VerdictSink sink;
  if (verdicts) sink = [&](const DetectionVerdict& v) { verdicts->push_back(v); };
  return run_stream(m, src, windows, sink);
}

std::vector<RocPoint> roc_sweep(const StModel& model, const PlantTopology& topology,
                                const std::vector<CycleSnapshot>& benign, const std::vector<CycleSnapshot>& attacked,
                                const std::vector<Window>& windows, std::vector<double> thresholds,
                                const MonitorConfig& cfg) {
  if (windows.empty()) throw LabelMissing("roc_sweep needs the attack windows of the attacked stream");
  std::sort(thresholds.begin(), thresholds.end());
  auto exe = std::make_shared<const Executable>(model);
  std::vector<RocPoint> out;
  for (double tau : thresholds) {
    for (Mode mode : {Mode::Single, Mode::Multi}) {
      MonitorConfig c = cfg;
      c.mode = mode;
      c.on_alarm = OnAlarm::Continue;
      for (const auto& t : topology.tanks) c.tau[t.level_sensor] = tau;
      PlantTopology topo = topology;
      topo.thresholds.clear();
      for (const auto& [s, t] : topology.thresholds) c.tau.emplace(s, t);

      Monitor mb(exe, topo, c);
      VectorSource b(benign);
      StreamSummary sb = run_stream(mb, b);
      Monitor ma(exe, topo, c);
      VectorSource a(attacked);
      StreamSummary sa = run_stream(ma, a, windows);
      out.push_back({tau, mode, *sa.tpr, sb.fpr});
    }
  }
  return out;
}

std::string roc_csv(const std::vector<RocPoint>& points) {
  std::string out = "tau,mode,tpr,fpr\n";
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.9g,%s,%.9g,%.9g\n", p.tau, std::string(to_string(p.mode)).c_str(), p.tpr, p.fpr);
    out += buf;
  }
  return out;
}

std::string verdict_json(const DetectionVerdict& v) {
  nlohmann::json details = nlohmann::json::array();
  for (const auto& d : v.details) {
    nlohmann::json j{{"variable", d.variable}, {"reported", d.reported}};
    if (d.interval) j["interval"] = {d.interval->lo, d.interval->hi};
    if (!d.allowed.empty()) j["allowed"] = d.allowed;
    if (!d.note.empty()) j["note"] = d.note;
    details.push_back(std::move(j));
  }
  nlohmann::json j{{"cycle_index", v.cycle_index},
                   {"status", std::string(to_string(v.status))},
                   {"mode", std::string(to_string(v.mode))},
                   {"details", std::move(details)}};
  if (v.forks) j["forks"] = v.forks;
  return j.dump();
}

std::string summary_json(const StreamSummary& s) {
  nlohmann::json j{{"cycles", s.cycles}, {"alarms", s.alarms}, {"by_status", s.by_status}, {"fpr", s.fpr},
                   {"halted", s.halted}};
  j["tpr"] = s.tpr ? nlohmann::json(*s.tpr) : nlohmann::json(nullptr);
  if (!s.first_detection.empty()) {
    nlohmann::json fd = nlohmann::json::array();
    for (const auto& d : s.first_detection) fd.push_back(d ? nlohmann::json(*d) : nlohmann::json(nullptr));
    j["first_detection"] = std::move(fd);
  }
  return j.dump(2);
}

}  // namespace cbi
