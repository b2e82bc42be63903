#include "cbi/selftest/criteria.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>

#include "cbi/error.hpp"
#include "cbi/plantsim.hpp"
#include "cbi/selftest/assets.hpp"
#include "cbi/selftest/generator.hpp"
#include "cbi/selftest/plant.hpp"
#include "cbi/stlang.hpp"

namespace cbi::selftest {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <class F>
CriterionResult timed(int id, std::string name, F&& body) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  auto t0 = Clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("unexpected error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

// Union of plain cycles over every {-1, 0, +1} offset of the sensors with a
// non-zero margin, plus the zero-offset successor state.
struct Exhaustive {
  std::map<std::string, std::set<Value>, KeyLess> values;
  MachineState next;
};

Exhaustive exhaustive(const Executable& exe, const MachineState& state, const Inputs& in, const ErrorMarginSpec& eps) {
  std::vector<std::pair<std::string, double>> tainted;
  for (const auto& [s, e] : eps)
    if (e > 0) tainted.emplace_back(s, e);
  std::size_t total = 1;
  for (std::size_t i = 0; i < tainted.size(); ++i) total *= 3;
  Exhaustive out;
  for (std::size_t code = 0; code < total; ++code) {
    Inputs shifted = in;
    std::size_t c = code;
    bool zero = true;
    for (const auto& [s, e] : tainted) {
      int d = static_cast<int>(c % 3) - 1;
      c /= 3;
      zero = zero && d == 0;
      shifted[s] = in.at(s) + d * e;
    }
    CycleResult r = exe.run_cycle(state, shifted);
    for (const auto& [a, v] : r.actuators) out.values[a].insert(v);
    if (zero) out.next = std::move(r.next);
  }
  return out;
}

}  // namespace

CriterionResult check_multi_exec_oracle(const SelfTestOptions& o) {
  return timed(1, "multi-execution oracle equivalence", [&](CriterionResult& r) {
    std::mt19937_64 rng(o.seed);
    GenOptions gen;
    gen.tainted_sensors = 4;
    gen.max_if_depth = 4;
    int mismatches = 0, forked = 0, cycles = 0, errors = 0;
    std::size_t max_forks = 0;
    std::string first;
    for (int i = 0; i < o.programs; ++i) {
      GeneratedProgram g = generate_program(rng, gen);
      StModel model = consolidate({PlcSource{"gen", parse_program(g.source)}});
      Executable exe(model);
      MachineState state = exe.initial_state();
      for (int c = 0; c < o.cycles_per_program; ++c) {
        Inputs in = random_snapshot(rng, g);
        ++cycles;
        std::optional<MultiResult> multi;
        std::optional<Exhaustive> oracle;
        try {
          multi = exe.run_cycle_multi(state, in, g.eps);
        } catch (const EvalError&) {
        }
        try {
          oracle = exhaustive(exe, state, in, g.eps);
        } catch (const EvalError&) {
        }
        if (!multi || !oracle) {
          if (multi || oracle) {
            if (mismatches++ == 0) first = "program " + std::to_string(i) + " cycle " + std::to_string(c) + " (error)";
          }
          ++errors;
          break;
        }
        max_forks = std::max(max_forks, multi->set.fork_count);
        if (multi->set.fork_count > 1) ++forked;
        if (multi->set.values != oracle->values || !(multi->next == oracle->next)) {
          if (mismatches++ == 0) first = "program " + std::to_string(i) + " cycle " + std::to_string(c);
          break;
        }
        state = std::move(multi->next);
      }
    }
    r.pass = mismatches == 0 && o.programs >= 1000;
    r.detail = std::to_string(o.programs) + " programs, " + std::to_string(cycles) + " cycles (" +
               std::to_string(forked) + " forked, max " + std::to_string(max_forks) + " forks), " +
               std::to_string(errors) + " evaluation errors on both sides, " + std::to_string(mismatches) + " mismatches";
    if (!first.empty()) r.detail += "; first at " + first;
  });
}

namespace {

std::string renamed(const StModel& master, const std::string& plc, const std::string& name) {
  for (const auto& rn : master.renames)
    if (iequals(rn.plc, plc) && iequals(rn.from, name)) return rn.to;
  return name;
}

// Compares every variable of an isolated program with its counterpart in
// the master. Returns the first differing variable, or "".
std::string compare_state(const Executable& iso, const MachineState& si, const Executable& master,
                          const MachineState& sm, const std::string& plc) {
  for (const VarDecl* d : iso.model().master.declarations()) {
    std::string m = renamed(master.model(), plc, d->name);
    if (d->kind == VarKind::FbInstance) {
      if (iso.fb_fields(si, d->name) != master.fb_fields(sm, m)) return d->name;
    } else if (!(iso.get(si, d->name) == master.get(sm, m))) {
      return d->name;
    }
  }
  return "";
}

bool timing_cases_ok(std::string& detail) {
  auto prog = [](int interval, int budget) {
    StProgram p;
    p.task_interval = Millis(interval);
    p.exec_budget = Millis(budget);
    return p;
  };
  bool boundary = !check_timing({prog(1000, 400), prog(1000, 600)}).ok;
  bool below = check_timing({prog(1000, 400), prog(1000, 599)}).ok;
  bool over = !check_timing({prog(1000, 500), prog(500, 100)}).ok;
  bool ok = boundary && below && over;
  detail = std::string("timing: sum == min rejected ") + (boundary ? "yes" : "NO") + ", sum < min accepted " +
           (below ? "yes" : "NO") + ", sum > min rejected " + (over ? "yes" : "NO");
  return ok;
}

}  // namespace

CriterionResult check_consolidation(const SelfTestOptions& o) {
  return timed(2, "consolidation semantic preservation", [&](CriterionResult& r) {
    std::mt19937_64 rng(o.seed + 2);
    const std::vector<std::string> pool = {"X0", "X1", "X2", "X3"};
    int mismatches = 0, renamed_locals = 0;
    std::string first;
    for (int pair = 0; pair < o.pairs && mismatches == 0; ++pair) {
      GenOptions ga, gb;
      ga.program_name = "pa";
      ga.output_prefix = "a_";
      gb.program_name = "pb";
      gb.output_prefix = "b_";
      ga.sensor_pool = gb.sensor_pool = pool;
      GeneratedProgram a = generate_program(rng, ga);
      GeneratedProgram b = generate_program(rng, gb);
      PlcSource pa{"plc_a", parse_program(a.source)}, pb{"plc_b", parse_program(b.source)};
      Executable master(consolidate({pa, pb}));
      Executable iso_a(consolidate({pa})), iso_b(consolidate({pb}));
      renamed_locals += static_cast<int>(master.model().renames.size());
      MachineState sm = master.initial_state(), sa = iso_a.initial_state(), sb = iso_b.initial_state();
      for (int s = 0; s < o.snapshots; ++s) {
        Inputs ia = random_snapshot(rng, a), ib = random_snapshot(rng, b), all = ia;
        for (const auto& [k, v] : ib) all.emplace(k, v);
        for (const auto& [k, v] : all) {
          if (ia.count(k)) ia[k] = v;
          if (ib.count(k)) ib[k] = v;
        }
        sm = master.run_cycle(sm, all).next;
        sa = iso_a.run_cycle(sa, ia).next;
        sb = iso_b.run_cycle(sb, ib).next;
        std::string bad = compare_state(iso_a, sa, master, sm, "plc_a");
        if (bad.empty()) bad = compare_state(iso_b, sb, master, sm, "plc_b");
        if (!bad.empty()) {
          ++mismatches;
          first = "pair " + std::to_string(pair) + " snapshot " + std::to_string(s) + " variable " + bad;
          break;
        }
      }
    }
    std::string timing;
    bool timing_ok = timing_cases_ok(timing);
    r.pass = mismatches == 0 && timing_ok && o.pairs >= 100 && o.snapshots >= 100;
    r.detail = std::to_string(o.pairs) + " pairs x " + std::to_string(o.snapshots) + " snapshots, " +
               std::to_string(renamed_locals) + " renamed locals, " + std::to_string(mismatches) + " mismatches; " +
               timing;
    if (!first.empty()) r.detail += "; first at " + first;
  });
}

CriterionResult check_zero_false_positives(const SelfTestOptions&) {
  return timed(3, "zero false positives with multi-execution", [&](CriterionResult& r) {
    Plant plant = load_plant();
    double eta = plant.benign.mismatch.count("F_c") ? plant.benign.mismatch.at("F_c") : 0.0;
    SimResult sim = simulate(plant.benign, plant.plcs);
    StModel model = consolidate(plant.plcs);
    MonitorConfig single = plant_monitor_config(plant);
    single.mode = Mode::Single;
    MonitorConfig lazy = plant_monitor_config(plant);
    lazy.eps = induced_error_bound(plant.topology, eta);
    StreamSummary ss = run_stream(model, plant.topology, sim.reported, single);
    StreamSummary sl = run_stream(model, plant.topology, sim.reported, lazy);
    r.pass = ss.fpr > 0 && sl.fpr == 0 && ss.cycles >= 10000 && std::fabs(eta - 0.02) < 1e-12;
    r.detail = std::to_string(ss.cycles) + " benign cycles, F_c mismatch " + fmt("%+.0f%%", eta * 100) +
               ", tau LIT=" + fmt("%g", plant.tau.at("LIT1")) + ": single FPR " + fmt("%.4g", ss.fpr) + " (" +
               std::to_string(ss.alarms) + " alarms), lazy FPR " + fmt("%.4g", sl.fpr) + " (" +
               std::to_string(sl.alarms) + " alarms) with eps";
    for (const auto& [s, e] : lazy.eps) r.detail += " " + s + "=" + fmt("%.4g", e);
  });
}

std::int64_t replay_latency_bound(const PlantTopology& topology, const ThresholdSpec& tau, const CycleSnapshot& before,
                                  const std::string& level_sensor) {
  const TankModel* t = topology.tank(level_sensor);
  if (!t) return -1;
  double net = 0.0;
  for (const auto& f : t->inflow) net += before.sensors.at(f);
  for (const auto& f : t->outflow) net -= before.sensors.at(f);
  double rate = std::fabs(net) * t->f_c;
  if (rate == 0.0) return -1;
  auto it = tau.find(level_sensor);
  double tv = it == tau.end() ? 0.0 : it->second;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(tv / rate)));
}

CriterionResult check_attack_recall(const SelfTestOptions&) {
  return timed(4, "attack recall and replay latency", [&](CriterionResult& r) {
    Plant plant = load_plant();
    SimResult sim = simulate(plant.attacked, plant.plcs, plant.attacks);
    StModel model = consolidate(plant.plcs);
    MonitorConfig cfg = plant_monitor_config(plant);
    auto windows = windows_of(plant.attacks);
    StreamSummary s = run_stream(model, plant.topology, sim.reported, cfg, windows);

    std::set<AttackKind> kinds;
    int detected = 0, replays = 0, replay_ok = 0, drifts = 0, drift_ok = 0;
    std::string missed, latencies, drift_notes;
    for (std::size_t i = 0; i < plant.attacks.size(); ++i) {
      const AttackScenario& a = plant.attacks[i];
      kinds.insert(a.kind);
      if (s.first_detection[i]) {
        ++detected;
      } else {
        missed += " " + a.name;
      }
      if (a.kind == AttackKind::SensorReplay && a.freeze && plant.topology.tank(a.target)) {
        ++replays;
        auto start = a.window.first;
        std::int64_t bound = replay_latency_bound(plant.topology, cfg.tau, sim.reported.at(start - 1), a.target);
        std::int64_t latency = s.first_detection[i] ? *s.first_detection[i] - start + 1 : -1;
        bool ok = bound > 0 && latency > 0 && std::llabs(latency - bound) <= 1;
        replay_ok += ok;
        latencies += " " + a.name + " " + std::to_string(latency) + "/" + std::to_string(bound);
      }
      if (a.kind == AttackKind::SensorBias && a.ramp && plant.topology.tank(a.target)) {
        // Slow drift: each undetected step stays within tau, and the alarm
        // comes before the reported level leaves the tank's safe range.
        ++drifts;
        const TankModel* t = plant.topology.tank(a.target);
        double tau = cfg.tau.count(a.target) ? cfg.tau.at(a.target) : 0.0;
        bool ok = false;
        std::int64_t m = -1;
        if (s.first_detection[i]) {
          m = *s.first_detection[i] - a.window.first + 1;
          double before = sim.reported.at(static_cast<std::size_t>(*s.first_detection[i] - 1)).sensors.at(a.target);
          ok = std::fabs(a.amount) <= tau && t->capacity.contains(before);
        }
        drift_ok += ok;
        drift_notes += " " + a.name + " after " + std::to_string(m) + " cycles (" + fmt("%g", a.amount) + "/cycle <= tau " +
                       fmt("%g", tau) + ")";
      }
    }
    r.pass = plant.attacks.size() >= 12 && kinds.size() == 5 && detected == static_cast<int>(plant.attacks.size()) &&
             replays > 0 && replay_ok == replays && drift_ok == drifts;
    r.detail = std::to_string(detected) + "/" + std::to_string(plant.attacks.size()) + " windows detected, " +
               std::to_string(kinds.size()) + "/5 kinds; replay latency/bound:" + latencies;
    if (drifts) r.detail += "; drift detected:" + drift_notes;
    if (!missed.empty()) r.detail += "; missed:" + missed;
  });
}

std::vector<RocPoint> plant_roc() {
  Plant plant = load_plant();
  SimResult benign = simulate(plant.benign, plant.plcs);
  SimResult attacked = simulate(plant.attacked, plant.plcs, plant.attacks);
  StModel model = consolidate(plant.plcs);
  return roc_sweep(model, plant.topology, benign.reported, attacked.reported, windows_of(plant.attacks),
                   roc_thresholds(), plant_monitor_config(plant));
}

CriterionResult check_roc(const SelfTestOptions&) {
  return timed(5, "ROC regression", [&](CriterionResult& r) {
    std::vector<RocPoint> points = plant_roc();
    std::map<Mode, std::vector<RocPoint>> by_mode;
    for (const auto& p : points) by_mode[p.mode].push_back(p);
    bool monotone = true, dominated = true;
    for (const auto& [mode, pts] : by_mode)
      for (std::size_t i = 1; i < pts.size(); ++i)
        monotone = monotone && pts[i].tau >= pts[i - 1].tau && pts[i].fpr <= pts[i - 1].fpr;
    const auto& single = by_mode[Mode::Single];
    const auto& multi = by_mode[Mode::Multi];
    for (std::size_t i = 0; i < std::min(single.size(), multi.size()); ++i)
      dominated = dominated && single[i].tau == multi[i].tau && multi[i].fpr <= single[i].fpr;
    std::string csv = roc_csv(points);
    auto golden = asset("tests/golden/roc.csv");
    bool matches = golden && *golden == csv;
    r.pass = single.size() >= 10 && multi.size() == single.size() && monotone && dominated && matches;
    r.detail = std::to_string(single.size()) + " thresholds; FPR non-increasing " + (monotone ? "yes" : "NO") +
               ", FPR(multi) <= FPR(single) " + (dominated ? "yes" : "NO") + ", golden " +
               (!golden ? "MISSING" : matches ? "matches" : "DIFFERS");
    if (!single.empty())
      r.detail += "; single FPR " + fmt("%.4g", single.front().fpr) + " -> " + fmt("%.4g", single.back().fpr) +
                  ", multi FPR " + fmt("%.4g", multi.front().fpr) + " -> " + fmt("%.4g", multi.back().fpr);
  });
}

std::vector<CriterionResult> run_self_test(const SelfTestOptions& o,
                                           const std::function<void(const CriterionResult&)>& report) {
  std::vector<CriterionResult> out;
  for (auto* f : {&check_multi_exec_oracle, &check_consolidation, &check_zero_false_positives, &check_attack_recall,
                  &check_roc}) {
    out.push_back(f(o));
    if (report) report(out.back());
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.1f s", r.seconds);
  return std::string(r.pass ? "[PASS] " : "[FAIL] ") + std::to_string(r.id) + " " + r.name + ": " + r.detail + " (" +
         secs + ")";
}

}  // namespace cbi::selftest
