#include <doctest.h>

#include <cmath>

#include "cbi/error.hpp"
#include "cbi/monitor.hpp"
#include "cbi/plantsim.hpp"
#include "cbi/selftest/plant.hpp"
#include "common.hpp"

using namespace cbi;

namespace {

const selftest::Plant& plant() {
  static const selftest::Plant p = selftest::load_plant();
  return p;
}

SimConfig exact(std::int64_t cycles) {
  SimConfig c = plant().benign;
  c.mismatch.clear();
  c.noise.clear();
  c.cycles = cycles;
  return c;
}

AttackScenario attack(AttackKind kind, Window w, std::string target) {
  AttackScenario a;
  a.name = "t";
  a.kind = kind;
  a.window = w;
  a.target = std::move(target);
  return a;
}

}  // namespace

TEST_CASE("plant PLC constants") {
  std::vector<Value> c = numeric_constants(plant().plcs[0].unit.program);
  REQUIRE(c.size() == 5);
  CHECK(c[0].to_double() == 300.0);
  CHECK(c[1].to_double() == 150.0);
  CHECK(c[2].to_double() == 700.0);
  CHECK(c[3].to_double() == 100.0);
  CHECK(c[4].to_double() == 0.5);
  StProgram t = tamper_constant(plant().plcs[0].unit.program, 0, 600.0);
  CHECK(numeric_constants(t)[0].to_double() == 600.0);
  CHECK_THROWS_AS(tamper_constant(t, 5, 1.0), ConfigError);
}

TEST_CASE("an exact plant is monitored without alarms at any positive tau") {
  SimResult sim = simulate(exact(100), plant().plcs);
  REQUIRE(sim.reported.size() == 100);
  CHECK(sim.truth == sim.reported);
  CHECK(sim.reported[3].cycle_index == 3);
  CHECK(sim.reported[3].timestamp == 3.0);
  StModel model = consolidate(plant().plcs);
  for (double tau : {1e-3, 5.0}) {
    MonitorConfig cfg;
    cfg.mode = Mode::Single;
    for (const auto& [s, t] : plant().tau) cfg.tau[s] = tau;
    StreamSummary s = run_stream(model, plant().topology, sim.reported, cfg);
    CHECK(s.cycles == 100);
    CHECK(s.alarms == 0);
  }
}

TEST_CASE("simulation is deterministic in the seed") {
  SimConfig c = exact(200);
  c.noise = {{"LIT1", 0.5}, {"FIT1", 0.1}};
  SimResult a = simulate(c, plant().plcs), b = simulate(c, plant().plcs);
  CHECK(a.reported == b.reported);
  c.seed += 1;
  CHECK_FALSE(simulate(c, plant().plcs).reported == a.reported);
  // FIT2 has no noise: it reads the gated base rate exactly.
  for (const auto& s : a.reported) {
    double f = s.sensors.at("FIT2");
    CHECK((f == 0.0 || f == static_cast<double>(6.7f)));
  }
}

TEST_CASE("model mismatch makes single execution alarm and multi-execution absorb it") {
  const selftest::Plant& p = plant();
  SimResult sim = simulate(p.benign, p.plcs);
  StModel model = consolidate(p.plcs);
  MonitorConfig single = selftest::plant_monitor_config(p);
  single.mode = Mode::Single;
  MonitorConfig lazy = selftest::plant_monitor_config(p);
  StreamSummary s = run_stream(model, p.topology, sim.reported, single);
  StreamSummary l = run_stream(model, p.topology, sim.reported, lazy);
  CHECK(s.alarms > 0);
  CHECK(s.by_status.at("ActuationDeviation") == s.alarms);
  CHECK(l.alarms == 0);
}

TEST_CASE("attack effects on the reported stream") {
  const selftest::Plant& p = plant();
  SimConfig c = exact(300);
  SUBCASE("bias shifts the reported sensor only") {
    AttackScenario a = attack(AttackKind::SensorBias, {100, 110}, "FIT2");
    a.amount = 2.0;
    SimResult base = simulate(c, p.plcs);
    SimResult r = simulate(c, p.plcs, {a});
    CHECK(r.reported[105].sensors.at("FIT2") == doctest::Approx(base.reported[105].sensors.at("FIT2") + 2.0));
    CHECK(r.reported[111].sensors.at("FIT2") == base.reported[111].sensors.at("FIT2"));
    CHECK(r.reported[105].sensors.at("LIT2") == base.reported[105].sensors.at("LIT2"));
  }
  SUBCASE("ramped bias grows each cycle") {
    AttackScenario a = attack(AttackKind::SensorBias, {100, 110}, "LIT3");
    a.amount = 4.0;
    a.ramp = true;
    SimResult base = simulate(c, p.plcs);
    SimResult r = simulate(c, p.plcs, {a});
    CHECK(r.reported[100].sensors.at("LIT3") - base.reported[100].sensors.at("LIT3") == doctest::Approx(4.0));
    CHECK(r.reported[102].sensors.at("LIT3") - base.reported[102].sensors.at("LIT3") == doctest::Approx(12.0));
  }
  SUBCASE("frozen replay repeats one recorded value") {
    AttackScenario a = attack(AttackKind::SensorReplay, {100, 150}, "LIT1");
    a.recorded_from = 90;
    a.freeze = true;
    SimResult r = simulate(c, p.plcs, {a});
    for (int n = 100; n <= 150; ++n) CHECK(r.reported[n].sensors.at("LIT1") == r.truth[90].sensors.at("LIT1"));
  }
  SUBCASE("override changes the applied actuator") {
    AttackScenario a = attack(AttackKind::ActuationOverride, {100, 110}, "V2");
    a.value = 0.0;
    SimResult r = simulate(c, p.plcs, {a});
    CHECK(r.truth[105].actuators.at("V2") == 0.0);
    CHECK(r.reported[105].actuators.at("V2") == 0.0);
    a.stealth = true;
    SimResult s = simulate(c, p.plcs, {a});
    CHECK(s.truth[105].actuators.at("V2") == 0.0);
  }
}

TEST_CASE("inconsistent configurations are rejected") {
  const selftest::Plant& p = plant();
  SimConfig c = exact(100);
  AttackScenario late = attack(AttackKind::SensorBias, {90, 100}, "LIT1");
  CHECK_THROWS_AS(simulate(c, p.plcs, {late}), ConfigError);
  AttackScenario replay = attack(AttackKind::SensorReplay, {50, 60}, "LIT1");
  replay.recorded_from = 50;
  CHECK_THROWS_AS(simulate(c, p.plcs, {replay}), ConfigError);
  CHECK_THROWS_AS(simulate(c, p.plcs, {attack(AttackKind::ActuationOverride, {1, 2}, "LIT1")}), ConfigError);
  SimConfig noisy = c;
  noisy.noise["XYZ"] = 1.0;
  CHECK_THROWS_AS(simulate(noisy, p.plcs), ConfigError);
  std::vector<PlcSource> slow = p.plcs;
  slow[0].unit.program.exec_budget = Millis(600);
  CHECK_THROWS_AS(simulate(c, slow), ConfigError);
}

TEST_CASE("replay on a moving tank is flagged inside the window") {
  const selftest::Plant& p = plant();
  SimConfig c = p.attacked;
  c.cycles = 2000;
  AttackScenario a = attack(AttackKind::SensorReplay, {1636, 1835}, "LIT1");
  a.recorded_from = 1635;
  a.freeze = true;
  SimResult r = simulate(c, p.plcs, {a});
  std::vector<DetectionVerdict> verdicts;
  StreamSummary s = run_stream(consolidate(p.plcs), p.topology, r.reported, selftest::plant_monitor_config(p),
                               {a.window}, &verdicts);
  REQUIRE(s.first_detection[0]);
  CHECK(verdicts[static_cast<std::size_t>(*s.first_detection[0])].status == Status::SensorDeviation);
  CHECK(*s.tpr == 1.0);
}
