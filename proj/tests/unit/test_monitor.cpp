#include <doctest.h>

#include <json.hpp>

#include "cbi/error.hpp"
#include "cbi/historian.hpp"
#include "cbi/monitor.hpp"
#include "cbi/plantsim.hpp"
#include "cbi/selftest/plant.hpp"
#include "common.hpp"

using namespace cbi;

namespace {

CycleSnapshot mixing(std::int64_t n, double yellow_amount, double can_weight, bool valve, bool conveyor) {
  CycleSnapshot s;
  s.cycle_index = n;
  s.sensors = {{"YellowAmount", yellow_amount}, {"CanWeight", can_weight}};
  s.actuators = {{"YellowValve", valve ? 1.0 : 0.0}, {"ConveyorMove", conveyor ? 1.0 : 0.0}};
  return s;
}

MonitorConfig config(Mode mode, ErrorMarginSpec eps = {}) {
  MonitorConfig c;
  c.mode = mode;
  c.eps = std::move(eps);
  return c;
}

}  // namespace

TEST_CASE("data-only attack on the color-mixing example is an actuation deviation") {
  Monitor m(test::mixing_model(), {}, config(Mode::Lazy, {{"CanWeight", 1.0}}));
  CHECK(m.step(mixing(0, 0.0, 50.0, false, false)).ok());
  DetectionVerdict v = m.step(mixing(1, 0.0, 150.0, false, false));
  CHECK(v.status == Status::ActuationDeviation);
  REQUIRE(v.details.size() == 1);
  CHECK(v.details[0].variable == "ConveyorMove");
  CHECK(v.details[0].reported == 0.0);
  CHECK(v.details[0].allowed == std::vector<double>{1.0});
  CHECK(m.step(mixing(2, 0.0, 150.0, false, true)).ok());
}

TEST_CASE("the first snapshot has no sensor prediction but its actuators are checked") {
  Monitor m(test::mixing_model(), {}, config(Mode::Single));
  CHECK(m.step(mixing(0, 5.0, 150.0, true, false)).ok());
  CHECK(m.accepted()->cycle_index == 0);
  Monitor k(test::mixing_model(), {}, config(Mode::Single));
  CHECK(k.step(mixing(0, 5.0, 150.0, false, true)).status == Status::ActuationDeviation);
}

TEST_CASE("boundary readings: single alarms, multi-execution does not") {
  StModel model = test::mixing_model();
  auto run = [&](Mode mode) {
    Monitor m(model, {}, config(mode, {{"YellowAmount", 0.1}}));
    m.step(mixing(0, 0.0, 0.0, false, false));
    return m.step(mixing(1, 0.05, 0.0, false, false));
  };
  CHECK(run(Mode::Single).status == Status::ActuationDeviation);
  DetectionVerdict lazy = run(Mode::Lazy);
  CHECK(lazy.ok());
  CHECK(lazy.forks >= 2);
  CHECK(run(Mode::Multi).ok());
}

TEST_CASE("halt mode stops at the first alarm") {
  MonitorConfig c = config(Mode::Single);
  c.on_alarm = OnAlarm::Halt;
  Monitor m(test::mixing_model(), {}, c);
  m.step(mixing(0, 0.0, 50.0, false, false));
  CHECK_FALSE(m.step(mixing(1, 0.0, 150.0, false, false)).ok());
  CHECK(m.halted());
  CHECK(m.accepted()->cycle_index == 0);
  CHECK_THROWS_AS(m.step(mixing(2, 0.0, 150.0, false, true)), ConfigError);
}

TEST_CASE("stream faults") {
  Monitor m(test::mixing_model(), {}, config(Mode::Single));
  CycleSnapshot first = mixing(0, 0.0, 50.0, false, false);
  first.sensors.erase("CanWeight");
  CHECK(m.step(first).status == Status::ModelFault);
  CHECK_FALSE(m.accepted());
  CHECK(m.step(mixing(1, 0.0, 50.0, false, false)).ok());

  Monitor k(test::mixing_model(), {}, config(Mode::Single));
  k.step(mixing(0, 0.0, 50.0, false, false));
  CycleSnapshot partial = mixing(1, 0.0, 50.0, false, false);
  partial.sensors.erase("CanWeight");
  CHECK(k.step(partial).ok());
  CHECK(k.accepted()->sensors.at("CanWeight") == 50.0);
  CHECK(k.warnings().size() == 1);
  DetectionVerdict gap = k.step(mixing(5, 0.0, 50.0, false, false));
  CHECK(gap.status == Status::ModelFault);
  CHECK(gap.details[0].variable == "cycle_index");
}

TEST_CASE("evaluation errors become model faults") {
  StModel model = test::model_of(test::wrap("VAR_INPUT s : INT; END_VAR\nVAR_IN_OUT r : INT; END_VAR", "r := 10 / s;"));
  Monitor m(model, {}, config(Mode::Single));
  CycleSnapshot s;
  s.sensors = {{"s", 2.0}};
  s.actuators = {{"r", 5.0}};
  CHECK(m.step(s).ok());
  s.cycle_index = 1;
  s.sensors["s"] = 0.0;
  CHECK(m.step(s).status == Status::ModelFault);
}

TEST_CASE("empty stream") {
  StreamSummary s = run_stream(test::mixing_model(), {}, {}, config(Mode::Lazy));
  CHECK(s.cycles == 0);
  CHECK(s.alarms == 0);
  CHECK(s.fpr == 0.0);
  CHECK_FALSE(s.tpr);
}

TEST_CASE("window statistics") {
  std::vector<CycleSnapshot> stream{mixing(0, 0.0, 50.0, false, false), mixing(1, 0.0, 150.0, false, false),
                                    mixing(2, 0.0, 150.0, false, true), mixing(3, 0.0, 150.0, false, false),
                                    mixing(4, 0.0, 150.0, false, true)};
  std::vector<DetectionVerdict> verdicts;
  StreamSummary s = run_stream(test::mixing_model(), {}, stream, config(Mode::Single), {{1, 1}, {4, 4}}, &verdicts);
  CHECK(s.cycles == 5);
  CHECK(s.alarms == 2);
  CHECK(*s.tpr == 0.5);
  CHECK(s.first_detection[0] == 1);
  CHECK_FALSE(s.first_detection[1]);
  CHECK(s.fpr == doctest::Approx(1.0 / 3.0));
  CHECK(s.by_status.at("ActuationDeviation") == 2);
  CHECK(verdicts.size() == 5);
}

TEST_CASE("benign plant stream") {
  const selftest::Plant p = selftest::load_plant();
  SimConfig c = p.benign;
  c.cycles = 1000;
  SimResult sim = simulate(c, p.plcs);
  StModel model = consolidate(p.plcs);
  MonitorConfig cfg = selftest::plant_monitor_config(p);
  for (int n : {1, 5}) {
    cfg.predict_n = n;
    StreamSummary s = run_stream(model, p.topology, sim.reported, cfg);
    CHECK(s.cycles == 1000);
    CHECK(s.alarms == 0);
  }
}

TEST_CASE("ROC sweep") {
  const selftest::Plant p = selftest::load_plant();
  SimConfig benign = p.benign, attacked = p.attacked;
  benign.cycles = 2000;
  attacked.cycles = 2100;
  std::vector<AttackScenario> attacks;
  for (const auto& a : p.attacks)
    if (a.window.second < attacked.cycles) attacks.push_back(a);
  REQUIRE(attacks.size() >= 2);
  StModel model = consolidate(p.plcs);
  SimResult b = simulate(benign, p.plcs), a = simulate(attacked, p.plcs, attacks);
  auto pts = roc_sweep(model, p.topology, b.reported, a.reported, windows_of(attacks), {1e9, 0.0, 5.0},
                       selftest::plant_monitor_config(p));
  REQUIRE(pts.size() == 6);
  CHECK(pts[0].tau == 0.0);
  CHECK(pts[0].mode == Mode::Single);
  CHECK(pts[1].mode == Mode::Multi);
  CHECK(pts[5].tau == 1e9);
  CHECK(pts[5].fpr == 0.0);
  CHECK(pts[0].fpr >= pts[2].fpr);
  CHECK(pts[3].fpr <= pts[2].fpr);
  std::string csv = roc_csv(pts);
  CHECK(csv.rfind("tau,mode,tpr,fpr\n0,single,", 0) == 0);
  CHECK_THROWS_AS(roc_sweep(model, p.topology, b.reported, a.reported, {}, {1.0}, {}), LabelMissing);
}

TEST_CASE("JSON output") {
  DetectionVerdict v;
  v.cycle_index = 9;
  v.status = Status::SensorDeviation;
  v.details.push_back({"LIT1", 512.0, Interval{500.0, 510.0}, {}, ""});
  auto j = nlohmann::json::parse(verdict_json(v));
  CHECK(j["cycle_index"] == 9);
  CHECK(j["status"] == "SensorDeviation");
  CHECK(j["details"][0]["variable"] == "LIT1");
  CHECK(j["details"][0]["interval"][1] == 510.0);

  StreamSummary s;
  s.cycles = 3;
  s.tpr = 1.0;
  auto k = nlohmann::json::parse(summary_json(s));
  CHECK(k["cycles"] == 3);
  CHECK(k["tpr"] == 1.0);
  CHECK(parse_mode("LAZY") == Mode::Lazy);
  CHECK_FALSE(parse_mode("fast"));
}
