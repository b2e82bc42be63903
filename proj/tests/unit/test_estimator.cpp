#include <doctest.h>

#include "cbi/estimator.hpp"
#include "cbi/error.hpp"
#include "cbi/plantsim.hpp"
#include "cbi/selftest/plant.hpp"

using namespace cbi;

namespace {

PlantTopology one_tank() {
  PlantTopology t;
  t.tanks.push_back(TankModel{"L", {"Fin"}, {"Fout"}, 1.0, {0.0, 1000.0}});
  t.flows.push_back(FlowModel{"Fin", 10.0, {"pump"}});
  t.flows.push_back(FlowModel{"Fout", 5.0, {}});
  return t;
}

CycleSnapshot snap(double level, double fin, double fout, bool pump = true) {
  CycleSnapshot s;
  s.sensors = {{"L", level}, {"Fin", fin}, {"Fout", fout}};
  s.actuators = {{"pump", pump ? 1.0 : 0.0}};
  return s;
}

// Fraction of benign cycles whose every modelled reading lies inside its
// n-step prediction.
double containment(const std::vector<CycleSnapshot>& stream, const PlantTopology& topo, const ThresholdSpec& tau,
                   int n) {
  std::size_t inside = 0, total = 0;
  for (std::size_t k = 0; k + n < stream.size(); ++k) {
    std::vector<ValueMap> schedule;
    for (int i = 1; i < n; ++i) schedule.push_back(stream[k + i].actuators);
    Prediction p = predict_n(topo, stream[k], tau, n, schedule);
    bool ok = true;
    for (const auto& [s, iv] : p.intervals) ok = ok && iv.contains(stream[k + n].sensors.at(s));
    inside += ok;
    ++total;
  }
  return static_cast<double>(inside) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("tank level prediction") {
  Prediction p = predict(one_tank(), snap(500.0, 10.0, 5.0), {{"L", 5.0}});
  CHECK(p.intervals.at("L") == Interval{500.0, 510.0});
  CHECK(p.centers.at("L") == 505.0);
}

TEST_CASE("flow prediction is the gated base rate") {
  PlantTopology t;
  t.flows.push_back(FlowModel{"F", 2.0, {"pump", "valve"}});
  CycleSnapshot s;
  s.sensors = {{"F", 2.0}};
  s.actuators = {{"pump", 1.0}, {"valve", 0.0}};
  Prediction p = predict(t, s, {{"F", 0.5}});
  CHECK(p.centers.at("F") == 0.0);
  CHECK(p.intervals.at("F") == Interval{-0.5, 0.5});
  s.actuators["valve"] = 1.0;
  CHECK(predict(t, s, {}).centers.at("F") == 2.0);
}

TEST_CASE("unmodelled and incomplete sensors are unbounded") {
  PlantTopology t = one_tank();
  CycleSnapshot s = snap(500.0, 10.0, 5.0);
  s.sensors["pH"] = 7.0;
  s.sensors.erase("Fout");
  Prediction p = predict(t, s, {{"L", 5.0}});
  CHECK_FALSE(p.intervals.at("pH").bounded());
  CHECK_FALSE(p.intervals.at("L").bounded());
  CHECK_FALSE(p.warnings.empty());
}

TEST_CASE("tank step rounds and clamps") {
  TankModel t{"L", {"Fin"}, {"Fout"}, 1.0, {0.0, 100.0}};
  CHECK(tank_step(t, 95.0, {{"Fin", 10.0}, {"Fout", 0.0}}, 1.0) == 100.0);
  CHECK(tank_step(t, 2.0, {{"Fin", 0.0}, {"Fout", 5.0}}, 1.0) == 0.0);
  CHECK(tank_step(t, 1.0, {{"Fin", 0.1}, {"Fout", 0.0}}, 1.0) == static_cast<double>(1.0f + 0.1f));
}

TEST_CASE("n-step prediction") {
  PlantTopology t = one_tank();
  ThresholdSpec tau{{"L", 5.0}};
  CycleSnapshot s = snap(500.0, 10.0, 5.0);
  CHECK(predict_n(t, s, tau, 1).intervals.at("L") == predict(t, s, tau).intervals.at("L"));
  Prediction p3 = predict_n(t, s, tau, 3);
  CHECK(p3.centers.at("L") == 515.0);
  CHECK(p3.intervals.at("L").hi == 530.0);
  CHECK(p3.intervals.at("L").hi - p3.centers.at("L") == 15.0);
}

TEST_CASE("topology validation") {
  PlantTopology t = one_tank();
  CHECK_NOTHROW(t.validate());
  t.tanks[0].f_c = 0.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = one_tank();
  t.thresholds["L"] = -1.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = one_tank();
  t.flows.push_back(FlowModel{"L", 1.0, {}});
  CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("benign plant readings stay inside the predictions") {
  selftest::Plant plant = selftest::load_plant();
  SimConfig cfg = plant.benign;
  cfg.mismatch.clear();
  cfg.noise.clear();
  cfg.cycles = 1000;
  SimResult sim = simulate(cfg, plant.plcs);
  double one = containment(sim.reported, plant.topology, plant.tau, 1);
  double five = containment(sim.reported, plant.topology, plant.tau, 5);
  CHECK(one == 1.0);
  CHECK(five >= one);
}
