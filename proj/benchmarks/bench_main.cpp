#include <benchmark/benchmark.h>

#include <random>

#include "cbi/consolidator.hpp"
#include "cbi/historian.hpp"
#include "cbi/monitor.hpp"
#include "cbi/plantsim.hpp"
#include "cbi/selftest/generator.hpp"
#include "cbi/selftest/plant.hpp"
#include "cbi/stlang.hpp"

namespace {

const cbi::selftest::Plant& plant() {
  static const cbi::selftest::Plant p = cbi::selftest::load_plant();
  return p;
}

const std::vector<cbi::CycleSnapshot>& benign() {
  static const std::vector<cbi::CycleSnapshot> s = [] {
    cbi::SimConfig c = plant().benign;
    c.cycles = 5000;
    return cbi::simulate(c, plant().plcs).reported;
  }();
  return s;
}

void BM_Parse(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::string src = cbi::selftest::generate_program(rng, {}).source;
  for (auto _ : state) benchmark::DoNotOptimize(cbi::parse_program(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_Parse);

void BM_RunCycle(benchmark::State& state) {
  cbi::Executable exe(cbi::consolidate(plant().plcs));
  cbi::MachineState s = exe.initial_state();
  const auto& snap = benign()[100];
  cbi::Inputs in(snap.sensors.begin(), snap.sensors.end());
  for (auto _ : state) benchmark::DoNotOptimize(exe.run_cycle(s, in));
}
BENCHMARK(BM_RunCycle);

void BM_RunCycleMulti(benchmark::State& state) {
  std::mt19937_64 rng(3);
  cbi::selftest::GenOptions opts;
  opts.tainted_sensors = static_cast<int>(state.range(0));
  auto g = cbi::selftest::generate_program(rng, opts);
  cbi::Executable exe(cbi::consolidate({cbi::PlcSource{"g", cbi::parse_program(g.source)}}));
  cbi::MachineState s = exe.initial_state();
  cbi::Inputs in = cbi::selftest::random_snapshot(rng, g);
  std::size_t forks = 0;
  for (auto _ : state) forks += exe.run_cycle_multi(s, in, g.eps).set.fork_count;
  state.counters["forks"] = benchmark::Counter(static_cast<double>(forks), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_RunCycleMulti)->DenseRange(1, 4);

void BM_MonitorStream(benchmark::State& state) {
  cbi::MonitorConfig cfg = cbi::selftest::plant_monitor_config(plant());
  cfg.mode = static_cast<cbi::Mode>(state.range(0));
  auto exe = std::make_shared<const cbi::Executable>(cbi::consolidate(plant().plcs));
  for (auto _ : state) {
    cbi::Monitor m(exe, plant().topology, cfg);
    cbi::VectorSource src(benign());
    benchmark::DoNotOptimize(cbi::run_stream(m, src));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * benign().size()));
  state.SetLabel(std::string(cbi::to_string(cfg.mode)));
}
BENCHMARK(BM_MonitorStream)
    ->Arg(static_cast<int>(cbi::Mode::Single))
    ->Arg(static_cast<int>(cbi::Mode::Lazy))
    ->Arg(static_cast<int>(cbi::Mode::Multi))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
