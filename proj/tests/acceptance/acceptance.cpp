// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <fcntl.h>
#include <spawn.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cbi/consolidator.hpp"
#include "cbi/historian.hpp"
#include "cbi/monitor.hpp"
#include "cbi/selftest/criteria.hpp"
#include "cbi/stlang.hpp"

namespace {

using Clock = std::chrono::steady_clock;
using cbi::selftest::CriterionResult;

constexpr double kOracleSeconds = 120.0;
constexpr double kFprSeconds = 300.0;
constexpr double kMinCyclesPerSecond = 10000.0;
constexpr long kMaxRssKb = 200L * 1024L;
constexpr std::int64_t kHistorianRows = 496800;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CriterionResult with_time_limit(CriterionResult r, double limit) {
  if (r.seconds >= limit) {
    r.pass = false;
    r.detail += "; exceeded " + fmt("%.0f", limit) + " s";
  }
  return r;
}

// Ten PLCs with two REAL sensors, two BOOL actuators and one local each.
std::vector<cbi::PlcSource> fifty_variable_plant() {
  std::vector<cbi::PlcSource> out;
  for (int i = 0; i < 10; ++i) {
    std::string n = std::to_string(i);
    std::string src = "PROGRAM plc" + n + "\n  VAR_INPUT Sa" + n + " : REAL; Sb" + n +
                      " : REAL; END_VAR\n  VAR_IN_OUT A" + n + " : BOOL; B" + n + " : BOOL; END_VAR\n  VAR t" + n +
                      " : REAL; END_VAR\n  t" + n + " := Sa" + n + " - Sb" + n + ";\n  IF t" + n + " > 10.0 AND Sa" +
                      n + " < 900.0 THEN\n    A" + n + " := TRUE;\n  ELSIF t" + n + " < -10.0 THEN\n    A" + n +
                      " := FALSE;\n  END_IF;\n  B" + n + " := A" + n + " AND Sb" + n +
                      " > 500.0;\nEND_PROGRAM\nCONFIGURATION C" + n +
                      "\n  RESOURCE R ON PLC\n    TASK Main(INTERVAL := T#1s, PRIORITY := 0);\n    PROGRAM I WITH Main : plc" +
                      n + ";\n  END_RESOURCE\nEND_CONFIGURATION\n";
    cbi::PlcSource p{"plc" + n, cbi::parse_program(src)};
    p.unit.program.exec_budget = cbi::Millis(10);
    out.push_back(std::move(p));
  }
  return out;
}

// Consistent stream: random-walk sensors, actuators from the model itself.
std::vector<cbi::CycleSnapshot> consistent_stream(const cbi::Executable& exe, std::size_t cycles) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> step(-20.0, 20.0);
  const auto sensors = exe.model().sensors();
  cbi::Inputs in;
  for (const auto& s : sensors) in[s] = 500.0;
  cbi::MachineState state = exe.initial_state();
  std::vector<cbi::CycleSnapshot> out;
  for (std::size_t n = 0; n < cycles; ++n) {
    for (const auto& s : sensors) in[s] = std::clamp(in[s] + step(rng), 0.0, 1000.0);
    cbi::CycleSnapshot snap;
    snap.cycle_index = static_cast<std::int64_t>(n);
    for (const auto& [k, v] : in) snap.sensors[k] = static_cast<double>(static_cast<float>(v));
    cbi::Inputs exec_in(snap.sensors.begin(), snap.sensors.end());
    if (!out.empty())
      for (const auto& [k, v] : out.back().actuators) exec_in[k] = v;
    auto r = exe.run_cycle(state, exec_in);
    for (const auto& [k, v] : r.actuators) snap.actuators[k] = v.to_double();
    state = std::move(r.next);
    out.push_back(std::move(snap));
  }
  return out;
}

struct ChildRun {
  int exit_code{-1};
  long max_rss_kb{0};
  double seconds{0.0};
};

ChildRun run_child(const std::vector<std::string>& argv) {
  ChildRun r;
  auto t0 = Clock::now();
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  pid_t pid = 0;
  if (posix_spawn(&pid, args[0], &actions, nullptr, args.data(), environ) != 0) {
    posix_spawn_file_actions_destroy(&actions);
    return r;
  }
  posix_spawn_file_actions_destroy(&actions);
  int status = 0;
  struct rusage ru {};
  wait4(pid, &status, 0, &ru);
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.max_rss_kb = ru.ru_maxrss;
  return r;
}

CriterionResult throughput_and_memory() {
  CriterionResult r;
  r.id = 6;
  r.name = "throughput and constant-memory streaming";
  auto t0 = Clock::now();

  auto plcs = fifty_variable_plant();
  cbi::StModel model = cbi::consolidate(plcs);
  std::size_t vars = model.master.declarations().size();
  auto exe = std::make_shared<const cbi::Executable>(model);
  auto stream = consistent_stream(*exe, 20000);
  cbi::MonitorConfig cfg;
  cfg.mode = cbi::Mode::Single;
  std::vector<double> rates;
  std::size_t alarms = 0;
  for (int rep = 0; rep < 5; ++rep) {
    cbi::Monitor m(exe, {}, cfg);
    cbi::VectorSource src(stream);
    auto s0 = Clock::now();
    cbi::StreamSummary s = cbi::run_stream(m, src);
    double dt = std::chrono::duration<double>(Clock::now() - s0).count();
    rates.push_back(static_cast<double>(s.cycles) / dt);
    alarms += s.alarms;
  }
  std::sort(rates.begin(), rates.end());
  double median = rates[rates.size() / 2];

  std::string dir = std::string(CBI_SOURCE_DIR) + "/data/plant/";
  std::string csv = "acceptance_historian.csv", summary = "acceptance_summary.json";
  ChildRun sim = run_child({CBI_EXE, "simulate", dir + "sim.json", "--cycles", std::to_string(kHistorianRows),
                            "--reported", csv});
  ChildRun mon = run_child({CBI_EXE, "monitor", "-m", dir + "manifest.json", "-t", dir + "topology.json", "--eps",
                            dir + "eps.json", "--tau", dir + "tau.json", "--in", csv, "--summary", summary, "-q"});
  std::size_t rows = 0;
  {
    std::ifstream in(csv);
    for (std::string line; std::getline(in, line);) ++rows;
  }
  std::ifstream sin(summary);
  std::stringstream ss;
  ss << sin.rdbuf();
  bool streamed = ss.str().find("\"cycles\": " + std::to_string(kHistorianRows)) != std::string::npos;
  // ru_maxrss of a spawned child carries the parent's pre-exec high-water mark; prefer the child's own VmHWM
  if (auto pos = ss.str().find("\"peak_rss_kb\": "); pos != std::string::npos)
    mon.max_rss_kb = std::strtol(ss.str().c_str() + pos + 15, nullptr, 10);
  std::remove(csv.c_str());
  std::remove(summary.c_str());

  r.pass = vars == 50 && alarms == 0 && median >= kMinCyclesPerSecond && sim.exit_code == 0 && mon.exit_code == 0 &&
           rows == static_cast<std::size_t>(kHistorianRows) + 1 && streamed && mon.max_rss_kb < kMaxRssKb;
  r.detail = std::to_string(vars) + "-variable model, single mode median " + fmt("%.0f", median) +
             " cycles/s (min " + fmt("%.0f", kMinCyclesPerSecond) + "); " + std::to_string(rows - 1) +
             "-row historian monitored in " + fmt("%.1f", mon.seconds) + " s, peak RSS " +
             fmt("%.1f", static_cast<double>(mon.max_rss_kb) / 1024.0) + " MB (limit 200 MB), exit " +
             std::to_string(mon.exit_code);
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

CriterionResult headless_self_test() {
  CriterionResult r;
  r.id = 7;
  r.name = "headless self-test";
  ChildRun c = run_child({CBI_EXE, "check", "--self-test"});
  r.pass = c.exit_code == 0;
  r.detail = "`cbi check --self-test` exit " + std::to_string(c.exit_code);
  r.seconds = c.seconds;
  return r;
}

}  // namespace

int main() {
  cbi::selftest::SelfTestOptions o;
  bool all = true;
  auto report = [&](const CriterionResult& r) {
    all = all && r.pass;
    std::cout << cbi::selftest::format_result(r) << std::endl;
  };
  report(with_time_limit(cbi::selftest::check_multi_exec_oracle(o), kOracleSeconds));
  report(cbi::selftest::check_consolidation(o));
  report(with_time_limit(cbi::selftest::check_zero_false_positives(o), kFprSeconds));
  report(cbi::selftest::check_attack_recall(o));
  report(cbi::selftest::check_roc(o));
  report(throughput_and_memory());
  report(headless_self_test());
  std::cout << (all ? "acceptance: all criteria passed" : "acceptance: FAILED") << std::endl;
  return all ? 0 : 1;
}
