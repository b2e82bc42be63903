// cbi: consolidate, check, simulate, monitor, roc.
//
// Exit codes: 0 ok, 1 self-test failure, 2 alarm in halt mode, 64 usage,
// 65 invalid data, 74 I/O error. CBI_LOG=warn|info|quiet sets verbosity on
// stderr (default warn).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cbi/config.hpp"
#include "cbi/consolidator.hpp"
#include "cbi/error.hpp"
#include "cbi/exec.hpp"
#include "cbi/historian.hpp"
#include "cbi/monitor.hpp"
#include "cbi/plantsim.hpp"
#include "cbi/selftest/criteria.hpp"
#include "cbi/selftest/plant.hpp"
#include "cbi/stlang.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kSelfTestFailed = 1;
constexpr int kHaltAlarm = 2;
constexpr int kUsage = 64;
constexpr int kData = 65;
constexpr int kIo = 74;

enum class LogLevel { Quiet, Warn, Info };

LogLevel log_level() {
  const char* env = std::getenv("CBI_LOG");
  if (!env) return LogLevel::Warn;
  std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::Quiet;
  if (v == "info" || v == "debug") return LogLevel::Info;
  return LogLevel::Warn;
}

void info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "cbi: " << msg << '\n';
}
void warn(const std::string& msg) {
  if (log_level() >= LogLevel::Warn) std::cerr << "cbi: warning: " << msg << '\n';
}

long peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  for (std::string line; std::getline(in, line);)
    if (line.rfind("VmHWM:", 0) == 0) return std::strtol(line.c_str() + 6, nullptr, 10);
  return -1;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cbi::IoError("cannot write " + path);
  out << text;
  if (!out) throw cbi::IoError("write failed: " + path);
}

cbi::HistorianSchema schema_of(const cbi::StModel& model) { return {model.sensors(), model.actuators()}; }

// --- consolidate -----------------------------------------------------------

struct ConsolidateArgs {
  std::string manifest, output, side_table;
  bool skip_timing{false};
};

std::string side_table_json(const cbi::StModel& model, const cbi::TimingReport& timing) {
  nlohmann::ordered_json j;
  j["plc_order"] = model.plc_order;
  auto& io = j["io_map"] = nlohmann::ordered_json::object();
  for (const auto& [name, e] : model.io_map)
    io[name] = {{"role", std::string(cbi::to_string(e.role))}, {"owner_plc", e.owner_plc}};
  auto& spans = j["segments"] = nlohmann::ordered_json::object();
  for (const auto& plc : model.plc_order) {
    const auto& s = model.segment_spans.at(plc);
    spans[plc] = {{"begin", s.begin}, {"end", s.end}};
  }
  auto& renames = j["renames"] = nlohmann::ordered_json::array();
  for (const auto& r : model.renames) renames.push_back({{"plc", r.plc}, {"from", r.from}, {"to", r.to}});
  j["timing"] = {{"ok", timing.ok},
                 {"sum_budget_ms", timing.sum_budget.count()},
                 {"min_interval_ms", timing.min_interval.count()}};
  return j.dump(2) + "\n";
}

int cmd_consolidate(const ConsolidateArgs& a) {
  auto plcs = cbi::load_manifest(a.manifest);
  cbi::TimingReport timing = cbi::check_timing(cbi::programs_of(plcs));
  if (!timing.ok) {
    std::string msg = "timing check failed: budgets sum to " + std::to_string(timing.sum_budget.count()) +
                      " ms, shortest task interval is " + std::to_string(timing.min_interval.count()) + " ms";
    if (!a.skip_timing) throw cbi::ConfigError(msg);
    warn(msg);
  }
  cbi::StModel model = cbi::consolidate(plcs);
  write_text(a.output, cbi::print_master(model));
  if (!a.side_table.empty()) write_text(a.side_table, side_table_json(model, timing));
  info("consolidated " + std::to_string(plcs.size()) + " PLCs, " + std::to_string(model.renames.size()) + " renames");
  return kOk;
}

// --- check -----------------------------------------------------------------

struct CheckArgs {
  std::string manifest;
  bool self_test{false};
  bool permutations{false};
  int snapshots{200};
  std::uint64_t seed{20240611};
  cbi::selftest::SelfTestOptions st;
};

void report_permutations(const cbi::StModel& model, int trials, std::uint64_t seed) {
  auto cx = cbi::permutation_equivalence_check(model, trials, seed);
  if (!cx) {
    std::cout << "permutations: no counterexample in " << trials << " snapshots\n";
    return;
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
    return out;
  };
  std::cout << "permutations: order " << join(cx->order_a) << " gives " << cx->variable << "="
            << cx->value_a.to_string() << ", order " << join(cx->order_b) << " gives " << cx->value_b.to_string()
            << " on snapshot";
  for (const auto& [k, v] : cx->snapshot) std::cout << " " << k << "=" << v;
  std::cout << "\n";
}

int cmd_check(const CheckArgs& a) {
  if (a.self_test) {
    auto results = cbi::selftest::run_self_test(a.st, [](const cbi::selftest::CriterionResult& r) {
      std::cout << cbi::selftest::format_result(r) << std::endl;
    });
    bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
    std::cout << (ok ? "self-test: all criteria passed\n" : "self-test: FAILED\n");
    return ok ? kOk : kSelfTestFailed;
  }
  auto plcs = cbi::load_manifest(a.manifest);
  cbi::TimingReport timing = cbi::check_timing(cbi::programs_of(plcs));
  cbi::StModel model = cbi::consolidate(plcs);
  std::cout << "parsed and type-checked " << plcs.size() << " programs\n";
  std::cout << "consolidated: " << model.sensors().size() << " sensors, " << model.actuators().size() << " actuators, "
            << model.renames.size() << " renamed locals\n";
  std::cout << "timing: budgets " << timing.sum_budget.count() << " ms, shortest interval "
            << timing.min_interval.count() << " ms: " << (timing.ok ? "ok" : "VIOLATED") << "\n";
  if (a.permutations) report_permutations(model, a.snapshots, a.seed);
  return timing.ok ? kOk : kData;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string sim, attacks, truth, reported;
  std::optional<std::int64_t> cycles;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
  cbi::SimSetup setup = cbi::load_sim(a.sim);
  if (a.cycles) setup.config.cycles = *a.cycles;
  if (a.seed) setup.config.seed = *a.seed;
  std::vector<cbi::AttackScenario> attacks;
  if (!a.attacks.empty()) attacks = cbi::load_attacks(a.attacks);
  cbi::HistorianSchema schema = schema_of(cbi::consolidate(setup.plcs));
  std::optional<cbi::HistorianWriter> truth, reported;
  if (!a.truth.empty()) truth.emplace(a.truth, schema);
  if (!a.reported.empty()) reported.emplace(a.reported, schema);
  std::size_t rows = 0;
  cbi::simulate(setup.config, setup.plcs, attacks, [&](const cbi::CycleSnapshot& t, const cbi::CycleSnapshot& r) {
    if (truth) truth->write(t);
    if (reported) reported->write(r);
    ++rows;
  });
  if (truth) truth->flush();
  if (reported) reported->flush();
  info("simulated " + std::to_string(rows) + " cycles, " + std::to_string(attacks.size()) + " attacks");
  return kOk;
}

// --- monitor ---------------------------------------------------------------

struct MonitorArgs {
  std::string manifest, topology, eps, tau, input, attacks, log, summary;
  std::string mode{"lazy"}, on_alarm{"continue"}, exec_input{"estimate"};
  int predict_n{1};
  bool quiet{false};
};

cbi::MonitorConfig monitor_config(const std::string& mode, const std::string& on_alarm, const std::string& exec_input,
                                  const std::string& eps, const std::string& tau, int predict_n) {
  cbi::MonitorConfig cfg;
  cfg.mode = *cbi::parse_mode(mode);
  cfg.on_alarm = on_alarm == "halt" ? cbi::OnAlarm::Halt : cbi::OnAlarm::Continue;
  cfg.exec_input = exec_input == "reported" ? cbi::ExecInput::Reported : cbi::ExecInput::Estimate;
  if (!eps.empty()) cfg.eps = cbi::load_margins(eps, "eps");
  if (!tau.empty()) cfg.tau = cbi::load_margins(tau, "tau");
  cfg.predict_n = predict_n;
  return cfg;
}

int cmd_monitor(const MonitorArgs& a) {
  auto plcs = cbi::load_manifest(a.manifest);
  cbi::StModel model = cbi::consolidate(plcs);
  cbi::PlantTopology topo = cbi::load_topology(a.topology);
  cbi::MonitorConfig cfg = monitor_config(a.mode, a.on_alarm, a.exec_input, a.eps, a.tau, a.predict_n);
  std::vector<cbi::Window> windows;
  if (!a.attacks.empty()) windows = cbi::windows_of(cbi::load_attacks(a.attacks));

  cbi::Monitor monitor(model, topo, cfg);
  cbi::HistorianReader reader(a.input, schema_of(model));
  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (a.log == "-") {
    log = &std::cout;
  } else if (!a.log.empty()) {
    log_file.open(a.log, std::ios::binary);
    if (!log_file) throw cbi::IoError("cannot write " + a.log);
    log = &log_file;
  }
  std::optional<cbi::DetectionVerdict> last;
  cbi::StreamSummary s = cbi::run_stream(monitor, reader, windows, [&](const cbi::DetectionVerdict& v) {
    if (log) *log << cbi::verdict_json(v) << '\n';
    if (!v.ok() && !a.quiet && log != &std::cout)
      std::cerr << "cycle " << v.cycle_index << ": " << cbi::to_string(v.status)
                << (v.details.empty() ? "" : " " + v.details.front().variable) << '\n';
    last = v;
  });
  for (const auto& w : monitor.warnings()) warn(w);
  if (log_file.is_open() && !log_file) throw cbi::IoError("write failed: " + a.log);
  if (!a.summary.empty()) {
    auto j = nlohmann::ordered_json::parse(cbi::summary_json(s));
    j["peak_rss_kb"] = peak_rss_kb();
    write_text(a.summary, j.dump(2) + "\n");
  }

  std::cout << "cycles " << s.cycles << ", alarms " << s.alarms << ", FPR " << s.fpr;
  if (s.tpr) std::cout << ", TPR " << *s.tpr;
  if (s.halted) std::cout << ", halted at cycle " << last->cycle_index;
  std::cout << '\n';
  return s.halted ? kHaltAlarm : kOk;
}

// --- roc -------------------------------------------------------------------

struct RocArgs {
  std::string manifest, topology, eps, tau, benign, attacked, attacks, output;
  std::vector<double> thresholds;
  bool plant{false};
};

int cmd_roc(const RocArgs& a) {
  std::vector<cbi::RocPoint> points;
  if (a.plant) {
    points = cbi::selftest::plant_roc();
  } else {
    cbi::StModel model = cbi::consolidate(cbi::load_manifest(a.manifest));
    cbi::PlantTopology topo = cbi::load_topology(a.topology);
    cbi::MonitorConfig cfg = monitor_config("lazy", "continue", "estimate", a.eps, a.tau, 1);
    auto schema = schema_of(model);
    auto benign = cbi::read_historian(a.benign, schema);
    auto attacked = cbi::read_historian(a.attacked, schema);
    auto windows = cbi::windows_of(cbi::load_attacks(a.attacks));
    auto thresholds = a.thresholds.empty() ? cbi::selftest::roc_thresholds() : a.thresholds;
    points = cbi::roc_sweep(model, topo, benign, attacked, windows, thresholds, cfg);
  }
  write_text(a.output, cbi::roc_csv(points));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Control-behavior integrity monitor for distributed PLCs"};
  app.require_subcommand(1);

  ConsolidateArgs ca;
  auto* consolidate = app.add_subcommand("consolidate", "Merge the PLC programs of a manifest into one master program");
  consolidate->add_option("manifest", ca.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  consolidate->add_option("-o,--output", ca.output, "Master program (default stdout)");
  consolidate->add_option("--side-table", ca.side_table, "I/O map, segments and renames as JSON");
  consolidate->add_flag("--skip-timing", ca.skip_timing, "Warn instead of failing on a timing violation");

  CheckArgs ka;
  auto* check = app.add_subcommand("check", "Validate a manifest, or run the property self-test");
  check->add_option("manifest", ka.manifest, "Manifest JSON")->check(CLI::ExistingFile);
  check->add_flag("--self-test", ka.self_test, "Run the property suites (criteria 1-5)");
  check->add_flag("--permutations", ka.permutations, "Compare every segment order on random snapshots");
  check->add_option("--snapshots", ka.snapshots, "Random snapshots for --permutations");
  check->add_option("--seed", ka.seed, "Random seed");
  check->add_option("--programs", ka.st.programs, "Self-test: generated programs for the oracle suite");
  check->add_option("--pairs", ka.st.pairs, "Self-test: program pairs for the consolidation suite");
  check->callback([&] {
    if (!ka.self_test && ka.manifest.empty()) throw CLI::RequiredError("manifest or --self-test");
    ka.st.seed = ka.seed;
  });

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run the plant simulator and write historian CSVs");
  simulate->add_option("sim", sa.sim, "Simulation JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--attacks", sa.attacks, "Attack scenarios JSON")->check(CLI::ExistingFile);
  simulate->add_option("-o,--truth", sa.truth, "Ground-truth historian CSV");
  simulate->add_option("--reported", sa.reported, "Reported historian CSV");
  simulate->add_option("--cycles", sa.cycles, "Override the cycle count");
  simulate->add_option("--seed", sa.seed, "Override the noise seed");

  MonitorArgs ma;
  auto* monitor = app.add_subcommand("monitor", "Check a historian stream against the consolidated model");
  monitor->add_option("-m,--manifest", ma.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  monitor->add_option("-t,--topology", ma.topology, "Topology JSON")->required()->check(CLI::ExistingFile);
  monitor->add_option("--eps", ma.eps, "Error margins JSON")->check(CLI::ExistingFile);
  monitor->add_option("--tau", ma.tau, "Sensor thresholds JSON")->check(CLI::ExistingFile);
  monitor->add_option("--in", ma.input, "Reported historian CSV")->required()->check(CLI::ExistingFile);
  monitor->add_option("--mode", ma.mode, "single, multi or lazy")->check(CLI::IsMember({"single", "multi", "lazy"}));
  monitor->add_option("--on-alarm", ma.on_alarm, "continue or halt")->check(CLI::IsMember({"continue", "halt"}));
  monitor->add_option("--exec-input", ma.exec_input, "estimate or reported")
      ->check(CLI::IsMember({"estimate", "reported"}));
  monitor->add_option("--predict-n", ma.predict_n, "Cycles between sensor checks")->check(CLI::Range(1, 1000));
  monitor->add_option("--attacks", ma.attacks, "Attack scenarios JSON (labels windows for TPR)")
      ->check(CLI::ExistingFile);
  monitor->add_option("--log", ma.log, "Verdict log, one JSON object per line ('-' for stdout)");
  monitor->add_option("--summary", ma.summary, "Stream summary JSON");
  monitor->add_flag("-q,--quiet", ma.quiet, "Do not print alarms on stderr");

  RocArgs ra;
  auto* roc = app.add_subcommand("roc", "Sweep the level threshold and write ROC points as CSV");
  roc->add_option("-m,--manifest", ra.manifest, "Manifest JSON")->check(CLI::ExistingFile);
  roc->add_option("-t,--topology", ra.topology, "Topology JSON")->check(CLI::ExistingFile);
  roc->add_option("--eps", ra.eps, "Error margins JSON")->check(CLI::ExistingFile);
  roc->add_option("--tau", ra.tau, "Sensor thresholds JSON")->check(CLI::ExistingFile);
  roc->add_option("--benign", ra.benign, "Benign reported historian CSV")->check(CLI::ExistingFile);
  roc->add_option("--attacked", ra.attacked, "Attacked reported historian CSV")->check(CLI::ExistingFile);
  roc->add_option("--attacks", ra.attacks, "Attack scenarios JSON (windows)")->check(CLI::ExistingFile);
  roc->add_option("--thresholds", ra.thresholds, "Level thresholds to sweep")->delimiter(',');
  roc->add_flag("--plant", ra.plant, "Simulate the built-in plant instead of reading historians");
  roc->add_option("-o,--output", ra.output, "ROC CSV (default stdout)");
  roc->callback([&] {
    if (ra.plant) return;
    for (auto* o : {&ra.manifest, &ra.topology, &ra.benign, &ra.attacked, &ra.attacks})
      if (o->empty()) throw CLI::RequiredError("-m, -t, --benign, --attacked and --attacks (or --plant)");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*consolidate) return cmd_consolidate(ca);
    if (*check) return cmd_check(ka);
    if (*simulate) return cmd_simulate(sa);
    if (*monitor) return cmd_monitor(ma);
    if (*roc) return cmd_roc(ra);
  } catch (const cbi::IoError& e) {
    std::cerr << "cbi: " << e.what() << '\n';
    return kIo;
  } catch (const cbi::Error& e) {
    std::cerr << "cbi: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "cbi: internal error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
