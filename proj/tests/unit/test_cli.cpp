#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cbi/config.hpp"

namespace {

std::string src(const std::string& rel) { return std::string(CBI_SOURCE_DIR) + "/" + rel; }

int run_cbi(const std::string& args) {
  std::string cmd = std::string(CBI_EXE) + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<nlohmann::json> read_log(const std::string& path) {
  std::ifstream in(path);
  std::vector<nlohmann::json> out;
  for (std::string line; std::getline(in, line);) out.push_back(nlohmann::json::parse(line));
  return out;
}

std::string plant_args() {
  std::string d = src("data/plant/");
  return "-m " + d + "manifest.json -t " + d + "topology.json --eps " + d + "eps.json --tau " + d + "tau.json";
}

}  // namespace

TEST_CASE("consolidate reproduces the color-mixing golden master") {
  REQUIRE(run_cbi("consolidate " + src("data/mixing/manifest.json") + " -o mixing_master.st --side-table mixing_side.json") == 0);
  CHECK(cbi::read_file("mixing_master.st") == cbi::read_file(src("tests/golden/mixing_master.st")));
  auto side = nlohmann::json::parse(cbi::read_file("mixing_side.json"));
  CHECK(side["io_map"]["YellowValve"]["role"] == "actuator");
  CHECK(side["timing"]["ok"] == true);
}

TEST_CASE("benign stream: exit 0 and an all-OK verdict log") {
  REQUIRE(run_cbi("simulate " + src("data/plant/sim.json") + " --cycles 500 -o benign_truth.csv --reported benign.csv") == 0);
  REQUIRE(run_cbi("monitor " + plant_args() + " --in benign.csv --mode lazy --log benign.jsonl --summary benign.json") == 0);
  auto log = read_log("benign.jsonl");
  CHECK(log.size() == 500);
  for (const auto& v : log) CHECK(v["status"] == "OK");
  auto summary = nlohmann::json::parse(cbi::read_file("benign.json"));
  CHECK(summary["alarms"] == 0);
}

TEST_CASE("attacked stream in halt mode: exit 2 and a final non-OK verdict") {
  // Attack windows beyond the end of the run are a data error.
  CHECK(run_cbi("simulate " + src("data/plant/sim_attacked.json") + " --cycles 1000 --attacks " +
            src("data/plant/attacks.json") + " --reported attacked.csv") == 65);
  REQUIRE(run_cbi("simulate " + src("data/plant/sim_attacked.json") + " --attacks " + src("data/plant/attacks.json") +
              " --reported attacked.csv") == 0);
  CHECK(run_cbi("monitor " + plant_args() + " --in attacked.csv --on-alarm halt --log attacked.jsonl -q") == 2);
  auto log = read_log("attacked.jsonl");
  REQUIRE(!log.empty());
  CHECK(log.back()["status"] != "OK");
  for (std::size_t i = 0; i + 1 < log.size(); ++i) CHECK(log[i]["status"] == "OK");
}

TEST_CASE("check") {
  CHECK(run_cbi("check " + src("data/plant/manifest.json")) == 0);
  CHECK(run_cbi("check " + src("data/mixing/manifest.json") + " --permutations") == 0);
  CHECK(cbi::read_file("cli_stdout.txt").find("order plc1,plc2 gives ConveyorMove") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run_cbi("") == 64);
  CHECK(run_cbi("monitor --in x.csv") == 64);
  CHECK(run_cbi("frobnicate") == 64);
  CHECK(run_cbi("--help") == 0);
  CHECK(run_cbi("consolidate " + src("data/mixing/manifest.json") + " -o no_such_dir/master.st") == 74);
  {
    std::ofstream bad("bad_header.csv");
    bad << "cycle_index,timestamp,LIT1\n";
  }
  CHECK(run_cbi("monitor " + plant_args() + " --in bad_header.csv") == 65);
  CHECK(cbi::read_file("cli_stderr.txt").find("missing column") != std::string::npos);
}
