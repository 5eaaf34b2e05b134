#include <doctest.h>

#include "artflow/eval.hpp"
#include "artflow/flow.hpp"
#include "artflow/geom.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using namespace artflow;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr, interleaved
};

/// Runs the CLI binary with the given arguments, capturing exit code and
/// combined output.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = fs::temp_directory_path() / ("artflow_cli_" + std::to_string(counter++) +
                                                    "_" + std::to_string(::getpid()) + ".log");
  const std::string command =
      std::string(ARTFLOW_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream text;
  text << in.rdbuf();
  result.output = text.str();
  fs::remove(log);
  return result;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir =
      fs::temp_directory_path() / ("artflow_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return bytes.str();
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

TEST_CASE("no subcommand or unknown flags exit with usage code 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("--no-such-flag").exit_code == 2);
  CHECK(run_cli("rollout --procgen drawer --frobnicate").exit_code == 2);
}

TEST_CASE("help exits cleanly") {
  const auto result = run_cli("--help");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("rollout") != std::string::npos);
}

TEST_CASE("gen-dataset writes one pair file per state and joint") {
  const auto dir = fresh_dir("gen");
  const auto result =
      run_cli("gen-dataset --procgen cabinet --procgen-seed 4 --count 3 --samples 256 --out " +
              dir.string());
  CHECK(result.exit_code == 0);
  const auto files = sorted_files(dir);
  CHECK(files.size() == 6);  // 3 states x 2 cabinet joints

  // Every pair file reloads as a cloud with a same-length flow field whose
  // magnitudes respect the flow normalization (max magnitude at most 1).
  for (const auto& file : files) {
    std::vector<Vec3> flow;
    const auto cloud = load_cloud_file(file.string(), &flow);
    REQUIRE(cloud.size() == 256);
    REQUIRE(flow.size() == cloud.size());
    double max_mag = 0.0;
    for (const auto& v : flow) max_mag = std::max(max_mag, v.norm());
    CHECK(max_mag <= 1.0 + 1e-12);
    CHECK(max_mag > 0.9);  // some child-link point is near full speed
  }
  fs::remove_all(dir);
}

TEST_CASE("gen-dataset is byte-deterministic per seed") {
  const auto a = fresh_dir("gen_a");
  const auto b = fresh_dir("gen_b");
  const auto c = fresh_dir("gen_c");
  REQUIRE(run_cli("gen-dataset --procgen drawer --count 2 --seed 9 --samples 128 --out " +
                  a.string())
              .exit_code == 0);
  REQUIRE(run_cli("gen-dataset --procgen drawer --count 2 --seed 9 --samples 128 --out " +
                  b.string())
              .exit_code == 0);
  REQUIRE(run_cli("gen-dataset --procgen drawer --count 2 --seed 10 --samples 128 --out " +
                  c.string())
              .exit_code == 0);
  const auto fa = sorted_files(a), fb = sorted_files(b), fc = sorted_files(c);
  REQUIRE(fa.size() == 2);
  REQUIRE(fb.size() == 2);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i].filename() == fb[i].filename());
    CHECK(read_bytes(fa[i]) == read_bytes(fb[i]));
  }
  CHECK(read_bytes(fa[0]) != read_bytes(fc[0]));  // seed matters
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("gen-dataset rejects an empty request and missing sources") {
  const auto dir = fresh_dir("gen_empty");
  const auto result =
      run_cli("gen-dataset --procgen drawer --count 0 --out " + dir.string());
  CHECK(result.exit_code == 2);
  CHECK(result.output.find("empty dataset request") != std::string::npos);
  CHECK(!fs::exists(dir));
  CHECK(run_cli("gen-dataset --out " + dir.string()).exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("rollout exit code reflects the trial outcome") {
  // Oracle on a drawer succeeds; the record line is printed on stdout.
  const auto ok = run_cli("rollout --procgen drawer --procgen-seed 5 --seed 3");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("termination=Success") != std::string::npos);
  const auto record = trial_from_record_line(ok.output.substr(0, ok.output.find('\n')));
  CHECK(record.success);
  CHECK(record.e_goal <= 0.1);

  // The normal-direction baseline cannot open a lid.
  const auto fail = run_cli("rollout --procgen lid --procgen-seed 5 --estimator normal --seed 3");
  CHECK(fail.exit_code == 1);
  CHECK(fail.output.find("success=0") != std::string::npos);
}

TEST_CASE("rollout rejects an unreadable object file with exit 2") {
  const auto result = run_cli("rollout --object /no/such/scene.txt");
  CHECK(result.exit_code == 2);
  CHECK(!result.output.empty());
}

TEST_CASE("rollout --dump-steps writes one cloud+flow file per visited state") {
  const auto dir = fresh_dir("dump");
  const auto result = run_cli(
      "rollout --procgen drawer --procgen-seed 5 --seed 3 --samples 256 --dump-steps " +
      dir.string());
  REQUIRE(result.exit_code == 0);
  const auto record = trial_from_record_line(result.output.substr(0, result.output.find('\n')));
  const auto files = sorted_files(dir);
  // states = initial + one per executed step
  CHECK(files.size() == static_cast<std::size_t>(record.steps) + 1);
  CHECK(files.front().filename() == "step_0000.afp");
  std::vector<Vec3> flow;
  const auto cloud = load_cloud_file(files.back().string(), &flow);
  CHECK(cloud.size() == 256);
  CHECK(flow.size() == cloud.size());
  fs::remove_all(dir);
}

TEST_CASE("eval writes table and CSV, deterministically across runs and jobs") {
  const auto a = fresh_dir("eval_a");
  const auto b = fresh_dir("eval_b");
  const std::string common =
      "eval --estimators oracle,normal --modes full --samples 384 --seed 21 --out ";
  const auto first = run_cli(common + a.string() + " --jobs 1");
  REQUIRE(first.exit_code == 0);
  const auto second = run_cli(common + b.string() + " --jobs 4");
  REQUIRE(second.exit_code == 0);

  // Stdout table has one block per estimator and an overall line.
  CHECK(first.output.find("oracle/full/") != std::string::npos);
  CHECK(first.output.find("normal/full/") != std::string::npos);
  CHECK(first.output.find("overall") != std::string::npos);

  CHECK(fs::exists(a / "report.txt"));
  CHECK(read_bytes(a / "trials.csv") == read_bytes(b / "trials.csv"));  // jobs-invariant

  // CSV has the expected header and one 10-field row per trial.
  std::ifstream csv(a / "trials.csv");
  std::string header, line;
  REQUIRE(std::getline(csv, header));
  CHECK(header ==
        "object,category,joint,estimator,observation,seed,e_goal,success,steps,termination");
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 9);
    ++rows;
  }
  CHECK(rows == 48);  // 24 joints x 2 estimators
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("eval rejects unknown estimators and modes") {
  CHECK(run_cli("eval --estimators telepathy --out /tmp/artflow_cli_bad").exit_code == 2);
  CHECK(run_cli("eval --modes sonar --out /tmp/artflow_cli_bad").exit_code == 2);
}

TEST_CASE("validate-flow passes on random objects and reports deviations") {
  const auto result = run_cli("validate-flow --objects 5 --states 2 --samples 128 --seed 7");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("max angular deviation") != std::string::npos);
  CHECK(result.output.find("PASS") != std::string::npos);
}

TEST_CASE("validate-flow on a single prismatic object is exact") {
  // Prismatic motion is linear, so any finite-difference step recovers the
  // flow direction exactly; magnitudes agree to floating-point roundoff.
  const auto result = run_cli(
      "validate-flow --procgen drawer --procgen-seed 2 --states 3 --samples 128 --seed 7 "
      "--delta-theta 0.05 --tolerance 1e-12");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("max angular deviation: 0 rad") != std::string::npos);
  CHECK(result.output.find("PASS") != std::string::npos);
}

TEST_CASE("validate-flow rejects a zero finite-difference step") {
  const auto result = run_cli("validate-flow --objects 1 --delta-theta 0");
  CHECK(result.exit_code == 2);
  CHECK(result.output.find("nonzero") != std::string::npos);
}

TEST_CASE("an impossible tolerance turns validate-flow into a failing check") {
  const auto result = run_cli("validate-flow --objects 3 --states 1 --samples 64 --tolerance 0");
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("FAIL") != std::string::npos);
}
