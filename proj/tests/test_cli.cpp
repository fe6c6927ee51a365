// End-to-end checks of the command-line tool. The binary under test is
// named by the HETQ_CLI environment variable (set by the test harness).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  std::ostringstream text;
  text << file.rdbuf();
  return text.str();
}

std::string temp_path(const std::string& tag) {
  return "/tmp/hetq_cli_test_" + std::to_string(getpid()) + "_" + tag;
}

RunResult run_cli(const std::string& args) {
  const char* binary = std::getenv("HETQ_CLI");
  REQUIRE_MESSAGE(binary != nullptr,
                  "HETQ_CLI must point at the command-line binary");
  const std::string err_path = temp_path("stderr");
  const std::string command =
      std::string(binary) + " " + args + " 2>" + err_path;

  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  std::size_t got = 0;
  while ((got = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
    result.out.append(buffer, got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.err = slurp(err_path);
  std::remove(err_path.c_str());
  return result;
}

}  // namespace

TEST_CASE("analyze emits the closed-form metrics as JSON") {
  const RunResult run = run_cli("analyze --lambda 1 --mu 2,1 --format json");
  CHECK(run.exit_code == 0);
  const json doc = json::parse(run.out);
  CHECK(doc["busy"][0].get<double>() == doctest::Approx(5.0 / 17.0).epsilon(1e-12));
  CHECK(doc["busy"][1].get<double>() == doctest::Approx(7.0 / 17.0).epsilon(1e-12));
  CHECK(doc["p0"].get<double>() == doctest::Approx(8.0 / 17.0).epsilon(1e-12));
  CHECK(doc["effective_rate"][0].get<double>() ==
        doctest::Approx(10.0 / 17.0).epsilon(1e-12));
  CHECK(doc["prob_all_busy"].get<double>() ==
        doctest::Approx(3.0 / 17.0).epsilon(1e-12));
  // The output carries its own config for round-tripping.
  CHECK(doc["lambda"].get<double>() == 1.0);
  CHECK(doc["mu"] == json::array({2.0, 1.0}));
}

TEST_CASE("analyze rejects an unstable config with exit 2") {
  const RunResult run = run_cli("analyze --lambda 3 --mu 2,1");
  CHECK(run.exit_code == 2);
  CHECK(run.out.empty());
  CHECK(run.err.find("unstable") != std::string::npos);
}

TEST_CASE("analyze single server in CSV") {
  const RunResult run = run_cli("analyze --lambda 0.5 --mu 1 --format csv");
  CHECK(run.exit_code == 0);
  CHECK(run.out.rfind("metric,value\n", 0) == 0);
  CHECK(run.out.find("busy[0],0.5\n") != std::string::npos);
  CHECK(run.out.find("p0,0.5\n") != std::string::npos);
}

TEST_CASE("missing config is a usage error") {
  CHECK(run_cli("analyze").exit_code == 2);
  CHECK(run_cli("analyze --lambda 1").exit_code == 2);
  CHECK(run_cli("analyze --mu 1,2").exit_code == 2);
  CHECK(run_cli("nonsense --lambda 1 --mu 2").exit_code == 2);
  CHECK(run_cli("analyze --lambda 1 --mu 2,1 --format yaml").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("config files load and inline flags override them") {
  const std::string path = temp_path("config.json");
  {
    std::ofstream file(path);
    file << R"({"lambda": 1.0, "mu": [2.0, 1.0]})";
  }
  const RunResult from_file = run_cli("analyze --config " + path);
  CHECK(from_file.exit_code == 0);
  const RunResult from_flags = run_cli("analyze --lambda 1 --mu 2,1");
  CHECK(from_file.out == from_flags.out);

  // Overriding lambda changes the result; the file still supplies mu.
  const RunResult overridden =
      run_cli("analyze --config " + path + " --lambda 0.5");
  CHECK(overridden.exit_code == 0);
  const json doc = json::parse(overridden.out);
  CHECK(doc["lambda"].get<double>() == 0.5);
  CHECK(doc["mu"] == json::array({2.0, 1.0}));

  CHECK(run_cli("analyze --config /nonexistent.json").exit_code == 2);
  const std::string bad = temp_path("bad.json");
  {
    std::ofstream file(bad);
    file << "{not json";
  }
  CHECK(run_cli("analyze --config " + bad).exit_code == 2);
  std::remove(bad.c_str());
  std::remove(path.c_str());
}

TEST_CASE("the CLI output round-trips as a config file") {
  const std::string path = temp_path("roundtrip.json");
  const RunResult direct =
      run_cli("analyze --lambda 0.75 --mu 1.5,0.25,1 --out " + path);
  CHECK(direct.exit_code == 0);
  CHECK(direct.out.empty());
  const RunResult reloaded = run_cli("analyze --config " + path);
  CHECK(reloaded.exit_code == 0);
  CHECK(reloaded.out == slurp(path));
  std::remove(path.c_str());
}

TEST_CASE("oracle agrees with the closed form and reports the residual") {
  const RunResult run = run_cli("oracle --lambda 1 --mu 2,1");
  CHECK(run.exit_code == 0);
  const json doc = json::parse(run.out);
  CHECK(doc["max_abs_diff"].get<double>() < 1e-10);
  CHECK(doc["balance_residual"].get<double>() < 1e-12);
  CHECK(doc["tolerance"].get<double>() == 1e-8);
  CHECK(doc["truncation"].get<int>() >= 30);
  bool saw_busy = false;
  for (const json& entry : doc["entries"]) {
    if (entry["metric"] == "busy[1]") {
      saw_busy = true;
      CHECK(entry["closed_form"].get<double>() ==
            doctest::Approx(7.0 / 17.0).epsilon(1e-12));
      CHECK(entry["abs_diff"].get<double>() < 1e-10);
    }
  }
  CHECK(saw_busy);
}

TEST_CASE("oracle guards its state-space size with exit 4") {
  std::string mu = "1";
  for (int j = 1; j < 21; ++j) mu += ",1";
  const RunResult run = run_cli("oracle --lambda 1 --mu " + mu);
  CHECK(run.exit_code == 4);
  CHECK(run.err.find("20") != std::string::npos);
}

TEST_CASE("oracle rejects a non-positive truncation depth") {
  CHECK(run_cli("oracle --lambda 1 --mu 2,1 --truncation 0").exit_code == 2);
  CHECK(run_cli("oracle --lambda 1 --mu 2,1 --truncation -3").exit_code == 2);
  CHECK(run_cli("oracle --lambda 1 --mu 2,1 --truncation 80").exit_code == 0);
}

TEST_CASE("oracle CSV lists one row per metric") {
  const RunResult run = run_cli("oracle --lambda 1 --mu 2,1 --format csv");
  CHECK(run.exit_code == 0);
  CHECK(run.out.rfind("metric,closed_form,oracle,abs_diff\n", 0) == 0);
  CHECK(run.out.find("\nbusy[0],") != std::string::npos);
  CHECK(run.out.find("\nbalance_residual,") != std::string::npos);
}

TEST_CASE("simulate covers the references and reports them") {
  const RunResult run = run_cli(
      "simulate --lambda 1 --mu 2,1 --horizon 50000 --seed 11");
  CHECK(run.exit_code == 0);
  const json doc = json::parse(run.out);
  const json& busy0 = doc["metrics"]["busy_fraction[0]"];
  CHECK(busy0["reference"].get<double>() ==
        doctest::Approx(5.0 / 17.0).epsilon(1e-12));
  CHECK(busy0["covered"].is_boolean());
  CHECK(doc["event_count"].get<long long>() > 10000);
  CHECK(doc["low_events"].get<bool>() == false);
  CHECK(doc["seed"].get<int>() == 11);

  int covered = 0;
  int total = 0;
  for (const auto& [name, metric] : doc["metrics"].items()) {
    ++total;
    if (metric["covered"].get<bool>()) ++covered;
  }
  CHECK(total == 7);
  CHECK(covered >= 5);  // 95% CIs; a miss or two is expected noise
}

TEST_CASE("simulate rejects bad sampling setups with exit 2") {
  CHECK(run_cli("simulate --lambda 1 --mu 2,1 --horizon 0").exit_code == 2);
  CHECK(run_cli("simulate --lambda 1 --mu 2,1 --warmup 1.5").exit_code == 2);
  CHECK(run_cli("simulate --lambda 1 --mu 2,1 --batches 1").exit_code == 2);
}

TEST_CASE("verify reports the worked-example margins") {
  const RunResult run = run_cli("verify --lambda 1 --mu 2,1");
  CHECK(run.exit_code == 0);
  const json doc = json::parse(run.out);
  CHECK(doc["violations"].get<int>() == 0);
  const json& pair = doc["configs"][0]["pairs"][0];
  CHECK(pair["faster"].get<int>() == 0);
  CHECK(pair["slower"].get<int>() == 1);
  CHECK(pair["busy_margin"].get<double>() ==
        doctest::Approx(2.0 / 17.0).epsilon(1e-12));
  CHECK(pair["rate_margin"].get<double>() ==
        doctest::Approx(3.0 / 17.0).epsilon(1e-12));
  CHECK(pair["sandwich_margin"].get<double>() ==
        doctest::Approx(1.5 / 17.0).epsilon(1e-12));
  CHECK(pair["holds"].get<bool>());
}

TEST_CASE("verify on one server yields an empty verdict table") {
  const RunResult run = run_cli("verify --lambda 0.5 --mu 1");
  CHECK(run.exit_code == 0);
  const json doc = json::parse(run.out);
  CHECK(doc["configs"][0]["pairs"].empty());
  CHECK(doc["violations"].get<int>() == 0);
}

TEST_CASE("verify sweeps random grids clean") {
  const RunResult run = run_cli(
      "verify --random 200 --n 5 --rho-range 0.1:0.9 --ratio-max 50 --seed 7");
  CHECK(run.exit_code == 0);
  const json doc = json::parse(run.out);
  CHECK(doc["configs"].size() == 200);
  CHECK(doc["violations"].get<int>() == 0);
}

TEST_CASE("sweep emits one CSV row per config and server") {
  const RunResult run = run_cli("sweep --mu 2,1 --rho-range 0.1:0.9");
  CHECK(run.exit_code == 0);
  std::istringstream lines(run.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line ==
        "config,lambda,rho,server,mu,busy,effective_rate,prob_all_busy,"
        "mean_customers,mean_sojourn");
  int rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 9 * 2);

  const RunResult custom = run_cli("sweep --mu 2,1 --rho-range 0.2:0.8:4");
  int custom_rows = 0;
  std::istringstream custom_lines(custom.out);
  std::getline(custom_lines, line);
  while (std::getline(custom_lines, line)) {
    if (!line.empty()) ++custom_rows;
  }
  CHECK(custom_rows == 4 * 2);
}

TEST_CASE("an empty sweep still prints the header") {
  const RunResult run = run_cli("sweep --random 0");
  CHECK(run.exit_code == 0);
  CHECK(run.out ==
        "config,lambda,rho,server,mu,busy,effective_rate,prob_all_busy,"
        "mean_customers,mean_sojourn\n");
}

TEST_CASE("bad grid bounds are usage errors") {
  CHECK(run_cli("sweep --mu 2,1 --rho-range 0.9:0.1").exit_code == 2);
  CHECK(run_cli("sweep --mu 2,1 --rho-range 0:0.5").exit_code == 2);
  CHECK(run_cli("sweep --mu 2,1 --rho-range 0.1:1.0").exit_code == 2);
  CHECK(run_cli("sweep --mu 2,1 --rho-range junk").exit_code == 2);
  CHECK(run_cli("verify --random -5 --n 3").exit_code == 2);
  CHECK(run_cli("verify --random 5 --n 0").exit_code == 2);
  CHECK(run_cli("verify --random 5 --n 3 --ratio-max 0.5").exit_code == 2);
}

TEST_CASE("repeated invocations are byte-identical") {
  const std::string commands[] = {
      "analyze --lambda 1 --mu 2,1",
      "analyze --lambda 1 --mu 2,1 --format csv",
      "oracle --lambda 0.9 --mu 1,0.5",
      "simulate --lambda 1 --mu 2,1 --horizon 20000 --seed 3",
      "verify --random 40 --n 4 --seed 9",
      "sweep --mu 3,2,1 --rho-range 0.2:0.8:5",
      "sweep --random 12 --n 3 --seed 31",
  };
  for (const std::string& command : commands) {
    CAPTURE(command);
    const RunResult first = run_cli(command);
    const RunResult second = run_cli(command);
    CHECK(first.exit_code == 0);
    CHECK(first.out == second.out);
    CHECK_FALSE(first.out.empty());
  }
}
