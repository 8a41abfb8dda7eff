#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "courtesy/cli.hpp"

using namespace courtesy;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COURTESY_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("unknown scenario exits with the usage code", "[cli]") {
  CHECK(run_cli("simulate not_a_scenario --out /tmp/cli_err") == cli::kExitUsage);
  CHECK(run_cli("simulate") == cli::kExitUsage);
  CHECK(run_cli("simulate lane_change_slow --set nonsense") == cli::kExitUsage);
}

TEST_CASE("simulate writes the log, summary, and manifest", "[cli]") {
  const fs::path dir = fresh_dir("cli_sim");
  const int code = run_cli("simulate lane_change_slow --set duration=4 --seed 9 --out " +
                           dir.string());
  CHECK(code == cli::kExitOk);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "lane_change_slow_not_there_0.csv"));
  CHECK(fs::exists(dir / "lane_change_slow_not_there_0_summary.csv"));

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("command") == "simulate");
  CHECK(manifest.at("seed") == 9);
  CHECK(manifest.at("resolved").at("duration") == 4);
}

TEST_CASE("repeated runs produce byte-identical CSV output", "[cli]") {
  const fs::path a = fresh_dir("cli_det_a");
  const fs::path b = fresh_dir("cli_det_b");
  const std::string args = "simulate lane_change_slow --set duration=4 --seed 33 --out ";
  REQUIRE(run_cli(args + a.string()) == cli::kExitOk);
  REQUIRE(run_cli(args + b.string()) == cli::kExitOk);
  CHECK(slurp(a / "lane_change_slow_not_there_0.csv") ==
        slurp(b / "lane_change_slow_not_there_0.csv"));
  CHECK(slurp(a / "lane_change_slow_not_there_0_summary.csv") ==
        slurp(b / "lane_change_slow_not_there_0_summary.csv"));
}

TEST_CASE("sweep emits one summary row per lambda", "[cli]") {
  const fs::path dir = fresh_dir("cli_sweep");
  const int code = run_cli("sweep lane_change_slow --set duration=3 --lambda-grid 0 5 --out " +
                           dir.string());
  CHECK(code == cli::kExitOk);
  const std::string summary = slurp(dir / "sweep_summary.csv");
  CHECK(summary.find("\n0,") != std::string::npos);
  CHECK(summary.find("\n5,") != std::string::npos);
  CHECK(fs::exists(dir / "lane_change_slow_not_there_0.csv"));
  CHECK(fs::exists(dir / "lane_change_slow_not_there_5.csv"));
}

TEST_CASE("scenario files load the same as built-ins", "[cli]") {
  const fs::path dir = fresh_dir("cli_file");
  const fs::path scn = dir / "custom.json";
  {
    nlohmann::json j = builtin_scenario("lane_change_slow");
    j["duration"] = 3;
    std::ofstream out(scn);
    out << j.dump();
  }
  const int code = run_cli("simulate " + scn.string() + " --out " + dir.string());
  CHECK(code == cli::kExitOk);
  CHECK(fs::exists(dir / "lane_change_slow_not_there_0.csv"));
}

TEST_CASE("the output directory honors COURTESY_OUT", "[cli]") {
  const fs::path dir = fresh_dir("cli_env");
  CHECK(cli::resolve_out_dir("explicit") == "explicit");
  setenv("COURTESY_OUT", dir.string().c_str(), 1);
  CHECK(cli::resolve_out_dir("") == dir.string());
  unsetenv("COURTESY_OUT");
  CHECK(cli::resolve_out_dir("") == ".");
}
