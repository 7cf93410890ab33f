#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssrqd/experiments.hpp"

using namespace ssrqd;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("ssrqd_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("preset names are stable") {
  const std::vector<std::string>& names = experiment_presets();
  for (const char* expected :
       {"table1a", "table1b", "table2", "table3", "table6", "table7a",
        "table7b", "fig_cadt_over_tau", "fig_cadt_over_delta", "fig_sadt"}) {
    bool found = false;
    for (const std::string& name : names) found = found || name == expected;
    CHECK_MESSAGE(found, "missing preset ", expected);
  }
}

TEST_CASE("unknown presets and bad options are rejected") {
  TempDir dir("bad");
  ExperimentOptions options;
  options.out_dir = dir.path;
  CHECK_THROWS_WITH_AS((void)run_experiment("table99", options),
                       doctest::Contains("table6"), std::invalid_argument);
  ExperimentOptions no_dir;
  CHECK_THROWS_AS((void)run_experiment("table6", no_dir),
                  std::invalid_argument);
  ExperimentOptions few = options;
  few.trials = 10;
  CHECK_THROWS_AS((void)run_experiment("table6", few), std::invalid_argument);
}

TEST_CASE("table6 writes the reference slope constants") {
  TempDir dir("t6");
  ExperimentOptions options;
  options.out_dir = dir.path;
  options.seed = 5;
  const ExperimentResult result = run_experiment("table6", options);
  CHECK(result.preset == "table6");
  REQUIRE(result.files.size() == 2);
  CHECK(result.files.back().filename() == "manifest.json");

  const std::string csv = slurp(dir.path / "table6.csv");
  CHECK(csv.find("distribution,theta0,theta0_quadrature") == 0);
  CHECK(csv.find("normal:var1,0.977205,") != std::string::npos);
  CHECK(csv.find("laplace:var1,1.224745,") != std::string::npos);
  CHECK(csv.find("t4:var1,1.183603,") != std::string::npos);
  CHECK(csv.find("t3:var1,1.378322,") != std::string::npos);
  CHECK(csv.find("t2:iqr,1.178097,") != std::string::npos);
  CHECK(csv.find("t1:iqr,1.102658,") != std::string::npos);

  const nlohmann::json manifest =
      nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(manifest.at("schema_version") == 1);
  CHECK(manifest.at("preset") == "table6");
  CHECK(manifest.at("seed") == 5);
  CHECK(manifest.at("full_scale") == false);
  CHECK(manifest.at("files").size() == 1);
  CHECK(manifest.at("files")[0] == "table6.csv");
  CHECK(manifest.at("version").is_string());
}

TEST_CASE("table3 writes the score correlation grid") {
  TempDir dir("t3");
  ExperimentOptions options;
  options.out_dir = dir.path;
  const ExperimentResult result = run_experiment("table3", options);
  REQUIRE(result.files.size() == 3);

  const std::string finite = slurp(dir.path / "table3.csv");
  CHECK(finite.find("score,normal,t4,t3,t2,t1") == 0);
  // Two-decimal rendering of the correlations at rank step 100.
  CHECK(finite.find("wilcoxon,0.98,0.99,0.98,0.94,0.79") != std::string::npos);
  CHECK(finite.find("van-der-waerden,1.00,0.95,0.92,0.86,0.67") !=
        std::string::npos);

  const std::string asymptotic = slurp(dir.path / "table3_asymptotic.csv");
  CHECK(asymptotic.find("wilcoxon,0.9772,") != std::string::npos);
}

TEST_CASE("experiment artifacts are byte-reproducible") {
  TempDir dir_a("rep_a");
  TempDir dir_b("rep_b");
  ExperimentOptions options;
  options.seed = 31;
  options.out_dir = dir_a.path;
  run_experiment("table6", options);
  options.out_dir = dir_b.path;
  options.workers = 2;  // worker count must not leak into the bytes
  run_experiment("table6", options);
  CHECK(slurp(dir_a.path / "table6.csv") == slurp(dir_b.path / "table6.csv"));
  CHECK(slurp(dir_a.path / "manifest.json") ==
        slurp(dir_b.path / "manifest.json"));
}
