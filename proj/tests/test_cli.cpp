// End-to-end tests that drive the ssrqd binary through a shell: argument
// validation, exit codes, report JSON, and CSV artifacts.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssrqd/calibrate.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Scratch directory plus a runner that shells out to the built binary with
// stdout/stderr captured to files.
struct CliHarness {
  fs::path dir;

  explicit CliHarness(const std::string& tag) {
    dir = fs::temp_directory_path() /
          ("ssrqd_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~CliHarness() { fs::remove_all(dir); }

  fs::path file(const std::string& name) const { return dir / name; }

  CliResult run(const std::vector<std::string>& args) const {
    const fs::path out_path = dir / "stdout.txt";
    const fs::path err_path = dir / "stderr.txt";
    std::string command = std::string("'") + SSRQD_CLI_PATH + "'";
    for (const std::string& arg : args) command += " '" + arg + "'";
    command += " > '" + out_path.string() + "' 2> '" + err_path.string() + "'";
    const int status = std::system(command.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    CliResult result;
    result.exit_code = WEXITSTATUS(status);
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
  }
};

std::string series_csv(const std::vector<double>& values) {
  std::ostringstream text;
  text << "x\n";
  for (double v : values) text << v << "\n";
  return text.str();
}

// Ten quiet observations followed by a strong upward shift; no zeros, no
// magnitude ties, so it is safe under the strict tie policy.
const std::vector<double> kShiftedSeries = {
    0.31,  -0.52, 0.18,  -0.77, 0.43,  -0.29, 0.64,  -0.11, 0.23, -0.41,
    2.05,  2.53,  3.12,  2.81,  3.47,  2.94,  3.66,  3.21,  2.72, 3.88,
    3.05,  3.59,  2.87,  3.33,  3.71};

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("version and help exit cleanly") {
  CliHarness cli("help");
  const CliResult version = cli.run({"--version"});
  CHECK(version.exit_code == 0);
  CHECK(version.out.find('.') != std::string::npos);  // dotted version string

  const CliResult help = cli.run({"--help"});
  CHECK(help.exit_code == 0);
  for (const char* sub : {"calibrate", "monitor", "experiment", "estimate-cp"}) {
    CHECK_MESSAGE(help.out.find(sub) != std::string::npos, "help lists ", sub);
  }
}

TEST_CASE("argument errors exit with the usage status") {
  CliHarness cli("usage");
  CHECK(cli.run({}).exit_code == 2);              // subcommand required
  CHECK(cli.run({"frobnicate"}).exit_code == 2);  // unknown subcommand
  CHECK(cli.run({"monitor", "--input", "x.csv", "--zeta", "0.25", "--h", "4",
                 "--no-such-flag"})
            .exit_code == 2);
  // --seed and --zeta/--arl0 are required on calibrate.
  CHECK(cli.run({"calibrate", "--zeta", "0.25", "--arl0", "100"}).exit_code ==
        2);
  const CliResult bad_score =
      cli.run({"calibrate", "--zeta", "0.25", "--arl0", "50", "--seed", "1",
               "--score", "spearman", "--trials", "200"});
  CHECK(bad_score.exit_code == 2);
  CHECK(bad_score.err.find("spearman") != std::string::npos);
}

TEST_CASE("calibrate writes a parseable, reproducible table") {
  CliHarness cli("calibrate");
  const fs::path table_path = cli.file("limits.csv");
  const std::vector<std::string> args = {
      "calibrate",       "--family", "ssr-sr", "--zeta",  "0.25",
      "--arl0",          "30",       "--trials", "400",   "--seed",
      "9",               "--out",    table_path.string()};
  const CliResult first = cli.run(args);
  CHECK(first.exit_code == 0);
  const std::string first_bytes = slurp(table_path);

  std::istringstream in(first_bytes);
  const ssrqd::ControlLimitTable table = ssrqd::ControlLimitTable::read_csv(in);
  CHECK(table.family_token == "ssr-sr");
  CHECK(table.score_token == "wilcoxon");
  REQUIRE(table.zetas.size() == 1);
  REQUIRE(table.arl0s.size() == 1);
  CHECK(table.zetas[0] == doctest::Approx(0.25));
  CHECK(table.arl0s[0] == doctest::Approx(30.0));
  CHECK(table.at(0, 0).h > 0.0);
  CHECK_FALSE(table.at(0, 0).flagged);

  // Same seed, same bytes; and '-' routes the same table to stdout.
  const CliResult second = cli.run(args);
  CHECK(second.exit_code == 0);
  CHECK(slurp(table_path) == first_bytes);
  std::vector<std::string> to_stdout = args;
  to_stdout.back() = "-";
  const CliResult streamed = cli.run(to_stdout);
  CHECK(streamed.exit_code == 0);
  CHECK(streamed.out == first_bytes);
}

TEST_CASE("calibrate rejects zeta zero only for Shiryaev-Roberts families") {
  CliHarness cli("zeta0");
  const CliResult sr = cli.run({"calibrate", "--family", "ssr-sr", "--zeta",
                                "0", "--arl0", "30", "--trials", "200",
                                "--seed", "3"});
  CHECK(sr.exit_code == 2);
  CHECK(sr.err.find("zeta") != std::string::npos);
  const CliResult cusum =
      cli.run({"calibrate", "--family", "ssr-cusum", "--zeta", "0", "--arl0",
               "20", "--trials", "300", "--seed", "3", "--out",
               cli.file("cusum.csv").string()});
  CHECK(cusum.exit_code == 0);
}

TEST_CASE("monitor reports the alarm, change point, and statistic path") {
  CliHarness cli("monitor");
  const fs::path input = cli.file("series.csv");
  spit(input, series_csv(kShiftedSeries));
  const fs::path report_path = cli.file("report.json");
  const fs::path path_out = cli.file("path.csv");
  const CliResult run = cli.run(
      {"monitor", "--input", input.string(), "--family", "ssr-sr", "--zeta",
       "0.25", "--h", "4.5", "--path-out", path_out.string(), "--report",
       report_path.string()});
  CHECK(run.exit_code == 0);
  CHECK(run.out.empty());  // report went to the file

  const json report = json::parse(slurp(report_path));
  CHECK(report.at("schema_version") == 1);
  CHECK(report.at("command") == "monitor");
  CHECK(report.at("scheme").at("family") == "ssr-sr");
  CHECK(report.at("scheme").at("score") == "wilcoxon");
  CHECK(report.at("scheme").at("tie_policy") == "strict");
  CHECK(report.at("scheme").at("zeta") == doctest::Approx(0.25));
  CHECK(report.at("scheme").at("h") == doctest::Approx(4.5));
  CHECK(report.at("scheme").at("sidedness") == "upper");

  REQUIRE(!report.at("alarm").is_null());
  const std::int64_t alarm_index = report.at("alarm").at("index");
  CHECK(report.at("alarm").at("direction") == "up");
  CHECK(alarm_index > 10);  // not during the quiet stretch
  CHECK(alarm_index <= static_cast<std::int64_t>(kShiftedSeries.size()));
  CHECK(report.at("n_observations") == alarm_index);

  const std::int64_t tau_raw = report.at("tau_hat").at("raw");
  const std::int64_t tau_rank = report.at("tau_hat").at("rank");
  CHECK(tau_raw >= 8);
  CHECK(tau_raw <= 12);
  CHECK(tau_rank >= 8);
  CHECK(tau_rank <= 12);

  CHECK(report.at("warnings").at("zero_rows").empty());
  CHECK(report.at("warnings").at("magnitude_ties") == 0);
  CHECK(report.at("warnings").at("jittered") == 0);

  const std::string path_text = slurp(path_out);
  CHECK(path_text.rfind("index,x,increment,statistic,alarm\n", 0) == 0);
  CHECK(count_lines(path_text) == static_cast<int>(alarm_index) + 1);
  // The final row is the alarming step.
  const std::size_t last_start =
      path_text.rfind('\n', path_text.size() - 2) + 1;
  CHECK(path_text.substr(last_start).find(",1\n") != std::string::npos);
}

TEST_CASE("monitor without an alarm reports null and consumes everything") {
  CliHarness cli("noalarm");
  const fs::path input = cli.file("series.csv");
  spit(input, series_csv(kShiftedSeries));
  const CliResult run =
      cli.run({"monitor", "--input", input.string(), "--zeta", "0.25", "--h",
               "50"});
  CHECK(run.exit_code == 0);
  const json report = json::parse(run.out);
  CHECK(report.at("alarm").is_null());
  CHECK(!report.contains("tau_hat"));
  CHECK(report.at("n_observations") ==
        static_cast<std::int64_t>(kShiftedSeries.size()));
}

TEST_CASE("strict tie policy rejects exact zeros; jitter keeps going") {
  CliHarness cli("ties");
  std::vector<double> with_zero = kShiftedSeries;
  with_zero[4] = 0.0;
  const fs::path input = cli.file("zeros.csv");
  spit(input, series_csv(with_zero));

  const CliResult strict = cli.run(
      {"monitor", "--input", input.string(), "--zeta", "0.25", "--h", "4.5"});
  CHECK(strict.exit_code == 3);
  CHECK(strict.err.find("zero") != std::string::npos);
  CHECK(strict.err.find("5") != std::string::npos);  // 1-based row number

  const CliResult jitter =
      cli.run({"monitor", "--input", input.string(), "--zeta", "0.25", "--h",
               "4.5", "--tie-policy", "jitter"});
  CHECK(jitter.exit_code == 0);
  const json report = json::parse(jitter.out);
  CHECK(report.at("scheme").at("tie_policy") == "jitter");
  CHECK(report.at("warnings").at("zero_rows") == json::array({5}));
  CHECK(report.at("warnings").at("jittered") >= 1);
  REQUIRE(!report.at("alarm").is_null());

  const CliResult bad_policy =
      cli.run({"monitor", "--input", input.string(), "--zeta", "0.25", "--h",
               "4.5", "--tie-policy", "sometimes"});
  CHECK(bad_policy.exit_code == 2);
}

TEST_CASE("exactly one control-limit source is accepted") {
  CliHarness cli("limits");
  const fs::path input = cli.file("series.csv");
  spit(input, series_csv(kShiftedSeries));
  const std::vector<std::string> base = {"monitor", "--input", input.string(),
                                         "--zeta", "0.25"};

  std::vector<std::string> none = base;
  const CliResult missing = cli.run(none);
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("control limit") != std::string::npos);

  std::vector<std::string> both = base;
  both.insert(both.end(), {"--h", "3", "--arl0", "100", "--table", "t.csv"});
  CHECK(cli.run(both).exit_code == 2);

  std::vector<std::string> arl0_only = base;
  arl0_only.insert(arl0_only.end(), {"--arl0", "100"});
  CHECK(cli.run(arl0_only).exit_code == 2);  // --arl0 needs --table
}

TEST_CASE("monitor pulls its limit from a calibrated table") {
  CliHarness cli("table");
  const fs::path table_path = cli.file("limits.csv");
  CHECK(cli.run({"calibrate", "--family", "ssr-sr", "--zeta", "0.25", "--arl0",
                 "30", "--trials", "400", "--seed", "9", "--out",
                 table_path.string()})
            .exit_code == 0);
  std::ifstream table_in(table_path);
  const ssrqd::ControlLimitTable table =
      ssrqd::ControlLimitTable::read_csv(table_in);

  const fs::path input = cli.file("series.csv");
  spit(input, series_csv(kShiftedSeries));
  const std::vector<std::string> base = {"monitor",  "--input",
                                         input.string(), "--zeta", "0.25",
                                         "--arl0",   "30",
                                         "--table",  table_path.string()};
  const CliResult run = cli.run(base);
  CHECK(run.exit_code == 0);
  const json report = json::parse(run.out);
  CHECK(report.at("scheme").at("h") == doctest::Approx(table.at(0, 0).h));

  // The table binds the scheme: family or score mismatches are refused.
  std::vector<std::string> wrong_family = base;
  wrong_family.insert(wrong_family.end(), {"--family", "ssr-cusum"});
  const CliResult family_err = cli.run(wrong_family);
  CHECK(family_err.exit_code == 2);
  CHECK(family_err.err.find("family") != std::string::npos);

  std::vector<std::string> wrong_score = base;
  wrong_score.insert(wrong_score.end(), {"--score", "vdw"});
  CHECK(cli.run(wrong_score).exit_code == 2);

  std::vector<std::string> off_grid = base;
  off_grid[4] = "0.9";  // zeta outside the calibrated grid
  CHECK(cli.run(off_grid).exit_code == 2);

  std::vector<std::string> no_table = base;
  no_table.back() = cli.file("absent.csv").string();
  CHECK(cli.run(no_table).exit_code == 3);
}

TEST_CASE("paired two-column input is monitored as the difference") {
  CliHarness cli("paired");
  std::ostringstream paired;
  paired << "v1,v2\n";
  for (double v : kShiftedSeries) paired << (v + 7.5) << "," << 7.5 << "\n";
  const fs::path paired_path = cli.file("paired.csv");
  spit(paired_path, paired.str());
  const fs::path single_path = cli.file("single.csv");
  spit(single_path, series_csv(kShiftedSeries));

  const CliResult from_pairs =
      cli.run({"monitor", "--input", paired_path.string(), "--zeta", "0.25",
               "--h", "4.5"});
  const CliResult from_single =
      cli.run({"monitor", "--input", single_path.string(), "--zeta", "0.25",
               "--h", "4.5"});
  CHECK(from_pairs.exit_code == 0);
  const json a = json::parse(from_pairs.out);
  const json b = json::parse(from_single.out);
  CHECK(a.at("alarm").at("index") == b.at("alarm").at("index"));
  CHECK(a.at("n_observations") == b.at("n_observations"));

  // Equal pairs difference to zero and trip the strict tie policy.
  std::ostringstream tied;
  tied << "v1,v2\n";
  tied << "1.0,1.0\n2.0,1.5\n0.5,1.0\n";
  const fs::path tied_path = cli.file("tied.csv");
  spit(tied_path, tied.str());
  CHECK(cli.run({"monitor", "--input", tied_path.string(), "--zeta", "0.25",
                 "--h", "4.5"})
            .exit_code == 3);
}

TEST_CASE("estimate-cp locates a seeded step and writes the scan") {
  CliHarness cli("cp");
  std::vector<double> series;
  const std::vector<double> noise = {0.21, -0.34, 0.12, -0.45, 0.38,
                                     -0.17, 0.29, -0.52, 0.07, -0.26};
  for (int i = 0; i < 12; ++i) series.push_back(noise[i % noise.size()]);
  for (int i = 0; i < 8; ++i) series.push_back(3.0 + noise[i]);
  const fs::path input = cli.file("step.csv");
  spit(input, series_csv(series));
  const fs::path scan_path = cli.file("scan.csv");

  const CliResult both = cli.run({"estimate-cp", "--input", input.string(),
                                  "--path-out", scan_path.string()});
  CHECK(both.exit_code == 0);
  const json report = json::parse(both.out);
  CHECK(report.at("command") == "estimate-cp");
  CHECK(report.at("n") == 20);
  for (const char* variant : {"raw", "rank"}) {
    const json& est = report.at("estimates").at(variant);
    const std::int64_t tau = est.at("tau_hat");
    CHECK(tau >= 10);
    CHECK(tau <= 14);
    CHECK(est.at("max_statistic").get<double>() > 0.0);
  }
  const std::string scan = slurp(scan_path);
  CHECK(scan.rfind("k,abs_t\n", 0) == 0);
  CHECK(count_lines(scan) == 20);  // header + k = 1..19

  const CliResult raw_only =
      cli.run({"estimate-cp", "--input", input.string(), "--variant", "raw"});
  CHECK(raw_only.exit_code == 0);
  const json raw_report = json::parse(raw_only.out);
  CHECK(raw_report.at("estimates").contains("raw"));
  CHECK(!raw_report.at("estimates").contains("rank"));

  CHECK(cli.run({"estimate-cp", "--input", input.string(), "--variant",
                 "median"})
            .exit_code == 2);

  const fs::path tiny = cli.file("tiny.csv");
  spit(tiny, "x\n1.0\n2.0\n");
  CHECK(cli.run({"estimate-cp", "--input", tiny.string()}).exit_code == 3);
}

TEST_CASE("unreadable or malformed input exits with the data status") {
  CliHarness cli("baddata");
  CHECK(cli.run({"monitor", "--input", cli.file("absent.csv").string(),
                 "--zeta", "0.25", "--h", "2"})
            .exit_code == 3);
  const fs::path bad_header = cli.file("bad_header.csv");
  spit(bad_header, "value\n1.0\n");
  CHECK(cli.run({"monitor", "--input", bad_header.string(), "--zeta", "0.25",
                 "--h", "2"})
            .exit_code == 3);
  const fs::path bad_row = cli.file("bad_row.csv");
  spit(bad_row, "x\n1.0\ntwo\n");
  const CliResult row_err = cli.run({"estimate-cp", "--input",
                                     bad_row.string()});
  CHECK(row_err.exit_code == 3);
  CHECK(row_err.err.find("bad_row.csv") != std::string::npos);
}

TEST_CASE("experiment runs a preset and rejects unknown names") {
  CliHarness cli("experiment");
  const fs::path out_dir = cli.file("results");
  const CliResult run =
      cli.run({"experiment", "table6", "--seed", "11", "--out-dir",
               out_dir.string(), "--trials", "2000"});
  CHECK(run.exit_code == 0);
  CHECK(run.out.find("table6.csv") != std::string::npos);
  CHECK(fs::exists(out_dir / "table6.csv"));
  CHECK(fs::exists(out_dir / "manifest.json"));

  const CliResult unknown = cli.run(
      {"experiment", "table42", "--seed", "11", "--out-dir", out_dir.string()});
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.err.find("table42") != std::string::npos);

  const CliResult too_few =
      cli.run({"experiment", "table6", "--seed", "11", "--out-dir",
               out_dir.string(), "--trials", "10"});
  CHECK(too_few.exit_code == 2);
}
