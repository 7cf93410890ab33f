// ssrqd: sequential change detection with signed sequential ranks.
//
// Subcommands:
//   calibrate    control-limit tables for a (zeta, ARL0) grid
//   monitor      run a detector over a CSV series, report alarm + change point
//   experiment   canned reproduction studies (tables/figures)
//   estimate-cp  retrospective change-point estimate for a CSV series
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 calibration failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssrqd/calibrate.hpp"
#include "ssrqd/changepoint.hpp"
#include "ssrqd/csvio.hpp"
#include "ssrqd/experiments.hpp"
#include "ssrqd/parallel.hpp"
#include "ssrqd/runlength.hpp"
#include "ssrqd/version.hpp"

namespace {

using nlohmann::json;
using namespace ssrqd;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ScoreFunction score_from_token(const std::string& token) {
  if (token == "wilcoxon") return ScoreFunction::wilcoxon();
  if (token == "vdw" || token == "van-der-waerden") {
    return ScoreFunction::van_der_waerden();
  }
  throw UsageError("unknown score '" + token + "' (wilcoxon, vdw)");
}

csv::SeriesData load_series(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  try {
    return csv::read_series_csv(in);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string(e.what()) + " in '" + path + "'");
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
}

void emit_report(const json& report, const std::string& report_path) {
  const std::string text = report.dump(2) + "\n";
  if (report_path.empty() || report_path == "-") {
    std::cout << text;
  } else {
    write_text_file(report_path, text);
  }
}

// --- calibrate ---------------------------------------------------------------

struct CalibrateArgs {
  std::string family = "ssr-sr";
  std::string score = "wilcoxon";
  std::vector<double> zetas;
  std::vector<double> arl0s;
  std::int64_t trials = 20000;
  std::uint64_t seed = 1;
  double rel_tol = 0.05;
  std::int64_t cap = 0;
  int threads = 0;
  bool two_sided = false;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& args) {
  const SchemeFamily family = family_from_token(args.family);
  const ScoreFunction score = score_from_token(args.score);
  for (double z : args.zetas) {
    if (z == 0.0 && is_shiryaev_roberts(family)) {
      throw UsageError("zeta = 0 is not admissible for the Shiryaev-Roberts "
                       "families");
    }
  }
  CalibrationOptions options;
  options.mc.trials = args.trials;
  options.mc.seed = args.seed;
  options.mc.cap = args.cap;
  options.mc.workers = args.threads;
  options.rel_tol = args.rel_tol;
  ControlLimitTable table = generate_control_limit_table(
      family, score, args.zetas, args.arl0s, options,
      args.two_sided ? Sidedness::TwoSided : Sidedness::Upper);
  std::ostringstream text;
  table.write_csv(text);
  if (args.out.empty() || args.out == "-") {
    std::cout << text.str();
  } else {
    write_text_file(args.out, text.str());
  }
  for (const auto& cell : table.cells) {
    if (cell.flagged) {
      std::cerr << "ssrqd: warning: at least one cell exceeded the "
                   "truncation threshold; estimates are biased low\n";
      return 4;
    }
  }
  return 0;
}

// --- monitor -----------------------------------------------------------------

struct MonitorArgs {
  std::string input;
  std::string family = "ssr-sr";
  std::string score = "wilcoxon";
  double zeta = 0.25;
  std::optional<double> h;
  std::optional<double> arl0;
  std::string table_path;
  double sigma = 1.0;
  bool two_sided = false;
  std::string tie_policy = "strict";
  std::string path_out;
  std::string report_path;
};

std::string direction_token(Direction d) {
  return d == Direction::Up ? "up" : "down";
}

int cmd_monitor(const MonitorArgs& args) {
  DetectorConfig config;
  config.family = family_from_token(args.family);
  config.score = score_from_token(args.score);
  config.zeta = args.zeta;
  config.sigma = args.sigma;
  config.sidedness = args.two_sided ? Sidedness::TwoSided : Sidedness::Upper;
  if (args.tie_policy == "strict") {
    config.tie_policy = TiePolicy::Strict;
  } else if (args.tie_policy == "jitter") {
    config.tie_policy = TiePolicy::Jitter;
  } else {
    throw UsageError("unknown tie policy '" + args.tie_policy +
                     "' (strict, jitter)");
  }

  if (args.h && (args.arl0 || !args.table_path.empty())) {
    throw UsageError("give either --h or --arl0 with --table, not both");
  }
  if (args.h) {
    config.h = *args.h;
  } else if (args.arl0 && !args.table_path.empty()) {
    std::ifstream in(args.table_path, std::ios::binary);
    if (!in) throw DataError("cannot open table '" + args.table_path + "'");
    ControlLimitTable table;
    try {
      table = ControlLimitTable::read_csv(in);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string(e.what()) + " in '" + args.table_path + "'");
    }
    if (!table.family_token.empty() && table.family_token != args.family) {
      throw UsageError("table was calibrated for family '" +
                       table.family_token + "', monitoring uses '" +
                       args.family + "'");
    }
    if (!table.score_token.empty() && is_rank_based(config.family) &&
        table.score_token != config.score.name()) {
      throw UsageError("table was calibrated for score '" + table.score_token +
                       "', monitoring uses '" + config.score.name() + "'");
    }
    try {
      config.h = table.interpolate_h(args.zeta, *args.arl0);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else {
    throw UsageError("a control limit is required: --h or --arl0 with --table");
  }
  config.validate();

  const csv::SeriesData data = load_series(args.input);
  if (config.tie_policy == TiePolicy::Strict && is_rank_based(config.family) &&
      !data.zero_rows.empty()) {
    std::ostringstream msg;
    msg << "input contains exact zeros at row";
    if (data.zero_rows.size() > 1) msg << 's';
    for (std::size_t i = 0; i < data.zero_rows.size() && i < 20; ++i) {
      msg << ' ' << data.zero_rows[i];
    }
    if (data.zero_rows.size() > 20) msg << " ...";
    msg << "; rerun with --tie-policy jitter or clean the data";
    throw DataError(msg.str());
  }

  std::vector<PathRow> path;
  std::vector<PathRow>* path_ptr = args.path_out.empty() ? nullptr : &path;

  json report;
  report["schema_version"] = 1;
  report["command"] = "monitor";
  report["version"] = kVersion;
  json scheme;
  scheme["family"] = args.family;
  if (is_rank_based(config.family)) {
    scheme["score"] = config.score.name();
    scheme["tie_policy"] = args.tie_policy;
  } else {
    scheme["sigma"] = config.sigma;
  }
  scheme["zeta"] = config.zeta;
  scheme["h"] = config.h;
  scheme["sidedness"] = args.two_sided ? "two-sided" : "upper";
  report["scheme"] = scheme;

  std::int64_t consumed = 0;
  std::optional<std::int64_t> alarm_index;
  std::optional<Direction> alarm_direction;
  std::int64_t magnitude_ties = 0;
  std::int64_t jittered = 0;
  if (config.sidedness == Sidedness::TwoSided) {
    const TwoSidedOutcome out = two_sided_run(config, data.values, 0, path_ptr);
    consumed = out.n;
    if (out.status == RunStatus::Alarmed) {
      alarm_index = out.n;
      alarm_direction = out.direction;
    }
  } else {
    const RunOutcome out = run(config, data.values, 0, path_ptr);
    consumed = out.n;
    if (out.status == RunStatus::Alarmed) {
      alarm_index = out.n;
      alarm_direction = Direction::Up;
    }
  }
  // Tie diagnostics require rerunning the rank state over the consumed
  // prefix; cheap relative to the run itself.
  if (is_rank_based(config.family)) {
    SequentialRankState ranks(config.tie_policy);
    for (std::int64_t i = 0; i < consumed; ++i) {
      ranks.update(data.values[static_cast<std::size_t>(i)]);
    }
    magnitude_ties = ranks.tie_count();
    jittered = ranks.jitter_count();
  }

  report["n_observations"] = consumed;
  if (alarm_index) {
    json alarm;
    alarm["index"] = *alarm_index;
    alarm["direction"] = direction_token(*alarm_direction);
    report["alarm"] = alarm;
    const std::span<const double> stopped(data.values.data(),
                                          static_cast<std::size_t>(consumed));
    json tau_hat;
    tau_hat["raw"] = estimate_tau(stopped, CpVariant::Raw).tau_hat;
    tau_hat["rank"] = estimate_tau(stopped, CpVariant::RankTransformed).tau_hat;
    report["tau_hat"] = tau_hat;
  } else {
    report["alarm"] = nullptr;
  }
  json warnings;
  warnings["zero_rows"] = data.zero_rows;
  warnings["magnitude_ties"] = magnitude_ties;
  warnings["jittered"] = jittered;
  report["warnings"] = warnings;

  if (!args.path_out.empty()) {
    std::ostringstream text;
    text << "index,x,increment,statistic,alarm\n";
    for (const PathRow& row : path) {
      text << csv::format(row.index) << ',' << csv::format(row.input) << ','
           << csv::format(row.increment) << ',' << csv::format(row.statistic)
           << ',' << (row.alarm ? '1' : '0') << "\n";
    }
    write_text_file(args.path_out, text.str());
  }
  emit_report(report, args.report_path);
  return 0;
}

// --- experiment --------------------------------------------------------------

struct ExperimentArgs {
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 1;
  std::int64_t trials = 20000;
  int threads = 0;
  bool full_scale = false;
};

int cmd_experiment(const ExperimentArgs& args) {
  ExperimentOptions options;
  options.out_dir = args.out_dir.empty()
                        ? std::filesystem::path("results") / args.preset
                        : std::filesystem::path(args.out_dir);
  options.seed = args.seed;
  options.trials = args.trials;
  options.workers = args.threads;
  options.full_scale = args.full_scale;
  ExperimentResult result;
  try {
    result = run_experiment(args.preset, options);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (const auto& file : result.files) {
    std::cout << file.string() << "\n";
  }
  return 0;
}

// --- estimate-cp -------------------------------------------------------------

struct EstimateCpArgs {
  std::string input;
  std::string variant = "both";
  std::string path_out;
  std::string report_path;
};

int cmd_estimate_cp(const EstimateCpArgs& args) {
  const csv::SeriesData data = load_series(args.input);
  if (data.values.size() < 3) {
    throw DataError("need at least 3 observations to estimate a change point");
  }
  const bool want_raw = args.variant == "raw" || args.variant == "both";
  const bool want_rank = args.variant == "rank" || args.variant == "both";
  if (!want_raw && !want_rank) {
    throw UsageError("unknown variant '" + args.variant +
                     "' (raw, rank, both)");
  }
  json report;
  report["schema_version"] = 1;
  report["command"] = "estimate-cp";
  report["version"] = kVersion;
  report["n"] = data.values.size();
  json estimates;
  std::optional<ChangePointEstimate> rank_estimate;
  if (want_raw) {
    const ChangePointEstimate est = estimate_tau(data.values, CpVariant::Raw);
    estimates["raw"] = {{"tau_hat", est.tau_hat},
                        {"max_statistic", est.max_statistic}};
  }
  if (want_rank) {
    rank_estimate = estimate_tau(data.values, CpVariant::RankTransformed);
    estimates["rank"] = {{"tau_hat", rank_estimate->tau_hat},
                         {"max_statistic", rank_estimate->max_statistic}};
  }
  report["estimates"] = estimates;
  if (!args.path_out.empty()) {
    // Rank path when available, otherwise raw.
    const ChangePointEstimate est =
        rank_estimate ? *rank_estimate
                      : estimate_tau(data.values, CpVariant::Raw);
    std::ostringstream text;
    write_statistic_path_csv(text, est);
    write_text_file(args.path_out, text.str());
  }
  emit_report(report, args.report_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-free sequential change detection with signed "
               "sequential ranks"};
  // Long-only help: the short -h would collide with monitor's --h limit flag.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CalibrateArgs cal;
  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "Calibrate control limits over a (zeta, ARL0) grid");
  calibrate->add_option("--family", cal.family,
                        "Scheme family: ssr-sr, ssr-cusum, normal-sr, "
                        "normal-cusum");
  calibrate->add_option("--score", cal.score, "Rank score: wilcoxon, vdw");
  calibrate->add_option("--zeta", cal.zetas, "Reference values")
      ->required()
      ->delimiter(',');
  calibrate->add_option("--arl0", cal.arl0s, "Target in-control ARLs")
      ->required()
      ->delimiter(',');
  calibrate->add_option("--trials", cal.trials, "Monte Carlo trials per evaluation");
  calibrate->add_option("--seed", cal.seed, "Master seed")->required();
  calibrate->add_option("--rel-tol", cal.rel_tol, "Relative ICARL tolerance");
  calibrate->add_option("--cap", cal.cap, "Run-length truncation cap");
  calibrate->add_option("--threads", cal.threads, "Worker threads");
  calibrate->add_flag("--two-sided", cal.two_sided, "Calibrate the two-sided scheme");
  calibrate->add_option("--out", cal.out, "Output CSV path ('-' for stdout)");

  MonitorArgs mon;
  CLI::App* monitor =
      app.add_subcommand("monitor", "Run a detector over a CSV series");
  monitor->add_option("--input", mon.input, "Series CSV (header 'x' or 'v1,v2')")
      ->required();
  monitor->add_option("--family", mon.family, "Scheme family");
  monitor->add_option("--score", mon.score, "Rank score");
  monitor->add_option("--zeta", mon.zeta, "Reference value")->required();
  monitor->add_option("--h", mon.h, "Control limit");
  monitor->add_option("--arl0", mon.arl0, "Target ARL0 (with --table)");
  monitor->add_option("--table", mon.table_path, "Control-limit table CSV");
  monitor->add_option("--sigma", mon.sigma, "Presumed scale (normal families)");
  monitor->add_flag("--two-sided", mon.two_sided, "Monitor both directions");
  monitor->add_option("--tie-policy", mon.tie_policy, "strict or jitter");
  monitor->add_option("--path-out", mon.path_out, "Write the statistic path CSV");
  monitor->add_option("--report", mon.report_path,
                      "Report JSON path (default stdout)");

  ExperimentArgs exp;
  CLI::App* experiment =
      app.add_subcommand("experiment", "Run a canned reproduction study");
  experiment->add_option("preset", exp.preset, "Preset name")->required();
  experiment->add_option("--out-dir", exp.out_dir,
                         "Output directory (default results/<preset>)");
  experiment->add_option("--seed", exp.seed, "Master seed")->required();
  experiment->add_option("--trials", exp.trials, "Monte Carlo trials");
  experiment->add_option("--threads", exp.threads, "Worker threads");
  experiment->add_flag("--full-scale", exp.full_scale,
                       "Publication scale (100k trials)");

  EstimateCpArgs ecp;
  CLI::App* estimate_cp = app.add_subcommand(
      "estimate-cp", "Retrospective change-point estimate for a series");
  estimate_cp->add_option("--input", ecp.input, "Series CSV")->required();
  estimate_cp->add_option("--variant", ecp.variant, "raw, rank, or both");
  estimate_cp->add_option("--path-out", ecp.path_out, "Write |T_k| scan CSV");
  estimate_cp->add_option("--report", ecp.report_path,
                          "Report JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help / --version: let CLI11 print the message and exit 0.
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "ssrqd: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*calibrate) return cmd_calibrate(cal);
    if (*monitor) return cmd_monitor(mon);
    if (*experiment) return cmd_experiment(exp);
    if (*estimate_cp) return cmd_estimate_cp(ecp);
  } catch (const UsageError& e) {
    std::cerr << "ssrqd: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "ssrqd: " << e.what() << "\n";
    return 3;
  } catch (const CalibrationError& e) {
    std::cerr << "ssrqd: calibration failed: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "ssrqd: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "ssrqd: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "ssrqd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
