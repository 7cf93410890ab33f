#include "ssrqd/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "ssrqd/csvio.hpp"
#include "ssrqd/parallel.hpp"
#include "ssrqd/rng.hpp"

namespace ssrqd {

namespace {

constexpr double kFlagTruncationFraction = 0.01;

RunLengthSummary summarize(const std::vector<std::int64_t>& lengths,
                           const std::vector<bool>& truncated,
                           std::int64_t cap, std::uint64_t seed) {
  RunLengthSummary s;
  s.trials = static_cast<std::int64_t>(lengths.size());
  s.cap = cap;
  s.seed = seed;
  double mean = 0.0;
  for (std::int64_t n : lengths) mean += static_cast<double>(n);
  mean /= static_cast<double>(s.trials);
  double ss = 0.0;
  for (std::int64_t n : lengths) {
    const double d = static_cast<double>(n) - mean;
    ss += d * d;
  }
  s.mean = mean;
  s.std_error = s.trials > 1
                    ? std::sqrt(ss / (static_cast<double>(s.trials) - 1.0) /
                                static_cast<double>(s.trials))
                    : 0.0;
  for (bool t : truncated) s.truncated_count += t ? 1 : 0;
  s.flagged = s.truncated_fraction() > kFlagTruncationFraction;
  return s;
}

}  // namespace

RunLengthSummary estimate_icarl(const DetectorConfig& config,
                                const DistributionSpec& in_control,
                                const McOptions& options) {
  config.validate();
  if (options.trials < 100) {
    throw std::invalid_argument("estimate_icarl: need at least 100 trials");
  }
  const std::int64_t cap = options.cap > 0 ? options.cap : 100000;
  std::vector<std::int64_t> lengths(options.trials);
  std::vector<bool> truncated(options.trials);
  const int workers = resolve_worker_count(options.workers);
  parallel_for_trials(options.trials, workers, [&](std::int64_t trial) {
    Rng rng = Rng::for_trial(options.seed, static_cast<std::uint64_t>(trial));
    auto gen = [&] { return in_control.sample(rng); };
    if (config.sidedness == Sidedness::TwoSided) {
      const TwoSidedOutcome out = two_sided_run_generated(config, gen, cap);
      lengths[trial] = out.n;
      truncated[trial] = out.status == RunStatus::Truncated;
    } else {
      const RunOutcome out = run_generated(config, gen, cap);
      lengths[trial] = out.n;
      truncated[trial] = out.status == RunStatus::Truncated;
    }
  });
  return summarize(lengths, truncated, cap, options.seed);
}

namespace {

CalibrationResult search_control_limit(DetectorConfig config,
                                       const DistributionSpec& in_control,
                                       double target,
                                       const CalibrationOptions& options,
                                       double h_start) {
  if (!(target > 1.0)) {
    throw std::invalid_argument("calibration: target ARL0 must exceed 1");
  }
  McOptions mc = options.mc;
  if (mc.cap <= 0) {
    mc.cap = std::max<std::int64_t>(static_cast<std::int64_t>(50 * target), 5000);
  }
  const double tol = options.rel_tol * target;
  int evals = 0;
  auto evaluate = [&](double h) {
    config.h = h;
    ++evals;
    return estimate_icarl(config, in_control, mc);
  };

  double best_h = 0.0;
  RunLengthSummary best_summary;
  bool have_best = false;
  auto consider = [&](double h, const RunLengthSummary& s) {
    if (std::fabs(s.mean - target) > tol) return;
    if (!have_best || std::fabs(s.mean - target) <
                          std::fabs(best_summary.mean - target)) {
      best_h = h;
      best_summary = s;
      have_best = true;
    }
  };

  // Upward march from a cheap starting point: evaluations below the target
  // cost little because the coupled runs are short.
  double lo = 0.0;
  bool have_lo = false;
  double hi = std::clamp(h_start, options.h_min, options.h_max);
  RunLengthSummary s = evaluate(hi);
  consider(hi, s);
  while (s.mean < target) {
    lo = hi;
    have_lo = true;
    if (hi >= options.h_max) {
      throw CalibrationError(
          "calibration: ICARL at h_max still below target (h_max too small "
          "or cap too aggressive)");
    }
    hi = std::min(hi * 1.6, options.h_max);
    if (evals >= options.max_evals) {
      throw CalibrationError("calibration: evaluation budget exhausted "
                             "while bracketing the target");
    }
    s = evaluate(hi);
    consider(hi, s);
  }
  if (!have_lo) {
    // First evaluation already at or above target: walk down.
    lo = hi;
    RunLengthSummary s_lo = s;
    while (s_lo.mean >= target) {
      hi = lo;
      lo = std::max(lo / 1.6, options.h_min);
      if (lo <= options.h_min && hi <= options.h_min * 1.0000001) {
        throw CalibrationError(
            "calibration: target ARL0 unattainable above h_min");
      }
      if (evals >= options.max_evals) {
        throw CalibrationError("calibration: evaluation budget exhausted "
                               "while bracketing the target");
      }
      s_lo = evaluate(lo);
      consider(lo, s_lo);
      if (lo <= options.h_min) break;
    }
    if (s_lo.mean >= target) {
      throw CalibrationError(
          "calibration: target ARL0 unattainable above h_min");
    }
  }

  // Bisection until the bracket is tighter than h_resolution and some
  // evaluation satisfied the tolerance.
  while ((hi - lo > options.h_resolution || !have_best) &&
         evals < options.max_evals) {
    const double mid = 0.5 * (lo + hi);
    const RunLengthSummary sm = evaluate(mid);
    consider(mid, sm);
    if (sm.mean < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
  }
  if (!have_best) {
    throw CalibrationError(
        "calibration: no evaluation reached the tolerance; increase trials "
        "or relax rel_tol");
  }
  CalibrationResult result;
  result.zeta = config.zeta;
  result.target_arl0 = target;
  result.h = best_h;
  result.achieved = best_summary;
  result.evals = evals;
  return result;
}

}  // namespace

CalibrationResult find_control_limit(SchemeFamily family,
                                     const ScoreFunction& score, double zeta,
                                     double target_arl0,
                                     const CalibrationOptions& options,
                                     const DistributionSpec& in_control) {
  DetectorConfig config;
  config.family = family;
  config.score = score;
  config.zeta = zeta;
  config.h = 1.0;
  config.sidedness = Sidedness::Upper;
  return search_control_limit(config, in_control, target_arl0, options, 1.0);
}

CalibrationResult two_sided_limit(SchemeFamily family,
                                  const ScoreFunction& score, double zeta,
                                  double target_arl0,
                                  const CalibrationOptions& options) {
  const DistributionSpec normal(Family::Normal, ScaleConvention::UnitVariance);
  CalibrationResult one_sided = find_control_limit(
      family, score, zeta, 2.0 * target_arl0, options, normal);
  DetectorConfig config;
  config.family = family;
  config.score = score;
  config.zeta = zeta;
  config.h = one_sided.h;
  config.sidedness = Sidedness::TwoSided;
  CalibrationResult result = search_control_limit(config, normal, target_arl0,
                                                  options, one_sided.h);
  result.evals += one_sided.evals;
  return result;
}

double reference_value(double delta1, const Theta0Value& theta0) {
  if (!(delta1 > 0.0)) {
    throw std::invalid_argument("reference_value: delta1 must be positive");
  }
  return 0.5 * delta1 * theta0.value;
}

namespace {

MisspecificationResult misspecification_impl(const DistributionSpec& actual,
                                             double sigma_hat, double zeta,
                                             double target_arl0,
                                             const CalibrationOptions& options,
                                             SchemeFamily family) {
  if (is_rank_based(family)) {
    throw std::invalid_argument(
        "misspecification experiments apply to the normal-family schemes; "
        "the rank schemes are immune by construction");
  }
  // Tighten the calibration so its error does not wash out the effect being
  // measured.
  CalibrationOptions calib = options;
  calib.rel_tol = std::min(options.rel_tol, 0.02);
  const DistributionSpec nominal(Family::Normal, ScaleConvention::UnitVariance);
  CalibrationResult calibration = find_control_limit(
      family, ScoreFunction::wilcoxon(), zeta, target_arl0, calib, nominal);

  DetectorConfig config;
  config.family = family;
  config.zeta = zeta;
  config.h = calibration.h;
  config.sigma = sigma_hat;
  McOptions mc = options.mc;
  // Decouple the scenario streams from the calibration streams.
  mc.seed = mc.seed ^ 0x5ca1ab1e00c0ffeeull;
  if (mc.cap <= 0) {
    mc.cap = std::max<std::int64_t>(
        static_cast<std::int64_t>(200 * target_arl0), 5000);
  }
  MisspecificationResult out;
  out.calibration = calibration;
  out.achieved = estimate_icarl(config, actual, mc);
  return out;
}

}  // namespace

MisspecificationResult misspecification_sigma(double sigma_hat, double zeta,
                                              double target_arl0,
                                              const CalibrationOptions& options,
                                              SchemeFamily family) {
  if (!(sigma_hat > 0.0)) {
    throw std::invalid_argument("misspecification_sigma: sigma_hat > 0");
  }
  const DistributionSpec nominal(Family::Normal, ScaleConvention::UnitVariance);
  return misspecification_impl(nominal, sigma_hat, zeta, target_arl0, options,
                               family);
}

MisspecificationResult misspecification_distribution(
    const DistributionSpec& actual, double zeta, double target_arl0,
    const CalibrationOptions& options, SchemeFamily family) {
  if (actual.shift() != 0.0) {
    throw std::invalid_argument(
        "misspecification_distribution: the scenario law must be centered");
  }
  return misspecification_impl(actual, 1.0, zeta, target_arl0, options,
                               family);
}

// --- control-limit tables ---------------------------------------------------

std::string family_token(SchemeFamily family) {
  switch (family) {
    case SchemeFamily::NormalCusum:
      return "normal-cusum";
    case SchemeFamily::NormalSr:
      return "normal-sr";
    case SchemeFamily::SsrCusum:
      return "ssr-cusum";
    case SchemeFamily::SsrSr:
      return "ssr-sr";
  }
  throw std::invalid_argument("family_token: unknown family");
}

SchemeFamily family_from_token(const std::string& token) {
  if (token == "normal-cusum") return SchemeFamily::NormalCusum;
  if (token == "normal-sr") return SchemeFamily::NormalSr;
  if (token == "ssr-cusum") return SchemeFamily::SsrCusum;
  if (token == "ssr-sr") return SchemeFamily::SsrSr;
  throw std::invalid_argument("unknown scheme family '" + token + "'");
}

const ControlLimitTable::Cell& ControlLimitTable::at(
    std::size_t zeta_idx, std::size_t arl0_idx) const {
  return cells.at(zeta_idx * arl0s.size() + arl0_idx);
}

void ControlLimitTable::write_csv(std::ostream& out) const {
  out << "# ssrqd-control-limits family=" << family_token
      << " score=" << score_token << "\n";
  out << "zeta";
  for (double a : arl0s) out << ',' << csv::format(a);
  out << "\n";
  for (std::size_t i = 0; i < zetas.size(); ++i) {
    out << csv::format(zetas[i]);
    for (std::size_t j = 0; j < arl0s.size(); ++j) {
      const Cell& c = at(i, j);
      out << ',' << csv::format(c.h) << '(' << csv::format(c.se) << ')';
      if (c.flagged) out << '!';
    }
    out << "\n";
  }
}

ControlLimitTable ControlLimitTable::read_csv(std::istream& in) {
  ControlLimitTable table;
  std::string line;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      // Optional metadata: "# ssrqd-control-limits family=X score=Y"
      std::istringstream meta(line.substr(1));
      std::string word;
      while (meta >> word) {
        if (word.rfind("family=", 0) == 0) table.family_token = word.substr(7);
        if (word.rfind("score=", 0) == 0) table.score_token = word.substr(6);
      }
      continue;
    }
    const std::vector<std::string> fields = csv::split_line(line);
    if (!header_done) {
      if (fields.empty() || fields[0] != "zeta") {
        throw std::invalid_argument(
            "control-limit table: header must start with 'zeta'");
      }
      for (std::size_t j = 1; j < fields.size(); ++j) {
        table.arl0s.push_back(csv::parse_double(fields[j], "ARL0 header"));
      }
      if (table.arl0s.empty()) {
        throw std::invalid_argument("control-limit table: no ARL0 columns");
      }
      header_done = true;
      continue;
    }
    if (fields.size() != table.arl0s.size() + 1) {
      throw std::invalid_argument(
          "control-limit table: row width does not match header");
    }
    table.zetas.push_back(csv::parse_double(fields[0], "zeta"));
    for (std::size_t j = 1; j < fields.size(); ++j) {
      std::string cell = fields[j];
      Cell parsed;
      if (!cell.empty() && cell.back() == '!') {
        parsed.flagged = true;
        cell.pop_back();
      }
      const std::size_t open = cell.find('(');
      if (open == std::string::npos || cell.back() != ')') {
        throw std::invalid_argument("control-limit table: cell '" + fields[j] +
                                    "' is not of the form h(se)");
      }
      parsed.h = csv::parse_double(cell.substr(0, open), "cell h");
      parsed.se = csv::parse_double(
          cell.substr(open + 1, cell.size() - open - 2), "cell se");
      table.cells.push_back(parsed);
    }
  }
  if (!header_done || table.zetas.empty()) {
    throw std::invalid_argument("control-limit table: no data rows");
  }
  return table;
}

double ControlLimitTable::interpolate_h(double zeta, double arl0) const {
  auto bracket = [](const std::vector<double>& grid, double value,
                    const char* what) {
    if (value < grid.front() || value > grid.back()) {
      throw std::invalid_argument(std::string("interpolate_h: ") + what +
                                  " outside the table range");
    }
    if (grid.size() == 1) return std::pair<std::size_t, std::size_t>{0, 0};
    std::size_t hi = 1;
    while (hi + 1 < grid.size() && grid[hi] < value) ++hi;
    return std::pair<std::size_t, std::size_t>{hi - 1, hi};
  };
  if (zetas.empty() || arl0s.empty()) {
    throw std::invalid_argument("interpolate_h: empty table");
  }
  const auto [zi0, zi1] = bracket(zetas, zeta, "zeta");
  const auto [aj0, aj1] = bracket(arl0s, arl0, "ARL0");
  const double zt = zetas[zi1] == zetas[zi0]
                        ? 0.0
                        : (zeta - zetas[zi0]) / (zetas[zi1] - zetas[zi0]);
  // ARL0 interpolation is linear in log ARL0: h grows roughly like log of
  // the in-control ARL for all four schemes.
  const double la0 = std::log(arl0s[aj0]);
  const double la1 = std::log(arl0s[aj1]);
  const double frac = la1 == la0 ? 0.0 : (std::log(arl0) - la0) / (la1 - la0);
  const double h00 = at(zi0, aj0).h, h01 = at(zi0, aj1).h;
  const double h10 = at(zi1, aj0).h, h11 = at(zi1, aj1).h;
  const double top = h00 * (1.0 - frac) + h01 * frac;
  const double bottom = h10 * (1.0 - frac) + h11 * frac;
  return top * (1.0 - zt) + bottom * zt;
}

ControlLimitTable generate_control_limit_table(
    SchemeFamily family, const ScoreFunction& score,
    std::span<const double> zetas, std::span<const double> arl0s,
    const CalibrationOptions& options, Sidedness sidedness) {
  if (zetas.empty() || arl0s.empty()) {
    throw std::invalid_argument("generate_control_limit_table: empty grid");
  }
  ControlLimitTable table;
  table.family_token = family_token(family);
  table.score_token = score.name();
  table.zetas.assign(zetas.begin(), zetas.end());
  table.arl0s.assign(arl0s.begin(), arl0s.end());
  const DistributionSpec normal(Family::Normal, ScaleConvention::UnitVariance);
  for (double z : zetas) {
    for (double target : arl0s) {
      CalibrationResult r =
          sidedness == Sidedness::TwoSided
              ? two_sided_limit(family, score, z, target, options)
              : find_control_limit(family, score, z, target, options, normal);
      ControlLimitTable::Cell cell;
      cell.h = r.h;
      cell.se = r.achieved.std_error;
      cell.flagged = r.achieved.flagged;
      table.cells.push_back(cell);
    }
  }
  return table;
}

}  // namespace ssrqd
