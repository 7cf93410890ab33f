#include "ssrqd/runlength.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssrqd/parallel.hpp"
#include "ssrqd/rng.hpp"

namespace ssrqd {

namespace {

constexpr double kFlagTruncationFraction = 0.01;

struct DelayRecord {
  double delay = 0.0;
  bool discarded = false;
  bool truncated = false;
};

RunLengthSummary summarize_delays(const std::vector<DelayRecord>& records,
                                  std::int64_t cap, std::uint64_t seed,
                                  const char* context) {
  RunLengthSummary s;
  s.trials = static_cast<std::int64_t>(records.size());
  s.cap = cap;
  s.seed = seed;
  std::int64_t kept = 0;
  double mean = 0.0;
  for (const DelayRecord& r : records) {
    if (r.discarded) {
      ++s.discarded_count;
      continue;
    }
    if (r.truncated) ++s.truncated_count;
    ++kept;
    mean += r.delay;
  }
  if (kept < 100) {
    throw std::runtime_error(
        std::string(context) +
        ": fewer than 100 surviving trials; raise the cap, the trial count, "
        "or the in-control ARL");
  }
  mean /= static_cast<double>(kept);
  double ss = 0.0;
  for (const DelayRecord& r : records) {
    if (r.discarded) continue;
    const double d = r.delay - mean;
    ss += d * d;
  }
  s.mean = mean;
  s.std_error =
      kept > 1 ? std::sqrt(ss / (static_cast<double>(kept) - 1.0) /
                           static_cast<double>(kept))
               : 0.0;
  s.flagged =
      static_cast<double>(s.truncated_count) / kept > kFlagTruncationFraction;
  return s;
}

std::int64_t resolve_cap(const McOptions& options, std::int64_t tau) {
  const std::int64_t cap =
      options.cap > 0 ? options.cap : tau + 25000;
  if (cap <= tau) {
    throw std::invalid_argument(
        "delay study: cap must exceed the change point tau");
  }
  return cap;
}

}  // namespace

void ChangeScenario::validate() const {
  if (in_control.shift() != 0.0) {
    throw std::invalid_argument(
        "ChangeScenario: the in-control law must be centered; the shift "
        "enters through delta");
  }
  if (!std::isfinite(delta)) {
    throw std::invalid_argument("ChangeScenario: delta must be finite");
  }
  if (tau < 0) {
    throw std::invalid_argument("ChangeScenario: tau must be >= 0");
  }
}

RunLengthSummary cadt(const DetectorConfig& config,
                      const ChangeScenario& scenario,
                      const McOptions& options) {
  config.validate();
  scenario.validate();
  if (options.trials < 100) {
    throw std::invalid_argument("cadt: need at least 100 trials");
  }
  const std::int64_t cap = resolve_cap(options, scenario.tau);
  std::vector<DelayRecord> records(options.trials);
  const int workers = resolve_worker_count(options.workers);
  parallel_for_trials(options.trials, workers, [&](std::int64_t trial) {
    Rng rng = Rng::for_trial(options.seed, static_cast<std::uint64_t>(trial));
    std::int64_t i = 0;
    auto gen = [&] {
      ++i;
      const double x = scenario.in_control.sample(rng);
      return i > scenario.tau ? x + scenario.delta : x;
    };
    DelayRecord rec;
    if (config.sidedness == Sidedness::TwoSided) {
      const TwoSidedOutcome out = two_sided_run_generated(config, gen, cap);
      rec.truncated = out.status == RunStatus::Truncated;
      rec.discarded = !rec.truncated && out.n <= scenario.tau;
      rec.delay = static_cast<double>(out.n - scenario.tau);
    } else {
      const RunOutcome out = run_generated(config, gen, cap);
      rec.truncated = out.status == RunStatus::Truncated;
      rec.discarded = !rec.truncated && out.n <= scenario.tau;
      rec.delay = static_cast<double>(out.n - scenario.tau);
    }
    records[trial] = rec;
  });
  return summarize_delays(records, cap, options.seed, "cadt");
}

RunLengthSummary normal_approx_cadt(SchemeFamily family, double zeta, double h,
                                    double delta, const Theta0Value& theta0,
                                    std::int64_t tau,
                                    const McOptions& options) {
  // The approximating scheme is the normal-family counterpart driven by
  // N(theta0 * delta, 1) data after the change.
  SchemeFamily normal_family;
  switch (family) {
    case SchemeFamily::SsrCusum:
    case SchemeFamily::NormalCusum:
      normal_family = SchemeFamily::NormalCusum;
      break;
    case SchemeFamily::SsrSr:
    case SchemeFamily::NormalSr:
      normal_family = SchemeFamily::NormalSr;
      break;
    default:
      throw std::invalid_argument("normal_approx_cadt: unknown family");
  }
  DetectorConfig config;
  config.family = normal_family;
  config.zeta = zeta;
  config.h = h;
  config.sigma = 1.0;
  ChangeScenario scenario;
  scenario.in_control =
      DistributionSpec(Family::Normal, ScaleConvention::UnitVariance);
  scenario.delta = theta0.value * delta;
  scenario.tau = tau;
  return cadt(config, scenario, options);
}

RunLengthSummary sadt(const DetectorConfig& config,
                      const ChangeScenario& scenario,
                      const SadtOptions& options) {
  config.validate();
  scenario.validate();
  if (config.sidedness != Sidedness::Upper) {
    throw std::invalid_argument(
        "sadt: stationary delay is defined for the one-sided scheme");
  }
  if (options.mc.trials < 100) {
    throw std::invalid_argument("sadt: need at least 100 trials");
  }
  const std::int64_t cap = resolve_cap(options.mc, scenario.tau);
  std::vector<DelayRecord> records(options.mc.trials);
  const int workers = resolve_worker_count(options.mc.workers);
  parallel_for_trials(options.mc.trials, workers, [&](std::int64_t trial) {
    Rng rng =
        Rng::for_trial(options.mc.seed, static_cast<std::uint64_t>(trial));
    Detector detector(config);
    DelayRecord rec;
    for (std::int64_t i = 1; i <= cap; ++i) {
      double x = scenario.in_control.sample(rng);
      if (i > scenario.tau) x += scenario.delta;
      if (!detector.step(x)) continue;
      if (i <= scenario.tau) {
        // False alarm: restart and keep monitoring.
        if (options.reset_ranks) {
          detector.reset();
        } else {
          detector.reset_statistic();
        }
        continue;
      }
      rec.delay = static_cast<double>(i - scenario.tau);
      records[trial] = rec;
      return;
    }
    rec.truncated = true;
    rec.delay = static_cast<double>(cap - scenario.tau);
    records[trial] = rec;
  });
  return summarize_delays(records, cap, options.mc.seed, "sadt");
}

DelayCurve delay_curve(const DetectorConfig& config,
                       const ChangeScenario& base, CurveAxis axis,
                       std::span<const double> grid, const McOptions& options,
                       bool stationary) {
  if (grid.empty()) {
    throw std::invalid_argument("delay_curve: empty grid");
  }
  DelayCurve curve;
  curve.axis = axis;
  for (double g : grid) {
    ChangeScenario scenario = base;
    if (axis == CurveAxis::Tau) {
      const double rounded = std::round(g);
      if (std::fabs(g - rounded) > 1e-9 || rounded < 0.0) {
        throw std::invalid_argument(
            "delay_curve: tau grid values must be nonnegative integers");
      }
      scenario.tau = static_cast<std::int64_t>(rounded);
    } else {
      scenario.delta = g;
    }
    RunLengthSummary s;
    if (stationary) {
      SadtOptions sopt;
      sopt.mc = options;
      s = sadt(config, scenario, sopt);
    } else {
      s = cadt(config, scenario, options);
    }
    CurvePoint point;
    point.grid_value = g;
    point.estimate = s.mean;
    point.std_error = s.std_error;
    point.trials = s.trials;
    point.discarded_fraction =
        s.trials > 0 ? static_cast<double>(s.discarded_count) / s.trials : 0.0;
    curve.points.push_back(point);
  }
  return curve;
}

XiShiftCheck xi_shift_mean_check(const DistributionSpec& in_control,
                                 double delta, std::int64_t tau,
                                 const ScoreFunction& score,
                                 const McOptions& options) {
  if (in_control.shift() != 0.0) {
    throw std::invalid_argument(
        "xi_shift_mean_check: the in-control law must be centered");
  }
  if (tau < 100) {
    throw std::invalid_argument("xi_shift_mean_check: tau must be >= 100");
  }
  if (!(std::fabs(delta) <= 0.25)) {
    throw std::invalid_argument(
        "xi_shift_mean_check: |delta| <= 0.25 (small-shift regime)");
  }
  if (options.trials < 100) {
    throw std::invalid_argument("xi_shift_mean_check: need at least 100 trials");
  }
  const int i = static_cast<int>(tau + 1);
  const double normalizer = score.normalizer(i);
  std::vector<double> xis(options.trials);
  const int workers = resolve_worker_count(options.workers);
  parallel_for_trials(options.trials, workers, [&](std::int64_t trial) {
    Rng rng = Rng::for_trial(options.seed, static_cast<std::uint64_t>(trial));
    // Rank the single shifted observation against tau in-control draws; the
    // count is exactly what the streaming rank state would produce at step
    // tau + 1, without the tree bookkeeping.  The draws are exchangeable, so
    // the shifted one is drawn first and the history streamed against it.
    const double x = in_control.sample(rng) + delta;
    const double abs_x = std::fabs(x);
    std::int64_t less = 0;
    for (std::int64_t j = 0; j < tau; ++j) {
      if (std::fabs(in_control.sample(rng)) < abs_x) ++less;
    }
    const int r_plus = static_cast<int>(1 + less);
    const double r_signed =
        (x > 0.0 ? 1.0 : -1.0) * static_cast<double>(r_plus) / (i + 1.0);
    xis[trial] = score(r_signed) / normalizer;
  });
  XiShiftCheck check;
  check.trials = options.trials;
  double mean = 0.0;
  for (double v : xis) mean += v;
  mean /= static_cast<double>(options.trials);
  double ss = 0.0;
  for (double v : xis) ss += (v - mean) * (v - mean);
  check.mc_mean = mean;
  check.std_error = std::sqrt(ss / (static_cast<double>(options.trials) - 1.0) /
                              static_cast<double>(options.trials));
  check.predicted = theta0(in_control).value * delta;
  return check;
}

}  // namespace ssrqd
