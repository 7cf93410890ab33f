#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ssrqd/ranks.hpp"
#include "ssrqd/score.hpp"

namespace ssrqd {

// Four one-sided schemes sharing one update skeleton.  The Normal variants
// consume standardized observations x/sigma directly; the Ssr variants
// consume the signed-sequential-rank statistic, which makes their run-length
// behavior under the no-change hypothesis identical for every continuous
// symmetric data law.  Cusum variants use the max(0, .) recursion, the
// ShiryaevRoberts (Sr) variants the running-sum likelihood recursion.
enum class SchemeFamily { NormalCusum, NormalSr, SsrCusum, SsrSr };

enum class Sidedness { Upper, TwoSided };

inline bool is_rank_based(SchemeFamily family) {
  return family == SchemeFamily::SsrCusum || family == SchemeFamily::SsrSr;
}

inline bool is_shiryaev_roberts(SchemeFamily family) {
  return family == SchemeFamily::NormalSr || family == SchemeFamily::SsrSr;
}

struct DetectorConfig {
  SchemeFamily family = SchemeFamily::SsrSr;
  ScoreFunction score = ScoreFunction::wilcoxon();  // Ssr families only
  double zeta = 0.25;   // design drift (reference value)
  double h = 1.0;       // control limit; Sr alarms when log E >= h
  double sigma = 1.0;   // Normal families: presumed in-control scale
  Sidedness sidedness = Sidedness::Upper;
  TiePolicy tie_policy = TiePolicy::Strict;

  // Throws std::invalid_argument on inconsistent settings (e.g. zeta == 0
  // with a Shiryaev-Roberts family, where the recursion degenerates).
  void validate() const;
};

// One-sided (upper) detector.  step(x) runs the full pipeline including the
// rank transform; step_increment(z) skips it and feeds z directly, which is
// how the two-sided wrapper shares one rank state between its halves.
class Detector {
 public:
  explicit Detector(const DetectorConfig& config)
      : config_(config), ranks_(config.tie_policy) {
    config_.validate();
    exp_h_ = config_.h < 690.0 ? std::exp(config_.h)
                               : std::numeric_limits<double>::infinity();
    reset();
  }

  bool step(double x) {
    double z;
    if (is_rank_based(config_.family)) {
      const RankUpdate u = ranks_.update(x);
      z = xi_value(config_.score, u, ranks_.count());
    } else {
      z = x / config_.sigma;
    }
    return step_increment(z);
  }

  bool step_increment(double z) {
    ++step_count_;
    last_increment_ = z;
    bool over;
    if (is_shiryaev_roberts(config_.family)) {
      const double w = 2.0 * config_.zeta * (z - config_.zeta);
      if (log_mode_) {
        // D <- softplus(D) + w, stable for any D.
        stat_d_ =
            std::max(stat_d_, 0.0) + std::log1p(std::exp(-std::fabs(stat_d_))) + w;
        over = stat_d_ >= config_.h;
      } else {
        stat_e_ = (1.0 + stat_e_) * std::exp(w);
        if (stat_e_ > kLogSwitch) {
          log_mode_ = true;
          stat_d_ = std::log(stat_e_);
        }
        over = stat_e_ >= exp_h_;
      }
    } else {
      stat_c_ = std::max(0.0, stat_c_ + z - config_.zeta);
      over = stat_c_ >= config_.h;
    }
    if (over && alarm_at_ == 0) alarm_at_ = step_count_;
    return alarm_at_ != 0;
  }

  bool alarmed() const { return alarm_at_ != 0; }
  std::int64_t alarmed_at() const { return alarm_at_; }
  std::int64_t step_count() const { return step_count_; }
  double last_increment() const { return last_increment_; }

  // Current decision statistic: the Cusum score C, or log E for the
  // Shiryaev-Roberts variants (-inf before the first step).
  double statistic() const {
    if (is_shiryaev_roberts(config_.family)) {
      return log_mode_ ? stat_d_ : std::log(stat_e_);
    }
    return stat_c_;
  }

  const SequentialRankState& rank_state() const { return ranks_; }
  const DetectorConfig& config() const { return config_; }

  // Restores the just-constructed state: statistic, alarm and rank memory.
  void reset() {
    stat_c_ = 0.0;
    stat_e_ = 0.0;
    stat_d_ = -std::numeric_limits<double>::infinity();
    log_mode_ = false;
    step_count_ = 0;
    alarm_at_ = 0;
    last_increment_ = 0.0;
    ranks_.reset();
  }

  // Restart of the decision statistic only; rank memory keeps accumulating.
  void reset_statistic() {
    stat_c_ = 0.0;
    stat_e_ = 0.0;
    stat_d_ = -std::numeric_limits<double>::infinity();
    log_mode_ = false;
    alarm_at_ = 0;
  }

 private:
  // Beyond this the running sum E moves to log space; far above any alarm
  // threshold in use, so the switch never perturbs a stopping decision.
  static constexpr double kLogSwitch = 1e250;

  DetectorConfig config_;
  SequentialRankState ranks_;
  double exp_h_;
  double stat_c_;
  double stat_e_;
  double stat_d_;
  bool log_mode_;
  std::int64_t step_count_;
  std::int64_t alarm_at_;
  double last_increment_;
};

enum class Direction { Up, Down };

// Two one-sided detectors driven by one shared increment stream: the upper
// half sees +z, the lower half -z.  For rank-based families both halves
// share a single rank state (negating the data negates the signed rank, so
// one magnitude ranking serves both).
class TwoSidedDetector {
 public:
  explicit TwoSidedDetector(const DetectorConfig& config)
      : upper_(config), lower_(config), ranks_(config.tie_policy) {}

  bool step(double x) {
    double z;
    if (is_rank_based(upper_.config().family)) {
      const RankUpdate u = ranks_.update(x);
      z = xi_value(upper_.config().score, u, ranks_.count());
    } else {
      z = x / upper_.config().sigma;
    }
    const bool up = upper_.step_increment(z);
    const bool down = lower_.step_increment(-z);
    return up || down;
  }

  bool alarmed() const { return upper_.alarmed() || lower_.alarmed(); }

  // First crossing wins; a simultaneous crossing reports Up.
  std::int64_t alarmed_at() const;
  Direction direction() const;

  std::int64_t step_count() const { return upper_.step_count(); }
  const Detector& upper() const { return upper_; }
  const Detector& lower() const { return lower_; }
  const SequentialRankState& rank_state() const { return ranks_; }

  void reset() {
    upper_.reset();
    lower_.reset();
    ranks_.reset();
  }

  void reset_statistic() {
    upper_.reset_statistic();
    lower_.reset_statistic();
  }

 private:
  Detector upper_;
  Detector lower_;
  SequentialRankState ranks_;
};

enum class RunStatus { Alarmed, Truncated, NoAlarm };

struct RunOutcome {
  std::int64_t n = 0;  // alarm index, or observations consumed
  RunStatus status = RunStatus::NoAlarm;
};

struct TwoSidedOutcome {
  std::int64_t n = 0;
  RunStatus status = RunStatus::NoAlarm;
  Direction direction = Direction::Up;  // meaningful when status == Alarmed
};

struct PathRow {
  std::int64_t index;
  double input;      // raw observation
  double increment;  // xi or x/sigma, as consumed by the recursion
  double statistic;  // post-update decision statistic
  bool alarm;
};

// Feed a finite stream until alarm, stream end, or cap (cap <= 0: no cap).
RunOutcome run(const DetectorConfig& config, std::span<const double> stream,
               std::int64_t cap = 0, std::vector<PathRow>* path = nullptr);

TwoSidedOutcome two_sided_run(const DetectorConfig& config,
                              std::span<const double> stream,
                              std::int64_t cap = 0,
                              std::vector<PathRow>* path = nullptr);

// Generator-driven variants for Monte Carlo loops: gen() yields successive
// observations; the run always ends in Alarmed or Truncated.
template <class Gen>
RunOutcome run_generated(const DetectorConfig& config, Gen&& gen,
                         std::int64_t cap) {
  Detector detector(config);
  for (std::int64_t i = 1; i <= cap; ++i) {
    if (detector.step(gen())) return {i, RunStatus::Alarmed};
  }
  return {cap, RunStatus::Truncated};
}

template <class Gen>
TwoSidedOutcome two_sided_run_generated(const DetectorConfig& config,
                                        Gen&& gen, std::int64_t cap) {
  TwoSidedDetector detector(config);
  for (std::int64_t i = 1; i <= cap; ++i) {
    if (detector.step(gen())) {
      return {i, RunStatus::Alarmed, detector.direction()};
    }
  }
  return {cap, RunStatus::Truncated, Direction::Up};
}

// log E_n computed non-recursively from the increment sequence, as the
// log-sum over candidate change points of the accumulated drift-corrected
// score.  Agrees with the recursion to rounding error; used as the
// cross-check oracle in tests.
double sr_log_closed_form(std::span<const double> increments, double zeta);

}  // namespace ssrqd
