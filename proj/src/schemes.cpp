#include "ssrqd/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssrqd {

void DetectorConfig::validate() const {
  if (!std::isfinite(zeta) || zeta < 0.0 || zeta > 10.0) {
    throw std::invalid_argument("DetectorConfig: zeta must lie in [0, 10]");
  }
  if (zeta == 0.0 && is_shiryaev_roberts(family)) {
    throw std::invalid_argument(
        "DetectorConfig: zeta = 0 degenerates the Shiryaev-Roberts recursion; "
        "only the Cusum families accept it");
  }
  if (!std::isfinite(h) || h <= 0.0) {
    throw std::invalid_argument("DetectorConfig: control limit h must be > 0");
  }
  if (!is_rank_based(family) && (!std::isfinite(sigma) || sigma <= 0.0)) {
    throw std::invalid_argument("DetectorConfig: sigma must be > 0");
  }
}

std::int64_t TwoSidedDetector::alarmed_at() const {
  const std::int64_t up = upper_.alarmed_at();
  const std::int64_t down = lower_.alarmed_at();
  if (up == 0) return down;
  if (down == 0) return up;
  return std::min(up, down);
}

Direction TwoSidedDetector::direction() const {
  const std::int64_t up = upper_.alarmed_at();
  const std::int64_t down = lower_.alarmed_at();
  if (up != 0 && (down == 0 || up <= down)) return Direction::Up;
  return Direction::Down;
}

namespace {

double detector_increment(const Detector& d) { return d.last_increment(); }
double detector_increment(const TwoSidedDetector& d) {
  return d.upper().last_increment();
}
double detector_statistic(const Detector& d) { return d.statistic(); }
// Two-sided path reports the larger of the two one-sided statistics.
double detector_statistic(const TwoSidedDetector& d) {
  return std::max(d.upper().statistic(), d.lower().statistic());
}

template <class DetectorT>
void append_path_row(const DetectorT& detector, double x,
                     std::vector<PathRow>* path) {
  if (!path) return;
  path->push_back(PathRow{detector.step_count(), x,
                          detector_increment(detector),
                          detector_statistic(detector), detector.alarmed()});
}

}  // namespace

RunOutcome run(const DetectorConfig& config, std::span<const double> stream,
               std::int64_t cap, std::vector<PathRow>* path) {
  Detector detector(config);
  const std::int64_t limit =
      cap > 0 ? std::min<std::int64_t>(cap, stream.size())
              : static_cast<std::int64_t>(stream.size());
  for (std::int64_t i = 0; i < limit; ++i) {
    const bool alarmed = detector.step(stream[i]);
    append_path_row(detector, stream[i], path);
    if (alarmed) return {detector.alarmed_at(), RunStatus::Alarmed};
  }
  if (cap > 0 && limit == cap) return {limit, RunStatus::Truncated};
  return {limit, RunStatus::NoAlarm};
}

TwoSidedOutcome two_sided_run(const DetectorConfig& config,
                              std::span<const double> stream, std::int64_t cap,
                              std::vector<PathRow>* path) {
  TwoSidedDetector detector(config);
  const std::int64_t limit =
      cap > 0 ? std::min<std::int64_t>(cap, stream.size())
              : static_cast<std::int64_t>(stream.size());
  for (std::int64_t i = 0; i < limit; ++i) {
    const bool alarmed = detector.step(stream[i]);
    append_path_row(detector, stream[i], path);
    if (alarmed) {
      return {detector.alarmed_at(), RunStatus::Alarmed, detector.direction()};
    }
  }
  if (cap > 0 && limit == cap) {
    return {limit, RunStatus::Truncated, Direction::Up};
  }
  return {limit, RunStatus::NoAlarm, Direction::Up};
}

double sr_log_closed_form(std::span<const double> increments, double zeta) {
  if (increments.empty()) {
    throw std::invalid_argument("sr_log_closed_form: empty increment sequence");
  }
  const std::int64_t n = static_cast<std::int64_t>(increments.size());
  // log E_n = logsumexp over k = 0..n-1 of 2 zeta (S_n - S_k) - 2 zeta^2 (n-k),
  // S_k the increment prefix sum.  Each term is the log-likelihood weight of
  // a change beginning right after observation k.
  std::vector<double> terms(n);
  double prefix = 0.0;
  std::vector<double> prefixes(n + 1);
  prefixes[0] = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    prefix += increments[i];
    prefixes[i + 1] = prefix;
  }
  const double s_n = prefixes[n];
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k < n; ++k) {
    terms[k] =
        2.0 * zeta * (s_n - prefixes[k]) - 2.0 * zeta * zeta * (n - k);
    max_term = std::max(max_term, terms[k]);
  }
  double acc = 0.0;
  for (std::int64_t k = 0; k < n; ++k) acc += std::exp(terms[k] - max_term);
  return max_term + std::log(acc);
}

}  // namespace ssrqd
