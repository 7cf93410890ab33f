#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ssrqd {

// Raw scans the observations themselves; RankTransformed first maps the
// series through the signed-sequential-rank statistic (Wilcoxon score),
// which is the right input when the monitoring scheme was rank-based.
enum class CpVariant { Raw, RankTransformed };

struct ChangePointEstimate {
  std::int64_t tau_hat = 0;            // estimated last pre-change index
  double max_statistic = 0.0;          // |T| at tau_hat
  std::vector<double> statistic_path;  // |T_k| for k = 1..N-1
  CpVariant variant = CpVariant::Raw;
};

// Retrospective change-point estimate after an alarm at N: tau_hat is the
// k in 1..N-1 maximizing |T_k| with T_k the standardized suffix mean
// sum_{i>k} y_i / sqrt(N - k); ties resolve to the smallest k.  Requires
// N >= 3 finite observations.
ChangePointEstimate estimate_tau(std::span<const double> series,
                                 CpVariant variant);

// CSV dump of the scan path: header k,abs_t, one row per k.
void write_statistic_path_csv(std::ostream& out,
                              const ChangePointEstimate& estimate);

}  // namespace ssrqd
