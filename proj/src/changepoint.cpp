#include "ssrqd/changepoint.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "ssrqd/csvio.hpp"
#include "ssrqd/ranks.hpp"

namespace ssrqd {

ChangePointEstimate estimate_tau(std::span<const double> series,
                                 CpVariant variant) {
  const std::int64_t n = static_cast<std::int64_t>(series.size());
  if (n < 3) {
    throw std::invalid_argument("estimate_tau: need at least 3 observations");
  }
  for (double x : series) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("estimate_tau: non-finite observation");
    }
  }

  std::vector<double> y;
  if (variant == CpVariant::RankTransformed) {
    y.reserve(series.size());
    SequentialRankState ranks(TiePolicy::Jitter);
    const ScoreFunction score = ScoreFunction::wilcoxon();
    for (double x : series) {
      const RankUpdate u = ranks.update(x);
      y.push_back(xi_value(score, u, ranks.count()));
    }
  } else {
    y.assign(series.begin(), series.end());
  }

  ChangePointEstimate estimate;
  estimate.variant = variant;
  estimate.statistic_path.resize(static_cast<std::size_t>(n - 1));
  // Scan k from high to low with a running suffix sum, then pick the
  // maximizing k; strict > while scanning upward from k = 1 makes ties land
  // on the smallest k.
  std::vector<double> suffix(static_cast<std::size_t>(n - 1));
  double acc = 0.0;
  for (std::int64_t k = n - 1; k >= 1; --k) {
    acc += y[static_cast<std::size_t>(k)];
    suffix[static_cast<std::size_t>(k - 1)] = acc;
  }
  for (std::int64_t k = 1; k <= n - 1; ++k) {
    const double t =
        suffix[static_cast<std::size_t>(k - 1)] /
        std::sqrt(static_cast<double>(n - k));
    estimate.statistic_path[static_cast<std::size_t>(k - 1)] = std::fabs(t);
  }
  std::int64_t best_k = 1;
  double best = estimate.statistic_path[0];
  for (std::int64_t k = 2; k <= n - 1; ++k) {
    const double v = estimate.statistic_path[static_cast<std::size_t>(k - 1)];
    if (v > best) {
      best = v;
      best_k = k;
    }
  }
  estimate.tau_hat = best_k;
  estimate.max_statistic = best;
  return estimate;
}

void write_statistic_path_csv(std::ostream& out,
                              const ChangePointEstimate& estimate) {
  out << "k,abs_t\n";
  for (std::size_t idx = 0; idx < estimate.statistic_path.size(); ++idx) {
    out << csv::format(static_cast<std::int64_t>(idx + 1)) << ','
        << csv::format(estimate.statistic_path[idx]) << "\n";
  }
}

}  // namespace ssrqd
