#include "ssrqd/ranks.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssrqd {

RankUpdate SequentialRankState::update(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("SequentialRankState: non-finite observation");
  }
  if (x == 0.0) {
    if (policy_ == TiePolicy::Strict) {
      throw std::domain_error(
          "SequentialRankState: exact zero observation (sign undefined); "
          "use TiePolicy::Jitter for rounded data");
    }
    // Deterministic replacement: magnitudes k * DBL_MIN are distinct from
    // each other and below any plausible real measurement; alternating sign
    // keeps the substitutions balanced.
    ++jitter_count_;
    const double magnitude =
        static_cast<double>(jitter_count_) * std::numeric_limits<double>::min();
    x = (jitter_count_ % 2 == 1) ? magnitude : -magnitude;
  }
  const double abs_x = std::fabs(x);
  if (tree_.contains(abs_x)) ++tie_count_;
  const int r_plus = 1 + tree_.count_less(abs_x);
  tree_.insert(abs_x);
  ++count_;
  const int sign = x > 0.0 ? 1 : -1;
  const double r_signed = sign * static_cast<double>(r_plus) / (count_ + 1.0);
  return RankUpdate{sign, r_plus, r_signed};
}

double xi_value(const ScoreFunction& score, const RankUpdate& update, int i) {
  if (i < 1) throw std::invalid_argument("xi_value: i >= 1");
  if (update.r_plus < 1 || update.r_plus > i) {
    throw std::invalid_argument("xi_value: rank out of range for step i");
  }
  return score(update.r_signed) / score.normalizer(i);
}

}  // namespace ssrqd
