#pragma once

#include <cstdint>

#include "ssrqd/ostree.hpp"
#include "ssrqd/score.hpp"

namespace ssrqd {

// What to do when an observation is exactly zero, which has probability zero
// under any continuous model but happens with rounded or quantized data.
// Strict refuses (throws std::domain_error); Jitter substitutes a tiny
// deterministic nonzero magnitude (alternating sign, subnormal scale) so the
// sign is defined while the magnitude ranks below every genuine observation.
enum class TiePolicy { Strict, Jitter };

struct RankUpdate {
  int sign;         // +1 or -1
  int r_plus;       // magnitude rank among |X_1|..|X_i|, in 1..i
  double r_signed;  // sign * r_plus / (i + 1), in (-1, 1)
};

// Streaming signed sequential ranks: after i observations, r_plus is
// 1 + #{j < i : |X_j| < |X_i|}.  Exact |x| duplicates count as not-less
// (they inflate nothing) and are tallied in tie_count for diagnostics.
class SequentialRankState {
 public:
  explicit SequentialRankState(TiePolicy policy = TiePolicy::Strict)
      : policy_(policy) {}

  RankUpdate update(double x);

  int count() const { return count_; }
  std::int64_t tie_count() const { return tie_count_; }
  std::int64_t jitter_count() const { return jitter_count_; }
  TiePolicy policy() const { return policy_; }

  void reset() {
    tree_.clear();
    count_ = 0;
    tie_count_ = 0;
    jitter_count_ = 0;
  }

  void reserve(int n) { tree_.reserve(n); }

 private:
  OrderStatisticTree tree_;
  TiePolicy policy_;
  int count_ = 0;
  std::int64_t tie_count_ = 0;
  std::int64_t jitter_count_ = 0;
};

// Scored, variance-normalized rank statistic J(r_signed) / v_i for the i-th
// update.  Has mean 0 and variance exactly 1 under the symmetric no-change
// hypothesis regardless of the data distribution.
double xi_value(const ScoreFunction& score, const RankUpdate& update, int i);

}  // namespace ssrqd
