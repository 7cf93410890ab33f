#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssrqd/calibrate.hpp"
#include "ssrqd/distributions.hpp"
#include "ssrqd/schemes.hpp"

namespace ssrqd {

// A location change on top of a centered in-control law: observations follow
// in_control through index tau and in_control + delta from tau + 1 on.
struct ChangeScenario {
  DistributionSpec in_control =
      DistributionSpec(Family::Normal, ScaleConvention::UnitVariance);
  double delta = 0.0;
  std::int64_t tau = 0;

  void validate() const;
};

// Conditional average detection delay E[N - tau | N > tau]: trials whose
// first alarm lands at or before tau are discarded (discarded_count); runs
// reaching the cap contribute the censored delay cap - tau and set
// truncated_count.  Throws if fewer than 100 trials survive.
RunLengthSummary cadt(const DetectorConfig& config,
                      const ChangeScenario& scenario,
                      const McOptions& options);

// Normal-theory approximation to a rank scheme's delay: the same recursion
// driven by N(theta0 * delta, 1) observations after the change.  family must
// be (or is mapped to) the matching normal-family scheme.
RunLengthSummary normal_approx_cadt(SchemeFamily family, double zeta, double h,
                                    double delta, const Theta0Value& theta0,
                                    std::int64_t tau, const McOptions& options);

struct SadtOptions {
  McOptions mc;
  // After a false alarm the decision statistic always restarts; this also
  // clears the rank memory, which is the from-scratch restart discipline.
  bool reset_ranks = true;
};

// Stationary average detection delay: the scheme restarts on every false
// alarm before tau and the delay N - tau is measured from the change point
// to the first alarm after it.  One-sided configurations only.
RunLengthSummary sadt(const DetectorConfig& config,
                      const ChangeScenario& scenario,
                      const SadtOptions& options);

enum class CurveAxis { Tau, Delta };

struct CurvePoint {
  double grid_value = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
  double discarded_fraction = 0.0;
};

struct DelayCurve {
  CurveAxis axis = CurveAxis::Delta;
  std::vector<CurvePoint> points;
};

// Delay as a function of tau (fixed delta) or delta (fixed tau), sharing the
// trial seeds across grid points so the curve is smooth in the Monte Carlo
// noise.  stationary selects sadt instead of cadt.
DelayCurve delay_curve(const DetectorConfig& config,
                       const ChangeScenario& base, CurveAxis axis,
                       std::span<const double> grid, const McOptions& options,
                       bool stationary = false);

struct XiShiftCheck {
  double mc_mean = 0.0;
  double std_error = 0.0;
  double predicted = 0.0;  // theta0 * delta
  std::int64_t trials = 0;
};

// Direct check of the small-shift drift approximation: the mean of the
// normalized rank statistic at step tau + 1, when that observation alone is
// shifted by delta, against the linearization theta0 * delta.  Requires
// tau >= 100 and |delta| <= 0.25, the regime where the linearization holds.
XiShiftCheck xi_shift_mean_check(const DistributionSpec& in_control,
                                 double delta, std::int64_t tau,
                                 const ScoreFunction& score,
                                 const McOptions& options);

}  // namespace ssrqd
