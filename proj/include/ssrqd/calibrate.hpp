#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssrqd/distributions.hpp"
#include "ssrqd/schemes.hpp"

namespace ssrqd {

// Raised when a control-limit search cannot reach its target within the
// evaluation budget or the admissible h range.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct McOptions {
  std::int64_t trials = 20000;
  std::int64_t cap = 0;    // run-length truncation; 0 picks a context default
  std::uint64_t seed = 1;
  int workers = 0;         // 0: SSRQD_THREADS, then hardware concurrency
};

struct RunLengthSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
  std::int64_t truncated_count = 0;  // runs cut at the cap (counted at cap)
  std::int64_t discarded_count = 0;  // delay studies: false-alarm trials
  std::int64_t cap = 0;
  std::uint64_t seed = 0;
  bool flagged = false;  // truncated fraction above 1%: estimate biased low

  double truncated_fraction() const {
    return trials > 0 ? static_cast<double>(truncated_count) / trials : 0.0;
  }
};

// Monte Carlo in-control average run length of the scheme.  Respects
// config.sidedness.  For rank-based families the result does not depend on
// the (continuous, symmetric) in-control law; passing different laws is how
// that distribution-freeness is verified.
RunLengthSummary estimate_icarl(const DetectorConfig& config,
                                const DistributionSpec& in_control,
                                const McOptions& options);

struct CalibrationOptions {
  McOptions mc;
  double rel_tol = 0.05;      // acceptable |ICARL - target| / target
  double h_min = 1e-3;
  double h_max = 60.0;
  double h_resolution = 0.02;  // final bracket width on h
  int max_evals = 80;
};

struct CalibrationResult {
  double zeta = 0.0;
  double target_arl0 = 0.0;
  double h = 0.0;
  RunLengthSummary achieved;  // ICARL estimate at the returned h
  int evals = 0;
};

// Finds h with estimated ICARL within rel_tol of the target by bisection on
// a common-random-numbers coupling: every h is evaluated on the same trial
// streams, under which the estimated ICARL is nondecreasing in h.  The
// search result is bit-reproducible for a fixed seed and independent of the
// worker count.
CalibrationResult find_control_limit(
    SchemeFamily family, const ScoreFunction& score, double zeta,
    double target_arl0, const CalibrationOptions& options,
    const DistributionSpec& in_control =
        DistributionSpec(Family::Normal, ScaleConvention::UnitVariance));

// Calibrates the two-sided scheme: seeds the search at the one-sided limit
// for twice the target (the halves' false alarms roughly split the budget),
// then re-bisects against the two-sided ICARL.
CalibrationResult two_sided_limit(SchemeFamily family,
                                  const ScoreFunction& score, double zeta,
                                  double target_arl0,
                                  const CalibrationOptions& options);

// Design reference value: half the asymptotic mean drift theta0 * delta1 of
// the normalized rank statistic under the smallest shift delta1 the scheme
// should detect quickly.
double reference_value(double delta1, const Theta0Value& theta0);

struct MisspecificationResult {
  CalibrationResult calibration;  // nominal-model calibration
  RunLengthSummary achieved;      // ICARL under the actual scenario
};

// Achieved in-control ARL of a normal-family scheme calibrated under the
// nominal model (sigma = 1 normal data) but run with a mis-specified scale
// estimate, or on data from a different symmetric law.
MisspecificationResult misspecification_sigma(double sigma_hat, double zeta,
                                              double target_arl0,
                                              const CalibrationOptions& options,
                                              SchemeFamily family = SchemeFamily::NormalSr);
MisspecificationResult misspecification_distribution(
    const DistributionSpec& actual, double zeta, double target_arl0,
    const CalibrationOptions& options,
    SchemeFamily family = SchemeFamily::NormalSr);

// Calibrated control limits over a (zeta, ARL0) grid with CSV round-trip and
// interpolation.  CSV layout: an optional '#' metadata line, then a header
// row "zeta,<arl0>,...", then one row per zeta with cells "h(se)" where se
// is the standard error of the achieved ICARL ("!" appended on flagged
// cells).  interpolate_h is bilinear: linear in zeta, linear in log(ARL0),
// exact on grid points; querying outside the grid throws.
struct ControlLimitTable {
  std::string family_token;
  std::string score_token;
  std::vector<double> zetas;
  std::vector<double> arl0s;

  struct Cell {
    double h = 0.0;
    double se = 0.0;
    bool flagged = false;
  };
  std::vector<Cell> cells;  // row-major: zetas.size() x arl0s.size()

  const Cell& at(std::size_t zeta_idx, std::size_t arl0_idx) const;
  void write_csv(std::ostream& out) const;
  static ControlLimitTable read_csv(std::istream& in);
  double interpolate_h(double zeta, double arl0) const;
};

std::string family_token(SchemeFamily family);
SchemeFamily family_from_token(const std::string& token);

ControlLimitTable generate_control_limit_table(
    SchemeFamily family, const ScoreFunction& score,
    std::span<const double> zetas, std::span<const double> arl0s,
    const CalibrationOptions& options, Sidedness sidedness = Sidedness::Upper);

}  // namespace ssrqd
