#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssrqd/rng.hpp"
#include "ssrqd/score.hpp"

namespace ssrqd {

enum class Family { Normal, Logistic, Laplace, StudentT };

// How the base law is scaled before an optional location shift is added.
// UnitVariance rescales to variance 1 (rejected for Student t with nu <= 2,
// where the variance is infinite); UnitIqr rescales to interquartile range 1,
// which exists for every family; Raw applies an explicit scale factor.
enum class ScaleConvention { UnitVariance, UnitIqr, Raw };

// A symmetric location-scale model: X = scale * Z + shift with Z drawn from
// the standard form of the family.  Immutable after construction.
class DistributionSpec {
 public:
  DistributionSpec(Family family, ScaleConvention convention,
                   double raw_scale = 1.0, double shift = 0.0, int nu = 0);

  // Config grammar: "family:scaletoken[:shift=<real>]" where family is one of
  // normal | logistic | laplace | t<nu>, and scaletoken is var1 | iqr |
  // raw=<positive real>.  Examples: "t3:iqr:shift=0.25", "laplace:var1",
  // "normal:raw=2.0".  Parse errors throw std::invalid_argument naming the
  // offending token.
  static DistributionSpec parse(const std::string& text);
  std::string to_string() const;

  Family family() const { return family_; }
  ScaleConvention convention() const { return convention_; }
  int nu() const { return nu_; }
  double shift() const { return shift_; }
  double scale() const { return scale_; }

  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;

  // -f'/f of the scaled, centered density, evaluated at x - shift.  This is
  // the optimal location score; used by the score-correlation diagnostics.
  double location_score(double x) const;

  double sample(Rng& rng) const { return shift_ + scale_ * base_quantile(rng.uniform01()); }

  double base_pdf(double z) const;
  double base_cdf(double z) const;
  double base_quantile(double p) const;
  double base_location_score(double z) const;  // -f'/f of the standard form

  double variance() const;        // throws for t with nu <= 2
  double iqr() const;
  double fisher_information() const;  // location information of the scaled law

 private:
  double base_quantile_impl(double p) const;

  Family family_;
  ScaleConvention convention_;
  int nu_;
  double shift_;
  double scale_;         // resolved multiplier applied to the base law
  double t_log_norm_;    // Student t: log of the density normalizing constant
};

std::vector<double> sample(const DistributionSpec& spec, std::size_t n,
                           std::uint64_t seed);

enum class Theta0Method { Analytic, Quadrature, KernelPhase1 };

struct Theta0Value {
  double value;
  Theta0Method method;
};

// theta0 = sqrt(12) * integral of f^2 for the centered scaled density f: the
// asymptotic mean slope of the normalized rank statistic per unit of shift.
// Requires shift == 0.  The analytic path uses closed forms; the quadrature
// path integrates f^2 to 1e-9 absolute.
Theta0Value theta0(const DistributionSpec& spec);
Theta0Value theta0_quadrature(const DistributionSpec& spec);

// Plug-in estimate of theta0 from a pre-change calibration sample: sqrt(12)
// times the leave-one-out Gaussian-kernel estimate of integral f^2 with
// Silverman bandwidth.  Requires n >= 30 and positive spread.
Theta0Value estimate_theta0_phase1(std::span<const double> sample);

// Limiting correlation between the score J and the optimal location score of
// the family, i.e. the asymptotic efficiency geometry of the pairing.  The
// _at variant evaluates the same correlation at finite rank step i (exact
// discrete sum over j/(i+1)); it converges to score_correlation as i grows.
double score_correlation(const ScoreFunction& score,
                         const DistributionSpec& spec);
double score_correlation_at(const ScoreFunction& score,
                            const DistributionSpec& spec, int i);

}  // namespace ssrqd
