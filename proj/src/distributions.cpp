#include "ssrqd/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ssrqd/normal.hpp"
#include "ssrqd/quadrature.hpp"

namespace ssrqd {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt12 = 3.4641016151377543863532483;

[[noreturn]] void bad_spec(const std::string& what) {
  throw std::invalid_argument("DistributionSpec: " + what);
}

// --- Student t standard form, integer nu ------------------------------------

double t_log_norm(int nu) {
  // log of Gamma((nu+1)/2) / (sqrt(nu*pi) * Gamma(nu/2))
  return std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * kPi);
}

double t_pdf(int nu, double z, double log_norm) {
  return std::exp(log_norm - 0.5 * (nu + 1.0) * std::log1p(z * z / nu));
}

// CDF by the classical elementary-function expansions for integer degrees of
// freedom (Abramowitz & Stegun 26.7.3 for odd nu, 26.7.4 for even nu).
double t_cdf(int nu, double z) {
  const double x = std::fabs(z);
  const double theta = std::atan2(x, std::sqrt(static_cast<double>(nu)));
  const double c2 = nu / (nu + x * x);  // cos^2 theta
  const double s = std::sqrt(1.0 - c2); // sin theta, >= 0
  double a;  // P(|T| <= x)
  if (nu % 2 == 1) {
    double sum = 0.0;
    if (nu >= 3) {
      double term = std::sqrt(c2);  // cos theta
      sum = term;
      for (int k = 3; k <= nu - 2; k += 2) {
        term *= (k - 1.0) / k * c2;
        sum += term;
      }
    }
    a = 2.0 / kPi * (theta + s * sum);
  } else {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 2; k <= nu - 2; k += 2) {
      term *= (k - 1.0) / k * c2;
      sum += term;
    }
    a = s * sum;
  }
  const double half_tail = 0.5 * (1.0 - std::min(a, 1.0));
  return z >= 0.0 ? 1.0 - half_tail : half_tail;
}

// Quantile by bracketed Newton on the CDF, started from a Cornish-Fisher
// style corrected normal quantile.  Terminates on an interval of relative
// width 1e-14 or a CDF residual at rounding level, so cdf(quantile(p))
// round-trips to ~1e-12.
double t_quantile(int nu, double p, double log_norm) {
  if (!(p > 0.0) || !(p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("t_quantile: p outside [0,1]");
  }
  if (p == 0.5) return 0.0;
  const bool upper = p > 0.5;
  const double tail = upper ? 1.0 - p : p;  // in (0, 0.5)

  // Initial guess for the (negative-side) quantile of the lower tail.
  const double zn = normal_quantile(tail);
  double x0 = -std::fabs(zn + (zn * zn * zn + zn) / (4.0 * nu));
  // Heavy tails: the power-law expansion P(T < -x) ~ C * x^-nu gives a far
  // better start when the normal-based guess is deep in the tail.
  if (tail < 1e-3) {
    const double c_tail =
        std::exp(log_norm) * std::pow(static_cast<double>(nu), 0.5 * nu) / nu;
    x0 = -std::pow(c_tail / tail, 1.0 / nu);
  }

  // Bracket the root of F(x) - tail = 0 on the negative axis.
  double lo = x0, hi = x0;
  while (t_cdf(nu, lo) > tail) lo = lo < -1.0 ? 2.0 * lo : lo - 1.0;
  while (t_cdf(nu, hi) < tail) hi = hi < -1.0 ? 0.5 * hi : hi + 1.0;

  double x = std::clamp(x0, lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double err = t_cdf(nu, x) - tail;
    if (err > 0.0) {
      hi = x;
    } else if (err < 0.0) {
      lo = x;
    } else {
      break;
    }
    const double width = hi - lo;
    if (width <= 1e-14 * std::max(1.0, std::fabs(lo))) break;
    const double step = err / t_pdf(nu, x, log_norm);
    double next = x - step;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return upper ? -x : x;
}

// --- Logistic / Laplace standard forms --------------------------------------

double logistic_pdf(double z) {
  const double e = std::exp(-std::fabs(z));
  const double d = 1.0 + e;
  return e / (d * d);
}

double logistic_cdf(double z) {
  // Stable on both tails.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logistic_quantile(double p) { return std::log(p) - std::log1p(-p); }

double laplace_pdf(double z) { return 0.5 * std::exp(-std::fabs(z)); }

double laplace_cdf(double z) {
  return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

double laplace_quantile(double p) {
  return p < 0.5 ? std::log(2.0 * p) : -std::log(2.0 * (1.0 - p));
}

// --- per-family constants ---------------------------------------------------

double base_variance_of(Family family, int nu) {
  switch (family) {
    case Family::Normal:
      return 1.0;
    case Family::Logistic:
      return kPi * kPi / 3.0;
    case Family::Laplace:
      return 2.0;
    case Family::StudentT:
      if (nu <= 2) {
        bad_spec("Student t with nu <= 2 has no finite variance; "
                 "use the iqr or raw scale convention");
      }
      return static_cast<double>(nu) / (nu - 2.0);
  }
  bad_spec("unknown family");
}

// integral of f^2 over the real line for the standard form of each family.
double base_int_f_squared(Family family, int nu, double log_norm) {
  switch (family) {
    case Family::Normal:
      return 0.5 / std::sqrt(kPi);
    case Family::Logistic:
      return 1.0 / 6.0;
    case Family::Laplace:
      return 0.25;
    case Family::StudentT:
      // integral (c_nu^2) * (1 + z^2/nu)^{-(nu+1)} dz
      //   = c_nu^2 * sqrt(nu) * B(1/2, nu + 1/2)
      return std::exp(2.0 * log_norm + 0.5 * std::log(static_cast<double>(nu)) +
                      std::lgamma(0.5) + std::lgamma(nu + 0.5) -
                      std::lgamma(nu + 1.0));
  }
  bad_spec("unknown family");
}

}  // namespace

// --- DistributionSpec -------------------------------------------------------

DistributionSpec::DistributionSpec(Family family, ScaleConvention convention,
                                   double raw_scale, double shift, int nu)
    : family_(family),
      convention_(convention),
      nu_(nu),
      shift_(shift),
      t_log_norm_(0.0) {
  if (family_ == Family::StudentT) {
    if (nu_ < 1) bad_spec("Student t requires integer nu >= 1");
    t_log_norm_ = t_log_norm(nu_);
  } else if (nu_ != 0) {
    bad_spec("nu is only meaningful for the Student t family");
  }
  if (!std::isfinite(shift_)) bad_spec("shift must be finite");
  switch (convention_) {
    case ScaleConvention::UnitVariance:
      scale_ = 1.0 / std::sqrt(base_variance_of(family_, nu_));
      break;
    case ScaleConvention::UnitIqr:
      // Symmetric base law: IQR = 2 * Q(0.75).
      scale_ = 1.0 / (2.0 * base_quantile_impl(0.75));
      break;
    case ScaleConvention::Raw:
      if (!(raw_scale > 0.0) || !std::isfinite(raw_scale)) {
        bad_spec("raw scale must be a positive finite real");
      }
      scale_ = raw_scale;
      break;
  }
}

double DistributionSpec::base_pdf(double z) const {
  switch (family_) {
    case Family::Normal:
      return normal_pdf(z);
    case Family::Logistic:
      return logistic_pdf(z);
    case Family::Laplace:
      return laplace_pdf(z);
    case Family::StudentT:
      return t_pdf(nu_, z, t_log_norm_);
  }
  bad_spec("unknown family");
}

double DistributionSpec::base_cdf(double z) const {
  switch (family_) {
    case Family::Normal:
      return normal_cdf(z);
    case Family::Logistic:
      return logistic_cdf(z);
    case Family::Laplace:
      return laplace_cdf(z);
    case Family::StudentT:
      return t_cdf(nu_, z);
  }
  bad_spec("unknown family");
}

double DistributionSpec::base_quantile(double p) const {
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::domain_error("quantile: p outside [0,1]");
  }
  return base_quantile_impl(p);
}

double DistributionSpec::base_quantile_impl(double p) const {
  switch (family_) {
    case Family::Normal:
      return normal_quantile(p);
    case Family::Logistic:
      return logistic_quantile(p);
    case Family::Laplace:
      return laplace_quantile(p);
    case Family::StudentT:
      return t_quantile(nu_, p, t_log_norm_);
  }
  bad_spec("unknown family");
}

double DistributionSpec::pdf(double x) const {
  return base_pdf((x - shift_) / scale_) / scale_;
}

double DistributionSpec::cdf(double x) const {
  return base_cdf((x - shift_) / scale_);
}

double DistributionSpec::quantile(double p) const {
  return shift_ + scale_ * base_quantile(p);
}

double DistributionSpec::base_location_score(double z) const {
  switch (family_) {
    case Family::Normal:
      return z;
    case Family::Logistic:
      return std::tanh(0.5 * z);
    case Family::Laplace:
      return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
    case Family::StudentT:
      return (nu_ + 1.0) * z / (nu_ + z * z);
  }
  bad_spec("unknown family");
}

double DistributionSpec::location_score(double x) const {
  return base_location_score((x - shift_) / scale_) / scale_;
}

double DistributionSpec::variance() const {
  return scale_ * scale_ * base_variance_of(family_, nu_);
}

double DistributionSpec::iqr() const {
  return scale_ * 2.0 * base_quantile_impl(0.75);
}

double DistributionSpec::fisher_information() const {
  double base;
  switch (family_) {
    case Family::Normal:
      base = 1.0;
      break;
    case Family::Logistic:
      base = 1.0 / 3.0;
      break;
    case Family::Laplace:
      base = 1.0;
      break;
    case Family::StudentT:
      base = (nu_ + 1.0) / (nu_ + 3.0);
      break;
    default:
      bad_spec("unknown family");
  }
  return base / (scale_ * scale_);
}

// --- parsing ----------------------------------------------------------------

namespace {

std::vector<std::string> split_colons(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(':', start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_real(const std::string& token, const std::string& what) {
  std::size_t used = 0;
  double value;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    bad_spec("cannot parse " + what + " from '" + token + "'");
  }
  if (used != token.size()) {
    bad_spec("trailing characters in " + what + " '" + token + "'");
  }
  return value;
}

}  // namespace

DistributionSpec DistributionSpec::parse(const std::string& text) {
  const auto parts = split_colons(text);
  if (parts.empty() || parts[0].empty()) bad_spec("empty spec '" + text + "'");

  Family family;
  int nu = 0;
  const std::string& fam = parts[0];
  if (fam == "normal") {
    family = Family::Normal;
  } else if (fam == "logistic") {
    family = Family::Logistic;
  } else if (fam == "laplace") {
    family = Family::Laplace;
  } else if (fam.size() > 1 && fam[0] == 't' &&
             fam.find_first_not_of("0123456789", 1) == std::string::npos) {
    family = Family::StudentT;
    nu = static_cast<int>(parse_real(fam.substr(1), "degrees of freedom"));
  } else {
    bad_spec("unknown family '" + fam + "'");
  }

  if (parts.size() < 2) bad_spec("missing scale token in '" + text + "'");
  const std::string& scale_tok = parts[1];
  ScaleConvention convention;
  double raw_scale = 1.0;
  if (scale_tok == "var1") {
    convention = ScaleConvention::UnitVariance;
  } else if (scale_tok == "iqr") {
    convention = ScaleConvention::UnitIqr;
  } else if (scale_tok.rfind("raw=", 0) == 0) {
    convention = ScaleConvention::Raw;
    raw_scale = parse_real(scale_tok.substr(4), "raw scale");
  } else {
    bad_spec("unknown scale token '" + scale_tok + "'");
  }

  double shift = 0.0;
  if (parts.size() >= 3) {
    const std::string& shift_tok = parts[2];
    if (shift_tok.rfind("shift=", 0) != 0) {
      bad_spec("expected shift=<real>, got '" + shift_tok + "'");
    }
    shift = parse_real(shift_tok.substr(6), "shift");
  }
  if (parts.size() > 3) bad_spec("too many tokens in '" + text + "'");

  return DistributionSpec(family, convention, raw_scale, shift, nu);
}

std::string DistributionSpec::to_string() const {
  std::string out;
  switch (family_) {
    case Family::Normal:
      out = "normal";
      break;
    case Family::Logistic:
      out = "logistic";
      break;
    case Family::Laplace:
      out = "laplace";
      break;
    case Family::StudentT:
      out = "t" + std::to_string(nu_);
      break;
  }
  switch (convention_) {
    case ScaleConvention::UnitVariance:
      out += ":var1";
      break;
    case ScaleConvention::UnitIqr:
      out += ":iqr";
      break;
    case ScaleConvention::Raw: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", scale_);
      out += ":raw=";
      out += buf;
      break;
    }
  }
  if (shift_ != 0.0) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", shift_);
    out += ":shift=";
    out += buf;
  }
  return out;
}

// --- sampling ---------------------------------------------------------------

std::vector<double> sample(const DistributionSpec& spec, std::size_t n,
                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = spec.sample(rng);
  return out;
}

// --- theta0 -----------------------------------------------------------------

Theta0Value theta0(const DistributionSpec& spec) {
  if (spec.shift() != 0.0) {
    throw std::invalid_argument("theta0: spec must have zero shift");
  }
  const double base = base_int_f_squared(
      spec.family(), spec.nu(),
      spec.family() == Family::StudentT ? t_log_norm(spec.nu()) : 0.0);
  // f_scaled(x) = f(x/c)/c, so integral f_scaled^2 = (integral f^2) / c.
  return {kSqrt12 * base / spec.scale(), Theta0Method::Analytic};
}

Theta0Value theta0_quadrature(const DistributionSpec& spec) {
  if (spec.shift() != 0.0) {
    throw std::invalid_argument("theta0: spec must have zero shift");
  }
  const double integral = integrate_real_line(
      [&spec](double x) {
        const double f = spec.pdf(x);
        return f * f;
      },
      1e-9);
  return {kSqrt12 * integral, Theta0Method::Quadrature};
}

Theta0Value estimate_theta0_phase1(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 30) {
    throw std::invalid_argument(
        "estimate_theta0_phase1: need at least 30 observations");
  }
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());

  double mean = 0.0;
  for (double x : sorted) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : sorted) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  auto quantile_at = [&](double q) {
    const double pos = q * (n - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return lo + 1 < n ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
                      : sorted[lo];
  };
  const double iqr = quantile_at(0.75) - quantile_at(0.25);

  // Silverman's rule with the usual robust spread; fall back to whichever of
  // sd and IQR/1.34 is positive when the other degenerates.
  double spread = 0.0;
  if (sd > 0.0 && iqr > 0.0) {
    spread = std::min(sd, iqr / 1.34);
  } else if (sd > 0.0) {
    spread = sd;
  } else if (iqr > 0.0) {
    spread = iqr / 1.34;
  } else {
    throw std::invalid_argument("estimate_theta0_phase1: sample has zero spread");
  }
  const double bandwidth = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  // Leave-one-out kernel estimate of integral f^2:
  //   (1 / (n(n-1)h)) * sum_{i != j} K((x_i - x_j)/h),  K = N(0,1) density.
  // Pairs farther apart than 8h contribute below 1e-14 and are skipped; the
  // sorted two-pointer sweep keeps this near-linear for concentrated data.
  const double cutoff = 8.0 * bandwidth;
  double acc = 0.0;
  std::size_t window_start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (sorted[i] - sorted[window_start] > cutoff) ++window_start;
    for (std::size_t j = window_start; j < i; ++j) {
      acc += normal_pdf((sorted[i] - sorted[j]) / bandwidth);
    }
  }
  const double integral_f2 =
      2.0 * acc / (static_cast<double>(n) * (n - 1.0) * bandwidth);
  return {kSqrt12 * integral_f2, Theta0Method::KernelPhase1};
}

// --- score correlation ------------------------------------------------------

double score_correlation(const ScoreFunction& score,
                         const DistributionSpec& spec) {
  if (spec.shift() != 0.0) {
    throw std::invalid_argument("score_correlation: spec must have zero shift");
  }
  // Work on the base (unscaled) law: correlation is scale-invariant.  With
  // U = 2F(Z) - 1, the numerator is E[J(U) * phi(Z)] written in x-space;
  // J(2F-1) * phi * f is even, so integrate the positive axis twice.
  const double numerator =
      2.0 * integrate_half_line(
                [&](double z) {
                  const double f = spec.base_pdf(z);
                  if (f == 0.0) return 0.0;
                  const double u = 2.0 * spec.base_cdf(z) - 1.0;
                  return score(u) * spec.base_location_score(z) * f;
                },
                1e-10);
  const double base_info =
      spec.fisher_information() * spec.scale() * spec.scale();
  return numerator / std::sqrt(score.mean_square() * base_info);
}

double score_correlation_at(const ScoreFunction& score,
                            const DistributionSpec& spec, int i) {
  if (i < 2) throw std::invalid_argument("score_correlation_at: i >= 2");
  if (spec.shift() != 0.0) {
    throw std::invalid_argument("score_correlation_at: spec must have zero shift");
  }
  // Exact correlation of the two score vectors over the discrete rank grid
  // u_j = j / (i+1).  Both vectors are odd, so means vanish by symmetry.
  double sjj = 0.0, spp = 0.0, sjp = 0.0;
  for (int j = 1; j <= i; ++j) {
    const double u = static_cast<double>(j) / (i + 1.0);
    const double a = score(u);
    const double z = spec.base_quantile(0.5 * (1.0 + u));
    const double b = spec.base_location_score(z);
    sjj += a * a;
    spp += b * b;
    sjp += a * b;
  }
  return sjp / std::sqrt(sjj * spp);
}

}  // namespace ssrqd
