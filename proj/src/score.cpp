#include "ssrqd/score.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "ssrqd/normal.hpp"
#include "ssrqd/quadrature.hpp"

namespace ssrqd {

namespace {

// Van der Waerden scores hit the normal quantile near its poles when
// |u| -> 1.  Ranks keep |u| <= i/(i+1), so the clamp below is unreachable in
// any realistic stream; it exists so J stays finite for adversarial input.
constexpr double kQuantileClamp = 1e-15;

double van_der_waerden_j(double u) {
  double p = 0.5 * (1.0 + u);
  if (p >= 1.0 - kQuantileClamp) p = 1.0 - kQuantileClamp;
  if (p <= kQuantileClamp) p = kQuantileClamp;
  return normal_quantile(p);
}

}  // namespace

ScoreFunction::ScoreFunction(ScoreKind kind, std::string name,
                             std::function<double(double)> j)
    : kind_(kind), name_(std::move(name)), j_(std::move(j)) {
  switch (kind_) {
    case ScoreKind::Wilcoxon:
      mean_square_ = 1.0 / 3.0;
      break;
    case ScoreKind::VanDerWaerden:
      // E[Phi^{-1}((1+U)/2)^2] = E[Z^2] = 1 for Z standard normal.
      mean_square_ = 1.0;
      break;
    case ScoreKind::Custom: {
      // Oddness check on a fixed grid, then square-integrability via the
      // defining integral; a divergent J^2 shows up as quadrature failure.
      for (int k = 1; k <= 64; ++k) {
        const double u = k / 65.0;
        const double asym = std::fabs(j_(u) + j_(-u));
        const double scale = 1.0 + std::fabs(j_(u));
        if (!(asym <= 1e-12 * scale)) {
          throw std::invalid_argument("ScoreFunction: J is not odd at u=" +
                                      std::to_string(u));
        }
      }
      try {
        mean_square_ = integrate(
            [this](double u) {
              const double v = j_(u);
              return v * v;
            },
            0.0, 1.0 - 1e-12, 1e-9);
      } catch (const QuadratureError&) {
        throw std::invalid_argument(
            "ScoreFunction: J^2 is not integrable on (-1,1)");
      }
      if (!std::isfinite(mean_square_) || mean_square_ <= 0.0) {
        throw std::invalid_argument(
            "ScoreFunction: J^2 must have a positive finite mean square");
      }
      break;
    }
  }
}

ScoreFunction ScoreFunction::wilcoxon() {
  return ScoreFunction(ScoreKind::Wilcoxon, "wilcoxon",
                       [](double u) { return u; });
}

ScoreFunction ScoreFunction::van_der_waerden() {
  return ScoreFunction(ScoreKind::VanDerWaerden, "van-der-waerden",
                       &van_der_waerden_j);
}

ScoreFunction ScoreFunction::custom(std::string name,
                                    std::function<double(double)> j) {
  if (!j) throw std::invalid_argument("ScoreFunction: null callable");
  return ScoreFunction(ScoreKind::Custom, std::move(name), std::move(j));
}

double ScoreFunction::operator()(double u) const { return j_(u); }

double ScoreFunction::normalizer(int i) const {
  if (i < 1) throw std::invalid_argument("ScoreFunction::normalizer: i >= 1");
  if (kind_ == ScoreKind::Wilcoxon) {
    return std::sqrt((2.0 * i + 1.0) / (6.0 * (i + 1.0)));
  }
  double sum = 0.0;
  for (int j = 1; j <= i; ++j) {
    const double v = j_(static_cast<double>(j) / (i + 1.0));
    sum += v * v;
  }
  return std::sqrt(sum / i);
}

double ScoreFunction::mean_square() const { return mean_square_; }

}  // namespace ssrqd
