#pragma once

#include <functional>
#include <string>

namespace ssrqd {

enum class ScoreKind { Wilcoxon, VanDerWaerden, Custom };

// Odd score function J on (-1, 1) together with the per-step normalizing
// constant v_i = sqrt((1/i) * sum_{j=1}^{i} J(j/(i+1))^2).  Dividing the
// scored signed rank by v_i gives a statistic with exactly unit variance
// under the symmetric no-change hypothesis, whatever J is.
class ScoreFunction {
 public:
  static ScoreFunction wilcoxon();
  static ScoreFunction van_der_waerden();

  // User-supplied score.  Validated on construction: J must be odd and
  // square-integrable on (-1, 1); violations throw std::invalid_argument.
  static ScoreFunction custom(std::string name,
                              std::function<double(double)> j);

  double operator()(double u) const;

  // v_i for rank step i >= 1.  Wilcoxon has the closed form
  // sqrt((2i+1) / (6(i+1))); other scores fall back to the defining sum.
  double normalizer(int i) const;

  // E[J(U)^2] for U uniform on (-1, 1): the i -> inf limit of v_i^2.
  double mean_square() const;

  ScoreKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  ScoreFunction(ScoreKind kind, std::string name,
                std::function<double(double)> j);

  ScoreKind kind_;
  std::string name_;
  std::function<double(double)> j_;
  double mean_square_;
};

}  // namespace ssrqd
