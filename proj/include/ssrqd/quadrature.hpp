#pragma once

#include <functional>
#include <stdexcept>

namespace ssrqd {

// Raised when the adaptive subdivision budget is exhausted before the error
// estimate drops below the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adaptive Gauss-Kronrod 15(7) integration over [a, b].  The worst interval
// is bisected until the summed Kronrod error estimate falls below abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_intervals = 4000);

// Integrals over (0, inf) and (-inf, inf) via the substitution x = t/(1-t).
// The integrand must decay fast enough for the transformed integrand to be
// finite on [0, 1); all densities and score integrands used here qualify.
double integrate_half_line(const std::function<double(double)>& f,
                           double abs_tol = 1e-10, int max_intervals = 4000);
double integrate_real_line(const std::function<double(double)>& f,
                           double abs_tol = 1e-10, int max_intervals = 4000);

}  // namespace ssrqd
