#pragma once

namespace ssrqd {

double normal_pdf(double x);
double normal_cdf(double x);

// Inverse standard normal CDF, algorithm AS 241 (Wichura, 1988), the PPND16
// variant.  Relative error is below 1e-15 across (0,1); p outside (0,1)
// throws std::domain_error, and values within one ulp of the endpoints map to
// +/-infinity.
double normal_quantile(double p);

}  // namespace ssrqd
