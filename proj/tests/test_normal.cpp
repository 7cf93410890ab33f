#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ssrqd/normal.hpp"

using namespace ssrqd;

TEST_CASE("normal quantile matches reference values") {
  // Reference values from an independent high-precision implementation.
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.75) ==
        doctest::Approx(0.6744897501960817).epsilon(1e-14));
  CHECK(normal_quantile(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(0.99) ==
        doctest::Approx(2.3263478740408408).epsilon(1e-14));
  CHECK(normal_quantile(0.01) ==
        doctest::Approx(-2.3263478740408408).epsilon(1e-14));
  CHECK(normal_quantile(0.3) ==
        doctest::Approx(-0.5244005127080409).epsilon(1e-14));
  CHECK(normal_quantile(1e-10) ==
        doctest::Approx(-6.361340902404056).epsilon(1e-13));
  CHECK(normal_quantile(1.0 - 1e-10) ==
        doctest::Approx(6.361340889697422).epsilon(1e-13));
  CHECK(normal_quantile(1e-300) ==
        doctest::Approx(-37.0470962993612).epsilon(1e-12));
}

TEST_CASE("normal quantile edge cases") {
  CHECK(normal_quantile(0.0) == -std::numeric_limits<double>::infinity());
  CHECK(normal_quantile(1.0) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS((void)normal_quantile(-0.1), std::domain_error);
  CHECK_THROWS_AS((void)normal_quantile(1.5), std::domain_error);
  CHECK_THROWS_AS((void)normal_quantile(std::nan("")), std::domain_error);
}

TEST_CASE("normal cdf matches reference values and symmetry") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.0) ==
        doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(normal_cdf(-1.0) ==
        doctest::Approx(0.15865525393145707).epsilon(1e-14));
  CHECK(normal_cdf(2.5) ==
        doctest::Approx(0.9937903346742238).epsilon(1e-14));
  CHECK(normal_cdf(-6.0) ==
        doctest::Approx(9.865876450376946e-10).epsilon(1e-12));
  for (double x : {0.1, 0.7, 1.9, 3.3, 7.5}) {
    CHECK(normal_cdf(x) + normal_cdf(-x) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("normal pdf basics") {
  CHECK(normal_pdf(0.0) ==
        doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(normal_pdf(1.0) ==
        doctest::Approx(0.24197072451914337).epsilon(1e-15));
  CHECK(normal_pdf(-1.0) == doctest::Approx(normal_pdf(1.0)).epsilon(1e-15));
}

TEST_CASE("quantile/cdf round trip over a dense grid") {
  // Central region: absolute error in p space should sit near machine level.
  for (int i = 1; i < 2000; ++i) {
    const double p = i / 2000.0;
    const double x = normal_quantile(p);
    CHECK(std::abs(normal_cdf(x) - p) <= 5e-11);
  }
  // Deep tails: relative error in p.
  for (double p = 1e-300; p < 1e-3; p *= 1e10) {
    const double x = normal_quantile(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-6));
  }
}
