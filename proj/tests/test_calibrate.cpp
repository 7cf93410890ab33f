#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ssrqd/calibrate.hpp"

using namespace ssrqd;

namespace {

DetectorConfig ssr_sr_config(double zeta, double h) {
  DetectorConfig config;
  config.family = SchemeFamily::SsrSr;
  config.zeta = zeta;
  config.h = h;
  return config;
}

const DistributionSpec kNormal(Family::Normal, ScaleConvention::UnitVariance);

}  // namespace

TEST_CASE("icarl estimates are reproducible and worker-independent") {
  const DetectorConfig config = ssr_sr_config(0.25, 3.0);
  McOptions options;
  options.trials = 600;
  options.cap = 3000;
  options.seed = 12345;
  options.workers = 1;
  const RunLengthSummary a = estimate_icarl(config, kNormal, options);
  options.workers = 3;
  const RunLengthSummary b = estimate_icarl(config, kNormal, options);
  CHECK(a.mean == b.mean);  // bit-identical, not merely close
  CHECK(a.std_error == b.std_error);
  CHECK(a.truncated_count == b.truncated_count);

  options.seed = 54321;
  const RunLengthSummary c = estimate_icarl(config, kNormal, options);
  CHECK(a.mean != c.mean);
  CHECK(a.mean > 1.0);
  CHECK(a.std_error > 0.0);
}

TEST_CASE("rank schemes have one run-length law for every symmetric input") {
  // With quantile-transform sampling and a shared seed, the sign and
  // magnitude-rank sequences coincide across symmetric families, so the
  // estimates agree exactly, not just in distribution.
  const DetectorConfig config = ssr_sr_config(0.25, 3.0);
  McOptions options;
  options.trials = 500;
  options.cap = 3000;
  options.seed = 777;
  const RunLengthSummary normal = estimate_icarl(config, kNormal, options);
  for (const char* law : {"laplace:var1", "logistic:iqr", "t3:var1", "t1:iqr"}) {
    const RunLengthSummary other =
        estimate_icarl(config, DistributionSpec::parse(law), options);
    CHECK(other.mean == normal.mean);
    CHECK(other.truncated_count == normal.truncated_count);
  }
}

TEST_CASE("common random numbers make the icarl monotone in h") {
  DetectorConfig config;
  config.family = SchemeFamily::NormalSr;
  config.zeta = 0.25;
  McOptions options;
  options.trials = 400;
  options.cap = 20000;
  options.seed = 99;
  double previous = 0.0;
  for (double h : {2.0, 3.0, 4.0, 5.0}) {
    config.h = h;
    const RunLengthSummary s = estimate_icarl(config, kNormal, options);
    CHECK(s.mean >= previous);
    previous = s.mean;
  }
}

TEST_CASE("truncation is counted and flagged") {
  const DetectorConfig config = ssr_sr_config(0.25, 50.0);  // unreachable
  McOptions options;
  options.trials = 100;
  options.cap = 50;
  const RunLengthSummary s = estimate_icarl(config, kNormal, options);
  CHECK(s.truncated_count == 100);
  CHECK(s.mean == 50.0);
  CHECK(s.flagged);
}

TEST_CASE("control limit search hits the target") {
  CalibrationOptions options;
  options.mc.trials = 4000;
  options.mc.seed = 2026;
  const CalibrationResult r = find_control_limit(
      SchemeFamily::SsrSr, ScoreFunction::wilcoxon(), 0.5, 100.0, options);
  CHECK(r.h == doctest::Approx(3.95).epsilon(0.08));
  CHECK(std::fabs(r.achieved.mean - 100.0) <= 5.0);
  CHECK(r.evals <= options.max_evals);
  CHECK(r.zeta == 0.5);
  CHECK(r.target_arl0 == 100.0);

  // Re-running the identical search reproduces the identical answer.
  const CalibrationResult again = find_control_limit(
      SchemeFamily::SsrSr, ScoreFunction::wilcoxon(), 0.5, 100.0, options);
  CHECK(again.h == r.h);
  CHECK(again.achieved.mean == r.achieved.mean);
}

TEST_CASE("two-sided calibration splits the false-alarm budget") {
  CalibrationOptions options;
  options.mc.trials = 2000;
  options.mc.seed = 31;
  const CalibrationResult r = two_sided_limit(
      SchemeFamily::SsrSr, ScoreFunction::wilcoxon(), 0.5, 60.0, options);
  CHECK(std::fabs(r.achieved.mean - 60.0) <= 3.0);
  // The two-sided limit must exceed the one-sided limit for the same target.
  const CalibrationResult one_sided = find_control_limit(
      SchemeFamily::SsrSr, ScoreFunction::wilcoxon(), 0.5, 60.0, options);
  CHECK(r.h > one_sided.h);
}

TEST_CASE("calibration error paths") {
  CalibrationOptions options;
  options.mc.trials = 100;
  options.mc.cap = 500;
  CHECK_THROWS_AS((void)find_control_limit(SchemeFamily::SsrSr,
                                           ScoreFunction::wilcoxon(), 0.25,
                                           1.0, options),
                  std::invalid_argument);  // target must exceed 1
  CalibrationOptions cramped = options;
  cramped.h_max = 0.75;
  CHECK_THROWS_AS((void)find_control_limit(SchemeFamily::SsrSr,
                                           ScoreFunction::wilcoxon(), 0.25,
                                           5000.0, cramped),
                  CalibrationError);
  CHECK_THROWS_AS((void)find_control_limit(SchemeFamily::SsrSr,
                                           ScoreFunction::wilcoxon(), 0.25,
                                           1.2, options),
                  CalibrationError);  // below what h_min can produce
}

TEST_CASE("reference value") {
  const Theta0Value theta{0.9772050238058398, Theta0Method::Analytic};
  CHECK(reference_value(0.5, theta) ==
        doctest::Approx(0.24430125595145996).epsilon(1e-12));
  CHECK_THROWS_AS((void)reference_value(0.0, theta), std::invalid_argument);
}

TEST_CASE("misspecified scale shifts the achieved in-control arl") {
  CalibrationOptions options;
  options.mc.trials = 2500;
  options.mc.seed = 606;
  const MisspecificationResult exact =
      misspecification_sigma(1.0, 0.25, 100.0, options);
  const MisspecificationResult over =
      misspecification_sigma(1.1, 0.25, 100.0, options);
  const MisspecificationResult under =
      misspecification_sigma(0.9, 0.25, 100.0, options);
  // Overestimating sigma shrinks the increments: alarms come later.
  CHECK(over.achieved.mean > exact.achieved.mean);
  CHECK(under.achieved.mean < exact.achieved.mean);
  CHECK(exact.achieved.mean == doctest::Approx(100.0).epsilon(0.10));
  CHECK(exact.calibration.h == over.calibration.h);  // same nominal calibration

  CHECK_THROWS_AS((void)misspecification_sigma(1.1, 0.25, 100.0, options,
                                               SchemeFamily::SsrSr),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)misspecification_sigma(0.0, 0.25, 100.0, options),
                  std::invalid_argument);
}

TEST_CASE("misspecified law shifts the achieved in-control arl") {
  CalibrationOptions options;
  options.mc.trials = 2000;
  options.mc.seed = 607;
  // At large zeta the heavy-tailed law produces markedly more false alarms;
  // at small zeta the effect is weak and can even reverse sign.
  const MisspecificationResult laplace = misspecification_distribution(
      DistributionSpec::parse("laplace:var1"), 0.75, 100.0, options);
  CHECK(laplace.achieved.mean < 90.0);
  CHECK_THROWS_AS(
      (void)misspecification_distribution(
          DistributionSpec::parse("laplace:var1:shift=1"), 0.25, 100.0,
          options),
      std::invalid_argument);
}

TEST_CASE("family tokens round trip") {
  for (SchemeFamily family :
       {SchemeFamily::NormalCusum, SchemeFamily::NormalSr,
        SchemeFamily::SsrCusum, SchemeFamily::SsrSr}) {
    CHECK(family_from_token(family_token(family)) == family);
  }
  CHECK_THROWS_AS((void)family_from_token("ssr"), std::invalid_argument);
}

TEST_CASE("control limit table csv round trip and interpolation") {
  ControlLimitTable table;
  table.family_token = "ssr-sr";
  table.score_token = "wilcoxon";
  table.zetas = {0.1, 0.25, 0.5};
  table.arl0s = {100.0, 1000.0};
  table.cells = {
      {4.49, 0.03, false}, {6.75, 0.05, false}, {4.20, 0.02, false},
      {6.20, 0.04, true},  {3.95, 0.02, false}, {5.90, 0.03, false},
  };

  std::stringstream io;
  table.write_csv(io);
  const ControlLimitTable parsed = ControlLimitTable::read_csv(io);
  CHECK(parsed.family_token == table.family_token);
  CHECK(parsed.score_token == table.score_token);
  REQUIRE(parsed.zetas == table.zetas);
  REQUIRE(parsed.arl0s == table.arl0s);
  REQUIRE(parsed.cells.size() == table.cells.size());
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    CHECK(parsed.cells[i].h == table.cells[i].h);
    CHECK(parsed.cells[i].se == table.cells[i].se);
    CHECK(parsed.cells[i].flagged == table.cells[i].flagged);
  }

  // Exact on the grid.
  CHECK(parsed.interpolate_h(0.25, 100.0) == doctest::Approx(4.20));
  CHECK(parsed.interpolate_h(0.5, 1000.0) == doctest::Approx(5.90));
  // Linear in zeta between rows.
  CHECK(parsed.interpolate_h(0.175, 100.0) ==
        doctest::Approx(0.5 * (4.49 + 4.20)).epsilon(1e-12));
  // Log-linear in ARL0 between columns.
  const double half_log = std::exp(0.5 * (std::log(100.0) + std::log(1000.0)));
  CHECK(parsed.interpolate_h(0.1, half_log) ==
        doctest::Approx(0.5 * (4.49 + 6.75)).epsilon(1e-12));
  CHECK_THROWS_AS((void)parsed.interpolate_h(0.05, 100.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)parsed.interpolate_h(0.25, 5000.0),
                  std::invalid_argument);
}

TEST_CASE("malformed control limit tables are rejected") {
  auto reject = [](const std::string& text) {
    std::stringstream io(text);
    CHECK_THROWS_AS((void)ControlLimitTable::read_csv(io),
                    std::invalid_argument);
  };
  reject("");
  reject("h,100\n0.25,4.2(0.1)\n");          // header must start with zeta
  reject("zeta,100\n0.25,4.2\n");            // cell lacks (se)
  reject("zeta,100\n0.25,4.2(0.1),9(1)\n");  // row wider than header
  reject("zeta,abc\n0.25,4.2(0.1)\n");       // unparseable ARL0
}
