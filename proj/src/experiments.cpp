#include "ssrqd/experiments.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "ssrqd/calibrate.hpp"
#include "ssrqd/csvio.hpp"
#include "ssrqd/runlength.hpp"
#include "ssrqd/version.hpp"

namespace ssrqd {

namespace {

// Deterministic sub-seed per study cell, so cells are independent while the
// whole preset stays a pure function of the master seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  auto scramble = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return scramble(base) ^ scramble(salt + 0x9e3779b97f4a7c15ull);
}

std::string cell(double mean, double se) {
  return csv::format_fixed(mean, 2) + "(" + csv::format_fixed(se, 2) + ")";
}

struct PresetContext {
  ExperimentOptions options;
  std::int64_t trials = 0;
  std::vector<std::filesystem::path> files;

  std::ofstream open_csv(const std::string& name) {
    const std::filesystem::path path = options.out_dir / name;
    std::ofstream out(path, std::ios::binary);  // \n endings on all platforms
    if (!out) {
      throw std::runtime_error("experiment: cannot write " + path.string());
    }
    files.push_back(path);
    return out;
  }

  McOptions mc(std::uint64_t salt) const {
    McOptions m;
    m.trials = trials;
    m.seed = derive_seed(options.seed, salt);
    m.workers = options.workers;
    return m;
  }

  CalibrationOptions calibration(std::uint64_t salt) const {
    CalibrationOptions c;
    c.mc = mc(salt);
    c.rel_tol = 0.02;
    return c;
  }
};

const DistributionSpec kNormal(Family::Normal, ScaleConvention::UnitVariance);

// --- table6: theta0 reference values ----------------------------------------

void preset_table6(PresetContext& ctx) {
  std::ofstream out = ctx.open_csv("table6.csv");
  out << "distribution,theta0,theta0_quadrature\n";
  const char* specs[] = {"normal:var1", "laplace:var1", "t4:var1",
                         "t3:var1",     "t2:iqr",       "t1:iqr"};
  for (const char* text : specs) {
    const DistributionSpec spec = DistributionSpec::parse(text);
    out << text << ',' << csv::format_fixed(theta0(spec).value, 6) << ','
        << csv::format_fixed(theta0_quadrature(spec).value, 6) << "\n";
  }
}

// --- table3: score vs optimal-score correlations ----------------------------

void preset_table3(PresetContext& ctx) {
  const std::pair<const char*, DistributionSpec> columns[] = {
      {"normal", DistributionSpec(Family::Normal, ScaleConvention::Raw)},
      {"t4", DistributionSpec(Family::StudentT, ScaleConvention::Raw, 1.0, 0.0, 4)},
      {"t3", DistributionSpec(Family::StudentT, ScaleConvention::Raw, 1.0, 0.0, 3)},
      {"t2", DistributionSpec(Family::StudentT, ScaleConvention::Raw, 1.0, 0.0, 2)},
      {"t1", DistributionSpec(Family::StudentT, ScaleConvention::Raw, 1.0, 0.0, 1)},
  };
  const ScoreFunction scores[] = {ScoreFunction::wilcoxon(),
                                  ScoreFunction::van_der_waerden()};
  {
    // Correlations over the discrete rank grid at step 100: what a scheme
    // actually sees after a typical stretch of monitoring.
    std::ofstream out = ctx.open_csv("table3.csv");
    out << "score,normal,t4,t3,t2,t1\n";
    for (const ScoreFunction& score : scores) {
      out << score.name();
      for (const auto& [name, spec] : columns) {
        out << ',' << csv::format_fixed(score_correlation_at(score, spec, 100), 2);
      }
      out << "\n";
    }
  }
  {
    std::ofstream out = ctx.open_csv("table3_asymptotic.csv");
    out << "score,normal,t4,t3,t2,t1\n";
    for (const ScoreFunction& score : scores) {
      out << score.name();
      for (const auto& [name, spec] : columns) {
        out << ',' << csv::format_fixed(score_correlation(score, spec), 4);
      }
      out << "\n";
    }
  }
}

// --- tables 1a/1b: scale misspecification -----------------------------------

void preset_table1(PresetContext& ctx, const std::string& name,
                   const double sigma_hats[2]) {
  const double zetas[] = {0.25, 0.5};
  const double arl0s[] = {100.0, 500.0, 1000.0};
  // One calibration per (zeta, ARL0) column pair, reused for both rows.
  std::map<std::pair<double, double>, CalibrationResult> limits;
  std::uint64_t salt = 100;
  for (double z : zetas) {
    for (double a : arl0s) {
      limits.emplace(std::make_pair(z, a),
                     find_control_limit(SchemeFamily::NormalSr,
                                        ScoreFunction::wilcoxon(), z, a,
                                        ctx.calibration(++salt), kNormal));
    }
  }
  std::ofstream out = ctx.open_csv(name + ".csv");
  out << "sigma_hat,zeta";
  for (double a : arl0s) out << ',' << csv::format(a);
  out << "\n";
  for (int row = 0; row < 2; ++row) {
    for (double z : zetas) {
      out << csv::format(sigma_hats[row]) << ',' << csv::format(z);
      for (double a : arl0s) {
        const CalibrationResult& calib = limits.at({z, a});
        DetectorConfig config;
        config.family = SchemeFamily::NormalSr;
        config.zeta = z;
        config.h = calib.h;
        config.sigma = sigma_hats[row];
        McOptions mc = ctx.mc(++salt);
        mc.cap = static_cast<std::int64_t>(300 * a);
        const RunLengthSummary s = estimate_icarl(config, kNormal, mc);
        out << ',' << cell(s.mean, s.std_error);
      }
      out << "\n";
    }
  }
}

// --- table2: non-normal data through the normal scheme ----------------------

void preset_table2(PresetContext& ctx) {
  const double zetas[] = {0.1, 0.25, 0.5, 0.75};
  const double arl0s[] = {500.0, 1000.0};
  const std::pair<const char*, const char*> scenarios[] = {
      {"logistic", "logistic:var1"},
      {"laplace", "laplace:var1"},
      {"t3", "t3:var1"}};
  std::ofstream out = ctx.open_csv("table2.csv");
  out << "zeta,arl0,h";
  for (const auto& [name, text] : scenarios) out << ',' << name;
  out << "\n";
  std::uint64_t salt = 200;
  for (double z : zetas) {
    for (double a : arl0s) {
      const CalibrationResult calib =
          find_control_limit(SchemeFamily::NormalSr, ScoreFunction::wilcoxon(),
                             z, a, ctx.calibration(++salt), kNormal);
      out << csv::format(z) << ',' << csv::format(a) << ','
          << csv::format_fixed(calib.h, 2);
      for (const auto& [name, text] : scenarios) {
        DetectorConfig config;
        config.family = SchemeFamily::NormalSr;
        config.zeta = z;
        config.h = calib.h;
        McOptions mc = ctx.mc(++salt);
        mc.cap = static_cast<std::int64_t>(300 * a);
        const RunLengthSummary s =
            estimate_icarl(config, DistributionSpec::parse(text), mc);
        out << ',' << cell(s.mean, s.std_error);
      }
      out << "\n";
    }
  }
}

// --- tables 7a/7b: rank-scheme delays vs the normal approximation -----------

void preset_table7(PresetContext& ctx, const std::string& name,
                   std::int64_t tau) {
  struct Group {
    const char* label;
    const char* spec;
    double zeta;
    double h;
  };
  // Tunings target ARL0 = 500 with reference values delta1 * theta0 / 2 for
  // delta1 in {0.2, 0.5} on each law.
  const Group groups[] = {
      {"laplace_012", "laplace:var1", 0.12, 6.09},
      {"laplace_030", "laplace:var1", 0.30, 5.83},
      {"t3_015", "t3:var1", 0.15, 6.05},
      {"t3_035", "t3:var1", 0.35, 5.74},
  };
  const double deltas[] = {0.125, 0.25, 0.5, 0.75, 1.0, 1.5};
  std::ofstream out = ctx.open_csv(name + ".csv");
  out << "delta";
  for (const Group& g : groups) {
    out << ',' << g.label << "_w," << g.label << "_n";
  }
  out << "\n";
  std::uint64_t salt = 700 + static_cast<std::uint64_t>(tau);
  std::vector<std::vector<std::string>> cells(
      std::size(deltas), std::vector<std::string>(2 * std::size(groups)));
  for (std::size_t gi = 0; gi < std::size(groups); ++gi) {
    const Group& g = groups[gi];
    const DistributionSpec law = DistributionSpec::parse(g.spec);
    const Theta0Value th = theta0(law);
    for (std::size_t di = 0; di < std::size(deltas); ++di) {
      DetectorConfig config;
      config.family = SchemeFamily::SsrSr;
      config.zeta = g.zeta;
      config.h = g.h;
      ChangeScenario scenario;
      scenario.in_control = law;
      scenario.delta = deltas[di];
      scenario.tau = tau;
      const RunLengthSummary w = cadt(config, scenario, ctx.mc(++salt));
      const RunLengthSummary n =
          normal_approx_cadt(SchemeFamily::SsrSr, g.zeta, g.h, deltas[di], th,
                             tau, ctx.mc(++salt));
      cells[di][2 * gi] = cell(w.mean, w.std_error);
      cells[di][2 * gi + 1] = cell(n.mean, n.std_error);
    }
  }
  for (std::size_t di = 0; di < std::size(deltas); ++di) {
    out << csv::format(deltas[di]);
    for (const std::string& c : cells[di]) out << ',' << c;
    out << "\n";
  }
}

// --- figures: delay curves --------------------------------------------------

struct Tuning {
  const char* scheme;
  SchemeFamily family;
  double delta1;
  double zeta;
  double h;
};

// Normal-data tunings at ARL0 = 500 (delta1 = 0.5 and 0.25).
const Tuning kNormalTunings[] = {
    {"sr", SchemeFamily::SsrSr, 0.5, 0.25, 5.92},
    {"cusum", SchemeFamily::SsrCusum, 0.5, 0.25, 7.25},
    {"sr", SchemeFamily::SsrSr, 0.25, 0.125, 6.07},
    {"cusum", SchemeFamily::SsrCusum, 0.25, 0.125, 10.94},
};

void write_curve(std::ofstream& out, const std::string& scheme, double delta1,
                 double zeta, double h, const DelayCurve& curve,
                 const std::function<void(std::ofstream&, const CurvePoint&)>&
                     write_key) {
  for (const CurvePoint& p : curve.points) {
    out << scheme << ',' << csv::format(delta1) << ',' << csv::format(zeta)
        << ',' << csv::format(h) << ',';
    write_key(out, p);
    out << ',' << csv::format_fixed(p.estimate, 3) << ','
        << csv::format_fixed(p.std_error, 3) << ','
        << csv::format(p.trials) << ','
        << csv::format_fixed(p.discarded_fraction, 4) << "\n";
  }
}

void preset_fig_cadt_over_tau(PresetContext& ctx) {
  std::ofstream out = ctx.open_csv("fig_cadt_over_tau.csv");
  out << "scheme,delta1,zeta,h,tau,estimate,std_error,trials,discarded_fraction\n";
  std::vector<double> taus;
  for (int t = 0; t <= 500; t += 50) taus.push_back(t);
  const double deltas[] = {0.125, 0.5};
  std::uint64_t salt = 300;
  for (const Tuning& tuning : kNormalTunings) {
    if (tuning.delta1 != 0.5) continue;  // the published pair of figures
    for (double delta : deltas) {
      DetectorConfig config;
      config.family = tuning.family;
      config.zeta = tuning.zeta;
      config.h = tuning.h;
      ChangeScenario base;
      base.in_control = kNormal;
      base.delta = delta;
      const DelayCurve curve = delay_curve(config, base, CurveAxis::Tau, taus,
                                           ctx.mc(++salt));
      write_curve(out, std::string(tuning.scheme) + "_d" + csv::format(delta),
                  tuning.delta1, tuning.zeta, tuning.h, curve,
                  [](std::ofstream& o, const CurvePoint& p) {
                    o << csv::format(static_cast<std::int64_t>(p.grid_value));
                  });
    }
  }
}

void preset_fig_cadt_over_delta(PresetContext& ctx) {
  std::ofstream out = ctx.open_csv("fig_cadt_over_delta.csv");
  out << "scheme,delta1,zeta,h,delta,estimate,std_error,trials,discarded_fraction\n";
  const double deltas[] = {0.125, 0.25, 0.375, 0.5, 0.75, 1.0};
  std::uint64_t salt = 400;
  for (const Tuning& tuning : kNormalTunings) {
    DetectorConfig config;
    config.family = tuning.family;
    config.zeta = tuning.zeta;
    config.h = tuning.h;
    ChangeScenario base;
    base.in_control = kNormal;
    base.tau = 100;
    const DelayCurve curve = delay_curve(config, base, CurveAxis::Delta,
                                         deltas, ctx.mc(++salt));
    write_curve(out, tuning.scheme, tuning.delta1, tuning.zeta, tuning.h,
                curve, [](std::ofstream& o, const CurvePoint& p) {
                  o << csv::format(p.grid_value);
                });
  }
}

void preset_fig_sadt(PresetContext& ctx) {
  std::ofstream out = ctx.open_csv("fig_sadt.csv");
  out << "scheme,tau,delta,estimate,std_error,trials,discarded_fraction\n";
  const double deltas[] = {0.125, 0.25, 0.375, 0.5, 0.75, 1.0};
  std::vector<std::int64_t> taus = {1000};
  if (ctx.options.full_scale) taus = {500, 1000, 1500};
  std::uint64_t salt = 500;
  for (const Tuning& tuning : kNormalTunings) {
    if (tuning.delta1 != 0.5) continue;
    for (std::int64_t tau : taus) {
      DetectorConfig config;
      config.family = tuning.family;
      config.zeta = tuning.zeta;
      config.h = tuning.h;
      ChangeScenario base;
      base.in_control = kNormal;
      base.tau = tau;
      const DelayCurve curve = delay_curve(config, base, CurveAxis::Delta,
                                           deltas, ctx.mc(++salt), true);
      for (const CurvePoint& p : curve.points) {
        out << tuning.scheme << ',' << csv::format(tau) << ','
            << csv::format(p.grid_value) << ','
            << csv::format_fixed(p.estimate, 3) << ','
            << csv::format_fixed(p.std_error, 3) << ','
            << csv::format(p.trials) << ','
            << csv::format_fixed(p.discarded_fraction, 4) << "\n";
      }
    }
  }
}

using PresetFn = std::function<void(PresetContext&)>;

const std::vector<std::pair<std::string, PresetFn>>& preset_registry() {
  static const std::vector<std::pair<std::string, PresetFn>> registry = {
      {"table1a",
       [](PresetContext& ctx) {
         const double sigmas[2] = {1.1, 0.9};
         preset_table1(ctx, "table1a", sigmas);
       }},
      {"table1b",
       [](PresetContext& ctx) {
         const double sigmas[2] = {1.08, 0.92};
         preset_table1(ctx, "table1b", sigmas);
       }},
      {"table2", preset_table2},
      {"table3", preset_table3},
      {"table6", preset_table6},
      {"table7a",
       [](PresetContext& ctx) { preset_table7(ctx, "table7a", 100); }},
      {"table7b",
       [](PresetContext& ctx) { preset_table7(ctx, "table7b", 0); }},
      {"fig_cadt_over_tau", preset_fig_cadt_over_tau},
      {"fig_cadt_over_delta", preset_fig_cadt_over_delta},
      {"fig_sadt", preset_fig_sadt},
  };
  return registry;
}

}  // namespace

const std::vector<std::string>& experiment_presets() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : preset_registry()) out.push_back(name);
    return out;
  }();
  return names;
}

ExperimentResult run_experiment(const std::string& preset,
                                const ExperimentOptions& options) {
  const PresetFn* found = nullptr;
  for (const auto& [name, fn] : preset_registry()) {
    if (name == preset) {
      found = &fn;
      break;
    }
  }
  if (!found) {
    std::string known;
    for (const std::string& name : experiment_presets()) {
      if (!known.empty()) known += ", ";
      known += name;
    }
    throw std::invalid_argument("unknown experiment preset '" + preset +
                                "'; available: " + known);
  }
  if (options.out_dir.empty()) {
    throw std::invalid_argument("experiment: out_dir must be set");
  }
  std::filesystem::create_directories(options.out_dir);

  PresetContext ctx;
  ctx.options = options;
  ctx.trials = options.full_scale ? 100000 : options.trials;
  if (ctx.trials < 100) {
    throw std::invalid_argument("experiment: need at least 100 trials");
  }
  (*found)(ctx);

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["preset"] = preset;
  manifest["seed"] = options.seed;
  manifest["trials"] = ctx.trials;
  manifest["full_scale"] = options.full_scale;
  manifest["version"] = kVersion;
  std::vector<std::string> names;
  for (const auto& path : ctx.files) names.push_back(path.filename().string());
  manifest["files"] = names;
  const std::filesystem::path manifest_path = options.out_dir / "manifest.json";
  {
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("experiment: cannot write manifest.json");
    }
    out << manifest.dump(2) << "\n";
  }
  ExperimentResult result;
  result.preset = preset;
  result.files = ctx.files;
  result.files.push_back(manifest_path);
  return result;
}

}  // namespace ssrqd
