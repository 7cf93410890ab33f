#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ssrqd {

struct ExperimentOptions {
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
  std::int64_t trials = 20000;  // per Monte Carlo estimate
  int workers = 0;              // 0: SSRQD_THREADS, then hardware
  bool full_scale = false;      // 100k trials, publication scale
};

struct ExperimentResult {
  std::string preset;
  std::vector<std::filesystem::path> files;  // everything written, manifest last
};

// Named studies reproducing the toolkit's reference tables and figures.
// Every preset writes CSV artifacts plus a manifest.json into out_dir; all
// bytes are a pure function of (preset, seed, trials, full_scale), never of
// the worker count.
ExperimentResult run_experiment(const std::string& preset,
                                const ExperimentOptions& options);

const std::vector<std::string>& experiment_presets();

}  // namespace ssrqd
