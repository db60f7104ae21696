#pragma once

// Experiment orchestration: config -> pipeline -> time series -> CSV.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "onecomp/config.hpp"

namespace onecomp::runner {

struct Column {
  std::string name;
  bool complex_valued = false;
  std::vector<cplx> values;
};

struct RunMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

struct RunResult {
  std::vector<double> t;
  std::vector<Column> columns;  // config order
  RunMeta meta;

  const Column& column(const std::string& name) const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides ensemble.master_seed
  std::size_t workers = 0;            // 0 = default_workers()
};

// Module errors are rethrown with the model and mode prepended.
RunResult run_experiment(const config::ExperimentConfig& cfg, const RunOptions& options = {});

struct SweepAxis {
  std::string key;                  // e.g. "control.strength"
  std::vector<std::string> values;  // raw values, parsed like config scalars
};

// Parses "key=v1,v2,...".
SweepAxis parse_sweep_axis(const std::string& spec);

struct SweepCell {
  std::size_t index = 0;
  std::vector<std::pair<std::string, std::string>> assignment;
  config::ExperimentConfig config;
  RunResult result;
};

// Cartesian product of the axes, first axis slowest. Cell i runs with seed
// derive_seed(master, i); an empty axis list runs the config unchanged.
std::vector<SweepCell> run_sweep(const config::ExperimentConfig& cfg,
                                 const std::vector<SweepAxis>& axes, const RunOptions& options = {});

// Header "t,<obs>..." with complex observables as re_<obs>,im_<obs>; 17
// significant digits.
void write_csv(const RunResult& result, std::ostream& out);
// One row per cell: cell, swept keys, seed, then each observable at t_end.
void write_summary_csv(const std::vector<SweepCell>& cells, std::ostream& out);
// JSON sidecar with the run metadata.
std::string meta_json(const RunResult& result, const config::ExperimentConfig& cfg);

std::string version();

}  // namespace onecomp::runner
