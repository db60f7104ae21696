#pragma once

// Experiment configuration: a YAML document with the sections model, solver,
// control, ensemble and output. Unknown keys are rejected and every violation
// is reported with the path of the offending field.

#include <cstdint>
#include <string>
#include <vector>

#include "onecomp/common.hpp"
#include "onecomp/one_component.hpp"
#include "onecomp/pulses.hpp"
#include "onecomp/qsd.hpp"

namespace onecomp::config {

enum class ModelType { generic_matrix, two_level_adiabatic, spin_bath, qsd_multilevel };
enum class ControlMode { none, leo_rotating, leo_lab, scaled_hamiltonian, parity_kick, zeno };

struct Issue {
  std::string path;
  std::string message;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<Issue> issues);
  const std::vector<Issue>& issues() const { return issues_; }

 private:
  std::vector<Issue> issues_;
};

struct ModelConfig {
  ModelType type = ModelType::generic_matrix;

  // generic_matrix
  Mat matrix;
  bool hamiltonian = false;  // matrix is H and M = -iH
  Vec target;

  // two_level_adiabatic: H = (v (t - t_c) sigma_z + w sigma_x) / 2
  double sweep_rate = 0.0;
  double gap = 0.0;
  double center = 0.0;

  // spin_bath
  double omega = 1.0;  // also E_0 for qsd_multilevel
  std::vector<double> nuclear;
  std::vector<double> jz;
  std::vector<double> jperp;
  Eigen::MatrixXd bz;
  Eigen::MatrixXd bxy;

  // qsd_multilevel
  std::size_t levels = 0;
  std::vector<double> energies;  // E_1 .. E_{n-1}
  std::vector<cplx> kappa;
  double gamma = 0.0;
  std::vector<cplx> amplitudes;
  models::NoiseModel noise_model = models::NoiseModel::independent;

  bool operator==(const ModelConfig&) const;
};

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 0.0;
  reduced::VolterraScheme scheme = reduced::VolterraScheme::trapezoid;
  bool operator==(const SolverConfig&) const = default;
};

struct ControlConfig {
  ControlMode mode = ControlMode::none;
  control::PulseParams pulses;
  std::size_t projections = 0;  // zeno
  bool operator==(const ControlConfig&) const = default;
};

struct EnsembleConfig {
  std::size_t n_traj = 0;
  std::uint64_t master_seed = 0;
  bool operator==(const EnsembleConfig&) const = default;
};

struct OutputConfig {
  std::string path;
  std::vector<std::string> observables;
  std::size_t stride = 1;
  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  ModelConfig model;
  SolverConfig solver;
  ControlConfig control;
  EnsembleConfig ensemble;
  OutputConfig output;
  bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError listing every violation found.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical YAML with every field spelled out; parse(serialize(c)) == c.
std::string serialize(const ExperimentConfig& cfg);

// Overrides one scalar field, e.g. "control.strength", "model.gamma".
// Values accept plain numbers and multiples of pi ("pi", "4pi", "0.5*pi").
// Throws ConfigError for paths outside the schema or invalid results.
ExperimentConfig with_override(const ExperimentConfig& cfg, const std::string& key_path,
                               const std::string& value);

// Observables a model/mode combination can emit; complex ones are marked.
struct ObservableInfo {
  std::string name;
  bool complex_valued = false;
};
std::vector<ObservableInfo> available_observables(ModelType model, ControlMode mode);
std::vector<std::string> default_observables(ModelType model);

std::string to_string(ModelType m);
std::string to_string(ControlMode m);

// 64-bit FNV-1a over the canonical serialization.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace onecomp::config
