#include "onecomp/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace onecomp::config {

namespace {

const std::vector<std::string> kSections{"model", "solver", "control", "ensemble", "output"};

std::vector<std::string> model_keys(ModelType t) {
  switch (t) {
    case ModelType::generic_matrix:
      return {"type", "matrix", "form", "target"};
    case ModelType::two_level_adiabatic:
      return {"type", "sweep_rate", "gap", "center"};
    case ModelType::spin_bath:
      return {"type", "omega", "nuclear", "jz", "jperp", "bz", "bxy"};
    case ModelType::qsd_multilevel:
      return {"type", "levels", "omega", "energies", "kappa", "gamma", "amplitudes",
              "noise_model", "correlation"};
  }
  return {};
}

const std::vector<std::string> kSolverKeys{"dt", "t_end", "scheme"};
const std::vector<std::string> kControlKeys{"mode",  "kind", "strength", "duration", "period",
                                            "noise", "sign", "seed",     "projections"};
const std::vector<std::string> kEnsembleKeys{"n_traj", "master_seed"};
const std::vector<std::string> kOutputKeys{"path", "observables", "stride"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_model_type(const std::string& s, ModelType& out) {
  for (auto t : {ModelType::generic_matrix, ModelType::two_level_adiabatic, ModelType::spin_bath,
                 ModelType::qsd_multilevel}) {
    if (to_string(t) == s) {
      out = t;
      return true;
    }
  }
  return false;
}

bool parse_control_mode(const std::string& s, ControlMode& out) {
  for (auto m : {ControlMode::none, ControlMode::leo_rotating, ControlMode::leo_lab,
                 ControlMode::scaled_hamiltonian, ControlMode::parity_kick, ControlMode::zeno}) {
    if (to_string(m) == s) {
      out = m;
      return true;
    }
  }
  return false;
}

// Plain number, or a multiple of pi: "pi", "-2pi", "0.5*pi".
std::optional<double> parse_number(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  if (s.empty()) return std::nullopt;
  double scale = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    scale = std::numbers::pi;
    s.resize(s.size() - 2);
    if (!s.empty() && s.back() == '*') s.pop_back();
    if (s.empty() || s == "+") return scale;
    if (s == "-") return -scale;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v * scale;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

class Reader {
 public:
  std::vector<Issue> issues;

  void add(const std::string& path, const std::string& msg) { issues.push_back({path, msg}); }

  void check_keys(const YAML::Node& node, const std::string& path,
                  const std::vector<std::string>& allowed) {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        add(path.empty() ? key : path + "." + key, "unknown key '" + key + "'");
      }
    }
  }

  std::optional<double> number(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) {
      add(path, "expected a number");
      return std::nullopt;
    }
    auto v = parse_number(node.Scalar());
    if (!v) add(path, "expected a number, got '" + node.Scalar() + "'");
    return v;
  }

  double number_or(const YAML::Node& parent, const std::string& key, const std::string& path,
                   double fallback, bool required = false) {
    const auto node = parent[key];
    if (!node) {
      if (required) add(path + "." + key, "missing required key");
      return fallback;
    }
    return number(node, path + "." + key).value_or(fallback);
  }

  std::optional<std::uint64_t> integer(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) {
      add(path, "expected a non-negative integer");
      return std::nullopt;
    }
    const std::string& s = node.Scalar();
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
      add(path, "expected a non-negative integer, got '" + s + "'");
      return std::nullopt;
    }
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      add(path, "integer out of range");
      return std::nullopt;
    }
  }

  std::uint64_t integer_or(const YAML::Node& parent, const std::string& key,
                           const std::string& path, std::uint64_t fallback, bool required = false) {
    const auto node = parent[key];
    if (!node) {
      if (required) add(path + "." + key, "missing required key");
      return fallback;
    }
    return integer(node, path + "." + key).value_or(fallback);
  }

  std::optional<std::string> word(const YAML::Node& parent, const std::string& key,
                                  const std::string& path, bool required = false) {
    const auto node = parent[key];
    if (!node) {
      if (required) add(path + "." + key, "missing required key");
      return std::nullopt;
    }
    if (!node.IsScalar()) {
      add(path + "." + key, "expected a string");
      return std::nullopt;
    }
    return node.Scalar();
  }

  bool boolean_or(const YAML::Node& parent, const std::string& key, const std::string& path,
                  bool fallback) {
    const auto node = parent[key];
    if (!node) return fallback;
    if (node.IsScalar()) {
      const auto& s = node.Scalar();
      if (s == "true") return true;
      if (s == "false") return false;
    }
    add(path + "." + key, "expected true or false");
    return fallback;
  }

  // Number or [re, im].
  std::optional<cplx> complex_number(const YAML::Node& node, const std::string& path) {
    if (node.IsSequence()) {
      if (node.size() != 2) {
        add(path, "complex entries are written [re, im]");
        return std::nullopt;
      }
      auto re = number(node[0], path + "[0]");
      auto im = number(node[1], path + "[1]");
      if (!re || !im) return std::nullopt;
      return cplx(*re, *im);
    }
    auto v = number(node, path);
    if (!v) return std::nullopt;
    return cplx(*v, 0.0);
  }

  std::vector<double> reals(const YAML::Node& node, const std::string& path) {
    std::vector<double> out;
    if (!node.IsSequence()) {
      add(path, "expected a list of numbers");
      return out;
    }
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(number(node[i], path + "[" + std::to_string(i) + "]").value_or(0.0));
    }
    return out;
  }

  std::vector<cplx> complexes(const YAML::Node& node, const std::string& path) {
    std::vector<cplx> out;
    if (!node.IsSequence()) {
      add(path, "expected a list");
      return out;
    }
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(complex_number(node[i], path + "[" + std::to_string(i) + "]").value_or(0.0));
    }
    return out;
  }

  std::optional<Mat> matrix(const YAML::Node& node, const std::string& path) {
    if (!node.IsSequence() || node.size() == 0) {
      add(path, "expected a non-empty list of rows");
      return std::nullopt;
    }
    const auto n = static_cast<Eigen::Index>(node.size());
    Mat m = Mat::Zero(n, n);
    bool ok = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = complexes(node[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
      if (static_cast<Eigen::Index>(row.size()) != n) {
        add(path + "[" + std::to_string(i) + "]", "matrix must be square");
        ok = false;
        continue;
      }
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    if (!ok) return std::nullopt;
    return m;
  }

  std::optional<Eigen::MatrixXd> real_matrix(const YAML::Node& node, const std::string& path) {
    if (!node.IsSequence()) {
      add(path, "expected a list of rows");
      return std::nullopt;
    }
    const auto n = static_cast<Eigen::Index>(node.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = reals(node[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
      if (static_cast<Eigen::Index>(row.size()) != n) {
        add(path + "[" + std::to_string(i) + "]", "matrix must be square");
        return std::nullopt;
      }
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
  }
};

void check_bath_matrix(Reader& r, const Eigen::MatrixXd& b, std::size_t n, const std::string& path) {
  if (b.size() == 0) return;
  if (b.rows() != static_cast<Eigen::Index>(n)) {
    r.add(path, "must be N x N with N the number of nuclear spins");
    return;
  }
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    if (b(i, i) != 0.0) r.add(path, "diagonal must be zero");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (b(i, j) != b(j, i)) {
        r.add(path, "must be symmetric (entry " + std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

void read_model(Reader& r, const YAML::Node& node, ExperimentConfig& cfg) {
  const std::string path = "model";
  ModelConfig& m = cfg.model;
  const auto type = r.word(node, "type", path, true);
  if (!type) return;
  if (!parse_model_type(*type, m.type)) {
    r.add("model.type", "unknown model type '" + *type + "'");
    return;
  }
  r.check_keys(node, path, model_keys(m.type));

  switch (m.type) {
    case ModelType::generic_matrix: {
      if (!node["matrix"]) {
        r.add("model.matrix", "missing required key");
        break;
      }
      const auto mat = r.matrix(node["matrix"], "model.matrix");
      if (!mat) break;
      m.matrix = *mat;
      const auto n = m.matrix.rows();
      if (n < 2) r.add("model.matrix", "need at least a 2 x 2 matrix");
      if (auto form = r.word(node, "form", path)) {
        if (*form == "hamiltonian") {
          m.hamiltonian = true;
        } else if (*form != "generator") {
          r.add("model.form", "expected 'generator' or 'hamiltonian'");
        }
      }
      if (m.hamiltonian && (m.matrix - m.matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        r.add("model.matrix", "hamiltonian form requires a Hermitian matrix");
      }
      if (node["target"]) {
        const auto t = r.complexes(node["target"], "model.target");
        if (static_cast<Eigen::Index>(t.size()) != n) {
          r.add("model.target", "length must match the matrix dimension");
          break;
        }
        m.target = Eigen::Map<const Vec>(t.data(), n);
      } else {
        m.target = Vec::Unit(n, 0);
      }
      if (std::abs(m.target.squaredNorm() - 1.0) > 1e-10) {
        r.add("model.target", "target must be normalized");
      }
      break;
    }
    case ModelType::two_level_adiabatic:
      m.sweep_rate = r.number_or(node, "sweep_rate", path, 0.0, true);
      m.gap = r.number_or(node, "gap", path, 0.0, true);
      m.center = r.number_or(node, "center", path, std::nan(""));
      if (node["gap"] && !(std::abs(m.gap) > 0.0)) r.add("model.gap", "gap must be nonzero");
      break;
    case ModelType::spin_bath: {
      m.omega = r.number_or(node, "omega", path, 0.0, true);
      for (const char* key : {"nuclear", "jz", "jperp"}) {
        if (!node[key]) r.add(std::string("model.") + key, "missing required key");
      }
      if (node["nuclear"]) m.nuclear = r.reals(node["nuclear"], "model.nuclear");
      if (node["jz"]) m.jz = r.reals(node["jz"], "model.jz");
      if (node["jperp"]) m.jperp = r.reals(node["jperp"], "model.jperp");
      const std::size_t n = m.nuclear.size();
      if (node["nuclear"] && n == 0) r.add("model.nuclear", "need at least one nuclear spin");
      if (node["jz"] && m.jz.size() != n) r.add("model.jz", "length must match model.nuclear");
      if (node["jperp"] && m.jperp.size() != n) r.add("model.jperp", "length must match model.nuclear");
      if (node["bz"]) {
        if (auto b = r.real_matrix(node["bz"], "model.bz")) m.bz = *b;
        check_bath_matrix(r, m.bz, n, "model.bz");
      }
      if (node["bxy"]) {
        if (auto b = r.real_matrix(node["bxy"], "model.bxy")) m.bxy = *b;
        check_bath_matrix(r, m.bxy, n, "model.bxy");
      }
      break;
    }
    case ModelType::qsd_multilevel: {
      m.levels = r.integer_or(node, "levels", path, 0, true);
      if (node["levels"] && m.levels < 2) r.add("model.levels", "need at least two levels");
      m.omega = r.number_or(node, "omega", path, 1.0);
      m.gamma = r.number_or(node, "gamma", path, 0.0, true);
      if (node["gamma"] && !(m.gamma > 0.0)) r.add("model.gamma", "gamma must be positive");
      if (m.levels < 2) break;
      const std::size_t excited = m.levels - 1;
      if (node["energies"]) {
        m.energies = r.reals(node["energies"], "model.energies");
        if (m.energies.size() != excited) {
          r.add("model.energies", "need one energy per excited level (levels - 1)");
        }
      } else {
        m.energies.assign(excited, 0.0);
      }
      if (!node["kappa"]) {
        r.add("model.kappa", "missing required key");
      } else if (node["kappa"].IsSequence() && node["kappa"].size() != 2) {
        m.kappa = r.complexes(node["kappa"], "model.kappa");
        if (m.kappa.size() != excited) r.add("model.kappa", "need one coupling per excited level");
      } else if (node["kappa"].IsSequence() && excited == 2) {
        m.kappa = r.complexes(node["kappa"], "model.kappa");
      } else {
        m.kappa.assign(excited, r.complex_number(node["kappa"], "model.kappa").value_or(0.0));
      }
      if (node["amplitudes"]) {
        m.amplitudes = r.complexes(node["amplitudes"], "model.amplitudes");
        if (m.amplitudes.size() != m.levels) r.add("model.amplitudes", "need one amplitude per level");
      } else {
        m.amplitudes.assign(m.levels, cplx(1.0 / std::sqrt(static_cast<double>(m.levels)), 0.0));
      }
      double norm = 0.0;
      for (const auto& a : m.amplitudes) norm += std::norm(a);
      if (std::abs(norm - 1.0) > 1e-10) {
        r.add("model.amplitudes", "amplitudes must be normalized (sum |a_j|^2 = " + fmt(norm) + ")");
      }
      if (auto nm = r.word(node, "noise_model", path)) {
        if (*nm == "shared") {
          m.noise_model = models::NoiseModel::shared;
        } else if (*nm != "independent") {
          r.add("model.noise_model", "expected 'independent' or 'shared'");
        }
      }
      if (auto corr = r.word(node, "correlation", path)) {
        if (*corr != "exponential") {
          r.add("model.correlation", "only exponential bath correlation is supported");
        }
      }
      break;
    }
  }
}

void read_solver(Reader& r, const YAML::Node& node, ExperimentConfig& cfg) {
  r.check_keys(node, "solver", kSolverKeys);
  cfg.solver.dt = r.number_or(node, "dt", "solver", cfg.solver.dt);
  cfg.solver.t_end = r.number_or(node, "t_end", "solver", 0.0, true);
  if (!(cfg.solver.dt > 0.0)) r.add("solver.dt", "dt must be positive");
  if (node["t_end"] && !(cfg.solver.t_end > 0.0)) r.add("solver.t_end", "t_end must be positive");
  if (auto s = r.word(node, "scheme", "solver")) {
    if (*s == "predictor_corrector") {
      cfg.solver.scheme = reduced::VolterraScheme::predictor_corrector;
    } else if (*s != "trapezoid") {
      r.add("solver.scheme", "expected 'trapezoid' or 'predictor_corrector'");
    }
  }
}

void read_control(Reader& r, const YAML::Node& node, ExperimentConfig& cfg) {
  r.check_keys(node, "control", kControlKeys);
  ControlConfig& c = cfg.control;
  if (auto m = r.word(node, "mode", "control")) {
    if (!parse_control_mode(*m, c.mode)) r.add("control.mode", "unknown control mode '" + *m + "'");
  }
  if (auto k = r.word(node, "kind", "control")) {
    if (!control::parse_pulse_kind(*k, c.pulses.kind)) {
      r.add("control.kind", "unknown pulse kind '" + *k + "'");
    }
  }
  c.pulses.strength = r.number_or(node, "strength", "control", 0.0);
  c.pulses.duration = r.number_or(node, "duration", "control", 0.0);
  c.pulses.period = r.number_or(node, "period", "control", 0.0);
  c.pulses.noise = r.number_or(node, "noise", "control", 0.0);
  if (auto s = r.word(node, "sign", "control")) {
    if (!control::parse_sign_policy(*s, c.pulses.sign)) {
      r.add("control.sign", "unknown sign policy '" + *s + "'");
    }
  }
  c.pulses.seed = r.integer_or(node, "seed", "control", 0);
  c.projections = r.integer_or(node, "projections", "control", 0);
}

void read_ensemble(Reader& r, const YAML::Node& node, ExperimentConfig& cfg) {
  r.check_keys(node, "ensemble", kEnsembleKeys);
  cfg.ensemble.n_traj = r.integer_or(node, "n_traj", "ensemble", 0);
  cfg.ensemble.master_seed = r.integer_or(node, "master_seed", "ensemble", 0);
}

void read_output(Reader& r, const YAML::Node& node, ExperimentConfig& cfg) {
  r.check_keys(node, "output", kOutputKeys);
  if (auto p = r.word(node, "path", "output")) cfg.output.path = *p;
  cfg.output.stride = r.integer_or(node, "stride", "output", 1);
  if (cfg.output.stride == 0) r.add("output.stride", "stride must be positive");
  if (node["observables"]) {
    const auto obs = node["observables"];
    if (!obs.IsSequence()) {
      r.add("output.observables", "expected a list of names");
    } else {
      for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!obs[i].IsScalar()) {
          r.add("output.observables[" + std::to_string(i) + "]", "expected a name");
          continue;
        }
        cfg.output.observables.push_back(obs[i].Scalar());
      }
    }
  }
}

bool mode_supported(ModelType model, ControlMode mode) {
  switch (model) {
    case ModelType::generic_matrix:
      return mode == ControlMode::none || mode == ControlMode::leo_rotating ||
             mode == ControlMode::parity_kick || mode == ControlMode::zeno;
    case ModelType::two_level_adiabatic:
      return mode == ControlMode::none || mode == ControlMode::leo_lab ||
             mode == ControlMode::scaled_hamiltonian || mode == ControlMode::zeno;
    case ModelType::spin_bath:
    case ModelType::qsd_multilevel:
      return mode == ControlMode::none || mode == ControlMode::leo_rotating;
  }
  return false;
}

void cross_checks(Reader& r, ExperimentConfig& cfg) {
  const auto& model = cfg.model;
  auto& ctl = cfg.control;
  if (model.type == ModelType::two_level_adiabatic && std::isnan(model.center)) {
    cfg.model.center = 0.5 * cfg.solver.t_end;
  }
  if (!mode_supported(model.type, ctl.mode)) {
    r.add("control.mode", "mode '" + to_string(ctl.mode) + "' is not available for model '" +
                              to_string(model.type) + "'");
  }
  const bool pulsed = ctl.mode == ControlMode::leo_rotating || ctl.mode == ControlMode::leo_lab ||
                      ctl.mode == ControlMode::scaled_hamiltonian || ctl.mode == ControlMode::parity_kick;
  if (pulsed && ctl.pulses.kind == control::PulseKind::none) {
    r.add("control.kind", "mode '" + to_string(ctl.mode) + "' needs a pulse kind");
  }
  if (!pulsed && ctl.pulses.kind != control::PulseKind::none) {
    r.add("control.kind", "pulses are only used by leo_rotating, leo_lab, scaled_hamiltonian and parity_kick");
  }
  if (ctl.pulses.kind != control::PulseKind::none) {
    try {
      control::PulseSequence seq(ctl.pulses);
    } catch (const Error& e) {
      r.add("control", e.what());
    }
  }
  if (ctl.mode == ControlMode::parity_kick) {
    if (ctl.pulses.kind != control::PulseKind::ideal_delta) {
      r.add("control.kind", "parity_kick needs ideal_delta pulses");
    } else if (ctl.pulses.period > 0.0 && cfg.solver.dt > 0.0) {
      const double ratio = ctl.pulses.period / cfg.solver.dt;
      if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        r.add("control.period", "parity_kick needs the kick period to be a multiple of solver.dt");
      }
    }
  } else if (ctl.pulses.kind == control::PulseKind::ideal_delta) {
    r.add("control.kind", "ideal_delta pulses are only used by parity_kick");
  }
  if (ctl.mode == ControlMode::zeno && ctl.projections == 0) {
    r.add("control.projections", "zeno mode needs a positive number of projections");
  }
  if (ctl.mode != ControlMode::zeno && ctl.projections != 0) {
    r.add("control.projections", "only used by zeno mode");
  }

  if (cfg.output.observables.empty()) cfg.output.observables = default_observables(model.type);
  const auto avail = available_observables(model.type, ctl.mode);
  std::set<std::string> seen;
  bool needs_mc = false;
  for (std::size_t i = 0; i < cfg.output.observables.size(); ++i) {
    const auto& name = cfg.output.observables[i];
    const auto path = "output.observables[" + std::to_string(i) + "]";
    if (!seen.insert(name).second) r.add(path, "duplicate observable '" + name + "'");
    const bool known = std::any_of(avail.begin(), avail.end(), [&](const auto& o) { return o.name == name; });
    if (!known) {
      std::string list;
      for (const auto& o : avail) list += (list.empty() ? "" : ", ") + o.name;
      r.add(path, "observable '" + name + "' is not available here (choose from: " + list + ")");
    }
    if (name == "fidelity_mc" || name == "fidelity_stderr") needs_mc = true;
  }
  if (needs_mc && cfg.ensemble.n_traj < 2) {
    r.add("ensemble.n_traj", "Monte Carlo observables need at least two trajectories");
  }
}

void emit_number(YAML::Emitter& out, double v) { out << YAML::Value << fmt(v); }

void emit_complex(YAML::Emitter& out, cplx z) {
  if (z.imag() == 0.0) {
    out << fmt(z.real());
  } else {
    out << YAML::Flow << YAML::BeginSeq << fmt(z.real()) << fmt(z.imag()) << YAML::EndSeq;
  }
}

void emit_reals(YAML::Emitter& out, const std::vector<double>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : v) out << fmt(x);
  out << YAML::EndSeq;
}

void emit_complexes(YAML::Emitter& out, const std::vector<cplx>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (cplx z : v) emit_complex(out, z);
  out << YAML::EndSeq;
}

void emit_real_matrix(YAML::Emitter& out, const Eigen::MatrixXd& m) {
  out << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << fmt(m(i, j));
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

YAML::Node to_node(const ExperimentConfig& cfg) { return YAML::Load(serialize(cfg)); }

bool same_matrix(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}
bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

ConfigError::ConfigError(std::vector<Issue> issues)
    : Error(ErrorKind::config,
            [&] {
              std::ostringstream os;
              os << issues.size() << " configuration error(s):";
              for (const auto& i : issues) os << "\n  " << i.path << ": " << i.message;
              return os.str();
            }()),
      issues_(std::move(issues)) {}

bool ModelConfig::operator==(const ModelConfig& o) const {
  auto same_vec = [](const Vec& a, const Vec& b) {
    return a.size() == b.size() && (a.size() == 0 || a == b);
  };
  return type == o.type && same_matrix(matrix, o.matrix) && hamiltonian == o.hamiltonian &&
         same_vec(target, o.target) && sweep_rate == o.sweep_rate && gap == o.gap &&
         (center == o.center || (std::isnan(center) && std::isnan(o.center))) && omega == o.omega &&
         nuclear == o.nuclear && jz == o.jz && jperp == o.jperp && same_matrix(bz, o.bz) &&
         same_matrix(bxy, o.bxy) && levels == o.levels && energies == o.energies &&
         kappa == o.kappa && gamma == o.gamma && amplitudes == o.amplitudes &&
         noise_model == o.noise_model;
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::vector<Issue>{{"<document>", std::string("malformed YAML: ") + e.what()}});
  }
  if (!doc.IsMap()) throw ConfigError(std::vector<Issue>{{"<document>", "expected a mapping with sections"}});

  Reader r;
  ExperimentConfig cfg;
  r.check_keys(doc, "", kSections);
  auto section = [&](const std::string& name, bool required) -> std::optional<YAML::Node> {
    const auto node = doc[name];
    if (!node) {
      if (required) r.add(name, "missing required section");
      return std::nullopt;
    }
    if (node.IsNull()) return std::nullopt;
    if (!node.IsMap()) {
      r.add(name, "expected a mapping");
      return std::nullopt;
    }
    return node;
  };
  if (auto n = section("model", true)) read_model(r, *n, cfg);
  if (auto n = section("solver", true)) read_solver(r, *n, cfg);
  if (auto n = section("control", false)) read_control(r, *n, cfg);
  if (auto n = section("ensemble", false)) read_ensemble(r, *n, cfg);
  if (auto n = section("output", false)) read_output(r, *n, cfg);
  if (r.issues.empty()) cross_checks(r, cfg);
  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::vector<Issue>{{"<file>", "cannot read '" + path + "'"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;

  const auto& m = cfg.model;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "type" << YAML::Value << to_string(m.type);
  switch (m.type) {
    case ModelType::generic_matrix:
      out << YAML::Key << "form" << YAML::Value << (m.hamiltonian ? "hamiltonian" : "generator");
      out << YAML::Key << "matrix" << YAML::Value << YAML::BeginSeq;
      for (Eigen::Index i = 0; i < m.matrix.rows(); ++i) {
        out << YAML::Flow << YAML::BeginSeq;
        for (Eigen::Index j = 0; j < m.matrix.cols(); ++j) emit_complex(out, m.matrix(i, j));
        out << YAML::EndSeq;
      }
      out << YAML::EndSeq;
      out << YAML::Key << "target" << YAML::Value
          << YAML::Flow << YAML::BeginSeq;
      for (Eigen::Index i = 0; i < m.target.size(); ++i) emit_complex(out, m.target(i));
      out << YAML::EndSeq;
      break;
    case ModelType::two_level_adiabatic:
      out << YAML::Key << "sweep_rate";
      emit_number(out, m.sweep_rate);
      out << YAML::Key << "gap";
      emit_number(out, m.gap);
      out << YAML::Key << "center";
      emit_number(out, m.center);
      break;
    case ModelType::spin_bath:
      out << YAML::Key << "omega";
      emit_number(out, m.omega);
      out << YAML::Key << "nuclear" << YAML::Value;
      emit_reals(out, m.nuclear);
      out << YAML::Key << "jz" << YAML::Value;
      emit_reals(out, m.jz);
      out << YAML::Key << "jperp" << YAML::Value;
      emit_reals(out, m.jperp);
      if (m.bz.size() != 0) {
        out << YAML::Key << "bz" << YAML::Value;
        emit_real_matrix(out, m.bz);
      }
      if (m.bxy.size() != 0) {
        out << YAML::Key << "bxy" << YAML::Value;
        emit_real_matrix(out, m.bxy);
      }
      break;
    case ModelType::qsd_multilevel:
      out << YAML::Key << "levels" << YAML::Value << m.levels;
      out << YAML::Key << "omega";
      emit_number(out, m.omega);
      out << YAML::Key << "energies" << YAML::Value;
      emit_reals(out, m.energies);
      out << YAML::Key << "kappa" << YAML::Value;
      emit_complexes(out, m.kappa);
      out << YAML::Key << "gamma";
      emit_number(out, m.gamma);
      out << YAML::Key << "amplitudes" << YAML::Value;
      emit_complexes(out, m.amplitudes);
      out << YAML::Key << "noise_model" << YAML::Value
          << (m.noise_model == models::NoiseModel::shared ? "shared" : "independent");
      out << YAML::Key << "correlation" << YAML::Value << "exponential";
      break;
  }
  out << YAML::EndMap;

  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt";
  emit_number(out, cfg.solver.dt);
  out << YAML::Key << "t_end";
  emit_number(out, cfg.solver.t_end);
  out << YAML::Key << "scheme" << YAML::Value
      << (cfg.solver.scheme == reduced::VolterraScheme::trapezoid ? "trapezoid" : "predictor_corrector");
  out << YAML::EndMap;

  const auto& c = cfg.control;
  out << YAML::Key << "control" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << to_string(c.mode);
  out << YAML::Key << "kind" << YAML::Value << control::to_string(c.pulses.kind);
  out << YAML::Key << "strength";
  emit_number(out, c.pulses.strength);
  out << YAML::Key << "duration";
  emit_number(out, c.pulses.duration);
  out << YAML::Key << "period";
  emit_number(out, c.pulses.period);
  out << YAML::Key << "noise";
  emit_number(out, c.pulses.noise);
  out << YAML::Key << "sign" << YAML::Value << control::to_string(c.pulses.sign);
  out << YAML::Key << "seed" << YAML::Value << c.pulses.seed;
  out << YAML::Key << "projections" << YAML::Value << c.projections;
  out << YAML::EndMap;

  out << YAML::Key << "ensemble" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_traj" << YAML::Value << cfg.ensemble.n_traj;
  out << YAML::Key << "master_seed" << YAML::Value << cfg.ensemble.master_seed;
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "path" << YAML::Value << YAML::DoubleQuoted << cfg.output.path;
  out << YAML::Key << "observables" << YAML::Value << YAML::Flow << cfg.output.observables;
  out << YAML::Key << "stride" << YAML::Value << cfg.output.stride;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ExperimentConfig with_override(const ExperimentConfig& cfg, const std::string& key_path,
                               const std::string& value) {
  const auto dot = key_path.find('.');
  if (dot == std::string::npos || key_path.find('.', dot + 1) != std::string::npos) {
    throw ConfigError(std::vector<Issue>{{key_path, "expected a key path of the form section.key"}});
  }
  const std::string section = key_path.substr(0, dot);
  const std::string key = key_path.substr(dot + 1);
  std::vector<std::string> allowed;
  if (section == "model") {
    allowed = model_keys(cfg.model.type);
  } else if (section == "solver") {
    allowed = kSolverKeys;
  } else if (section == "control") {
    allowed = kControlKeys;
  } else if (section == "ensemble") {
    allowed = kEnsembleKeys;
  } else if (section == "output") {
    allowed = kOutputKeys;
  } else {
    throw ConfigError(std::vector<Issue>{{key_path, "unknown section '" + section + "'"}});
  }
  if (std::find(allowed.begin(), allowed.end(), key) == allowed.end() || key_path == "model.type") {
    throw ConfigError(std::vector<Issue>{{key_path, "key path does not name an overridable field"}});
  }
  YAML::Node doc = to_node(cfg);
  if (key == "observables") {
    YAML::Node list(YAML::NodeType::Sequence);
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ';')) list.push_back(item);
    doc[section][key] = list;
  } else {
    doc[section][key] = value;
  }
  YAML::Emitter out;
  out << doc;
  return parse_config(out.c_str());
}

std::vector<ObservableInfo> available_observables(ModelType model, ControlMode mode) {
  if (mode == ControlMode::parity_kick) return {{"abs_overlap"}, {"population"}};
  if (mode == ControlMode::zeno) return {{"abs_overlap"}, {"survival"}};
  switch (model) {
    case ModelType::generic_matrix:
    case ModelType::spin_bath:
      return {{"abs_p"},       {"p", true},      {"amplitude", true}, {"population"},
              {"leakage"},     {"phase", true},  {"abs_overlap"}};
    case ModelType::two_level_adiabatic:
      return {{"fidelity"}, {"abs_p"}, {"p", true}, {"leakage"}};
    case ModelType::qsd_multilevel:
      return {{"fidelity"}, {"fidelity_mc"}, {"fidelity_stderr"}, {"decay", true}};
  }
  return {};
}

std::vector<std::string> default_observables(ModelType model) {
  switch (model) {
    case ModelType::generic_matrix:
    case ModelType::spin_bath:
      return {"abs_p"};
    case ModelType::two_level_adiabatic:
    case ModelType::qsd_multilevel:
      return {"fidelity"};
  }
  return {};
}

std::string to_string(ModelType m) {
  switch (m) {
    case ModelType::generic_matrix: return "generic_matrix";
    case ModelType::two_level_adiabatic: return "two_level_adiabatic";
    case ModelType::spin_bath: return "spin_bath";
    case ModelType::qsd_multilevel: return "qsd_multilevel";
  }
  return "?";
}

std::string to_string(ControlMode m) {
  switch (m) {
    case ControlMode::none: return "none";
    case ControlMode::leo_rotating: return "leo_rotating";
    case ControlMode::leo_lab: return "leo_lab";
    case ControlMode::scaled_hamiltonian: return "scaled_hamiltonian";
    case ControlMode::parity_kick: return "parity_kick";
    case ControlMode::zeno: return "zeno";
  }
  return "?";
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace onecomp::config
