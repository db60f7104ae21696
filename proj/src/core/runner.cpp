#include "onecomp/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "onecomp/adiabatic.hpp"
#include "onecomp/control.hpp"
#include "onecomp/parallel.hpp"
#include "onecomp/qsd.hpp"
#include "onecomp/seeding.hpp"
#include "onecomp/spin_bath.hpp"

#ifndef ONECOMP_VERSION
#define ONECOMP_VERSION "0.0.0"
#endif

namespace onecomp::runner {

namespace {

using config::ControlMode;
using config::ExperimentConfig;
using config::ModelType;
using lindyn::Generator;
using lindyn::TimeGrid;

std::vector<std::size_t> sample_indices(const TimeGrid& grid, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < grid.size(); k += stride) out.push_back(k);
  if (out.back() != grid.steps()) out.push_back(grid.steps());
  return out;
}

// Collects the requested observables at the sampled indices.
class Table {
 public:
  Table(const ExperimentConfig& cfg, std::vector<double> t) : cfg_(cfg) {
    result_.t = std::move(t);
    const auto avail = config::available_observables(cfg.model.type, cfg.control.mode);
    for (const auto& name : cfg.output.observables) {
      Column c{name, false, {}};
      for (const auto& o : avail) {
        if (o.name == name) c.complex_valued = o.complex_valued;
      }
      result_.columns.push_back(std::move(c));
    }
  }

  bool wants(const std::string& name) const {
    for (const auto& c : result_.columns) {
      if (c.name == name) return true;
    }
    return false;
  }

  template <typename Fn>
  void fill(const std::string& name, Fn&& value_at_row) {
    for (auto& c : result_.columns) {
      if (c.name != name) continue;
      c.values.resize(result_.t.size());
      for (std::size_t r = 0; r < result_.t.size(); ++r) c.values[r] = value_at_row(r);
    }
  }

  RunResult take() { return std::move(result_); }

 private:
  const ExperimentConfig& cfg_;
  RunResult result_;
};

std::vector<double> times(const TimeGrid& grid, const std::vector<std::size_t>& idx) {
  std::vector<double> t;
  t.reserve(idx.size());
  for (auto k : idx) t.push_back(grid.at(k));
  return t;
}

// Kernel of a time-independent generator: g(t, s) = R e^{D(t-s)} W on grid lags.
reduced::MemoryKernel stationary_kernel(const lindyn::PQBlocks& blocks, const TimeGrid& grid) {
  const auto b = blocks.at(grid.t0());
  const Mat step = lindyn::expm(b.d * grid.dt());
  std::vector<cplx> lag(grid.size());
  Vec v = b.w;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    lag[k] = (b.r * v)(0, 0);
    v = step * v;
  }
  const double dt = grid.dt();
  return reduced::MemoryKernel::analytic(
      [lag = std::move(lag), dt](double t, double s) {
        const auto m = static_cast<std::size_t>(std::llround((t - s) / dt));
        return lag[std::min(m, lag.size() - 1)];
      },
      grid);
}

void fill_reduced(Table& table, const reduced::MemoryKernel& kernel,
                  const reduced::PhaseAccumulator& phase, const reduced::AmplitudeSeries& amp,
                  const std::vector<std::size_t>& idx) {
  table.fill("abs_p", [&](std::size_t r) { return cplx(std::abs(amp.P[idx[r]])); });
  table.fill("p", [&](std::size_t r) { return amp.p[idx[r]]; });
  table.fill("amplitude", [&](std::size_t r) { return amp.P[idx[r]]; });
  table.fill("population", [&](std::size_t r) { return cplx(std::norm(amp.P[idx[r]])); });
  table.fill("phase", [&](std::size_t r) { return phase.C(idx[r]); });
  if (table.wants("leakage")) {
    table.fill("leakage", [&](std::size_t r) {
      return cplx(std::abs(reduced::leakage_integral(kernel, phase, amp, amp.grid.at(idx[r]))));
    });
  }
}

void fill_overlap(Table& table, const Generator& gen, const Vec& target, const TimeGrid& grid,
                  std::span<const double> breakpoints, const std::vector<std::size_t>& idx) {
  if (!table.wants("abs_overlap")) return;
  const auto states = lindyn::propagate(gen, target, grid, breakpoints);
  table.fill("abs_overlap", [&](std::size_t r) { return cplx(std::abs(target.dot(states[idx[r]]))); });
}

Mat generic_matrix(const config::ModelConfig& m) { return m.hamiltonian ? Mat(-I * m.matrix) : m.matrix; }

RunResult run_reduction(const ExperimentConfig& cfg, const Generator& gen, const Vec& target,
                        const control::PulseSequence& pulses, std::size_t workers) {
  const auto grid = TimeGrid::span(0.0, cfg.solver.t_end, cfg.solver.dt);
  const auto idx = sample_indices(grid, cfg.output.stride);
  const auto edges = pulses.edges(grid.t0(), grid.t1());
  Table table(cfg, times(grid, idx));

  if (cfg.control.mode == ControlMode::none && cfg.model.type == ModelType::generic_matrix) {
    const auto blocks = lindyn::pq_partition(gen, target);
    const auto kernel = stationary_kernel(blocks, grid);
    const auto phase = reduced::phase_integral([&](double t) { return blocks.h(t); }, grid);
    const auto amp = reduced::solve_p(kernel, phase, cfg.solver.scheme);
    fill_reduced(table, kernel, phase, amp, idx);
  } else {
    const auto red = reduced::reduce(gen, target, grid, edges, cfg.solver.scheme, workers);
    fill_reduced(table, red.kernel, red.phase, red.amplitude, idx);
  }
  fill_overlap(table, gen, target, grid, edges, idx);
  return table.take();
}

RunResult run_parity_kick(const ExperimentConfig& cfg, const Generator& gen, const Vec& target,
                          const control::PulseSequence& pulses) {
  const auto grid = TimeGrid::span(0.0, cfg.solver.t_end, cfg.solver.dt);
  const auto idx = sample_indices(grid, cfg.output.stride);
  const auto per_kick = static_cast<std::size_t>(std::llround(pulses.params().period / grid.dt()));
  const Mat parity = control::parity_operator(target);
  std::vector<Vec> states{target};
  Vec x = target;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    x = lindyn::advance(gen, x, grid.at(k), grid.dt());
    if ((k + 1) % per_kick == 0) x = parity * x;
    states.push_back(x);
  }
  Table table(cfg, times(grid, idx));
  table.fill("abs_overlap", [&](std::size_t r) { return cplx(std::abs(target.dot(states[idx[r]]))); });
  table.fill("population", [&](std::size_t r) { return cplx(std::norm(target.dot(states[idx[r]]))); });
  return table.take();
}

RunResult run_zeno(const ExperimentConfig& cfg, const Generator& gen,
                   const std::function<Vec(double)>& target_path) {
  const std::size_t n = cfg.control.projections;
  const double t_end = cfg.solver.t_end;
  std::vector<double> t{0.0};
  std::vector<double> overlap{1.0};
  std::vector<double> survival{1.0};
  Vec x = target_path(0.0);
  double total = 1.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double a = t_end * static_cast<double>(j - 1) / static_cast<double>(n);
    const double b = t_end * static_cast<double>(j) / static_cast<double>(n);
    const auto seg = TimeGrid::span(a, b, cfg.solver.dt);
    for (std::size_t k = 0; k < seg.steps(); ++k) x = lindyn::advance(gen, x, seg.at(k), seg.dt());
    const Vec target = target_path(b);
    t.push_back(b);
    overlap.push_back(std::abs(target.dot(x)) / x.norm());
    const auto step = control::zeno_step(x, target);
    total *= step.survival;
    survival.push_back(total);
    if (step.absorbed) {
      fail(ErrorKind::numerical, "zeno: state became orthogonal to the target");
    }
    x = step.state;
  }
  Table table(cfg, t);
  table.fill("abs_overlap", [&](std::size_t r) { return cplx(overlap[r]); });
  table.fill("survival", [&](std::size_t r) { return cplx(survival[r]); });
  return table.take();
}

RunResult run_generic(const ExperimentConfig& cfg, const control::PulseSequence& pulses,
                      std::size_t workers) {
  const auto& m = cfg.model;
  const Generator base = m.hamiltonian
                             ? Generator::from_hamiltonian(m.matrix.rows(), [h = m.matrix](double) { return h; })
                             : Generator::constant(generic_matrix(m));
  switch (cfg.control.mode) {
    case ControlMode::parity_kick:
      return run_parity_kick(cfg, base, m.target, pulses);
    case ControlMode::zeno:
      return run_zeno(cfg, base, [target = m.target](double) { return target; });
    case ControlMode::leo_rotating:
      return run_reduction(cfg, control::apply_leo(base, control::LEOSpec{m.target, pulses}),
                           m.target, pulses, workers);
    default:
      return run_reduction(cfg, base, m.target, pulses, workers);
  }
}

RunResult run_spin_bath(const ExperimentConfig& cfg, const control::PulseSequence& pulses,
                        std::size_t workers) {
  const auto& m = cfg.model;
  auto spec = models::SpinBathSpec::constant(m.omega, m.nuclear, m.jz, m.jperp);
  spec.bz = m.bz;
  spec.bxy = m.bxy;
  if (cfg.control.mode == ControlMode::leo_rotating) {
    spec.omega = [omega = m.omega, pulses](double t) { return omega + pulses.value(t); };
  }
  const auto gen = models::spin_bath_generator(spec);
  const Vec target = Vec::Unit(gen.dim(), 0);
  if (spec.has_inner_coupling()) return run_reduction(cfg, gen, target, pulses, workers);

  const auto grid = TimeGrid::span(0.0, cfg.solver.t_end, cfg.solver.dt);
  const auto idx = sample_indices(grid, cfg.output.stride);
  const auto edges = pulses.edges(grid.t0(), grid.t1());
  const auto red = models::spin_bath_kernel(spec, grid, edges);
  const auto amp = reduced::solve_p(red.kernel, red.phase, cfg.solver.scheme);
  Table table(cfg, times(grid, idx));
  fill_reduced(table, red.kernel, red.phase, amp, idx);
  fill_overlap(table, gen, target, grid, edges, idx);
  return table.take();
}

RunResult run_two_level(const ExperimentConfig& cfg, const control::PulseSequence& pulses) {
  const auto& m = cfg.model;
  const double v = m.sweep_rate;
  const double w = m.gap;
  const double tc = m.center;
  const Generator bare = Generator::from_hamiltonian(2, [v, w, tc](double t) {
    Mat h(2, 2);
    h << 0.5 * v * (t - tc), 0.5 * w, 0.5 * w, -0.5 * v * (t - tc);
    return h;
  });
  const auto grid = TimeGrid::span(0.0, cfg.solver.t_end, cfg.solver.dt);
  const auto edges = pulses.edges(grid.t0(), grid.t1());
  const auto bare_path = adiabatic::track_eigenpath(bare, grid);
  auto ground = [&bare](double t) {
    Eigen::SelfAdjointEigenSolver<Mat> es(bare.hamiltonian(t));
    return Vec(es.eigenvectors().col(0));
  };
  if (cfg.control.mode == ControlMode::zeno) return run_zeno(cfg, bare, ground);

  Generator gen = bare;
  if (cfg.control.mode == ControlMode::scaled_hamiltonian) {
    gen = adiabatic::scaled_control(bare, pulses);
  } else if (cfg.control.mode == ControlMode::leo_lab) {
    auto path = std::make_shared<const adiabatic::EigenPath>(bare_path);
    gen = Generator::from_hamiltonian(2, [bare, path, pulses](double t) {
      return Mat(bare.hamiltonian(t) + adiabatic::lab_leo(*path, pulses, t));
    });
  }
  const auto idx = sample_indices(grid, cfg.output.stride);
  Table table(cfg, times(grid, idx));
  if (table.wants("fidelity")) {
    const auto states = lindyn::propagate(gen, bare_path.states(0).col(0), grid, edges);
    table.fill("fidelity", [&](std::size_t r) {
      return cplx(std::norm(bare_path.states(idx[r]).col(0).dot(states[idx[r]])));
    });
  }
  if (table.wants("abs_p") || table.wants("p") || table.wants("leakage")) {
    const auto path = adiabatic::track_eigenpath(gen, grid, 0.0, edges);
    const auto kernel = adiabatic::two_level_kernel(path);
    const auto phase = reduced::PhaseAccumulator::zero(grid);
    const auto amp = reduced::solve_p(kernel, phase, cfg.solver.scheme);
    fill_reduced(table, kernel, phase, amp, idx);
  }
  return table.take();
}

RunResult run_qsd(const ExperimentConfig& cfg, const control::PulseSequence& pulses,
                  std::uint64_t seed, std::size_t workers) {
  const auto& m = cfg.model;
  models::QSDSpec spec;
  spec.energies.push_back([omega = m.omega](double) { return omega; });
  for (double e : m.energies) spec.energies.push_back([e](double) { return e; });
  spec.kappa = m.kappa;
  spec.gamma = m.gamma;
  spec.target = m.amplitudes;

  const auto grid = TimeGrid::span(0.0, cfg.solver.t_end, cfg.solver.dt);
  const auto idx = sample_indices(grid, cfg.output.stride);
  const auto coeffs = models::qsd_coefficients(spec, grid, pulses);
  Table table(cfg, times(grid, idx));
  if (table.wants("fidelity")) {
    const auto closed = models::qsd_fidelity_closed(spec, coeffs, m.noise_model);
    table.fill("fidelity", [&](std::size_t r) { return cplx(closed.F[idx[r]]); });
  }
  table.fill("decay", [&](std::size_t r) { return coeffs.decay[idx[r]]; });
  if (table.wants("fidelity_mc") || table.wants("fidelity_stderr")) {
    models::MonteCarloOptions opt;
    opt.noise = m.noise_model;
    opt.stride = cfg.output.stride;
    opt.workers = workers;
    const auto mc = models::qsd_fidelity_mc(spec, coeffs, pulses, cfg.ensemble.n_traj, seed, opt);
    table.fill("fidelity_mc", [&](std::size_t r) { return cplx(mc.F[r]); });
    table.fill("fidelity_stderr", [&](std::size_t r) { return cplx(mc.stderr_[r]); });
  }
  return table.take();
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const Column& RunResult::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  fail(ErrorKind::invalid_argument, "no column named '" + name + "'");
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = options.seed.value_or(cfg.ensemble.master_seed);
  const std::size_t workers = options.workers == 0 ? default_workers() : options.workers;
  const control::PulseSequence pulses = cfg.control.pulses.kind == control::PulseKind::none
                                            ? control::PulseSequence()
                                            : control::PulseSequence(cfg.control.pulses);
  RunResult result;
  try {
    switch (cfg.model.type) {
      case ModelType::generic_matrix:
        result = run_generic(cfg, pulses, workers);
        break;
      case ModelType::two_level_adiabatic:
        result = run_two_level(cfg, pulses);
        break;
      case ModelType::spin_bath:
        result = run_spin_bath(cfg, pulses, workers);
        break;
      case ModelType::qsd_multilevel:
        result = run_qsd(cfg, pulses, seed, workers);
        break;
    }
  } catch (const config::ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), "model '" + config::to_string(cfg.model.type) + "', control mode '" +
                              config::to_string(cfg.control.mode) + "': " + e.what());
  }
  result.meta.config_hash = config::config_hash(cfg);
  result.meta.seed = seed;
  result.meta.version = version();
  if (pulses.rectangular() && cfg.solver.dt > 0.25 * cfg.control.pulses.duration) {
    result.meta.warnings.push_back("solver.dt exceeds a quarter of the pulse width; pulse edges are sub-sampled");
  }
  const bool stepped_control =
      cfg.control.mode == ControlMode::scaled_hamiltonian || cfg.control.mode == ControlMode::leo_lab ||
      (cfg.control.mode == ControlMode::leo_rotating && cfg.model.type == ModelType::generic_matrix);
  if (stepped_control && pulses.rectangular()) {
    const auto& p = cfg.control.pulses;
    const double peak = std::abs(p.strength) * (1.0 + p.noise) / p.duration;
    if (peak * cfg.solver.dt > 0.5) {
      result.meta.warnings.push_back("solver.dt times the peak pulse amplitude exceeds 0.5; RK4 steps under-resolve the control");
    }
  }
  result.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SweepAxis parse_sweep_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw config::ConfigError(std::vector<config::Issue>{{spec, "expected key=v1,v2,..."}});
  }
  SweepAxis axis{spec.substr(0, eq), {}};
  std::stringstream ss(spec.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw config::ConfigError(std::vector<config::Issue>{{axis.key, "empty sweep value"}});
    axis.values.push_back(item);
  }
  return axis;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::vector<SweepAxis>& axes,
                                 const RunOptions& options) {
  if (axes.empty()) {
    SweepCell cell{0, {}, cfg, run_experiment(cfg, options)};
    return {std::move(cell)};
  }
  std::size_t count = 1;
  for (const auto& a : axes) {
    if (a.values.empty()) throw config::ConfigError(std::vector<config::Issue>{{a.key, "sweep axis has no values"}});
    count *= a.values.size();
  }
  const std::uint64_t master = options.seed.value_or(cfg.ensemble.master_seed);
  std::vector<SweepCell> cells(count);
  // Build every cell first so configuration errors surface before any run.
  for (std::size_t i = 0; i < count; ++i) {
    SweepCell& cell = cells[i];
    cell.index = i;
    cell.config = cfg;
    std::size_t rem = i;
    std::vector<std::size_t> pick(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      pick[a] = rem % axes[a].values.size();
      rem /= axes[a].values.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& value = axes[a].values[pick[a]];
      cell.config = config::with_override(cell.config, axes[a].key, value);
      cell.assignment.emplace_back(axes[a].key, value);
    }
  }
  const std::size_t workers = options.workers == 0 ? default_workers() : options.workers;
  const std::size_t outer = std::min(workers, count);
  const std::size_t inner = outer > 1 ? 1 : workers;
  parallel_for(count, outer, [&](std::size_t i) {
    RunOptions o;
    o.seed = derive_seed(master, i);
    o.workers = inner;
    cells[i].result = run_experiment(cells[i].config, o);
  });
  return cells;
}

void write_csv(const RunResult& result, std::ostream& out) {
  out << "t";
  for (const auto& c : result.columns) {
    if (c.complex_valued) {
      out << ",re_" << c.name << ",im_" << c.name;
    } else {
      out << "," << c.name;
    }
  }
  out << "\n";
  for (std::size_t r = 0; r < result.t.size(); ++r) {
    out << fmt17(result.t[r]);
    for (const auto& c : result.columns) {
      out << "," << fmt17(c.values[r].real());
      if (c.complex_valued) out << "," << fmt17(c.values[r].imag());
    }
    out << "\n";
  }
}

void write_summary_csv(const std::vector<SweepCell>& cells, std::ostream& out) {
  if (cells.empty()) return;
  out << "cell";
  for (const auto& [key, value] : cells.front().assignment) out << "," << key;
  out << ",seed,t";
  for (const auto& c : cells.front().result.columns) {
    if (c.complex_valued) {
      out << ",re_" << c.name << ",im_" << c.name;
    } else {
      out << "," << c.name;
    }
  }
  out << "\n";
  for (const auto& cell : cells) {
    out << cell.index;
    for (const auto& [key, value] : cell.assignment) out << "," << value;
    const auto& r = cell.result;
    out << "," << r.meta.seed << "," << fmt17(r.t.back());
    for (const auto& c : r.columns) {
      out << "," << fmt17(c.values.back().real());
      if (c.complex_valued) out << "," << fmt17(c.values.back().imag());
    }
    out << "\n";
  }
}

std::string meta_json(const RunResult& result, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["config_hash"] = result.meta.config_hash;
  j["seed"] = result.meta.seed;
  j["version"] = result.meta.version;
  j["wall_seconds"] = result.meta.wall_seconds;
  j["warnings"] = result.meta.warnings;
  j["model"] = config::to_string(cfg.model.type);
  j["control_mode"] = config::to_string(cfg.control.mode);
  j["rows"] = result.t.size();
  return j.dump(2) + "\n";
}

std::string version() { return ONECOMP_VERSION; }

}  // namespace onecomp::runner
