#include "onecomp/control.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace onecomp::control {

namespace {

Vec normalized_target(const Vec& target, const char* who) {
  const double n = target.norm();
  if (!(n > 0.0)) fail(ErrorKind::invalid_argument, std::string(who) + ": zero target");
  return target / n;
}

}  // namespace

Mat parity_operator(const Vec& target) {
  const Vec a = normalized_target(target, "parity_operator");
  return 2.0 * a * a.adjoint() - Mat::Identity(a.size(), a.size());
}

Mat rotating_leo(const LEOSpec& spec, double t) {
  return spec.pulses.value(t) * parity_operator(spec.target);
}

Generator apply_leo(const Generator& gen, const LEOSpec& spec) {
  return apply_leo(gen, spec.target, [pulses = spec.pulses](double t) { return pulses.value(t); });
}

Generator apply_leo(const Generator& gen, const Vec& target, std::function<double(double)> c) {
  if (target.size() != gen.dim()) {
    fail(ErrorKind::invalid_argument, "apply_leo: target dimension does not match generator");
  }
  const Mat parity = parity_operator(target);
  return Generator(
      gen.dim(),
      [gen, parity, c = std::move(c)](double t) -> Mat {
        const double ct = c(t);
        if (ct == 0.0) return gen(t);
        return gen(t) - I * ct * parity;
      },
      gen.hermitian());
}

Mat block_diagonal_part(const Mat& h, const Vec& target) {
  const Vec a = normalized_target(target, "block_diagonal_part");
  const Mat p = a * a.adjoint();
  const Mat q = Mat::Identity(a.size(), a.size()) - p;
  return p * h * p + q * h * q;
}

Mat leakage_part(const Mat& h, const Vec& target) { return h - block_diagonal_part(h, target); }

Mat parity_kick_propagator(const Generator& gen_rot, const LEOSpec& spec, double tau,
                           std::size_t n_kicks, double t0) {
  if (n_kicks == 0) fail(ErrorKind::invalid_argument, "parity_kick_propagator: n_kicks = 0");
  if (spec.pulses.kind() != PulseKind::ideal_delta) {
    fail(ErrorKind::invalid_argument, "parity_kick_propagator: spec must use ideal_delta pulses");
  }
  require(tau > 0.0, "parity_kick_propagator: tau must be positive");
  const Mat r = parity_operator(spec.target);
  Mat u = Mat::Identity(gen_rot.dim(), gen_rot.dim());
  for (std::size_t k = 0; k < n_kicks; ++k) {
    const double mid = t0 + (static_cast<double>(k) + 0.5) * tau;
    u = lindyn::expm(-I * gen_rot.hamiltonian(mid) * tau) * (r * u);
  }
  return u;
}

Mat ideal_block_propagator(const Generator& gen_rot, const Vec& target, double tau,
                           std::size_t n_kicks, double t0) {
  Mat u = Mat::Identity(gen_rot.dim(), gen_rot.dim());
  for (std::size_t k = 0; k < n_kicks; ++k) {
    const double mid = t0 + (static_cast<double>(k) + 0.5) * tau;
    u = lindyn::expm(-I * block_diagonal_part(gen_rot.hamiltonian(mid), target) * tau) * u;
  }
  if (n_kicks % 2 == 1) u = parity_operator(target) * u;
  return u;
}

Mat finite_bb_propagator(const Generator& gen_rot, const Vec& target, double tau,
                         double pulse_width, std::size_t n_kicks, double t0) {
  if (n_kicks == 0) fail(ErrorKind::invalid_argument, "finite_bb_propagator: n_kicks = 0");
  require(pulse_width > 0.0 && tau > 0.0, "finite_bb_propagator: widths must be positive");
  const Mat z = parity_operator(target);
  const double c = 0.5 * std::numbers::pi / pulse_width;
  Mat u = Mat::Identity(gen_rot.dim(), gen_rot.dim());
  double t = t0;
  for (std::size_t k = 0; k < n_kicks; ++k) {
    const Mat h_pulse = c * z + gen_rot.hamiltonian(t + 0.5 * pulse_width);
    u = lindyn::expm(-I * h_pulse * pulse_width) * u;
    t += pulse_width;
    u = lindyn::expm(-I * gen_rot.hamiltonian(t + 0.5 * tau) * tau) * u;
    t += tau;
  }
  return u;
}

double leakage_probability(const Mat& u, const Vec& target) {
  const Vec a = normalized_target(target, "leakage_probability");
  return 1.0 - std::norm(a.dot(u * a));
}

ZenoOutcome zeno_step(const Vec& state, const Vec& target) {
  require(state.size() == target.size(), "zeno_step: dimension mismatch");
  const Vec a = normalized_target(target, "zeno_step");
  const cplx overlap = a.dot(state);
  const double survival = std::norm(overlap);
  if (survival < 1e-15) return ZenoOutcome{state, 0.0, true};
  return ZenoOutcome{a * (overlap / std::abs(overlap)), survival, false};
}

ZenoRun zeno_evolve(const Generator& gen, const std::function<Vec(double)>& target_path,
                    double t_total, std::size_t n_projections, std::size_t substeps) {
  require(n_projections >= 1, "zeno_evolve: need at least one projection");
  require(substeps >= 1 && t_total > 0.0, "zeno_evolve: invalid timing");
  ZenoRun run;
  run.state = normalized_target(target_path(0.0), "zeno_evolve");
  const double interval = t_total / static_cast<double>(n_projections);
  const double h = interval / static_cast<double>(substeps);
  for (std::size_t j = 0; j < n_projections; ++j) {
    const double start = static_cast<double>(j) * interval;
    for (std::size_t s = 0; s < substeps; ++s) {
      run.state = lindyn::advance(gen, run.state, start + static_cast<double>(s) * h, h);
    }
    const auto out = zeno_step(run.state, target_path(start + interval));
    run.survival *= out.survival;
    if (out.absorbed) {
      run.absorbed = true;
      run.survival = 0.0;
      return run;
    }
    run.state = out.state;
  }
  return run;
}

}  // namespace onecomp::control
