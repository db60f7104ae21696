// Acceptance checks: one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "onecomp/adiabatic.hpp"
#include "onecomp/config.hpp"
#include "onecomp/control.hpp"
#include "onecomp/one_component.hpp"
#include "onecomp/qsd.hpp"
#include "onecomp/runner.hpp"

using namespace onecomp;
using lindyn::Generator;
using lindyn::TimeGrid;
using reduced::MemoryKernel;
using reduced::PhaseAccumulator;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome oscillator() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = TimeGrid::span(0.0, 10.0, 1e-3);
  double err = 0.0;
  for (double k : {1.0, 2.0, 5.0}) {
    const auto kernel = MemoryKernel::analytic([k](double, double) { return cplx(-k * k); }, grid);
    const auto a = reduced::solve_p(kernel, PhaseAccumulator::zero(grid));
    for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(a.p[i] - std::cos(k * grid.at(i))));
  }
  const double secs = seconds_since(t0);
  return {err <= 1e-3 && secs < 5.0, "max error " + fmt("%.3g", err) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome markov() {
  const auto grid = TimeGrid::span(0.0, 10.0, 1e-3);
  double err = 0.0;
  for (double lambda : {0.1, 0.5, 1.0}) {
    const auto a = reduced::solve_p(MemoryKernel::markov(lambda, grid), PhaseAccumulator::zero(grid));
    for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(a.p[i] - std::exp(-lambda * grid.at(i))));
  }
  return {err <= 1e-6, "max error " + fmt("%.3g", err)};
}

Outcome equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = TimeGrid::span(0.0, 5.0, 1e-3);
  double dev = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed % 7);
    const auto gen = testing::random_hamiltonian_gen(n, 1000 + seed);
    std::mt19937_64 rng(2000 + seed);
    const Vec a = testing::random_unit(n, rng);
    const auto red = reduced::reduce(gen, a, grid);
    const auto xs = lindyn::propagate(gen, a, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      dev = std::max(dev, std::abs(std::abs(red.amplitude.P[k]) - std::abs(a.dot(xs[k]))));
    }
  }
  const double secs = seconds_since(t0);
  return {dev <= 1e-5 && secs < 60.0,
          "20 generators, n <= 8, max deviation " + fmt("%.3g", dev) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome two_state() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const auto grid = TimeGrid::span(0.0, 5.0, 1e-3);
  double dev = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    Mat m(2, 2);
    const double e0 = nd(rng), e1 = nd(rng);
    const cplx v(nd(rng), nd(rng));
    if (trial % 2 == 0) {
      m << -I * e0, -I * v, -I * std::conj(v), -I * e1;
    } else {
      const cplx w(nd(rng), nd(rng));
      m << -I * e0, v, w, -I * e1;
    }
    const cplx h = m(0, 0);
    const cplx hp = h - m(1, 1);
    const cplx g = m(0, 1) * m(1, 0);
    const auto xs = lindyn::propagate(Generator::constant(m), Vec::Unit(2, 0), grid);
    for (std::size_t k = 0; k < grid.size(); k += 10) {
      const double t = grid.at(k);
      dev = std::max(dev, std::abs(reduced::closed_form_two_state(hp, g, t) * std::exp(h * t) - xs[k](0)));
    }
  }
  // A Hermitian two-state block has g = -|v|^2.
  double worst = 1.0;
  for (double g : {-1.0, -0.25, -4.0}) {
    const double eta = 50.0 * std::abs(g);
    for (int k = 1; k <= 10; ++k) {
      worst = std::min(worst, std::abs(reduced::closed_form_two_state(cplx(0.0, -eta), cplx(g), 2.0 * kPi * k / eta)));
    }
  }
  return {dev <= 1e-8 && worst >= 0.99,
          "propagation deviation " + fmt("%.3g", dev) + ", min |p| at resonance " + fmt("%.5f", worst)};
}

Outcome leo_algebra() {
  std::mt19937_64 rng(12);
  double anti = 0.0, comm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const Vec a = testing::random_unit(n, rng);
    const Mat h = testing::random_hermitian(n, rng);
    const Mat hd = control::block_diagonal_part(h, a);
    const Mat l = control::leakage_part(h, a);
    const double c = 1.0 + trial;
    const Mat r = c * control::parity_operator(a);
    anti = std::max(anti, max_abs(r * l + l * r));
    comm = std::max(comm, max_abs(r * hd - hd * r));
  }
  return {anti <= 1e-12 && comm <= 1e-12,
          "max |{R,L}| " + fmt("%.3g", anti) + ", max |[R,H_d]| " + fmt("%.3g", comm)};
}

Outcome parity_kicks() {
  const Vec a = Vec::Unit(2, 0);
  const auto gen = Generator::from_hamiltonian(2, [](double t) {
    return Mat(0.5 * testing::pauli_z() + (1.0 + t) * testing::pauli_x());
  });
  std::vector<double> dev;
  for (double tau : {4e-3, 2e-3, 1e-3}) {
    control::PulseParams p;
    p.kind = control::PulseKind::ideal_delta;
    p.period = tau;
    const auto n = static_cast<std::size_t>(std::llround(1.0 / tau));
    const Mat kicked = control::parity_kick_propagator(gen, control::LEOSpec{a, control::PulseSequence(p)}, tau, n);
    dev.push_back(max_abs(kicked - control::ideal_block_propagator(gen, a, tau, n)));
  }
  const double r1 = dev[0] / dev[1];
  const double r2 = dev[1] / dev[2];
  const bool ok = r1 >= 1.6 && r1 <= 2.4 && r2 >= 1.6 && r2 <= 2.4;
  return {ok, "deviation ratios " + fmt("%.3f", r1) + ", " + fmt("%.3f", r2)};
}

Outcome zeno() {
  const Vec a = Vec::Unit(2, 0);
  const auto gen = Generator::from_hamiltonian(2, [](double) { return testing::pauli_x(); });
  std::vector<double> x, y;
  for (std::size_t n : {10u, 20u, 40u, 80u, 160u}) {
    const auto run = control::zeno_evolve(gen, [&](double) { return a; }, 1.0, n);
    x.push_back(std::log(1.0 / static_cast<double>(n)));
    y.push_back(std::log(1.0 - run.survival));
  }
  const double mx = (x[0] + x[1] + x[2] + x[3] + x[4]) / 5.0;
  const double my = (y[0] + y[1] + y[2] + y[3] + y[4]) / 5.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope >= 0.8 && slope <= 1.2, "fitted exponent " + fmt("%.4f", slope)};
}

cplx simpson_grid(const std::vector<cplx>& f, std::size_t m, double h) {
  if (m == 0) return 0.0;
  if (m == 1) return 0.5 * h * (f[0] + f[1]);
  cplx out = 0.0;
  const std::size_t even = (m % 2 == 0) ? m : m - 3;
  for (std::size_t i = 0; i + 2 <= even; i += 2) out += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  if (even != m) out += 3.0 * h / 8.0 * (f[even] + 3.0 * f[even + 1] + 3.0 * f[even + 2] + f[even + 3]);
  return out;
}

// F_j(t) = int_0^t (gamma/2) e^{-gamma(t-s)} kappa_j exp(int_s^t [i(E_0 - E_j) + Lambda]) ds,
// Lambda = sum_k kappa_k^* F_k, by fixed-point iteration on a double grid.
Outcome qsd_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const double omega = 1.0, kappa = 0.1, gamma = 0.5;
  const std::size_t channels = 9;
  const auto spec = models::QSDSpec::uniform(channels + 1, omega, kappa, gamma);
  const double h = 5e-3;
  const auto grid = TimeGrid::span(0.0, 10.0, h);
  const std::size_t len = grid.size();
  std::vector<cplx> lambda(len, 0.0), big_f(len, 0.0), acc(len, 0.0), integrand(len);
  for (int iter = 0; iter < 60; ++iter) {
    for (std::size_t k = 1; k < len; ++k) {
      const std::size_t lo = k - 1;
      const cplx d_lo = lo > 0 ? (lambda[lo + 1] - lambda[lo - 1]) / (2.0 * h) : (lambda[1] - lambda[0]) / h;
      const cplx d_hi = k + 1 < len ? (lambda[k + 1] - lambda[k - 1]) / (2.0 * h) : (lambda[k] - lambda[k - 1]) / h;
      acc[k] = acc[lo] + 0.5 * h * (lambda[lo] + lambda[k]) - h * h / 12.0 * (d_hi - d_lo);
    }
    std::vector<cplx> next(len, 0.0);
    for (std::size_t i = 1; i < len; ++i) {
      const double t = grid.at(i);
      for (std::size_t k = 0; k <= i; ++k) {
        const double s = grid.at(k);
        integrand[k] = 0.5 * gamma * std::exp(-gamma * (t - s)) * kappa * std::exp(I * omega * (t - s) + acc[i] - acc[k]);
      }
      next[i] = simpson_grid(integrand, i, h);
    }
    double change = 0.0;
    for (std::size_t i = 0; i < len; ++i) change = std::max(change, std::abs(next[i] - big_f[i]));
    big_f = next;
    for (std::size_t i = 0; i < len; ++i) lambda[i] = static_cast<double>(channels) * kappa * big_f[i];
    if (change < 1e-14) break;
  }
  const auto fine = TimeGrid::span(0.0, 10.0, 1e-3);
  const auto c = models::qsd_coefficients(spec, fine);
  double dev = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t k = fine.require_index(grid.at(i));
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(channels); ++j) dev = std::max(dev, std::abs(c.F[k](j) - big_f[i]));
  }
  const double secs = seconds_since(t0);
  return {dev <= 1e-6 && secs < 30.0, "max |F - F_oracle| " + fmt("%.3g", dev) + ", " + fmt("%.1f", secs) + " s"};
}

control::PulseSequence study_pulses(double phi, bool noisy) {
  control::PulseParams p;
  if (phi == 0.0) return control::PulseSequence();
  p.kind = noisy ? control::PulseKind::noisy_rect : control::PulseKind::regular_rect;
  p.strength = phi;
  p.duration = 0.01;
  p.period = 0.02;
  p.noise = noisy ? 0.5 : 0.0;
  p.sign = noisy ? control::SignPolicy::random_flip : control::SignPolicy::periodic_flip;
  p.seed = 3;
  return control::PulseSequence(p);
}

Outcome fidelity_cross_validation() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = TimeGrid::span(0.0, 10.0, 1e-3);
  bool ok = true;
  double worst_z = 0.0;
  std::ostringstream detail;
  double worst_shared = 0.0;
  for (double gamma : {0.2, 2.0}) {
    const auto spec = models::QSDSpec::uniform(10, 1.0, 0.1, gamma);
    for (bool controlled : {false, true}) {
      const auto pulses = controlled ? study_pulses(4.0 * kPi, false) : control::PulseSequence();
      const auto coeffs = models::qsd_coefficients(spec, grid, pulses);
      const auto closed = models::qsd_fidelity_closed(spec, coeffs);
      models::MonteCarloOptions opt;
      opt.stride = 1000;
      const auto mc = models::qsd_fidelity_mc(spec, coeffs, pulses, 1000, 20240601, opt);
      for (std::size_t i = 1; i < mc.t.size(); ++i) {
        const std::size_t k = grid.require_index(mc.t[i]);
        const double z = std::abs(mc.F[i] - closed.F[k]) / mc.stderr_[i];
        worst_z = std::max(worst_z, z);
        if (!(z <= 3.0)) ok = false;
      }
      const auto closed_shared = models::qsd_fidelity_closed(spec, coeffs, models::NoiseModel::shared);
      opt.noise = models::NoiseModel::shared;
      const auto mc_shared = models::qsd_fidelity_mc(spec, coeffs, pulses, 1000, 20240601, opt);
      for (std::size_t i = 1; i < mc_shared.t.size(); ++i) {
        const std::size_t k = grid.require_index(mc_shared.t[i]);
        worst_shared = std::max(worst_shared, std::abs(mc_shared.F[i] - closed_shared.F[k]) / mc_shared.stderr_[i]);
      }
    }
  }
  const double secs = seconds_since(t0);
  detail << "independent noise, worst |MC - closed| / stderr " << fmt("%.2f", worst_z)
         << " (shared-noise model " << fmt("%.2f", worst_shared) << "), " << fmt("%.1f", secs) << " s";
  return {ok && secs < 300.0, detail.str()};
}

Outcome pulse_strength_study() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = TimeGrid::span(0.0, 10.0, 1e-3);
  const std::vector<double> phis{0.0, kPi, 2.0 * kPi, 4.0 * kPi};
  bool monotone = true;
  double worst_gap = 0.0;
  std::vector<double> gain;
  std::ostringstream detail;
  for (double gamma : {0.2, 5.0}) {
    const auto spec = models::QSDSpec::uniform(10, 1.0, 0.1, gamma);
    detail << "gamma " << gamma << ":";
    std::vector<double> regular;
    for (bool noisy : {false, true}) {
      std::vector<double> f;
      for (double phi : phis) {
        f.push_back(models::qsd_fidelity_closed(spec, models::qsd_coefficients(spec, grid, study_pulses(phi, noisy))).F.back());
      }
      detail << (noisy ? " noisy" : " regular");
      for (double v : f) detail << " " << fmt("%.6f", v);
      for (std::size_t i = 1; i < f.size(); ++i) {
        if (f[i] < f[i - 1]) monotone = false;
      }
      if (!noisy) gain.push_back(f.back() - f.front());
      if (!noisy) {
        regular = f;
      } else {
        for (std::size_t i = 0; i < f.size(); ++i) worst_gap = std::max(worst_gap, std::abs(f[i] - regular[i]));
      }
    }
    detail << "; ";
  }
  const bool gain_ok = gain[0] > gain[1];
  const double secs = seconds_since(t0);
  detail << "(a) nondecreasing in Phi: " << (monotone ? "yes" : "no") << ", (b) max |noisy - regular| "
         << fmt("%.4f", worst_gap) << ", (c) gain at 4pi " << fmt("%.4f", gain[0]) << " vs "
         << fmt("%.4f", gain[1]) << ", " << fmt("%.1f", secs) << " s";
  return {monotone && worst_gap <= 0.05 && gain_ok && secs < 600.0, detail.str()};
}

Outcome adiabatic_module() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ham = Generator::from_hamiltonian(2, [](double t) {
    return Mat(0.5 * (t * testing::pauli_z() + testing::pauli_x()));
  });
  const auto grid = TimeGrid::span(-4.0, 4.0, 1e-3);
  const auto path = adiabatic::track_eigenpath(ham, grid);
  const auto m = adiabatic::adiabatic_generator(path, [](double) { return Mat(0.5 * testing::pauli_z()); });
  const auto rotated = lindyn::rotate_generator(ham, adiabatic::adiabatic_frame(path));
  const Mat b0 = path.states(0);
  double dev = 0.0;
  for (std::size_t k = 1; k + 1 < grid.size(); k += 7) {
    const double t = grid.at(k);
    dev = std::max(dev, max_abs(b0.adjoint() * rotated(t) * b0 - m(t)));
  }

  const auto cfg = config::load_config(std::string(ONECOMP_SOURCE_DIR) + "/configs/lz_scaled.yaml");
  const auto controlled = runner::run_experiment(cfg);
  const auto free = runner::run_experiment(config::with_override(cfg, "control.strength", "0"));
  const double f_ctl = controlled.column("fidelity").values.back().real();
  const double f_free = free.column("fidelity").values.back().real();
  const double secs = seconds_since(t0);
  return {dev <= 1e-6 && f_ctl - f_free >= 0.1,
          "generator deviation " + fmt("%.3g", dev) + ", fast-sweep fidelity " + fmt("%.4f", f_free) + " -> " +
              fmt("%.4f", f_ctl) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome determinism() {
  auto csv = [](const runner::RunResult& r) {
    std::ostringstream os;
    runner::write_csv(r, os);
    return os.str();
  };
  const std::string dir = std::string(ONECOMP_SOURCE_DIR) + "/configs/";
  bool ok = true;
  std::size_t bytes = 0;
  auto qsd = config::load_config(dir + "qsd_pulses.yaml");
  qsd = config::with_override(qsd, "ensemble.n_traj", "200");
  qsd = config::with_override(qsd, "solver.t_end", "4");
  runner::RunOptions serial;
  serial.workers = 1;
  serial.seed = 17;
  runner::RunOptions parallel = serial;
  parallel.workers = 4;
  const auto a = csv(runner::run_experiment(qsd, serial));
  ok = ok && a == csv(runner::run_experiment(qsd, serial)) && a == csv(runner::run_experiment(qsd, parallel));
  bytes += a.size();
  for (const char* name : {"cosine_kernel.yaml", "spin_bath.yaml"}) {
    const auto cfg = config::load_config(dir + name);
    const auto x = csv(runner::run_experiment(cfg, serial));
    ok = ok && x == csv(runner::run_experiment(cfg, parallel));
    bytes += x.size();
  }
  return {ok, "repeated and 1 vs 4 worker runs byte-identical over " + std::to_string(bytes) + " bytes"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oscillator recovery", oscillator},
      {"Markov limit", markov},
      {"one-component vs full propagation", equivalence},
      {"two-state closed form and leakage-free points", two_state},
      {"LEO algebra", leo_algebra},
      {"parity-kick scaling", parity_kicks},
      {"Zeno scaling", zeno},
      {"QSD coefficient oracle", qsd_oracle},
      {"fidelity closed form vs Monte Carlo", fidelity_cross_validation},
      {"pulse-strength and memory dependence of the fidelity", pulse_strength_study},
      {"adiabatic module", adiabatic_module},
      {"determinism", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("%s %2d %s: %s\n", out.pass ? "PASS" : "FAIL", index, name.c_str(), out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
