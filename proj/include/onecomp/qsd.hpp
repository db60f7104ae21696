#pragma once

// n-level system coupled to a bosonic bath through S = sum_{j>=1} kappa_j |j><0|,
// with exponential bath correlation beta(t,s) = (gamma/2) e^{-gamma|t-s|}.
// Linear quantum-state diffusion:
//
//   d/dt psi = [-i H_sys + S z*_t - S^dag O(t)] psi,   O(t) = sum_j F_j(t) |j><0|.

#include <cstdint>
#include <span>
#include <vector>

#include "onecomp/lindyn.hpp"
#include "onecomp/pulses.hpp"

namespace onecomp::models {

using ScalarFn = std::function<double(double)>;
using lindyn::TimeGrid;

enum class Correlation { exponential, ohmic };

enum class NoiseModel {
  shared,      // one noise drives every channel
  independent  // one noise per channel
};

struct QSDSpec {
  std::vector<ScalarFn> energies;  // E_0 .. E_{n-1}
  std::vector<cplx> kappa;         // kappa_1 .. kappa_{n-1}
  double gamma = 1.0;
  std::vector<cplx> target;        // a_0 .. a_{n-1}, also the initial state
  Correlation correlation = Correlation::exponential;

  std::size_t levels() const { return energies.size(); }

  // E_0 = omega, E_j = 0, kappa_j = kappa, a_j = 1/sqrt(n).
  static QSDSpec uniform(std::size_t n, double omega, cplx kappa, double gamma);
};

// Throws on inconsistent sizes, gamma <= 0 or sum |a_j|^2 != 1 (1e-10).
void validate(const QSDSpec& spec);

struct QSDCoefficients {
  TimeGrid grid;
  std::vector<Vec> F;          // F_j(t_k), j = 1..n-1
  std::vector<Vec> Fbar;       // int_0^t F_j
  std::vector<cplx> decay;     // K(t_k) = sum_j kappa_j^* Fbar_j
  Eigen::MatrixXd phase;       // row j: int_0^t E_j, with the control folded into row 0
  control::PulseParams pulses;
};

// Integrates
//   F_j' = (gamma/2) kappa_j - gamma F_j + [i(E_0 + c - E_j) + sum_k kappa_k^* F_k] F_j
// by RK4, split at pulse edges and sub-stepped to resolve the fastest phase.
QSDCoefficients qsd_coefficients(const QSDSpec& spec, const TimeGrid& grid,
                                 const control::PulseSequence& pulses = {});

struct FidelitySeries {
  std::vector<double> t;
  std::vector<double> F;
  std::vector<double> stderr_;  // empty for closed-form series
};

// Fidelity <A(t)|rho|A(t)> against the target carried along by H_sys,
//   |a0|^4 e^{-2Re K} + sum_{j!=k} |a_j|^2|a_k|^2 + 2|a0|^2 sum_k |a_k|^2 Re e^{-K}
//   + sum_j |a_j|^2 { |a_j|^2 + |a0|^2 int_0^t 2Re(kappa_j^* F_j) e^{-2Re K} },
// with the last integral by trapezoid on the grid. This is exact when every
// channel has its own noise. For one shared noise the bath term picks up the
// coherent factor |sum_j a_j^* kappa_j|^2 / sum_j |a_j|^2 |kappa_j|^2, which
// is evaluated when all excited energies coincide (otherwise throws).
FidelitySeries qsd_fidelity_closed(const QSDSpec& spec, const QSDCoefficients& coeffs,
                                   NoiseModel model = NoiseModel::independent);

struct NoisePath {
  TimeGrid grid;
  std::vector<cplx> z_star;
  std::uint64_t seed = 0;
};

// Stationary complex AR(1) sampling of the Ornstein-Uhlenbeck process with
// variance gamma/2 and decay rate gamma.
NoisePath sample_colored_noise(double gamma, const TimeGrid& grid, std::uint64_t seed);

// Linear QSD trajectory on the coefficient grid. `noise` holds one path
// (shared) or n-1 paths (independent). Level 0 evolves in closed form; the
// remaining amplitudes integrate z* psi_0 with z* linear and the phase linear
// on each piece between pulse edges, so pulse areas are exact.
std::vector<Vec> qsd_trajectory(const QSDSpec& spec, const QSDCoefficients& coeffs,
                                 std::span<const NoisePath> noise,
                                 const control::PulseSequence& pulses = {});

// Full generator of the linear QSD equation for one shared noise path, with
// F and z* interpolated linearly between grid points.
lindyn::Generator qsd_generator(const QSDSpec& spec, const QSDCoefficients& coeffs,
                                const NoisePath& noise, const control::PulseSequence& pulses = {});

struct MonteCarloOptions {
  NoiseModel noise = NoiseModel::independent;
  std::size_t stride = 1;   // record every stride-th grid point
  std::size_t workers = 0;  // 0 = default_workers()
};

// Mean and standard error of |<A(t)|psi(t)>|^2 over seeded trajectories.
// Trajectory i uses derive_seed(seed, i); the reduction runs in index order.
FidelitySeries qsd_fidelity_mc(const QSDSpec& spec, const control::PulseSequence& pulses,
                               const TimeGrid& grid, std::size_t n_traj, std::uint64_t seed,
                               const MonteCarloOptions& options = {});

// Same, reusing precomputed coefficients.
FidelitySeries qsd_fidelity_mc(const QSDSpec& spec, const QSDCoefficients& coeffs,
                               const control::PulseSequence& pulses, std::size_t n_traj,
                               std::uint64_t seed, const MonteCarloOptions& options = {});

// Pairwise (cascade) sum.
double pairwise_sum(std::span<const double> v);

}  // namespace onecomp::models
