#pragma once

// Instantaneous eigenbasis tracking and the adiabatic-frame generator.

#include <span>
#include <vector>

#include "onecomp/lindyn.hpp"
#include "onecomp/one_component.hpp"
#include "onecomp/pulses.hpp"

namespace onecomp::adiabatic {

using lindyn::Generator;
using lindyn::TimeGrid;

struct EigenFrame {
  Eigen::VectorXd energies;  // tracked order
  Mat states;                // column n is |E_n(t)>
  Eigen::VectorXd theta;     // int_0^t E_n
};

// Eigen-decomposition of a Hermitian H(t) along a grid. Levels are sorted
// ascending at t0 and then followed by eigenvector overlap, so the tracked
// order survives sign changes of the spectrum. Gauge: <E_n(t_k)|E_n(t_k+1)>
// is real and positive; at t0 the largest component of each vector is real
// and positive.
class EigenPath {
 public:
  const TimeGrid& grid() const { return grid_; }
  Eigen::Index dim() const { return ham_.dim(); }
  const Generator& hamiltonian() const { return ham_; }

  const Eigen::VectorXd& energies(std::size_t k) const { return energies_[k]; }
  const Mat& states(std::size_t k) const { return states_[k]; }
  const Eigen::VectorXd& theta(std::size_t k) const { return theta_[k]; }
  // d/dt |E_n> by central differences (one-sided, second order, at the ends).
  const Mat& state_derivatives(std::size_t k) const { return dstates_[k]; }

  // Frame at an arbitrary time: fresh decomposition, ordering and gauge
  // matched to the nearest grid node, theta extended by a local trapezoid.
  EigenFrame at(double t) const;

  double min_gap() const { return min_gap_; }
  // max over the grid and m != n of |<E_m|dE_n/dt>| / |E_n - E_m|.
  double adiabaticity_metric() const;

 private:
  friend EigenPath track_eigenpath(const Generator&, const TimeGrid&, double,
                                   std::span<const double>);
  EigenPath(Generator ham, TimeGrid grid) : ham_(std::move(ham)), grid_(grid) {}

  Generator ham_;
  TimeGrid grid_;
  std::vector<Eigen::VectorXd> energies_;
  std::vector<Mat> states_;
  std::vector<Eigen::VectorXd> theta_;
  std::vector<Mat> dstates_;
  double min_gap_ = 0.0;
};

// gap_threshold <= 0 selects 1e-6 * max|E| over the path. Throws a
// numerical error naming the time of the first gap below threshold.
// Breakpoints split the theta quadrature (piecewise-constant scalings).
EigenPath track_eigenpath(const Generator& hamiltonian, const TimeGrid& grid,
                          double gap_threshold = 0.0, std::span<const double> breakpoints = {});

// Adiabatic-frame generator for the coefficients psi_n in the expansion
// |psi> = sum_n psi_n e^{-i theta_n} |E_n(t)>:
//   M_mn = -e^{i(theta_m - theta_n)} <E_m|dH/dt|E_n> / (E_n - E_m),  m != n
//   M_nn = -<E_n|dE_n/dt>.
// With no dH/dt callback a central difference of H is used.
Generator adiabatic_generator(const EigenPath& path,
                              std::function<Mat(double)> hamiltonian_derivative = nullptr);

// U(t) = sum_n e^{i theta_n(t)} |E_n(t0)><E_n(t)|.
lindyn::FramePath adiabatic_frame(const EigenPath& path);

// Memory kernel g'(t,s) of the ground-state amplitude for a two-level path;
// feed to solve_p with a zero phase.
reduced::MemoryKernel two_level_kernel(const EigenPath& path);

// (1 + c(t)) H(t): scales eigenvalues, keeps eigenvectors.
Generator scaled_control(const Generator& hamiltonian, const control::PulseSequence& pulses);

// Lab-frame LEO c(t) [2|E_0(t)><E_0(t)| - I].
Mat lab_leo(const EigenPath& path, const control::PulseSequence& pulses, double t);

}  // namespace onecomp::adiabatic
