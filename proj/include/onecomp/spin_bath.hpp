#pragma once

// Central electron spin coupled to N nuclear spins, single-exciton subspace
// with ordered basis {|1 0...0>, |0 1_n 0...>}.

#include <span>
#include <vector>

#include "onecomp/lindyn.hpp"
#include "onecomp/one_component.hpp"

namespace onecomp::models {

using ScalarFn = std::function<double(double)>;

struct SpinBathSpec {
  ScalarFn omega;                 // electron splitting Omega(t)
  std::vector<double> nuclear;    // omega_n
  std::vector<ScalarFn> jz;       // longitudinal J_n^z(t)
  std::vector<ScalarFn> jperp;    // transverse J_n^x(t) + J_n^y(t)
  Eigen::MatrixXd bz;             // intra-bath B^z_nm (empty = none)
  Eigen::MatrixXd bxy;            // intra-bath B^x_nm + B^y_nm (empty = none)

  std::size_t bath_size() const { return nuclear.size(); }
  bool has_inner_coupling() const;

  static SpinBathSpec constant(double omega, std::vector<double> nuclear, std::vector<double> jz,
                               std::vector<double> jperp);
};

// M(t) = -i H(t), (N+1) x (N+1). Throws on inconsistent array lengths or
// B matrices that are not symmetric with zero diagonal.
lindyn::Generator spin_bath_generator(const SpinBathSpec& spec);

struct SpinBathReduction {
  reduced::MemoryKernel kernel;
  reduced::PhaseAccumulator phase;
};

// Closed-form kernel for the diagonal-D regime (no intra-bath coupling):
//   g(t,s) = -sum_n J_n(t) J_n(s) exp[-i w_n (t-s) + i int_s^t J_n^z/2],
//   C(t)   = int_0^t [Omega - sum_n J_n^z / 2].
SpinBathReduction spin_bath_kernel(const SpinBathSpec& spec, const lindyn::TimeGrid& grid,
                                   std::span<const double> breakpoints = {});

}  // namespace onecomp::models
