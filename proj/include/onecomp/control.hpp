#pragma once

// Leakage elimination: LEO = c(t) [2|a><a| - I] added to the generator,
// parity kicks (bang-bang limit), and Zeno projection.

#include <functional>
#include <vector>

#include "onecomp/lindyn.hpp"
#include "onecomp/pulses.hpp"

namespace onecomp::control {

using lindyn::Generator;

struct LEOSpec {
  Vec target;
  PulseSequence pulses;
};

// 2|a><a| - I for a normalized target.
Mat parity_operator(const Vec& target);

// c(t) [2|a><a| - I].
Mat rotating_leo(const LEOSpec& spec, double t);

// M(t) - i c(t) [2|a><a| - I]: h picks up -i c, the complement +i c.
Generator apply_leo(const Generator& gen, const LEOSpec& spec);
// Same with an arbitrary control function.
Generator apply_leo(const Generator& gen, const Vec& target, std::function<double(double)> c);

// Block-diagonal part H_d = P H P + Q H Q and leakage L = H - H_d with
// P = |a><a|.
Mat block_diagonal_part(const Mat& h, const Vec& target);
Mat leakage_part(const Mat& h, const Vec& target);

// Alternating product ... F_1 R F_0 R with R = 2|a><a| - I and
// F_k = exp(-i H~(t0 + (k + 1/2) tau) tau). Requires an ideal_delta spec.
Mat parity_kick_propagator(const Generator& gen_rot, const LEOSpec& spec, double tau,
                           std::size_t n_kicks, double t0 = 0.0);

// prod_k exp(-i H_d(t0 + (k + 1/2) tau) tau), times R when n_kicks is odd so
// it is directly comparable with parity_kick_propagator.
Mat ideal_block_propagator(const Generator& gen_rot, const Vec& target, double tau,
                           std::size_t n_kicks, double t0 = 0.0);

// Finite-strength bang-bang: each kick is exp(-i (c Z + H~) width) with
// Z = 2|a><a| - I and c width = pi/2, so exp(-i c Z width) = -i Z.
Mat finite_bb_propagator(const Generator& gen_rot, const Vec& target, double tau,
                         double pulse_width, std::size_t n_kicks, double t0 = 0.0);

// Leakage probability 1 - |<a|U|a>|^2.
double leakage_probability(const Mat& u, const Vec& target);

struct ZenoOutcome {
  Vec state;
  double survival = 0.0;
  bool absorbed = false;
};

// Projects onto |a><a| and renormalizes. A vanishing overlap (< 1e-15)
// returns absorbed = true with the state left untouched.
ZenoOutcome zeno_step(const Vec& state, const Vec& target);

struct ZenoRun {
  double survival = 1.0;  // product of per-projection survivals
  bool absorbed = false;
  Vec state;
};

// Evolves target_path(0) for t_total, projecting onto target_path(t_j) at
// n equally spaced instants t_j = j t_total / n.
ZenoRun zeno_evolve(const Generator& gen, const std::function<Vec(double)>& target_path,
                    double t_total, std::size_t n_projections, std::size_t substeps = 20);

}  // namespace onecomp::control
