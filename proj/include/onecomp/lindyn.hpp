#pragma once

// Linear dynamics substrate: d/dt X = M(t) X.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "onecomp/common.hpp"

namespace onecomp::lindyn {

// Uniform grid t_k = t0 + k*dt, k = 0..steps. Grid times are computed from
// the index, never accumulated.
class TimeGrid {
 public:
  TimeGrid(double t0, double dt, std::size_t steps);

  // Smallest uniform grid on [t0, t1] whose step does not exceed max_dt.
  static TimeGrid span(double t0, double t1, double max_dt);

  double t0() const { return t0_; }
  double t1() const { return at(steps_); }
  double dt() const { return dt_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return steps_ + 1; }
  double at(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }

  // Index of a grid time (tolerance 1e-9 dt), nullopt when t is off grid.
  std::optional<std::size_t> index_of(double t) const;
  std::size_t require_index(double t) const;

  bool operator==(const TimeGrid&) const = default;

 private:
  double t0_;
  double dt_;
  std::size_t steps_;
};

// Splits [a, b] at the sorted breakpoints strictly inside it. Returns the
// subinterval endpoints including a and b. Slivers shorter than 1e-8 (b-a)
// are merged away.
std::vector<double> split_interval(double a, double b, std::span<const double> breakpoints);

// Offset that moves an evaluation at a piece end of [lo, hi] (a piece of a
// step of length `step`) to the inside of the piece. Scaled by the step, not
// the piece, so it stays above the rounding of t and beyond merged slivers.
double interior_nudge(double step, double lo, double hi);

class Generator {
 public:
  using Fn = std::function<Mat(double)>;

  Generator(Eigen::Index dim, Fn eval, bool hermitian = false);

  static Generator constant(const Mat& m, bool hermitian = false);
  // M(t) = -i H(t); flagged Hermitian.
  static Generator from_hamiltonian(Eigen::Index dim, std::function<Mat(double)> hamiltonian);

  // Evaluates M(t); throws on dimension change, non-finite entries, or a
  // Hermitian-flagged matrix that is not anti-Hermitian.
  Mat operator()(double t) const;
  // H(t) = i M(t). Only meaningful for Hermitian-flagged generators.
  Mat hamiltonian(double t) const;

  Eigen::Index dim() const { return dim_; }
  bool hermitian() const { return hermitian_; }

 private:
  Eigen::Index dim_;
  Fn eval_;
  bool hermitian_;
};

// One classical RK4 step of x' = A(t) x as a matrix: x(t+h) ~ S x(t).
// A is sampled at t + nudge, t + h/2 and t + h - nudge.
Mat rk4_step_matrix(const std::function<Mat(double)>& a, double t, double h, double nudge = 0.0);

// Time series X(t_k) for every grid point. Steps straddling a breakpoint are
// split there so piecewise-smooth generators keep full order.
std::vector<Vec> propagate(const Generator& gen, const Vec& x0, const TimeGrid& grid,
                           std::span<const double> breakpoints = {});

// Single-state advance from t to t + h (RK4, with breakpoint splitting).
Vec advance(const Generator& gen, const Vec& x, double t, double h,
            std::span<const double> breakpoints = {});

enum class OrderedExpScheme {
  rk4,            // product of RK4 step matrices
  magnus_midpoint // product of exp(D(mid) h); second order
};

// G(t, s) = T_<- exp(int_s^t D). s and t must be grid times with s <= t.
Mat time_ordered_propagator(const std::function<Mat(double)>& d, double s, double t,
                            const TimeGrid& grid,
                            OrderedExpScheme scheme = OrderedExpScheme::rk4);

Mat expm(const Mat& m);

// Gram-Schmidt completion of `target` over e_0, e_1, ... (in index order,
// skipping vectors whose residual norm falls below 1e-8). Column 0 of the
// result is the target.
Mat complete_basis(const Vec& target);

struct Blocks {
  cplx h;
  RowVec r;  // 1 x (n-1)
  Vec w;     // (n-1) x 1
  Mat d;     // (n-1) x (n-1)
};

// P-Q split of a generator relative to a fixed target direction.
class PQBlocks {
 public:
  PQBlocks(Generator gen, Mat basis);

  const Mat& basis() const { return basis_; }
  Vec target() const { return basis_.col(0); }
  Eigen::Index dim() const { return gen_.dim(); }
  const Generator& generator() const { return gen_; }

  // B^dagger M(t) B.
  Mat conjugated(double t) const;
  Blocks at(double t) const;
  cplx h(double t) const;
  Mat d(double t) const;

  static Mat reassemble(const Blocks& b);

 private:
  Generator gen_;
  Mat basis_;
};

PQBlocks pq_partition(const Generator& gen, const Vec& target);

// Unitary path U(t). With no analytic derivative, dU/dt is a symmetric
// difference with step fd_step.
class FramePath {
 public:
  using Fn = std::function<Mat(double)>;

  explicit FramePath(Fn unitary, Fn derivative = nullptr, double fd_step = 1e-5);

  // Throws when U(t) U(t)^dagger deviates from I by more than 1e-10.
  Mat unitary(double t) const;
  Mat derivative(double t) const;

 private:
  Fn unitary_;
  Fn derivative_;
  double fd_step_;
};

// Convention |psi~> = U |psi>, H~ = U H U^dagger + i dU/dt U^dagger.
// Returns the rotated generator -i H~(t), Hermitian-flagged.
Generator rotate_generator(const Generator& hamiltonian_gen, const FramePath& frame);

}  // namespace onecomp::lindyn
