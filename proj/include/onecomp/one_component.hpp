#pragma once

// Exact one-component reduction of d/dt X = M X onto a target direction:
//
//   d/dt p(t) = int_0^t ds g'(t,s) p(s),   g'(t,s) = e^{i[C(t)-C(s)]} g(t,s),
//   g(t,s) = R(t) G(t,s) W(s),  C(t) = i int_0^t h,  P(t) = p(t) e^{int_0^t h}.

#include <optional>
#include <span>
#include <vector>

#include "onecomp/lindyn.hpp"

namespace onecomp::reduced {

using lindyn::TimeGrid;

// Largest grid (in steps) a kernel table may cover.
inline constexpr std::size_t kMaxKernelSteps = 20000;

class PhaseAccumulator {
 public:
  PhaseAccumulator(TimeGrid grid, std::vector<cplx> h, std::vector<cplx> c);
  static PhaseAccumulator zero(const TimeGrid& grid);

  const TimeGrid& grid() const { return grid_; }
  cplx h(std::size_t k) const { return h_[k]; }
  cplx C(std::size_t k) const { return c_[k]; }
  const std::vector<cplx>& C() const { return c_; }

 private:
  TimeGrid grid_;
  std::vector<cplx> h_;
  std::vector<cplx> c_;
};

// C(t_k) = i int_0^{t_k} h by the trapezoid rule. Each grid step is split at
// the breakpoints it contains, and h is sampled one-sidedly inside every
// piece, so piecewise-constant controls contribute exact areas.
PhaseAccumulator phase_integral(const std::function<cplx(double)>& h, const TimeGrid& grid,
                                std::span<const double> breakpoints = {});

class MemoryKernel {
 public:
  using Fn = std::function<cplx(double t, double s)>;
  enum class Source { analytic, blocks, table };

  // g(t, s) evaluated on demand. `markov_rate` adds a -2*lambda*delta(t-s)
  // component, applied analytically as the local term -lambda p(t).
  static MemoryKernel analytic(Fn g, TimeGrid grid, double markov_rate = 0.0);
  static MemoryKernel markov(double lambda, TimeGrid grid);
  // g(t_i, s_j) = sum_r left[r][i] * right[r][j].
  static MemoryKernel separable(TimeGrid grid, std::vector<std::vector<cplx>> left,
                                std::vector<std::vector<cplx>> right, double markov_rate = 0.0);
  // Lower-triangular table, row-major: entry (i, j), j <= i, at i(i+1)/2 + j.
  static MemoryKernel table(TimeGrid grid, std::vector<cplx> lower, Source source = Source::table);

  cplx operator()(std::size_t i, std::size_t j) const;
  double markov_rate() const { return markov_rate_; }
  const TimeGrid& grid() const { return grid_; }
  Source source() const { return source_; }

  static std::size_t tri_index(std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; }

 private:
  MemoryKernel(TimeGrid grid, Source source) : grid_(grid), source_(source) {}

  TimeGrid grid_;
  Source source_;
  Fn fn_;
  std::vector<cplx> table_;
  std::vector<std::vector<cplx>> left_;
  std::vector<std::vector<cplx>> right_;
  double markov_rate_ = 0.0;
};

// g(t_i, s_j) = R(t_i) G(t_i, s_j) W(s_j). Columns v_j(t) = G(t, s_j) W(s_j)
// are advanced one RK4 step at a time, independently per column. Steps are
// split at breakpoints like lindyn::propagate.
MemoryKernel kernel_from_blocks(const lindyn::PQBlocks& blocks, const TimeGrid& grid,
                                std::span<const double> breakpoints = {},
                                std::size_t workers = 0);

struct AmplitudeSeries {
  TimeGrid grid;
  std::vector<cplx> p;     // reduced amplitude
  std::vector<cplx> P;     // p e^{int h}
  std::vector<cplx> pdot;  // right-hand side at each grid point
};

enum class VolterraScheme {
  trapezoid,           // implicit trapezoid; the linear corrector is solved exactly
  predictor_corrector  // one explicit predictor, one corrector sweep
};

// Trapezoidal quadrature of the memory integral with trapezoidal time
// stepping. Throws when |p| exceeds 1e3 or the kernel is non-finite.
AmplitudeSeries solve_p(const MemoryKernel& kernel, const PhaseAccumulator& phase,
                        VolterraScheme scheme = VolterraScheme::trapezoid);

// I(t_k) = int_0^{t_k} e^{-iC(s)} g(t_k, s) p(s) ds (trapezoid; the Markov
// component contributes -lambda e^{-iC(t)} p(t)). Equals e^{-iC} dp/dt.
cplx leakage_integral(const MemoryKernel& kernel, const PhaseAccumulator& phase,
                      const AmplitudeSeries& amplitude, double t);

// Characteristic-root solution of p'' + h' p' - g p = 0, p(0) = 1, p'(0) = 0,
// for a two-state block with constant h' = h - a and coupling g = R W.
cplx closed_form_two_state(cplx h_prime, cplx coupling, double t);

// Full pipeline: partition, kernel, phase, Volterra solve.
struct Reduction {
  lindyn::PQBlocks blocks;
  MemoryKernel kernel;
  PhaseAccumulator phase;
  AmplitudeSeries amplitude;
};
Reduction reduce(const lindyn::Generator& gen, const Vec& target, const TimeGrid& grid,
                 std::span<const double> breakpoints = {},
                 VolterraScheme scheme = VolterraScheme::trapezoid, std::size_t workers = 0);

}  // namespace onecomp::reduced
