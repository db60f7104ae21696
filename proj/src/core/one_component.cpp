#include "onecomp/one_component.hpp"

#include <cmath>
#include <sstream>

#include "onecomp/parallel.hpp"

namespace onecomp::reduced {

PhaseAccumulator::PhaseAccumulator(TimeGrid grid, std::vector<cplx> h, std::vector<cplx> c)
    : grid_(grid), h_(std::move(h)), c_(std::move(c)) {
  require(h_.size() == grid_.size() && c_.size() == grid_.size(), "phase: grid size mismatch");
}

PhaseAccumulator PhaseAccumulator::zero(const TimeGrid& grid) {
  return PhaseAccumulator(grid, std::vector<cplx>(grid.size()), std::vector<cplx>(grid.size()));
}

PhaseAccumulator phase_integral(const std::function<cplx(double)>& h, const TimeGrid& grid,
                                std::span<const double> breakpoints) {
  std::vector<cplx> hs(grid.size());
  std::vector<cplx> cs(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    hs[k] = h(grid.at(k));
    if (!is_finite(hs[k])) {
      std::ostringstream os;
      os << "phase_integral: non-finite h at t=" << grid.at(k);
      fail(ErrorKind::numerical, os.str());
    }
  }
  cplx acc = 0.0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double a = grid.at(k);
    const double b = grid.at(k + 1);
    if (breakpoints.empty()) {
      acc += 0.5 * (b - a) * (hs[k] + hs[k + 1]);
    } else {
      const auto pts = lindyn::split_interval(a, b, breakpoints);
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = pts[i];
        const double hi = pts[i + 1];
        const double nudge = lindyn::interior_nudge(b - a, lo, hi);
        const cplx v = 0.5 * (hi - lo) * (h(lo + nudge) + h(hi - nudge));
        if (!is_finite(v)) fail(ErrorKind::numerical, "phase_integral: non-finite h");
        acc += v;
      }
    }
    cs[k + 1] = I * acc;
  }
  return PhaseAccumulator(grid, std::move(hs), std::move(cs));
}

MemoryKernel MemoryKernel::analytic(Fn g, TimeGrid grid, double markov_rate) {
  require(static_cast<bool>(g), "kernel: empty callback");
  require(std::isfinite(markov_rate), "kernel: non-finite Markov rate");
  MemoryKernel k(grid, Source::analytic);
  k.fn_ = std::move(g);
  k.markov_rate_ = markov_rate;
  return k;
}

MemoryKernel MemoryKernel::markov(double lambda, TimeGrid grid) {
  return analytic([](double, double) { return cplx{}; }, grid, lambda);
}

MemoryKernel MemoryKernel::separable(TimeGrid grid, std::vector<std::vector<cplx>> left,
                                     std::vector<std::vector<cplx>> right, double markov_rate) {
  require(left.size() == right.size(), "kernel: separable factor count mismatch");
  for (std::size_t r = 0; r < left.size(); ++r) {
    require(left[r].size() == grid.size() && right[r].size() == grid.size(),
            "kernel: separable factor does not match grid");
  }
  MemoryKernel k(grid, Source::analytic);
  k.left_ = std::move(left);
  k.right_ = std::move(right);
  k.markov_rate_ = markov_rate;
  return k;
}

MemoryKernel MemoryKernel::table(TimeGrid grid, std::vector<cplx> lower, Source source) {
  if (grid.steps() > kMaxKernelSteps) {
    std::ostringstream os;
    os << "kernel: table limited to " << kMaxKernelSteps << " steps, grid has " << grid.steps();
    fail(ErrorKind::invalid_argument, os.str());
  }
  const std::size_t n = grid.size();
  require(lower.size() == n * (n + 1) / 2, "kernel: table size does not match grid");
  MemoryKernel k(grid, source);
  k.table_ = std::move(lower);
  return k;
}

cplx MemoryKernel::operator()(std::size_t i, std::size_t j) const {
  if (fn_) return fn_(grid_.at(i), grid_.at(j));
  if (!left_.empty()) {
    cplx sum = 0.0;
    for (std::size_t r = 0; r < left_.size(); ++r) sum += left_[r][i] * right_[r][j];
    return sum;
  }
  if (table_.empty()) return 0.0;
  return table_[tri_index(i, j)];
}

MemoryKernel kernel_from_blocks(const lindyn::PQBlocks& blocks, const TimeGrid& grid,
                                std::span<const double> breakpoints, std::size_t workers) {
  if (grid.steps() > kMaxKernelSteps) {
    std::ostringstream os;
    os << "kernel: table limited to " << kMaxKernelSteps << " steps, grid has " << grid.steps();
    fail(ErrorKind::invalid_argument, os.str());
  }
  const std::size_t n = grid.size();
  const Eigen::Index q = blocks.dim() - 1;
  std::vector<cplx> table(n * (n + 1) / 2, cplx{});
  if (q == 0) return MemoryKernel::table(grid, std::move(table), MemoryKernel::Source::blocks);

  std::vector<RowVec> r(n);
  std::vector<Vec> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto b = blocks.at(grid.at(k));
    r[k] = b.r;
    w[k] = b.w;
  }
  const auto d = [&blocks](double t) { return blocks.d(t); };
  std::vector<Mat> step(grid.steps());
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const auto pts = lindyn::split_interval(grid.at(k), grid.at(k + 1), breakpoints);
    Mat s = Mat::Identity(q, q);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double nudge = lindyn::interior_nudge(grid.dt(), pts[i], pts[i + 1]);
      s = lindyn::rk4_step_matrix(d, pts[i], pts[i + 1] - pts[i], nudge) * s;
    }
    step[k] = std::move(s);
  }

  parallel_for(n, workers == 0 ? default_workers() : workers, [&](std::size_t j) {
    Vec v = w[j];
    table[MemoryKernel::tri_index(j, j)] = (r[j] * v)(0);
    for (std::size_t i = j + 1; i < n; ++i) {
      v = step[i - 1] * v;
      table[MemoryKernel::tri_index(i, j)] = (r[i] * v)(0);
    }
  });
  return MemoryKernel::table(grid, std::move(table), MemoryKernel::Source::blocks);
}

AmplitudeSeries solve_p(const MemoryKernel& kernel, const PhaseAccumulator& phase,
                        VolterraScheme scheme) {
  const TimeGrid& grid = kernel.grid();
  require(phase.grid() == grid, "solve_p: kernel and phase grids differ");
  const std::size_t n = grid.size();
  const double dt = grid.dt();
  const double lambda = kernel.markov_rate();

  std::vector<cplx> fwd(n);  // e^{iC_k}
  std::vector<cplx> bwd(n);  // e^{-iC_k}
  for (std::size_t k = 0; k < n; ++k) {
    fwd[k] = std::exp(I * phase.C(k));
    bwd[k] = std::exp(-I * phase.C(k));
  }

  std::vector<cplx> p(n), f(n), big_p(n);
  p[0] = 1.0;
  f[0] = -lambda * p[0];

  // weighted history e^{-iC_j} p_j, with trapezoid weight 1/2 on j = 0
  std::vector<cplx> hist(n);
  hist[0] = 0.5 * bwd[0] * p[0];

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t next = i + 1;
    cplx sum = 0.0;
    for (std::size_t j = 0; j < next; ++j) sum += kernel(next, j) * hist[j];
    const cplx diag = kernel(next, next);
    if (!is_finite(sum) || !is_finite(diag)) {
      std::ostringstream os;
      os << "solve_p: non-finite kernel at t=" << grid.at(next);
      fail(ErrorKind::numerical, os.str());
    }
    const cplx a = dt * fwd[next] * sum;
    const cplx c = 0.5 * dt * diag - lambda;
    if (scheme == VolterraScheme::trapezoid) {
      p[next] = (p[i] + 0.5 * dt * (f[i] + a)) / (1.0 - 0.5 * dt * c);
    } else {
      const cplx predicted = p[i] + dt * f[i];
      p[next] = p[i] + 0.5 * dt * (f[i] + a + c * predicted);
    }
    f[next] = a + c * p[next];
    if (!(std::abs(p[next]) <= 1e3)) {
      std::ostringstream os;
      os << "solve_p: |p| exceeded 1e3 at t=" << grid.at(next) << " (unstable inputs)";
      fail(ErrorKind::numerical, os.str());
    }
    // the just-solved point now enters later sums with full weight
    hist[next] = bwd[next] * p[next];
  }
  for (std::size_t k = 0; k < n; ++k) big_p[k] = p[k] * bwd[k];
  return AmplitudeSeries{grid, std::move(p), std::move(big_p), std::move(f)};
}

cplx leakage_integral(const MemoryKernel& kernel, const PhaseAccumulator& phase,
                      const AmplitudeSeries& amplitude, double t) {
  const TimeGrid& grid = kernel.grid();
  const std::size_t k = grid.require_index(t);
  require(amplitude.p.size() == grid.size(), "leakage_integral: amplitude grid mismatch");
  cplx local = -kernel.markov_rate() * std::exp(-I * phase.C(k)) * amplitude.p[k];
  if (k == 0) return local;
  cplx sum = 0.0;
  for (std::size_t j = 0; j <= k; ++j) {
    const double w = (j == 0 || j == k) ? 0.5 : 1.0;
    sum += w * std::exp(-I * phase.C(j)) * kernel(k, j) * amplitude.p[j];
  }
  return grid.dt() * sum + local;
}

cplx closed_form_two_state(cplx h_prime, cplx coupling, double t) {
  const cplx delta = std::sqrt(h_prime * h_prime + 4.0 * coupling);
  const double scale = std::abs(h_prime) + std::sqrt(std::abs(coupling));
  if (scale == 0.0) return 1.0;
  if (std::abs(delta) <= 1e-7 * scale) {
    // confluent roots
    return (1.0 + 0.5 * h_prime * t) * std::exp(-0.5 * h_prime * t);
  }
  return (-h_prime + delta) / (2.0 * delta) * std::exp(0.5 * (-h_prime - delta) * t) +
         (h_prime + delta) / (2.0 * delta) * std::exp(0.5 * (-h_prime + delta) * t);
}

Reduction reduce(const lindyn::Generator& gen, const Vec& target, const TimeGrid& grid,
                 std::span<const double> breakpoints, VolterraScheme scheme, std::size_t workers) {
  auto blocks = lindyn::pq_partition(gen, target);
  auto kernel = kernel_from_blocks(blocks, grid, breakpoints, workers);
  auto phase = phase_integral([&blocks](double t) { return blocks.h(t); }, grid, breakpoints);
  auto amplitude = solve_p(kernel, phase, scheme);
  return Reduction{std::move(blocks), std::move(kernel), std::move(phase), std::move(amplitude)};
}

}  // namespace onecomp::reduced
