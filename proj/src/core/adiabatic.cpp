#include "onecomp/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace onecomp::adiabatic {

namespace {

constexpr double kFdStep = 1e-5;

struct Decomposition {
  Eigen::VectorXd energies;
  Mat states;
};

Decomposition decompose(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(h);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numerical, "eigen-decomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// Reorders `next` to follow `prev` by maximal overlap and fixes each column's
// phase so that <prev_n|next_n> is real and positive.
Decomposition match_to(const Mat& prev, Decomposition next, double t) {
  const Eigen::Index n = prev.cols();
  const Eigen::MatrixXd overlap = (prev.adjoint() * next.states).cwiseAbs();
  std::vector<Eigen::Index> assign(n, -1);
  std::vector<bool> row_used(n, false), col_used(n, false);
  for (Eigen::Index round = 0; round < n; ++round) {
    double best = -1.0;
    Eigen::Index br = 0, bc = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (row_used[r]) continue;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (!col_used[c] && overlap(r, c) > best) {
          best = overlap(r, c);
          br = r;
          bc = c;
        }
      }
    }
    if (best < 1e-3) {
      std::ostringstream os;
      os << "eigenpath: lost track of level " << br << " at t=" << t;
      fail(ErrorKind::numerical, os.str());
    }
    row_used[br] = col_used[bc] = true;
    assign[br] = bc;
  }
  Decomposition out{Eigen::VectorXd(n), Mat(n, n)};
  for (Eigen::Index r = 0; r < n; ++r) {
    out.energies(r) = next.energies(assign[r]);
    Vec v = next.states.col(assign[r]);
    const cplx ov = prev.col(r).dot(v);
    v *= std::conj(ov) / std::abs(ov);
    out.states.col(r) = v;
  }
  return out;
}

void fix_initial_gauge(Mat& states) {
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    Eigen::Index idx = 0;
    states.col(c).cwiseAbs().maxCoeff(&idx);
    const cplx z = states(idx, c);
    states.col(c) *= std::conj(z) / std::abs(z);
  }
}

double min_pair_gap(const Eigen::VectorXd& e) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < e.size(); ++m) {
    for (Eigen::Index n = m + 1; n < e.size(); ++n) gap = std::min(gap, std::abs(e(m) - e(n)));
  }
  return gap;
}

}  // namespace

EigenFrame EigenPath::at(double t) const {
  const double x = std::clamp((t - grid_.t0()) / grid_.dt(), 0.0, static_cast<double>(grid_.steps()));
  const auto k = static_cast<std::size_t>(std::lround(x));
  if (std::abs(t - grid_.at(k)) <= 1e-12 * grid_.dt()) {
    return EigenFrame{energies_[k], states_[k], theta_[k]};
  }
  auto d = match_to(states_[k], decompose(ham_.hamiltonian(t)), t);
  Eigen::VectorXd theta = theta_[k] + 0.5 * (t - grid_.at(k)) * (energies_[k] + d.energies);
  return EigenFrame{std::move(d.energies), std::move(d.states), std::move(theta)};
}

double EigenPath::adiabaticity_metric() const {
  double metric = 0.0;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    const Mat coupling = states_[k].adjoint() * dstates_[k];
    for (Eigen::Index m = 0; m < dim(); ++m) {
      for (Eigen::Index n = 0; n < dim(); ++n) {
        if (m == n) continue;
        metric = std::max(metric, std::abs(coupling(m, n)) /
                                      std::abs(energies_[k](n) - energies_[k](m)));
      }
    }
  }
  return metric;
}

EigenPath track_eigenpath(const Generator& hamiltonian, const TimeGrid& grid, double gap_threshold,
                          std::span<const double> breakpoints) {
  require(hamiltonian.hermitian(), "track_eigenpath: Hamiltonian generator required");
  EigenPath path(hamiltonian, grid);
  const std::size_t n = grid.size();
  path.energies_.reserve(n);
  path.states_.reserve(n);

  auto first = decompose(hamiltonian.hamiltonian(grid.t0()));
  fix_initial_gauge(first.states);
  path.energies_.push_back(first.energies);
  path.states_.push_back(first.states);
  for (std::size_t k = 1; k < n; ++k) {
    auto d = match_to(path.states_.back(), decompose(hamiltonian.hamiltonian(grid.at(k))),
                      grid.at(k));
    path.energies_.push_back(std::move(d.energies));
    path.states_.push_back(std::move(d.states));
  }

  double emax = 0.0;
  for (const auto& e : path.energies_) emax = std::max(emax, e.cwiseAbs().maxCoeff());
  const double threshold = gap_threshold > 0.0 ? gap_threshold : 1e-6 * emax;
  path.min_gap_ = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double gap = min_pair_gap(path.energies_[k]);
    path.min_gap_ = std::min(path.min_gap_, gap);
    if (path.dim() > 1 && gap < threshold) {
      std::ostringstream os;
      os << "track_eigenpath: level crossing (gap " << gap << " below " << threshold
         << ") at t=" << grid.at(k);
      fail(ErrorKind::numerical, os.str());
    }
  }

  path.theta_.assign(n, Eigen::VectorXd::Zero(path.dim()));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double a = grid.at(k);
    const double b = grid.at(k + 1);
    Eigen::VectorXd inc;
    if (breakpoints.empty()) {
      inc = 0.5 * (b - a) * (path.energies_[k] + path.energies_[k + 1]);
    } else {
      inc = Eigen::VectorXd::Zero(path.dim());
      const auto pts = lindyn::split_interval(a, b, breakpoints);
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double nudge = lindyn::interior_nudge(b - a, pts[i], pts[i + 1]);
        const auto lo = match_to(path.states_[k], decompose(hamiltonian.hamiltonian(pts[i] + nudge)), a);
        const auto hi =
            match_to(path.states_[k], decompose(hamiltonian.hamiltonian(pts[i + 1] - nudge)), a);
        inc += 0.5 * (pts[i + 1] - pts[i]) * (lo.energies + hi.energies);
      }
    }
    path.theta_[k + 1] = path.theta_[k] + inc;
  }

  path.dstates_.resize(n);
  const double dt = grid.dt();
  for (std::size_t k = 0; k < n; ++k) {
    if (n < 3) {
      path.dstates_[k] = (path.states_[n - 1] - path.states_[0]) / (grid.at(n - 1) - grid.t0());
    } else if (k == 0) {
      path.dstates_[k] = (-3.0 * path.states_[0] + 4.0 * path.states_[1] - path.states_[2]) / (2.0 * dt);
    } else if (k == n - 1) {
      path.dstates_[k] =
          (3.0 * path.states_[k] - 4.0 * path.states_[k - 1] + path.states_[k - 2]) / (2.0 * dt);
    } else {
      path.dstates_[k] = (path.states_[k + 1] - path.states_[k - 1]) / (2.0 * dt);
    }
  }
  return path;
}

Generator adiabatic_generator(const EigenPath& path,
                              std::function<Mat(double)> hamiltonian_derivative) {
  const Eigen::Index n = path.dim();
  const auto& ham = path.hamiltonian();
  auto shared = std::make_shared<const EigenPath>(path);
  auto hdot = hamiltonian_derivative
                  ? std::move(hamiltonian_derivative)
                  : std::function<Mat(double)>([ham](double t) -> Mat {
                      return (ham.hamiltonian(t + kFdStep) - ham.hamiltonian(t - kFdStep)) /
                             (2.0 * kFdStep);
                    });
  return Generator(
      n,
      [shared, hdot = std::move(hdot), n](double t) -> Mat {
        const EigenPath& path = *shared;
        const auto& grid = path.grid();
        EigenFrame f;
        Mat dstates;
        if (auto k = grid.index_of(t)) {
          f = EigenFrame{path.energies(*k), path.states(*k), path.theta(*k)};
          dstates = path.state_derivatives(*k);
        } else {
          f = path.at(t);
          dstates = (path.at(t + kFdStep).states - path.at(t - kFdStep).states) / (2.0 * kFdStep);
        }
        const Mat coupling = f.states.adjoint() * hdot(t) * f.states;
        Mat m(n, n);
        for (Eigen::Index a = 0; a < n; ++a) {
          for (Eigen::Index b = 0; b < n; ++b) {
            if (a == b) {
              const cplx berry = f.states.col(a).dot(dstates.col(a));
              m(a, a) = -I * berry.imag();
            } else {
              m(a, b) = -std::exp(I * (f.theta(a) - f.theta(b))) * coupling(a, b) /
                        (f.energies(b) - f.energies(a));
            }
          }
        }
        return m;
      },
      true);
}

lindyn::FramePath adiabatic_frame(const EigenPath& path) {
  const Mat v0 = path.states(0);
  auto shared = std::make_shared<const EigenPath>(path);
  return lindyn::FramePath([shared, v0](double t) -> Mat {
    const EigenFrame f = shared->at(t);
    Eigen::VectorXcd phases(f.theta.size());
    for (Eigen::Index n = 0; n < f.theta.size(); ++n) phases(n) = std::exp(I * f.theta(n));
    return v0 * phases.asDiagonal() * f.states.adjoint();
  });
}

reduced::MemoryKernel two_level_kernel(const EigenPath& path) {
  if (path.dim() != 2) fail(ErrorKind::invalid_argument, "two_level_kernel: path must be two-level");
  const auto& grid = path.grid();
  const std::size_t n = grid.size();
  std::vector<cplx> left(n), right(n);
  std::vector<cplx> couple01(n), couple10(n), rate(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Mat c = path.states(k).adjoint() * path.state_derivatives(k);
    couple01[k] = c(0, 1);
    couple10[k] = c(1, 0);
    // <E0|dE0> - <E1|dE1>, purely imaginary
    rate[k] = I * (c(0, 0).imag() - c(1, 1).imag());
  }
  cplx acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) acc += 0.5 * grid.dt() * (rate[k - 1] + rate[k]);
    const double gap_phase = path.theta(k)(1) - path.theta(k)(0);
    const cplx lambda = -I * gap_phase + acc;
    left[k] = couple01[k] * std::exp(lambda);
    right[k] = couple10[k] * std::exp(-lambda);
  }
  return reduced::MemoryKernel::separable(grid, {std::move(left)}, {std::move(right)});
}

Generator scaled_control(const Generator& hamiltonian, const control::PulseSequence& pulses) {
  return Generator(
      hamiltonian.dim(),
      [hamiltonian, pulses](double t) -> Mat { return (1.0 + pulses.value(t)) * hamiltonian(t); },
      hamiltonian.hermitian());
}

Mat lab_leo(const EigenPath& path, const control::PulseSequence& pulses, double t) {
  const EigenFrame f = path.at(t);
  const Vec e0 = f.states.col(0);
  return pulses.value(t) * (2.0 * e0 * e0.adjoint() - Mat::Identity(path.dim(), path.dim()));
}

}  // namespace onecomp::adiabatic
