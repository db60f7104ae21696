#include "onecomp/spin_bath.hpp"

#include <cmath>
#include <sstream>

namespace onecomp::models {

namespace {

void check_bath_matrix(const Eigen::MatrixXd& b, std::size_t n, const char* name) {
  if (b.size() == 0) return;
  if (b.rows() != static_cast<Eigen::Index>(n) || b.cols() != static_cast<Eigen::Index>(n)) {
    fail(ErrorKind::invalid_argument, std::string("spin bath: ") + name + " must be N x N");
  }
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    if (b(i, i) != 0.0) {
      fail(ErrorKind::invalid_argument, std::string("spin bath: ") + name + " diagonal must vanish");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(b(i, j) - b(j, i)) > 1e-14 * (1.0 + std::abs(b(i, j)))) {
        std::ostringstream os;
        os << "spin bath: " << name << " is not symmetric at (" << i << "," << j << ")";
        fail(ErrorKind::invalid_argument, os.str());
      }
    }
  }
}

void validate(const SpinBathSpec& spec) {
  const std::size_t n = spec.bath_size();
  require(static_cast<bool>(spec.omega), "spin bath: Omega(t) missing");
  require(spec.jz.size() == n && spec.jperp.size() == n,
          "spin bath: coupling arrays must have one entry per nuclear spin");
  for (std::size_t i = 0; i < n; ++i) {
    require(static_cast<bool>(spec.jz[i]) && static_cast<bool>(spec.jperp[i]),
            "spin bath: empty coupling function");
  }
  check_bath_matrix(spec.bz, n, "B^z");
  check_bath_matrix(spec.bxy, n, "B^x + B^y");
}

}  // namespace

bool SpinBathSpec::has_inner_coupling() const {
  return (bz.size() != 0 && bz.cwiseAbs().maxCoeff() > 0.0) ||
         (bxy.size() != 0 && bxy.cwiseAbs().maxCoeff() > 0.0);
}

SpinBathSpec SpinBathSpec::constant(double omega, std::vector<double> nuclear,
                                    std::vector<double> jz, std::vector<double> jperp) {
  SpinBathSpec s;
  s.omega = [omega](double) { return omega; };
  s.nuclear = std::move(nuclear);
  for (double v : jz) s.jz.push_back([v](double) { return v; });
  for (double v : jperp) s.jperp.push_back([v](double) { return v; });
  return s;
}

lindyn::Generator spin_bath_generator(const SpinBathSpec& spec) {
  validate(spec);
  const auto n = static_cast<Eigen::Index>(spec.bath_size());
  return lindyn::Generator::from_hamiltonian(n + 1, [spec, n](double t) -> Mat {
    Mat h = Mat::Zero(n + 1, n + 1);
    double electron = spec.omega(t);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double jz = spec.jz[i](t);
      const double jp = spec.jperp[i](t);
      electron -= 0.5 * jz;
      h(0, i + 1) = jp;
      h(i + 1, 0) = jp;
      double diag = spec.nuclear[i] - 0.5 * jz;
      for (Eigen::Index m = 0; m < n; ++m) {
        if (m == i) continue;
        if (spec.bz.size() != 0) diag -= 0.5 * spec.bz(i, m);
        if (spec.bxy.size() != 0) h(i + 1, m + 1) = spec.bxy(i, m);
      }
      h(i + 1, i + 1) = diag;
    }
    h(0, 0) = electron;
    return h;
  });
}

SpinBathReduction spin_bath_kernel(const SpinBathSpec& spec, const lindyn::TimeGrid& grid,
                                   std::span<const double> breakpoints) {
  validate(spec);
  if (spec.has_inner_coupling()) {
    fail(ErrorKind::invalid_argument,
         "spin_bath_kernel: intra-bath coupling present; use kernel_from_blocks");
  }
  const std::size_t n = spec.bath_size();
  const std::size_t len = grid.size();
  std::vector<std::vector<cplx>> left(n, std::vector<cplx>(len));
  std::vector<std::vector<cplx>> right(n, std::vector<cplx>(len));
  for (std::size_t b = 0; b < n; ++b) {
    const auto& jz = spec.jz[b];
    const auto& jp = spec.jperp[b];
    double lambda = 0.0;  // int_0^t J^z / 2, Simpson per step
    for (std::size_t k = 0; k < len; ++k) {
      const double t = grid.at(k);
      if (k > 0) {
        const double a = grid.at(k - 1);
        lambda += grid.dt() / 12.0 * (jz(a) + 4.0 * jz(0.5 * (a + t)) + jz(t));
      }
      const double phase = -spec.nuclear[b] * t + lambda;
      const cplx rot = std::exp(I * phase);
      left[b][k] = -jp(t) * rot;
      right[b][k] = jp(t) * std::conj(rot);
    }
  }
  auto kernel = reduced::MemoryKernel::separable(grid, std::move(left), std::move(right));
  auto phase = reduced::phase_integral(
      [&spec](double t) {
        double e = spec.omega(t);
        for (const auto& jz : spec.jz) e -= 0.5 * jz(t);
        return -I * e;
      },
      grid, breakpoints);
  return SpinBathReduction{std::move(kernel), std::move(phase)};
}

}  // namespace onecomp::models
