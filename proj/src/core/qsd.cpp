#include "onecomp/qsd.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "onecomp/parallel.hpp"
#include "onecomp/seeding.hpp"

namespace onecomp::models {

namespace {

constexpr double kPhasePerSubstep = 0.05;

double simpson(const ScalarFn& f, double a, double b) {
  if (b == a) return 0.0;
  return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

// Filon weights: int_0^1 (1-u) e^{i theta u} du and int_0^1 u e^{i theta u} du.
std::pair<cplx, cplx> filon_weights(double theta) {
  if (std::abs(theta) < 1e-3) {
    const double t2 = theta * theta;
    const cplx w0{0.5 - t2 / 24.0, theta / 6.0 - theta * t2 / 120.0};
    const cplx w1{0.5 - t2 / 8.0, theta / 3.0 - theta * t2 / 30.0};
    return {w0, w1};
  }
  const cplx e = std::exp(I * theta);
  const cplx w1 = e / (I * theta) + (e - 1.0) / (theta * theta);
  const cplx w0 = (e - 1.0) / (I * theta) - w1;
  return {w0, w1};
}

void check_pulses(const QSDCoefficients& coeffs, const control::PulseSequence& pulses) {
  if (!(coeffs.pulses == pulses.params())) {
    fail(ErrorKind::invalid_argument, "qsd: coefficients were built for a different pulse sequence");
  }
}

// Per-step increments of phi_j = e^{i int E_j} psi_j:
//   phi_j(t_{k+1}) = phi_j(t_k) + c0(j,k) z*_k + c1(j,k) z*_{k+1}.
struct StepWeights {
  Eigen::MatrixXcd c0;
  Eigen::MatrixXcd c1;
};

StepWeights step_weights(const QSDSpec& spec, const QSDCoefficients& coeffs,
                         const control::PulseSequence& pulses) {
  const TimeGrid& grid = coeffs.grid;
  const std::size_t n = spec.levels();
  const Eigen::Index m = static_cast<Eigen::Index>(n - 1);
  const auto steps = static_cast<Eigen::Index>(grid.steps());
  StepWeights w{Eigen::MatrixXcd::Zero(m, steps), Eigen::MatrixXcd::Zero(m, steps)};
  const auto edges = pulses.edges(grid.t0(), grid.t1());
  const cplx a0 = spec.target[0];

  for (Eigen::Index k = 0; k < steps; ++k) {
    const double ta = grid.at(static_cast<std::size_t>(k));
    const double tb = grid.at(static_cast<std::size_t>(k) + 1);
    const double dt = tb - ta;
    const cplx ka = coeffs.decay[static_cast<std::size_t>(k)];
    const cplx kb = coeffs.decay[static_cast<std::size_t>(k) + 1];
    const auto pts = lindyn::split_interval(ta, tb, edges);

    // theta_0 and int E_j at each piece boundary, relative to t_k.
    std::vector<double> theta0(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      theta0[i] = coeffs.phase(0, k) + simpson(spec.energies[0], ta, pts[i]) + pulses.area(ta, pts[i]);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& ej = spec.energies[static_cast<std::size_t>(j) + 1];
      const cplx amp = spec.kappa[static_cast<std::size_t>(j)] * a0;
      cplx s0 = 0.0;
      cplx s1 = 0.0;
      double alpha_lo = coeffs.phase(j + 1, k) - theta0[0];
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = pts[i];
        const double hi = pts[i + 1];
        const double alpha_hi = coeffs.phase(j + 1, k) + simpson(ej, ta, hi) - theta0[i + 1];
        const double u_lo = (lo - ta) / dt;
        const double u_hi = (hi - ta) / dt;
        const cplx d_lo = std::exp(-(ka + (kb - ka) * u_lo));
        const cplx d_hi = std::exp(-(ka + (kb - ka) * u_hi));
        const auto [w0, w1] = filon_weights(alpha_hi - alpha_lo);
        const cplx scale = (hi - lo) * std::exp(I * alpha_lo);
        s0 += scale * ((1.0 - u_lo) * d_lo * w0 + (1.0 - u_hi) * d_hi * w1);
        s1 += scale * (u_lo * d_lo * w0 + u_hi * d_hi * w1);
        alpha_lo = alpha_hi;
      }
      w.c0(j, k) = amp * s0;
      w.c1(j, k) = amp * s1;
    }
  }
  return w;
}

void check_noise(const QSDSpec& spec, const TimeGrid& grid, std::span<const NoisePath> noise) {
  const std::size_t m = spec.levels() - 1;
  if (noise.size() != 1 && noise.size() != m) {
    std::ostringstream os;
    os << "qsd_trajectory: expected 1 or " << m << " noise paths, got " << noise.size();
    fail(ErrorKind::invalid_argument, os.str());
  }
  for (const auto& path : noise) {
    if (path.z_star.size() != grid.size() || !(path.grid == grid)) {
      fail(ErrorKind::invalid_argument, "qsd_trajectory: noise path grid does not match coefficients");
    }
  }
}

// phi on the grid, column k = phi(t_k).
template <typename Visit>
void integrate_phi(const QSDSpec& spec, const StepWeights& w, std::span<const NoisePath> noise,
                   Visit&& visit) {
  const Eigen::Index m = w.c0.rows();
  Vec phi(m);
  for (Eigen::Index j = 0; j < m; ++j) phi(j) = spec.target[static_cast<std::size_t>(j) + 1];
  visit(std::size_t{0}, phi);
  const bool shared = noise.size() == 1;
  for (Eigen::Index k = 0; k < w.c0.cols(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& z = noise[shared ? 0 : static_cast<std::size_t>(j)].z_star;
      phi(j) += w.c0(j, k) * z[kk] + w.c1(j, k) * z[kk + 1];
    }
    visit(kk + 1, phi);
  }
}

}  // namespace

QSDSpec QSDSpec::uniform(std::size_t n, double omega, cplx kappa, double gamma) {
  require(n >= 2, "qsd: need at least two levels");
  QSDSpec s;
  s.energies.push_back([omega](double) { return omega; });
  for (std::size_t j = 1; j < n; ++j) {
    s.energies.push_back([](double) { return 0.0; });
    s.kappa.push_back(kappa);
  }
  s.gamma = gamma;
  s.target.assign(n, cplx(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
  return s;
}

void validate(const QSDSpec& spec) {
  const std::size_t n = spec.levels();
  require(n >= 2, "qsd: need at least two levels");
  require(spec.kappa.size() == n - 1, "qsd: need one coupling per excited level");
  require(spec.target.size() == n, "qsd: target amplitudes must match the level count");
  for (const auto& e : spec.energies) require(static_cast<bool>(e), "qsd: empty energy function");
  if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma)) {
    fail(ErrorKind::invalid_argument, "qsd: gamma must be positive");
  }
  double norm = 0.0;
  for (const auto& a : spec.target) norm += std::norm(a);
  if (std::abs(norm - 1.0) > 1e-10) {
    std::ostringstream os;
    os.precision(17);
    os << "qsd: target amplitudes are not normalized (sum |a_j|^2 = " << norm << ")";
    fail(ErrorKind::invalid_argument, os.str());
  }
}

QSDCoefficients qsd_coefficients(const QSDSpec& spec, const TimeGrid& grid,
                                 const control::PulseSequence& pulses) {
  validate(spec);
  if (spec.correlation != Correlation::exponential) {
    fail(ErrorKind::invalid_argument, "qsd_coefficients: only exponential correlation is supported");
  }
  const std::size_t n = spec.levels();
  const Eigen::Index m = static_cast<Eigen::Index>(n - 1);
  const Eigen::Index dim = 2 * m + static_cast<Eigen::Index>(n);
  const double g = spec.gamma;
  double kappa_sum = 0.0;
  for (const auto& k : spec.kappa) kappa_sum += std::abs(k);

  auto rhs = [&](double t, double c, const Vec& y) {
    Vec dy(dim);
    cplx s = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) s += std::conj(spec.kappa[j]) * y(j);
    const double e0 = spec.energies[0](t) + c;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double ej = spec.energies[static_cast<std::size_t>(j) + 1](t);
      dy(j) = 0.5 * g * spec.kappa[j] - g * y(j) + (I * (e0 - ej) + s) * y(j);
      dy(m + j) = y(j);
      dy(2 * m + 1 + j) = ej;
    }
    dy(2 * m) = e0;
    return dy;
  };

  QSDCoefficients out{grid, {}, {}, {}, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                               static_cast<Eigen::Index>(grid.size())),
                      pulses.params()};
  out.F.reserve(grid.size());
  out.Fbar.reserve(grid.size());
  out.decay.reserve(grid.size());
  const auto edges = pulses.edges(grid.t0(), grid.t1());

  Vec y = Vec::Zero(dim);
  auto record = [&](std::size_t k) {
    out.F.push_back(y.head(m));
    out.Fbar.push_back(y.segment(m, m));
    cplx K = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) K += std::conj(spec.kappa[j]) * y(m + j);
    out.decay.push_back(K);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
      out.phase(j, static_cast<Eigen::Index>(k)) = y(2 * m + j).real();
    }
  };
  record(0);
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const auto pts = lindyn::split_interval(grid.at(k), grid.at(k + 1), edges);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double lo = pts[i];
      const double len = pts[i + 1] - lo;
      const double mid = lo + 0.5 * len;
      const double c = pulses.value(mid);
      double rate = std::abs(spec.energies[0](mid) + c) + g + kappa_sum;
      for (std::size_t j = 1; j < n; ++j) rate += std::abs(spec.energies[j](mid));
      const auto sub = static_cast<std::size_t>(std::max(1.0, std::ceil(len * rate / kPhasePerSubstep)));
      const double h = len / static_cast<double>(sub);
      for (std::size_t s = 0; s < sub; ++s) {
        const double t = lo + static_cast<double>(s) * h;
        const Vec k1 = rhs(t, c, y);
        const Vec k2 = rhs(t + 0.5 * h, c, y + 0.5 * h * k1);
        const Vec k3 = rhs(t + 0.5 * h, c, y + 0.5 * h * k2);
        const Vec k4 = rhs(t + h, c, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    if (!y.allFinite()) {
      std::ostringstream os;
      os << "qsd_coefficients: non-finite coefficients at t=" << grid.at(k + 1);
      fail(ErrorKind::numerical, os.str());
    }
    record(k + 1);
  }
  return out;
}

FidelitySeries qsd_fidelity_closed(const QSDSpec& spec, const QSDCoefficients& coeffs,
                                   NoiseModel model) {
  validate(spec);
  const std::size_t n = spec.levels();
  const TimeGrid& grid = coeffs.grid;
  require(coeffs.F.size() == grid.size(), "qsd_fidelity_closed: coefficient series size mismatch");
  const double pop0 = std::norm(spec.target[0]);
  double cross = 0.0;  // sum_{j != k >= 1} |a_j|^2 |a_k|^2
  double excited = 0.0;
  double self = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double pj = std::norm(spec.target[j]);
    excited += pj;
    self += pj * pj;
  }
  cross = excited * excited - self;

  double coherent = 1.0;
  if (model == NoiseModel::shared) {
    for (std::size_t j = 2; j < n; ++j) {
      for (std::size_t k = 0; k < grid.size(); k += std::max<std::size_t>(1, grid.size() / 64)) {
        if (spec.energies[j](grid.at(k)) != spec.energies[1](grid.at(k))) {
          fail(ErrorKind::invalid_argument,
               "qsd_fidelity_closed: shared noise needs equal excited energies");
        }
      }
    }
    cplx amp = 0.0;
    double incoherent = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
      amp += std::conj(spec.target[j]) * spec.kappa[j - 1];
      incoherent += std::norm(spec.target[j]) * std::norm(spec.kappa[j - 1]);
    }
    coherent = incoherent > 0.0 ? std::norm(amp) / incoherent : 1.0;
  }

  FidelitySeries out;
  out.t.reserve(grid.size());
  out.F.reserve(grid.size());
  // Running trapezoid of sum_j |a_j|^2 2Re(kappa_j^* F_j) e^{-2Re K}.
  double gained = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const cplx K = coeffs.decay[k];
    const double survival = std::exp(-2.0 * K.real());
    double integrand = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
      const cplx rate = std::conj(spec.kappa[j - 1]) * coeffs.F[k](static_cast<Eigen::Index>(j - 1));
      integrand += std::norm(spec.target[j]) * 2.0 * rate.real();
    }
    integrand *= survival;
    if (k > 0) gained += 0.5 * grid.dt() * (prev + integrand);
    prev = integrand;
    const double f = pop0 * pop0 * survival + cross + 2.0 * pop0 * excited * std::exp(-K).real() +
                     self + coherent * pop0 * gained;
    out.t.push_back(grid.at(k));
    out.F.push_back(f);
  }
  return out;
}

NoisePath sample_colored_noise(double gamma, const TimeGrid& grid, std::uint64_t seed) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    fail(ErrorKind::invalid_argument, "sample_colored_noise: gamma must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = std::sqrt(0.5 * gamma);
  const double rho = std::exp(-gamma * grid.dt());
  const double innov = sigma * std::sqrt(-std::expm1(-2.0 * gamma * grid.dt()));
  auto draw = [&] {
    const double re = normal(rng);
    const double im = normal(rng);
    return cplx(re, im) * std::sqrt(0.5);
  };
  NoisePath path{grid, std::vector<cplx>(grid.size()), seed};
  path.z_star[0] = sigma * draw();
  for (std::size_t k = 1; k < grid.size(); ++k) path.z_star[k] = rho * path.z_star[k - 1] + innov * draw();
  return path;
}

std::vector<Vec> qsd_trajectory(const QSDSpec& spec, const QSDCoefficients& coeffs,
                                std::span<const NoisePath> noise,
                                const control::PulseSequence& pulses) {
  validate(spec);
  check_pulses(coeffs, pulses);
  check_noise(spec, coeffs.grid, noise);
  const StepWeights w = step_weights(spec, coeffs, pulses);
  const auto n = static_cast<Eigen::Index>(spec.levels());
  std::vector<Vec> out(coeffs.grid.size(), Vec(n));
  integrate_phi(spec, w, noise, [&](std::size_t k, const Vec& phi) {
    const auto kk = static_cast<Eigen::Index>(k);
    Vec& psi = out[k];
    psi(0) = spec.target[0] * std::exp(-I * coeffs.phase(0, kk) - coeffs.decay[k]);
    for (Eigen::Index j = 1; j < n; ++j) psi(j) = std::exp(-I * coeffs.phase(j, kk)) * phi(j - 1);
  });
  return out;
}

lindyn::Generator qsd_generator(const QSDSpec& spec, const QSDCoefficients& coeffs,
                                const NoisePath& noise, const control::PulseSequence& pulses) {
  validate(spec);
  check_pulses(coeffs, pulses);
  check_noise(spec, coeffs.grid, std::span<const NoisePath>(&noise, 1));
  const auto n = static_cast<Eigen::Index>(spec.levels());
  return lindyn::Generator(n, [spec, coeffs, noise, pulses, n](double t) -> Mat {
    const TimeGrid& grid = coeffs.grid;
    const double x = std::clamp((t - grid.t0()) / grid.dt(), 0.0, static_cast<double>(grid.steps()));
    const auto k = std::min(static_cast<std::size_t>(x), grid.steps() == 0 ? 0 : grid.steps() - 1);
    const double u = grid.steps() == 0 ? 0.0 : x - static_cast<double>(k);
    const std::size_t k1 = std::min(k + 1, grid.steps());
    const cplx z = (1.0 - u) * noise.z_star[k] + u * noise.z_star[k1];
    cplx rate = 0.0;
    for (Eigen::Index j = 1; j < n; ++j) {
      const cplx f = (1.0 - u) * coeffs.F[k](j - 1) + u * coeffs.F[k1](j - 1);
      rate += std::conj(spec.kappa[static_cast<std::size_t>(j - 1)]) * f;
    }
    Mat m = Mat::Zero(n, n);
    m(0, 0) = -I * (spec.energies[0](t) + pulses.value(t)) - rate;
    for (Eigen::Index j = 1; j < n; ++j) {
      m(j, j) = -I * spec.energies[static_cast<std::size_t>(j)](t);
      m(j, 0) = z * spec.kappa[static_cast<std::size_t>(j - 1)];
    }
    return m;
  });
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

FidelitySeries qsd_fidelity_mc(const QSDSpec& spec, const control::PulseSequence& pulses,
                               const TimeGrid& grid, std::size_t n_traj, std::uint64_t seed,
                               const MonteCarloOptions& options) {
  return qsd_fidelity_mc(spec, qsd_coefficients(spec, grid, pulses), pulses, n_traj, seed, options);
}

FidelitySeries qsd_fidelity_mc(const QSDSpec& spec, const QSDCoefficients& coeffs,
                               const control::PulseSequence& pulses, std::size_t n_traj,
                               std::uint64_t seed, const MonteCarloOptions& options) {
  validate(spec);
  check_pulses(coeffs, pulses);
  require(n_traj >= 2, "qsd_fidelity_mc: need at least two trajectories");
  require(options.stride >= 1, "qsd_fidelity_mc: stride must be positive");
  const TimeGrid& grid = coeffs.grid;
  const StepWeights w = step_weights(spec, coeffs, pulses);

  std::vector<std::size_t> samples;
  for (std::size_t k = 0; k < grid.size(); k += options.stride) samples.push_back(k);
  if (samples.back() != grid.steps()) samples.push_back(grid.steps());
  std::vector<std::size_t> slot(grid.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) slot[samples[i]] = i;

  const std::size_t m = spec.levels() - 1;
  const double pop0 = std::norm(spec.target[0]);
  std::vector<double> table(n_traj * samples.size());
  const std::size_t workers = options.workers == 0 ? default_workers() : options.workers;

  parallel_for(n_traj, workers, [&](std::size_t i) {
    const std::uint64_t traj_seed = derive_seed(seed, i);
    std::vector<NoisePath> noise;
    if (options.noise == NoiseModel::shared) {
      noise.push_back(sample_colored_noise(spec.gamma, grid, traj_seed));
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        noise.push_back(sample_colored_noise(spec.gamma, grid, derive_seed(traj_seed, j, 3)));
      }
    }
    double* row = table.data() + i * samples.size();
    integrate_phi(spec, w, noise, [&](std::size_t k, const Vec& phi) {
      if (slot[k] == samples.size()) return;
      cplx overlap = pop0 * std::exp(-coeffs.decay[k]);
      for (std::size_t j = 0; j < m; ++j) {
        overlap += std::conj(spec.target[j + 1]) * phi(static_cast<Eigen::Index>(j));
      }
      row[slot[k]] = std::norm(overlap);
    });
  });

  FidelitySeries out;
  std::vector<double> column(n_traj);
  const double count = static_cast<double>(n_traj);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (std::size_t i = 0; i < n_traj; ++i) column[i] = table[i * samples.size() + s];
    const double mean = pairwise_sum(column) / count;
    for (double& x : column) x = (x - mean) * (x - mean);
    const double var = pairwise_sum(column) / (count - 1.0);
    if (!std::isfinite(mean)) fail(ErrorKind::numerical, "qsd_fidelity_mc: non-finite fidelity");
    out.t.push_back(grid.at(samples[s]));
    out.F.push_back(mean);
    out.stderr_.push_back(std::sqrt(var / count));
  }
  return out;
}

}  // namespace onecomp::models
