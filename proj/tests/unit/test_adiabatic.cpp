#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "helpers.hpp"
#include "onecomp/adiabatic.hpp"
#include "onecomp/control.hpp"

using namespace onecomp;
using namespace onecomp::adiabatic;
using lindyn::Generator;
using lindyn::TimeGrid;
using testing::pauli_x;
using testing::pauli_z;

namespace {

constexpr double kPi = std::numbers::pi;

Generator landau_zener(double v, double w, double center = 0.0) {
  return Generator::from_hamiltonian(2, [v, w, center](double t) {
    return Mat(0.5 * (v * (t - center) * pauli_z() + w * pauli_x()));
  });
}

control::PulseSequence rect(double strength, double duration, double period) {
  control::PulseParams p;
  p.kind = control::PulseKind::regular_rect;
  p.strength = strength;
  p.duration = duration;
  p.period = period;
  return control::PulseSequence(p);
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

// Ground-state fidelity at the end of a lab-frame propagation.
double final_ground_fidelity(const Generator& bare, const Generator& gen, const TimeGrid& grid,
                             std::span<const double> edges) {
  const auto path = track_eigenpath(bare, grid);
  const auto xs = lindyn::propagate(gen, path.states(0).col(0), grid, edges);
  return std::norm(path.states(grid.steps()).col(0).dot(xs.back()));
}

}  // namespace

TEST_CASE("eigenpath of a static Hamiltonian") {
  const auto gen = Generator::from_hamiltonian(2, [](double) { return Mat(0.5 * pauli_z()); });
  const auto grid = TimeGrid::span(0.0, 3.0, 0.01);
  const auto path = track_eigenpath(gen, grid);
  for (std::size_t k = 0; k < grid.size(); k += 37) {
    const double t = grid.at(k);
    CHECK(path.energies(k)(0) == doctest::Approx(-0.5));
    CHECK(path.energies(k)(1) == doctest::Approx(0.5));
    CHECK(max_abs(path.states(k) - path.states(0)) < 1e-14);
    CHECK(path.theta(k)(0) == doctest::Approx(-0.5 * t));
    CHECK(path.theta(k)(1) == doctest::Approx(0.5 * t));
  }
  const auto m = adiabatic_generator(path);
  for (double t : {0.0, 1.005, 3.0}) CHECK(max_abs(m(t)) < 1e-12);
}

TEST_CASE("Landau-Zener eigenpath") {
  const double v = 2.0;
  const double w = 0.7;
  const auto grid = TimeGrid::span(-5.0, 5.0, 1e-2);
  const auto path = track_eigenpath(landau_zener(v, w), grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.at(k);
    const double gap = path.energies(k)(1) - path.energies(k)(0);
    CHECK(std::abs(gap - std::sqrt(v * v * t * t + w * w)) < 1e-12);
    const Mat s = path.states(k);
    CHECK(max_abs(s.adjoint() * s - Mat::Identity(2, 2)) < 1e-10);
    if (k + 1 < grid.size()) {
      for (Eigen::Index n = 0; n < 2; ++n) {
        const cplx o = s.col(n).dot(path.states(k + 1).col(n));
        CHECK(o.real() > 0.0);
        CHECK(std::abs(o.imag()) < 1e-12);
      }
    }
  }
  CHECK(path.min_gap() == doctest::Approx(w));
}

TEST_CASE("tracking refuses a level crossing") {
  const auto gen = Generator::from_hamiltonian(2, [](double t) { return Mat(t * pauli_z()); });
  const auto grid = TimeGrid::span(-1.0, 1.0, 0.01);
  try {
    track_eigenpath(gen, grid);
    FAIL("expected a crossing error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
    CHECK(std::string(e.what()).find("t=") != std::string::npos);
  }
}

TEST_CASE("adiabatic generator") {
  const auto ham = landau_zener(1.0, 1.0);
  const auto grid = TimeGrid::span(-4.0, 4.0, 1e-3);
  const auto path = track_eigenpath(ham, grid);
  const auto hdot = [](double) { return Mat(0.5 * pauli_z()); };
  const auto m = adiabatic_generator(path, hdot);

  SUBCASE("two-level couplings are the eigenvector overlaps") {
    for (double t : {-2.0, -0.5, 0.0, 1.3}) {
      const std::size_t k = grid.require_index(t);
      const Mat c = path.states(k).adjoint() * path.state_derivatives(k);
      const double th = path.theta(k)(0) - path.theta(k)(1);
      CHECK(std::abs(m(t)(0, 1) - (-c(0, 1) * std::exp(I * th))) < 1e-6);
      CHECK(std::abs(m(t)(1, 0) - (-c(1, 0) * std::exp(-I * th))) < 1e-6);
    }
  }
  SUBCASE("agrees with the frame-rotated Hamiltonian") {
    const auto frame = adiabatic_frame(path);
    const auto rotated = lindyn::rotate_generator(ham, frame);
    const Mat b0 = path.states(0);
    double dev = 0.0;
    for (std::size_t k = 1; k + 1 < grid.size(); k += 97) {
      const double t = grid.at(k);
      dev = std::max(dev, max_abs(b0.adjoint() * rotated(t) * b0 - m(t)));
    }
    CHECK(dev <= 1e-6);
    const Mat fd_default = adiabatic_generator(path)(0.5);
    CHECK(max_abs(fd_default - m(0.5)) < 1e-6);
  }
  SUBCASE("propagation agrees with lab-frame propagation") {
    const auto sub = TimeGrid::span(-4.0, 4.0, 1e-3);
    const auto lab = lindyn::propagate(ham, path.states(0).col(0), sub);
    const auto ad = lindyn::propagate(m, Vec::Unit(2, 0), sub);
    double dev = 0.0;
    for (std::size_t k = 0; k < sub.size(); k += 250) {
      const auto f = path.at(sub.at(k));
      for (Eigen::Index n = 0; n < 2; ++n) {
        const cplx lab_coeff = std::exp(I * f.theta(n)) * f.states.col(n).dot(lab[k]);
        dev = std::max(dev, std::abs(lab_coeff - ad[k](n)));
      }
    }
    CHECK(dev <= 1e-6);
  }
}

TEST_CASE("two-level kernel") {
  SUBCASE("static Hamiltonian has no coupling") {
    const auto gen = Generator::from_hamiltonian(2, [](double) { return Mat(0.5 * pauli_z() + 0.2 * pauli_x()); });
    const auto grid = TimeGrid::span(0.0, 2.0, 1e-2);
    const auto path = track_eigenpath(gen, grid);
    const auto kernel = two_level_kernel(path);
    for (std::size_t i = 0; i < grid.size(); i += 11)
      for (std::size_t j = 0; j <= i; j += 5) CHECK(std::abs(kernel(i, j)) < 1e-12);
    const auto a = reduced::solve_p(kernel, reduced::PhaseAccumulator::zero(grid));
    for (const auto& p : a.p) CHECK(std::abs(p - 1.0) < 1e-12);
  }
  SUBCASE("matches lab-frame propagation") {
    const auto ham = landau_zener(1.0, 1.0, 3.0);
    const auto grid = TimeGrid::span(0.0, 6.0, 1e-3);
    const auto path = track_eigenpath(ham, grid);
    const auto a = reduced::solve_p(two_level_kernel(path), reduced::PhaseAccumulator::zero(grid));
    const auto lab = lindyn::propagate(ham, path.states(0).col(0), grid);
    double dev = 0.0;
    for (std::size_t k = 0; k < grid.size(); k += 10) {
      dev = std::max(dev, std::abs(std::abs(a.p[k]) - std::abs(path.states(k).col(0).dot(lab[k]))));
    }
    CHECK(dev <= 1e-4);
    CHECK(std::abs(a.p.back()) < 0.95);
  }
  SUBCASE("slow sweep stays adiabatic") {
    const double w = 1.0;
    const double v = 0.01;
    const auto ham = landau_zener(v, w, 200.0);
    const auto grid = TimeGrid::span(0.0, 400.0, 2e-2);
    const auto path = track_eigenpath(ham, grid);
    const auto a = reduced::solve_p(two_level_kernel(path), reduced::PhaseAccumulator::zero(grid));
    CHECK(std::abs(a.p.back()) >= 0.999);
    const double metric = path.adiabaticity_metric();
    CHECK(metric <= 1e-2);
    CHECK(std::abs(a.p.back()) >= 1.0 - 10.0 * metric * metric);
  }
  SUBCASE("dimension check") {
    const auto gen3 = Generator::from_hamiltonian(3, [](double t) {
      Mat h = Mat::Zero(3, 3);
      h(0, 0) = 0.0;
      h(1, 1) = 1.0 + 0.1 * t;
      h(2, 2) = 2.0;
      return h;
    });
    CHECK_THROWS_AS(two_level_kernel(track_eigenpath(gen3, TimeGrid::span(0.0, 1.0, 0.1))), Error);
  }
}

TEST_CASE("lab-frame LEO equals the rotated LEO") {
  const auto ham = landau_zener(1.5, 0.8);
  const auto grid = TimeGrid::span(-3.0, 3.0, 1e-3);
  const auto path = track_eigenpath(ham, grid);
  const auto frame = adiabatic_frame(path);
  const auto pulses = rect(kPi, 0.01, 0.02);
  const control::LEOSpec rotating{path.states(0).col(0), pulses};
  for (double t : {-2.985, -0.005, 1.2345}) {
    const Mat u = frame.unitary(t);
    const Mat lhs = u.adjoint() * control::rotating_leo(rotating, t) * u;
    CHECK(max_abs(lhs - lab_leo(path, pulses, t)) < 1e-10);
  }
}

TEST_CASE("scaled control") {
  const auto ham = landau_zener(1.0, 0.6);
  SUBCASE("zero control") {
    const auto scaled = scaled_control(ham, control::PulseSequence());
    CHECK(max_abs(scaled(0.7) - ham(0.7)) == 0.0);
  }
  SUBCASE("eigenvectors kept, eigenvalues scaled") {
    const auto pulses = rect(kPi, 0.01, 0.02);
    const auto scaled = scaled_control(ham, pulses);
    CHECK(scaled.hermitian());
    for (double t : {0.013, 0.005, 1.019}) {
      Eigen::SelfAdjointEigenSolver<Mat> a(ham.hamiltonian(t));
      Eigen::SelfAdjointEigenSolver<Mat> b(scaled.hamiltonian(t));
      const double factor = 1.0 + pulses.value(t);
      CHECK(max_abs(b.eigenvalues().cast<cplx>() - factor * a.eigenvalues().cast<cplx>()) < 1e-9);
      for (Eigen::Index n = 0; n < 2; ++n)
        CHECK(std::abs(std::abs(a.eigenvectors().col(n).dot(b.eigenvectors().col(n))) - 1.0) < 1e-12);
    }
  }
  SUBCASE("acceleration improves a fast sweep") {
    const auto fast = landau_zener(4.0, 1.0, 5.0);
    const auto grid = TimeGrid::span(0.0, 10.0, 2e-5);
    const auto pulses = rect(kPi, 0.01, 0.02);
    const auto edges = pulses.edges(grid.t0(), grid.t1());
    const double free = final_ground_fidelity(fast, fast, grid, {});
    const double ctl = final_ground_fidelity(fast, scaled_control(fast, pulses), grid, edges);
    CHECK(free < 0.5);
    CHECK(ctl - free >= 0.1);
    CHECK(ctl <= 1.0 + 1e-9);
  }
}
