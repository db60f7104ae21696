#pragma once

#include <cstdint>
#include <random>

#include "onecomp/lindyn.hpp"

namespace testing {

using onecomp::cplx;
using onecomp::Mat;
using onecomp::Vec;

inline Mat random_matrix(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(nd(rng), nd(rng));
  return m;
}

inline Mat random_hermitian(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  const Mat a = random_matrix(n, rng, scale);
  return 0.5 * (a + a.adjoint());
}

inline Vec random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v.normalized();
}

// H(t) = H0 + sin(t) H1 + cos(2t) H2.
inline onecomp::lindyn::Generator random_hamiltonian_gen(Eigen::Index n, std::uint64_t seed,
                                                         double scale = 1.0) {
  std::mt19937_64 rng(seed);
  const Mat h0 = random_hermitian(n, rng, scale);
  const Mat h1 = random_hermitian(n, rng, 0.5 * scale);
  const Mat h2 = random_hermitian(n, rng, 0.5 * scale);
  return onecomp::lindyn::Generator::from_hamiltonian(
      n, [h0, h1, h2](double t) { return Mat(h0 + std::sin(t) * h1 + std::cos(2.0 * t) * h2); });
}

inline Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

}  // namespace testing
