#include "onecomp/lindyn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace onecomp::lindyn {

TimeGrid::TimeGrid(double t0, double dt, std::size_t steps) : t0_(t0), dt_(dt), steps_(steps) {
  require(std::isfinite(t0) && std::isfinite(dt), "time grid: non-finite bounds");
  require(dt > 0.0, "time grid: dt must be positive");
  require(steps >= 1, "time grid: need at least one step");
}

TimeGrid TimeGrid::span(double t0, double t1, double max_dt) {
  require(t1 > t0, "time grid: t1 must exceed t0");
  require(max_dt > 0.0, "time grid: dt must be positive");
  const double ratio = (t1 - t0) / max_dt;
  const auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
  return TimeGrid(t0, (t1 - t0) / static_cast<double>(std::max<std::size_t>(steps, 1)),
                  std::max<std::size_t>(steps, 1));
}

std::optional<std::size_t> TimeGrid::index_of(double t) const {
  const double x = (t - t0_) / dt_;
  const double k = std::round(x);
  if (k < 0.0 || k > static_cast<double>(steps_) || std::abs(x - k) > 1e-9) return std::nullopt;
  return static_cast<std::size_t>(k);
}

std::size_t TimeGrid::require_index(double t) const {
  auto k = index_of(t);
  if (!k) {
    std::ostringstream os;
    os << "time " << t << " is not on the grid";
    fail(ErrorKind::invalid_argument, os.str());
  }
  return *k;
}

std::vector<double> split_interval(double a, double b, std::span<const double> breakpoints) {
  std::vector<double> pts{a};
  const double sliver = 1e-8 * (b - a);
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), a);
  for (; it != breakpoints.end() && *it < b; ++it) {
    if (*it - pts.back() > sliver && b - *it > sliver) pts.push_back(*it);
  }
  pts.push_back(b);
  return pts;
}

double interior_nudge(double step, double lo, double hi) {
  return std::min(2e-8 * step, 0.25 * (hi - lo));
}

Generator::Generator(Eigen::Index dim, Fn eval, bool hermitian)
    : dim_(dim), eval_(std::move(eval)), hermitian_(hermitian) {
  require(dim >= 1, "generator: dimension must be positive");
  require(static_cast<bool>(eval_), "generator: empty evaluation function");
}

Generator Generator::constant(const Mat& m, bool hermitian) {
  require(m.rows() == m.cols(), "generator: matrix must be square");
  return Generator(m.rows(), [m](double) { return m; }, hermitian);
}

Generator Generator::from_hamiltonian(Eigen::Index dim, std::function<Mat(double)> hamiltonian) {
  return Generator(
      dim, [h = std::move(hamiltonian)](double t) -> Mat { return -I * h(t); }, true);
}

Mat Generator::operator()(double t) const {
  Mat m = eval_(t);
  if (m.rows() != dim_ || m.cols() != dim_) {
    std::ostringstream os;
    os << "generator: expected " << dim_ << "x" << dim_ << " at t=" << t << ", got " << m.rows()
       << "x" << m.cols();
    fail(ErrorKind::invalid_argument, os.str());
  }
  if (!m.allFinite()) {
    std::ostringstream os;
    os << "generator: non-finite entry at t=" << t;
    fail(ErrorKind::numerical, os.str());
  }
  if (hermitian_) {
    const double skew = (m + m.adjoint()).cwiseAbs().maxCoeff();
    if (skew > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
      std::ostringstream os;
      os << "generator: Hermitian-flagged matrix is not anti-Hermitian at t=" << t
         << " (|M+M^dag| = " << skew << ")";
      fail(ErrorKind::numerical, os.str());
    }
  }
  return m;
}

Mat Generator::hamiltonian(double t) const { return I * (*this)(t); }

Mat rk4_step_matrix(const std::function<Mat(double)>& a, double t, double h, double nudge) {
  const Mat a1 = a(t + nudge);
  const Mat a2 = a(t + 0.5 * h);
  const Mat a3 = a(t + h - nudge);
  const Eigen::Index n = a1.rows();
  const Mat id = Mat::Identity(n, n);
  const Mat k1 = a1;
  const Mat k2 = a2 * (id + 0.5 * h * k1);
  const Mat k3 = a2 * (id + 0.5 * h * k2);
  const Mat k4 = a3 * (id + h * k3);
  return id + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

// End-point evaluations are pulled inside by `nudge` so a generator that
// jumps at t or t + h is sampled on the correct side.
Vec rk4_vec(const Generator& gen, const Vec& x, double t, double h, double nudge = 0.0) {
  const Mat a2 = gen(t + 0.5 * h);
  const Vec k1 = gen(t + nudge) * x;
  const Vec k2 = a2 * (x + 0.5 * h * k1);
  const Vec k3 = a2 * (x + 0.5 * h * k2);
  const Vec k4 = gen(t + h - nudge) * (x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Vec advance(const Generator& gen, const Vec& x, double t, double h,
            std::span<const double> breakpoints) {
  if (breakpoints.empty()) return rk4_vec(gen, x, t, h);
  const auto pts = split_interval(t, t + h, breakpoints);
  Vec y = x;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double len = pts[i + 1] - pts[i];
    y = rk4_vec(gen, y, pts[i], len, interior_nudge(h, pts[i], pts[i + 1]));
  }
  return y;
}

std::vector<Vec> propagate(const Generator& gen, const Vec& x0, const TimeGrid& grid,
                           std::span<const double> breakpoints) {
  if (x0.size() != gen.dim()) {
    std::ostringstream os;
    os << "propagate: state has dimension " << x0.size() << ", generator " << gen.dim();
    fail(ErrorKind::invalid_argument, os.str());
  }
  std::vector<Vec> out;
  out.reserve(grid.size());
  out.push_back(x0);
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    out.push_back(advance(gen, out.back(), grid.at(k), grid.dt(), breakpoints));
  }
  return out;
}

Mat time_ordered_propagator(const std::function<Mat(double)>& d, double s, double t,
                            const TimeGrid& grid, OrderedExpScheme scheme) {
  const std::size_t ks = grid.require_index(s);
  const std::size_t kt = grid.require_index(t);
  if (ks > kt) fail(ErrorKind::invalid_argument, "time_ordered_propagator: requires s <= t");
  const Mat d0 = d(grid.at(ks));
  Mat g = Mat::Identity(d0.rows(), d0.cols());
  const double h = grid.dt();
  for (std::size_t k = ks; k < kt; ++k) {
    const double tk = grid.at(k);
    if (scheme == OrderedExpScheme::rk4) {
      g = rk4_step_matrix(d, tk, h) * g;
    } else {
      g = expm(h * d(tk + 0.5 * h)) * g;
    }
  }
  return g;
}

Mat expm(const Mat& m) { return m.exp(); }

Mat complete_basis(const Vec& target) {
  const double norm = target.norm();
  if (!(norm > 0.0)) fail(ErrorKind::invalid_argument, "pq_partition: zero-norm target");
  const Eigen::Index n = target.size();
  Mat basis(n, n);
  basis.col(0) = target / norm;
  Eigen::Index filled = 1;
  for (Eigen::Index e = 0; e < n && filled < n; ++e) {
    Vec v = Vec::Unit(n, e);
    // two passes of modified Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < filled; ++j) v -= basis.col(j).dot(v) * basis.col(j);
    }
    const double r = v.norm();
    if (r < 1e-8) continue;
    basis.col(filled++) = v / r;
  }
  if (filled != n) fail(ErrorKind::numerical, "pq_partition: basis completion failed");
  return basis;
}

PQBlocks::PQBlocks(Generator gen, Mat basis) : gen_(std::move(gen)), basis_(std::move(basis)) {
  require(basis_.rows() == gen_.dim() && basis_.cols() == gen_.dim(),
          "pq_partition: basis dimension mismatch");
}

Mat PQBlocks::conjugated(double t) const { return basis_.adjoint() * gen_(t) * basis_; }

Blocks PQBlocks::at(double t) const {
  const Mat c = conjugated(t);
  const Eigen::Index q = c.rows() - 1;
  return Blocks{c(0, 0), c.block(0, 1, 1, q), c.block(1, 0, q, 1), c.block(1, 1, q, q)};
}

cplx PQBlocks::h(double t) const {
  const Vec a = basis_.col(0);
  return a.dot(gen_(t) * a);
}

Mat PQBlocks::d(double t) const {
  const Eigen::Index q = dim() - 1;
  const Mat comp = basis_.rightCols(q);
  return comp.adjoint() * gen_(t) * comp;
}

Mat PQBlocks::reassemble(const Blocks& b) {
  const Eigen::Index q = b.d.rows();
  Mat m(q + 1, q + 1);
  m(0, 0) = b.h;
  m.block(0, 1, 1, q) = b.r;
  m.block(1, 0, q, 1) = b.w;
  m.block(1, 1, q, q) = b.d;
  return m;
}

PQBlocks pq_partition(const Generator& gen, const Vec& target) {
  if (target.size() != gen.dim()) {
    fail(ErrorKind::invalid_argument, "pq_partition: target dimension mismatch");
  }
  const double norm = target.norm();
  if (!(norm > 0.0)) fail(ErrorKind::invalid_argument, "pq_partition: zero-norm target");
  if (std::abs(norm - 1.0) > 1e-12) {
    fail(ErrorKind::invalid_argument, "pq_partition: target must be normalized");
  }
  return PQBlocks(gen, complete_basis(target));
}

FramePath::FramePath(Fn unitary, Fn derivative, double fd_step)
    : unitary_(std::move(unitary)), derivative_(std::move(derivative)), fd_step_(fd_step) {
  require(static_cast<bool>(unitary_), "frame: empty unitary function");
  require(fd_step > 0.0, "frame: finite-difference step must be positive");
}

Mat FramePath::unitary(double t) const {
  Mat u = unitary_(t);
  const double dev = (u * u.adjoint() - Mat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
  if (!(dev <= 1e-10)) {
    std::ostringstream os;
    os << "frame: U(t) is not unitary at t=" << t << " (deviation " << dev << ")";
    fail(ErrorKind::numerical, os.str());
  }
  return u;
}

Mat FramePath::derivative(double t) const {
  if (derivative_) return derivative_(t);
  return (unitary(t + fd_step_) - unitary(t - fd_step_)) / (2.0 * fd_step_);
}

Generator rotate_generator(const Generator& hamiltonian_gen, const FramePath& frame) {
  require(hamiltonian_gen.hermitian(), "rotate_generator: generator must be Hermitian-flagged");
  const Eigen::Index n = hamiltonian_gen.dim();
  return Generator(
      n,
      [hamiltonian_gen, frame](double t) -> Mat {
        const Mat u = frame.unitary(t);
        const Mat ud = u.adjoint();
        Mat ht = u * hamiltonian_gen.hamiltonian(t) * ud + I * frame.derivative(t) * ud;
        // A finite-difference dU/dt leaves an O(h^2) anti-Hermitian residue.
        // Anything larger means U and dU/dt disagree.
        const double residue = (ht - ht.adjoint()).cwiseAbs().maxCoeff();
        if (residue > 1e-6 * (1.0 + ht.cwiseAbs().maxCoeff())) {
          std::ostringstream os;
          os << "rotate_generator: rotated Hamiltonian not Hermitian at t=" << t << " (residue "
             << residue << ")";
          fail(ErrorKind::numerical, os.str());
        }
        ht = 0.5 * (ht + ht.adjoint()).eval();
        return -I * ht;
      },
      true);
}

}  // namespace onecomp::lindyn
