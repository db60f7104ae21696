#include "onecomp/pulses.hpp"

#include <algorithm>
#include <cmath>

#include "onecomp/common.hpp"
#include "onecomp/seeding.hpp"

namespace onecomp::control {

namespace {
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kSignStream = 2;
}  // namespace

PulseSequence::PulseSequence(PulseParams params) : p_(params) {
  if (p_.kind == PulseKind::none) return;
  require(std::isfinite(p_.strength), "pulses: strength must be finite");
  require(p_.period > 0.0, "pulses: period must be positive");
  if (rectangular()) {
    require(p_.duration > 0.0 && p_.duration <= p_.period,
            "pulses: duration must satisfy 0 < duration <= period");
  }
  require(p_.noise >= 0.0 && p_.noise <= 1.0, "pulses: noise level must lie in [0, 1]");
}

double PulseSequence::sign(long m) const {
  switch (p_.sign) {
    case SignPolicy::constant:
      return 1.0;
    case SignPolicy::periodic_flip:
      return (m % 2 == 1) ? 1.0 : -1.0;
    case SignPolicy::random_flip:
      return (derive_seed(p_.seed, static_cast<std::uint64_t>(m), kSignStream) >> 63) ? -1.0
                                                                                       : 1.0;
  }
  return 1.0;
}

double PulseSequence::noise_draw(long m) const {
  return hash_to_open_unit(derive_seed(p_.seed, static_cast<std::uint64_t>(m), kNoiseStream));
}

long PulseSequence::window(double t) const {
  if (!rectangular() || t < 0.0) return 0;
  const long m = static_cast<long>(std::floor(t / p_.period)) + 1;
  const double start = static_cast<double>(m) * p_.period - p_.duration;
  return t >= start ? m : 0;
}

double PulseSequence::window_value(long m) const {
  double mag = p_.strength / p_.duration;
  if (p_.kind == PulseKind::noisy_rect) mag *= 1.0 + p_.noise * noise_draw(m);
  return sign(m) * mag;
}

double PulseSequence::value(double t) const {
  const long m = window(t);
  return m == 0 ? 0.0 : window_value(m);
}

double PulseSequence::area(double a, double b) const {
  if (!rectangular() || b <= a) return 0.0;
  a = std::max(a, 0.0);
  if (b <= a) return 0.0;
  const long first = static_cast<long>(std::floor(a / p_.period)) + 1;
  const long last = static_cast<long>(std::floor(b / p_.period)) + 1;
  double total = 0.0;
  for (long m = first; m <= last; ++m) {
    const double end = static_cast<double>(m) * p_.period;
    const double lo = std::max(a, end - p_.duration);
    const double hi = std::min(b, end);
    if (hi > lo) total += (hi - lo) * window_value(m);
  }
  return total;
}

std::vector<double> PulseSequence::edges(double a, double b) const {
  std::vector<double> out;
  if (!rectangular() || b < a) return out;
  const long first = std::max<long>(1, static_cast<long>(std::floor(std::max(a, 0.0) / p_.period)));
  const long last = static_cast<long>(std::floor(b / p_.period)) + 1;
  for (long m = first; m <= last; ++m) {
    const double end = static_cast<double>(m) * p_.period;
    const double start = end - p_.duration;
    if (start >= a && start <= b) out.push_back(start);
    if (end >= a && end <= b && end != start) out.push_back(end);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> PulseSequence::kick_times(double a, double b) const {
  std::vector<double> out;
  if (p_.kind != PulseKind::ideal_delta) return out;
  const long first = std::max<long>(1, static_cast<long>(std::floor(a / p_.period)));
  for (long m = first;; ++m) {
    const double t = static_cast<double>(m) * p_.period;
    if (t > b) break;
    if (t > a) out.push_back(t);
  }
  return out;
}

std::string to_string(PulseKind k) {
  switch (k) {
    case PulseKind::none: return "none";
    case PulseKind::regular_rect: return "regular_rect";
    case PulseKind::noisy_rect: return "noisy_rect";
    case PulseKind::ideal_delta: return "ideal_delta";
  }
  return "none";
}

std::string to_string(SignPolicy s) {
  switch (s) {
    case SignPolicy::constant: return "constant";
    case SignPolicy::periodic_flip: return "periodic_flip";
    case SignPolicy::random_flip: return "random_flip";
  }
  return "constant";
}

bool parse_pulse_kind(const std::string& s, PulseKind& out) {
  for (auto k : {PulseKind::none, PulseKind::regular_rect, PulseKind::noisy_rect,
                 PulseKind::ideal_delta}) {
    if (s == to_string(k)) {
      out = k;
      return true;
    }
  }
  return false;
}

bool parse_sign_policy(const std::string& s, SignPolicy& out) {
  for (auto p : {SignPolicy::constant, SignPolicy::periodic_flip, SignPolicy::random_flip}) {
    if (s == to_string(p)) {
      out = p;
      return true;
    }
  }
  return false;
}

}  // namespace onecomp::control
