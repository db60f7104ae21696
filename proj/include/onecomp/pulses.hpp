#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace onecomp::control {

enum class PulseKind { none, regular_rect, noisy_rect, ideal_delta };
enum class SignPolicy { constant, periodic_flip, random_flip };

struct PulseParams {
  PulseKind kind = PulseKind::none;
  double strength = 0.0;  // phase area per pulse
  double duration = 0.0;  // window width
  double period = 0.0;    // time between window ends
  double noise = 0.0;     // relative amplitude noise G in [0, 1]
  SignPolicy sign = SignPolicy::constant;
  std::uint64_t seed = 0;

  bool operator==(const PulseParams&) const = default;
};

// Control function c(t). Window m >= 1 is the half-open interval
// [m*period - duration, m*period); c vanishes outside windows and for t < 0.
// Noise and random signs are drawn once per window from a hash of
// (seed, m), so evaluation is pure and order independent.
class PulseSequence {
 public:
  PulseSequence() = default;
  explicit PulseSequence(PulseParams params);

  static PulseSequence none() { return PulseSequence(); }

  const PulseParams& params() const { return p_; }
  PulseKind kind() const { return p_.kind; }
  bool rectangular() const {
    return p_.kind == PulseKind::regular_rect || p_.kind == PulseKind::noisy_rect;
  }
  bool active() const { return p_.kind != PulseKind::none; }

  double value(double t) const;

  // Window containing t, or 0 when t lies outside every window.
  long window(double t) const;
  // Signed amplitude inside window m.
  double window_value(long m) const;
  // +1 or -1 for window (or kick) m.
  double sign(long m) const;
  // White-noise draw in (-1, 1) for window m.
  double noise_draw(long m) const;

  // Exact integral of c over [a, b].
  double area(double a, double b) const;

  // Window boundaries inside [a, b], sorted. Empty for non-rectangular kinds.
  std::vector<double> edges(double a, double b) const;

  // Kick instants m*period in (a, b] for ideal_delta sequences.
  std::vector<double> kick_times(double a, double b) const;

 private:
  PulseParams p_;
};

std::string to_string(PulseKind k);
std::string to_string(SignPolicy s);
bool parse_pulse_kind(const std::string& s, PulseKind& out);
bool parse_sign_policy(const std::string& s, SignPolicy& out);

}  // namespace onecomp::control
