#pragma once

// Rapp soft limiter g(r) = g0 / (1 + (r/rs)^(2p))^(1/(2p)).

#include <cmath>

namespace simnet {

struct RappParams {
  double g0 = 1.0;
  double rs = 1.0;  // sqrt(W)
  double p = 2.0;

  // Throws simnet::Error unless 0 < g0 <= 1, rs > 0, p > 0.
  void validate() const;
};

namespace detail {

// log(1 + e^t) without overflow.
inline double softplus(double t) { return t > 30.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace detail

// Evaluated through t = 2p log(r/rs) so that large p (hard-limiter shapes)
// stays finite.
inline double rapp_gain(double r, const RappParams& m) {
  if (r == 0.0) return m.g0;
  const double t = 2.0 * m.p * std::log(r / m.rs);
  return m.g0 * std::exp(-detail::softplus(t) / (2.0 * m.p));
}

// r g'(r) = -g(r) u / (1 + u), u = (r/rs)^(2p).
inline double rapp_log_slope(double r, const RappParams& m) {
  if (r == 0.0) return 0.0;
  const double t = 2.0 * m.p * std::log(r / m.rs);
  return -rapp_gain(r, m) / (1.0 + std::exp(-t));
}

}  // namespace simnet
