#pragma once

// Shunt anti-parallel diode limiter: single-tone harmonic balance at the
// fundamental and Rapp fitting of the resulting AM/AM curve.

#include <complex>
#include <vector>

#include "simnet/rapp.hpp"

namespace simnet::diodelab {

struct DiodeParams {
  double is = 1e-8;     // saturation current, A
  double n = 1.05;      // ideality factor
  double vt = 25.85e-3; // thermal voltage, V
  double rs = 5.0;      // series resistance, ohm
  double z0 = 50.0;     // line impedance, ohm

  double nvt() const { return n * vt; }
  void validate() const;
};

struct AmAmTable {
  std::vector<double> r;  // incident amplitude, sqrt(W), strictly increasing
  std::vector<double> g;  // |transmitted| / r
};

struct RappFit {
  RappParams params;
  double rms_error = 0.0;
  bool rs_identifiable = true;
};

// Solves i = Is (e^{u/nVt} - 1) - Is (e^{-u/nVt} - 1), u = v - i Rs.
double diode_pair_current(double v, const DiodeParams& d);

// I1 = (2/T) * integral of i(V cos wt) e^{-jwt} dt by uniform sampling.
std::complex<double> first_harmonic(double amplitude, const DiodeParams& d, int samples_per_period = 512);

// Matched line of impedance Z0 with the limiter in shunt at the node. For an
// incident wave of amplitude r (|a|^2 = available power) the node phasor
// satisfies V = V+ - (Z0/2) I1(V), V+ = r sqrt(2 Z0); g = V / V+.
AmAmTable am_am_curve(const DiodeParams& d, const std::vector<double>& drive, int samples_per_period = 512);

// Drive levels log-spaced between r_min and r_max.
std::vector<double> log_grid(double r_min, double r_max, int points);

// Least squares over (g0, rs, p): outer search on log p, inner search on
// log rs, closed-form g0.
RappFit fit_rapp(const AmAmTable& table);

// Compression of the last table point relative to the first, in dB.
double compression_db(const AmAmTable& table);

}  // namespace simnet::diodelab
