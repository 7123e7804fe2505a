#include "simnet/diodelab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "simnet/errors.hpp"

namespace simnet::diodelab {

namespace {

constexpr int kMaxNewton = 100;

// Sum of squared residuals for fixed shape (rs, p) with the optimal g0 in (0, 1].
struct ShapeCost {
  const AmAmTable& table;

  double g0_for(double rs, double p) const {
    const RappParams unit{1.0, rs, p};
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < table.r.size(); ++i) {
      const double h = rapp_gain(table.r[i], unit);
      num += table.g[i] * h;
      den += h * h;
    }
    return std::min(num / den, 1.0);
  }

  double operator()(double rs, double p) const {
    const RappParams m{g0_for(rs, p), rs, p};
    double sse = 0.0;
    for (std::size_t i = 0; i < table.r.size(); ++i) {
      const double e = rapp_gain(table.r[i], m) - table.g[i];
      sse += e * e;
    }
    return sse;
  }
};

// Grid scan then Brent refinement around the best grid node.
template <typename F>
std::pair<double, double> minimize_1d(F f, double lo, double hi, int grid) {
  double best_x = lo;
  double best_f = std::numeric_limits<double>::infinity();
  const double step = (hi - lo) / grid;
  for (int i = 0; i <= grid; ++i) {
    const double x = lo + step * i;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  const double a = std::max(lo, best_x - step);
  const double b = std::min(hi, best_x + step);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::brent_find_minima(f, a, b, std::numeric_limits<double>::digits / 2, iters);
  if (r.second <= best_f) return r;
  return {best_x, best_f};
}

}  // namespace

void DiodeParams::validate() const {
  if (!(is > 0.0) || !(n > 0.0) || !(vt > 0.0) || !(z0 > 0.0) || !(rs >= 0.0)) {
    throw Error("diode parameters must be positive (series resistance nonnegative)");
  }
}

double diode_pair_current(double v, const DiodeParams& d) {
  if (!std::isfinite(v)) throw Error("diode voltage must be finite");
  const double nvt = d.nvt();
  if (d.rs == 0.0) return 2.0 * d.is * std::sinh(v / nvt);
  if (v == 0.0) return 0.0;

  // Junction voltage u: u + Rs 2 Is sinh(u/nVt) = v, increasing in u and
  // bracketed by [0, v].
  const double s = v > 0.0 ? 1.0 : -1.0;
  const double av = std::abs(v);
  auto h = [&](double u) {
    const double sh = 2.0 * d.is * std::sinh(u / nvt);
    const double ch = 2.0 * d.is * std::cosh(u / nvt) / nvt;
    return std::make_pair(u + d.rs * sh - av, 1.0 + d.rs * ch);
  };
  const double guess = std::min(av, nvt * std::asinh(av / (2.0 * d.is * d.rs)));
  std::uintmax_t iters = kMaxNewton;
  const double u = boost::math::tools::newton_raphson_iterate(h, guess, 0.0, av, std::numeric_limits<double>::digits,
                                                             iters);
  if (iters >= static_cast<std::uintmax_t>(kMaxNewton)) {
    throw Error("diode Newton iteration did not converge at v = " + std::to_string(v));
  }
  return s * 2.0 * d.is * std::sinh(u / nvt);
}

std::complex<double> first_harmonic(double amplitude, const DiodeParams& d, int samples_per_period) {
  if (!(amplitude >= 0.0)) throw Error("drive amplitude must be nonnegative");
  if (samples_per_period < 64) throw Error("samples_per_period must be at least 64");
  std::complex<double> acc = 0.0;
  for (int k = 0; k < samples_per_period; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / samples_per_period;
    acc += diode_pair_current(amplitude * std::cos(theta), d) * std::polar(1.0, -theta);
  }
  return 2.0 * acc / static_cast<double>(samples_per_period);
}

AmAmTable am_am_curve(const DiodeParams& d, const std::vector<double>& drive, int samples_per_period) {
  d.validate();
  for (std::size_t i = 0; i < drive.size(); ++i) {
    if (!(drive[i] > 0.0) || (i > 0 && !(drive[i] > drive[i - 1]))) {
      throw Error("drive grid must be positive and strictly increasing");
    }
  }
  AmAmTable table;
  for (double r : drive) {
    const double v_plus = r * std::sqrt(2.0 * d.z0);
    // A memoryless shunt keeps I1 in phase with V, so V is real and the node
    // equation is scalar and increasing in V on [0, V+].
    auto node = [&](double v) { return v + 0.5 * d.z0 * first_harmonic(v, d, samples_per_period).real() - v_plus; };
    std::uintmax_t iters = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(node, 0.0, v_plus, -v_plus, node(v_plus),
                                                           boost::math::tools::eps_tolerance<double>(50), iters);
    if (iters >= 200) throw Error("limiter node equation did not converge at r = " + std::to_string(r));
    table.r.push_back(r);
    table.g.push_back(0.5 * (lo + hi) / v_plus);
  }
  return table;
}

std::vector<double> log_grid(double r_min, double r_max, int points) {
  if (!(r_min > 0.0) || !(r_max > r_min) || points < 2) throw Error("invalid drive grid");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double a = std::log(r_min);
  const double b = std::log(r_max);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
  out.back() = r_max;
  return out;
}

RappFit fit_rapp(const AmAmTable& table) {
  if (table.r.size() != table.g.size()) throw Error("AM/AM table columns differ in length");
  if (table.r.size() < 8) throw Error("Rapp fit needs at least 8 table points");
  for (std::size_t i = 1; i < table.r.size(); ++i) {
    if (!(table.r[i] > table.r[i - 1])) throw Error("AM/AM drive levels must be strictly increasing");
  }
  const auto [gmin, gmax] = std::minmax_element(table.g.begin(), table.g.end());
  double mean = 0.0;
  for (double g : table.g) mean += g;
  mean /= static_cast<double>(table.g.size());

  RappFit fit;
  if (*gmax - *gmin <= 1e-12 * std::abs(mean)) {
    fit.params = RappParams{mean, std::numeric_limits<double>::infinity(), 1.0};
    fit.rs_identifiable = false;
    return fit;
  }

  const ShapeCost cost{table};
  const double lr_lo = std::log(table.r.front()) - 3.0;
  const double lr_hi = std::log(table.r.back()) + 3.0;
  auto best_rs = [&](double log_p) {
    const double p = std::exp(log_p);
    return minimize_1d([&](double lr) { return cost(std::exp(lr), p); }, lr_lo, lr_hi, 60);
  };
  const auto outer = minimize_1d([&](double lp) { return best_rs(lp).second; }, std::log(0.1), std::log(100.0), 40);
  const double p = std::exp(outer.first);
  const double rs = std::exp(best_rs(outer.first).first);
  fit.params = RappParams{cost.g0_for(rs, p), rs, p};
  fit.rms_error = std::sqrt(cost(rs, p) / static_cast<double>(table.r.size()));
  return fit;
}

double compression_db(const AmAmTable& table) {
  if (table.g.empty()) return 0.0;
  return 20.0 * std::log10(table.g.front() / table.g.back());
}

}  // namespace simnet::diodelab
