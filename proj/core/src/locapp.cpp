#include "simnet/locapp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "simnet/errors.hpp"

namespace simnet::locapp {

using netcore::cplx;

namespace {

// Hat weights over bin centers c_0 < ... < c_{n-1}: linear between the two
// neighbouring centers, all weight on the end bin beyond the outer centers.
Eigen::VectorXd hat_weights(double x, double first_center, double width, int bins) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(bins);
  const double s = (x - first_center) / width;
  if (s <= 0.0) {
    w(0) = 1.0;
  } else if (s >= bins - 1) {
    w(bins - 1) = 1.0;
  } else {
    const int i = static_cast<int>(std::floor(s));
    const double t = s - i;
    w(i) = 1.0 - t;
    if (t > 0.0) w(i + 1) = t;
  }
  return w;
}

double axis_estimate(const Eigen::VectorXd& marginal, int dominant, double first_center, double width) {
  const double floor = marginal.minCoeff();
  double num = 0.0;
  double den = 0.0;
  for (int b = std::max(0, dominant - 1); b <= std::min<int>(static_cast<int>(marginal.size()) - 1, dominant + 1); ++b) {
    const double w = marginal(b) - floor;
    num += w * (first_center + width * b);
    den += w;
  }
  return den > 0.0 ? num / den : first_center + width * dominant;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::mt19937_64 stream(std::uint64_t seed, int trial, int purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

BinGrid::BinGrid(Region region, int angle_bins, int range_bins)
    : region_(region), angle_bins_(angle_bins), range_bins_(range_bins) {
  if (angle_bins < 1 || range_bins < 1) throw GeometryError("bin counts must be positive");
  if (!(region.angle_min < region.angle_max) || !(region.range_min < region.range_max) || !(region.range_min > 0.0)) {
    throw GeometryError("localization region is empty");
  }
}

double BinGrid::angle_width() const { return (region_.angle_max - region_.angle_min) / angle_bins_; }
double BinGrid::range_width() const { return (region_.range_max - region_.range_min) / range_bins_; }
double BinGrid::angle_center(int bin) const { return region_.angle_min + (bin + 0.5) * angle_width(); }
double BinGrid::range_center(int bin) const { return region_.range_min + (bin + 0.5) * range_width(); }

Polar BinGrid::center(int ch) const {
  if (ch < 0 || ch >= channels()) throw DimensionError("channel", channels(), ch);
  return Polar{angle_center(ch / range_bins_), range_center(ch % range_bins_)};
}

bool BinGrid::contains(const Polar& p) const {
  return p.angle >= region_.angle_min && p.angle <= region_.angle_max && p.range >= region_.range_min &&
         p.range <= region_.range_max;
}

int BinGrid::channel_of(const Polar& p) const {
  if (!contains(p)) {
    throw GeometryError("position (" + std::to_string(p.angle) + " rad, " + std::to_string(p.range) +
                        " m) lies outside the localization region");
  }
  const int a = std::min(angle_bins_ - 1, static_cast<int>((p.angle - region_.angle_min) / angle_width()));
  const int r = std::min(range_bins_ - 1, static_cast<int>((p.range - region_.range_min) / range_width()));
  return channel(a, r);
}

Polar BinGrid::clamp(const Polar& p) const {
  return Polar{std::clamp(p.angle, region_.angle_min, region_.angle_max),
               std::clamp(p.range, region_.range_min, region_.range_max)};
}

std::vector<Polar> anchor_positions(const BinGrid& grid, int per_axis) {
  if (per_axis < 1) throw GeometryError("anchors per axis must be positive");
  std::vector<Polar> out;
  for (int ch = 0; ch < grid.channels(); ++ch) {
    const Polar c = grid.center(ch);
    for (int i = 0; i < per_axis; ++i) {
      for (int j = 0; j < per_axis; ++j) {
        out.push_back(Polar{c.angle + ((i + 0.5) / per_axis - 0.5) * grid.angle_width(),
                            c.range + ((j + 0.5) / per_axis - 0.5) * grid.range_width()});
      }
    }
  }
  return out;
}

CMatrix ideal_target_map(const BinGrid& grid, const std::vector<Polar>& anchors) {
  CMatrix y = CMatrix::Zero(grid.channels(), static_cast<Index>(anchors.size()));
  for (std::size_t i = 0; i < anchors.size(); ++i) y(grid.channel_of(anchors[i]), static_cast<Index>(i)) = 1.0;
  return y;
}

Polar estimate_position(const Eigen::Ref<const Eigen::VectorXd>& powers, const BinGrid& grid) {
  if (powers.size() != grid.channels()) throw DimensionError("probe powers", grid.channels(), powers.size());
  if (!(powers.maxCoeff() > 0.0)) throw Error("estimator needs at least one positive probe power");
  Index dominant = 0;
  powers.maxCoeff(&dominant);  // first maximum
  const int da = static_cast<int>(dominant) / grid.range_bins();
  const int dr = static_cast<int>(dominant) % grid.range_bins();

  Eigen::VectorXd angle_marginal = Eigen::VectorXd::Zero(grid.angle_bins());
  Eigen::VectorXd range_marginal = Eigen::VectorXd::Zero(grid.range_bins());
  for (int a = 0; a < grid.angle_bins(); ++a) {
    for (int r = 0; r < grid.range_bins(); ++r) {
      angle_marginal(a) += powers(grid.channel(a, r));
      range_marginal(r) += powers(grid.channel(a, r));
    }
  }
  const Polar est{axis_estimate(angle_marginal, da, grid.angle_center(0), grid.angle_width()),
                  axis_estimate(range_marginal, dr, grid.range_center(0), grid.range_width())};
  return grid.clamp(est);
}

double position_error(const Polar& a, const Polar& b) {
  return (scene::polar_to_point(a.angle, a.range) - scene::polar_to_point(b.angle, b.range)).norm();
}

Eigen::VectorXd ideal_response(const Polar& p, const BinGrid& grid) {
  const Eigen::VectorXd wa = hat_weights(p.angle, grid.angle_center(0), grid.angle_width(), grid.angle_bins());
  const Eigen::VectorXd wr = hat_weights(p.range, grid.range_center(0), grid.range_width(), grid.range_bins());
  Eigen::VectorXd y(grid.channels());
  for (int a = 0; a < grid.angle_bins(); ++a) {
    for (int r = 0; r < grid.range_bins(); ++r) y(grid.channel(a, r)) = std::sqrt(wa(a) * wr(r));
  }
  return y;
}

WaveMatrix localization_fields(const SceneBlocks& scene, const std::vector<Polar>& positions, double scale) {
  WaveMatrix c(scene.partition.internal_ports(), static_cast<Index>(positions.size()));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    auto col = c.col(static_cast<Index>(i));
    col = scene::incident_field(scene::polar_to_point(positions[i].angle, positions[i].range), scene);
    const cplx sum = col.sum();
    const cplx ref = std::abs(sum) > 0.0 ? std::conj(sum) / std::abs(sum) : cplx(1.0, 0.0);
    col *= scale * ref;
  }
  return c;
}

double drive_scale(const SceneBlocks& scene, const std::vector<Polar>& anchors, double drive_rms) {
  if (!(drive_rms > 0.0)) throw Error("drive level must be positive");
  const WaveMatrix c = localization_fields(scene, anchors, 1.0);
  const Index k = scene.partition.ports_per_layer;
  const double rms = std::sqrt(c.topRows(k).squaredNorm() / static_cast<double>(k * c.cols()));
  return drive_rms / rms;
}

ResponseModel engine_response(const SceneBlocks& scene, const optim::EngineOptions& engine,
                              const Eigen::VectorXd& phases, double scale) {
  return [&scene, engine, phases, scale](const std::vector<Polar>& positions) {
    optim::Engine e(scene, engine, linsim::Excitation::incident(localization_fields(scene, positions, scale)));
    return e.evaluate(phases);
  };
}

ResponseModel ideal_model(const BinGrid& grid) {
  return [grid](const std::vector<Polar>& positions) {
    WaveMatrix y(grid.channels(), static_cast<Index>(positions.size()));
    for (std::size_t i = 0; i < positions.size(); ++i) y.col(static_cast<Index>(i)) = ideal_response(positions[i], grid).cast<cplx>();
    return y;
  };
}

LocalizationMetrics monte_carlo_localize(const ResponseModel& model, const BinGrid& grid, double snr_db, int trials,
                                         std::uint64_t seed) {
  if (trials < 1) throw Error("Monte Carlo needs at least one trial");
  const Region& reg = grid.region();
  LocalizationMetrics m;
  m.truth.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    auto rng = stream(seed, t, 0);
    const double angle = reg.angle_min + (reg.angle_max - reg.angle_min) * unit_uniform(rng);
    const double r2 = reg.range_min * reg.range_min +
                      (reg.range_max * reg.range_max - reg.range_min * reg.range_min) * unit_uniform(rng);
    m.truth.push_back(grid.clamp(Polar{angle, std::sqrt(r2)}));
  }
  const WaveMatrix y = model(m.truth);
  if (y.rows() != grid.channels() || y.cols() != trials) throw DimensionError("probe outputs", grid.channels(), y.rows());

  const bool noisy = std::isfinite(snr_db);
  const double sigma2 = noisy ? y.squaredNorm() / static_cast<double>(y.size()) / std::pow(10.0, snr_db / 10.0) : 0.0;
  const double sd = std::sqrt(0.5 * sigma2);

  m.confusion = Eigen::MatrixXi::Zero(grid.channels(), grid.channels());
  for (int t = 0; t < trials; ++t) {
    auto rng = stream(seed, t, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd powers(grid.channels());
    for (int c = 0; c < grid.channels(); ++c) {
      cplx v = y(c, t);
      if (noisy) v += cplx(sd * normal(rng), sd * normal(rng));
      powers(c) = std::norm(v);
    }
    const Polar est = estimate_position(powers, grid);
    m.estimates.push_back(est);
    m.errors.push_back(position_error(est, m.truth[static_cast<std::size_t>(t)]));
    m.confusion(grid.channel_of(m.truth[static_cast<std::size_t>(t)]), grid.channel_of(est)) += 1;
  }
  double sum = 0.0;
  for (double e : m.errors) sum += e;
  m.mean_error = sum / trials;
  m.p50 = percentile(m.errors, 0.5);
  m.p90 = percentile(m.errors, 0.9);
  m.tf_residual_pct = std::numeric_limits<double>::quiet_NaN();
  return m;
}

double tf_residual(const WaveMatrix& y, const WaveMatrix& y_d) {
  const double ref = y_d.norm();
  if (!(ref > 0.0)) throw Error("transfer-function residual needs a nonzero target");
  const cplx beta = optim::optimal_beta(y, y_d);
  return 100.0 * (beta * y - y_d).norm() / ref;
}

std::vector<MapCell> dominant_channel_map(const ResponseModel& model, const BinGrid& grid, int angle_points,
                                          int range_points) {
  if (angle_points < 1 || range_points < 1) throw Error("map raster must be non-empty");
  const Region& reg = grid.region();
  std::vector<Polar> pos;
  for (int i = 0; i < angle_points; ++i) {
    for (int j = 0; j < range_points; ++j) {
      pos.push_back(Polar{reg.angle_min + (reg.angle_max - reg.angle_min) * (i + 0.5) / angle_points,
                          reg.range_min + (reg.range_max - reg.range_min) * (j + 0.5) / range_points});
    }
  }
  const WaveMatrix y = model(pos);
  std::vector<MapCell> out;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    Index ch = 0;
    y.col(static_cast<Index>(i)).cwiseAbs2().maxCoeff(&ch);
    out.push_back(MapCell{pos[i], static_cast<int>(ch)});
  }
  return out;
}

}  // namespace simnet::locapp
