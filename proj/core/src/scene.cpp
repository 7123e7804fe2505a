#include "simnet/scene.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "simnet/errors.hpp"

namespace simnet::scene {

using netcore::cplx;
using netcore::PortPartition;
using netcore::Side;

namespace {

std::vector<Point> grid_points(Index rows, Index cols, double spacing, double z) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(rows * cols));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      pts.emplace_back((static_cast<double>(c) - 0.5 * static_cast<double>(cols - 1)) * spacing,
                       (static_cast<double>(r) - 0.5 * static_cast<double>(rows - 1)) * spacing, z);
    }
  }
  return pts;
}

cplx coupling(const Point& a, const Point& b, double wavelength, double area) {
  const double d = (a - b).norm();
  const double cos_chi = std::abs(a.z() - b.z()) / d;
  const double phase = -2.0 * std::numbers::pi * d / wavelength;
  return (area * cos_chi / d) * cplx(1.0 / (2.0 * std::numbers::pi * d), -1.0 / wavelength) *
         std::polar(1.0, phase);
}

}  // namespace

void SceneConfig::validate() const {
  if (!(frequency_hz > 0.0)) throw GeometryError("frequency must be positive");
  if (stages < 1 || rows < 1 || cols < 1) throw GeometryError("stages, rows and cols must be >= 1");
  if (tx_ports < 1) throw GeometryError("tx_ports must be >= 1");
  if (probe_rows < 1 || probe_cols < 1) throw GeometryError("probe grid must be non-empty");
  if (!(spacing_m > 0.0) || !(gap_m > 0.0) || !(thickness_m > 0.0)) {
    throw GeometryError("spacing, gap and thickness must be positive");
  }
  if (!(tx_distance_m > 0.0) || !(tx_spacing_m > 0.0)) throw GeometryError("tx distance and spacing must be positive");
  if (!(probe_distance_m > 0.0) || !(probe_spacing_m > 0.0)) {
    throw GeometryError("probe distance and spacing must be positive");
  }
  if (!(region.angle_min < region.angle_max) || !(region.range_min < region.range_max) || !(region.range_min > 0.0)) {
    throw GeometryError("localization region is empty");
  }
  if (std::abs(edge_reflection_coeff) >= 1.0) throw GeometryError("edge reflection must have magnitude < 1");
}

CMatrix layer_coupling(std::span<const Point> points_a, std::span<const Point> points_b, double frequency_hz,
                       double element_area) {
  const double wavelength = kSpeedOfLight / frequency_hz;
  CMatrix w(static_cast<Index>(points_a.size()), static_cast<Index>(points_b.size()));
  for (std::size_t i = 0; i < points_a.size(); ++i) {
    for (std::size_t j = 0; j < points_b.size(); ++j) {
      if ((points_a[i] - points_b[j]).norm() == 0.0) {
        throw GeometryError("coincident points a[" + std::to_string(i) + "] and b[" + std::to_string(j) + "]");
      }
      w(static_cast<Index>(i), static_cast<Index>(j)) = coupling(points_a[i], points_b[j], wavelength, element_area);
    }
  }
  return w;
}

SceneGeometry build_geometry(const SceneConfig& config) {
  config.validate();
  SceneGeometry g;
  g.wavelength = config.wavelength();
  g.element_area = config.spacing_m * config.spacing_m;
  const double pitch = config.thickness_m + config.gap_m;
  for (Index q = 0; q < config.stages; ++q) {
    const double z = static_cast<double>(q) * pitch;
    g.layers.push_back(grid_points(config.rows, config.cols, config.spacing_m, z));
    g.layers.push_back(grid_points(config.rows, config.cols, config.spacing_m, z + config.thickness_m));
  }
  const double z_last = g.layers.back().front().z();
  g.probes = grid_points(config.probe_rows, config.probe_cols, config.probe_spacing_m, z_last + config.probe_distance_m);
  g.tx = grid_points(1, config.tx_ports, config.tx_spacing_m, -config.tx_distance_m);
  return g;
}

double check_passivity(const netcore::BlockBandedMatrix& s_ee) {
  double worst = 0.0;
  for (const auto& b : s_ee.blocks()) {
    Eigen::JacobiSVD<CMatrix> svd(b.values);
    worst = std::max(worst, svd.singularValues()(0));
  }
  // Placed blocks occupy disjoint row and column sets in the scenes built
  // here, so the largest block norm is the norm of S_EE.
  if (!(worst < 1.0)) {
    throw GeometryError("scene is not passive: ||S_EE||_2 = " + std::to_string(worst) + " >= 1");
  }
  return worst;
}

SceneBlocks build_scene(const SceneConfig& config) {
  SceneGeometry geo = build_geometry(config);
  const Index k = config.ports_per_layer();
  const auto part = PortPartition::make(config.tx_ports, config.probe_count(), config.stages, k);
  const Index n = part.internal_ports();
  const Index m = part.rx_ports;
  const Index l = part.tx_ports;
  const double f = config.frequency_hz;
  const double area = geo.element_area;

  netcore::BlockBandedMatrix s_ee(part);
  for (Index q = 0; q + 1 < config.stages; ++q) {
    const auto& side_b = geo.layers[static_cast<std::size_t>(2 * q + 1)];
    const auto& next_a = geo.layers[static_cast<std::size_t>(2 * q + 2)];
    CMatrix g = layer_coupling(next_a, side_b, f, area);
    s_ee.add_block(part.port(q + 1, Side::kA, 0), part.port(q, Side::kB, 0), g);
    s_ee.add_block(part.port(q, Side::kB, 0), part.port(q + 1, Side::kA, 0), g.transpose());
  }
  if (config.edge_reflection) {
    const CMatrix edge = config.edge_reflection_coeff * CMatrix::Identity(k, k);
    s_ee.add_block(part.port(0, Side::kA, 0), part.port(0, Side::kA, 0), edge);
    s_ee.add_block(part.port(config.stages - 1, Side::kB, 0), part.port(config.stages - 1, Side::kB, 0), edge);
  }
  check_passivity(s_ee);

  CMatrix s_et = CMatrix::Zero(n, l);
  s_et.topRows(k) = layer_coupling(geo.layers.front(), geo.tx, f, area);
  CMatrix s_re = CMatrix::Zero(m, n);
  s_re.rightCols(k) = layer_coupling(geo.probes, geo.layers.back(), f, area);
  CMatrix s_rt = CMatrix::Zero(m, l);
  if (config.direct_path) s_rt = layer_coupling(geo.probes, geo.tx, f, area);

  return SceneBlocks{part, std::move(s_rt), std::move(s_et), std::move(s_re), std::move(s_ee), std::move(geo)};
}

CVector incident_field(const Point& user, const SceneBlocks& scene) {
  const auto& first = scene.geometry.layers.front();
  if (user.z() == first.front().z()) throw GeometryError("user position lies on the first layer plane");
  const Point pts[] = {user};
  const double f = kSpeedOfLight / scene.geometry.wavelength;
  CVector c = CVector::Zero(scene.partition.internal_ports());
  c.head(scene.partition.ports_per_layer) = layer_coupling(first, pts, f, scene.geometry.element_area).col(0);
  return c;
}

CMatrix incident_fields(std::span<const Point> users, const SceneBlocks& scene) {
  CMatrix out(scene.partition.internal_ports(), static_cast<Index>(users.size()));
  for (std::size_t i = 0; i < users.size(); ++i) out.col(static_cast<Index>(i)) = incident_field(users[i], scene);
  return out;
}

Point polar_to_point(double angle, double range) {
  return Point(range * std::sin(angle), 0.0, -range * std::cos(angle));
}

}  // namespace simnet::scene
