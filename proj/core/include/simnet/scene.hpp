#pragma once

// Scattering-block synthesis from a geometric description of the Tx source,
// the Q stacked layer pairs, and the Rx probe array.
//
// Coordinates: layers are planes of constant z with elements on a centered
// rows x cols grid in x-y. Stage q side A sits at z = q*(thickness + gap),
// side B at thickness behind it. Users are in front (z < 0), probes behind.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "simnet/netcore.hpp"

namespace simnet::scene {

using netcore::CMatrix;
using netcore::CVector;
using netcore::Index;
using Point = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 299792458.0;

// Angular sector (radians, measured from boresight in the x-z plane) and
// range interval (meters from the center of the first layer).
struct Region {
  double angle_min = -0.5235987755982988;
  double angle_max = 0.5235987755982988;
  double range_min = 0.05;
  double range_max = 0.25;
};

struct SceneConfig {
  double frequency_hz = 28e9;
  Index stages = 5;
  Index rows = 7;
  Index cols = 7;
  double spacing_m = 0.5 * kSpeedOfLight / 28e9;
  double gap_m = 3.0 * kSpeedOfLight / 28e9;
  double thickness_m = 0.1 * kSpeedOfLight / 28e9;

  Index tx_ports = 1;
  double tx_distance_m = 0.15;
  double tx_spacing_m = 0.5 * kSpeedOfLight / 28e9;

  Index probe_rows = 4;
  Index probe_cols = 4;
  double probe_distance_m = 3.0 * kSpeedOfLight / 28e9;
  double probe_spacing_m = 1.5 * kSpeedOfLight / 28e9;

  bool edge_reflection = false;
  double edge_reflection_coeff = 0.2;
  bool direct_path = false;

  Region region;

  double wavelength() const { return kSpeedOfLight / frequency_hz; }
  Index ports_per_layer() const { return rows * cols; }
  Index probe_count() const { return probe_rows * probe_cols; }
  void validate() const;
};

struct SceneGeometry {
  double wavelength = 0.0;
  double element_area = 0.0;
  std::vector<std::vector<Point>> layers;  // 2Q layers, stage-major, side A then B
  std::vector<Point> tx;
  std::vector<Point> probes;
};

struct SceneBlocks {
  netcore::PortPartition partition;
  CMatrix s_rt;                    // M x L
  CMatrix s_et;                    // N x L, nonzero only in the first K rows
  CMatrix s_re;                    // M x N, nonzero only in the last K columns
  netcore::BlockBandedMatrix s_ee;  // N x N, stage band
  SceneGeometry geometry;
};

// Scalar free-space coupling between point sets, entry (i, j) for the pair
// (points_a[i], points_b[j]):
//   w(d, chi) = (A cos(chi) / d) * (1/(2 pi d) - j/lambda) * exp(-j 2 pi d / lambda)
// with chi the angle from the element normal (the z axis).
CMatrix layer_coupling(std::span<const Point> points_a, std::span<const Point> points_b, double frequency_hz,
                       double element_area);

SceneGeometry build_geometry(const SceneConfig& config);
SceneBlocks build_scene(const SceneConfig& config);

// Throws GeometryError when ||S_EE||_2 >= 1. Since ideal cells are unitary,
// this bounds the spectral radius of Gamma * S_EE below 1 for every phase vector.
double check_passivity(const netcore::BlockBandedMatrix& s_ee);

// Per-position excitation S_ET a_S for a unit point source at `user`.
CVector incident_field(const Point& user, const SceneBlocks& scene);
CMatrix incident_fields(std::span<const Point> users, const SceneBlocks& scene);

Point polar_to_point(double angle, double range);

}  // namespace simnet::scene
