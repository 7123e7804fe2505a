#pragma once

// Near-field angle-range localization: bin grid, anchor targets, the
// power-based estimator and Monte-Carlo evaluation.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "simnet/optim.hpp"
#include "simnet/scene.hpp"

namespace simnet::locapp {

using netcore::CMatrix;
using netcore::Index;
using netcore::WaveMatrix;
using scene::Region;
using scene::SceneBlocks;

struct Polar {
  double angle = 0.0;  // rad from boresight
  double range = 0.0;  // m
};

// Uniform angle x range bins over a region; channel = angle_bin * range_bins + range_bin.
class BinGrid {
 public:
  explicit BinGrid(Region region, int angle_bins = 4, int range_bins = 4);

  const Region& region() const { return region_; }
  int angle_bins() const { return angle_bins_; }
  int range_bins() const { return range_bins_; }
  int channels() const { return angle_bins_ * range_bins_; }
  int channel(int angle_bin, int range_bin) const { return angle_bin * range_bins_ + range_bin; }

  double angle_width() const;
  double range_width() const;
  double angle_center(int bin) const;
  double range_center(int bin) const;
  Polar center(int channel) const;

  bool contains(const Polar& p) const;
  // Upper edges belong to the last bin. Throws GeometryError outside the region.
  int channel_of(const Polar& p) const;
  Polar clamp(const Polar& p) const;

 private:
  Region region_;
  int angle_bins_;
  int range_bins_;
};

// per_axis x per_axis sub-grid centers inside every bin, channel-major.
std::vector<Polar> anchor_positions(const BinGrid& grid, int per_axis = 2);

// One-hot unit column per anchor on the channel of its bin.
CMatrix ideal_target_map(const BinGrid& grid, const std::vector<Polar>& anchors);

// Dominant channel by argmax (lowest index on ties), then on each axis a
// centroid over the dominant bin and its neighbours of the marginal powers
// minus their minimum over all bins. Clamped to the region.
Polar estimate_position(const Eigen::Ref<const Eigen::VectorXd>& powers, const BinGrid& grid);

double position_error(const Polar& a, const Polar& b);

// Separable hat-function power map over bin centers; the ideal benchmark's
// noiseless probe response (amplitudes, unit total power).
Eigen::VectorXd ideal_response(const Polar& p, const BinGrid& grid);

// Probe outputs (channels x positions) for a batch of user positions.
using ResponseModel = std::function<WaveMatrix(const std::vector<Polar>&)>;

// Incident fields for users at `positions`, multiplied by `scale` and
// referenced to the phase of their element sum.
WaveMatrix localization_fields(const SceneBlocks& scene, const std::vector<Polar>& positions, double scale);
// Scale giving RMS element magnitude `drive_rms` over the anchors' fields.
double drive_scale(const SceneBlocks& scene, const std::vector<Polar>& anchors, double drive_rms);

ResponseModel engine_response(const SceneBlocks& scene, const optim::EngineOptions& engine,
                              const Eigen::VectorXd& phases, double scale);
ResponseModel ideal_model(const BinGrid& grid);

struct LocalizationMetrics {
  double mean_error = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  std::vector<double> errors;
  std::vector<Polar> truth;
  std::vector<Polar> estimates;
  Eigen::MatrixXi confusion;  // [true channel][estimated channel]
  double tf_residual_pct = 0.0;
};

// Users uniform in angle and area-uniform in range; circular Gaussian probe
// noise with variance mean noiseless probe power / 10^(snr/10). A non-finite
// snr_db disables noise. Trial t draws from streams seeded by (seed, t).
LocalizationMetrics monte_carlo_localize(const ResponseModel& model, const BinGrid& grid, double snr_db, int trials,
                                         std::uint64_t seed);

// 100 ||beta* Y - Y_d||_F / ||Y_d||_F.
double tf_residual(const WaveMatrix& y, const WaveMatrix& y_d);

struct MapCell {
  Polar position;
  int channel = 0;
};
// Dominant channel on an angle x range raster covering the region.
std::vector<MapCell> dominant_channel_map(const ResponseModel& model, const BinGrid& grid, int angle_points,
                                          int range_points);

}  // namespace simnet::locapp
