#pragma once

// End-to-end localization experiment: optimize both engines against the
// anchor target map, then compare them with the ideal benchmark by Monte
// Carlo at one SNR.

#include <optional>
#include <vector>

#include "simnet/config.hpp"
#include "simnet/locapp.hpp"
#include "simnet/optim.hpp"

namespace simnet::casestudy {

struct EngineOutcome {
  optim::EngineKind kind = optim::EngineKind::kLinear;
  optim::OptimResult optimization;
  Eigen::VectorXd phases;
  double tf_residual_pct = 0.0;
  locapp::LocalizationMetrics metrics;
  double seconds = 0.0;
};

struct CaseStudy {
  scene::SceneBlocks scene;
  locapp::BinGrid grid;
  std::vector<locapp::Polar> anchors;
  double drive_scale = 1.0;
  EngineOutcome linear;
  EngineOutcome nonlinear;
  locapp::LocalizationMetrics ideal;
};

CaseStudy run(const config::RunConfig& config);

// Optimizes one engine on an existing scene and anchor set.
EngineOutcome run_engine(const config::RunConfig& config, optim::EngineKind kind, const scene::SceneBlocks& scene,
                         const locapp::BinGrid& grid, const std::vector<locapp::Polar>& anchors, double drive_scale);

}  // namespace simnet::casestudy
