#include "simnet/casestudy.hpp"

#include <chrono>

namespace simnet::casestudy {

EngineOutcome run_engine(const config::RunConfig& config, optim::EngineKind kind, const scene::SceneBlocks& scene,
                         const locapp::BinGrid& grid, const std::vector<locapp::Polar>& anchors, double drive_scale) {
  const auto t0 = std::chrono::steady_clock::now();
  optim::EngineOptions eo = config.engine;
  eo.kind = kind;
  const auto excitation = linsim::Excitation::incident(locapp::localization_fields(scene, anchors, drive_scale));
  const netcore::WaveMatrix y_d = locapp::ideal_target_map(grid, anchors);
  optim::OptimOptions oo = config.optimizer;
  oo.seed = config.seed;

  EngineOutcome out;
  out.kind = kind;
  out.optimization = optim::optimize(scene, eo, excitation, y_d, oo);
  out.phases = out.optimization.best_run().best_phases;

  optim::Engine engine(scene, eo, excitation);
  out.tf_residual_pct = locapp::tf_residual(engine.evaluate(out.phases), y_d);
  out.metrics = locapp::monte_carlo_localize(locapp::engine_response(scene, eo, out.phases, drive_scale), grid,
                                             config.localize.snr_db, config.localize.trials, config.seed);
  out.metrics.tf_residual_pct = out.tf_residual_pct;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

CaseStudy run(const config::RunConfig& config) {
  auto sc = scene::build_scene(config.scene);
  locapp::BinGrid grid(config.scene.region);
  auto anchors = locapp::anchor_positions(grid, config.localize.anchors_per_axis);
  const double scale = locapp::drive_scale(sc, anchors, config.localize.drive_rms);
  CaseStudy cs{std::move(sc), grid, std::move(anchors), scale, {}, {}, {}};
  cs.linear = run_engine(config, optim::EngineKind::kLinear, cs.scene, cs.grid, cs.anchors, scale);
  cs.nonlinear = run_engine(config, optim::EngineKind::kNonlinear, cs.scene, cs.grid, cs.anchors, scale);
  cs.ideal = locapp::monte_carlo_localize(locapp::ideal_model(cs.grid), cs.grid, config.localize.snr_db,
                                          config.localize.trials, config.seed);
  cs.ideal.tf_residual_pct = 0.0;
  return cs;
}

}  // namespace simnet::casestudy
