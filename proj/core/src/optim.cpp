#include "simnet/optim.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>

#include "simnet/errors.hpp"

namespace simnet::optim {

cplx optimal_beta(const WaveMatrix& y, const WaveMatrix& y_d) {
  if (y.rows() != y_d.rows() || y.cols() != y_d.cols()) throw DimensionError("shape of Y_d", y.size(), y_d.size());
  const double norm2 = y.squaredNorm();
  if (!(norm2 > 0.0)) throw Error("optimal beta is undefined for Y = 0");
  // tr(Y^H Y_d) without forming the product.
  cplx tr = 0.0;
  for (Index j = 0; j < y.cols(); ++j) tr += y.col(j).dot(y_d.col(j));
  return tr / norm2;
}

LossContext make_loss_context(WaveMatrix y, WaveMatrix y_d, cplx beta) {
  if (y.rows() != y_d.rows() || y.cols() != y_d.cols()) throw DimensionError("shape of Y_d", y.size(), y_d.size());
  LossContext ctx{std::move(y), std::move(y_d), beta, {}, 0.0};
  ctx.e = beta * ctx.y - ctx.y_d;
  ctx.l = ctx.e.squaredNorm();
  return ctx;
}

LossContext make_loss_context(WaveMatrix y, WaveMatrix y_d) {
  const cplx beta = optimal_beta(y, y_d);
  return make_loss_context(std::move(y), std::move(y_d), beta);
}

double loss(const LossContext& ctx) { return (ctx.beta * ctx.y - ctx.y_d).squaredNorm(); }

Engine::Engine(const SceneBlocks& scene, EngineOptions options, Excitation excitation)
    : scene_(&scene), options_(std::move(options)), excitation_(std::move(excitation)) {
  if (options_.kind == EngineKind::kNonlinear && options_.law == nlsim::LawKind::kRappRadial) options_.rapp.validate();
}

WaveMatrix Engine::evaluate(const Eigen::VectorXd& phases) {
  phases_ = phases;
  if (options_.kind == EngineKind::kLinear) {
    const auto gamma = linsim::gamma_from_phases(phases, scene_->partition);
    b_e_ = linsim::forward_fields(*scene_, gamma, excitation_, options_.method);
    last_iterations_ = 0;
    return linsim::output_from_fields(*scene_, gamma, excitation_, b_e_);
  }
  const nlsim::CellLaw law = options_.law == nlsim::LawKind::kIdealLinear
                                 ? nlsim::CellLaw::ideal(phases)
                                 : nlsim::CellLaw::rapp_radial(phases, options_.rapp);
  nlsim::FixedPointOptions fp = options_.fixed_point;
  if (warm_) fp.warm_start = *warm_;
  state_ = nlsim::fixed_point_solve(*scene_, law, excitation_, fp);
  last_iterations_ = state_->max_iterations();
  if (!state_->all_converged()) {
    throw ConvergenceError("nonlinear engine did not converge", state_->unconverged_columns());
  }
  warm_ = state_->a_e;
  return nlsim::output_map(*scene_, *state_, excitation_);
}

Eigen::VectorXd Engine::gradient(const WaveMatrix& error, cplx beta) const {
  if (options_.kind == EngineKind::kLinear) {
    const auto gamma = linsim::gamma_from_phases(phases_, scene_->partition);
    return linsim::linear_gradient(*scene_, gamma, b_e_, error, beta, options_.method);
  }
  if (!state_) throw Error("gradient requested before evaluate");
  const nlsim::CellLaw law = options_.law == nlsim::LawKind::kIdealLinear
                                 ? nlsim::CellLaw::ideal(phases_)
                                 : nlsim::CellLaw::rapp_radial(phases_, options_.rapp);
  return nlsim::nonlinear_gradient(*scene_, law, *state_, error, beta, options_.method);
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kMaxIterations:
      return "max_iterations";
    case Termination::kStalled:
      return "stalled";
    case Termination::kGradient:
      return "gradient";
    case Termination::kDiverged:
      return "diverged";
  }
  return "unknown";
}

double wrap_phase(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(x + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  // w in [0, 2pi) maps to [-pi, pi); move the left end to the right.
  w -= std::numbers::pi;
  return w == -std::numbers::pi ? std::numbers::pi : w;
}

Eigen::VectorXd initial_phases(Index cells, std::uint64_t seed, int start) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(start)};
  std::mt19937_64 rng(seq);
  Eigen::VectorXd out(cells);
  for (Index i = 0; i < cells; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    out(i) = std::numbers::pi - 2.0 * std::numbers::pi * u;         // (-pi, pi]
  }
  return out;
}

OptimRun optimize_single(Engine& engine, const WaveMatrix& y_d, const OptimOptions& options,
                         const Eigen::VectorXd& start_phases, int start) {
  const double scale = y_d.squaredNorm();
  if (!(scale > 0.0)) throw Error("target Y_d must be nonzero");
  OptimRun run;
  run.start = start;
  Eigen::VectorXd eta = start_phases.unaryExpr([](double x) { return wrap_phase(x); });
  run.adam_m = Eigen::VectorXd::Zero(eta.size());
  run.adam_v = Eigen::VectorXd::Zero(eta.size());
  run.best_phases = eta;
  run.best_loss = std::numeric_limits<double>::infinity();

  for (int it = 0; it < options.max_iters; ++it) {
    const LossContext ctx = make_loss_context(engine.evaluate(eta), y_d);
    const Eigen::VectorXd g = engine.gradient(ctx.e, ctx.beta) / scale;
    const double gn = g.norm();
    run.trajectory.push_back(eta);
    run.loss.push_back(ctx.l);
    run.beta.push_back(ctx.beta);
    run.grad_norm.push_back(gn);
    if (!std::isfinite(ctx.l) || !std::isfinite(gn)) {
      run.termination = Termination::kDiverged;
      return run;
    }
    if (ctx.l < run.best_loss) {
      run.best_loss = ctx.l;
      run.best_phases = eta;
    }
    const auto n = run.loss.size();
    if (n > 1 && ctx.l > options.divergence_factor * run.loss[n - 2]) {
      run.termination = Termination::kDiverged;
      return run;
    }
    if (gn < options.grad_tol) {
      run.termination = Termination::kGradient;
      return run;
    }
    if (it >= options.patience) {
      const double ref = run.loss[n - 1 - static_cast<std::size_t>(options.patience)];
      if (ref - ctx.l < options.rel_tol * ref) {
        run.termination = Termination::kStalled;
        return run;
      }
    }
    ++run.adam_t;
    run.adam_m = options.beta1 * run.adam_m + (1.0 - options.beta1) * g;
    run.adam_v = options.beta2 * run.adam_v + (1.0 - options.beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(options.beta1, run.adam_t);
    const double c2 = 1.0 - std::pow(options.beta2, run.adam_t);
    for (Index i = 0; i < eta.size(); ++i) {
      const double step = options.rate * (run.adam_m(i) / c1) / (std::sqrt(run.adam_v(i) / c2) + options.epsilon);
      eta(i) = wrap_phase(eta(i) - step);
    }
  }
  run.termination = Termination::kMaxIterations;
  return run;
}

OptimResult optimize(const SceneBlocks& scene, const EngineOptions& engine, const Excitation& excitation,
                     const WaveMatrix& y_d, const OptimOptions& options) {
  if (options.starts < 1) throw Error("optimizer needs at least one start");
  const Index cells = scene.partition.cells();
  if (options.initial_phases && options.initial_phases->size() != cells) {
    throw DimensionError("initial phases", cells, options.initial_phases->size());
  }
  std::vector<std::future<OptimRun>> jobs;
  for (int s = 0; s < options.starts; ++s) {
    jobs.push_back(std::async(std::launch::async, [&, s] {
      Engine e(scene, engine, excitation);
      const Eigen::VectorXd eta0 = options.initial_phases ? *options.initial_phases : initial_phases(cells, options.seed, s);
      return optimize_single(e, y_d, options, eta0, s);
    }));
  }
  OptimResult result;
  for (auto& j : jobs) result.runs.push_back(j.get());
  for (std::size_t i = 1; i < result.runs.size(); ++i) {
    if (result.runs[i].best_loss < result.runs[result.best].best_loss) result.best = i;
  }
  return result;
}

}  // namespace simnet::optim
