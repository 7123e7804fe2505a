#pragma once

// Quadratic matching loss with optimal complex scaling and the Adam loop
// over cell phases for the linear and nonlinear engines.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "simnet/linsim.hpp"
#include "simnet/nlsim.hpp"

namespace simnet::optim {

using linsim::Excitation;
using netcore::cplx;
using netcore::Index;
using netcore::WaveMatrix;
using scene::SceneBlocks;

struct LossContext {
  WaveMatrix y;
  WaveMatrix y_d;
  cplx beta;
  WaveMatrix e;  // beta Y - Y_d
  double l = 0.0;
};

// argmin_beta ||beta Y - Y_d||_F^2 = tr(Y^H Y_d) / ||Y||_F^2. Throws on Y = 0.
cplx optimal_beta(const WaveMatrix& y, const WaveMatrix& y_d);
LossContext make_loss_context(WaveMatrix y, WaveMatrix y_d);
LossContext make_loss_context(WaveMatrix y, WaveMatrix y_d, cplx beta);
double loss(const LossContext& ctx);

enum class EngineKind { kLinear, kNonlinear };

struct EngineOptions {
  EngineKind kind = EngineKind::kLinear;
  // Nonlinear engine only.
  nlsim::LawKind law = nlsim::LawKind::kRappRadial;
  RappParams rapp;
  nlsim::FixedPointOptions fixed_point;
  netcore::SolveMethod method = netcore::SolveMethod::kStructured;
};

// Forward map and gradient at a phase vector. The nonlinear engine warm
// starts each fixed point from the previous converged A_E.
class Engine {
 public:
  Engine(const SceneBlocks& scene, EngineOptions options, Excitation excitation);

  const EngineOptions& options() const { return options_; }
  const Excitation& excitation() const { return excitation_; }

  // Y(eta); keeps the forward state for gradient().
  WaveMatrix evaluate(const Eigen::VectorXd& phases);
  // dL/d eta at the last evaluated phases for E = beta Y - Y_d, beta fixed.
  Eigen::VectorXd gradient(const WaveMatrix& error, cplx beta) const;

  void reset_warm_start() { warm_.reset(); }
  // Fixed-point iterations used by the last evaluation (0 for linear).
  int last_iterations() const { return last_iterations_; }

 private:
  const SceneBlocks* scene_;
  EngineOptions options_;
  Excitation excitation_;
  Eigen::VectorXd phases_;
  WaveMatrix b_e_;
  std::optional<nlsim::FixedPointState> state_;
  std::optional<WaveMatrix> warm_;
  int last_iterations_ = 0;
};

struct OptimOptions {
  double rate = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iters = 2000;
  int patience = 50;
  double rel_tol = 1e-6;
  // Threshold on ||grad|| of the loss normalized by ||Y_d||_F^2.
  double grad_tol = 1e-9;
  double divergence_factor = 10.0;
  int starts = 4;
  std::uint64_t seed = 1;
  // Replaces the random initialization of every start.
  std::optional<Eigen::VectorXd> initial_phases;
};

enum class Termination { kMaxIterations, kStalled, kGradient, kDiverged };
std::string to_string(Termination t);

struct OptimRun {
  int start = 0;
  std::vector<Eigen::VectorXd> trajectory;  // phases at which each history row was evaluated
  std::vector<double> loss;
  std::vector<cplx> beta;
  std::vector<double> grad_norm;  // of the normalized loss
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  int adam_t = 0;
  Termination termination = Termination::kMaxIterations;

  Eigen::VectorXd best_phases;
  double best_loss = 0.0;
};

struct OptimResult {
  std::vector<OptimRun> runs;
  std::size_t best = 0;  // index into runs
  const OptimRun& best_run() const { return runs[best]; }
};

// Wraps to (-pi, pi].
double wrap_phase(double x);
Eigen::VectorXd initial_phases(Index cells, std::uint64_t seed, int start);

OptimRun optimize_single(Engine& engine, const WaveMatrix& y_d, const OptimOptions& options,
                         const Eigen::VectorXd& start_phases, int start = 0);

// Multi-start; starts run concurrently, each with its own engine.
OptimResult optimize(const SceneBlocks& scene, const EngineOptions& engine, const Excitation& excitation,
                     const WaveMatrix& y_d, const OptimOptions& options);

}  // namespace simnet::optim
