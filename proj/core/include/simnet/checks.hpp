#pragma once

// Randomized self-checks shared by the CLI, the test suites and the
// acceptance gate: adjoint-vs-finite-difference gradients and solver
// equivalence/scaling measurements.

#include <cstdint>
#include <random>
#include <vector>

#include "simnet/netcore.hpp"
#include "simnet/nlsim.hpp"
#include "simnet/scene.hpp"

namespace simnet::checks {

using netcore::CMatrix;
using netcore::Index;

using Rng = std::mt19937_64;
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);
double uniform(Rng& rng, double lo = 0.0, double hi = 1.0);
// Entries with real and imaginary parts uniform in [-1, 1].
CMatrix random_cmatrix(Index rows, Index cols, Rng& rng);
Eigen::VectorXd random_phases(Index n, Rng& rng);

struct RandomSceneSpec {
  Index tx_ports = 2;
  Index rx_ports = 2;
  Index stages = 2;
  Index per_layer = 2;
  double coupling_norm = 0.6;  // spectral norm of every inter-stage block
  bool edge_reflection = false;
  double edge_coeff = 0.2;
  bool direct_path = true;
};

// Synthetic blocks with the declared zero patterns (no geometry).
scene::SceneBlocks random_scene(const RandomSceneSpec& spec, Rng& rng);

// max_p |g_p - fd_p| / max_p |fd_p|.
double gradient_error(const Eigen::VectorXd& adjoint, const Eigen::VectorXd& fd);

struct GradcheckCase {
  Index stages = 0;
  Index per_layer = 0;
  Index excitations = 0;
  double rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_rel_error = 0.0;
};

// Q cycles over {1,2,3}, K over {2,4}, I over {1,3}; step is the central
// difference half-width in radians.
GradcheckReport linear_gradcheck(int scenes, std::uint64_t seed, double step = 1e-6);
// Rapp law with rs near the RMS drive; every finite-difference point is
// re-solved to tolerance 1e-12.
GradcheckReport nonlinear_gradcheck(int scenes, std::uint64_t seed, double step = 1e-5);

// Block-tridiagonal operator with dense random blocks, diagonally dominant.
netcore::StageOperator random_stage_operator(Index stages, Index block_size, Rng& rng);

// Median wall time (s) of the structured solve of a Q-stage operator with
// 2K x 2K blocks against one right-hand side.
double time_structured_solve(Index stages, Index per_layer, int repeats, std::uint64_t seed);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace simnet::checks
