#pragma once

// Explicit nonlinear cell terminations: relaxed fixed-point forward solve,
// Wirtinger Jacobians and the widely-linear adjoint gradient.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "simnet/linsim.hpp"
#include "simnet/netcore.hpp"
#include "simnet/rapp.hpp"
#include "simnet/scene.hpp"

namespace simnet::nlsim {

using linsim::Excitation;
using netcore::CellMatrix;
using netcore::cplx;
using netcore::Index;
using netcore::PortPartition;
using netcore::SolveMethod;
using netcore::WaveMatrix;
using scene::SceneBlocks;

enum class LawKind { kIdealLinear, kRappRadial };

// Matched radial law: a_m(p) = g(|b_n(p)|) e^{j eta_p} b_n(p) and symmetrically,
// with g from the Rapp model (or g = 1 for the ideal-linear kind).
struct CellLaw {
  LawKind kind = LawKind::kRappRadial;
  RappParams rapp;
  Eigen::VectorXd phases;

  static CellLaw ideal(Eigen::VectorXd phases);
  static CellLaw rapp_radial(Eigen::VectorXd phases, RappParams params);

  double gain(double r) const { return kind == LawKind::kIdealLinear ? 1.0 : rapp_gain(r, rapp); }
  // r g'(r)
  double log_slope(double r) const { return kind == LawKind::kIdealLinear ? 0.0 : rapp_log_slope(r, rapp); }
};

WaveMatrix cell_law_apply(const WaveMatrix& b_e, const CellLaw& law, const PortPartition& partition);

struct FixedPointOptions {
  double omega = 0.5;
  double tol = 1e-10;
  int max_iters = 500;
  // Initial A_E (N x I); zero when absent.
  std::optional<WaveMatrix> warm_start;
};

struct FixedPointState {
  WaveMatrix a_e;
  WaveMatrix b_e;
  std::vector<std::vector<double>> residual_history;  // [column][iteration]
  std::vector<bool> converged;
  std::vector<int> iterations;  // relaxation updates per column
  // Instrumented complex multiply-accumulates of one iteration, per column.
  std::size_t flops_per_iteration = 0;

  bool all_converged() const;
  std::vector<std::ptrdiff_t> unconverged_columns() const;
  int max_iterations() const;
};

// Iterates b = c + S_EE a, a_map = f(b), a <- (1 - omega) a + omega a_map per
// column until ||a - a_map|| <= tol (1 + ||a||). Non-finite iterates throw
// DivergenceError. Unconverged columns are flagged, never dropped.
FixedPointState fixed_point_solve(const SceneBlocks& scene, const CellLaw& law, const Excitation& excitation,
                                  const FixedPointOptions& options = {});

// Y = S_RT A_S + S_RE A_E. Throws ConvergenceError listing unconverged
// columns unless allow_partial is set.
WaveMatrix output_map(const SceneBlocks& scene, const FixedPointState& state, const Excitation& excitation,
                      bool allow_partial = false);

// df = J_b db + J_c conj(db) at one column of converged waves.
struct WirtingerPair {
  CellMatrix jb;
  CellMatrix jc;
};

WirtingerPair wirtinger_jacobians(const Eigen::Ref<const Eigen::VectorXcd>& b_e, const CellLaw& law,
                                  const PortPartition& partition);

// Adjoint gradient through the widely-linear sensitivity operator
// I - [[Jb, Jc], [conj Jc, conj Jb]] diag(S_EE, conj S_EE), one augmented
// solve per column. beta is held fixed.
Eigen::VectorXd nonlinear_gradient(const SceneBlocks& scene, const CellLaw& law, const FixedPointState& state,
                                   const WaveMatrix& error, cplx beta, SolveMethod method = SolveMethod::kStructured);

}  // namespace simnet::nlsim
