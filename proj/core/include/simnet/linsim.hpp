#pragma once

// Linear diagonal terminations, the closed-form end-to-end map, forward
// fields and the adjoint gradient of L = ||beta Y - Y_d||_F^2.

#include <functional>

#include <Eigen/Dense>

#include "simnet/netcore.hpp"
#include "simnet/scene.hpp"

namespace simnet::linsim {

using netcore::CellMatrix;
using netcore::CMatrix;
using netcore::Index;
using netcore::SolveMethod;
using netcore::WaveMatrix;
using scene::SceneBlocks;

struct TerminationLinear {
  Eigen::VectorXd phases;  // QK radians
  CellMatrix cells;        // Gamma
  CellMatrix derivatives;  // cell p holds dGamma_p / d eta_p
};

// Ideal phase shifters: cell block [[0, e^{j eta}], [e^{j eta}, 0]].
TerminationLinear gamma_from_phases(const Eigen::VectorXd& phases, const netcore::PortPartition& partition);

// General cells; `cell` and `derivative` map (cell index, phase) to 2x2 blocks.
using CellModel = std::function<netcore::Cell2(Index, double)>;
TerminationLinear termination_from_model(const Eigen::VectorXd& phases, const netcore::PortPartition& partition,
                                         const CellModel& cell, const CellModel& derivative);

// A batch of I excitations, either Tx source waves A_S (L x I) or incident
// fields S_ET a_S supplied directly (N x I). Incident batches carry no
// direct Tx -> Rx term.
class Excitation {
 public:
  static Excitation sources(WaveMatrix a_s);
  static Excitation incident(WaveMatrix c);

  bool is_incident() const { return incident_; }
  Index columns() const { return values_.cols(); }
  const WaveMatrix& values() const { return values_; }

  // S_ET A_S, or the supplied fields (N x I).
  WaveMatrix internal_drive(const SceneBlocks& scene) const;
  // S_RT A_S, or zero (M x I).
  WaveMatrix direct_term(const SceneBlocks& scene) const;

 private:
  Excitation(WaveMatrix values, bool incident) : values_(std::move(values)), incident_(incident) {}
  WaveMatrix values_;
  bool incident_ = false;
};

// Y = S_RT A_S + S_RE (I - Gamma S_EE)^{-1} Gamma S_ET A_S.
WaveMatrix transfer_apply(const SceneBlocks& scene, const TerminationLinear& gamma, const Excitation& excitation,
                          SolveMethod method = SolveMethod::kStructured);

// B_E solving (I - S_EE Gamma) B_E = S_ET A_S.
WaveMatrix forward_fields(const SceneBlocks& scene, const TerminationLinear& gamma, const Excitation& excitation,
                          SolveMethod method = SolveMethod::kStructured);

// Y from converged forward fields: S_RT A_S + S_RE Gamma B_E.
WaveMatrix output_from_fields(const SceneBlocks& scene, const TerminationLinear& gamma, const Excitation& excitation,
                              const WaveMatrix& b_e);

// dL/d eta_p = 2 Re <U, dGamma/d eta_p B_E>, (I - Gamma S_EE)^H U = S_RE^H (conj(beta) E).
// beta is held fixed.
Eigen::VectorXd linear_gradient(const SceneBlocks& scene, const TerminationLinear& gamma, const WaveMatrix& b_e,
                                const WaveMatrix& error, netcore::cplx beta,
                                SolveMethod method = SolveMethod::kStructured);

}  // namespace simnet::linsim
