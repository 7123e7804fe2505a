#include "simnet/linsim.hpp"

#include <numeric>

#include "simnet/errors.hpp"

namespace simnet::linsim {

using netcore::Cell2;
using netcore::cplx;
using netcore::PortPartition;
using netcore::ProductOrder;
using netcore::SolveOptions;

namespace {

void require_phases(const Eigen::VectorXd& phases, const PortPartition& partition) {
  if (phases.size() != partition.cells()) throw DimensionError("phases", partition.cells(), phases.size());
}

std::vector<Index> last_layer_rows(const PortPartition& part) {
  std::vector<Index> rows(static_cast<std::size_t>(part.ports_per_layer));
  std::iota(rows.begin(), rows.end(), part.last_layer_offset());
  return rows;
}

}  // namespace

TerminationLinear gamma_from_phases(const Eigen::VectorXd& phases, const PortPartition& partition) {
  require_phases(phases, partition);
  std::vector<Cell2> cells(static_cast<std::size_t>(partition.cells()));
  std::vector<Cell2> derivs(cells.size());
  for (Index p = 0; p < partition.cells(); ++p) {
    const cplx e = std::polar(1.0, phases(p));
    Cell2 c;
    c << 0.0, e, e, 0.0;
    cells[static_cast<std::size_t>(p)] = c;
    derivs[static_cast<std::size_t>(p)] = cplx(0.0, 1.0) * c;
  }
  return TerminationLinear{phases, CellMatrix(partition, std::move(cells)), CellMatrix(partition, std::move(derivs))};
}

TerminationLinear termination_from_model(const Eigen::VectorXd& phases, const PortPartition& partition,
                                         const CellModel& cell, const CellModel& derivative) {
  require_phases(phases, partition);
  std::vector<Cell2> cells(static_cast<std::size_t>(partition.cells()));
  std::vector<Cell2> derivs(cells.size());
  for (Index p = 0; p < partition.cells(); ++p) {
    cells[static_cast<std::size_t>(p)] = cell(p, phases(p));
    derivs[static_cast<std::size_t>(p)] = derivative(p, phases(p));
  }
  return TerminationLinear{phases, CellMatrix(partition, std::move(cells)), CellMatrix(partition, std::move(derivs))};
}

Excitation Excitation::sources(WaveMatrix a_s) { return Excitation(std::move(a_s), false); }
Excitation Excitation::incident(WaveMatrix c) { return Excitation(std::move(c), true); }

WaveMatrix Excitation::internal_drive(const SceneBlocks& scene) const {
  if (incident_) {
    if (values_.rows() != scene.partition.internal_ports()) {
      throw DimensionError("rows of incident field", scene.partition.internal_ports(), values_.rows());
    }
    return values_;
  }
  if (values_.rows() != scene.partition.tx_ports) {
    throw DimensionError("rows of A_S", scene.partition.tx_ports, values_.rows());
  }
  // S_ET is nonzero only on the first layer.
  const Index k = scene.partition.ports_per_layer;
  WaveMatrix c = WaveMatrix::Zero(scene.partition.internal_ports(), values_.cols());
  c.topRows(k).noalias() = scene.s_et.topRows(k) * values_;
  return c;
}

WaveMatrix Excitation::direct_term(const SceneBlocks& scene) const {
  if (incident_) return WaveMatrix::Zero(scene.partition.rx_ports, values_.cols());
  if (values_.rows() != scene.partition.tx_ports) {
    throw DimensionError("rows of A_S", scene.partition.tx_ports, values_.rows());
  }
  return scene.s_rt * values_;
}

WaveMatrix transfer_apply(const SceneBlocks& scene, const TerminationLinear& gamma, const Excitation& excitation,
                          SolveMethod method) {
  const PortPartition& part = scene.partition;
  const Index k = part.ports_per_layer;
  // A_E = (I - Gamma S_EE)^{-1} Gamma C; the receiver only sees the last layer.
  const auto op = netcore::sensitivity_operator(gamma.cells, scene.s_ee, ProductOrder::kCellFirst);
  SolveOptions opts;
  opts.method = method;
  opts.rows_of_interest = last_layer_rows(part);
  const WaveMatrix a_last = netcore::solve_structured(op, gamma.cells.apply(excitation.internal_drive(scene)), opts);
  WaveMatrix y = excitation.direct_term(scene);
  y.noalias() += scene.s_re.rightCols(k) * a_last;
  return y;
}

WaveMatrix forward_fields(const SceneBlocks& scene, const TerminationLinear& gamma, const Excitation& excitation,
                          SolveMethod method) {
  const auto op = netcore::sensitivity_operator(gamma.cells, scene.s_ee, ProductOrder::kNetworkFirst);
  SolveOptions opts;
  opts.method = method;
  return netcore::solve_structured(op, excitation.internal_drive(scene), opts);
}

WaveMatrix output_from_fields(const SceneBlocks& scene, const TerminationLinear& gamma, const Excitation& excitation,
                              const WaveMatrix& b_e) {
  const Index k = scene.partition.ports_per_layer;
  WaveMatrix y = excitation.direct_term(scene);
  y.noalias() += scene.s_re.rightCols(k) * gamma.cells.apply(b_e).bottomRows(k);
  return y;
}

Eigen::VectorXd linear_gradient(const SceneBlocks& scene, const TerminationLinear& gamma, const WaveMatrix& b_e,
                                const WaveMatrix& error, cplx beta, SolveMethod method) {
  const PortPartition& part = scene.partition;
  const Index n = part.internal_ports();
  const Index k = part.ports_per_layer;
  if (b_e.rows() != n) throw DimensionError("rows of B_E", n, b_e.rows());
  if (error.rows() != part.rx_ports) throw DimensionError("rows of E", part.rx_ports, error.rows());
  if (error.cols() != b_e.cols()) throw DimensionError("columns of E", b_e.cols(), error.cols());

  WaveMatrix forcing = WaveMatrix::Zero(n, error.cols());
  forcing.bottomRows(k).noalias() = scene.s_re.rightCols(k).adjoint() * (std::conj(beta) * error);
  const auto op = netcore::sensitivity_operator(gamma.cells, scene.s_ee, ProductOrder::kCellFirst).adjoint();
  SolveOptions opts;
  opts.method = method;
  const WaveMatrix u = netcore::solve_structured(op, forcing, opts);

  Eigen::VectorXd grad(part.cells());
  for (Index p = 0; p < part.cells(); ++p) {
    const Index m = part.cell_port_a(p);
    const Index nn = part.cell_port_b(p);
    const Cell2& d = gamma.derivatives.cell(p);
    cplx acc = 0.0;
    for (Index i = 0; i < b_e.cols(); ++i) {
      const cplx da_m = d(0, 0) * b_e(m, i) + d(0, 1) * b_e(nn, i);
      const cplx da_n = d(1, 0) * b_e(m, i) + d(1, 1) * b_e(nn, i);
      acc += std::conj(u(m, i)) * da_m + std::conj(u(nn, i)) * da_n;
    }
    grad(p) = 2.0 * acc.real();
  }
  return grad;
}

}  // namespace simnet::linsim
