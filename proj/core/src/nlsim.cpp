#include "simnet/nlsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simnet/errors.hpp"

namespace simnet {

void RappParams::validate() const {
  if (!(g0 > 0.0 && g0 <= 1.0)) throw Error("Rapp g0 must lie in (0, 1], got " + std::to_string(g0));
  if (!(rs > 0.0)) throw Error("Rapp rs must be positive, got " + std::to_string(rs));
  if (!(p > 0.0)) throw Error("Rapp p must be positive, got " + std::to_string(p));
}

}  // namespace simnet

namespace simnet::nlsim {

using netcore::Cell2;

namespace {

void require_law(const CellLaw& law, const PortPartition& partition) {
  if (law.phases.size() != partition.cells()) throw DimensionError("phases", partition.cells(), law.phases.size());
}

cplx radial(const CellLaw& law, cplx rotation, cplx b) { return law.gain(std::abs(b)) * rotation * b; }

// Complex multiply-accumulates charged per port and iteration outside the
// S_EE product: the law's complex scale, the two relaxation terms and the
// residual accumulation.
constexpr std::size_t kPortCost = 4;

}  // namespace

CellLaw CellLaw::ideal(Eigen::VectorXd phases) {
  CellLaw law;
  law.kind = LawKind::kIdealLinear;
  law.phases = std::move(phases);
  return law;
}

CellLaw CellLaw::rapp_radial(Eigen::VectorXd phases, RappParams params) {
  params.validate();
  CellLaw law;
  law.kind = LawKind::kRappRadial;
  law.rapp = params;
  law.phases = std::move(phases);
  return law;
}

WaveMatrix cell_law_apply(const WaveMatrix& b_e, const CellLaw& law, const PortPartition& partition) {
  require_law(law, partition);
  if (b_e.rows() != partition.internal_ports()) {
    throw DimensionError("rows of B_E", partition.internal_ports(), b_e.rows());
  }
  WaveMatrix a(b_e.rows(), b_e.cols());
  for (Index p = 0; p < partition.cells(); ++p) {
    const Index m = partition.cell_port_a(p);
    const Index n = partition.cell_port_b(p);
    const cplx rot = std::polar(1.0, law.phases(p));
    for (Index i = 0; i < b_e.cols(); ++i) {
      a(m, i) = radial(law, rot, b_e(n, i));
      a(n, i) = radial(law, rot, b_e(m, i));
    }
  }
  return a;
}

bool FixedPointState::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

std::vector<std::ptrdiff_t> FixedPointState::unconverged_columns() const {
  std::vector<std::ptrdiff_t> out;
  for (std::size_t i = 0; i < converged.size(); ++i) {
    if (!converged[i]) out.push_back(static_cast<std::ptrdiff_t>(i));
  }
  return out;
}

int FixedPointState::max_iterations() const {
  return iterations.empty() ? 0 : *std::max_element(iterations.begin(), iterations.end());
}

FixedPointState fixed_point_solve(const SceneBlocks& scene, const CellLaw& law, const Excitation& excitation,
                                  const FixedPointOptions& options) {
  const PortPartition& part = scene.partition;
  require_law(law, part);
  if (!(options.omega > 0.0 && options.omega <= 1.0)) {
    throw Error("relaxation omega must lie in (0, 1], got " + std::to_string(options.omega));
  }
  const WaveMatrix drive = excitation.internal_drive(scene);
  const Index n = part.internal_ports();
  const Index cols = drive.cols();
  if (options.warm_start && (options.warm_start->rows() != n || options.warm_start->cols() != cols)) {
    throw DimensionError("warm start columns", cols, options.warm_start->cols());
  }

  FixedPointState st;
  st.a_e.resize(n, cols);
  st.b_e.resize(n, cols);
  st.residual_history.resize(static_cast<std::size_t>(cols));
  st.converged.assign(static_cast<std::size_t>(cols), false);
  st.iterations.assign(static_cast<std::size_t>(cols), 0);
  st.flops_per_iteration = scene.s_ee.multiply_cost() + kPortCost * static_cast<std::size_t>(n);

  for (Index i = 0; i < cols; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    WaveMatrix a = options.warm_start ? WaveMatrix(options.warm_start->col(i)) : WaveMatrix::Zero(n, 1);
    WaveMatrix b;
    for (int t = 0;; ++t) {
      b = drive.col(i) + netcore::mul_block_banded(scene.s_ee, a);
      const WaveMatrix a_map = cell_law_apply(b, law, part);
      const double res = (a - a_map).norm();
      st.residual_history[ui].push_back(res);
      if (!std::isfinite(res)) {
        throw DivergenceError("fixed point produced non-finite waves in column " + std::to_string(i), t);
      }
      if (res <= options.tol * (1.0 + a.norm())) {
        st.converged[ui] = true;
        break;
      }
      if (t == options.max_iters) break;
      a = (1.0 - options.omega) * a + options.omega * a_map;
      ++st.iterations[ui];
    }
    st.a_e.col(i) = a;
    st.b_e.col(i) = b;
  }
  return st;
}

WaveMatrix output_map(const SceneBlocks& scene, const FixedPointState& state, const Excitation& excitation,
                      bool allow_partial) {
  if (!allow_partial && !state.all_converged()) {
    throw ConvergenceError("fixed point did not converge", state.unconverged_columns());
  }
  const Index k = scene.partition.ports_per_layer;
  if (state.a_e.cols() != excitation.columns()) {
    throw DimensionError("columns of A_E", excitation.columns(), state.a_e.cols());
  }
  WaveMatrix y = excitation.direct_term(scene);
  y.noalias() += scene.s_re.rightCols(k) * state.a_e.bottomRows(k);
  return y;
}

WirtingerPair wirtinger_jacobians(const Eigen::Ref<const Eigen::VectorXcd>& b_e, const CellLaw& law,
                                  const PortPartition& partition) {
  require_law(law, partition);
  if (b_e.size() != partition.internal_ports()) {
    throw DimensionError("rows of B_E", partition.internal_ports(), b_e.size());
  }
  // For F(b) = g(r) e^{j eta} b, r = |b|:
  //   dF/db       = e^{j eta} (g + r g'/2)
  //   dF/d conj b = e^{j eta} g' b^2 / (2 r)  = e^{j eta} (r g') b^2 / (2 r^2)
  auto pair = [&](cplx rot, cplx b) -> std::pair<cplx, cplx> {
    const double r = std::abs(b);
    if (r == 0.0) return {rot * law.gain(0.0), cplx(0.0, 0.0)};
    const double rg = law.log_slope(r);
    return {rot * (law.gain(r) + 0.5 * rg), rot * (0.5 * rg / (r * r)) * b * b};
  };
  std::vector<Cell2> jb(static_cast<std::size_t>(partition.cells()));
  std::vector<Cell2> jc(jb.size());
  for (Index p = 0; p < partition.cells(); ++p) {
    const cplx rot = std::polar(1.0, law.phases(p));
    const auto [bm, cm] = pair(rot, b_e(partition.cell_port_a(p)));
    const auto [bn, cn] = pair(rot, b_e(partition.cell_port_b(p)));
    Cell2 x;
    x << 0.0, bn, bm, 0.0;
    jb[static_cast<std::size_t>(p)] = x;
    Cell2 y;
    y << 0.0, cn, cm, 0.0;
    jc[static_cast<std::size_t>(p)] = y;
  }
  return WirtingerPair{CellMatrix(partition, std::move(jb)), CellMatrix(partition, std::move(jc))};
}

Eigen::VectorXd nonlinear_gradient(const SceneBlocks& scene, const CellLaw& law, const FixedPointState& state,
                                   const WaveMatrix& error, cplx beta, SolveMethod method) {
  const PortPartition& part = scene.partition;
  require_law(law, part);
  if (!state.all_converged()) throw ConvergenceError("gradient needs a converged state", state.unconverged_columns());
  const Index n = part.internal_ports();
  const Index k = part.ports_per_layer;
  if (error.rows() != part.rx_ports) throw DimensionError("rows of E", part.rx_ports, error.rows());
  if (error.cols() != state.b_e.cols()) throw DimensionError("columns of E", state.b_e.cols(), error.cols());

  // dL = 2 Re <q, dA_E> = <q~, dA~_E>; q is supported on the last layer.
  WaveMatrix q = WaveMatrix::Zero(n, error.cols());
  q.bottomRows(k).noalias() = scene.s_re.rightCols(k).adjoint() * (std::conj(beta) * error);
  // d f / d eta_p = j f(B_E) on cell p.
  const WaveMatrix f_eta = cplx(0.0, 1.0) * cell_law_apply(state.b_e, law, part);

  netcore::SolveOptions opts;
  opts.method = method;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(part.cells());
  for (Index i = 0; i < error.cols(); ++i) {
    const WirtingerPair jac = wirtinger_jacobians(state.b_e.col(i), law, part);
    const auto op = netcore::augmented_sensitivity_operator(jac.jb, jac.jc, scene.s_ee).adjoint();
    const WaveMatrix u_aug = netcore::solve_structured(op, netcore::augment(q.col(i), part.layers()), opts);
    const WaveMatrix u1 = netcore::augmented_top(u_aug, part.layers());
    const WaveMatrix u2 = netcore::augmented_bottom(u_aug, part.layers());
    for (Index p = 0; p < part.cells(); ++p) {
      const Index m = part.cell_port_a(p);
      const Index nn = part.cell_port_b(p);
      const cplx s = std::conj(u1(m, 0)) * f_eta(m, i) + std::conj(u1(nn, 0)) * f_eta(nn, i) +
                     std::conj(u2(m, 0)) * std::conj(f_eta(m, i)) + std::conj(u2(nn, 0)) * std::conj(f_eta(nn, i));
      grad(p) += s.real();
    }
  }
  return grad;
}

}  // namespace simnet::nlsim
