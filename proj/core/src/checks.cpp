#include "simnet/checks.hpp"

#include <algorithm>
#include <chrono>
#include <numbers>

#include "simnet/errors.hpp"
#include "simnet/linsim.hpp"
#include "simnet/optim.hpp"

namespace simnet::checks {

using linsim::Excitation;
using netcore::cplx;
using netcore::PortPartition;
using netcore::Side;
using netcore::WaveMatrix;

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

CMatrix random_cmatrix(Index rows, Index cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = cplx(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
  }
  return m;
}

Eigen::VectorXd random_phases(Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = uniform(rng, -std::numbers::pi, std::numbers::pi);
  return v;
}

scene::SceneBlocks random_scene(const RandomSceneSpec& spec, Rng& rng) {
  const auto part = PortPartition::make(spec.tx_ports, spec.rx_ports, spec.stages, spec.per_layer);
  const Index k = spec.per_layer;
  const Index n = part.internal_ports();
  netcore::BlockBandedMatrix s_ee(part);
  for (Index q = 0; q + 1 < spec.stages; ++q) {
    CMatrix g = random_cmatrix(k, k, rng);
    g *= spec.coupling_norm / Eigen::JacobiSVD<CMatrix>(g).singularValues()(0);
    s_ee.add_block(part.port(q + 1, Side::kA, 0), part.port(q, Side::kB, 0), g);
    s_ee.add_block(part.port(q, Side::kB, 0), part.port(q + 1, Side::kA, 0), g.transpose());
  }
  if (spec.edge_reflection) {
    const CMatrix edge = spec.edge_coeff * CMatrix::Identity(k, k);
    s_ee.add_block(part.port(0, Side::kA, 0), part.port(0, Side::kA, 0), edge);
    s_ee.add_block(part.last_layer_offset(), part.last_layer_offset(), edge);
  }
  CMatrix s_et = CMatrix::Zero(n, spec.tx_ports);
  s_et.topRows(k) = random_cmatrix(k, spec.tx_ports, rng);
  CMatrix s_re = CMatrix::Zero(spec.rx_ports, n);
  s_re.rightCols(k) = random_cmatrix(spec.rx_ports, k, rng);
  CMatrix s_rt = spec.direct_path ? random_cmatrix(spec.rx_ports, spec.tx_ports, rng)
                                  : CMatrix::Zero(spec.rx_ports, spec.tx_ports);
  return scene::SceneBlocks{part, std::move(s_rt), std::move(s_et), std::move(s_re), std::move(s_ee), {}};
}

double gradient_error(const Eigen::VectorXd& adjoint, const Eigen::VectorXd& fd) {
  if (adjoint.size() != fd.size()) throw DimensionError("gradient length", fd.size(), adjoint.size());
  const double scale = fd.cwiseAbs().maxCoeff();
  const double diff = (adjoint - fd).cwiseAbs().maxCoeff();
  if (scale == 0.0) return diff;
  return diff / scale;
}

GradcheckReport linear_gradcheck(int scenes, std::uint64_t seed, double step) {
  static constexpr Index kStages[] = {1, 2, 3};
  static constexpr Index kPerLayer[] = {2, 4};
  static constexpr Index kColumns[] = {1, 3};
  GradcheckReport report;
  for (int s = 0; s < scenes; ++s) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(s));
    RandomSceneSpec spec;
    spec.stages = kStages[s % 3];
    spec.per_layer = kPerLayer[(s / 3) % 2];
    spec.edge_reflection = (s / 6) % 2 == 1;
    const Index cols = kColumns[(s / 2) % 2];
    const auto sc = random_scene(spec, rng);
    const Eigen::VectorXd eta = random_phases(sc.partition.cells(), rng);
    const auto exc = Excitation::sources(random_cmatrix(spec.tx_ports, cols, rng));
    const WaveMatrix y_d = random_cmatrix(spec.rx_ports, cols, rng);

    const auto gamma = linsim::gamma_from_phases(eta, sc.partition);
    const WaveMatrix b_e = linsim::forward_fields(sc, gamma, exc);
    const auto ctx = optim::make_loss_context(linsim::output_from_fields(sc, gamma, exc, b_e), y_d);
    const Eigen::VectorXd g = linsim::linear_gradient(sc, gamma, b_e, ctx.e, ctx.beta);

    auto loss_at = [&](const Eigen::VectorXd& x) {
      const WaveMatrix y = linsim::transfer_apply(sc, linsim::gamma_from_phases(x, sc.partition), exc);
      return (ctx.beta * y - y_d).squaredNorm();
    };
    Eigen::VectorXd fd(eta.size());
    for (Index p = 0; p < eta.size(); ++p) {
      Eigen::VectorXd plus = eta;
      Eigen::VectorXd minus = eta;
      plus(p) += step;
      minus(p) -= step;
      fd(p) = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
    }
    const double err = gradient_error(g, fd);
    report.cases.push_back(GradcheckCase{spec.stages, spec.per_layer, cols, err});
    report.max_rel_error = std::max(report.max_rel_error, err);
  }
  return report;
}

GradcheckReport nonlinear_gradcheck(int scenes, std::uint64_t seed, double step) {
  static constexpr Index kStages[] = {1, 2, 3};
  static constexpr Index kPerLayer[] = {2, 3};
  static constexpr Index kColumns[] = {1, 2};
  GradcheckReport report;
  nlsim::FixedPointOptions fp;
  fp.tol = 1e-12;
  fp.max_iters = 20000;
  for (int s = 0; s < scenes; ++s) {
    Rng rng = make_rng(seed, 1000 + static_cast<std::uint64_t>(s));
    RandomSceneSpec spec;
    spec.stages = kStages[s % 3];
    spec.per_layer = kPerLayer[(s / 3) % 2];
    const Index cols = kColumns[(s / 2) % 2];
    const auto sc = random_scene(spec, rng);
    const Eigen::VectorXd eta = random_phases(sc.partition.cells(), rng);
    const auto exc = Excitation::sources(random_cmatrix(spec.tx_ports, cols, rng));
    const WaveMatrix y_d = random_cmatrix(spec.rx_ports, cols, rng);

    const WaveMatrix drive = exc.internal_drive(sc);
    const double rms = drive.topRows(spec.per_layer).norm() / std::sqrt(static_cast<double>(drive.cols() * spec.per_layer));
    RappParams rapp;
    rapp.g0 = uniform(rng, 0.7, 1.0);
    rapp.rs = rms * uniform(rng, 0.5, 2.0);
    rapp.p = uniform(rng, 1.0, 3.0);

    const auto law = nlsim::CellLaw::rapp_radial(eta, rapp);
    const auto base = nlsim::fixed_point_solve(sc, law, exc, fp);
    const auto ctx = optim::make_loss_context(nlsim::output_map(sc, base, exc), y_d);
    const Eigen::VectorXd g = nlsim::nonlinear_gradient(sc, law, base, ctx.e, ctx.beta);

    nlsim::FixedPointOptions warm = fp;
    warm.warm_start = base.a_e;
    auto loss_at = [&](const Eigen::VectorXd& x) {
      const auto st = nlsim::fixed_point_solve(sc, nlsim::CellLaw::rapp_radial(x, rapp), exc, warm);
      return (ctx.beta * nlsim::output_map(sc, st, exc) - y_d).squaredNorm();
    };
    Eigen::VectorXd fd(eta.size());
    for (Index p = 0; p < eta.size(); ++p) {
      Eigen::VectorXd plus = eta;
      Eigen::VectorXd minus = eta;
      plus(p) += step;
      minus(p) -= step;
      fd(p) = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
    }
    const double err = gradient_error(g, fd);
    report.cases.push_back(GradcheckCase{spec.stages, spec.per_layer, cols, err});
    report.max_rel_error = std::max(report.max_rel_error, err);
  }
  return report;
}

netcore::StageOperator random_stage_operator(Index stages, Index block_size, Rng& rng) {
  netcore::StageOperator op(stages, block_size);
  const double off = 0.25 / std::sqrt(static_cast<double>(block_size));
  for (Index q = 0; q < stages; ++q) {
    op.set_diagonal(q, netcore::StageBlock{0, 0, off * random_cmatrix(block_size, block_size, rng), true});
    if (q > 0) op.set_lower(q, netcore::StageBlock{0, 0, off * random_cmatrix(block_size, block_size, rng), false});
    if (q + 1 < stages) {
      op.set_upper(q, netcore::StageBlock{0, 0, off * random_cmatrix(block_size, block_size, rng), false});
    }
  }
  return op;
}

double time_structured_solve(Index stages, Index per_layer, int repeats, std::uint64_t seed) {
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(stages * 1000 + per_layer));
  const auto op = random_stage_operator(stages, 2 * per_layer, rng);
  const WaveMatrix b = random_cmatrix(op.size(), 1, rng);
  std::vector<double> times;
  volatile double sink = 0.0;
  for (int r = 0; r < std::max(1, repeats); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const WaveMatrix x = netcore::solve_structured(op, b);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + std::abs(x(0, 0));
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
  return times[times.size() / 2];
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("slope fit needs at least two matching points");
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace simnet::checks
