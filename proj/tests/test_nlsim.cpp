#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "simnet/checks.hpp"
#include "simnet/errors.hpp"
#include "simnet/nlsim.hpp"

using namespace simnet;
using namespace simnet::nlsim;
using netcore::CMatrix;
using testgen::rel_diff;

namespace {

scene::SceneBlocks make_scene(testgen::Engine& e, Index q, Index k, bool edges = false, double coupling = 0.6) {
  checks::RandomSceneSpec spec;
  spec.stages = q;
  spec.per_layer = k;
  spec.edge_reflection = edges;
  spec.coupling_norm = coupling;
  auto rng = checks::make_rng(e());
  return checks::random_scene(spec, rng);
}

RappParams law_params(double g0 = 0.9, double rs = 1.0, double p = 2.0) {
  RappParams r;
  r.g0 = g0;
  r.rs = rs;
  r.p = p;
  return r;
}

// Radial law written out per element, independent of the library.
cplx radial(cplx b, double eta, const RappParams& m) {
  const double r = std::abs(b);
  const double g = m.g0 / std::pow(1.0 + std::pow(r / m.rs, 2.0 * m.p), 1.0 / (2.0 * m.p));
  return g * std::polar(1.0, eta) * b;
}

double nl_loss(const SceneBlocks& sc, const CellLaw& law, const Excitation& x, const CMatrix& y_d, cplx beta,
               double tol) {
  FixedPointOptions opt;
  opt.tol = tol;
  opt.max_iters = 5000;
  const auto st = fixed_point_solve(sc, law, x, opt);
  return (beta * output_map(sc, st, x) - y_d).squaredNorm();
}

}  // namespace

TEST(CellLawApply, ZeroInZeroOut) {
  const auto p = PortPartition::make(1, 1, 2, 2);
  auto e = testgen::engine(50, 0);
  const auto law = CellLaw::rapp_radial(testgen::phases(e, 4), law_params());
  EXPECT_TRUE(cell_law_apply(CMatrix::Zero(8, 2), law, p).isZero(0.0));
}

TEST(CellLawApply, SmallSignalStaysWithinBound) {
  const auto p = PortPartition::make(1, 1, 1, 1);
  const auto params = law_params(0.8, 1.0, 2.0);
  const auto law = CellLaw::rapp_radial(Eigen::VectorXd::Constant(1, 0.4), params);
  CMatrix b(2, 1);
  b << std::polar(0.01, 0.3), std::polar(0.01, -1.1);
  const CMatrix a = cell_law_apply(b, law, p);
  const double bound = std::pow(0.01, 4.0) / 4.0;
  for (Index i = 0; i < 2; ++i) {
    const cplx linear = 0.8 * std::polar(1.0, 0.4) * b(1 - i, 0);
    EXPECT_LE(std::abs(a(i, 0) - linear) / std::abs(linear), bound + 1e-15);  // first-order term equals the bound
  }
}

TEST(CellLawApply, QuarterTurnUnitDrive) {
  const auto p = PortPartition::make(1, 1, 1, 1);
  const auto law = CellLaw::rapp_radial(Eigen::VectorXd::Constant(1, std::numbers::pi / 2), law_params(1.0, 1.0, 1.0));
  CMatrix b(2, 1);
  b << 0.0, 1.0;
  const CMatrix a = cell_law_apply(b, law, p);
  EXPECT_NEAR(std::abs(a(0, 0) - cplx(0.0, 1.0 / std::sqrt(2.0))), 0.0, 1e-15);
  EXPECT_EQ(a(1, 0), cplx(0.0));
}

TEST(CellLawApply, CellsAreSeparable) {
  testgen::for_all(10, 51, [](testgen::Engine& e, int) {
    const auto p = PortPartition::make(1, 1, 2, 3);
    const auto params = law_params(0.9, 0.5, testgen::real(e, 0.6, 4.0));
    const Eigen::VectorXd eta = testgen::phases(e, 6);
    const auto law = CellLaw::rapp_radial(eta, params);
    const CMatrix b = testgen::matrix(e, 12, 1);
    const CMatrix a = cell_law_apply(b, law, p);
    for (Index c = 0; c < 6; ++c) {
      const Index m = p.cell_port_a(c);
      const Index n = p.cell_port_b(c);
      EXPECT_NEAR(std::abs(a(m, 0) - radial(b(n, 0), eta(c), params)), 0.0, 1e-14);
      EXPECT_NEAR(std::abs(a(n, 0) - radial(b(m, 0), eta(c), params)), 0.0, 1e-14);
    }
  });
}

TEST(FixedPoint, NoCouplingConvergesInOneStep) {
  auto e = testgen::engine(52, 0);
  auto sc = make_scene(e, 1, 3);
  const auto law = CellLaw::rapp_radial(testgen::phases(e, 3), law_params());
  const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
  FixedPointOptions opt;
  opt.omega = 1.0;
  const auto st = fixed_point_solve(sc, law, x, opt);
  ASSERT_TRUE(st.all_converged());
  EXPECT_LE(st.max_iterations(), 2);
  EXPECT_LE(rel_diff(st.a_e, cell_law_apply(sc.s_et * x.values(), law, sc.partition)), 1e-14);
}

TEST(FixedPoint, ZeroExcitationStaysAtZero) {
  auto e = testgen::engine(53, 0);
  const auto sc = make_scene(e, 3, 2, true);
  const auto law = CellLaw::rapp_radial(testgen::phases(e, 6), law_params());
  const auto st = fixed_point_solve(sc, law, Excitation::sources(CMatrix::Zero(2, 3)));
  EXPECT_TRUE(st.all_converged());
  EXPECT_TRUE(st.a_e.isZero(0.0));
  EXPECT_LE(rel_diff(output_map(sc, st, Excitation::sources(CMatrix::Zero(2, 3))), CMatrix::Zero(2, 3)), 0.0);
}

TEST(FixedPoint, IdealLawMatchesClosedForm) {
  testgen::for_all(20, 54, [](testgen::Engine& e, int c) {
    const auto sc = make_scene(e, testgen::integer(e, 1, 4), testgen::pick<Index>(e, {2, 4}), c % 2 == 0);
    const Eigen::VectorXd eta = testgen::phases(e, sc.partition.cells());
    const auto x = Excitation::sources(testgen::matrix(e, 2, 3));
    const auto st = fixed_point_solve(sc, CellLaw::ideal(eta), x);
    const CMatrix closed = linsim::transfer_apply(sc, linsim::gamma_from_phases(eta, sc.partition), x);
    EXPECT_LE(rel_diff(output_map(sc, st, x), closed), 1e-8);
  });
}

TEST(FixedPoint, LargeSaturationLevelIsLinear) {
  testgen::for_all(5, 55, [](testgen::Engine& e, int) {
    const auto sc = make_scene(e, 2, 2);
    const Eigen::VectorXd eta = testgen::phases(e, 4);
    const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
    const double drive = (sc.s_et * x.values()).cwiseAbs().maxCoeff();
    const auto rapp = fixed_point_solve(sc, CellLaw::rapp_radial(eta, law_params(1.0, 1e6 * drive, 2.0)), x);
    const auto ideal = fixed_point_solve(sc, CellLaw::ideal(eta), x);
    EXPECT_LE(rel_diff(output_map(sc, rapp, x), output_map(sc, ideal, x)), 1e-6);
  });
}

TEST(OutputMap, BatchedColumnsMatchSingles) {
  auto e = testgen::engine(56, 0);
  const auto sc = make_scene(e, 2, 2);
  const auto law = CellLaw::rapp_radial(testgen::phases(e, 4), law_params());
  const CMatrix col = testgen::matrix(e, 2, 1);
  CMatrix two(2, 2);
  two << col, col;
  const auto one = Excitation::sources(col);
  const auto both = Excitation::sources(two);
  const CMatrix y1 = output_map(sc, fixed_point_solve(sc, law, one), one);
  const CMatrix y2 = output_map(sc, fixed_point_solve(sc, law, both), both);
  EXPECT_EQ(y2.col(0), y1.col(0));
  EXPECT_EQ(y2.col(1), y1.col(0));
}

TEST(OutputMap, UnconvergedColumnsAreReported) {
  auto e = testgen::engine(57, 0);
  const auto sc = make_scene(e, 3, 2);
  const auto law = CellLaw::rapp_radial(testgen::phases(e, 6), law_params());
  const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
  FixedPointOptions opt;
  opt.max_iters = 2;
  const auto st = fixed_point_solve(sc, law, x, opt);
  ASSERT_FALSE(st.all_converged());
  EXPECT_EQ(st.unconverged_columns().size(), 2u);
  try {
    output_map(sc, st, x);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& err) {
    EXPECT_NE(std::string(err.what()).find("0"), std::string::npos);
  }
  EXPECT_NO_THROW(output_map(sc, st, x, true));
}

TEST(FixedPoint, ResidualDecreasesOnDefaultScene) {
  const auto sc = scene::build_scene(scene::SceneConfig{});
  int rejected = 0;
  testgen::for_all(20, 58, [&](testgen::Engine& e, int) {
    const auto law = CellLaw::rapp_radial(testgen::phases(e, sc.partition.cells()), law_params(0.95, 1.0, 2.0));
    CMatrix c = testgen::matrix(e, sc.partition.internal_ports(), 1);
    c *= testgen::real(e, 0.1, 10.0) / c.cwiseAbs().maxCoeff();
    const auto st = fixed_point_solve(sc, law, Excitation::incident(c));
    EXPECT_TRUE(st.all_converged());
    const auto& h = st.residual_history.front();
    for (std::size_t t = 6; t < h.size(); ++t) {
      if (h[t] > h[t - 1]) {
        ++rejected;
        ADD_FAILURE() << "residual rose at iteration " << t;
        break;
      }
    }
  });
  EXPECT_EQ(rejected, 0);
}

TEST(FixedPoint, IterationCostIsLinearInPorts) {
  const auto sc = scene::build_scene(scene::SceneConfig{});
  const auto law = CellLaw::ideal(Eigen::VectorXd::Zero(sc.partition.cells()));
  const auto st = fixed_point_solve(sc, law, Excitation::incident(CMatrix::Zero(sc.partition.internal_ports(), 1)));
  const auto n = static_cast<std::size_t>(sc.partition.internal_ports());
  const auto k = static_cast<std::size_t>(sc.partition.ports_per_layer);
  EXPECT_GT(st.flops_per_iteration, 0u);
  EXPECT_LE(st.flops_per_iteration, 4 * n * k);
}

TEST(Wirtinger, IdealLawIsGammaWithNoConjugatePart) {
  auto e = testgen::engine(59, 0);
  const auto p = PortPartition::make(1, 1, 2, 2);
  const Eigen::VectorXd eta = testgen::phases(e, 4);
  const auto pair = wirtinger_jacobians(testgen::matrix(e, 8, 1).col(0), CellLaw::ideal(eta), p);
  EXPECT_EQ(pair.jb.to_dense(), linsim::gamma_from_phases(eta, p).cells.to_dense());
  EXPECT_TRUE(pair.jc.to_dense().isZero(0.0));
}

TEST(Wirtinger, SmallSignalLimit) {
  const auto p = PortPartition::make(1, 1, 1, 1);
  const auto law = CellLaw::rapp_radial(Eigen::VectorXd::Constant(1, 0.7), law_params(0.8, 1.0, 2.0));
  Eigen::VectorXcd b(2);
  b << std::polar(1e-6, 0.2), std::polar(1e-6, 2.0);
  const auto pair = wirtinger_jacobians(b, law, p);
  EXPECT_NEAR(std::abs(pair.jb.cell(0)(0, 1) - 0.8 * std::polar(1.0, 0.7)), 0.0, 1e-12);
  EXPECT_LE(pair.jc.to_dense().cwiseAbs().maxCoeff(), 1e-12);
  const auto at_zero = wirtinger_jacobians(Eigen::VectorXcd::Zero(2), law, p);
  EXPECT_TRUE(at_zero.jc.to_dense().isZero(0.0));
}

TEST(Wirtinger, FirstOrderExpansionRemainderIsQuadratic) {
  testgen::for_all(10, 60, [](testgen::Engine& e, int) {
    const auto p = PortPartition::make(1, 1, 1, 2);
    const auto params = law_params(0.9, 1.0, testgen::real(e, 1.0, 3.0));
    const auto law = CellLaw::rapp_radial(testgen::phases(e, 2), params);
    const Eigen::VectorXcd b = testgen::matrix(e, 4, 1).col(0);
    const Eigen::VectorXcd dir = testgen::matrix(e, 4, 1).col(0).normalized();
    const auto pair = wirtinger_jacobians(b, law, p);
    const CMatrix jb = pair.jb.to_dense();
    const CMatrix jc = pair.jc.to_dense();
    auto remainder = [&](double h) {
      const Eigen::VectorXcd d = h * dir;
      const CMatrix f1 = cell_law_apply(CMatrix(b + d), law, p);
      const CMatrix f0 = cell_law_apply(CMatrix(b), law, p);
      return (f1 - f0 - jb * d - jc * d.conjugate()).norm();
    };
    const double ratio = remainder(1e-4) / remainder(1e-5);
    EXPECT_GT(ratio, 70.0);
    EXPECT_LT(ratio, 130.0);
  });
}

TEST(NonlinearGradient, ZeroErrorGivesZeroGradient) {
  auto e = testgen::engine(61, 0);
  const auto sc = make_scene(e, 2, 2);
  const auto law = CellLaw::rapp_radial(testgen::phases(e, 4), law_params());
  const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
  const auto st = fixed_point_solve(sc, law, x);
  EXPECT_TRUE(nonlinear_gradient(sc, law, st, CMatrix::Zero(2, 2), cplx(1.0)).isZero(0.0));
}

TEST(NonlinearGradient, IdealLawMatchesLinearGradient) {
  testgen::for_all(10, 62, [](testgen::Engine& e, int c) {
    const auto sc = make_scene(e, testgen::integer(e, 1, 3), 2, c % 2 == 1);
    const Eigen::VectorXd eta = testgen::phases(e, sc.partition.cells());
    const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
    const CMatrix y_d = testgen::matrix(e, 2, 2);
    const cplx beta = testgen::complex(e);
    const auto law = CellLaw::ideal(eta);
    FixedPointOptions opt;
    opt.tol = 1e-14;
    opt.max_iters = 5000;
    const auto st = fixed_point_solve(sc, law, x, opt);
    const CMatrix err = beta * output_map(sc, st, x) - y_d;
    const auto g = linsim::gamma_from_phases(eta, sc.partition);
    const Eigen::VectorXd lin = linsim::linear_gradient(sc, g, linsim::forward_fields(sc, g, x), err, beta);
    const Eigen::VectorXd nl = nonlinear_gradient(sc, law, st, err, beta);
    EXPECT_LE((nl - lin).norm() / lin.norm(), 1e-10);
  });
}

TEST(NonlinearGradient, MatchesCentralDifferencesInCompression) {
  testgen::for_all(10, 63, [](testgen::Engine& e, int c) {
    const auto sc = make_scene(e, 2, 2, c % 2 == 0);
    const Eigen::VectorXd eta = testgen::phases(e, 4);
    const auto params = law_params(0.9, 1.0, testgen::real(e, 1.0, 3.0));
    CMatrix a_s = testgen::matrix(e, 2, 2);
    a_s *= 1.2 / (sc.s_et * a_s).cwiseAbs().maxCoeff();  // drive near rs
    const auto x = Excitation::sources(a_s);
    const CMatrix y_d = testgen::matrix(e, 2, 2);
    const cplx beta = testgen::complex(e);
    const auto law = CellLaw::rapp_radial(eta, params);
    FixedPointOptions opt;
    opt.tol = 1e-12;
    opt.max_iters = 5000;
    const auto st = fixed_point_solve(sc, law, x, opt);
    const CMatrix err = beta * output_map(sc, st, x) - y_d;
    const Eigen::VectorXd grad = nonlinear_gradient(sc, law, st, err, beta);
    const double h = 1e-5;
    Eigen::VectorXd fd(4);
    for (Index p = 0; p < 4; ++p) {
      Eigen::VectorXd up = eta, dn = eta;
      up(p) += h;
      dn(p) -= h;
      fd(p) = (nl_loss(sc, CellLaw::rapp_radial(up, params), x, y_d, beta, 1e-12) -
               nl_loss(sc, CellLaw::rapp_radial(dn, params), x, y_d, beta, 1e-12)) /
              (2.0 * h);
    }
    EXPECT_LE((grad - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff(), 1e-4);
  });
}
