#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "simnet/checks.hpp"
#include "simnet/errors.hpp"
#include "simnet/optim.hpp"

using namespace simnet;
using namespace simnet::optim;
using netcore::CMatrix;

namespace {

constexpr double kPi = std::numbers::pi;

scene::SceneBlocks make_scene(testgen::Engine& e, Index q, Index k, Index l, Index m, bool direct) {
  checks::RandomSceneSpec spec;
  spec.stages = q;
  spec.per_layer = k;
  spec.tx_ports = l;
  spec.rx_ports = m;
  spec.direct_path = direct;
  auto rng = checks::make_rng(e());
  return checks::random_scene(spec, rng);
}

double angle_gap(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * kPi)); }

}  // namespace

TEST(OptimalBeta, IdenticalOutputsGiveOne) {
  auto e = testgen::engine(80, 0);
  const CMatrix y = testgen::matrix(e, 3, 2);
  EXPECT_NEAR(std::abs(optimal_beta(y, y) - cplx(1.0)), 0.0, 1e-15);
}

TEST(OptimalBeta, RecoversComplexScale) {
  auto e = testgen::engine(81, 0);
  const CMatrix y = testgen::matrix(e, 4, 3);
  EXPECT_NEAR(std::abs(optimal_beta(y, cplx(2.0, 1.0) * y) - cplx(2.0, 1.0)), 0.0, 1e-14);
}

TEST(OptimalBeta, ZeroOutputThrows) { EXPECT_THROW(optimal_beta(CMatrix::Zero(2, 2), CMatrix::Ones(2, 2)), Error); }

TEST(OptimalBeta, BeatsSampledScales) {
  testgen::for_all(10, 82, [](testgen::Engine& e, int) {
    const CMatrix y = testgen::matrix(e, 4, 3);
    const CMatrix y_d = testgen::matrix(e, 4, 3);
    const double best = loss(make_loss_context(y, y_d));
    for (int s = 0; s < 200; ++s) {
      const cplx beta(testgen::real(e, -3.0, 3.0), testgen::real(e, -3.0, 3.0));
      EXPECT_LE(best, (beta * y - y_d).squaredNorm());
    }
  });
}

TEST(Loss, ZeroScaleZeroTarget) {
  auto e = testgen::engine(83, 0);
  EXPECT_EQ(loss(make_loss_context(testgen::matrix(e, 2, 2), CMatrix::Zero(2, 2), cplx(0.0))), 0.0);
}

TEST(Loss, ZeroOutputGivesTargetEnergy) {
  auto e = testgen::engine(84, 0);
  const CMatrix y_d = testgen::matrix(e, 3, 2);
  EXPECT_NEAR(loss(make_loss_context(CMatrix::Zero(3, 2), y_d, cplx(1.0))), y_d.squaredNorm(), 1e-15);
}

TEST(Loss, MatchesElementwiseSum) {
  testgen::for_all(20, 85, [](testgen::Engine& e, int) {
    const CMatrix y = testgen::matrix(e, 3, 4);
    const CMatrix y_d = testgen::matrix(e, 3, 4);
    const cplx beta = testgen::complex(e);
    double sum = 0.0;
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 4; ++j) sum += std::norm(beta * y(i, j) - y_d(i, j));
    }
    const auto ctx = make_loss_context(y, y_d, beta);
    EXPECT_NEAR(loss(ctx), sum, 1e-13 * sum);
    EXPECT_EQ(ctx.e, CMatrix(beta * y - y_d));
  });
}

TEST(WrapPhase, HalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_phase(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_phase(-kPi), kPi);
  EXPECT_NEAR(wrap_phase(1.5 * kPi), -0.5 * kPi, 1e-15);
  EXPECT_NEAR(wrap_phase(-7.0), -7.0 + 2.0 * kPi, 1e-15);
  testgen::for_all(100, 86, [](testgen::Engine& e, int) {
    const double w = wrap_phase(testgen::real(e, -50.0, 50.0));
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
  });
}

TEST(Optimize, ExactTargetStopsAtStart) {
  auto e = testgen::engine(87, 0);
  const auto sc = make_scene(e, 2, 2, 2, 2, true);
  const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
  const Eigen::VectorXd eta0 = testgen::phases(e, 4);
  Engine engine(sc, EngineOptions{}, x);
  const CMatrix y_d = cplx(0.7, 0.2) * engine.evaluate(eta0);
  const auto run = optimize_single(engine, y_d, OptimOptions{}, eta0);
  EXPECT_EQ(run.termination, Termination::kGradient);
  EXPECT_EQ(run.loss.size(), 1u);
  EXPECT_EQ(run.best_phases, eta0);
}

TEST(Optimize, SingleCellMatchesGridSearch) {
  testgen::for_all(5, 88, [](testgen::Engine& e, int) {
    const auto sc = make_scene(e, 1, 1, 1, 3, true);
    const auto x = Excitation::sources(testgen::matrix(e, 1, 1));
    const CMatrix y_d = testgen::matrix(e, 3, 1);
    // Y(eta) = D + e^{j eta} C with the single cell in the swap state.
    const CMatrix d = sc.s_rt * x.values();
    Eigen::Matrix2cd swap;
    swap << 0.0, 1.0, 1.0, 0.0;
    const CMatrix c = sc.s_re * swap * sc.s_et * x.values();
    double best_eta = 0.0;
    double best = 1e300;
    for (int i = 0; i < 200000; ++i) {
      const double eta = -kPi + 2.0 * kPi * i / 200000.0;
      const CMatrix y = d + std::polar(1.0, eta) * c;
      const cplx beta = y.cwiseProduct(y_d.conjugate()).sum();
      const double l = (std::conj(beta) / y.squaredNorm() * y - y_d).squaredNorm();
      if (l < best) {
        best = l;
        best_eta = eta;
      }
    }
    OptimOptions opt;
    opt.starts = 2;
    opt.max_iters = 3000;
    const auto result = optimize(sc, EngineOptions{}, x, y_d, opt);
    EXPECT_LE(angle_gap(result.best_run().best_phases(0), best_eta), 1e-3);
  });
}

TEST(Optimize, IdealNonlinearEngineFollowsLinearTrajectory) {
  auto e = testgen::engine(89, 0);
  const auto sc = make_scene(e, 2, 2, 2, 2, false);
  const auto x = Excitation::sources(testgen::matrix(e, 2, 3));
  const CMatrix y_d = testgen::matrix(e, 2, 3);
  const Eigen::VectorXd eta0 = testgen::phases(e, 4);
  OptimOptions opt;
  opt.max_iters = 60;
  EngineOptions nl_opts;
  nl_opts.kind = EngineKind::kNonlinear;
  nl_opts.law = nlsim::LawKind::kIdealLinear;
  nl_opts.fixed_point.tol = 1e-14;
  nl_opts.fixed_point.max_iters = 5000;
  Engine lin(sc, EngineOptions{}, x);
  Engine nl(sc, nl_opts, x);
  const auto a = optimize_single(lin, y_d, opt, eta0);
  const auto b = optimize_single(nl, y_d, opt, eta0);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t t = 0; t < a.trajectory.size(); ++t) {
    EXPECT_LE((a.trajectory[t] - b.trajectory[t]).cwiseAbs().maxCoeff(), 1e-6) << t;
  }
}

TEST(Optimize, TargetScaleLeavesTrajectoryUnchanged) {
  auto e = testgen::engine(90, 0);
  const auto sc = make_scene(e, 2, 2, 2, 2, true);
  const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
  const CMatrix y_d = testgen::matrix(e, 2, 2);
  const Eigen::VectorXd eta0 = testgen::phases(e, 4);
  OptimOptions opt;
  opt.max_iters = 100;
  Engine engine(sc, EngineOptions{}, x);
  const auto a = optimize_single(engine, y_d, opt, eta0);
  const auto b = optimize_single(engine, cplx(-3.0, 4.0) * y_d, opt, eta0);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t t = 0; t < a.trajectory.size(); ++t) {
    EXPECT_LE((a.trajectory[t] - b.trajectory[t]).cwiseAbs().maxCoeff(), 1e-9) << t;
  }
}

TEST(Optimize, LossStaysWithinDivergenceGuard) {
  testgen::for_all(5, 91, [](testgen::Engine& e, int) {
    const auto sc = make_scene(e, 2, 2, 2, 2, true);
    const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
    OptimOptions opt;
    opt.max_iters = 300;
    opt.starts = 1;
    opt.seed = e();
    const auto result = optimize(sc, EngineOptions{}, x, testgen::matrix(e, 2, 2), opt);
    const auto& h = result.best_run().loss;
    for (std::size_t t = 1; t < h.size(); ++t) EXPECT_LE(h[t], 10.0 * h[t - 1]);
    EXPECT_LT(result.best_run().best_loss, h.front());
  });
}

TEST(Optimize, RepeatedRunsAreIdentical) {
  auto e = testgen::engine(92, 0);
  const auto sc = make_scene(e, 2, 2, 2, 2, true);
  const auto x = Excitation::sources(testgen::matrix(e, 2, 2));
  const CMatrix y_d = testgen::matrix(e, 2, 2);
  EngineOptions eng;
  eng.kind = EngineKind::kNonlinear;
  OptimOptions opt;
  opt.max_iters = 80;
  opt.starts = 3;
  const auto a = optimize(sc, eng, x, y_d, opt);
  const auto b = optimize(sc, eng, x, y_d, opt);
  ASSERT_EQ(a.runs.size(), b.runs.size());
  EXPECT_EQ(a.best, b.best);
  for (std::size_t r = 0; r < a.runs.size(); ++r) {
    EXPECT_EQ(a.runs[r].loss, b.runs[r].loss);
    EXPECT_EQ(a.runs[r].best_phases, b.runs[r].best_phases);
  }
}

TEST(Optimize, InitialPhasesDependOnStartOnly) {
  EXPECT_EQ(initial_phases(10, 4, 2), initial_phases(10, 4, 2));
  EXPECT_NE(initial_phases(10, 4, 2), initial_phases(10, 4, 3));
  const Eigen::VectorXd p = initial_phases(1000, 1, 0);
  EXPECT_GT(p.minCoeff(), -kPi);
  EXPECT_LE(p.maxCoeff(), kPi);
}
