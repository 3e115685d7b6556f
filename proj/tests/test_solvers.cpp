#include "rminmax/problems.hpp"
#include "rminmax/solvers.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rminmax;
using namespace testutil;

namespace {

SaddleProblem bilinear1() { return bilinear_problem(make_bilinear_instance(1)); }

// Flat-space reference, written independently of the manifold code.
struct Flat {
  Eigen::MatrixXd b;
  Eigen::VectorXd x, y;
  void eg(double eta) {
    const Eigen::VectorXd xh = x - eta * (b * y);
    const Eigen::VectorXd yh = y + eta * (b.transpose() * x);
    x = x - eta * (b * yh);
    y = y + eta * (b.transpose() * xh);
  }
  void gda(double eta) {
    const Eigen::VectorXd gx = b * y;
    const Eigen::VectorXd gy = b.transpose() * x;
    x -= eta * gx;
    y += eta * gy;
  }
};

BilinearInstance random_bilinear(int k, Rng& rng) {
  BilinearInstance inst = make_bilinear_instance(k);
  std::normal_distribution<> n01;
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) inst.coupling(r, c) = n01(rng);
  return inst;
}

double flat_dist0(const Point& x, const Point& y) {
  return std::sqrt(x.leaf.squaredNorm() + y.leaf.squaredNorm());
}

}  // namespace

TEST(Rceg, BilinearHandStep) {
  const SaddleProblem p = bilinear1();
  SolverState s = init_state(p, vec({1}), vec({1}), 0);
  s = rceg_step(p, s, 0.1);
  EXPECT_NEAR(s.x_half.leaf(0), 0.9, 1e-15);
  EXPECT_NEAR(s.y_half.leaf(0), 1.1, 1e-15);
  EXPECT_NEAR(s.x.leaf(0), 0.89, 1e-15);
  EXPECT_NEAR(s.y.leaf(0), 1.09, 1e-15);
  EXPECT_EQ(s.t, 1);
  EXPECT_EQ(s.grad_calls, 2);
}

TEST(Rceg, FixedAtSaddle) {
  const SaddleProblem p = bilinear1();
  const SolverState s = rceg_step(p, init_state(p, vec({0}), vec({0}), 0), 0.3);
  EXPECT_EQ(s.x, vec({0}));
  EXPECT_EQ(s.y, vec({0}));
}

TEST(Rceg, MatchesFlatExtragradient) {
  Rng rng(1);
  const BilinearInstance inst = random_bilinear(4, rng);
  const SaddleProblem p = bilinear_problem(inst);
  const Point x0 = p.m_min.random_point(rng);
  const Point y0 = p.m_max.random_point(rng);
  Flat ref{inst.coupling, x0.leaf.col(0), y0.leaf.col(0)};
  SolverState s = init_state(p, x0, y0, 0);
  for (int t = 0; t < 100; ++t) {
    s = rceg_step(p, s, 0.05);
    ref.eg(0.05);
    ASSERT_LE((s.x.leaf.col(0) - ref.x).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_LE((s.y.leaf.col(0) - ref.y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Rgda, BilinearHandStep) {
  const SaddleProblem p = bilinear1();
  const SolverState s = rgda_step(p, init_state(p, vec({1}), vec({1}), 0), 0.1);
  EXPECT_NEAR(s.x.leaf(0), 0.9, 1e-15);
  EXPECT_NEAR(s.y.leaf(0), 1.1, 1e-15);
  EXPECT_EQ(s.grad_calls, 1);
}

TEST(Rgda, ZeroStepLeavesStateUnchanged) {
  const SaddleProblem p = bilinear1();
  const SolverState s = rgda_step(p, init_state(p, vec({1}), vec({2}), 0), 0.0);
  EXPECT_EQ(s.x, vec({1}));
  EXPECT_EQ(s.y, vec({2}));
}

TEST(Rgda, MatchesFlatGda) {
  Rng rng(2);
  const BilinearInstance inst = random_bilinear(3, rng);
  const SaddleProblem p = bilinear_problem(inst);
  const Point x0 = p.m_min.random_point(rng);
  const Point y0 = p.m_max.random_point(rng);
  Flat ref{inst.coupling, x0.leaf.col(0), y0.leaf.col(0)};
  SolverState s = init_state(p, x0, y0, 0);
  for (int t = 0; t < 100; ++t) {
    s = rgda_step(p, s, 0.05);
    ref.gda(0.05);
    ASSERT_LE((s.x.leaf.col(0) - ref.x).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_LE((s.y.leaf.col(0) - ref.y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Bilinear, GdaDivergesWhileExtragradientContracts) {
  const SaddleProblem p = bilinear1();
  SolverState gda = init_state(p, vec({1}), vec({1}), 0);
  SolverState eg = gda;
  double dg = flat_dist0(gda.x, gda.y), de = dg;
  for (int t = 0; t < 100; ++t) {
    gda = rgda_step(p, gda, 0.1);
    eg = rceg_step(p, eg, 0.1);
    const double ng = flat_dist0(gda.x, gda.y);
    const double ne = flat_dist0(eg.x, eg.y);
    ASSERT_GT(ng, dg) << t;
    ASSERT_LT(ne, de) << t;
    dg = ng;
    de = ne;
  }
}

TEST(Stochastic, ZeroNoiseReducesToDeterministic) {
  Rng rng(3);
  const SaddleProblem p =
      karcher_problem(std::make_shared<KarcherInstance>(
          make_karcher_instance(2, 2, 3.0, 9)));
  const Point x0 = p.m_min.random_point(rng);
  const Point y0 = p.m_max.random_point(rng);
  SolverState a = init_state(p, x0, y0, 4), b = a, c = a, d = a;
  for (int t = 0; t < 10; ++t) {
    a = rceg_step(p, a, 0.02);
    b = srceg_step(p, b, 0.02, NoiseModel{0.0});
    c = rgda_step(p, c, 0.02);
    d = srgda_step(p, d, 0.02, NoiseModel{0.0});
  }
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(c.x, d.x);
  EXPECT_EQ(c.y, d.y);
}

TEST(Stochastic, SeededTrajectoriesRepeat) {
  const SaddleProblem p = bilinear_problem(make_bilinear_instance(3));
  Rng rng(5);
  const Point x0 = p.m_min.random_point(rng);
  const Point y0 = p.m_max.random_point(rng);
  SolverState a = init_state(p, x0, y0, 77), b = init_state(p, x0, y0, 77);
  SolverState c = init_state(p, x0, y0, 78);
  for (int t = 0; t < 20; ++t) {
    a = srceg_step(p, a, 0.1, NoiseModel{0.5});
    b = srceg_step(p, b, 0.1, NoiseModel{0.5});
    c = srceg_step(p, c, 0.1, NoiseModel{0.5});
  }
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, c.x);
}

TEST(Stochastic, OracleCallAccounting) {
  const SaddleProblem p = bilinear_problem(make_bilinear_instance(2));
  SolverState s = init_state(p, vec({1, 0}), vec({0, 1}), 1);
  s = srceg_step(p, s, 0.1, NoiseModel{1.0});
  EXPECT_EQ(s.grad_calls, 2);
  s = srgda_step(p, s, 0.1, NoiseModel{1.0});
  EXPECT_EQ(s.grad_calls, 3);
  EXPECT_EQ(s.data_passes, 3.0);
}

TEST(Noise, SecondMomentAndMean) {
  SaddleProblem p;
  p.m_min = Manifold::sphere(6);
  p.m_max = Manifold::spd(3);
  Rng rng(21);
  const Point x = p.m_min.random_point(rng);
  const Point y = p.m_max.random_point(rng);
  const double sigma = 0.7;
  const int n = 10000;
  double sq = 0.0;
  Tangent sum_x = p.m_min.zero_tangent(x), sum_y = p.m_max.zero_tangent(y);
  for (int i = 0; i < n; ++i) {
    const GradPair xi = sample_noise(p, x, y, NoiseModel{sigma}, rng);
    ASSERT_NO_THROW(p.m_min.check_tangent(x, xi.x));
    ASSERT_NO_THROW(p.m_max.check_tangent(y, xi.y));
    const double nx = p.m_min.norm(x, xi.x), ny = p.m_max.norm(y, xi.y);
    sq += nx * nx + ny * ny;
    sum_x = sum_x + xi.x;
    sum_y = sum_y + xi.y;
  }
  const double ratio = sq / n / (sigma * sigma);
  EXPECT_GT(ratio, 0.94);
  EXPECT_LT(ratio, 1.06);
  // The mean of n draws has E||mean||^2 = sigma^2 / n.
  const double mean_norm = std::hypot(p.m_min.norm(x, (1.0 / n) * sum_x),
                                      p.m_max.norm(y, (1.0 / n) * sum_y));
  EXPECT_LE(mean_norm, 3.0 * sigma / std::sqrt(n));
}

TEST(Noise, MeanNormMatchesChiDistribution) {
  // ||xi_x|| = s * chi_k with s = sigma / sqrt(2 k) per coordinate.
  SaddleProblem p;
  p.m_min = Manifold::euclidean(4);
  p.m_max = Manifold::euclidean(9);
  Rng rng(23);
  const double sigma = 2.0;
  const int n = 10000;
  const int k = 4;
  const double s = sigma / std::sqrt(2.0 * k);
  const double chi_mean =
      std::sqrt(2.0) * std::exp(std::lgamma((k + 1) / 2.0) - std::lgamma(k / 2.0));
  const double mean = s * chi_mean;
  const double sd = s * std::sqrt(k - chi_mean * chi_mean);
  double acc = 0.0;
  const Point x = vec({0, 0, 0, 0});
  const Point y = p.m_max.random_point(rng);
  for (int i = 0; i < n; ++i) {
    acc += p.m_min.norm(x, sample_noise(p, x, y, NoiseModel{sigma}, rng).x);
  }
  EXPECT_NEAR(acc / n, mean, 3.0 * sd / std::sqrt(n));
}

TEST(RunningMean, EuclideanIsArithmeticMean) {
  const Manifold m = Manifold::euclidean(1);
  Point bar = vec({1});
  bar = running_mean_update(m, bar, vec({2}), 1);
  bar = running_mean_update(m, bar, vec({3}), 2);
  EXPECT_NEAR(bar.leaf(0), 2.0, 1e-15);
}

TEST(RunningMean, FixedPointIsUnchanged) {
  const Manifold m = Manifold::sphere(3);
  const Point e1 = vec({1, 0, 0});
  EXPECT_EQ(running_mean_update(m, e1, e1, 1), e1);
  EXPECT_EQ(running_mean_update(m, e1, e1, 17), e1);
}

TEST(RunningMean, SphereMidpoint) {
  const Manifold m = Manifold::sphere(3);
  const Point mid = running_mean_update(m, vec({1, 0, 0}), vec({0, 1, 0}), 1);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_LE(max_abs_diff(mid, vec({r, r, 0})), 1e-15);
}

TEST(RunningMean, EuclideanManyInputs) {
  const Manifold m = Manifold::euclidean(3);
  Rng rng(9);
  SaddleProblem p;
  p.m_min = m;
  p.m_max = m;
  SolverState s;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 200; ++i) {
    const Point v = m.random_point(rng);
    sum += v.leaf.col(0);
    fold_average(p, s, v, v);
  }
  EXPECT_LE((s.x_bar.leaf.col(0) - sum / 200).cwiseAbs().maxCoeff(), 1e-12);
}

// ---------------------------------------------------------------------------
// Driver.

namespace {

Recorder distance_recorder() {
  return [](const SaddleProblem&, const SolverState& s, TraceRow& row) {
    row.grad_norm = flat_dist0(s.x, s.y);
  };
}

}  // namespace

TEST(Run, RejectsEmptyHorizon) {
  const SaddleProblem p = bilinear1();
  EXPECT_THROW(run(p, SolverKind::kRceg, StepSchedule::constant(0.1), 0,
                   vec({1}), vec({1}), {}),
               std::invalid_argument);
}

TEST(Run, RejectsNoiseForDeterministicSolver) {
  const SaddleProblem p = bilinear1();
  RunOptions o;
  o.noise.sigma = 1.0;
  EXPECT_THROW(run(p, SolverKind::kRgda, StepSchedule::constant(0.1), 5,
                   vec({1}), vec({1}), o),
               std::invalid_argument);
}

TEST(Run, BilinearExtragradientApproachesOrigin) {
  const SaddleProblem p = bilinear1();
  RunOptions o;
  o.recorder = distance_recorder();
  const RunResult r = run(p, SolverKind::kRceg, StepSchedule::constant(0.1),
                          100, vec({1}), vec({1}), o);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.rows.size(), 101u);
  EXPECT_LT(r.rows.back().grad_norm, r.rows.front().grad_norm);
  EXPECT_EQ(r.rows.back().grad_calls, 200);
  EXPECT_EQ(r.rows.back().data_passes, 200.0);
}

TEST(Run, RecordEveryKeepsFirstAndLast) {
  const SaddleProblem p = bilinear1();
  RunOptions o;
  o.record_every = 7;
  const RunResult r = run(p, SolverKind::kRgda, StepSchedule::constant(0.1),
                          20, vec({1}), vec({1}), o);
  std::vector<long> iters;
  for (const auto& row : r.rows) iters.push_back(row.iter);
  EXPECT_EQ(iters, (std::vector<long>{0, 7, 14, 20}));
}

TEST(Run, DivergenceIsReportedWithPartialTrace) {
  const SaddleProblem p = bilinear1();
  RunOptions o;
  o.divergence_cap = 1e6;
  const RunResult r = run(p, SolverKind::kRgda, StepSchedule::constant(1.0),
                          1000, vec({1}), vec({1}), o);
  ASSERT_FALSE(r.ok());
  EXPECT_GT(r.failed_iteration, 0);
  EXPECT_EQ(static_cast<long>(r.rows.size()), r.failed_iteration + 1);
  EXPECT_LE(std::abs(r.final_state.x.leaf(0)) +
                std::abs(r.final_state.y.leaf(0)),
            1e6 + 2.0);
}

TEST(Run, StopsAtGradientTolerance) {
  const SaddleProblem p = euclidean_quadratic_problem(2, 1.0, 1.0);
  RunOptions o;
  o.stop_grad_norm = 1e-3;
  o.recorder = distance_recorder();
  const RunResult r = run(p, SolverKind::kRceg, StepSchedule::constant(0.25),
                          10000, vec({1, 1}), vec({1, -1}), o);
  EXPECT_TRUE(r.ok());
  EXPECT_LE(r.rows.back().grad_norm, 1e-3);
  EXPECT_LT(r.rows.size(), 10000u);
}

TEST(Run, AveragesHalfIteratesForExtragradient) {
  const SaddleProblem p = bilinear1();
  const RunResult r = run(p, SolverKind::kRceg, StepSchedule::constant(0.1), 1,
                          vec({1}), vec({1}), {});
  EXPECT_EQ(r.final_state.x_bar, r.final_state.x_half);
  const RunResult g = run(p, SolverKind::kRgda, StepSchedule::constant(0.1), 1,
                          vec({1}), vec({1}), {});
  EXPECT_EQ(g.final_state.x_bar, vec({1}));
}

TEST(Run, Deterministic) {
  const SaddleProblem p = bilinear_problem(make_bilinear_instance(2));
  RunOptions o;
  o.noise.sigma = 0.3;
  o.seed = 12;
  o.recorder = distance_recorder();
  const RunResult a = run(p, SolverKind::kSrgda, StepSchedule::constant(0.05),
                          50, vec({1, 2}), vec({3, 4}), o);
  const RunResult b = run(p, SolverKind::kSrgda, StepSchedule::constant(0.05),
                          50, vec({1, 2}), vec({3, 4}), o);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].grad_norm, b.rows[i].grad_norm);
  }
}

TEST(Run, KarcherContractsUnderTheoremStep) {
  // Well-posed instance (anchor weight above the curvature threshold).
  auto inst = std::make_shared<KarcherInstance>(make_karcher_instance(2, 3, 4.0, 5));
  const SaddleProblem p = karcher_problem(inst);
  Rng rng(6);
  const Point x0 = p.m_min.random_point(rng);
  const Point y0 = p.m_max.random_point(rng);
  // Reference by a long run.
  RunOptions ro;
  const RunResult ref = run(p, SolverKind::kRceg, StepSchedule::constant(0.02),
                            20000, x0, y0, ro);
  ASSERT_TRUE(ref.ok());
  const Point xs = ref.final_state.x, ys = ref.final_state.y;
  std::vector<double> gaps;
  RunOptions o;
  o.on_step = [&](const SolverState& s) {
    const double dx = p.m_min.distance(s.x, xs), dy = p.m_max.distance(s.y, ys);
    gaps.push_back(dx * dx + dy * dy);
  };
  ASSERT_TRUE(run(p, SolverKind::kRceg, StepSchedule::constant(0.02), 300, x0,
                  y0, o)
                  .ok());
  for (std::size_t t = 1; t < gaps.size(); ++t) {
    ASSERT_LE(gaps[t], gaps[t - 1] * (1 + 1e-12) + 1e-24) << t;
  }
  EXPECT_LT(gaps.back(), 0.5 * gaps.front());
}
