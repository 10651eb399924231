#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "enlmc/diagnostics.hpp"
#include "enlmc/ensemble.hpp"
#include "enlmc/samplers.hpp"
#include "enlmc/targets.hpp"

namespace enlmc {
namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool same_trajectory(const Trajectory& a, const Trajectory& b) {
  if (a.snapshot_iterations != b.snapshot_iterations || a.true_gradient_flags != b.true_gradient_flags) return false;
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
    if (!bitwise_equal(a.snapshots[s], b.snapshots[s])) return false;
  }
  return a.reason_counts == b.reason_counts;
}

SamplerConfig example1_config(std::size_t n, std::size_t m) {
  SamplerConfig c;
  c.h = 0.1;
  c.eta = 0.1;
  c.r2 = 1.5;
  c.m_f = 20.0;
  c.n_star = 1000;
  c.n = n;
  c.m_iters = m;
  c.seed = 7;
  return c;
}

InitialDistribution fixed_points(std::vector<double> values) {
  InitialDistribution q;
  q.dim = 1;
  auto shared = std::make_shared<std::vector<double>>(std::move(values));
  auto counter = std::make_shared<std::size_t>(0);
  q.sample = [shared, counter](RngStream&) { return Vector::Constant(1, (*shared)[(*counter)++ % shared->size()]); };
  q.description = "fixed";
  return q;
}

TEST(LmcStep, HandValues) {
  const auto t = quadratic_target(1);
  const Vector zero = Vector::Zero(1);
  EXPECT_NEAR(lmc_step(Vector::Constant(1, 1.0), t, 0.1, zero)[0], 0.9, 1e-15);
  EXPECT_EQ(lmc_step(zero, t, 0.1, zero), zero);
  const auto t3 = quadratic_target(3);
  EXPECT_EQ(lmc_step(Vector{{1.0, -2.0, 3.5}}, t3, 1.0, Vector::Zero(3)), Vector::Zero(3));
}

TEST(SnapshotSchedule, Thinning) {
  EXPECT_EQ(snapshot_schedule(5).size(), 6u);
  EXPECT_EQ(snapshot_schedule(200).size(), 201u);
  const auto s1000 = snapshot_schedule(1000);
  EXPECT_EQ(s1000.size(), 201u);
  EXPECT_EQ(s1000[1], 5u);
  const auto s401 = snapshot_schedule(401);
  EXPECT_EQ(s401[1], 3u);
  EXPECT_EQ(s401.back(), 401u);
  const auto extra = snapshot_schedule(1000, {7, 7, 5000});
  EXPECT_TRUE(std::binary_search(extra.begin(), extra.end(), 7u));
  EXPECT_EQ(extra.size(), 202u);
}

TEST(SnapshotSchedule, TrajectoryMatchesSchedule) {
  SamplerConfig c;
  c.n = 10;
  c.m_iters = 450;
  const auto t = lmc_run(c, quadratic_target(1), standard_normal_initial(1));
  EXPECT_EQ(t.snapshot_iterations, snapshot_schedule(450));
  EXPECT_EQ(t.snapshots.size(), t.snapshot_iterations.size());
  EXPECT_THROW(t.snapshot_at(1), std::out_of_range);
}

TEST(Lmc, MarginalAccuracyStandardNormal) {
  // 10^4 independent chains, 10^3 burn-in steps, pooled final states.
  SamplerConfig c;
  c.h = 0.01;
  c.n = 10000;
  c.m_iters = 1000;
  c.seed = 3;
  const auto t = lmc_run(c, quadratic_target(1), standard_normal_initial(1));
  const double var = moment_summary(t.final_positions()).covariance(0, 0);
  EXPECT_GE(var, 0.95);
  EXPECT_LE(var, 1.05);
}

TEST(Mala, DownhillSymmetricProposalAccepted) {
  // f flat in the proposal direction except a drop: quadratic with x far out.
  const auto t = quadratic_target(1);
  const Vector x = Vector::Constant(1, 3.0), y = Vector::Constant(1, -0.2);
  EXPECT_GT(mala_log_ratio(x, y, t, 0.5), 0.0);
}

TEST(Mala, SmallStepAcceptsAlmostEverything) {
  const auto t = example1_target();
  RngStream stream(4, {StreamDomain::mala_accept, 0, 0});
  Vector x = Vector{{0.5, -1.0}};
  int accepted = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto r = mala_step(x, t, 1e-6, stream);
    accepted += r.accepted;
    x = r.x;
  }
  EXPECT_GT(accepted / 10000.0, 0.999);
}

TEST(Mala, LongRunVariance) {
  const auto t = quadratic_target(1);
  RngStream stream(5, {StreamDomain::mala_accept, 0, 0});
  Vector x = Vector::Zero(1);
  double sum = 0.0, sum_sq = 0.0;
  constexpr int kSteps = 1000000;
  for (int k = 0; k < kSteps; ++k) {
    x = mala_step(x, t, 0.1, stream).x;
    sum += x[0];
    sum_sq += x[0] * x[0];
  }
  const double mean = sum / kSteps;
  EXPECT_NEAR(sum_sq / kSteps - mean * mean, 1.0, 0.02);
}

TEST(Mala, DetailedBalance) {
  const auto t = example2_target();
  RngStream stream(6, {StreamDomain::synthetic, 0, 0});
  const double h = 0.05;
  for (int k = 0; k < 100; ++k) {
    const Vector x = 3.0 * stream.normals(2);
    const Vector y = x + 0.5 * stream.normals(2);
    const double r = mala_log_ratio(x, y, t, h);
    const double forward = -t.f(x) + langevin_log_transition(x, y, t, h) + std::min(0.0, r);
    const double backward = -t.f(y) + langevin_log_transition(y, x, t, h) + std::min(0.0, -r);
    EXPECT_NEAR(forward, backward, 1e-10 * std::max(1.0, std::abs(forward)));
    EXPECT_NEAR(mala_log_ratio(y, x, t, h), -r, 1e-10 * std::max(1.0, std::abs(r)));
  }
}

TEST(Enlmc, FarApartParticlesDiffuse) {
  SamplerConfig c;
  c.n = 2;
  c.m_iters = 10;
  c.h = 0.1;
  c.eta = 0.1;
  const auto t = enlmc_run(c, quadratic_target(1), fixed_points({-100.0, 100.0}));
  for (std::size_t m = 1; m < c.m_iters; ++m) {
    const Matrix& prev = t.snapshot_at(m);
    const Matrix& next = t.snapshot_at(m + 1);
    for (int i = 0; i < 2; ++i) {
      const double expected = prev(i, 0) + std::sqrt(2.0 * c.h) * langevin_noise(c.seed, m, i, 1)[0];
      EXPECT_EQ(next(i, 0), expected) << "m=" << m << " i=" << i;
    }
  }
}

TEST(Enlmc, Deterministic) {
  SamplerConfig c;
  c.n = 100;
  c.m_iters = 20;
  c.seed = 12;
  const auto t = quadratic_target(1);
  const auto q = standard_normal_initial(1);
  EXPECT_TRUE(same_trajectory(enlmc_run(c, t, q), enlmc_run(c, t, q)));
}

TEST(Enlmc, HeavyTailedForces) {
  const auto t = quadratic_target(1);
  const auto q = standard_normal_initial(1);
  double largest = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SamplerConfig c;
    c.h = 0.1;
    c.eta = 0.1;
    c.n = 100;
    c.m_iters = 20;
    c.seed = seed;
    const auto tr = enlmc_run(c, t, q);
    largest = std::max(largest, *std::max_element(tr.max_force_norm.begin(), tr.max_force_norm.end()));
  }
  EXPECT_GT(largest, 1e3);
}

TEST(Enlmc, HeavyTailedForcesOverManyReplicates) {
  const auto t = quadratic_target(1);
  const auto q = standard_normal_initial(1);
  std::size_t over = 0;
  double largest = 0.0;
  for (std::uint64_t seed = 1; seed <= 400; ++seed) {
    SamplerConfig c;
    c.h = 0.1;
    c.eta = 0.1;
    c.n = 100;
    c.m_iters = 20;
    c.seed = seed;
    const auto tr = enlmc_run(c, t, q);
    const double m = *std::max_element(tr.max_force_norm.begin(), tr.max_force_norm.end());
    over += m > 1e3;
    largest = std::max(largest, m);
  }
  EXPECT_GE(over, 1u);
  EXPECT_GT(largest, 1e4);
}

TEST(Cenlmc, NStarEqualsNIsLmc) {
  const auto t = example1_target();
  const auto q = example1_initial();
  SamplerConfig c = example1_config(300, 30);
  c.n_star = c.n;
  const auto a = cenlmc_run(c, t, q), b = lmc_run(c, t, q);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) EXPECT_TRUE(bitwise_equal(a.snapshots[s], b.snapshots[s])) << s;
  for (auto f : a.true_gradient_flags) ASSERT_EQ(f, 1);
}

TEST(Cenlmc, ZeroR1IsLmc) {
  const auto t = quadratic_target(2);
  const auto q = standard_normal_initial(2);
  SamplerConfig c = example1_config(200, 25);
  c.r1 = 0.0;
  c.n_star = 1;
  const auto a = cenlmc_run(c, t, q), b = lmc_run(c, t, q);
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) EXPECT_TRUE(bitwise_equal(a.snapshots[s], b.snapshots[s])) << s;
}

TEST(Cenlmc, TinyPotentialThresholdFarFromMinimumIsLmc) {
  const auto t = quadratic_target(1);
  SamplerConfig c = example1_config(100, 10);
  c.n_star = 1;
  c.m_f = 1e-12;
  const auto a = cenlmc_run(c, t, fixed_points({50.0, 51.0, 52.0, 53.0}));
  const auto b = lmc_run(c, t, fixed_points({50.0, 51.0, 52.0, 53.0}));
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) EXPECT_TRUE(bitwise_equal(a.snapshots[s], b.snapshots[s])) << s;
}

TEST(Cenlmc, InvariantsHoldEveryIteration) {
  SamplerConfig c = example1_config(2000, 30);
  c.n_star = 100;
  RunOptions o;
  o.check_invariants = true;
  const auto tr = cenlmc_run(c, example1_target(), example1_initial(), o);
  EXPECT_EQ(tr.invariant_violations, 0u);
  std::size_t ensemble_used = 0;
  for (std::size_t m = 1; m <= c.m_iters; ++m) ensemble_used += tr.reason_counts[m][0];
  EXPECT_GT(ensemble_used, 0u);
}

TEST(Cenlmc, FirstIterationFlags) {
  SamplerConfig c = example1_config(500, 5);
  c.n_star = 10;
  const auto tr = cenlmc_run(c, example1_target(), example1_initial());
  EXPECT_EQ(tr.reason_counts[0][static_cast<std::size_t>(FallbackReason::first_iteration)], 500u);
  for (std::size_t i = 0; i < 500; ++i) EXPECT_TRUE(tr.flag(0, i));
}

TEST(Cenlmc, Example1StaysFinite) {
  const auto tr = cenlmc_run(example1_config(3000, 100), example1_target(), example1_initial());
  for (const auto& s : tr.snapshots) ASSERT_TRUE(s.allFinite());
}

TEST(Cenlmc, ThreadCountDoesNotChangeResults) {
  SamplerConfig c = example1_config(1500, 15);
  c.n_star = 50;
  RunOptions one, four;
  four.threads = 4;
  const auto t = example1_target();
  const auto q = example1_initial();
  EXPECT_TRUE(same_trajectory(cenlmc_run(c, t, q, one), cenlmc_run(c, t, q, four)));
  EXPECT_TRUE(same_trajectory(enlmc_run(c, t, q, one), enlmc_run(c, t, q, four)));
  EXPECT_TRUE(same_trajectory(mala_run(c, t, q, one), mala_run(c, t, q, four)));
}

TEST(Coupled, SharedStartAndDegeneracy) {
  const auto t = example1_target();
  const auto q = example1_initial();
  SamplerConfig c = example1_config(400, 20);
  c.n_star = 50;
  const auto pair = coupled_run(c, t, q);
  EXPECT_TRUE(bitwise_equal(pair.x.snapshot_at(0), pair.z.snapshot_at(0)));
  c.n_star = c.n;
  const auto degenerate = coupled_run(c, t, q);
  for (double v : coupling_distance(degenerate.x, degenerate.z)) EXPECT_EQ(v, 0.0);
}

TEST(Preconditions, Warnings) {
  SamplerConfig c;
  c.h = 0.1;
  c.r2 = 1.5;
  c.m_f = 20;
  EXPECT_TRUE(precondition_warnings(c, example1_target()).empty());
  EXPECT_EQ(precondition_warnings(c, example2_target()).size(), 1u);
  c.r2 = 0.5;
  c.m_f = -1.0;
  EXPECT_EQ(precondition_warnings(c, example1_target()).size(), 2u);
}

TEST(Samplers, RejectInvalidConfigs) {
  SamplerConfig c;
  c.n = 1;
  EXPECT_THROW(cenlmc_run(c, quadratic_target(1), standard_normal_initial(1)), std::invalid_argument);
  EXPECT_THROW(enlmc_run(c, quadratic_target(1), standard_normal_initial(1)), std::invalid_argument);
  c.n = 10;
  c.m_f = -1.0;
  EXPECT_THROW(cenlmc_run(c, quadratic_target(1), standard_normal_initial(1)), std::invalid_argument);
}

}  // namespace
}  // namespace enlmc
