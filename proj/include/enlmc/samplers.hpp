#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "enlmc/ensemble.hpp"
#include "enlmc/grad_estimators.hpp"
#include "enlmc/rng.hpp"
#include "enlmc/targets.hpp"
#include "enlmc/types.hpp"

namespace enlmc {

/// EnLMC force components are clamped at this magnitude and the event is
/// counted.
inline constexpr double kForceClamp = 1e300;

/// Snapshot thinning: every iteration is stored up to this many, then every
/// ceil(M / kMaxSnapshots)-th. The final iteration is always stored.
inline constexpr std::size_t kMaxSnapshots = 200;

struct RunOptions {
  unsigned threads = 1;
  /// Extra iterations to store in addition to the thinning schedule.
  std::vector<std::size_t> extra_snapshots;
  /// Keep every ParticleEnsemble invariant check on after each iteration.
  bool check_invariants = false;
};

/// Output of one sampler run. Iterations are numbered m = 0..M; forces are
/// evaluated at every m (the last one only for provenance), and positions
/// are advanced for m < M, so the final snapshot is x^M.
struct Trajectory {
  std::string sampler;
  std::size_t n = 0;
  int dim = 0;
  std::size_t m_iters = 0;

  std::vector<std::size_t> snapshot_iterations;
  std::vector<Matrix> snapshots;

  /// Row-major (M+1) x N: 1 when the true gradient was evaluated.
  std::vector<std::uint8_t> true_gradient_flags;
  /// Per iteration, number of particles per FallbackReason.
  std::vector<std::array<std::size_t, kFallbackReasonCount>> reason_counts;
  /// Per iteration, max_i |F_i|.
  std::vector<double> max_force_norm;

  std::size_t clamped_forces = 0;  // EnLMC only
  std::size_t mala_accepted = 0;   // MALA only
  std::size_t invariant_violations = 0;

  bool flag(std::size_t m, std::size_t i) const { return true_gradient_flags[m * n + i] != 0; }
  const Matrix& final_positions() const { return snapshots.back(); }
  /// Snapshot at iteration m; throws std::out_of_range if not stored.
  const Matrix& snapshot_at(std::size_t m) const;
};

/// Thinning schedule for M iterations.
std::vector<std::size_t> snapshot_schedule(std::size_t m_iters, const std::vector<std::size_t>& extra = {});

/// Warnings for violated convergence preconditions h <= min(1/L, 1/d),
/// max(eta, 1) <= R2 and M_f > f*. Runs proceed regardless.
std::vector<std::string> precondition_warnings(const SamplerConfig& config, const TargetDensity& target);

/// x - h grad f(x) + sqrt(2h) noise
Vector lmc_step(const VectorRef& x, const TargetDensity& target, double h, const VectorRef& noise);

/// x - h F + sqrt(2h) noise. Used by every sampler.
Vector langevin_update(const VectorRef& x, const VectorRef& force, double h, const VectorRef& noise);

/// log q(y | x) up to the normalising constant, for the proposal
/// y ~ N(x - h grad f(x), 2h I).
double langevin_log_transition(const VectorRef& from, const VectorRef& to, const TargetDensity& target, double h);

/// log of the Metropolis-Hastings acceptance ratio for moving x -> y (not capped).
double mala_log_ratio(const VectorRef& x, const VectorRef& y, const TargetDensity& target, double h);

struct MalaResult {
  Vector x;
  bool accepted = false;
};

/// One MALA transition. The proposal consumes d normals from `stream`, then
/// one uniform for the accept test.
MalaResult mala_step(const VectorRef& x, const TargetDensity& target, double h, RngStream& stream);

/// Initial ensemble: particle i drawn from stream (seed, {initial, 0, i}).
Matrix draw_initial(const InitialDistribution& initial, std::size_t n, std::uint64_t seed);

/// Noise xi^m_i: stream (seed, {noise, m, i}). Shared by every sampler so
/// that runs with the same seed are coupled.
Vector langevin_noise(std::uint64_t seed, std::size_t m, std::size_t i, int d);

Trajectory lmc_run(const SamplerConfig& config, const TargetDensity& target,
                   const InitialDistribution& initial, const RunOptions& options = {});

Trajectory mala_run(const SamplerConfig& config, const TargetDensity& target,
                    const InitialDistribution& initial, const RunOptions& options = {});

/// Unconstrained ensemble sampler. True gradients at m = 0, the ensemble
/// estimator afterwards. Requires N >= 2.
Trajectory enlmc_run(const SamplerConfig& config, const TargetDensity& target,
                     const InitialDistribution& initial, const RunOptions& options = {});

/// Constrained ensemble sampler. Requires N >= 2 and M_f > f*.
Trajectory cenlmc_run(const SamplerConfig& config, const TargetDensity& target,
                      const InitialDistribution& initial, const RunOptions& options = {});

struct CoupledTrajectories {
  Trajectory x;  // constrained ensemble sampler
  Trajectory z;  // classical LMC, same initial positions and noise
};

CoupledTrajectories coupled_run(const SamplerConfig& config, const TargetDensity& target,
                                const InitialDistribution& initial, const RunOptions& options = {});

/// Splits [0, n) into contiguous chunks over `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn);

}  // namespace enlmc

#include "enlmc/detail/parallel.hpp"
