#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "enlmc/rng.hpp"
#include "enlmc/samplers.hpp"
#include "enlmc/targets.hpp"
#include "enlmc/types.hpp"

namespace enlmc {

/// Cumulative fraction of true-gradient evaluations over iterations 1..m:
///   R_m = #{flags[j][i] : 1 <= j <= m} / (m N).
/// `flags` is row-major with n entries per iteration, iteration 0 first.
/// Iteration 0 is excluded. Throws std::invalid_argument for m < 1 or if
/// fewer than m + 1 iterations are available.
double gradient_call_ratio(std::span<const std::uint8_t> flags, std::size_t n, std::size_t m);

/// Streaming version: feed one iteration of flags at a time, starting at m = 1.
class RatioAccumulator {
 public:
  explicit RatioAccumulator(std::size_t n) : n_(n) {}
  double add_iteration(std::span<const std::uint8_t> flags);
  std::size_t iterations() const { return m_; }
  double value() const;

 private:
  std::size_t n_;
  std::size_t m_ = 0;
  std::size_t count_ = 0;
};

/// R_1..R_M of a trajectory.
std::vector<double> ratio_series(const Trajectory& trajectory);

/// Exact empirical 1-Wasserstein distance between equal-size 1D samples.
double w1_1d(std::span<const double> a, std::span<const double> b);

/// Sliced 1-Wasserstein distance: mean of w1_1d over k random unit directions
/// drawn from `stream` (the caller's stream is not advanced).
double sliced_w1(const Matrix& a, const Matrix& b, std::size_t k_projections, const RngStream& stream);

/// Precomputed directions and sorted reference projections, so a fixed
/// reference sample can be compared against many snapshots cheaply.
/// Gives exactly the same value as sliced_w1(sample, reference, ...).
class SlicedW1Reference {
 public:
  SlicedW1Reference(const Matrix& reference, std::size_t k_projections, const RngStream& stream);
  double distance(const Matrix& sample) const;

 private:
  Matrix directions_;
  std::vector<std::vector<double>> sorted_projections_;
};

/// Unit directions used by sliced_w1.
Matrix projection_directions(int d, std::size_t k, RngStream stream);

struct BlowupProbeOptions {
  double h = 0.1;
  double eta = 0.1;
  /// Distance between the two particles' drift parts w_j - w_i.
  double drift_separation = 1.2;
  /// Replace the 1/p_j importance weight by 1 (control experiment).
  bool ablate = false;
  std::uint64_t seed = 1;
};

/// Monte Carlo estimates of E|F_ij|^2 for the one-step unconstrained pair
/// force on f(x) = x^2/2 in 1D, where x_i ~ N(w_i, 2h), x_j ~ N(w_j, 2h). The
/// estimate for count n uses the first n draws of a single stream, so
/// successive counts are nested. Counts must be strictly increasing.
std::vector<double> blowup_probe(std::span<const std::size_t> sample_counts, const BlowupProbeOptions& options);

/// Number of steps k in which estimates[k] >= estimates[k-1], with an implicit
/// leading estimate of 0 (the empty sum), so a list of n values has n steps.
std::size_t nondecreasing_steps(std::span<const double> estimates);

/// Per-stored-iteration mean_i |x_i - z_i|. Throws std::invalid_argument on
/// shape or schedule mismatch.
std::vector<double> coupling_distance(const Trajectory& x, const Trajectory& z);

/// For each eta: fraction of `trials` i.i.d. samples of size N = round(c/eta^d)
/// from the builtin target in which sample 1 has at least d+1 points (itself
/// included) strictly within eta. Throws if some N < d+1.
std::vector<double> neighbor_scarcity_experiment(const TargetDensity& target, double c,
                                                 std::span<const double> eta_list, std::size_t trials,
                                                 std::uint64_t seed);

/// Small-eta limit bound 1 - exp(-c M) on that probability, M = sup p.
double scarcity_bound(double c, double sup_density);

struct Moments {
  Vector mean;
  Eigen::MatrixXd covariance;  // unbiased
};

/// Sample mean and unbiased covariance. Throws std::invalid_argument for n < 2.
Moments moment_summary(const Matrix& samples);

}  // namespace enlmc
