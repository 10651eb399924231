#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "enlmc/ensemble.hpp"
#include "enlmc/neighbor_index.hpp"
#include "enlmc/targets.hpp"
#include "enlmc/types.hpp"

namespace enlmc {

/// Why a particle's force fell back to the true gradient. The constraint checks
/// run in this order and the first one that fires is reported.
enum class FallbackReason : std::uint8_t {
  none = 0,
  noise_too_large,
  f_above_threshold,
  too_few_neighbors,
  first_iteration,
};

inline constexpr std::size_t kFallbackReasonCount = 5;

std::string_view to_string(FallbackReason reason);

struct ForceResult {
  Vector force;
  bool used_true_gradient = false;
  std::size_t neighbor_count = 0;
  FallbackReason fallback_reason = FallbackReason::none;
};

/// Coincident particles (|dx| below this) are skipped: the pair term is 0/0.
inline constexpr double kCoincidenceTolerance = 1e-12;

/// One finite-difference pair contribution
///   alpha * df / |dx|^2 * dx / p_j,
/// accumulated into `out`. The caller has already applied the indicators.
inline void accumulate_pair_term(Vector& out, const double* dx, double dx_norm_sq, double df,
                                 double alpha, double p_j) {
  const double scale = alpha * df / dx_norm_sq / p_j;
  for (Eigen::Index k = 0; k < out.size(); ++k) out[k] += scale * dx[k];
}

/// Per-iteration cache for the unconstrained estimator: potential values and
/// an eta-grid over positions. Read-only after construction.
class UnconstrainedForceContext {
 public:
  UnconstrainedForceContext(const Matrix& x, std::span<const double> p_vals, const TargetDensity& target,
                            double eta);
  Vector force(std::size_t i) const;

 private:
  const Matrix& x_;
  std::span<const double> p_vals_;
  double eta_;
  double alpha_;
  std::vector<double> f_values_;
  NeighborIndex index_;
};

/// Ensemble force of the unconstrained estimator:
///   (1/(N-1)) sum_{j != i, |dx_ij| <= eta} alpha_d df_ij / |dx_ij|^2 dx_ij / p_j.
/// Throws std::invalid_argument if N < 2 or any p_j <= 0.
Vector enlmc_force(std::size_t i, const Matrix& x, std::span<const double> p_vals,
                   const TargetDensity& target, double eta);

/// Gate parameters of the constrained estimator.
struct ConstraintParams {
  double h = 0.1;
  double eta = 0.1;
  double r1 = 1.0;
  double r2 = 1.0;
  std::size_t n_star = 1;
  double m_f = 1.0;

  static ConstraintParams from(const SamplerConfig& config);
};

/// Per-iteration cache shared by all constrained-force evaluations at the
/// same iteration: potential values, the drift-part neighbour index and the
/// normalisation constant. Read-only after construction, so forces for
/// distinct particles can be evaluated concurrently.
class ConstrainedForceContext {
 public:
  ConstrainedForceContext(const ParticleEnsemble& ensemble, const TargetDensity& target,
                          const ConstraintParams& params);

  ForceResult finite_difference(std::size_t i) const;
  ForceResult exact_gradient(std::size_t i) const;

  /// N_i: number of j != i with |w_j - w_i| <= R2.
  std::size_t neighbor_count(std::size_t i) const { return index_.count_within(i, params_.r2); }

  const std::vector<double>& f_values() const { return f_values_; }

 private:
  template <bool kExact>
  ForceResult evaluate(std::size_t i) const;

  const ParticleEnsemble& ensemble_;
  const TargetDensity& target_;
  ConstraintParams params_;
  double alpha_ = 0.0;
  std::vector<double> f_values_;
  NeighborIndex index_;
};

/// Constrained ensemble force for one particle. Falls back to grad f(x_i) when
/// sqrt(2h)|xi_i| > R1, f(x_i) > M_f or N_i < N* (checked in that order), and
/// always at m = 0. Otherwise returns
///   (1/N_i) sum_{j != i, |dx_ij| <= eta, |dw_ij| <= R2} alpha_d df_ij / |dx_ij|^2 dx_ij / p_j.
/// Throws std::invalid_argument for inconsistent ensembles or M_f <= f*.
ForceResult cenlmc_force(std::size_t i, const ParticleEnsemble& ensemble,
                         const SamplerConfig& config, const TargetDensity& target);

/// Same as cenlmc_force with df_ij replaced by <grad f(x_i), dx_ij>. Used to
/// isolate the finite-difference error in tests.
ForceResult exact_gradient_force(std::size_t i, const ParticleEnsemble& ensemble,
                                 const SamplerConfig& config, const TargetDensity& target);

/// N_i = #{j != i : |w_j - w_i| <= r2}. `index` must have been built over w.
std::size_t neighbor_count(std::size_t i, const Matrix& w, double r2, const NeighborIndex& index);

/// Raised when the linear-solve estimator cannot produce a gradient.
class EstimationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear-solve gradient estimate at x_star from exactly d neighbours:
/// solves Dx z = Df with rows (x_k - x_star)^T and entries f(x_k) - f(x_star).
/// Throws EstimationFailure if the neighbour count is not d or if the system
/// is rank deficient (condition number above 1e12).
Vector linsolve_gradient(const VectorRef& x_star, double f_star_value, const Matrix& neighbors,
                         std::span<const double> neighbor_f);

/// Chooses the d nearest particles within eta of particle i (ties broken by
/// id) and applies linsolve_gradient. Falls back to the true gradient, flagged
/// as too_few_neighbors, when fewer than d are available or the solve fails.
ForceResult linsolve_force(std::size_t i, const Matrix& x, const TargetDensity& target, double eta);

}  // namespace enlmc
