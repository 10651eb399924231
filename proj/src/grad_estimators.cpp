#include "enlmc/grad_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "enlmc/core_math.hpp"

namespace enlmc {

std::string_view to_string(FallbackReason reason) {
  switch (reason) {
    case FallbackReason::none: return "none";
    case FallbackReason::noise_too_large: return "noise_too_large";
    case FallbackReason::f_above_threshold: return "f_above_threshold";
    case FallbackReason::too_few_neighbors: return "too_few_neighbors";
    case FallbackReason::first_iteration: return "first_iteration";
  }
  return "unknown";
}

namespace {

std::vector<double> potential_values(const Matrix& x, const TargetDensity& target) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = target.f(x.row(i).transpose());
  return out;
}

double squared_distance(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) {
    const double diff = b[k] - a[k];
    s += diff * diff;
  }
  return s;
}

ForceResult true_gradient(const TargetDensity& target, const VectorRef& x, FallbackReason reason,
                          std::size_t neighbors = 0) {
  ForceResult r;
  r.force = target.grad_f(x);
  r.used_true_gradient = true;
  r.fallback_reason = reason;
  r.neighbor_count = neighbors;
  return r;
}

}  // namespace

UnconstrainedForceContext::UnconstrainedForceContext(const Matrix& x, std::span<const double> p_vals,
                                                     const TargetDensity& target, double eta)
    : x_(x), p_vals_(p_vals), eta_(eta), alpha_(alpha_d(static_cast<int>(x.cols()), eta)),
      f_values_(potential_values(x, target)), index_(x, eta) {
  if (x.rows() < 2) throw std::invalid_argument("ensemble force needs N >= 2 particles");
  if (p_vals.size() != static_cast<std::size_t>(x.rows())) {
    throw std::invalid_argument("p_vals size does not match particle count");
  }
  for (double p : p_vals) {
    if (!(p > 0.0)) throw std::invalid_argument("proposal density values must be positive");
  }
}

Vector UnconstrainedForceContext::force(std::size_t i) const {
  const int d = static_cast<int>(x_.cols());
  const double* xi = x_.row(static_cast<Eigen::Index>(i)).data();
  thread_local std::vector<std::size_t> terms;
  terms.clear();
  index_.for_each_within(i, eta_, [&](std::size_t j) { terms.push_back(j); });
  std::sort(terms.begin(), terms.end());

  Vector sum = Vector::Zero(d);
  Vector dx(d);
  for (std::size_t j : terms) {
    const double* xj = x_.row(static_cast<Eigen::Index>(j)).data();
    const double dist_sq = squared_distance(xi, xj, d);
    if (dist_sq < kCoincidenceTolerance * kCoincidenceTolerance) continue;
    for (int k = 0; k < d; ++k) dx[k] = xj[k] - xi[k];
    accumulate_pair_term(sum, dx.data(), dist_sq, f_values_[j] - f_values_[i], alpha_, p_vals_[j]);
  }
  return sum / static_cast<double>(x_.rows() - 1);
}

Vector enlmc_force(std::size_t i, const Matrix& x, std::span<const double> p_vals, const TargetDensity& target,
                   double eta) {
  return UnconstrainedForceContext(x, p_vals, target, eta).force(i);
}

ConstraintParams ConstraintParams::from(const SamplerConfig& c) {
  return {c.h, c.eta, c.r1, c.r2, c.n_star, c.m_f};
}

ConstrainedForceContext::ConstrainedForceContext(const ParticleEnsemble& ensemble, const TargetDensity& target,
                                                 const ConstraintParams& params)
    : ensemble_(ensemble), target_(target), params_(params) {
  if (ensemble.size() < 2) throw std::invalid_argument("ensemble force needs N >= 2 particles");
  if (ensemble.dim() != target.dim) throw std::invalid_argument("ensemble and target dimensions differ");
  if (!(params.m_f > target.f_star)) {
    throw std::invalid_argument("M_f must exceed the target minimum f* (M_f=" + std::to_string(params.m_f) +
                                ", f*=" + std::to_string(target.f_star) + ")");
  }
  if (params.n_star < 1) throw std::invalid_argument("N* must be at least 1");
  if (!(params.h > 0.0) || !(params.eta > 0.0) || !(params.r2 > 0.0) || params.r1 < 0.0) {
    throw std::invalid_argument("h, eta, R2 must be positive and R1 nonnegative");
  }
  alpha_ = alpha_d(ensemble.dim(), params.eta);
  f_values_ = potential_values(ensemble.x, target);
  if (ensemble.iteration > 0) index_ = NeighborIndex(ensemble.w, std::max(params.r2, params.eta));
}

template <bool kExact>
ForceResult ConstrainedForceContext::evaluate(std::size_t i) const {
  const auto row = static_cast<Eigen::Index>(i);
  const auto xi_vec = ensemble_.x.row(row).transpose();
  if (ensemble_.iteration == 0) return true_gradient(target_, xi_vec, FallbackReason::first_iteration);
  if (std::sqrt(2.0 * params_.h) * ensemble_.noise_norm[i] > params_.r1) {
    return true_gradient(target_, xi_vec, FallbackReason::noise_too_large);
  }
  if (f_values_[i] > params_.m_f) return true_gradient(target_, xi_vec, FallbackReason::f_above_threshold);

  const int d = ensemble_.dim();
  const double* xi = ensemble_.x.row(row).data();
  const double eta_sq = params_.eta * params_.eta;
  std::size_t eligible = 0;
  thread_local std::vector<std::size_t> terms;
  terms.clear();
  index_.for_each_within(i, params_.r2, [&](std::size_t j) {
    ++eligible;
    const double dist_sq = squared_distance(xi, ensemble_.x.row(static_cast<Eigen::Index>(j)).data(), d);
    if (dist_sq <= eta_sq && dist_sq >= kCoincidenceTolerance * kCoincidenceTolerance) terms.push_back(j);
  });
  if (eligible < params_.n_star) {
    return true_gradient(target_, xi_vec, FallbackReason::too_few_neighbors, eligible);
  }
  std::sort(terms.begin(), terms.end());

  Vector grad_i;
  if constexpr (kExact) grad_i = target_.grad_f(xi_vec);
  Vector sum = Vector::Zero(d);
  Vector dx(d);
  for (std::size_t j : terms) {
    const double* xj = ensemble_.x.row(static_cast<Eigen::Index>(j)).data();
    for (int k = 0; k < d; ++k) dx[k] = xj[k] - xi[k];
    const double dist_sq = dx.squaredNorm();
    const double df = kExact ? grad_i.dot(dx) : f_values_[j] - f_values_[i];
    accumulate_pair_term(sum, dx.data(), dist_sq, df, alpha_, ensemble_.p_vals[j]);
  }
  ForceResult r;
  r.force = sum / static_cast<double>(eligible);
  r.used_true_gradient = false;
  r.neighbor_count = eligible;
  r.fallback_reason = FallbackReason::none;
  return r;
}

ForceResult ConstrainedForceContext::finite_difference(std::size_t i) const { return evaluate<false>(i); }

ForceResult ConstrainedForceContext::exact_gradient(std::size_t i) const { return evaluate<true>(i); }

namespace {

void require_consistent(const ParticleEnsemble& ensemble, const SamplerConfig& config) {
  const std::string why = ensemble_inconsistency(ensemble, config.h);
  if (!why.empty()) throw std::invalid_argument("inconsistent ensemble: " + why);
}

}  // namespace

ForceResult cenlmc_force(std::size_t i, const ParticleEnsemble& ensemble, const SamplerConfig& config,
                         const TargetDensity& target) {
  require_consistent(ensemble, config);
  return ConstrainedForceContext(ensemble, target, ConstraintParams::from(config)).finite_difference(i);
}

ForceResult exact_gradient_force(std::size_t i, const ParticleEnsemble& ensemble, const SamplerConfig& config,
                                 const TargetDensity& target) {
  require_consistent(ensemble, config);
  return ConstrainedForceContext(ensemble, target, ConstraintParams::from(config)).exact_gradient(i);
}

std::size_t neighbor_count(std::size_t i, const Matrix&, double r2, const NeighborIndex& index) {
  return index.count_within(i, r2);
}

Vector linsolve_gradient(const VectorRef& x_star, double f_star_value, const Matrix& neighbors,
                         std::span<const double> neighbor_f) {
  const auto d = x_star.size();
  if (neighbors.rows() != d || neighbors.cols() != d || static_cast<Eigen::Index>(neighbor_f.size()) != d) {
    throw EstimationFailure("linear-solve gradient needs exactly d neighbours");
  }
  Eigen::MatrixXd delta_x(d, d);
  Eigen::VectorXd delta_f(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    delta_x.row(k) = neighbors.row(k) - x_star.transpose();
    delta_f[k] = neighbor_f[static_cast<std::size_t>(k)] - f_star_value;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(delta_x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smallest = sv[d - 1];
  if (!(smallest > 0.0) || sv[0] / smallest > 1e12) {
    throw EstimationFailure("neighbour displacement matrix is rank deficient");
  }
  return svd.solve(delta_f);
}

ForceResult linsolve_force(std::size_t i, const Matrix& x, const TargetDensity& target, double eta) {
  const int d = static_cast<int>(x.cols());
  const auto row = static_cast<Eigen::Index>(i);
  std::vector<std::pair<double, std::size_t>> candidates;
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    if (j == row) continue;
    const double dist_sq = (x.row(j) - x.row(row)).squaredNorm();
    if (dist_sq <= eta * eta) candidates.emplace_back(dist_sq, static_cast<std::size_t>(j));
  }
  const auto xi = x.row(row).transpose();
  if (candidates.size() < static_cast<std::size_t>(d)) {
    return true_gradient(target, xi, FallbackReason::too_few_neighbors, candidates.size());
  }
  std::sort(candidates.begin(), candidates.end());
  Matrix chosen(d, d);
  std::vector<double> chosen_f(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const auto j = static_cast<Eigen::Index>(candidates[static_cast<std::size_t>(k)].second);
    chosen.row(k) = x.row(j);
    chosen_f[static_cast<std::size_t>(k)] = target.f(x.row(j).transpose());
  }
  try {
    ForceResult r;
    r.force = linsolve_gradient(xi, target.f(xi), chosen, chosen_f);
    r.neighbor_count = static_cast<std::size_t>(d);
    return r;
  } catch (const EstimationFailure&) {
    return true_gradient(target, xi, FallbackReason::too_few_neighbors, candidates.size());
  }
}

}  // namespace enlmc
