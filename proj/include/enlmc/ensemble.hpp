#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "enlmc/types.hpp"

namespace enlmc {

/// All sampler tunables.
struct SamplerConfig {
  double h = 0.1;            // step size
  std::size_t n = 1000;      // particle count
  double eta = 0.1;          // finite-difference neighbourhood radius
  double r1 = 0.6708203932499369;  // noise-magnitude threshold, 3 sqrt(5) / 10
  double r2 = 1.5;           // drift-proximity radius
  std::size_t n_star = 100;  // minimum eligible neighbours
  double m_f = 20.0;         // potential threshold
  std::size_t m_iters = 100; // stopping index M
  std::uint64_t seed = 1;
  double rho = 0.5;          // exponent in M_f = (N*)^rho + f*, calibrator only

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

/// State of the ensemble at iteration m.
///
/// For m >= 1: x_i = w_i + sqrt(2h) xi_i^{m-1}, noise_norm_i = |xi_i^{m-1}| and
/// p_vals_i = proposal_density(noise_norm_i^2, h, d). At m = 0 the drift parts
/// are +infinity and there is no previous noise.
struct ParticleEnsemble {
  std::size_t iteration = 0;
  Matrix x;
  Matrix w;
  std::vector<double> p_vals;
  std::vector<double> noise_norm;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

/// Fresh ensemble at m = 0.
ParticleEnsemble make_initial_ensemble(Matrix x0);

/// Empty string if the ensemble satisfies its invariants for step size h,
/// otherwise a description of the first violation.
std::string ensemble_inconsistency(const ParticleEnsemble& ensemble, double h);

}  // namespace enlmc
