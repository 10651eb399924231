#include "enlmc/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "enlmc/core_math.hpp"

namespace enlmc {

namespace {

void require_compatible(const SamplerConfig& config, const TargetDensity& target,
                        const InitialDistribution& initial) {
  if (initial.dim != target.dim) {
    throw std::invalid_argument("initial distribution dimension " + std::to_string(initial.dim) +
                                " differs from target dimension " + std::to_string(target.dim));
  }
  if (!(config.h > 0.0)) throw std::invalid_argument("step size h must be positive");
  if (config.n < 1) throw std::invalid_argument("particle count N must be positive");
}

Trajectory start_trajectory(std::string sampler, const SamplerConfig& config, int dim, const RunOptions& options) {
  Trajectory t;
  t.sampler = std::move(sampler);
  t.n = config.n;
  t.dim = dim;
  t.m_iters = config.m_iters;
  t.snapshot_iterations = snapshot_schedule(config.m_iters, options.extra_snapshots);
  t.true_gradient_flags.assign((config.m_iters + 1) * config.n, 0);
  t.reason_counts.assign(config.m_iters + 1, {});
  t.max_force_norm.assign(config.m_iters + 1, 0.0);
  return t;
}

void maybe_snapshot(Trajectory& t, std::size_t m, const Matrix& x) {
  if (std::binary_search(t.snapshot_iterations.begin(), t.snapshot_iterations.end(), m)) t.snapshots.push_back(x);
}

void record_forces(Trajectory& t, std::size_t m, const std::vector<ForceResult>& forces) {
  double max_norm = 0.0;
  for (std::size_t i = 0; i < forces.size(); ++i) {
    t.true_gradient_flags[m * t.n + i] = forces[i].used_true_gradient ? 1 : 0;
    ++t.reason_counts[m][static_cast<std::size_t>(forces[i].fallback_reason)];
    const double norm = forces[i].force.norm();
    if (!(norm <= max_norm)) max_norm = std::isnan(norm) ? std::numeric_limits<double>::infinity() : norm;
  }
  t.max_force_norm[m] = max_norm;
}

std::vector<ForceResult> gradients_at(const Matrix& x, const TargetDensity& target, unsigned threads,
                                      FallbackReason reason) {
  std::vector<ForceResult> out(static_cast<std::size_t>(x.rows()));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i].force = target.grad_f(x.row(static_cast<Eigen::Index>(i)).transpose());
    out[i].used_true_gradient = true;
    out[i].fallback_reason = reason;
  });
  return out;
}

/// Clamps non-finite or oversized components; returns true if anything changed.
bool clamp_force(Vector& force) {
  bool clamped = false;
  for (Eigen::Index k = 0; k < force.size(); ++k) {
    double& v = force[k];
    if (std::isnan(v)) {
      v = 0.0;
      clamped = true;
    } else if (std::abs(v) > kForceClamp) {
      v = std::copysign(kForceClamp, v);
      clamped = true;
    }
  }
  return clamped;
}

/// Moves every particle with its force and noise xi^m_i, updating drift
/// parts, noise norms and proposal densities.
void advance(ParticleEnsemble& e, const std::vector<ForceResult>& forces, const SamplerConfig& config,
             unsigned threads) {
  const int d = e.dim();
  const std::size_t m = e.iteration;
  parallel_for(e.size(), threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Vector noise = langevin_noise(config.seed, m, i, d);
    const Vector xi = e.x.row(row).transpose();
    e.w.row(row) = (xi - config.h * forces[i].force).transpose();
    e.x.row(row) = langevin_update(xi, forces[i].force, config.h, noise).transpose();
    e.noise_norm[i] = noise.norm();
    e.p_vals[i] = proposal_density(noise.squaredNorm(), config.h, d);
  });
  e.iteration = m + 1;
}

}  // namespace

const Matrix& Trajectory::snapshot_at(std::size_t m) const {
  const auto it = std::lower_bound(snapshot_iterations.begin(), snapshot_iterations.end(), m);
  if (it == snapshot_iterations.end() || *it != m) {
    throw std::out_of_range("iteration " + std::to_string(m) + " was not stored");
  }
  return snapshots[static_cast<std::size_t>(it - snapshot_iterations.begin())];
}

std::vector<std::size_t> snapshot_schedule(std::size_t m_iters, const std::vector<std::size_t>& extra) {
  const std::size_t stride = m_iters <= kMaxSnapshots ? 1 : (m_iters + kMaxSnapshots - 1) / kMaxSnapshots;
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m <= m_iters; m += stride) out.push_back(m);
  if (out.back() != m_iters) out.push_back(m_iters);
  for (std::size_t m : extra) {
    if (m <= m_iters) out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> precondition_warnings(const SamplerConfig& c, const TargetDensity& target) {
  std::vector<std::string> out;
  const double h_max = std::min(1.0 / target.smoothness_l, 1.0 / target.dim);
  if (c.h > h_max) {
    std::ostringstream s;
    s << "step size h=" << c.h << " exceeds min(1/L, 1/d)=" << h_max << " (L=" << target.smoothness_l
      << ", d=" << target.dim << ")";
    out.push_back(s.str());
  }
  if (std::max(c.eta, 1.0) > c.r2) {
    std::ostringstream s;
    s << "R2=" << c.r2 << " is below max(eta, 1)=" << std::max(c.eta, 1.0);
    out.push_back(s.str());
  }
  if (!(c.m_f > target.f_star)) {
    std::ostringstream s;
    s << "M_f=" << c.m_f << " does not exceed f*=" << target.f_star;
    out.push_back(s.str());
  }
  return out;
}

Vector langevin_update(const VectorRef& x, const VectorRef& force, double h, const VectorRef& noise) {
  const double scale = std::sqrt(2.0 * h);
  Vector out(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) out[k] = (x[k] - h * force[k]) + scale * noise[k];
  return out;
}

Vector lmc_step(const VectorRef& x, const TargetDensity& target, double h, const VectorRef& noise) {
  if (!(h > 0.0)) throw std::invalid_argument("step size h must be positive");
  return langevin_update(x, target.grad_f(x), h, noise);
}

double langevin_log_transition(const VectorRef& from, const VectorRef& to, const TargetDensity& target, double h) {
  const Vector mean = from - h * target.grad_f(from);
  return -(to - mean).squaredNorm() / (4.0 * h);
}

double mala_log_ratio(const VectorRef& x, const VectorRef& y, const TargetDensity& target, double h) {
  return target.f(x) - target.f(y) + langevin_log_transition(y, x, target, h) -
         langevin_log_transition(x, y, target, h);
}

MalaResult mala_step(const VectorRef& x, const TargetDensity& target, double h, RngStream& stream) {
  if (!(h > 0.0)) throw std::invalid_argument("step size h must be positive");
  const Vector noise = stream.normals(static_cast<int>(x.size()));
  Vector proposal = langevin_update(x, target.grad_f(x), h, noise);
  const double log_ratio = mala_log_ratio(x, proposal, target, h);
  const double u = stream.uniform_pos();
  if (log_ratio >= 0.0 || std::log(u) < log_ratio) return {std::move(proposal), true};
  return {Vector(x), false};
}

Matrix draw_initial(const InitialDistribution& initial, std::size_t n, std::uint64_t seed) {
  Matrix x(static_cast<Eigen::Index>(n), initial.dim);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream stream(seed, {StreamDomain::initial, 0, static_cast<std::uint32_t>(i)});
    x.row(static_cast<Eigen::Index>(i)) = initial.sample(stream).transpose();
  }
  return x;
}

Vector langevin_noise(std::uint64_t seed, std::size_t m, std::size_t i, int d) {
  return gaussian_draw(
      RngStream(seed, {StreamDomain::noise, static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(i)}), d);
}

Trajectory lmc_run(const SamplerConfig& config, const TargetDensity& target, const InitialDistribution& initial,
                   const RunOptions& options) {
  require_compatible(config, target, initial);
  Trajectory t = start_trajectory("lmc", config, target.dim, options);
  Matrix x = draw_initial(initial, config.n, config.seed);
  for (std::size_t m = 0;; ++m) {
    maybe_snapshot(t, m, x);
    const auto forces = gradients_at(x, target, options.threads, FallbackReason::none);
    record_forces(t, m, forces);
    if (m == config.m_iters) break;
    parallel_for(config.n, options.threads, [&](std::size_t i) {
      const auto row = static_cast<Eigen::Index>(i);
      const Vector noise = langevin_noise(config.seed, m, i, target.dim);
      x.row(row) = langevin_update(x.row(row).transpose(), forces[i].force, config.h, noise).transpose();
    });
  }
  return t;
}

Trajectory mala_run(const SamplerConfig& config, const TargetDensity& target, const InitialDistribution& initial,
                    const RunOptions& options) {
  require_compatible(config, target, initial);
  Trajectory t = start_trajectory("mala", config, target.dim, options);
  Matrix x = draw_initial(initial, config.n, config.seed);
  std::vector<std::uint8_t> accepted(config.n, 0);
  for (std::size_t m = 0;; ++m) {
    maybe_snapshot(t, m, x);
    std::fill(t.true_gradient_flags.begin() + static_cast<std::ptrdiff_t>(m * t.n),
              t.true_gradient_flags.begin() + static_cast<std::ptrdiff_t>((m + 1) * t.n), 1);
    t.reason_counts[m][0] = t.n;
    if (m == config.m_iters) break;
    parallel_for(config.n, options.threads, [&](std::size_t i) {
      const auto row = static_cast<Eigen::Index>(i);
      RngStream stream(config.seed, {StreamDomain::noise, static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(i)});
      auto step = mala_step(x.row(row).transpose(), target, config.h, stream);
      x.row(row) = step.x.transpose();
      accepted[i] = step.accepted ? 1 : 0;
    });
    for (auto a : accepted) t.mala_accepted += a;
  }
  return t;
}

Trajectory enlmc_run(const SamplerConfig& config, const TargetDensity& target, const InitialDistribution& initial,
                     const RunOptions& options) {
  require_compatible(config, target, initial);
  if (config.n < 2) throw std::invalid_argument("ensemble samplers need N >= 2");
  Trajectory t = start_trajectory("enlmc", config, target.dim, options);
  ParticleEnsemble e = make_initial_ensemble(draw_initial(initial, config.n, config.seed));
  for (std::size_t m = 0;; ++m) {
    maybe_snapshot(t, m, e.x);
    std::vector<ForceResult> forces;
    if (m == 0) {
      forces = gradients_at(e.x, target, options.threads, FallbackReason::first_iteration);
    } else {
      forces.resize(config.n);
      const UnconstrainedForceContext ctx(e.x, e.p_vals, target, config.eta);
      std::vector<std::uint8_t> clamped(config.n, 0);
      parallel_for(config.n, options.threads, [&](std::size_t i) {
        forces[i].force = ctx.force(i);
        clamped[i] = clamp_force(forces[i].force) ? 1 : 0;
      });
      for (auto c : clamped) t.clamped_forces += c;
    }
    record_forces(t, m, forces);
    if (m == config.m_iters) break;
    advance(e, forces, config, options.threads);
  }
  return t;
}

Trajectory cenlmc_run(const SamplerConfig& config, const TargetDensity& target, const InitialDistribution& initial,
                      const RunOptions& options) {
  require_compatible(config, target, initial);
  if (config.n < 2) throw std::invalid_argument("ensemble samplers need N >= 2");
  if (!(config.m_f > target.f_star)) throw std::invalid_argument("M_f must exceed the target minimum f*");
  Trajectory t = start_trajectory("cenlmc", config, target.dim, options);
  ParticleEnsemble e = make_initial_ensemble(draw_initial(initial, config.n, config.seed));
  const ConstraintParams params = ConstraintParams::from(config);
  for (std::size_t m = 0;; ++m) {
    maybe_snapshot(t, m, e.x);
    std::vector<ForceResult> forces(config.n);
    {
      const ConstrainedForceContext ctx(e, target, params);
      parallel_for(config.n, options.threads, [&](std::size_t i) { forces[i] = ctx.finite_difference(i); });
    }
    record_forces(t, m, forces);
    if (m == config.m_iters) break;
    advance(e, forces, config, options.threads);
    if (options.check_invariants && !ensemble_inconsistency(e, config.h).empty()) ++t.invariant_violations;
  }
  return t;
}

CoupledTrajectories coupled_run(const SamplerConfig& config, const TargetDensity& target,
                                const InitialDistribution& initial, const RunOptions& options) {
  // Both samplers draw x^0 and xi^m_i from the same (seed, stream id) keys.
  CoupledTrajectories out{cenlmc_run(config, target, initial, options), lmc_run(config, target, initial, options)};
  return out;
}

}  // namespace enlmc
