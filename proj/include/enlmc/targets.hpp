#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "enlmc/rng.hpp"
#include "enlmc/types.hpp"

namespace enlmc {

/// A potential f; the target density is p(x) proportional to exp(-f(x)).
class Potential {
 public:
  virtual ~Potential() = default;
  virtual double value(const VectorRef& x) const = 0;
  virtual Vector gradient(const VectorRef& x) const = 0;
};

enum class BuiltinTarget { none, quadratic, example1, example2 };

/// Potential plus the constants the samplers and their guards need.
struct TargetDensity {
  int dim = 0;
  std::shared_ptr<const Potential> potential;
  double f_star = 0.0;        // min f
  double smoothness_l = 1.0;  // Lipschitz constant of grad f
  std::optional<double> convexity_mu;
  BuiltinTarget builtin = BuiltinTarget::none;
  std::string name;

  double f(const VectorRef& x) const { return potential->value(x); }
  Vector grad_f(const VectorRef& x) const { return potential->gradient(x); }
};

/// f(x) = |x|^2/2 in d dimensions.
TargetDensity quadratic_target(int d);

/// f(x) = x1^2/2 + x2^2/8, an anisotropic Gaussian.
TargetDensity example1_target();

/// f(x) = -log[exp(-(x1-4)^2/2 - x2^2/2) + exp(-(x1+4)^2/2 - x2^2/2)],
/// an equal-weight bimodal mixture (not log-concave).
TargetDensity example2_target();

/// Builtin lookup by name: "quadratic" (needs dim), "example1", "example2".
/// Throws std::invalid_argument for unknown names.
TargetDensity make_target(std::string_view name, int dim = 1);

/// Distribution of the initial ensemble.
struct InitialDistribution {
  int dim = 0;
  std::function<Vector(RngStream&)> sample;
  std::string description;
};

/// Two-component mixture, means (1,1) and (-1,-1), identity covariance.
InitialDistribution example1_initial();

/// Standard normal in R^2.
InitialDistribution example2_initial();

InitialDistribution standard_normal_initial(int d);

/// "example1", "example2", "standard_normal".
InitialDistribution make_initial(std::string_view name, int dim = 1);

/// Exact i.i.d. draw from p proportional to exp(-f) for builtin targets.
/// Throws std::invalid_argument for user-defined targets.
Vector direct_sample(const TargetDensity& target, RngStream& stream);

/// n exact draws; draw k uses stream (seed, {domain, iteration, k}).
Matrix direct_samples(const TargetDensity& target, std::size_t n, std::uint64_t seed,
                      StreamDomain domain = StreamDomain::direct, std::uint32_t iteration = 0);

}  // namespace enlmc
