#include "enlmc/targets.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace enlmc {

namespace {

/// f(x) = sum_k precision_k x_k^2 / 2
class DiagonalGaussianPotential final : public Potential {
 public:
  explicit DiagonalGaussianPotential(Vector precision) : precision_(std::move(precision)) {}

  double value(const VectorRef& x) const override {
    return 0.5 * (precision_.array() * x.array().square()).sum();
  }
  Vector gradient(const VectorRef& x) const override { return precision_.cwiseProduct(x); }

  const Vector& precision() const { return precision_; }

 private:
  Vector precision_;
};

/// Equal-weight mixture of two unit-covariance Gaussians centred at +/- mu.
class TwoWellPotential final : public Potential {
 public:
  explicit TwoWellPotential(Vector mu) : mu_(std::move(mu)) {}

  double value(const VectorRef& x) const override {
    const double a = 0.5 * (x - mu_).squaredNorm();
    const double b = 0.5 * (x + mu_).squaredNorm();
    // -log(e^{-a} + e^{-b}), evaluated without underflow
    return std::min(a, b) - std::log1p(std::exp(-std::abs(a - b)));
  }

  Vector gradient(const VectorRef& x) const override {
    const double a = 0.5 * (x - mu_).squaredNorm();
    const double b = 0.5 * (x + mu_).squaredNorm();
    // weight of the +mu component, 1 / (1 + e^{a-b})
    const double weight_plus = a <= b ? 1.0 / (1.0 + std::exp(a - b))
                                      : std::exp(b - a) / (1.0 + std::exp(b - a));
    return x - (2.0 * weight_plus - 1.0) * mu_;
  }

  const Vector& mu() const { return mu_; }

 private:
  Vector mu_;
};

}  // namespace

TargetDensity quadratic_target(int d) {
  if (d < 1) throw std::invalid_argument("quadratic target needs d >= 1");
  TargetDensity t;
  t.dim = d;
  t.potential = std::make_shared<DiagonalGaussianPotential>(Vector::Ones(d));
  t.f_star = 0.0;
  t.smoothness_l = 1.0;
  t.convexity_mu = 1.0;
  t.builtin = BuiltinTarget::quadratic;
  t.name = "quadratic";
  return t;
}

TargetDensity example1_target() {
  TargetDensity t;
  t.dim = 2;
  t.potential = std::make_shared<DiagonalGaussianPotential>(Vector{{1.0, 0.25}});
  t.f_star = 0.0;
  t.smoothness_l = 1.0;
  t.convexity_mu = 0.25;
  t.builtin = BuiltinTarget::example1;
  t.name = "example1";
  return t;
}

TargetDensity example2_target() {
  TargetDensity t;
  t.dim = 2;
  t.potential = std::make_shared<TwoWellPotential>(Vector{{4.0, 0.0}});
  t.f_star = -std::log1p(std::exp(-32.0));
  // 1 + |mu_+ - mu_-|^2 / 4 would be tight; 1 + 16 is a safe over-estimate.
  t.smoothness_l = 17.0;
  t.builtin = BuiltinTarget::example2;
  t.name = "example2";
  return t;
}

TargetDensity make_target(std::string_view name, int dim) {
  if (name == "quadratic") return quadratic_target(dim);
  if (name == "example1") return example1_target();
  if (name == "example2") return example2_target();
  throw std::invalid_argument("unknown target '" + std::string(name) + "'");
}

InitialDistribution example1_initial() {
  InitialDistribution q;
  q.dim = 2;
  q.description = "0.5 N((1,1), I) + 0.5 N((-1,-1), I)";
  q.sample = [](RngStream& stream) {
    const double sign = stream.uniform() < 0.5 ? 1.0 : -1.0;
    Vector x = stream.normals(2);
    x.array() += sign;
    return x;
  };
  return q;
}

InitialDistribution standard_normal_initial(int d) {
  InitialDistribution q;
  q.dim = d;
  q.description = "N(0, I_" + std::to_string(d) + ")";
  q.sample = [d](RngStream& stream) { return stream.normals(d); };
  return q;
}

InitialDistribution example2_initial() { return standard_normal_initial(2); }

InitialDistribution make_initial(std::string_view name, int dim) {
  if (name == "example1") return example1_initial();
  if (name == "example2") return example2_initial();
  if (name == "standard_normal") return standard_normal_initial(dim);
  throw std::invalid_argument("unknown initial distribution '" + std::string(name) + "'");
}

Vector direct_sample(const TargetDensity& target, RngStream& stream) {
  switch (target.builtin) {
    case BuiltinTarget::quadratic:
    case BuiltinTarget::example1: {
      const auto* pot = dynamic_cast<const DiagonalGaussianPotential*>(target.potential.get());
      if (pot == nullptr) break;
      return stream.normals(target.dim).cwiseQuotient(pot->precision().cwiseSqrt());
    }
    case BuiltinTarget::example2: {
      const auto* pot = dynamic_cast<const TwoWellPotential*>(target.potential.get());
      if (pot == nullptr) break;
      const double sign = stream.uniform() < 0.5 ? 1.0 : -1.0;
      return stream.normals(target.dim) + sign * pot->mu();
    }
    case BuiltinTarget::none:
      break;
  }
  throw std::invalid_argument("direct sampling is only available for builtin targets");
}

Matrix direct_samples(const TargetDensity& target, std::size_t n, std::uint64_t seed, StreamDomain domain,
                      std::uint32_t iteration) {
  Matrix out(static_cast<Eigen::Index>(n), target.dim);
  for (std::size_t k = 0; k < n; ++k) {
    RngStream stream(seed, {domain, iteration, static_cast<std::uint32_t>(k)});
    out.row(static_cast<Eigen::Index>(k)) = direct_sample(target, stream).transpose();
  }
  return out;
}

}  // namespace enlmc
