#include "enlmc/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace enlmc {

namespace {

void require_dimension(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1, got " + std::to_string(d));
  if (d > kMaxDimension) {
    throw std::invalid_argument("dimension " + std::to_string(d) + " exceeds supported maximum " +
                                std::to_string(kMaxDimension));
  }
}

}  // namespace

double sphere_surface(int d) {
  require_dimension(d);
  const double half = 0.5 * d;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double ball_volume(int d, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  return std::pow(eta, d) * sphere_surface(d) / d;
}

double alpha_d(int d, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  const double value = static_cast<double>(d) * d / (sphere_surface(d) * std::pow(eta, d));
  if (!std::isfinite(value) || value <= 0.0) {
    throw std::invalid_argument("alpha_d out of double range for d=" + std::to_string(d) +
                                ", eta=" + std::to_string(eta));
  }
  return value;
}

double proposal_density(double noise_norm_sq, double h, int d) {
  if (!(h > 0.0)) throw std::invalid_argument("step size h must be positive");
  if (noise_norm_sq < 0.0) throw std::invalid_argument("noise_norm_sq must be nonnegative");
  return std::pow(4.0 * std::numbers::pi * h, -0.5 * d) * std::exp(-0.5 * noise_norm_sq);
}

double c_d(double r1, int d) {
  require_dimension(d);
  if (!(r1 >= 0.0)) throw std::invalid_argument("r1 must be nonnegative");
  // log of s_d / (2 pi)^{d/2} = log 2 - (d/2) log 2 - lgamma(d/2)
  const double half = 0.5 * d;
  const double log_norm = std::numbers::ln2 * (1.0 - half) - std::lgamma(half);
  const double lower = r1 * std::sqrt(half);
  auto integrand = [&](double r) {
    if (r <= 0.0) return d == 1 ? std::exp(log_norm) : 0.0;
    return std::exp(log_norm + (d - 1) * std::log(r) - 0.5 * r * r);
  };
  // Beyond lower + 40 the integrand is below exp(-800).
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, lower, lower + 40.0, 20, 1e-12, &error);
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace enlmc
