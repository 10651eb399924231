#include "enlmc/ensemble.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "enlmc/core_math.hpp"

namespace enlmc {

ParticleEnsemble make_initial_ensemble(Matrix x0) {
  ParticleEnsemble e;
  e.iteration = 0;
  const auto n = static_cast<std::size_t>(x0.rows());
  e.w = Matrix::Constant(x0.rows(), x0.cols(), std::numeric_limits<double>::infinity());
  e.x = std::move(x0);
  e.p_vals.assign(n, 0.0);
  e.noise_norm.assign(n, std::numeric_limits<double>::infinity());
  return e;
}

std::string ensemble_inconsistency(const ParticleEnsemble& e, double h) {
  const auto n = e.size();
  std::ostringstream why;
  if (e.w.rows() != e.x.rows() || e.w.cols() != e.x.cols()) {
    why << "w has shape " << e.w.rows() << "x" << e.w.cols() << ", x has " << e.x.rows() << "x" << e.x.cols();
    return why.str();
  }
  if (e.p_vals.size() != n || e.noise_norm.size() != n) {
    why << "p_vals/noise_norm sizes " << e.p_vals.size() << "/" << e.noise_norm.size() << " != N=" << n;
    return why.str();
  }
  if (e.iteration == 0) return {};
  const double scale = std::sqrt(2.0 * h);
  const int d = e.dim();
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double implied = (e.x.row(row) - e.w.row(row)).norm() / scale;
    if (!(std::abs(implied - e.noise_norm[i]) <= 1e-10 * std::max(1.0, e.noise_norm[i]))) {
      why << "particle " << i << ": |x - w|/sqrt(2h) = " << implied << " but noise_norm = " << e.noise_norm[i];
      return why.str();
    }
    const double expected = proposal_density(e.noise_norm[i] * e.noise_norm[i], h, d);
    if (!(std::abs(e.p_vals[i] - expected) <= 1e-12 * expected)) {
      why << "particle " << i << ": p = " << e.p_vals[i] << " but proposal density is " << expected;
      return why.str();
    }
  }
  return {};
}

}  // namespace enlmc
