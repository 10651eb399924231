#include "enlmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "enlmc/core_math.hpp"
#include "enlmc/grad_estimators.hpp"

namespace enlmc {

double gradient_call_ratio(std::span<const std::uint8_t> flags, std::size_t n, std::size_t m) {
  if (m < 1) throw std::invalid_argument("R_m is defined for m >= 1");
  if (n == 0 || flags.size() < (m + 1) * n) throw std::invalid_argument("not enough iterations of flags for R_m");
  std::size_t count = 0;
  for (std::size_t k = n; k < (m + 1) * n; ++k) count += flags[k] != 0;
  return static_cast<double>(count) / (static_cast<double>(m) * static_cast<double>(n));
}

double RatioAccumulator::add_iteration(std::span<const std::uint8_t> flags) {
  if (flags.size() != n_) throw std::invalid_argument("flag row has wrong length");
  for (auto f : flags) count_ += f != 0;
  ++m_;
  return value();
}

double RatioAccumulator::value() const {
  if (m_ == 0) throw std::logic_error("R_m is undefined before the first iteration");
  return static_cast<double>(count_) / (static_cast<double>(m_) * static_cast<double>(n_));
}

std::vector<double> ratio_series(const Trajectory& t) {
  RatioAccumulator acc(t.n);
  std::vector<double> out;
  out.reserve(t.m_iters);
  for (std::size_t m = 1; m <= t.m_iters; ++m) {
    out.push_back(acc.add_iteration(std::span(t.true_gradient_flags).subspan(m * t.n, t.n)));
  }
  return out;
}

namespace {

double w1_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += std::abs(a[k] - b[k]);
  return sum / static_cast<double>(a.size());
}

std::vector<double> project_sorted(const Matrix& samples, const Eigen::Ref<const Eigen::RowVectorXd>& direction) {
  std::vector<double> out(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) out[static_cast<std::size_t>(i)] = samples.row(i).dot(direction);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("w1_1d needs equal sample counts");
  if (a.empty()) throw std::invalid_argument("w1_1d needs at least one sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return w1_sorted(sa, sb);
}

Matrix projection_directions(int d, std::size_t k, RngStream stream) {
  Matrix dirs(static_cast<Eigen::Index>(k), d);
  for (std::size_t p = 0; p < k; ++p) {
    Vector v;
    do {
      v = stream.normals(d);
    } while (v.norm() == 0.0);
    dirs.row(static_cast<Eigen::Index>(p)) = (v / v.norm()).transpose();
  }
  return dirs;
}

double sliced_w1(const Matrix& a, const Matrix& b, std::size_t k_projections, const RngStream& stream) {
  if (a.rows() != b.rows()) throw std::invalid_argument("sliced_w1 needs equal sample counts");
  if (a.cols() != b.cols()) throw std::invalid_argument("sliced_w1 needs equal dimensions");
  return SlicedW1Reference(b, k_projections, stream).distance(a);
}

SlicedW1Reference::SlicedW1Reference(const Matrix& reference, std::size_t k_projections, const RngStream& stream) {
  if (k_projections < 1) throw std::invalid_argument("sliced_w1 needs at least one projection");
  if (reference.rows() < 1) throw std::invalid_argument("sliced_w1 needs at least one sample");
  directions_ = projection_directions(static_cast<int>(reference.cols()), k_projections, stream);
  for (Eigen::Index p = 0; p < directions_.rows(); ++p) {
    sorted_projections_.push_back(project_sorted(reference, directions_.row(p)));
  }
}

double SlicedW1Reference::distance(const Matrix& sample) const {
  if (static_cast<std::size_t>(sample.rows()) != sorted_projections_.front().size() ||
      sample.cols() != directions_.cols()) {
    throw std::invalid_argument("sample shape does not match the sliced-W1 reference");
  }
  double sum = 0.0;
  for (Eigen::Index p = 0; p < directions_.rows(); ++p) {
    sum += w1_sorted(project_sorted(sample, directions_.row(p)), sorted_projections_[static_cast<std::size_t>(p)]);
  }
  return sum / static_cast<double>(directions_.rows());
}

std::vector<double> blowup_probe(std::span<const std::size_t> sample_counts, const BlowupProbeOptions& o) {
  for (std::size_t k = 1; k < sample_counts.size(); ++k) {
    if (sample_counts[k] <= sample_counts[k - 1]) throw std::invalid_argument("sample counts must increase");
  }
  if (!sample_counts.empty() && sample_counts.front() == 0) throw std::invalid_argument("sample counts must be positive");
  const double alpha = alpha_d(1, o.eta);
  const double scale = std::sqrt(2.0 * o.h);
  const double w_i = 0.0;
  const double w_j = o.drift_separation;
  RngStream stream(o.seed, {StreamDomain::probe, 0, 0});
  std::vector<double> out;
  double sum = 0.0;
  std::size_t drawn = 0;
  for (std::size_t n : sample_counts) {
    for (; drawn < n; ++drawn) {
      const double xi_i = stream.normal();
      const double xi_j = stream.normal();
      const double x_i = w_i + scale * xi_i;
      const double x_j = w_j + scale * xi_j;
      const double dx = x_j - x_i;
      const double dist_sq = dx * dx;
      if (dist_sq > o.eta * o.eta || dist_sq < kCoincidenceTolerance * kCoincidenceTolerance) continue;
      const double p_j = o.ablate ? 1.0 : proposal_density(xi_j * xi_j, o.h, 1);
      const double df = 0.5 * (x_j * x_j - x_i * x_i);
      const double force = alpha * df / dist_sq * dx / p_j;
      sum += force * force;
    }
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

std::size_t nondecreasing_steps(std::span<const double> estimates) {
  std::size_t steps = 0;
  double previous = 0.0;
  for (double e : estimates) {
    steps += e >= previous;
    previous = e;
  }
  return steps;
}

std::vector<double> coupling_distance(const Trajectory& x, const Trajectory& z) {
  if (x.n != z.n || x.dim != z.dim || x.snapshot_iterations != z.snapshot_iterations ||
      x.snapshots.size() != z.snapshots.size()) {
    throw std::invalid_argument("coupled trajectories differ in shape or snapshot schedule");
  }
  std::vector<double> out;
  out.reserve(x.snapshots.size());
  for (std::size_t s = 0; s < x.snapshots.size(); ++s) {
    out.push_back((x.snapshots[s] - z.snapshots[s]).rowwise().norm().mean());
  }
  return out;
}

std::vector<double> neighbor_scarcity_experiment(const TargetDensity& target, double c,
                                                 std::span<const double> eta_list, std::size_t trials,
                                                 std::uint64_t seed) {
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  const int d = target.dim;
  std::vector<double> out;
  for (std::size_t e = 0; e < eta_list.size(); ++e) {
    const double eta = eta_list[e];
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    const auto n = static_cast<std::size_t>(std::llround(c / std::pow(eta, d)));
    if (n < static_cast<std::size_t>(d) + 1) {
      throw std::invalid_argument("N = round(c/eta^d) = " + std::to_string(n) + " is below d+1");
    }
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      RngStream stream(seed, {StreamDomain::scarcity, static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(t)});
      const Vector first = direct_sample(target, stream);
      std::size_t inside = 1;  // the sample itself
      for (std::size_t k = 1; k < n; ++k) {
        if ((direct_sample(target, stream) - first).norm() < eta) ++inside;
      }
      hits += inside >= static_cast<std::size_t>(d) + 1;
    }
    out.push_back(static_cast<double>(hits) / static_cast<double>(trials));
  }
  return out;
}

double scarcity_bound(double c, double sup_density) { return 1.0 - std::exp(-c * sup_density); }

Moments moment_summary(const Matrix& samples) {
  if (samples.rows() < 2) throw std::invalid_argument("moment_summary needs at least two samples");
  Moments m;
  m.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - m.mean.transpose();
  m.covariance = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  return m;
}

}  // namespace enlmc
