#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "enlmc/core_math.hpp"
#include "enlmc/experiment.hpp"
#include "enlmc/rng.hpp"
#include "enlmc/targets.hpp"
#include "json_fields.hpp"

namespace enlmc {

namespace {

constexpr double kBisectionLo = 0.0;
constexpr double kBisectionHi = 20.0;
constexpr double kBisectionTol = 1e-8;
constexpr std::size_t kPairSamples = 100000;

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

double solve_r1(double target, int d) {
  double lo = kBisectionLo, hi = kBisectionHi;
  if (c_d(lo, d) < target || c_d(hi, d) > target) {
    throw std::runtime_error("C_d(R1) = alpha/3 has no root in [0, 20]; choose a larger alpha");
  }
  while (hi - lo > kBisectionTol) {
    const double mid = 0.5 * (lo + hi);
    if (c_d(mid, d) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> pair_distances(std::string_view name, int dim, std::size_t pairs, std::uint64_t seed) {
  const TargetDensity target = make_target(name, dim);
  std::vector<double> out(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    RngStream stream(seed, {StreamDomain::calibration, 0, static_cast<std::uint32_t>(k)});
    const Vector y = direct_sample(target, stream);
    const Vector z = direct_sample(target, stream);
    out[k] = (y - z).norm();
  }
  return out;
}

}  // namespace

double pair_within_probability(std::string_view target, int dim, double r, std::size_t pairs, std::uint64_t seed) {
  require(pairs > 0, "need at least one pair");
  const auto dist = pair_distances(target, dim, pairs, seed);
  const auto hits = std::count_if(dist.begin(), dist.end(), [r](double v) { return v < r; });
  return static_cast<double>(hits) / static_cast<double>(pairs);
}

CalibrationResult calibrate(const CalibratorInput& in) {
  require(in.alpha > 0.0 && in.alpha <= 1.0, "alpha must lie in (0, 1]");
  require(in.d >= 1 && in.d <= kMaxDimension, "d out of range");
  require(in.kappa > 0.0 && std::isfinite(in.kappa), "kappa must be positive");
  require(in.mu > 0.0 && std::isfinite(in.mu), "mu must be positive");
  require(in.epsilon > 0.0 && std::isfinite(in.epsilon), "epsilon must be positive");
  require(in.rho > 0.0 && in.rho < 1.0, "rho must lie in (0, 1)");
  require(std::isfinite(in.f_star), "f_star must be finite");
  require(!in.h || (*in.h > 0.0 && std::isfinite(*in.h)), "h must be positive");
  require(!in.r2 || (*in.r2 > 0.0 && std::isfinite(*in.r2)), "r2 must be positive");
  require(!in.n || *in.n >= 2, "n must be at least 2");
  require(!in.n_star || *in.n_star >= 1, "n_star must be at least 1");

  const double d = in.d;
  CalibrationResult r;
  r.eta = in.epsilon / (in.kappa * d);
  r.h = in.h ? *in.h : in.epsilon * in.epsilon / (36.0 * in.kappa * in.kappa * d);
  r.r1 = solve_r1(in.alpha / 3.0, in.d);
  r.c_d_r1 = c_d(r.r1, in.d);
  r.m_f = 6.0 * in.kappa * d / in.alpha + in.f_star;
  r.r2 = in.r2 ? *in.r2 : std::max(r.eta, 1.0);

  const double exponent = r.r2 * (r.r2 + r.r1) / r.h;
  const double log_prefactor = std::log(36.0) + d * std::log(r.r1) + std::log(in.kappa) + 2.0 * std::log(d) +
                               std::log(r.m_f - in.f_star) - std::log(in.mu) - d * std::log(r.eta) -
                               2.0 * std::log(in.epsilon);
  r.log10_n_star_min = (log_prefactor + exponent) / std::numbers::ln10;

  const double log_corollary = (d * std::log(r.r1) + std::log(in.kappa) + 2.0 * std::log(d) - std::log(in.mu) -
                                d * std::log(r.eta) - 2.0 * std::log(in.epsilon) + 0.5 * exponent) /
                               (1.0 - in.rho);
  r.corollary_log10_n_star = log_corollary / std::numbers::ln10;
  r.corollary_log10_m_f_excess = in.rho * r.corollary_log10_n_star;

  r.iteration_coefficient = in.kappa * in.kappa * d / (in.epsilon * in.epsilon);
  r.notes.push_back("R2 is not determined numerically: p(R2) = P(|y - z| < R2) for y, z ~ p depends on the target; "
                    "the criterion bounds p(R2) from below for a given N and N*");
  r.notes.push_back("iterations: m > iteration_coefficient * log(W1(q0, p) / epsilon), W1(q0, p) supplied by the user");

  if (in.n) {
    const double n = static_cast<double>(*in.n);
    const double n_star = static_cast<double>(in.n_star ? *in.n_star : std::max<std::size_t>(1, *in.n / 10));
    // 1 - (alpha / (3 C N^{N*}))^{1/N} with C = 1
    const double log_term = std::log(in.alpha / 3.0) - n_star * std::log(n);
    r.r2_p_lower = -std::expm1(log_term / n);
    if (*r.r2_p_lower > r.r2_p_upper) {
      r.notes.push_back("the R2 criterion is unsatisfiable for this N and N*: the lower bound on p(R2) exceeds 1/4");
    }
    if (!(n_star < 0.5 * (n + 1.0))) r.notes.push_back("the R2 criterion assumes N* < (N+1)/2");
    if (!in.target.empty()) {
      const TargetDensity target = make_target(in.target, in.d);
      require(target.dim == in.d, "target dimension differs from d");
      auto dist = pair_distances(in.target, in.d, kPairSamples, in.seed);
      const auto hits = std::count_if(dist.begin(), dist.end(), [&](double v) { return v < r.r2; });
      r.r2_p_estimate = static_cast<double>(hits) / static_cast<double>(dist.size());
      if (*r.r2_p_lower <= r.r2_p_upper) {
        std::sort(dist.begin(), dist.end());
        const auto idx = static_cast<std::size_t>(std::ceil(*r.r2_p_lower * static_cast<double>(dist.size())));
        r.r2_suggested = dist[std::min(idx, dist.size() - 1)];
      }
    }
  }
  return r;
}

CalibratorInput parse_calibrator_input(std::string_view text) {
  const nlohmann::json root = detail::parse_json(text);
  detail::FieldReader f(root, "");
  CalibratorInput in;
  f.read("alpha", in.alpha);
  f.read("d", in.d);
  f.read("kappa", in.kappa);
  f.read("mu", in.mu);
  f.read("epsilon", in.epsilon);
  f.read("rho", in.rho);
  f.read("f_star", in.f_star);
  if (f.has("h")) {
    double v = 0.0;
    f.read("h", v);
    in.h = v;
  }
  if (f.has("r2")) {
    double v = 0.0;
    f.read("r2", v);
    in.r2 = v;
  }
  if (f.has("n")) {
    std::size_t v = 0;
    f.read("n", v);
    in.n = v;
  }
  if (f.has("n_star")) {
    std::size_t v = 0;
    f.read("n_star", v);
    in.n_star = v;
  }
  f.read("target", in.target);
  f.read("seed", in.seed);
  f.reject_unknown();
  return in;
}

std::string calibration_json(const CalibratorInput& in, const CalibrationResult& r) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json input{{"alpha", in.alpha}, {"d", in.d},     {"kappa", in.kappa},   {"mu", in.mu},
                     {"epsilon", in.epsilon}, {"rho", in.rho}, {"f_star", in.f_star}};
  if (in.h) input["h"] = *in.h;
  if (in.r2) input["r2"] = *in.r2;
  if (in.n) input["n"] = *in.n;
  if (in.n_star) input["n_star"] = *in.n_star;
  if (!in.target.empty()) input["target"] = in.target;

  ordered_json j;
  j["input"] = input;
  j["params"] = ordered_json{{"eta", r.eta}, {"h", r.h}, {"r1", r.r1}, {"r2", r.r2}, {"m_f", r.m_f}};
  j["c_d_r1"] = r.c_d_r1;
  j["log10_n_star_min"] = r.log10_n_star_min;
  j["corollary"] = ordered_json{{"log10_n_star", r.corollary_log10_n_star},
                                {"log10_m_f_minus_f_star", r.corollary_log10_m_f_excess}};
  ordered_json crit{{"p_upper", r.r2_p_upper}};
  crit["p_lower"] = r.r2_p_lower ? ordered_json(*r.r2_p_lower) : ordered_json(nullptr);
  crit["p_estimate"] = r.r2_p_estimate ? ordered_json(*r.r2_p_estimate) : ordered_json(nullptr);
  crit["r2_suggested"] = r.r2_suggested ? ordered_json(*r.r2_suggested) : ordered_json(nullptr);
  j["r2_criterion"] = crit;
  j["iterations"] = ordered_json{{"coefficient", r.iteration_coefficient},
                                 {"bound", "m > coefficient * log(W1(q0, p) / epsilon)"}};
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

}  // namespace enlmc
