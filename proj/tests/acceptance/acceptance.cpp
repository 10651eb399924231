// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "enlmc/core_math.hpp"
#include "enlmc/diagnostics.hpp"
#include "enlmc/experiment.hpp"
#include "enlmc/grad_estimators.hpp"
#include "enlmc/rng.hpp"
#include "enlmc/samplers.hpp"
#include "enlmc/targets.hpp"

namespace fs = std::filesystem;
using namespace enlmc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("enlmc_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig config_file(const char* name) { return load_config(fs::path(ENLMC_CONFIG_DIR) / name); }

// Column `col` of a CSV text, header skipped.
std::vector<std::string> csv_column(const std::string& text, std::size_t col) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    for (std::size_t k = 0; k <= col; ++k) {
      if (!std::getline(ls, cell, ',')) cell.clear();
    }
    out.push_back(cell);
  }
  return out;
}

// Synthetic neighbours x_j ~ N(x*, 2h I) around particle 0 = x*, as an m = 1 ensemble.
ParticleEnsemble synthetic_cloud(const Vector& x_star, int neighbors, double h, std::uint64_t seed) {
  const int d = static_cast<int>(x_star.size());
  ParticleEnsemble e;
  e.iteration = 1;
  e.w = Matrix(neighbors + 1, d);
  e.x = Matrix(neighbors + 1, d);
  for (int j = 0; j <= neighbors; ++j) {
    const Vector xi = j == 0 ? Vector::Zero(d)
                             : gaussian_draw(RngStream(seed, {StreamDomain::synthetic, 0, static_cast<std::uint32_t>(j)}), d);
    e.w.row(j) = x_star.transpose();
    e.x.row(j) = (x_star + std::sqrt(2.0 * h) * xi).transpose();
    e.noise_norm.push_back(xi.norm());
    e.p_vals.push_back(proposal_density(xi.squaredNorm(), h, d));
  }
  return e;
}

Outcome criterion1() {
  bool ok = true;
  std::string detail;
  for (int d = 1; d <= 2; ++d) {
    const auto t = quadratic_target(d);
    const double eta = 0.1, h = 0.5 * eta * eta;
    const Vector x_star = Vector::Constant(d, 0.4);
    const auto e = synthetic_cloud(x_star, 100000, h, 100 + d);
    SamplerConfig c;
    c.n = e.size();
    c.h = h;
    c.eta = eta;
    c.r1 = 100.0;
    c.r2 = 100.0;
    c.n_star = 1;
    c.m_f = 1e6;
    const Vector grad = t.grad_f(x_star);
    const Vector exact = exact_gradient_force(0, e, c, t).force;
    const Vector fd = cenlmc_force(0, e, c, t).force;

    // per-term standard errors of both estimators
    const double alpha = alpha_d(d, eta);
    Vector s_exact = Vector::Zero(d), s_gap = Vector::Zero(d), q_exact = Vector::Zero(d), q_gap = Vector::Zero(d);
    const double count = static_cast<double>(e.size() - 1);
    for (std::size_t j = 1; j < e.size(); ++j) {
      const Vector dx = (e.x.row(static_cast<Eigen::Index>(j)) - e.x.row(0)).transpose();
      if (dx.norm() > eta) continue;
      const Vector dir = alpha / dx.squaredNorm() / e.p_vals[j] * dx;
      const Vector te = grad.dot(dx) * dir;
      const Vector tg = (t.f(e.x.row(static_cast<Eigen::Index>(j)).transpose()) - t.f(x_star) - grad.dot(dx)) * dir;
      s_exact += te;
      q_exact += te.cwiseProduct(te);
      s_gap += tg;
      q_gap += tg.cwiseProduct(tg);
    }
    const auto se = [count](const Vector& s, const Vector& q) {
      const Vector mean = s / count;
      return ((q / count - mean.cwiseProduct(mean)) / (count - 1.0)).cwiseSqrt().eval();
    };
    const Vector sd_exact = se(s_exact, q_exact), sd_gap = se(s_gap, q_gap);
    for (int k = 0; k < d; ++k) ok = ok && std::abs(exact[k] - grad[k]) <= 4.0 * sd_exact[k];
    const double bias = (fd - exact).norm(), bound = t.smoothness_l * eta * d + 4.0 * sd_gap.norm();
    ok = ok && bias <= bound;
    detail += fmt("d=%d |mean-grad|=%.4f (4sd %.4f) fd-bias=%.4f<=%.4f; ", d, (exact - grad).norm(),
                  4.0 * sd_exact.norm(), bias, bound);
  }
  return {ok, detail};
}

Outcome criterion2() {
  const std::vector<std::size_t> counts{1000, 10000, 100000, 1000000};
  int qualifying = 0;
  double min_ratio = 1e300, worst_spread = 0.0;
  std::string spreads;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    BlowupProbeOptions o;
    o.seed = seed;
    const auto est = blowup_probe(counts, o);
    const double ratio = est.back() / est.front();
    o.ablate = true;
    const auto ctl = blowup_probe(counts, o);
    const double spread = *std::max_element(ctl.begin(), ctl.end()) / *std::min_element(ctl.begin(), ctl.end());
    min_ratio = std::min(min_ratio, ratio);
    worst_spread = std::max(worst_spread, spread);
    if (nondecreasing_steps(est) >= 3 && ratio > 10.0 && spread <= 2.0) ++qualifying;
  }
  return {qualifying >= 8, fmt("%d/10 seeds with >=3 nondecreasing steps, final/first > 10 and ablated max/min <= 2 "
                               "(min ratio %.3g, worst ablated max/min %.2f)",
                               qualifying, min_ratio, worst_spread)};
}

bool same_positions(const Trajectory& a, const Trajectory& b) {
  if (a.snapshots.size() != b.snapshots.size()) return false;
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
    if (a.snapshots[s].size() != b.snapshots[s].size()) return false;
    if (std::memcmp(a.snapshots[s].data(), b.snapshots[s].data(), sizeof(double) * a.snapshots[s].size()) != 0)
      return false;
  }
  return true;
}

Outcome criterion3() {
  SamplerConfig c = config_file("example1.json").params;
  c.n = 500;
  c.m_iters = 50;
  RunOptions o;
  o.extra_snapshots.resize(51);
  for (std::size_t m = 0; m <= 50; ++m) o.extra_snapshots[m] = m;
  const auto t = example1_target();
  const auto q = example1_initial();
  const auto lmc = lmc_run(c, t, q, o);
  SamplerConfig full = c;
  full.n_star = c.n;
  SamplerConfig zero = c;
  zero.r1 = 0.0;
  const bool a = same_positions(cenlmc_run(full, t, q, o), lmc);
  const bool b = same_positions(cenlmc_run(zero, t, q, o), lmc);
  return {a && b, fmt("N*=N bit-identical: %s, R1=0 bit-identical: %s", a ? "yes" : "no", b ? "yes" : "no")};
}

std::string coupled_dir_1;

Outcome criterion4() {
  const ExperimentConfig c = config_file("example1_coupled.json");
  coupled_dir_1 = work_dir("coupled_t1").string();
  run_experiment(c, coupled_dir_1, 1);
  const auto col = csv_column(slurp(fs::path(coupled_dir_1) / "diagnostics.csv"), 3);
  // Example 1 per-coordinate sd: 1 and 2
  const double threshold = 3.0 * 1.0;
  double worst = 0.0;
  bool finite = !col.empty();
  for (const auto& cell : col) {
    const double v = std::stod(cell);
    finite = finite && std::isfinite(v);
    worst = std::max(worst, v);
  }
  return {finite && worst <= threshold,
          fmt("max mean|x-z| over m<=%zu: %.4f (threshold %.1f)", c.params.m_iters, worst, threshold)};
}

Outcome ratio_checks(const char* file, std::string& detail) {
  ExperimentConfig c = config_file(file);
  c.params.m_iters = 50;
  c.checkpoints.clear();
  const std::vector<std::size_t> n_list{2000, 6000, 10000};
  const std::string csv = ratio_sweep_csv(c, n_list, 1);
  std::vector<double> r_small, r_large;
  for (const auto& s : csv_column(csv, 1)) r_small.push_back(std::stod(s));
  for (const auto& s : csv_column(csv, 3)) r_large.push_back(std::stod(s));
  bool ok = r_large.back() < r_small.back();
  double worst_rise = -1.0;
  for (std::size_t m = 10; m < r_large.size(); ++m) {
    // r[m] is R_{m+1}
    const double rise = r_large[m] - r_large[m - 1];
    worst_rise = std::max(worst_rise, rise * static_cast<double>(m + 1));
    ok = ok && rise <= 1.0 / static_cast<double>(m + 1) + 1e-12;
  }
  detail += fmt("%s: R_50(2e3)=%.4f R_50(1e4)=%.4f, max rise after m=10 %.3f x 1/(m+1); ", c.target.c_str(),
                r_small.back(), r_large.back(), worst_rise);
  return {ok, ""};
}

Outcome criterion5() {
  std::string detail;
  const bool a = ratio_checks("example1.json", detail).pass;
  const bool b = ratio_checks("example2.json", detail).pass;
  return {a && b, detail};
}

Outcome criterion6() {
  const ExperimentConfig c = resolve_config(config_file("example1.json"));
  const auto t = example1_target();
  const auto q = example1_initial();
  const Matrix ref = direct_samples(t, c.params.n, c.params.seed, StreamDomain::reference);
  const SlicedW1Reference sliced(ref, 64, RngStream(c.params.seed, {StreamDomain::projection, 0, 0}));
  const double w_c = sliced.distance(cenlmc_run(c.params, t, q).final_positions());
  const double w_l = sliced.distance(lmc_run(c.params, t, q).final_positions());
  constexpr double kAbsolute = 0.1;
  const bool part1 = w_c <= 2.0 * w_l && w_c <= kAbsolute && w_l <= kAbsolute;

  const ExperimentConfig c1 = resolve_config(config_file("quadratic_1d.json"));
  const auto t1 = quadratic_target(1);
  const Matrix x1 = cenlmc_run(c1.params, t1, make_initial(c1.initial, 1)).final_positions();
  const Matrix r1 = direct_samples(t1, c1.params.n, c1.params.seed, StreamDomain::reference);
  const double w_1d = w1_1d(std::span<const double>(x1.data(), x1.size()), std::span<const double>(r1.data(), r1.size()));
  const bool part2 = w_1d <= 0.1;
  return {part1 && part2,
          fmt("example1 sliced W1: cenlmc %.4f, lmc %.4f (need cenlmc <= 2x lmc = %.4f, both <= %.2f): %s; "
              "1D W1 %.4f <= 0.1: %s",
              w_c, w_l, 2.0 * w_l, kAbsolute, part1 ? "ok" : "not met", w_1d, part2 ? "ok" : "not met")};
}

Outcome criterion7() {
  const double c1 = c_d(3.0 * std::sqrt(5.0) / 10.0, 1);
  const double oracle = std::erfc(3.0 * std::sqrt(5.0) / 20.0);
  bool ok = std::abs(c1 - 0.6354) <= 1e-3 && std::abs(c1 - oracle) <= 1e-9;
  double worst_zero = 0.0, worst_root = 0.0;
  for (int d = 1; d <= 10; ++d) {
    worst_zero = std::max(worst_zero, std::abs(c_d(0.0, d) - 1.0));
    for (double alpha : {0.05, 0.1, 0.3, 0.6, 1.0}) {
      CalibratorInput in;
      in.alpha = alpha;
      in.d = d;
      const auto r = calibrate(in);
      worst_root = std::max(worst_root, std::abs(c_d(r.r1, d) - alpha / 3.0));
    }
  }
  ok = ok && worst_zero <= 1e-9 && worst_root <= 1e-6;
  return {ok, fmt("C_1(3sqrt5/10)=%.6f (erfc oracle %.6f), max|C_d(0)-1|=%.1e, max|C_d(R1*)-alpha/3|=%.1e", c1, oracle,
                  worst_zero, worst_root)};
}

Outcome criterion8() {
  const double eta[] = {0.2};
  const double p = neighbor_scarcity_experiment(quadratic_target(3), 1.0, eta, 2000, 1)[0];
  const double bound = scarcity_bound(1.0, std::pow(2.0 * std::numbers::pi, -1.5));
  const double limit = bound + 3.0 * std::sqrt(0.06 * 0.94 / 2000.0);
  return {p <= limit, fmt("empirical %.4f <= %.4f (bound %.4f + 3 sigma)", p, limit, bound)};
}

Outcome criterion9() {
  const auto t = quadratic_target(1);
  RngStream stream(1, {StreamDomain::mala_accept, 0, 0});
  Vector x = Vector::Zero(1);
  double sum = 0.0, sum_sq = 0.0;
  std::size_t accepted = 0;
  constexpr int kSteps = 1000000;
  for (int k = 0; k < kSteps; ++k) {
    const auto r = mala_step(x, t, 0.1, stream);
    accepted += r.accepted;
    x = r.x;
    sum += x[0];
    sum_sq += x[0] * x[0];
  }
  const double mean = sum / kSteps, var = sum_sq / kSteps - mean * mean;
  return {std::abs(var - 1.0) <= 0.02, fmt("variance %.4f, acceptance %.4f", var, accepted / double(kSteps))};
}

Outcome criterion10() {
  const ExperimentConfig c = config_file("example1_coupled.json");
  const fs::path again = work_dir("coupled_t4");
  run_experiment(c, again, 4);
  bool ok = !coupled_dir_1.empty();
  std::string mismatched;
  for (const char* f : {"samples.csv", "diagnostics.csv"}) {
    if (slurp(fs::path(coupled_dir_1) / f) != slurp(again / f)) {
      ok = false;
      mismatched += std::string(" ") + f;
    }
  }
  ExperimentConfig sweep = config_file("example1.json");
  sweep.params.m_iters = 10;
  sweep.checkpoints.clear();
  const std::vector<std::size_t> n_list{500, 1000};
  const bool sweep_same = ratio_sweep_csv(sweep, n_list, 1) == ratio_sweep_csv(sweep, n_list, 4);
  const std::vector<std::size_t> counts{1000, 10000, 100000, 1000000};
  const bool probe_same = instability_csv(counts, 3, false) == instability_csv(counts, 3, false);
  ok = ok && sweep_same && probe_same;
  return {ok, fmt("coupled run 1 vs 4 threads%s%s; ratio sweep %s; instability %s",
                  mismatched.empty() ? " identical" : " differ:", mismatched.c_str(), sweep_same ? "identical" : "differ",
                  probe_same ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"estimator consistency", criterion1}, {"EnLMC instability", criterion2},
      {"degeneracy identity", criterion3},   {"coupling boundedness", criterion4},
      {"gradient savings", criterion5},      {"sampling accuracy", criterion6},
      {"calibrator correctness", criterion7}, {"neighbor scarcity", criterion8},
      {"MALA exactness", criterion9},        {"determinism", criterion10},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %zu (%s): %s  [%.1f s] %s\n", k + 1, criteria[k].first, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
