#include "enlmc/experiment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "json_fields.hpp"

#include "enlmc/diagnostics.hpp"
#include "enlmc/grad_estimators.hpp"
#include "enlmc/samplers.hpp"
#include "enlmc/targets.hpp"

namespace enlmc {

using ordered_json = nlohmann::ordered_json;
using detail::field_error;
using detail::FieldReader;
using detail::parse_json;

namespace {

constexpr std::array<std::pair<SamplerKind, std::string_view>, 5> kSamplerNames{{
    {SamplerKind::lmc, "lmc"},
    {SamplerKind::mala, "mala"},
    {SamplerKind::enlmc, "enlmc"},
    {SamplerKind::cenlmc, "cenlmc"},
    {SamplerKind::coupled, "coupled"},
}};

void check_positive(double value, const std::string& field) {
  if (!(value > 0.0) || !std::isfinite(value)) field_error(field, "must be a positive finite number");
}

void validate(const ExperimentConfig& c) {
  const auto& p = c.params;
  check_positive(p.h, "params.h");
  check_positive(p.eta, "params.eta");
  check_positive(p.r2, "params.r2");
  if (!(p.r1 >= 0.0) || !std::isfinite(p.r1)) field_error("params.r1", "must be a non-negative finite number");
  if (!std::isfinite(p.m_f)) field_error("params.m_f", "must be finite");
  if (p.n < 2) field_error("params.n", "needs at least 2 particles");
  if (p.m_iters < 1) field_error("params.m_iters", "must be at least 1");
  if (p.n_star < 1) field_error("params.n_star", "must be at least 1");
  if (!(p.rho > 0.0 && p.rho < 1.0)) field_error("params.rho", "must lie in (0, 1)");
  if (c.dim < 0) field_error("dim", "must be non-negative");
  if (c.w1_projections < 1) field_error("w1_projections", "must be at least 1");
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k > 0) out += ',';
    out += cells[k];
  }
  out += '\n';
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text, RunSummary& summary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
  summary.files.push_back(path);
}

std::string default_initial(const TargetDensity& target) {
  switch (target.builtin) {
    case BuiltinTarget::example1:
      return "example1";
    case BuiltinTarget::example2:
      return "example2";
    default:
      return "standard_normal";
  }
}

std::string fixed2(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 2);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  std::string s(buf.data(), end);
  if (s == "-0.00") s = "0.00";
  return s;
}

}  // namespace

std::string_view to_string(SamplerKind kind) {
  for (const auto& [k, name] : kSamplerNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kSamplerNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown sampler '" + std::string(name) + "' (lmc, mala, enlmc, cenlmc, coupled)");
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), end);
}

ExperimentConfig parse_config(std::string_view text) {
  const nlohmann::json root = parse_json(text);
  FieldReader r(root, "");
  ExperimentConfig c;

  if (r.has("schema_version")) {
    int version = 0;
    r.read("schema_version", version);
    if (version != kConfigSchemaVersion) field_error("schema_version", "unsupported version " + std::to_string(version));
  }
  if (!r.has("target")) field_error("target", "missing required field");
  r.read("target", c.target);
  if (c.target.empty()) field_error("target", "must not be empty");
  r.read("dim", c.dim);
  r.read("initial", c.initial);
  if (r.has("sampler")) {
    std::string name;
    r.read("sampler", name);
    try {
      c.sampler = sampler_kind_from_string(name);
    } catch (const std::invalid_argument& e) {
      field_error("sampler", e.what());
    }
  }
  if (r.has("params")) {
    FieldReader p(r.at("params"), "params");
    p.read("h", c.params.h);
    p.read("n", c.params.n);
    p.read("eta", c.params.eta);
    p.read("r1", c.params.r1);
    p.read("r2", c.params.r2);
    p.read("n_star", c.params.n_star);
    p.read("m_f", c.params.m_f);
    p.read("m_iters", c.params.m_iters);
    p.read("seed", c.params.seed);
    p.read("rho", c.params.rho);
    p.reject_unknown();
  }
  if (r.has("diagnostics")) {
    FieldReader d(r.at("diagnostics"), "diagnostics");
    d.read("ratio", c.diagnostics.ratio);
    d.read("w1", c.diagnostics.w1);
    d.read("coupling", c.diagnostics.coupling);
    d.read("moments", c.diagnostics.moments);
    d.reject_unknown();
  }
  r.read("w1_projections", c.w1_projections);
  if (r.has("checkpoints")) {
    const auto& list = r.at("checkpoints");
    if (!list.is_array()) field_error("checkpoints", "expected an array of iterations");
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (!list[k].is_number_unsigned()) field_error("checkpoints[" + std::to_string(k) + "]", "expected a non-negative integer");
      c.checkpoints.push_back(list[k].get<std::size_t>());
    }
  }
  r.read("scatter", c.scatter);
  r.read("output_dir", c.output_dir);
  r.reject_unknown();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["target"] = c.target;
  j["dim"] = c.dim;
  j["initial"] = c.initial;
  j["sampler"] = std::string(to_string(c.sampler));
  const auto& p = c.params;
  j["params"] = ordered_json{{"h", p.h},           {"n", p.n},         {"eta", p.eta},
                             {"r1", p.r1},         {"r2", p.r2},       {"n_star", p.n_star},
                             {"m_f", p.m_f},       {"m_iters", p.m_iters}, {"seed", p.seed},
                             {"rho", p.rho}};
  j["diagnostics"] = ordered_json{{"ratio", c.diagnostics.ratio},
                                  {"w1", c.diagnostics.w1},
                                  {"coupling", c.diagnostics.coupling},
                                  {"moments", c.diagnostics.moments}};
  j["w1_projections"] = c.w1_projections;
  j["checkpoints"] = c.checkpoints;
  j["scatter"] = c.scatter;
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& config) { return config_to_json(config).dump(2) + "\n"; }

ExperimentConfig resolve_config(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  const TargetDensity target = make_target(c.target, c.dim > 0 ? c.dim : 1);
  if (c.dim == 0) c.dim = target.dim;
  if (c.dim != target.dim) throw ConfigError("config field 'dim': target '" + c.target + "' is " + std::to_string(target.dim) + "-dimensional");
  if (c.initial.empty()) c.initial = default_initial(target);
  const InitialDistribution initial = make_initial(c.initial, c.dim);
  if (initial.dim != c.dim) throw ConfigError("config field 'initial': dimension does not match the target");
  const std::size_t m = c.params.m_iters;
  if (c.checkpoints.empty()) c.checkpoints = {0, m / 4, m / 2, 3 * m / 4, m};
  std::sort(c.checkpoints.begin(), c.checkpoints.end());
  c.checkpoints.erase(std::unique(c.checkpoints.begin(), c.checkpoints.end()), c.checkpoints.end());
  for (std::size_t it : c.checkpoints) {
    if (it > m) throw ConfigError("config field 'checkpoints': iteration " + std::to_string(it) + " exceeds m_iters");
  }
  return c;
}

void prepare_output_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw std::runtime_error("output path " + dir.string() + " is not a directory");
    if (!fs::is_empty(dir)) throw std::runtime_error("output directory " + dir.string() + " is not empty");
    return;
  }
  fs::create_directories(dir);
}

RunSummary run_experiment(const ExperimentConfig& raw, const std::filesystem::path& out_dir, unsigned threads) {
  const ExperimentConfig c = resolve_config(raw);
  const TargetDensity target = make_target(c.target, c.dim);
  const InitialDistribution initial = make_initial(c.initial, c.dim);
  RunSummary summary;
  summary.warnings = precondition_warnings(c.params, target);
  prepare_output_dir(out_dir);

  RunOptions options;
  options.threads = std::max(1u, threads);
  options.extra_snapshots = c.checkpoints;

  Trajectory traj;
  std::optional<Trajectory> coupled_lmc;
  switch (c.sampler) {
    case SamplerKind::lmc:
      traj = lmc_run(c.params, target, initial, options);
      break;
    case SamplerKind::mala:
      traj = mala_run(c.params, target, initial, options);
      break;
    case SamplerKind::enlmc:
      traj = enlmc_run(c.params, target, initial, options);
      break;
    case SamplerKind::cenlmc:
      traj = cenlmc_run(c.params, target, initial, options);
      break;
    case SamplerKind::coupled: {
      auto pair = coupled_run(c.params, target, initial, options);
      traj = std::move(pair.x);
      coupled_lmc = std::move(pair.z);
      break;
    }
  }
  const int d = c.dim;

  // samples.csv
  {
    std::string text;
    std::vector<std::string> header{"iteration", "particle"};
    for (int k = 1; k <= d; ++k) header.push_back("x" + std::to_string(k));
    text += csv_join(header);
    for (std::size_t m : c.checkpoints) {
      const Matrix& x = traj.snapshot_at(m);
      const std::string it = std::to_string(m);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        text += it;
        text += ',';
        text += std::to_string(i);
        for (int k = 0; k < d; ++k) {
          text += ',';
          text += format_double(x(i, k));
        }
        text += '\n';
      }
    }
    write_file(out_dir / "samples.csv", text, summary);
  }

  // diagnostics.csv
  {
    const std::vector<double> ratios = c.diagnostics.ratio ? ratio_series(traj) : std::vector<double>{};
    std::optional<Matrix> reference;
    std::optional<SlicedW1Reference> sliced;
    const bool w1_enabled = c.diagnostics.w1 && target.builtin != BuiltinTarget::none;
    if (w1_enabled) {
      reference = direct_samples(target, c.params.n, c.params.seed, StreamDomain::reference);
      if (d >= 2) sliced.emplace(*reference, c.w1_projections, RngStream(c.params.seed, {StreamDomain::projection, 0, 0}));
    }
    std::vector<double> coupling;
    if (coupled_lmc && c.diagnostics.coupling) coupling = coupling_distance(traj, *coupled_lmc);

    std::vector<std::string> header{"iteration", "ratio", "w1", "coupling"};
    for (int k = 1; k <= d; ++k) header.push_back("mean_" + std::to_string(k));
    for (int a = 1; a <= d; ++a) {
      for (int b = a; b <= d; ++b) header.push_back("cov_" + std::to_string(a) + "_" + std::to_string(b));
    }
    std::string text = csv_join(header);
    for (std::size_t s = 0; s < traj.snapshot_iterations.size(); ++s) {
      const std::size_t m = traj.snapshot_iterations[s];
      const Matrix& x = traj.snapshots[s];
      std::vector<std::string> row{std::to_string(m)};
      row.push_back(!ratios.empty() && m >= 1 ? format_double(ratios[m - 1]) : "");
      if (w1_enabled) {
        if (d == 1) {
          const Vector a = x.col(0), b = reference->col(0);
          row.push_back(format_double(w1_1d(std::span<const double>(a.data(), a.size()),
                                            std::span<const double>(b.data(), b.size()))));
        } else {
          row.push_back(format_double(sliced->distance(x)));
        }
      } else {
        row.push_back("");
      }
      row.push_back(coupling.empty() ? "" : format_double(coupling[s]));
      if (c.diagnostics.moments) {
        const Moments mom = moment_summary(x);
        for (int k = 0; k < d; ++k) row.push_back(format_double(mom.mean[k]));
        for (int a = 0; a < d; ++a) {
          for (int b = a; b < d; ++b) row.push_back(format_double(mom.covariance(a, b)));
        }
      } else {
        row.resize(row.size() + static_cast<std::size_t>(d + d * (d + 1) / 2));
      }
      text += csv_join(row);
    }
    write_file(out_dir / "diagnostics.csv", text, summary);
  }

  // scatter plots
  if (c.scatter && d == 2) {
    for (std::size_t m : c.checkpoints) {
      write_file(out_dir / ("scatter_" + std::to_string(m) + ".svg"), render_scatter(traj.snapshot_at(m), c.target, m),
                 summary);
    }
  }

  // run_meta.json
  {
    ordered_json meta;
    meta["tool"] = "ensemble-langevin";
    meta["version"] = ENLMC_VERSION;
    meta["versions"] = ordered_json{
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                      std::to_string(BOOST_VERSION % 100)},
        {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                     "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
    };
    meta["schemas"] = ordered_json{{"config", kConfigSchemaVersion},
                                   {"samples_csv", kSamplesCsvVersion},
                                   {"diagnostics_csv", kDiagnosticsCsvVersion}};
    meta["config"] = config_to_json(c);
    meta["target"] = ordered_json{{"name", target.name}, {"f_star", target.f_star}, {"L", target.smoothness_l}};
    meta["initial"] = initial.description;
    ordered_json reasons = ordered_json::object();
    for (std::size_t r = 0; r < kFallbackReasonCount; ++r) {
      std::size_t total = 0;
      for (const auto& counts : traj.reason_counts) total += counts[r];
      reasons[std::string(to_string(static_cast<FallbackReason>(r)))] = total;
    }
    meta["force_reasons"] = reasons;
    meta["clamped_forces"] = traj.clamped_forces;
    if (c.sampler == SamplerKind::mala) meta["mala_accepted"] = traj.mala_accepted;
    meta["snapshot_iterations"] = traj.snapshot_iterations;
    meta["warnings"] = summary.warnings;
    write_file(out_dir / "run_meta.json", meta.dump(2) + "\n", summary);
  }
  return summary;
}

std::string instability_csv(std::span<const std::size_t> counts, std::uint64_t seed, bool ablate) {
  BlowupProbeOptions options;
  options.seed = seed;
  options.ablate = ablate;
  const std::vector<double> estimates = blowup_probe(counts, options);
  std::string text = "samples,second_moment\n";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    text += std::to_string(counts[k]) + "," + format_double(estimates[k]) + "\n";
  }
  return text;
}

std::string ratio_sweep_csv(const ExperimentConfig& raw, std::span<const std::size_t> n_list, unsigned threads) {
  if (n_list.empty()) throw std::invalid_argument("ratio sweep needs at least one particle count");
  const ExperimentConfig c = resolve_config(raw);
  const TargetDensity target = make_target(c.target, c.dim);
  const InitialDistribution initial = make_initial(c.initial, c.dim);
  RunOptions options;
  options.threads = std::max(1u, threads);
  std::vector<std::vector<double>> curves;
  std::vector<std::string> header{"iteration"};
  for (std::size_t n : n_list) {
    SamplerConfig p = c.params;
    p.n = n;
    curves.push_back(ratio_series(cenlmc_run(p, target, initial, options)));
    header.push_back("R_" + std::to_string(n));
  }
  std::string text = csv_join(header);
  for (std::size_t m = 1; m <= c.params.m_iters; ++m) {
    std::vector<std::string> row{std::to_string(m)};
    for (const auto& curve : curves) row.push_back(format_double(curve[m - 1]));
    text += csv_join(row);
  }
  return text;
}

PlotWindow plot_window(std::string_view target) {
  if (target == "example1") return {-4.0, 4.0, -8.0, 8.0};
  if (target == "example2") return {-8.0, 8.0, -4.0, 4.0};
  return {-4.0, 4.0, -4.0, 4.0};
}

std::string render_scatter(const Matrix& points, std::string_view target, std::size_t iteration) {
  if (points.cols() != 2) throw std::invalid_argument("scatter plots need 2-dimensional points");
  constexpr double kSize = 480.0, kMargin = 40.0, kPlot = kSize - 2.0 * kMargin;
  const PlotWindow w = plot_window(target);
  const auto sx = [&](double x) { return kMargin + (x - w.x_min) / (w.x_max - w.x_min) * kPlot; };
  const auto sy = [&](double y) { return kMargin + (w.y_max - y) / (w.y_max - w.y_min) * kPlot; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"480\" height=\"480\" fill=\"white\"/>\n";
  s += "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  s += "<rect x=\"40\" y=\"40\" width=\"400\" height=\"400\"/>\n";
  if (w.x_min < 0.0 && w.x_max > 0.0) s += "<line x1=\"" + fixed2(sx(0.0)) + "\" y1=\"40\" x2=\"" + fixed2(sx(0.0)) + "\" y2=\"440\" stroke=\"#999\"/>\n";
  if (w.y_min < 0.0 && w.y_max > 0.0) s += "<line x1=\"40\" y1=\"" + fixed2(sy(0.0)) + "\" x2=\"440\" y2=\"" + fixed2(sy(0.0)) + "\" stroke=\"#999\"/>\n";
  s += "</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  s += "<text x=\"40\" y=\"456\" text-anchor=\"middle\">" + fixed2(w.x_min) + "</text>\n";
  s += "<text x=\"440\" y=\"456\" text-anchor=\"middle\">" + fixed2(w.x_max) + "</text>\n";
  s += "<text x=\"36\" y=\"444\" text-anchor=\"end\">" + fixed2(w.y_min) + "</text>\n";
  s += "<text x=\"36\" y=\"44\" text-anchor=\"end\">" + fixed2(w.y_max) + "</text>\n";
  s += "<text x=\"240\" y=\"24\" text-anchor=\"middle\">" + std::string(target) + ", m = " + std::to_string(iteration) +
       "</text>\n";
  s += "</g>\n";
  s += "<g fill=\"#1f4e9c\" fill-opacity=\"0.35\">\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double x = points(i, 0), y = points(i, 1);
    if (!(x >= w.x_min && x <= w.x_max && y >= w.y_min && y <= w.y_max)) continue;
    s += "<circle cx=\"" + fixed2(sx(x)) + "\" cy=\"" + fixed2(sy(y)) + "\" r=\"1.2\"/>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

Matrix read_samples_csv(const std::filesystem::path& path, std::size_t iteration) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path.string() + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "iteration" || header[1] != "particle") {
    throw std::invalid_argument(path.string() + ": not a samples file (header '" + line + "')");
  }
  const std::size_t d = header.size() - 2;
  std::vector<std::pair<std::size_t, Vector>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.emplace_back(line.data() + start, (comma == std::string::npos ? line.size() : comma) - start);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != header.size()) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " columns");
    }
    auto parse_uint = [&](std::string_view cell) {
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": bad integer '" + std::string(cell) + "'");
      }
      return v;
    };
    if (parse_uint(cells[0]) != iteration) continue;
    const std::size_t particle = parse_uint(cells[1]);
    Vector x(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      const std::string_view cell = cells[k + 2];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": bad number '" + std::string(cell) + "'");
      }
      x[static_cast<Eigen::Index>(k)] = v;
    }
    rows.emplace_back(particle, std::move(x));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = rows[r].second.transpose();
  return out;
}

}  // namespace enlmc
