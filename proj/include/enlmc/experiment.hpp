#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "enlmc/ensemble.hpp"
#include "enlmc/types.hpp"

namespace enlmc {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kSamplesCsvVersion = 1;
inline constexpr int kDiagnosticsCsvVersion = 1;

enum class SamplerKind { lmc, mala, enlmc, cenlmc, coupled };

std::string_view to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(std::string_view name);

struct DiagnosticsToggles {
  bool ratio = true;
  bool w1 = true;
  bool coupling = true;
  bool moments = true;

  friend bool operator==(const DiagnosticsToggles&, const DiagnosticsToggles&) = default;
};

struct ExperimentConfig {
  std::string target;
  int dim = 0;          // 0: the builtin's own dimension
  std::string initial;  // empty: the target's default initial distribution
  SamplerKind sampler = SamplerKind::cenlmc;
  SamplerConfig params;
  DiagnosticsToggles diagnostics;
  std::size_t w1_projections = 64;
  std::vector<std::size_t> checkpoints;  // empty: 0, M/4, M/2, 3M/4, M
  bool scatter = true;
  std::string output_dir;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Thrown for malformed or invalid configuration files. what() names the
/// line/column for syntax errors and the dotted field path otherwise.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

/// Target dimension, initial name and checkpoints with defaults filled in.
ExperimentConfig resolve_config(const ExperimentConfig& config);

/// Shortest round-trip decimal text ("nan", "inf", "-inf" for non-finite).
std::string format_double(double value);

struct RunSummary {
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
};

/// Runs the configured sampler and writes samples.csv, diagnostics.csv,
/// run_meta.json and (d = 2) scatter_<m>.svg into `out_dir`, which must be
/// empty or absent.
RunSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir, unsigned threads);

/// Throws std::runtime_error if `dir` exists and is not an empty directory;
/// creates it otherwise.
void prepare_output_dir(const std::filesystem::path& dir);

/// CSV text for the blow-up probe: "samples,second_moment".
std::string instability_csv(std::span<const std::size_t> counts, std::uint64_t seed, bool ablate);

/// CSV text "iteration,R_<n1>,R_<n2>,..." of constrained-sampler R_m curves.
std::string ratio_sweep_csv(const ExperimentConfig& config, std::span<const std::size_t> n_list, unsigned threads);

struct PlotWindow {
  double x_min, x_max, y_min, y_max;
};

/// Fixed axes per builtin target.
PlotWindow plot_window(std::string_view target);

/// Deterministic SVG scatter of 2D points. Throws std::invalid_argument if
/// points.cols() != 2.
std::string render_scatter(const Matrix& points, std::string_view target, std::size_t iteration);

/// Rows of samples.csv at one iteration. Throws std::invalid_argument for a
/// malformed file.
Matrix read_samples_csv(const std::filesystem::path& path, std::size_t iteration);

struct CalibratorInput {
  double alpha = 0.1;
  int d = 2;
  double kappa = 1.0;
  double mu = 1.0;
  double epsilon = 0.1;
  double rho = 0.5;
  double f_star = 0.0;
  std::optional<double> h;        // default: suggested h
  std::optional<double> r2;       // default: max(eta, 1)
  std::optional<std::size_t> n;   // particle count, for the R2 criterion
  std::optional<std::size_t> n_star;  // default: N/10
  std::string target;             // builtin name for the p(R2) estimate
  std::uint64_t seed = 1;
};

struct CalibrationResult {
  double eta = 0.0;
  double h = 0.0;
  double r1 = 0.0;
  double c_d_r1 = 0.0;
  double m_f = 0.0;
  double r2 = 0.0;
  double log10_n_star_min = 0.0;
  double corollary_log10_n_star = 0.0;
  double corollary_log10_m_f_excess = 0.0;  // log10((N*)^rho)
  std::optional<double> r2_p_lower;
  double r2_p_upper = 0.25;
  std::optional<double> r2_p_estimate;
  std::optional<double> r2_suggested;
  double iteration_coefficient = 0.0;  // m > coefficient * log(W1(q0, p) / eps)
  std::vector<std::string> notes;
};

/// Throws std::invalid_argument for invalid input and std::runtime_error if
/// C_d(R1) = alpha/3 has no root in [0, 20].
CalibrationResult calibrate(const CalibratorInput& input);

CalibratorInput parse_calibrator_input(std::string_view text);
std::string calibration_json(const CalibratorInput& input, const CalibrationResult& result);

/// Probability that two independent draws from the builtin target lie within
/// r of each other, estimated from `pairs` pairs.
double pair_within_probability(std::string_view target, int dim, double r, std::size_t pairs, std::uint64_t seed);

}  // namespace enlmc
