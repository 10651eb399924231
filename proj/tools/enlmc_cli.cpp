// Command-line front end: run, calibrate, instability, ratio-sweep, render.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "enlmc/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kThreadsEnv = "ENSEMBLE_LANGEVIN_THREADS";

unsigned default_threads() {
  if (const char* env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
    std::size_t used = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(env, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != std::string(env).size() || value == 0) {
      throw std::runtime_error(std::string(kThreadsEnv) + " must be a positive integer, got '" + env + "'");
    }
    return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Writes `text` to <out>/<name>, or to stdout when no directory was given.
void emit(const std::string& out_dir, const std::string& name, const std::string& text) {
  if (out_dir.empty()) {
    std::cout << text;
    return;
  }
  enlmc::prepare_output_dir(out_dir);
  write_text(fs::path(out_dir) / name, text);
  std::cerr << "wrote " << (fs::path(out_dir) / name).string() << "\n";
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size() || item[0] == '-') throw CLI::ValidationError("--n-list", "bad entry '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError("--n-list", "empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Langevin Monte Carlo experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, n_list_text, samples_path, target_name;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool ablate = false;
  std::size_t iteration = 0;

  auto* run = app.add_subcommand("run", "run a configured sampler and write samples, diagnostics and plots");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--seed", seed, "override params.seed");
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  run->add_option("--threads", threads, "worker threads (default: $ENSEMBLE_LANGEVIN_THREADS or all cores)");

  auto* cal = app.add_subcommand("calibrate", "suggest parameters for a target accuracy and gradient budget");
  cal->add_option("--config", config_path, "calibrator input (JSON)")->required();
  cal->add_option("--seed", seed, "override seed for the p(R2) estimate");
  cal->add_option("--out", out_dir, "directory for calibration.json (default: stdout)");

  auto* inst = app.add_subcommand("instability", "second-moment blow-up probe of the unconstrained estimator");
  inst->add_option("--seed", seed, "probe seed (default 1)");
  inst->add_option("--out", out_dir, "directory for instability.csv (default: stdout)");
  inst->add_flag("--ablate", ablate, "replace the 1/p weight by 1");

  auto* sweep = app.add_subcommand("ratio-sweep", "gradient-call ratio curves for several particle counts");
  sweep->add_option("--config", config_path, "experiment config (JSON)")->required();
  sweep->add_option("--n-list", n_list_text, "comma-separated particle counts")->required();
  sweep->add_option("--seed", seed, "override params.seed");
  sweep->add_option("--out", out_dir, "directory for ratio_sweep.csv (default: stdout)");
  sweep->add_option("--threads", threads, "worker threads");

  auto* render = app.add_subcommand("render", "SVG scatter plot of one checkpoint in samples.csv");
  render->add_option("samples", samples_path, "samples.csv")->required();
  render->add_option("--iteration", iteration, "checkpoint iteration")->required();
  render->add_option("--target", target_name, "axis preset (default: from run_meta.json beside the samples)");
  render->add_option("--out", out_dir, "directory for scatter_<m>.svg (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  const bool seed_given = app.got_subcommand(run) ? run->count("--seed") > 0
                          : app.got_subcommand(cal) ? cal->count("--seed") > 0
                          : app.got_subcommand(sweep) ? sweep->count("--seed") > 0
                                                       : inst->count("--seed") > 0;
  try {
    if (threads == 0) threads = default_threads();

    if (app.got_subcommand(run)) {
      enlmc::ExperimentConfig config = enlmc::load_config(config_path);
      if (seed_given) config.params.seed = seed;
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (config.output_dir.empty()) throw std::runtime_error("no output directory: pass --out or set output_dir");
      const auto summary = enlmc::run_experiment(config, config.output_dir, threads);
      for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& f : summary.files) std::cerr << "wrote " << f.string() << "\n";
    } else if (app.got_subcommand(cal)) {
      enlmc::CalibratorInput input = enlmc::parse_calibrator_input(read_text(config_path));
      if (seed_given) input.seed = seed;
      emit(out_dir, "calibration.json", enlmc::calibration_json(input, enlmc::calibrate(input)));
    } else if (app.got_subcommand(inst)) {
      const std::vector<std::size_t> counts{1000, 10000, 100000, 1000000};
      emit(out_dir, "instability.csv", enlmc::instability_csv(counts, seed_given ? seed : 1, ablate));
    } else if (app.got_subcommand(sweep)) {
      enlmc::ExperimentConfig config = enlmc::load_config(config_path);
      if (seed_given) config.params.seed = seed;
      const auto n_list = parse_n_list(n_list_text);
      emit(out_dir, "ratio_sweep.csv", enlmc::ratio_sweep_csv(config, n_list, threads));
    } else if (app.got_subcommand(render)) {
      if (target_name.empty()) {
        const fs::path meta = fs::path(samples_path).parent_path() / "run_meta.json";
        if (fs::exists(meta)) {
          target_name = nlohmann::json::parse(read_text(meta)).at("config").at("target").get<std::string>();
        }
      }
      const enlmc::Matrix points = enlmc::read_samples_csv(samples_path, iteration);
      emit(out_dir, "scatter_" + std::to_string(iteration) + ".svg", enlmc::render_scatter(points, target_name, iteration));
    }
  } catch (const enlmc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
