#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "enlmc/core_math.hpp"
#include "enlmc/diagnostics.hpp"
#include "enlmc/experiment.hpp"
#include "enlmc/samplers.hpp"
#include "enlmc/targets.hpp"

namespace py = pybind11;
using namespace enlmc;

namespace {

py::dict trajectory_dict(const Trajectory& t) {
  py::dict out;
  out["sampler"] = t.sampler;
  out["iterations"] = t.snapshot_iterations;
  py::list snaps;
  for (const auto& s : t.snapshots) snaps.append(py::cast(s));
  out["snapshots"] = snaps;
  py::array_t<std::uint8_t> flags({t.m_iters + 1, t.n});
  std::copy(t.true_gradient_flags.begin(), t.true_gradient_flags.end(), flags.mutable_data());
  out["true_gradient_flags"] = flags;
  out["ratio"] = ratio_series(t);
  out["max_force_norm"] = t.max_force_norm;
  out["clamped_forces"] = t.clamped_forces;
  out["mala_accepted"] = t.mala_accepted;
  return out;
}

py::object run_sampler(const std::string& sampler, const SamplerConfig& config, const std::string& target,
                       int dim, const std::string& initial, unsigned threads) {
  ExperimentConfig resolved;
  resolved.target = target;
  resolved.dim = dim;
  resolved.initial = initial;
  resolved.params = config;
  resolved = resolve_config(resolved);
  const TargetDensity t = make_target(resolved.target, resolved.dim);
  const InitialDistribution q = make_initial(resolved.initial, resolved.dim);
  RunOptions o;
  o.threads = threads;
  py::gil_scoped_release release;
  const SamplerKind kind = sampler_kind_from_string(sampler);
  if (kind == SamplerKind::coupled) {
    auto pair = coupled_run(config, t, q, o);
    py::gil_scoped_acquire acquire;
    py::dict out;
    out["x"] = trajectory_dict(pair.x);
    out["z"] = trajectory_dict(pair.z);
    out["coupling"] = coupling_distance(pair.x, pair.z);
    return std::move(out);
  }
  Trajectory tr;
  switch (kind) {
    case SamplerKind::lmc: tr = lmc_run(config, t, q, o); break;
    case SamplerKind::mala: tr = mala_run(config, t, q, o); break;
    case SamplerKind::enlmc: tr = enlmc_run(config, t, q, o); break;
    default: tr = cenlmc_run(config, t, q, o); break;
  }
  py::gil_scoped_acquire acquire;
  return trajectory_dict(tr);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of ensemble_langevin";
  m.attr("__version__") = ENLMC_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("h", &SamplerConfig::h)
      .def_readwrite("n", &SamplerConfig::n)
      .def_readwrite("eta", &SamplerConfig::eta)
      .def_readwrite("r1", &SamplerConfig::r1)
      .def_readwrite("r2", &SamplerConfig::r2)
      .def_readwrite("n_star", &SamplerConfig::n_star)
      .def_readwrite("m_f", &SamplerConfig::m_f)
      .def_readwrite("m_iters", &SamplerConfig::m_iters)
      .def_readwrite("seed", &SamplerConfig::seed)
      .def_readwrite("rho", &SamplerConfig::rho)
      .def("__eq__", [](const SamplerConfig& a, const SamplerConfig& b) { return a == b; })
      .def("__repr__", [](const SamplerConfig& c) {
        return "SamplerConfig(h=" + format_double(c.h) + ", n=" + std::to_string(c.n) + ", eta=" +
               format_double(c.eta) + ", m_iters=" + std::to_string(c.m_iters) + ")";
      });

  py::class_<TargetDensity>(m, "Target")
      .def_readonly("dim", &TargetDensity::dim)
      .def_readonly("name", &TargetDensity::name)
      .def_readonly("f_star", &TargetDensity::f_star)
      .def_readonly("smoothness_l", &TargetDensity::smoothness_l)
      .def("f", [](const TargetDensity& t, const Vector& x) { return t.f(x); })
      .def("grad_f", [](const TargetDensity& t, const Vector& x) { return t.grad_f(x); });

  m.def("make_target", &make_target, py::arg("name"), py::arg("dim") = 1);
  m.def("direct_samples",
        [](const std::string& name, int dim, std::size_t n, std::uint64_t seed) {
          return direct_samples(make_target(name, dim), n, seed);
        },
        py::arg("target"), py::arg("dim") = 1, py::arg("n"), py::arg("seed") = 1);

  m.def("sphere_surface", &sphere_surface, py::arg("d"));
  m.def("alpha_d", &alpha_d, py::arg("d"), py::arg("eta"));
  m.def("proposal_density", &proposal_density, py::arg("noise_norm_sq"), py::arg("h"), py::arg("d"));
  m.def("c_d", &c_d, py::arg("r1"), py::arg("d"));

  m.def("run_sampler", &run_sampler, py::arg("sampler"), py::arg("config"), py::arg("target"), py::arg("dim") = 0,
        py::arg("initial") = "", py::arg("threads") = 1,
        "Run lmc, mala, enlmc, cenlmc or coupled; returns snapshots, flags and per-iteration diagnostics.");

  m.def("gradient_call_ratio",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> flags, std::size_t m_iter) {
          if (flags.ndim() != 2) throw std::invalid_argument("flags must be (iterations, particles)");
          return gradient_call_ratio(std::span<const std::uint8_t>(flags.data(), flags.size()),
                                     static_cast<std::size_t>(flags.shape(1)), m_iter);
        },
        py::arg("flags"), py::arg("m"));
  m.def("w1_1d", [](const std::vector<double>& a, const std::vector<double>& b) { return w1_1d(a, b); });
  m.def("sliced_w1",
        [](const Matrix& a, const Matrix& b, std::size_t k, std::uint64_t seed) {
          return sliced_w1(a, b, k, RngStream(seed, {StreamDomain::projection, 0, 0}));
        },
        py::arg("a"), py::arg("b"), py::arg("k_projections") = 64, py::arg("seed") = 1);
  m.def("blowup_probe",
        [](const std::vector<std::size_t>& counts, std::uint64_t seed, bool ablate) {
          BlowupProbeOptions o;
          o.seed = seed;
          o.ablate = ablate;
          return blowup_probe(counts, o);
        },
        py::arg("counts"), py::arg("seed") = 1, py::arg("ablate") = false);
  m.def("neighbor_scarcity",
        [](const std::string& target, int dim, double c, const std::vector<double>& eta, std::size_t trials,
           std::uint64_t seed) { return neighbor_scarcity_experiment(make_target(target, dim), c, eta, trials, seed); },
        py::arg("target"), py::arg("dim"), py::arg("c"), py::arg("eta"), py::arg("trials"), py::arg("seed") = 1);

  m.def("calibrate_json", [](const std::string& text) {
    const CalibratorInput in = parse_calibrator_input(text);
    return calibration_json(in, calibrate(in));
  });
  m.def("run_experiment",
        [](const std::string& text, const std::string& out_dir, unsigned threads) {
          const ExperimentConfig c = parse_config(text);
          RunSummary s;
          {
            py::gil_scoped_release release;
            s = run_experiment(c, out_dir, threads);
          }
          std::vector<std::string> files;
          for (const auto& f : s.files) files.push_back(f.string());
          py::dict out;
          out["warnings"] = s.warnings;
          out["files"] = files;
          return out;
        },
        py::arg("config"), py::arg("out_dir"), py::arg("threads") = 1);
}
