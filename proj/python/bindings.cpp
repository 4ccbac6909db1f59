#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qubitdyne/collision.hpp"
#include "qubitdyne/config.hpp"
#include "qubitdyne/experiment.hpp"
#include "qubitdyne/phase_est.hpp"
#include "qubitdyne/records.hpp"
#include "qubitdyne/refstats.hpp"
#include "qubitdyne/tomography.hpp"

namespace py = pybind11;
using namespace qubitdyne;

namespace {

CavityState state_of(const std::string& spec, int n_fock) {
  const auto s = StateSpec::parse(spec);
  return prepare_state(s, n_fock > 0 ? n_fock : s.default_n_fock());
}

ExperimentConfig config_of(const std::string& preset_name, const std::string& text, std::uint64_t seed) {
  ExperimentConfig base = preset_name.empty() ? ExperimentConfig{} : preset(preset_name);
  ExperimentConfig cfg = text.empty() ? base : parse_config(text, "config", base);
  if (seed != 0) cfg.seed = seed;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Qubit-collision homodyne and heterodyne detection simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<TruncationError>(m, "TruncationError", PyExc_ArithmeticError);

  m.def(
      "prepare_state", [](const std::string& spec, int n_fock) { return state_of(spec, n_fock).amps(); },
      py::arg("spec"), py::arg("n_fock") = 0, "Fock amplitudes of a state such as 'cat:2' or 'coherent:1+0.5i'.");
  m.def(
      "default_n_fock", [](const std::string& spec) { return StateSpec::parse(spec).default_n_fock(); },
      py::arg("spec"));
  m.def(
      "quadrature_pdf",
      [](const CVector& amps, double theta, const std::vector<double>& grid) {
        return quadrature_pdf(CavityState(amps), theta, grid);
      },
      py::arg("amps"), py::arg("theta"), py::arg("grid"));
  m.def(
      "wigner",
      [](const CVector& amps, const std::vector<double>& x, const std::vector<double>& p) {
        return wigner(DensityMatrix(CavityState(amps)), x, p);
      },
      py::arg("amps"), py::arg("x"), py::arg("p"));
  m.def(
      "fidelity", [](const CMatrix& rho, const CVector& psi) { return fidelity(DensityMatrix(rho), CavityState(psi)); },
      py::arg("rho"), py::arg("psi"));

  m.def(
      "measurement_kraus",
      [](double phi, double theta, int n_fock) {
        const auto k = measurement_kraus(phi, MeasurementBasis::for_quadrature(theta), n_fock);
        return py::make_tuple(k.first, k.second);
      },
      py::arg("phi"), py::arg("theta"), py::arg("n_fock"));
  m.def("collection_efficiency", &collection_efficiency, py::arg("phi"), py::arg("dt"), py::arg("t_step"),
        py::arg("kappa"));
  m.def(
      "filter_constant",
      [](double phi, double dt, int n_bit) { return filter_constant(phi, dt, n_bit).weights; }, py::arg("phi"),
      py::arg("dt") = 1e-6, py::arg("n_bit") = 200);

  m.def("preset_names", &preset_names);
  m.def(
      "preset_config", [](const std::string& name) { return serialize_config(preset(name)); }, py::arg("name"));
  m.def(
      "normalize_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
      py::arg("text"), "Parse and re-serialize a config, filling in defaults.");

  m.def(
      "simulate_homodyne",
      [](const std::string& preset_name, const std::string& config, std::uint64_t seed, int workers) {
        const auto cfg = config_of(preset_name, config, seed);
        HomodyneData d;
        {
          py::gil_scoped_release release;
          d = run_homodyne(cfg, run_angles(cfg), false, workers);
        }
        py::dict out;
        out["angles"] = d.angles;
        out["j"] = d.j;
        out["n_used"] = d.n_used;
        out["final_population"] = d.final_population;
        out["final_vacuum"] = d.final_vacuum;
        return out;
      },
      py::arg("preset") = "", py::arg("config") = "", py::arg("seed") = 0, py::arg("workers") = 0);
  m.def(
      "simulate_heterodyne",
      [](const std::string& preset_name, const std::string& config, std::uint64_t seed, int workers) {
        const auto cfg = config_of(preset_name, config, seed);
        py::gil_scoped_release release;
        return run_heterodyne(cfg, false, workers).j;
      },
      py::arg("preset") = "", py::arg("config") = "", py::arg("seed") = 0, py::arg("workers") = 0);

  m.def(
      "ks_homodyne",
      [](const std::vector<double>& samples, const std::string& spec, double theta, int n_fock) {
        return ks_statistic(samples, homodyne_reference(DensityMatrix(state_of(spec, n_fock)), theta));
      },
      py::arg("samples"), py::arg("spec"), py::arg("theta") = 0.0, py::arg("n_fock") = 0);

  m.def(
      "reconstruct",
      [](const std::vector<double>& angles, const std::vector<std::vector<double>>& samples, int n_fock, double eta,
         int max_iter) {
        TomographyDataset d;
        d.angles = angles;
        d.samples = samples;
        d.n_fock = n_fock;
        d.eta = eta;
        TomographyOptions o;
        o.max_iter = max_iter;
        ReconstructionResult r;
        {
          py::gil_scoped_release release;
          r = mle_reconstruct(d, o);
        }
        py::dict out;
        out["rho"] = r.rho.matrix();
        out["iterations"] = r.iterations;
        out["converged"] = r.converged;
        out["log_likelihood"] = r.log_likelihood;
        return out;
      },
      py::arg("angles"), py::arg("samples"), py::arg("n_fock") = 30, py::arg("eta") = 1.0, py::arg("max_iter") = 3000);

  m.def(
      "phase_estimation",
      [](const std::string& spec, int n_traj, int n_m, const std::string& mode, double epsilon, int n_fock,
         std::uint64_t seed, int workers) {
        PhaseEstConfig c;
        c.n_m = n_m;
        c.mode = parse_phase_est_mode(mode);
        c.epsilon = epsilon;
        const auto psi = state_of(spec, n_fock);
        std::vector<double> x;
        {
          py::gil_scoped_release release;
          for (const auto& e : run_pe_ensemble(psi, c, n_traj, seed, workers)) x.push_back(e.x_tilde);
        }
        return x;
      },
      py::arg("spec"), py::arg("n_traj"), py::arg("n_m") = 100, py::arg("mode") = "iterative",
      py::arg("epsilon") = 0.0, py::arg("n_fock") = 0, py::arg("seed") = 1, py::arg("workers") = 0);
}
