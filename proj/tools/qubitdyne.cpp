// qubitdyne command-line front end.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qubitdyne/config.hpp"
#include "qubitdyne/diagnostics.hpp"
#include "qubitdyne/experiment.hpp"
#include "qubitdyne/phase_est.hpp"
#include "qubitdyne/refstats.hpp"
#include "qubitdyne/tomography.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace qubitdyne;

namespace {

struct Common {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string out;
};

ExperimentConfig resolve_config(const Common& opt) {
  ExperimentConfig cfg = opt.preset_name.empty() ? ExperimentConfig{} : preset(opt.preset_name);
  if (!opt.config_path.empty()) cfg = load_config(opt.config_path, cfg);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.out.empty()) cfg.out_dir = opt.out;
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const ExperimentConfig& cfg) {
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write '" + p.string() + "'");
  return os;
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg, double wall,
                    const std::vector<std::string>& outputs, const json& extra = json::object()) {
  json m;
  m["tool"] = "qubitdyne";
  m["version"] = library_version();
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["config"] = serialize_config(cfg);
  m["wall_time_s"] = wall;
  m["outputs"] = outputs;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  const bool derived = command == "analyze" || command == "reconstruct";
  write_json(dir / (derived ? command + "_manifest.json" : std::string("manifest.json")), m);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string bit_string(const MeasurementRecord& r) {
  std::string s(r.size(), '0');
  for (std::size_t i = 0; i < r.size(); ++i) s[i] = r.outcomes[i] > 0 ? '1' : '0';
  return s;
}

std::string basis_string(const MeasurementRecord& r) {
  std::string s(r.size(), 'X');
  for (std::size_t i = 0; i < r.size(); ++i) s[i] = r.bases[i].label();
  return s;
}

fs::path dataset_path(const ExperimentConfig& cfg) {
  return cfg.input.empty() ? fs::path(cfg.out_dir) / "j_values.csv" : fs::path(cfg.input);
}

void write_histogram_csv(const fs::path& p, const Histogram& h) {
  auto os = open_out(p);
  os << "lo,hi,density,count\n";
  os.precision(12);
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    os << h.edges[k] << ',' << h.edges[k + 1] << ',' << h.density[k] << ',' << h.counts[k] << '\n';
}

void write_histogram2d_csv(const fs::path& p, const Histogram2D& h) {
  auto os = open_out(p);
  os << "x_lo,x_hi,y_lo,y_hi,density,count\n";
  os.precision(12);
  const std::size_t n = h.x_edges.size() - 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      os << h.x_edges[i] << ',' << h.x_edges[i + 1] << ',' << h.y_edges[j] << ',' << h.y_edges[j + 1] << ','
         << h.density[i * n + j] << ',' << h.counts[i * n + j] << '\n';
}

json moments_json(const Moments& m) {
  return {{"n", m.n}, {"mean", m.mean}, {"variance", m.variance}, {"std_error", m.std_error}};
}

// --- subcommands ---------------------------------------------------------

int cmd_phase_est(const ExperimentConfig& cfg, int workers) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = prepare_out(cfg);
  const int nf = cfg.pe_n_fock > 0 ? cfg.pe_n_fock : cfg.resolved_n_fock();
  const CavityState psi = prepare_state(cfg.state, nf);
  PhaseEstConfig pe;
  pe.mode = cfg.pe_mode;
  pe.n_m = cfg.pe_n_m;
  pe.theta = cfg.theta;
  pe.conv = cfg.conv();
  pe.epsilon = cfg.pe_epsilon > 0.0 ? cfg.pe_epsilon : default_epsilon(DensityMatrix(psi), pe.conv);
  const auto runs = run_pe_ensemble(psi, pe, cfg.n_traj, cfg.seed, workers);
  {
    auto os = open_out(dir / "phase_est.csv");
    write_phase_est_csv(os, runs);
  }
  json summary;
  summary["mode"] = to_string(pe.mode);
  summary["epsilon"] = pe.epsilon;
  summary["n_m"] = pe.n_m;
  summary["n_traj"] = cfg.n_traj;
  if (!runs.empty()) {
    std::vector<double> x;
    for (const auto& r : runs) x.push_back(r.x_tilde);
    const auto ref = homodyne_reference(DensityMatrix(psi), cfg.theta, pe.conv);
    summary["ks"] = ks_statistic(x, ref);
    summary["moments"] = moments_json(moments(x));
    write_histogram_csv(dir / "phase_est_hist.csv", histogram(x, 60));
  }
  write_json(dir / "phase_est.json", summary);
  write_manifest(dir, "phase-est", cfg, seconds_since(t0), {"phase_est.csv", "phase_est.json", "phase_est_hist.csv"});
  std::cout << "phase-est: " << runs.size() << " runs -> " << dir.string() << '\n';
  return 0;
}

int cmd_simulate(const ExperimentConfig& cfg, int workers) {
  if (cfg.mode == ExperimentMode::PhaseEst) return cmd_phase_est(cfg, workers);
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = prepare_out(cfg);
  std::vector<std::string> outputs = {"j_values.csv", "filter.csv"};
  json extra;
  if (cfg.mode == ExperimentMode::Heterodyne) {
    const auto data = run_heterodyne(cfg, cfg.write_records, workers);
    {
      auto os = open_out(dir / "j_values.csv");
      os << "re,im,traj\n";
      os.precision(17);
      for (std::size_t i = 0; i < data.j.size(); ++i) os << data.j[i].real() << ',' << data.j[i].imag() << ',' << i << '\n';
    }
    if (cfg.write_records) {
      auto os = open_out(dir / "records.csv");
      os << "traj,bits,bases\n";
      for (std::size_t i = 0; i < data.records.size(); ++i)
        os << i << ',' << bit_string(data.records[i]) << ',' << basis_string(data.records[i]) << '\n';
      outputs.push_back("records.csv");
    }
    {
      auto os = open_out(dir / "filter.csv");
      write_filter_csv(os, data.filter);
    }
    extra = {{"n_used", data.n_used}, {"final_population", data.final_population}, {"final_vacuum", data.final_vacuum}};
  } else {
    const auto angles = run_angles(cfg);
    const auto data = run_homodyne(cfg, angles, cfg.write_records, workers);
    {
      auto os = open_out(dir / "j_values.csv");
      os << "theta,J,traj\n";
      os.precision(17);
      for (std::size_t k = 0; k < angles.size(); ++k)
        for (std::size_t i = 0; i < data.j[k].size(); ++i) os << angles[k] << ',' << data.j[k][i] << ',' << i << '\n';
    }
    if (cfg.write_records) {
      auto os = open_out(dir / "records.csv");
      os.precision(17);
      os << "traj,theta,bits,bases\n";
      for (std::size_t k = 0; k < angles.size(); ++k)
        for (std::size_t i = 0; i < data.records[k].size(); ++i)
          os << i << ',' << angles[k] << ',' << bit_string(data.records[k][i]) << ','
             << basis_string(data.records[k][i]) << '\n';
      outputs.push_back("records.csv");
    }
    {
      auto os = open_out(dir / "filter.csv");
      write_filter_csv(os, data.filter);
    }
    extra = {{"n_used", data.n_used}, {"final_population", data.final_population}, {"final_vacuum", data.final_vacuum}};
  }
  write_manifest(dir, "simulate", cfg, seconds_since(t0), outputs, extra);
  std::cout << "simulate: " << to_string(cfg.mode) << ", " << cfg.n_traj << " trajectories -> " << dir.string() << '\n';
  return 0;
}

void warn_on_state_mismatch(const ExperimentConfig& cfg, const fs::path& data) {
  const fs::path manifest = data.parent_path() / "manifest.json";
  std::ifstream in(manifest);
  if (!in) return;
  try {
    const json m = json::parse(in);
    const auto recorded = parse_config(m.at("config").get<std::string>(), manifest.string());
    if (!(recorded.state == cfg.state))
      warn("reference state " + cfg.state.to_string() + " differs from the dataset's " + recorded.state.to_string());
  } catch (const std::exception&) {
    warn("could not read the dataset manifest " + manifest.string());
  }
}

int cmd_analyze(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path data = dataset_path(cfg);
  std::ifstream in(data);
  if (!in) throw ConfigError("cannot open dataset '" + data.string() + "'");
  warn_on_state_mismatch(cfg, data);
  std::string header;
  std::getline(in, header);
  const fs::path dir = prepare_out(cfg);
  const DensityMatrix target(prepare_state(cfg.state, cfg.resolved_n_fock()));
  json report;
  std::vector<std::string> outputs = {"analysis.json"};
  if (header.rfind("re,im", 0) == 0) {
    std::vector<cplx> z;
    std::vector<double> re, im;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      double a = 0, b = 0;
      char c1 = 0;
      std::istringstream ss(line);
      if (!(ss >> a >> c1 >> b)) throw ConfigError(data.string() + ":" + std::to_string(lineno) + ": expected 're,im'");
      z.emplace_back(a, b);
      re.push_back(a);
      im.push_back(b);
    }
    if (z.empty()) throw ConfigError("dataset '" + data.string() + "' is empty");
    report["kind"] = "heterodyne";
    report["ks_re"] = ks_statistic(re, heterodyne_marginal_reference(target, 0, cfg.conv()));
    report["ks_im"] = ks_statistic(im, heterodyne_marginal_reference(target, 1, cfg.conv()));
    report["re"] = moments_json(moments(re));
    report["im"] = moments_json(moments(im));
    const double reach = 6.0 + std::sqrt(4.0 * target.mean_photon_number() + 2.0);
    write_histogram2d_csv(dir / "hist2d.csv", histogram2d(z, 60, -reach, reach));
    outputs.push_back("hist2d.csv");
  } else {
    in.clear();
    in.seekg(0);
    const TomographyDataset d = read_dataset_csv(in, cfg.resolved_n_fock(), 1.0, cfg.conv());
    report["kind"] = "homodyne";
    json angles = json::array();
    for (std::size_t k = 0; k < d.angles.size(); ++k) {
      const auto ref = homodyne_reference(target, d.angles[k], cfg.conv());
      json a;
      a["theta"] = d.angles[k];
      a["ks"] = ks_statistic(d.samples[k], ref);
      a["moments"] = moments_json(moments(d.samples[k]));
      const std::string name = "hist_" + std::to_string(k) + ".csv";
      write_histogram_csv(dir / name, histogram(d.samples[k], 60));
      outputs.push_back(name);
      angles.push_back(a);
    }
    report["angles"] = angles;
  }
  write_json(dir / "analysis.json", report);
  write_manifest(dir, "analyze", cfg, seconds_since(t0), outputs);
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_reconstruct(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path data = dataset_path(cfg);
  std::ifstream in(data);
  if (!in) throw ConfigError("cannot open dataset '" + data.string() + "'");
  warn_on_state_mismatch(cfg, data);
  double eta = 1.0;
  if (cfg.compensate) {
    const auto& s = cfg.schedule;
    eta = compensate_efficiency(collection_efficiency(s.phi, s.dt, s.t_step, s.kappa), cfg.eta_q).total();
  }
  const TomographyDataset d = read_dataset_csv(in, cfg.resolved_n_fock(), eta, cfg.conv());
  const CavityState target = prepare_state(cfg.state, cfg.resolved_n_fock());
  const auto res = mle_reconstruct(d, TomographyOptions{cfg.max_iter, cfg.tol, cfg.bin_width}, &target);
  const fs::path dir = prepare_out(cfg);
  {
    auto os = open_out(dir / "rho.json");
    write_reconstruction_json(os, res);
  }
  write_manifest(dir, "reconstruct", cfg, seconds_since(t0), {"rho.json"},
                 {{"eta", eta}, {"fidelity", *res.fidelity}, {"converged", res.converged}});
  std::cout << "reconstruct: fidelity " << *res.fidelity << " after " << res.iterations << " iterations"
            << (res.converged ? "" : " (not converged)") << '\n';
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, int workers) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = prepare_out(cfg);
  const auto rows = convergence_study(cfg, workers);
  {
    auto os = open_out(dir / "sweep.csv");
    write_sweep_csv(os, rows, cfg.sweep.parameter);
  }
  json table = json::array();
  auto stat = [](const StudyStat& s) {
    return json{{"mean", std::isnan(s.mean) ? json(nullptr) : json(s.mean)},
                {"std", std::isnan(s.std) ? json(nullptr) : json(s.std)}};
  };
  for (const auto& r : rows)
    table.push_back({{"value", r.value},
                     {"n_used", r.n_used},
                     {"ks", stat(r.ks)},
                     {"infidelity", stat(r.infidelity)},
                     {"infidelity_uncompensated", stat(r.infidelity_uncompensated)},
                     {"population", stat(r.population)},
                     {"vacuum", stat(r.vacuum)}});
  write_json(dir / "sweep.json", {{"parameter", cfg.sweep.parameter}, {"rows", table}});
  write_manifest(dir, "sweep", cfg, seconds_since(t0), {"sweep.csv", "sweep.json"});
  std::cout << "sweep: " << rows.size() << " points -> " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qubitdyne: digital homodyne and heterodyne detection through repeated qubit collisions"};
  app.require_subcommand(1);
  Common opt;
  std::uint64_t seed_value = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "config file (key = value sections) or run manifest JSON");
    sub->add_option("--seed", seed_value, "master seed (u64)");
    sub->add_option("--workers", opt.workers, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opt.out, "output directory");
    auto names = preset_names();
    sub->add_option("--preset", opt.preset_name, "built-in recipe")->check(CLI::IsMember(names));
  };
  auto* simulate = app.add_subcommand("simulate", "run trajectories and write records, J values and a manifest");
  auto* analyze = app.add_subcommand("analyze", "KS statistics, moments and histograms of a J dataset");
  auto* reconstruct = app.add_subcommand("reconstruct", "maximum-likelihood state reconstruction from multi-angle data");
  auto* sweep = app.add_subcommand("sweep", "convergence study over a parameter sweep");
  auto* phase = app.add_subcommand("phase-est", "quadrature measurement by phase estimation");
  for (auto* s : {simulate, analyze, reconstruct, sweep, phase}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (auto* s : {simulate, analyze, reconstruct, sweep, phase})
      if (s->count("--seed")) opt.seed = seed_value;
    ExperimentConfig cfg = resolve_config(opt);
    if (phase->parsed()) {
      cfg.mode = ExperimentMode::PhaseEst;
      return cmd_phase_est(cfg, opt.workers);
    }
    if (simulate->parsed()) return cmd_simulate(cfg, opt.workers);
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (reconstruct->parsed()) return cmd_reconstruct(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg, opt.workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
