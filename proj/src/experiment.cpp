#include "qubitdyne/experiment.hpp"

#include <cmath>
#include <ostream>

#include "qubitdyne/diagnostics.hpp"
#include "qubitdyne/refstats.hpp"
#include "qubitdyne/rng.hpp"

namespace qubitdyne {

namespace {

CollisionSchedule truncated(CollisionSchedule s, int n) {
  s.phi.resize(n);
  s.bases.resize(n);
  return s;
}

StudyStat summarize(const std::vector<double>& v) {
  StudyStat s;
  if (v.empty()) return s;
  const Moments m = moments(v);
  s.mean = m.mean;
  s.std = v.size() > 1 ? std::sqrt(m.variance) : 0.0;
  return s;
}

}  // namespace

int resolve_step_count(const ExperimentConfig& cfg, const CollisionSchedule& full, const CavityState& psi) {
  if (!(cfg.schedule.vacuum_target > 0.0)) return full.n_bit();
  const auto evo = evolve_ensemble_average(DensityMatrix(psi), full);
  const int n = vacuum_stop_step(evo, cfg.schedule.vacuum_target);
  if (n == 0) {
    warn("vacuum target " + std::to_string(cfg.schedule.vacuum_target) + " not reached within " +
         std::to_string(full.n_bit()) + " steps; using all steps");
    return full.n_bit();
  }
  return n;
}

std::vector<double> run_angles(const ExperimentConfig& cfg) {
  if (cfg.mode == ExperimentMode::MultiAngle) return tomography_angles(cfg.n_angles);
  return {cfg.theta};
}

double compensation_eta(const ExperimentConfig& cfg) {
  const auto& s = cfg.schedule;
  return collection_efficiency(s.phi, s.dt, s.t_step, s.kappa) * cfg.eta_q;
}

HomodyneData run_homodyne(const ExperimentConfig& cfg, const std::vector<double>& angles, bool keep_records,
                          int workers) {
  cfg.validate();
  const CavityState psi = prepare_state(cfg.state, cfg.resolved_n_fock());
  const CollisionSchedule full = build_schedule(cfg, angles.empty() ? 0.0 : angles.front());
  HomodyneData out;
  out.angles = angles;
  out.n_used = resolve_step_count(cfg, full, psi);
  out.filter = build_filter(cfg, full);
  {
    const auto evo = evolve_ensemble_average(DensityMatrix(psi), truncated(full, out.n_used));
    out.final_population = evo.population.empty() ? psi.mean_photon_number() : evo.population.back();
    out.final_vacuum = evo.vacuum.empty() ? psi.vacuum_population() : evo.vacuum.back();
  }
  EnsembleOptions eo;
  eo.workers = workers;
  eo.keep_final_state = false;
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const auto sched = truncated(build_schedule(cfg, angles[k]), out.n_used);
    eo.first_index = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(cfg.n_traj);
    auto runs = run_ensemble(psi, sched, cfg.n_traj, cfg.seed, eo);
    out.j.push_back(homodyne_values(runs, out.filter, angles[k]));
    if (keep_records) {
      std::vector<MeasurementRecord> recs;
      recs.reserve(runs.size());
      for (auto& r : runs) recs.push_back(std::move(r.record));
      out.records.push_back(std::move(recs));
    }
  }
  return out;
}

HeterodyneData run_heterodyne(const ExperimentConfig& cfg, bool keep_records, int workers) {
  cfg.validate();
  const CavityState psi = prepare_state(cfg.state, cfg.resolved_n_fock());
  const CollisionSchedule full = build_heterodyne_schedule(cfg);
  HeterodyneData out;
  out.n_used = resolve_step_count(cfg, full, psi);
  out.n_used -= out.n_used % 2;
  if (out.n_used == 0) throw ConfigError("heterodyne needs at least two steps");
  out.filter = build_filter(cfg, full);
  const auto sched = truncated(full, out.n_used);
  const auto evo = evolve_ensemble_average(DensityMatrix(psi), sched);
  out.final_population = evo.population.back();
  out.final_vacuum = evo.vacuum.back();
  EnsembleOptions eo;
  eo.workers = workers;
  eo.keep_final_state = false;
  auto runs = run_ensemble(psi, sched, cfg.n_traj, cfg.seed, eo);
  out.j = heterodyne_values(runs, out.filter);
  if (keep_records)
    for (auto& r : runs) out.records.push_back(std::move(r.record));
  return out;
}

TomographyDataset to_dataset(const HomodyneData& data, const ExperimentConfig& cfg, double eta) {
  TomographyDataset d;
  d.angles = data.angles;
  d.samples = data.j;
  d.eta = eta;
  d.n_fock = cfg.resolved_n_fock();
  d.conv = cfg.conv();
  return d;
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg, const std::string& parameter, double value) {
  ExperimentConfig c = cfg;
  if (parameter == "n_bit") {
    c.schedule.n_bit = static_cast<int>(std::lround(value));
    c.schedule.vacuum_target = 0.0;
  } else if (parameter == "phi") {
    c.schedule.phi = value;
  } else if (parameter == "n_traj") {
    c.n_traj = static_cast<int>(std::lround(value));
  } else if (parameter == "vacuum_target") {
    c.schedule.vacuum_target = value;
  } else if (parameter == "slope") {
    c.schedule.ramp = value != 0.0;
    c.schedule.slope = value;
  } else if (parameter != "none") {
    throw ConfigError("unknown sweep parameter '" + parameter + "'");
  }
  c.validate();
  return c;
}

std::uint64_t repetition_seed(std::uint64_t seed, int r) {
  return r == 0 ? seed : CounterRng::mix(seed ^ CounterRng::mix(static_cast<std::uint64_t>(r)));
}

std::vector<SweepRow> convergence_study(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  if (cfg.mode != ExperimentMode::Homodyne && cfg.mode != ExperimentMode::MultiAngle)
    throw ConfigError("[run] mode: sweeps need homodyne or multi-angle mode");
  std::vector<double> values = cfg.sweep.values;
  if (cfg.sweep.parameter == "none" || values.empty()) values = {0.0};

  const CavityState target = prepare_state(cfg.state, cfg.resolved_n_fock());
  const DensityMatrix target_rho(target);
  std::vector<SweepRow> rows;
  for (double value : values) {
    const ExperimentConfig point = apply_sweep_value(cfg, cfg.sweep.parameter, value);
    const auto angles = run_angles(point);
    const auto ref = homodyne_reference(target_rho, angles.front(), point.conv());
    std::vector<double> ks, infid, infid_raw, pop, vac, used;
    for (int r = 0; r < cfg.sweep.repetitions; ++r) {
      ExperimentConfig rep = point;
      rep.seed = repetition_seed(cfg.seed, r);
      const HomodyneData data = run_homodyne(rep, angles, false, workers);
      if (!data.j.front().empty()) ks.push_back(ks_statistic(data.j.front(), ref));
      pop.push_back(data.final_population);
      vac.push_back(data.final_vacuum);
      used.push_back(data.n_used);
      if (angles.size() >= 2 && rep.n_traj > 0) {
        TomographyOptions opts{rep.max_iter, rep.tol, rep.bin_width};
        const double eta = rep.compensate ? compensation_eta(rep) : 1.0;
        infid.push_back(1.0 - *mle_reconstruct(to_dataset(data, rep, eta), opts, &target).fidelity);
        if (cfg.sweep.compare_compensation)
          infid_raw.push_back(1.0 - *mle_reconstruct(to_dataset(data, rep, 1.0), opts, &target).fidelity);
      }
    }
    SweepRow row;
    row.value = value;
    row.n_used = summarize(used).mean;
    row.ks = summarize(ks);
    row.infidelity = summarize(infid);
    row.infidelity_uncompensated = summarize(infid_raw);
    row.population = summarize(pop);
    row.vacuum = summarize(vac);
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const std::string& parameter) {
  os << (parameter == "none" ? "value" : parameter)
     << ",n_used,ks_mean,ks_std,infid_mean,infid_std,infid_uncomp_mean,infid_uncomp_std,pop_mean,pop_std,vac_mean,"
        "vac_std\n";
  os.precision(10);
  for (const auto& r : rows) {
    os << r.value << ',' << r.n_used;
    for (const StudyStat* s : {&r.ks, &r.infidelity, &r.infidelity_uncompensated, &r.population, &r.vacuum})
      os << ',' << s->mean << ',' << s->std;
    os << '\n';
  }
}

}  // namespace qubitdyne
