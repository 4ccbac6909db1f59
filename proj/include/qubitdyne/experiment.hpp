#pragma once

// Runs configured experiments: multi-angle homodyne, heterodyne and parameter
// sweeps that feed the statistics and tomography modules.

#include <iosfwd>
#include <limits>
#include <vector>

#include "qubitdyne/collision.hpp"
#include "qubitdyne/config.hpp"
#include "qubitdyne/records.hpp"
#include "qubitdyne/tomography.hpp"

namespace qubitdyne {

struct HomodyneData {
  std::vector<double> angles;
  std::vector<std::vector<double>> j;                     // j[k][traj]
  std::vector<std::vector<MeasurementRecord>> records;    // filled when requested
  int n_used = 0;                                         // steps per round
  double final_population = 0.0;                          // outcome-averaged, after n_used steps
  double final_vacuum = 0.0;
  FilterWeights filter;
};

struct HeterodyneData {
  std::vector<cplx> j;
  std::vector<MeasurementRecord> records;
  int n_used = 0;
  double final_population = 0.0;
  double final_vacuum = 0.0;
  FilterWeights filter;
};

/// Steps to run: the schedule cap, or the first step at which the
/// outcome-averaged vacuum fraction reaches the configured target.
int resolve_step_count(const ExperimentConfig& cfg, const CollisionSchedule& full, const CavityState& psi);

/// Angle k uses trajectory streams [k n_traj, (k+1) n_traj) of `seed`.
HomodyneData run_homodyne(const ExperimentConfig& cfg, const std::vector<double>& angles, bool keep_records,
                          int workers = 0);
HeterodyneData run_heterodyne(const ExperimentConfig& cfg, bool keep_records, int workers = 0);

/// Angles of a configured run: {theta} for homodyne, k pi / n_angles for multi-angle.
std::vector<double> run_angles(const ExperimentConfig& cfg);

/// Collection efficiency at the configured phi, kappa and T times eta_q.
double compensation_eta(const ExperimentConfig& cfg);

TomographyDataset to_dataset(const HomodyneData& data, const ExperimentConfig& cfg, double eta);

struct StudyStat {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
};

struct SweepRow {
  double value = 0.0;
  double n_used = 0.0;
  StudyStat ks;
  StudyStat infidelity;                // with compensation when configured
  StudyStat infidelity_uncompensated;  // only with compare_compensation
  StudyStat population;
  StudyStat vacuum;
};

/// Applies a sweep value to a copy of the configuration.
ExperimentConfig apply_sweep_value(const ExperimentConfig& cfg, const std::string& parameter, double value);

/// Seed of repetition r: the configured seed for r = 0, hashed otherwise.
std::uint64_t repetition_seed(std::uint64_t seed, int r);

/// One row per sweep value; mean and sample std over repetitions. Requires
/// homodyne or multi-angle mode; fidelities need >= 2 angles.
std::vector<SweepRow> convergence_study(const ExperimentConfig& cfg, int workers = 0);

/// "<parameter>,n_used,ks_mean,ks_std,infid_mean,infid_std,infid_uncomp_mean,infid_uncomp_std,pop_mean,pop_std,vac_mean,vac_std"
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const std::string& parameter);

}  // namespace qubitdyne
