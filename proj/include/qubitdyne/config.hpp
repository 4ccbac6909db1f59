#pragma once

// Experiment configuration: a sectioned key = value text format with
// line-accurate diagnostics, presets and a lossless round trip.

#include <cstdint>
#include <string>
#include <vector>

#include "qubitdyne/collision.hpp"
#include "qubitdyne/fockspace.hpp"
#include "qubitdyne/phase_est.hpp"
#include "qubitdyne/records.hpp"

namespace qubitdyne {

enum class ExperimentMode { Homodyne, MultiAngle, Heterodyne, PhaseEst };
enum class FilterChoice { Auto, Constant, TimeDependent, LossyOptimal };

std::string to_string(ExperimentMode m);
std::string to_string(FilterChoice f);

struct ScheduleSpec {
  bool ramp = false;
  double phi = 0.1 * kHalfPi;  // phi_0 for a ramp
  double slope = 0.0;          // per step, ramp only
  int n_bit = 200;             // step cap when vacuum_target > 0
  double dt = 1e-6;
  double t_step = 1e-6;
  double kappa = 0.0;
  double p_read_err = 0.0;
  double vacuum_target = 0.0;  // > 0: stop once the ensemble vacuum fraction reaches it

  bool operator==(const ScheduleSpec&) const = default;
};

struct SweepSpec {
  std::string parameter = "none";  // none | n_bit | phi | n_traj | vacuum_target | slope
  std::vector<double> values;
  int repetitions = 1;
  bool compare_compensation = false;

  bool operator==(const SweepSpec&) const = default;
};

struct ExperimentConfig {
  StateSpec state = StateSpec::cat(cplx(2.0, 0.0));
  int n_fock = 0;  // 0: state default
  ScheduleSpec schedule;
  ExperimentMode mode = ExperimentMode::Homodyne;
  double theta = 0.0;
  int n_angles = 10;
  int n_traj = 1000;
  std::uint64_t seed = 1;
  double convention_c = 0.70710678118654752440;

  FilterChoice filter = FilterChoice::Auto;
  double eta_m = 1.0;

  bool compensate = false;
  double eta_q = 1.0;
  double bin_width = 0.1;
  int max_iter = 3000;
  double tol = 1e-7;

  PhaseEstMode pe_mode = PhaseEstMode::Iterative;
  int pe_n_m = 100;
  double pe_epsilon = 0.0;
  int pe_n_fock = 0;

  SweepSpec sweep;

  std::string out_dir = "out";
  bool write_records = true;
  std::string input;  // dataset for analyze / reconstruct; empty: <out_dir>/j_values.csv

  QuadratureConvention conv() const { return {convention_c}; }
  int resolved_n_fock() const { return n_fock > 0 ? n_fock : state.default_n_fock(); }
  /// Throws ConfigError naming the offending [section] key.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parse config text. Unknown sections/keys and malformed values raise
/// ConfigError("<origin>:<line>: ..."). Missing keys keep their defaults.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config",
                              const ExperimentConfig& base = {});
/// Reads a config file, or the "config" entry of a run manifest (*.json).
ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base = {});

/// Every key, doubles printed with 17 significant digits.
std::string serialize_config(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
/// fig2 | fig3 | fig4 | fig5 | figS1 | figS2 | lifetime
ExperimentConfig preset(const std::string& name);

/// Schedule for a given quadrature angle (homodyne) or heterodyne pairing.
CollisionSchedule build_schedule(const ExperimentConfig& cfg, double theta);
CollisionSchedule build_heterodyne_schedule(const ExperimentConfig& cfg);
FilterWeights build_filter(const ExperimentConfig& cfg, const CollisionSchedule& sched);

}  // namespace qubitdyne
