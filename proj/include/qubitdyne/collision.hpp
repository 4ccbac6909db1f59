#pragma once

// Repeated qubit-cavity collisions: exact Jaynes-Cummings Kraus operators,
// measurement in an equatorial qubit basis, unmonitored cavity loss and
// classical readout errors.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qubitdyne/fockspace.hpp"
#include "qubitdyne/types.hpp"

namespace qubitdyne {

/// Qubit measurement axis (cos t, sin t) in the equatorial plane.
struct MeasurementBasis {
  double axis = 0.0;

  static MeasurementBasis X() { return {0.0}; }
  static MeasurementBasis Y() { return {kHalfPi}; }
  static MeasurementBasis at(double theta_q) { return {theta_q}; }
  /// Axis whose outcomes estimate quadrature x_theta (theta_q = theta - pi/2).
  static MeasurementBasis for_quadrature(double theta) { return {theta - kHalfPi}; }

  /// 'X', 'Y', 'x' (-X), 'y' (-Y) or 'A' for any other axis.
  char label() const;
  bool operator==(const MeasurementBasis&) const = default;
};

struct CollisionSchedule {
  std::vector<double> phi;                 // per-step interaction strength
  std::vector<MeasurementBasis> bases;     // per-step measurement axis
  double dt = 1e-6;                        // interaction interval [s]
  double t_step = 1e-6;                    // full step duration T >= dt [s]
  double kappa = 0.0;                      // external decay rate [1/s]
  double p_read_err = 0.0;                 // readout flip probability

  int n_bit() const { return static_cast<int>(phi.size()); }
  /// Throws ConfigError on violated invariants; warns when kappa * T > 0.05.
  void validate() const;

  static CollisionSchedule constant(double phi, int n_bit, MeasurementBasis basis);
  /// phi(n) = phi0 + slope * n
  static CollisionSchedule ramp(double phi0, double slope, int n_bit, MeasurementBasis basis);

  /// Homodyne of quadrature theta: every step measured on axis theta - pi/2.
  CollisionSchedule& homodyne(double theta);
  /// Heterodyne: alternating Y, X, Y, X, ...
  CollisionSchedule& heterodyne();
  CollisionSchedule& with_loss(double kappa_, double dt_, double t_step_);
  CollisionSchedule& with_readout_error(double p);
};

struct MeasurementRecord {
  std::vector<std::int8_t> outcomes;       // +1 / -1
  std::vector<MeasurementBasis> bases;
  std::vector<double> times;               // t_n = n dt

  std::size_t size() const { return outcomes.size(); }
};

struct TrajectoryResult {
  MeasurementRecord record;
  CavityState final_state;
  // Filled only when tracing is requested; entry n describes step n.
  std::vector<double> population_trace;    // <a^dagger a> after the step
  std::vector<double> vacuum_trace;        // |<0|psi>|^2 after the step
  std::vector<double> excitation_trace;    // exact p_e before the measurement
};

struct TrajectoryOptions {
  bool keep_final_state = true;
  bool trace = false;
};

struct KrausPair {
  CMatrix first;
  CMatrix second;
};

/// Exact blocks of U = exp(-i phi (a s+ + a^dagger s-)) for qubit input |g>:
/// K_g|n> = cos(phi sqrt n)|n>, K_e|n> = -i sin(phi sqrt n)|n-1>.
KrausPair interaction_unitary_blocks(double phi, int n_fock);

/// K_pm = (K_g pm e^{i chi} K_e)/sqrt2 with chi = -theta_q.
KrausPair measurement_kraus(double phi, MeasurementBasis basis, int n_fock);

/// Single-jump amplitude-damping pair for one step of duration t_step.
KrausPair loss_kraus(double kappa, double t_step, int n_fock);

/// max |1 - A^dagger A - B^dagger B| over matrix entries.
double completeness_deficit(const KrausPair& k);

/// Small-phi form p_e = phi^2 <a^dagger a>.
double excitation_probability(const CavityState& state, double phi);
/// <psi|K_e^dagger K_e|psi> = sum_n sin^2(phi sqrt n) |c_n|^2.
double excitation_probability_exact(const CavityState& state, double phi);

/// One trajectory; deterministic in (seed, index).
TrajectoryResult run_trajectory(const CavityState& state0, const CollisionSchedule& sched, std::uint64_t seed,
                                std::uint64_t index, const TrajectoryOptions& opts = {});

struct EnsembleOptions {
  int workers = 0;                         // 0: hardware concurrency
  bool keep_final_state = true;
  bool trace = false;
  std::uint64_t first_index = 0;           // stream index of trajectory 0
};

/// Raised from run_ensemble with the index of the failing trajectory.
class TrajectoryError : public NumericalError {
 public:
  TrajectoryError(std::uint64_t index, const std::string& what)
      : NumericalError("trajectory " + std::to_string(index) + ": " + what), index_(index) {}
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t index_;
};

std::vector<TrajectoryResult> run_ensemble(const CavityState& state0, const CollisionSchedule& sched, int n_traj,
                                           std::uint64_t seed, const EnsembleOptions& opts = {});

/// Per-step ensemble means of a traced quantity.
std::vector<double> mean_population_trace(const std::vector<TrajectoryResult>& runs);
std::vector<double> mean_vacuum_trace(const std::vector<TrajectoryResult>& runs);
std::vector<double> mean_excitation_trace(const std::vector<TrajectoryResult>& runs);

struct ChannelEvolution {
  DensityMatrix final_rho;
  std::vector<double> population;  // Tr(rho a^dagger a) after each step
  std::vector<double> vacuum;      // <0|rho|0> after each step
};

/// Outcome-averaged evolution of the schedule: loss pair (renormalized), then
/// K_g rho K_g^dagger + K_e rho K_e^dagger. Readout flips do not act on the state.
ChannelEvolution evolve_ensemble_average(const DensityMatrix& rho0, const CollisionSchedule& sched);

/// Number of steps after which the ensemble vacuum first reaches `target`,
/// or 0 if it never does within the schedule.
int vacuum_stop_step(const ChannelEvolution& evo, double target);

/// Runs `count` independent jobs on up to `workers` threads. Jobs must be
/// independent; the first exception (lowest index) is rethrown.
void parallel_for(int count, int workers, const std::function<void(int)>& job);

int resolve_workers(int requested);

}  // namespace qubitdyne
