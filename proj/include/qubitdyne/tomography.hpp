#pragma once

// Maximum-likelihood state reconstruction from binned multi-angle homodyne
// data, with optional detection-efficiency compensation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qubitdyne/fockspace.hpp"

namespace qubitdyne {

struct TomographyDataset {
  std::vector<double> angles;                // theta_k in [0, pi)
  std::vector<std::vector<double>> samples;  // samples[k] measured at angles[k]
  double eta = 1.0;                          // efficiency the POVM compensates for
  int n_fock = 30;
  QuadratureConvention conv{};

  std::size_t total_samples() const;
  /// Throws ConfigError unless >= 2 distinct angles in [0, pi), matching
  /// sample lists, and eta in (0.5, 1].
  void validate() const;
};

/// Uniform bins covering the support of every Fock basis function below n_fock.
struct BinGrid {
  double lo = 0.0;
  double width = 0.1;
  int bins = 0;

  std::vector<double> centers() const;
  int index(double x) const;  // clamped into [0, bins)
};

BinGrid default_bins(int n_fock, const QuadratureConvention& conv = {}, double width = 0.1);

/// Real symmetric bin operators at theta = 0:
///   M_j = int dy w_j(y) |y><y|,  w_j(y) = P(x in bin j | y) for x = sqrt(eta) y + vacuum-noise sqrt(1-eta).
/// Row j of the result is M_j flattened column-major (n_fock^2 entries).
RMatrix povm_bin_operators(const BinGrid& grid, double eta, int n_fock, const QuadratureConvention& conv = {});

/// POVM elements at angle theta, Pi_j = D M_j D^dagger with D = diag(e^{i n theta}).
/// Throws NumericalError if sum_j Pi_j deviates from the identity by more than 1e-2.
std::vector<CMatrix> build_povm(double theta, const BinGrid& grid, double eta, int n_fock,
                                const QuadratureConvention& conv = {});

/// Largest elementwise deviation of sum_j Pi_j from the identity.
double povm_completeness_error(const std::vector<CMatrix>& povm);

struct TomographyOptions {
  int max_iter = 3000;
  double tol = 1e-7;  // max |rho_{k+1} - rho_k|
  double bin_width = 0.1;
};

struct ReconstructionResult {
  DensityMatrix rho;
  std::optional<double> fidelity;
  int iterations = 0;
  std::vector<double> log_likelihood;  // one entry per accepted iterate, non-decreasing
  bool converged = false;
};

/// R rho R fixed-point ascent with step dilution whenever the plain update
/// would lower the likelihood. Non-convergence returns the last iterate with
/// converged = false.
ReconstructionResult mle_reconstruct(const TomographyDataset& data, const TomographyOptions& opts = {},
                                     const CavityState* target = nullptr);

struct EtaQSettings {
  StateSpec state = StateSpec::coherent(cplx(2.0, 0.0));
  double phi = 0.1 * kHalfPi;
  int n_bit = 200;
  int n_traj = 4000;
  std::uint64_t seed = 1;
  int workers = 0;
  QuadratureConvention conv{};
};

struct EtaQPoint {
  double readout_fidelity = 1.0;
  double center = 0.0;
  double eta_q = 1.0;
};

/// For each readout fidelity F (flip probability 1 - F) simulate coherent-state
/// homodyne, fit the Gaussian center and report eta_q = (center / center_at_F=1)^2.
/// The same seed is used for every point. Throws ConfigError if n_traj < 10.
std::vector<EtaQPoint> calibrate_eta_q(std::span<const double> readout_fidelities, const EtaQSettings& settings);

/// {"n_fock", "real": [[...]], "imag": [[...]], "fidelity", "iterations", "converged", "log_likelihood"}
void write_reconstruction_json(std::ostream& os, const ReconstructionResult& result);

/// CSV "theta,x" one row per sample.
void write_dataset_csv(std::ostream& os, const TomographyDataset& data);
/// Groups rows by theta (exact text match after parsing). Throws ConfigError with the line number on bad rows.
TomographyDataset read_dataset_csv(std::istream& is, int n_fock, double eta = 1.0, const QuadratureConvention& conv = {});

/// Angles k pi / n_angles, k = 0..n_angles-1.
std::vector<double> tomography_angles(int n_angles);

}  // namespace qubitdyne
