#pragma once

// Quadrature measurement through phase estimation of exp(i eps x_theta):
// iterative, non-adaptive and adaptive variants.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qubitdyne/fockspace.hpp"

namespace qubitdyne {

enum class PhaseEstMode { Iterative, NonAdaptive, Adaptive };

std::string to_string(PhaseEstMode mode);
PhaseEstMode parse_phase_est_mode(const std::string& text);

struct PhaseEstConfig {
  double epsilon = 0.0;  // 0: default_epsilon of the input state
  int n_m = 100;
  PhaseEstMode mode = PhaseEstMode::Iterative;
  double theta = 0.0;
  QuadratureConvention conv{};
  bool trace = false;    // record <n> after every round

  void validate() const;
};

struct PhaseEstimate {
  double x_tilde = 0.0;
  double phi_tilde = 0.0;           // in (-pi, pi]
  std::vector<std::int8_t> outcomes;  // 0 = g, 1 = e, in measurement order
  std::vector<double> phases;       // qubit phase offset used in each round
  std::vector<double> photon_trace; // <n> after each round, when traced
};

/// pi / (x_max + 2) with x_max the 1 - 1e-6 quadrature support of rho.
double default_epsilon(const DensityMatrix& rho, const QuadratureConvention& conv = {});

/// |g><g| (x) 1 + |e><e| (x) exp(i eps 2^k x_theta), qubit-major ordering
/// (rows 0..n-1 are g, n..2n-1 are e). Warns if the kick leaks more than 1e-6
/// of the vacuum into the top Fock level.
CMatrix controlled_phase_unitary(double epsilon, int k, double theta, int n_fock,
                                 const QuadratureConvention& conv = {});

/// One round outcome g has probability (1 + cos(eps 2^k x + varphi)) / 2.
PhaseEstimate run_iterative_pe(const CavityState& state, const PhaseEstConfig& cfg, std::uint64_t seed,
                               std::uint64_t index = 0);
PhaseEstimate run_nonadaptive_pe(const CavityState& state, const PhaseEstConfig& cfg, std::uint64_t seed,
                                 std::uint64_t index = 0);
PhaseEstimate run_adaptive_pe(const CavityState& state, const PhaseEstConfig& cfg, std::uint64_t seed,
                              std::uint64_t index = 0);

PhaseEstimate run_phase_estimation(const CavityState& state, const PhaseEstConfig& cfg, std::uint64_t seed,
                                   std::uint64_t index = 0);

std::vector<PhaseEstimate> run_pe_ensemble(const CavityState& state, const PhaseEstConfig& cfg, int n_traj,
                                           std::uint64_t seed, int workers = 0);

/// Prob[|x~ - x| >= delta] <= 1 / (2 eps 2^{n_m} delta - 2), meaningful for eps 2^{n_m} delta >= 1; clamped to 1.
double iterative_pe_error_bound(double delta, double epsilon, int n_m);

/// 4 exp(-sin(delta / eps) n_m / (2 sqrt2)), taken verbatim; clamped to 1.
double chernoff_bound(double delta, double epsilon, int n_m);

/// Hoeffding bound on the same event: 4 exp(-n_m sin^2(eps delta) / 4) for eps delta <= pi/2.
double hoeffding_bound(double delta, double epsilon, int n_m);

/// Adaptive posterior grid and candidate phases.
inline constexpr int kAdaptiveGrid = 1024;
inline constexpr int kAdaptiveCandidates = 64;

/// CSV "run,x_tilde,phi_tilde,outcomes".
void write_phase_est_csv(std::ostream& os, const std::vector<PhaseEstimate>& runs);

}  // namespace qubitdyne
