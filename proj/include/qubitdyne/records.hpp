#pragma once

// Mode-matching filters and assembly of homodyne / heterodyne values from
// qubit measurement records.

#include <iosfwd>
#include <span>
#include <vector>

#include "qubitdyne/collision.hpp"
#include "qubitdyne/fockspace.hpp"

namespace qubitdyne {

enum class FilterKind { ConstantGamma, TimeDependent, LossyOptimal };

struct FilterWeights {
  std::vector<double> weights;  // f(t_n), n = 0..n_bit-1
  std::vector<double> times;    // t_n = n dt
  double convention_c = 0.70710678118654752440;
  FilterKind kind = FilterKind::ConstantGamma;

  std::size_t size() const { return weights.size(); }
  double sum_of_squares() const;
};

class BasisMismatchError : public Error {
 public:
  using Error::Error;
};

/// f(t_n) = c phi e^{-phi^2 n / 2}; for c = 1/sqrt2 this is sqrt(gamma dt/2) e^{-gamma t_n/2}.
FilterWeights filter_constant(double phi, double dt, int n_bit, const QuadratureConvention& conv = {});

/// f(t_n) = c phi_n exp(-1/2 sum_{m<n} phi_m^2).
FilterWeights filter_time_dependent(std::span<const double> phi_seq, double dt, const QuadratureConvention& conv = {});

/// Minimum-variance unbiased filter under external loss kappa and readout
/// contrast eta_m (E[X] = eta_m <sigma>):
///   f(t_n) = c phi_n exp(-kappa n T/2 - 1/2 sum_{m<n} phi_m^2) / (eta_m D),
/// with D = sum_n (1 - e^{-phi_n^2}) exp(-kappa n T - sum_{m<n} phi_m^2), the
/// schedule extended with its last phi to infinity. D = 1 exactly at kappa = 0.
/// Throws NumericalError if D < 1e-12.
FilterWeights filter_lossy_optimal(std::span<const double> phi_seq, double dt, double t_step, double kappa,
                                   double eta_m, const QuadratureConvention& conv = {});

/// Predicted estimator variance of the constant-gamma lossy filter:
/// 2 c^2 (1 + kappa/gamma) / (2 eta_m^2).
double lossy_filter_variance(double kappa_over_gamma, double eta_m, const QuadratureConvention& conv = {});

/// Chebyshev bound Prob[|J - <x>| >= delta] <= variance / delta^2.
double chebyshev_bound(double variance, double delta);

/// Readout contrast of a symmetric flip channel: E[X] = (1 - 2 p) <sigma>.
double readout_contrast(double p_flip);

struct DyneValue {
  cplx value;
  double angle = 0.0;  // quadrature angle, homodyne only
  bool heterodyne = false;
};

/// J_hom = sum_n f(t_n) X_n. Every basis must equal the axis for quadrature
/// theta (theta_q = theta - pi/2), else BasisMismatchError. Weights may be
/// longer than the record.
DyneValue assemble_homodyne(const MeasurementRecord& record, const FilterWeights& weights, double theta);

/// J_het = sum over (Y, X) pairs 2 [f_n (-Y_n) + i f_{n+1} X_{n+1}].
/// Requires bases Y, X, Y, X, ...; an unpaired final step is dropped with a warning.
DyneValue assemble_heterodyne(const MeasurementRecord& record, const FilterWeights& weights);

std::vector<double> homodyne_values(const std::vector<TrajectoryResult>& runs, const FilterWeights& weights,
                                    double theta);
std::vector<cplx> heterodyne_values(const std::vector<TrajectoryResult>& runs, const FilterWeights& weights);

/// First n steps of a record.
MeasurementRecord truncate(const MeasurementRecord& record, std::size_t n);

/// eta = gamma / (gamma + (T/dt) kappa) = phi^2 / (phi^2 + kappa T).
double collection_efficiency(double phi, double dt, double t_step, double kappa);

struct EfficiencyCompensation {
  double eta = 1.0;    // collection efficiency
  double eta_q = 1.0;  // readout-induced efficiency
  double total() const { return eta * eta_q; }
};

/// Packages efficiencies for the tomography POVM; warns when total <= 0.5.
EfficiencyCompensation compensate_efficiency(double eta, double eta_q = 1.0);

/// CSV with header "n,t,f".
void write_filter_csv(std::ostream& os, const FilterWeights& weights);

}  // namespace qubitdyne
