#pragma once

// Truncated Fock-space numerics: pure and mixed cavity states, quadrature
// operators, quadrature densities, Wigner and Husimi functions.

#include <span>
#include <string>
#include <vector>

#include "qubitdyne/types.hpp"

namespace qubitdyne {

/// Quadrature scaling x = c (a + a^dagger). Vacuum variance is c^2.
struct QuadratureConvention {
  double c = 0.70710678118654752440;

  static QuadratureConvention quarter_variance() { return {0.5}; }
  static QuadratureConvention half_variance() { return {0.70710678118654752440}; }
  static QuadratureConvention unit_variance() { return {1.0}; }

  double vacuum_variance() const { return c * c; }
  bool operator==(const QuadratureConvention&) const = default;
};

/// Pure cavity state over Fock levels 0..n_fock-1.
class CavityState {
 public:
  CavityState() = default;
  explicit CavityState(CVector amps);

  static CavityState vacuum(int n_fock);

  int n_fock() const { return static_cast<int>(amps_.size()); }
  const CVector& amps() const { return amps_; }
  CVector& amps() { return amps_; }

  double norm() const { return amps_.norm(); }
  /// Throws NumericalError if the norm is below 1e-14.
  void normalize();

  double mean_photon_number() const;
  double vacuum_population() const { return std::norm(amps_(0)); }
  double top_level_population() const { return std::norm(amps_(amps_.size() - 1)); }

 private:
  CVector amps_;
};

/// Hermitian, unit-trace, positive semidefinite cavity density matrix.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  /// Validates the invariants (Hermitian, trace 1, eigenvalues >= -1e-9).
  explicit DensityMatrix(CMatrix elements);
  explicit DensityMatrix(const CavityState& pure);

  /// Skips validation; for iterates that are valid by construction.
  static DensityMatrix unchecked(CMatrix elements);

  int n_fock() const { return static_cast<int>(rho_.rows()); }
  const CMatrix& matrix() const { return rho_; }
  double trace() const { return rho_.trace().real(); }
  double mean_photon_number() const;
  double vacuum_population() const { return rho_(0, 0).real(); }

 private:
  CMatrix rho_;
};

struct StateSpec {
  enum class Kind { Vacuum, Fock, Coherent, Cat, Squeezed };
  Kind kind = Kind::Vacuum;
  int photons = 0;       // Fock
  cplx alpha{0.0, 0.0};  // Coherent, Cat
  double variance = 0.5; // Squeezed: x-quadrature variance (c = 1/sqrt2 units)
  double center = 0.0;   // Squeezed: x-quadrature mean

  static StateSpec vacuum() { return {}; }
  static StateSpec fock(int n) { return {Kind::Fock, n}; }
  static StateSpec coherent(cplx a) { return {Kind::Coherent, 0, a}; }
  static StateSpec cat(cplx a) { return {Kind::Cat, 0, a}; }
  static StateSpec squeezed(double variance, double center) {
    return {Kind::Squeezed, 0, {}, variance, center};
  }

  /// Text form accepted by parse(): vacuum, fock:2, coherent:2, coherent:1.5+0.5i,
  /// cat:2, squeezed:0.01@1.5.
  std::string to_string() const;
  static StateSpec parse(const std::string& text);

  /// Mean photon number of the ideal (untruncated) state.
  double mean_photon_number() const;
  /// Default truncation: 30 for <n> <= 4, 60 for <n> <= 6, grown beyond that.
  int default_n_fock() const;

  bool operator==(const StateSpec&) const = default;
};

/// Population above which the top Fock level signals truncation overflow.
inline constexpr double kTruncationTolerance = 1e-8;

/// Throws TruncationError when the top level carries >= 1e-8 population.
CavityState prepare_state(const StateSpec& spec, int n_fock);

/// Annihilation operator a with <n-1|a|n> = sqrt(n).
CMatrix annihilation(int n_fock);
CMatrix number_operator(int n_fock);

/// x_theta = c (a^dagger e^{i theta} + a e^{-i theta}); tridiagonal and Hermitian.
CMatrix quadrature_operator(double theta, const QuadratureConvention& conv, int n_fock);

/// Multiplies c_n by e^{-i n theta}.
CavityState phase_rotate(const CavityState& state, double theta);
DensityMatrix phase_rotate(const DensityMatrix& rho, double theta);

/// Hermite-function wavefunctions <x|n> in convention `conv`, for n < n_fock,
/// evaluated by the stable three-term recurrence. Row n, column j -> psi_n(x_j).
RMatrix hermite_functions(std::span<const double> x, int n_fock, const QuadratureConvention& conv);

/// Homodyne density P_theta(x) = |sum_n c_n e^{-i n theta} psi_n(x)|^2.
/// With check_normalization, a trapezoid integral off from 1 by more than
/// 1e-4 raises NumericalError (grid too coarse or not covering the support).
std::vector<double> quadrature_pdf(const CavityState& state, double theta, std::span<const double> grid,
                                   const QuadratureConvention& conv = {}, bool check_normalization = true);
std::vector<double> quadrature_pdf(const DensityMatrix& rho, double theta, std::span<const double> grid,
                                   const QuadratureConvention& conv = {}, bool check_normalization = true);

/// Smallest x_max with probability mass outside [-x_max, x_max] below `tail`,
/// for every angle in a 16-point sweep over [0, pi).
double quadrature_support(const DensityMatrix& rho, const QuadratureConvention& conv = {}, double tail = 1e-6);

/// Husimi function Q(beta) = <beta|rho|beta>/pi on points of the complex
/// amplitude plane (normalized over d^2 beta).
std::vector<double> husimi_q(const CavityState& state, std::span<const cplx> beta);
std::vector<double> husimi_q(const DensityMatrix& rho, std::span<const cplx> beta);

/// Husimi function on quadrature-plane points (x, p), normalized over dx dp.
std::vector<double> husimi_q_xp(const DensityMatrix& rho, std::span<const double> x, std::span<const double> p,
                                const QuadratureConvention& conv = {});

/// Wigner function W(x, p) on quadrature-plane points, normalized over dx dp.
/// Vacuum at the origin gives 1/(2 pi c^2), i.e. 1/pi for c = 1/sqrt2.
std::vector<double> wigner(const DensityMatrix& rho, std::span<const double> x, std::span<const double> p,
                           const QuadratureConvention& conv = {});
std::vector<double> wigner(const CavityState& state, std::span<const double> x, std::span<const double> p,
                           const QuadratureConvention& conv = {});

/// F = <psi|rho|psi>; throws DimensionError on mismatch.
double fidelity(const DensityMatrix& rho, const CavityState& psi);

/// Trace distance 0.5 ||a - b||_1.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

/// Uniform grid of n points over [lo, hi].
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace qubitdyne
