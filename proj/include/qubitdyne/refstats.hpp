#pragma once

// Empirical statistics and validation against ideal quadrature marginals.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qubitdyne/fockspace.hpp"

namespace qubitdyne {

struct EmpiricalSample {
  std::vector<double> values;
  std::string label;
  double theta = 0.0;
  std::uint64_t seed = 0;
};

/// Piecewise-linear CDF on a grid; 0 below and 1 above the grid.
struct ReferenceCdf {
  std::vector<double> grid;
  std::vector<double> cdf;

  double operator()(double x) const;
  /// cdf[0] <= 1e-6, cdf[last] >= 1 - 1e-6, non-decreasing.
  void validate() const;
};

/// Cumulative trapezoid integral of a density, normalized to end at 1.
ReferenceCdf cdf_from_pdf(std::span<const double> grid, std::span<const double> pdf);

/// Ideal homodyne CDF of quadrature theta on a 4001-point grid spanning
/// +-(x_peak + 6 sqrt2 c), widened until the tails carry < 1e-6.
ReferenceCdf homodyne_reference(const DensityMatrix& rho, double theta, const QuadratureConvention& conv = {},
                                int n_points = 4001);

/// Marginal CDF of the Husimi function along Re (axis 0, x) or Im (axis 1, p),
/// integrated from a 2D Q-function grid.
ReferenceCdf heterodyne_marginal_reference(const DensityMatrix& rho, int axis, const QuadratureConvention& conv = {},
                                           int n_points = 401);

/// Largest vertical distance between the empirical CDF of `values` and `ref`,
/// checked on both sides of every sample jump and at every grid point.
/// Throws ConfigError on an empty sample.
double ks_statistic(std::span<const double> values, const ReferenceCdf& ref);
inline double ks_statistic(const EmpiricalSample& s, const ReferenceCdf& ref) { return ks_statistic(s.values, ref); }

/// n draws by inverse-CDF sampling of `ref`, driven by the counter RNG.
std::vector<double> sample_from_cdf(const ReferenceCdf& ref, int n, std::uint64_t seed, std::uint64_t stream = 0);

struct Histogram {
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // normalized to integrate to 1
  std::vector<long> counts;
};

/// Range [lo, hi]; values outside are clamped into the edge bins.
Histogram histogram(std::span<const double> values, int bins, double lo, double hi);
/// Range from the sample extremes.
Histogram histogram(std::span<const double> values, int bins);

struct Histogram2D {
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::vector<double> density;  // row-major [ix * ny + iy]
  std::vector<long> counts;
};

Histogram2D histogram2d(std::span<const cplx> values, int bins, double lo, double hi);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
  std::size_t n = 0;
};

Moments moments(std::span<const double> values);

}  // namespace qubitdyne
