#include "qubitdyne/refstats.hpp"

#include <algorithm>
#include <cmath>

#include "qubitdyne/rng.hpp"

namespace qubitdyne {

double ReferenceCdf::operator()(double x) const {
  if (grid.empty() || x <= grid.front()) return grid.empty() ? 0.0 : (x < grid.front() ? 0.0 : cdf.front());
  if (x >= grid.back()) return 1.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto i = static_cast<std::size_t>(it - grid.begin());
  const double t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
  return cdf[i - 1] + t * (cdf[i] - cdf[i - 1]);
}

void ReferenceCdf::validate() const {
  if (grid.size() < 2 || grid.size() != cdf.size()) throw NumericalError("reference CDF needs matching grid/cdf");
  if (cdf.front() > 1e-6) throw NumericalError("reference CDF does not start at 0 (" + std::to_string(cdf.front()) + ")");
  if (cdf.back() < 1.0 - 1e-6) throw NumericalError("reference CDF does not reach 1 (" + std::to_string(cdf.back()) + ")");
  for (std::size_t i = 1; i < cdf.size(); ++i)
    if (cdf[i] < cdf[i - 1]) throw NumericalError("reference CDF is not monotone");
}

ReferenceCdf cdf_from_pdf(std::span<const double> grid, std::span<const double> pdf) {
  if (grid.size() != pdf.size() || grid.size() < 2) throw DimensionError("cdf_from_pdf: bad grid");
  ReferenceCdf r;
  r.grid.assign(grid.begin(), grid.end());
  r.cdf.assign(grid.size(), 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i)
    r.cdf[i] = r.cdf[i - 1] + 0.5 * (std::max(pdf[i], 0.0) + std::max(pdf[i - 1], 0.0)) * (grid[i] - grid[i - 1]);
  const double total = r.cdf.back();
  if (!(total > 0.0)) throw NumericalError("cdf_from_pdf: density has no mass");
  for (auto& v : r.cdf) v /= total;
  return r;
}

ReferenceCdf homodyne_reference(const DensityMatrix& rho, double theta, const QuadratureConvention& conv,
                                int n_points) {
  const double unit = kSqrt2 * conv.c;
  // Locate the density peak on a coarse grid first.
  const double coarse_reach = (std::sqrt(2.0 * rho.n_fock() + 1.0) + 4.0) * unit;
  const auto coarse = linspace(-coarse_reach, coarse_reach, 801);
  const auto coarse_pdf = quadrature_pdf(rho, theta, coarse, conv, false);
  const auto peak = std::max_element(coarse_pdf.begin(), coarse_pdf.end()) - coarse_pdf.begin();
  double reach = std::abs(coarse[peak]) + 6.0 * unit;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const auto grid = linspace(-reach, reach, n_points);
    const auto pdf = quadrature_pdf(rho, theta, grid, conv, false);
    double mass = 0.0, left = 0.5 * pdf.front() * (grid[1] - grid[0]), right = 0.5 * pdf.back() * (grid[1] - grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) mass += 0.5 * (pdf[i] + pdf[i - 1]) * (grid[i] - grid[i - 1]);
    // Tail estimate: first and last 1% of the grid.
    const auto edge = std::max<std::size_t>(1, grid.size() / 100);
    for (std::size_t i = 0; i < edge; ++i) {
      left += pdf[i] * (grid[1] - grid[0]);
      right += pdf[grid.size() - 1 - i] * (grid[1] - grid[0]);
    }
    if (std::abs(mass - 1.0) < 1e-5 && left < 1e-7 && right < 1e-7) {
      auto ref = cdf_from_pdf(grid, pdf);
      ref.validate();
      return ref;
    }
    reach *= 1.25;
  }
  throw NumericalError("homodyne_reference: could not bracket the quadrature support");
}

ReferenceCdf heterodyne_marginal_reference(const DensityMatrix& rho, int axis, const QuadratureConvention& conv,
                                           int n_points) {
  if (axis != 0 && axis != 1) throw ConfigError("heterodyne marginal axis must be 0 or 1");
  const double unit = kSqrt2 * conv.c;
  // Q-function reach: state support plus a vacuum-width margin.
  const double reach = (std::sqrt(4.0 * rho.mean_photon_number() + 2.0) + 7.0) * unit;
  const auto g = linspace(-reach, reach, n_points);
  std::vector<double> xs, ps;
  xs.reserve(g.size() * g.size());
  ps.reserve(g.size() * g.size());
  for (double a : g)
    for (double b : g) {
      xs.push_back(axis == 0 ? a : b);
      ps.push_back(axis == 0 ? b : a);
    }
  const auto q = husimi_q_xp(rho, xs, ps, conv);
  std::vector<double> marginal(g.size(), 0.0);
  const double dx = g[1] - g[0];
  for (std::size_t i = 0; i < g.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double w = (j == 0 || j + 1 == g.size()) ? 0.5 : 1.0;
      acc += w * q[i * g.size() + j];
    }
    marginal[i] = acc * dx;
  }
  auto ref = cdf_from_pdf(g, marginal);
  ref.validate();
  return ref;
}

double ks_statistic(std::span<const double> values, const ReferenceCdf& ref) {
  if (values.empty()) throw ConfigError("ks_statistic: empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = ref(v[i]);
    // Empirical CDF just below and at the jump; ties collapse to the last one.
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  for (std::size_t k = 0; k < ref.grid.size(); ++k) {
    const auto below = std::upper_bound(v.begin(), v.end(), ref.grid[k]) - v.begin();
    d = std::max(d, std::abs(static_cast<double>(below) / n - ref.cdf[k]));
  }
  // Ties: the two-sided check above can overstate at repeated values; recompute
  // at distinct points.
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    if (j - i > 1) {
      const double f = ref(v[i]);
      d = std::max(d, std::abs(f - static_cast<double>(i) / n));
      d = std::max(d, std::abs(static_cast<double>(j) / n - f));
    }
    i = j;
  }
  return std::min(d, 1.0);
}

std::vector<double> sample_from_cdf(const ReferenceCdf& ref, int n, std::uint64_t seed, std::uint64_t stream) {
  const CounterRng rng(seed, stream);
  std::vector<double> out(std::max(n, 0));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(static_cast<std::uint64_t>(i), 0);
    auto it = std::lower_bound(ref.cdf.begin(), ref.cdf.end(), u);
    if (it == ref.cdf.begin()) {
      out[i] = ref.grid.front();
      continue;
    }
    if (it == ref.cdf.end()) {
      out[i] = ref.grid.back();
      continue;
    }
    const auto k = static_cast<std::size_t>(it - ref.cdf.begin());
    const double span = ref.cdf[k] - ref.cdf[k - 1];
    const double t = span > 0.0 ? (u - ref.cdf[k - 1]) / span : 0.5;
    out[i] = ref.grid[k - 1] + t * (ref.grid[k] - ref.grid[k - 1]);
  }
  return out;
}

Histogram histogram(std::span<const double> values, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw ConfigError("histogram: need bins >= 1 and hi > lo");
  Histogram h;
  h.edges = linspace(lo, hi, bins + 1);
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / bins;
  for (double x : values) {
    auto k = static_cast<long>(std::floor((x - lo) / width));
    k = std::clamp<long>(k, 0, bins - 1);
    ++h.counts[k];
  }
  h.density.assign(bins, 0.0);
  if (!values.empty())
    for (int k = 0; k < bins; ++k) h.density[k] = static_cast<double>(h.counts[k]) / (values.size() * width);
  return h;
}

Histogram histogram(std::span<const double> values, int bins) {
  if (values.empty()) return histogram(values, bins, -1.0, 1.0);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx > *mn ? *mx : *mn + 1.0;
  return histogram(values, bins, lo, hi);
}

Histogram2D histogram2d(std::span<const cplx> values, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw ConfigError("histogram2d: need bins >= 1 and hi > lo");
  Histogram2D h;
  h.x_edges = linspace(lo, hi, bins + 1);
  h.y_edges = h.x_edges;
  h.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  const double width = (hi - lo) / bins;
  for (const cplx& z : values) {
    const long ix = std::clamp<long>(static_cast<long>(std::floor((z.real() - lo) / width)), 0, bins - 1);
    const long iy = std::clamp<long>(static_cast<long>(std::floor((z.imag() - lo) / width)), 0, bins - 1);
    ++h.counts[ix * bins + iy];
  }
  h.density.assign(h.counts.size(), 0.0);
  if (!values.empty())
    for (std::size_t k = 0; k < h.counts.size(); ++k)
      h.density[k] = static_cast<double>(h.counts[k]) / (values.size() * width * width);
  return h;
}

Moments moments(std::span<const double> values) {
  Moments m;
  m.n = values.size();
  if (values.empty()) return m;
  double acc = 0.0;
  for (double v : values) acc += v;
  m.mean = acc / m.n;
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.variance = m.n > 1 ? ss / (m.n - 1) : 0.0;
  m.std_error = std::sqrt(m.variance / m.n);
  return m;
}

}  // namespace qubitdyne
