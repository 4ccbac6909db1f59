#include "qubitdyne/records.hpp"

#include <cmath>
#include <ostream>

#include "qubitdyne/diagnostics.hpp"

namespace qubitdyne {

namespace {

std::vector<double> step_times(std::size_t n, double dt) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * dt;
  return t;
}

bool same_axis(MeasurementBasis a, MeasurementBasis b) {
  return std::abs(std::remainder(a.axis - b.axis, 2.0 * kPi)) < 1e-9;
}

}  // namespace

double FilterWeights::sum_of_squares() const {
  double acc = 0.0;
  for (double w : weights) acc += w * w;
  return acc;
}

FilterWeights filter_constant(double phi, double dt, int n_bit, const QuadratureConvention& conv) {
  if (!(phi > 0.0)) throw ConfigError("filter_constant: phi must be positive");
  FilterWeights f;
  f.convention_c = conv.c;
  f.kind = FilterKind::ConstantGamma;
  f.weights.resize(std::max(n_bit, 0));
  for (int n = 0; n < n_bit; ++n) f.weights[n] = conv.c * phi * std::exp(-0.5 * phi * phi * n);
  f.times = step_times(f.weights.size(), dt);
  return f;
}

FilterWeights filter_time_dependent(std::span<const double> phi_seq, double dt, const QuadratureConvention& conv) {
  FilterWeights f;
  f.convention_c = conv.c;
  f.kind = FilterKind::TimeDependent;
  f.weights.resize(phi_seq.size());
  double extracted = 0.0;  // sum_{m<n} phi_m^2
  for (std::size_t n = 0; n < phi_seq.size(); ++n) {
    if (!(phi_seq[n] > 0.0)) throw ConfigError("filter_time_dependent: phi must be positive");
    f.weights[n] = conv.c * phi_seq[n] * std::exp(-0.5 * extracted);
    extracted += phi_seq[n] * phi_seq[n];
  }
  f.times = step_times(f.weights.size(), dt);
  return f;
}

FilterWeights filter_lossy_optimal(std::span<const double> phi_seq, double dt, double t_step, double kappa,
                                   double eta_m, const QuadratureConvention& conv) {
  if (!(eta_m > 0.5 && eta_m <= 1.0)) throw ConfigError("filter_lossy_optimal: eta_m must lie in (0.5, 1]");
  if (!(kappa >= 0.0)) throw ConfigError("filter_lossy_optimal: kappa must be non-negative");
  FilterWeights f;
  f.convention_c = conv.c;
  f.kind = FilterKind::LossyOptimal;
  f.weights.resize(phi_seq.size());
  if (phi_seq.empty()) return f;

  const double loss = kappa * t_step;
  double extracted = 0.0;
  double norm = 0.0;
  for (std::size_t n = 0; n < phi_seq.size(); ++n) {
    const double phi = phi_seq[n];
    if (!(phi > 0.0)) throw ConfigError("filter_lossy_optimal: phi must be positive");
    const double envelope = std::exp(-0.5 * loss * static_cast<double>(n) - 0.5 * extracted);
    f.weights[n] = conv.c * phi * envelope;
    norm += -std::expm1(-phi * phi) * envelope * envelope;
    extracted += phi * phi;
  }
  // Geometric tail of the normalization integral beyond the record.
  const double last = phi_seq.back();
  const double decay = loss + last * last;
  const double tail_start = std::exp(-loss * static_cast<double>(phi_seq.size()) - extracted);
  norm += tail_start * (-std::expm1(-last * last)) / (-std::expm1(-decay));
  if (!(norm >= 1e-12)) throw NumericalError("filter_lossy_optimal: divergent normalization");
  for (auto& w : f.weights) w /= eta_m * norm;
  f.times = step_times(f.weights.size(), dt);
  return f;
}

double lossy_filter_variance(double kappa_over_gamma, double eta_m, const QuadratureConvention& conv) {
  return conv.c * conv.c * (1.0 + kappa_over_gamma) / (eta_m * eta_m);
}

double chebyshev_bound(double variance, double delta) { return variance / (delta * delta); }

double readout_contrast(double p_flip) { return 1.0 - 2.0 * p_flip; }

DyneValue assemble_homodyne(const MeasurementRecord& record, const FilterWeights& weights, double theta) {
  if (weights.size() < record.size())
    throw DimensionError("assemble_homodyne: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(record.size()) + " outcomes");
  const auto expected = MeasurementBasis::for_quadrature(theta);
  double j = 0.0;
  for (std::size_t n = 0; n < record.size(); ++n) {
    if (!same_axis(record.bases[n], expected))
      throw BasisMismatchError("assemble_homodyne: step " + std::to_string(n) + " measured on axis " +
                               std::to_string(record.bases[n].axis) + ", quadrature angle needs " +
                               std::to_string(expected.axis));
    j += weights.weights[n] * record.outcomes[n];
  }
  return {cplx(j, 0.0), theta, false};
}

DyneValue assemble_heterodyne(const MeasurementRecord& record, const FilterWeights& weights) {
  if (weights.size() < record.size())
    throw DimensionError("assemble_heterodyne: fewer weights than outcomes");
  std::size_t paired = record.size() - record.size() % 2;
  if (paired != record.size()) warn("assemble_heterodyne: odd record length, final unpaired step dropped");
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < paired; n += 2) {
    if (!same_axis(record.bases[n], MeasurementBasis::Y()) || !same_axis(record.bases[n + 1], MeasurementBasis::X()))
      throw BasisMismatchError("assemble_heterodyne: steps " + std::to_string(n) + "," + std::to_string(n + 1) +
                               " are not a (Y, X) pair");
    // <sigma_y> tracks -<x>, <sigma_x> tracks <p>.
    re -= 2.0 * weights.weights[n] * record.outcomes[n];
    im += 2.0 * weights.weights[n + 1] * record.outcomes[n + 1];
  }
  return {cplx(re, im), 0.0, true};
}

std::vector<double> homodyne_values(const std::vector<TrajectoryResult>& runs, const FilterWeights& weights,
                                    double theta) {
  std::vector<double> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(assemble_homodyne(r.record, weights, theta).value.real());
  return out;
}

std::vector<cplx> heterodyne_values(const std::vector<TrajectoryResult>& runs, const FilterWeights& weights) {
  std::vector<cplx> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(assemble_heterodyne(r.record, weights).value);
  return out;
}

MeasurementRecord truncate(const MeasurementRecord& record, std::size_t n) {
  n = std::min(n, record.size());
  MeasurementRecord out;
  out.outcomes.assign(record.outcomes.begin(), record.outcomes.begin() + n);
  out.bases.assign(record.bases.begin(), record.bases.begin() + n);
  out.times.assign(record.times.begin(), record.times.begin() + std::min(n, record.times.size()));
  return out;
}

double collection_efficiency(double phi, double dt, double t_step, double kappa) {
  const double gamma = phi * phi / dt;
  return gamma / (gamma + (t_step / dt) * kappa);
}

EfficiencyCompensation compensate_efficiency(double eta, double eta_q) {
  if (!(eta > 0.0 && eta <= 1.0) || !(eta_q > 0.0 && eta_q <= 1.0))
    throw ConfigError("efficiencies must lie in (0, 1]");
  EfficiencyCompensation c{eta, eta_q};
  if (c.total() <= 0.5)
    warn("detection efficiency " + std::to_string(c.total()) + " <= 0.5; loss compensation is ill-conditioned");
  return c;
}

void write_filter_csv(std::ostream& os, const FilterWeights& weights) {
  os << "n,t,f\n";
  os.precision(17);
  for (std::size_t n = 0; n < weights.size(); ++n)
    os << n << ',' << (n < weights.times.size() ? weights.times[n] : 0.0) << ',' << weights.weights[n] << '\n';
}

}  // namespace qubitdyne
