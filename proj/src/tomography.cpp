#include "qubitdyne/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qubitdyne/collision.hpp"
#include "qubitdyne/records.hpp"
#include "qubitdyne/refstats.hpp"

namespace qubitdyne {

namespace {

constexpr std::array<double, 8> kGaussNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                               0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                 0.2223810344533745, 0.1012285362903763};

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// e^{-i (m - n) theta}
CMatrix rotation_phases(double theta, int n) {
  CMatrix e(n, n);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k) e(m, k) = std::polar(1.0, -(m - k) * theta);
  return e;
}

}  // namespace

std::size_t TomographyDataset::total_samples() const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.size();
  return n;
}

void TomographyDataset::validate() const {
  if (angles.size() != samples.size()) throw ConfigError("tomography dataset: angle and sample lists differ in length");
  if (!(eta > 0.5 && eta <= 1.0)) throw ConfigError("tomography dataset: eta must lie in (0.5, 1]");
  if (n_fock < 1) throw ConfigError("tomography dataset: n_fock must be positive");
  std::vector<double> distinct;
  for (std::size_t k = 0; k < angles.size(); ++k) {
    if (!(angles[k] >= 0.0 && angles[k] < kPi)) throw ConfigError("tomography dataset: angles must lie in [0, pi)");
    if (samples[k].empty()) continue;
    if (std::none_of(distinct.begin(), distinct.end(), [&](double a) { return std::abs(a - angles[k]) < 1e-12; }))
      distinct.push_back(angles[k]);
  }
  if (distinct.size() < 2) throw ConfigError("tomography dataset: need samples at >= 2 distinct angles");
}

std::vector<double> BinGrid::centers() const {
  std::vector<double> c(bins);
  for (int j = 0; j < bins; ++j) c[j] = lo + (j + 0.5) * width;
  return c;
}

int BinGrid::index(double x) const {
  const auto j = static_cast<long>(std::floor((x - lo) / width));
  return static_cast<int>(std::clamp<long>(j, 0, bins - 1));
}

BinGrid default_bins(int n_fock, const QuadratureConvention& conv, double width) {
  if (!(width > 0.0)) throw ConfigError("bin width must be positive");
  const double reach = (std::sqrt(2.0 * n_fock + 1.0) + 5.0) * kSqrt2 * conv.c;
  BinGrid g;
  g.bins = static_cast<int>(std::ceil(2.0 * reach / width));
  g.width = width;
  g.lo = -0.5 * g.bins * width;
  return g;
}

RMatrix povm_bin_operators(const BinGrid& grid, double eta, int n_fock, const QuadratureConvention& conv) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("povm: eta must lie in (0, 1]");
  if (grid.bins < 1) throw ConfigError("povm: empty bin grid");
  const int nn = static_cast<int>(kGaussNodes.size());
  std::vector<double> ys, wts;
  ys.reserve(grid.bins * nn);
  wts.reserve(grid.bins * nn);
  for (int j = 0; j < grid.bins; ++j) {
    const double mid = grid.lo + (j + 0.5) * grid.width;
    for (int q = 0; q < nn; ++q) {
      ys.push_back(mid + 0.5 * grid.width * kGaussNodes[q]);
      wts.push_back(0.5 * grid.width * kGaussWeights[q]);
    }
  }
  const RMatrix psi = hermite_functions(ys, n_fock, conv);
  RMatrix out = RMatrix::Zero(grid.bins, static_cast<Eigen::Index>(n_fock) * n_fock);

  const bool ideal = eta >= 1.0 - 1e-12;
  const double s = std::sqrt(std::max(1.0 - eta, 0.0)) * conv.c;
  const double root = std::sqrt(eta);
  std::vector<Eigen::Index> sel;
  std::vector<double> sel_w;
  for (int j = 0; j < grid.bins; ++j) {
    sel.clear();
    sel_w.clear();
    if (ideal) {
      for (int q = 0; q < nn; ++q) {
        sel.push_back(j * nn + q);
        sel_w.push_back(wts[j * nn + q]);
      }
    } else {
      const double lo = grid.lo + j * grid.width, hi = lo + grid.width;
      for (std::size_t k = 0; k < ys.size(); ++k) {
        const double mu = root * ys[k];
        const double upper = j + 1 == grid.bins ? 1.0 : normal_cdf((hi - mu) / s);
        const double lower = j == 0 ? 0.0 : normal_cdf((lo - mu) / s);
        const double w = upper - lower;
        if (w > 1e-15) {
          sel.push_back(static_cast<Eigen::Index>(k));
          sel_w.push_back(wts[k] * w);
        }
      }
    }
    if (sel.empty()) continue;
    RMatrix b(n_fock, static_cast<Eigen::Index>(sel.size()));
    for (std::size_t i = 0; i < sel.size(); ++i) b.col(i) = psi.col(sel[i]) * std::sqrt(sel_w[i]);
    RMatrix m = b * b.transpose();
    out.row(j) = Eigen::Map<const RVector>(m.data(), m.size()).transpose();
  }
  return out;
}

double povm_completeness_error(const std::vector<CMatrix>& povm) {
  if (povm.empty()) return 1.0;
  CMatrix sum = CMatrix::Zero(povm.front().rows(), povm.front().cols());
  for (const auto& p : povm) sum += p;
  sum -= CMatrix::Identity(sum.rows(), sum.cols());
  return sum.cwiseAbs().maxCoeff();
}

std::vector<CMatrix> build_povm(double theta, const BinGrid& grid, double eta, int n_fock,
                                const QuadratureConvention& conv) {
  const RMatrix flat = povm_bin_operators(grid, eta, n_fock, conv);
  const CMatrix phases = rotation_phases(theta, n_fock).conjugate();
  std::vector<CMatrix> out;
  out.reserve(grid.bins);
  for (int j = 0; j < grid.bins; ++j) {
    RMatrix m = Eigen::Map<const RMatrix>(flat.row(j).transpose().eval().data(), n_fock, n_fock);
    out.push_back(m.cast<cplx>().cwiseProduct(phases));
  }
  const double err = povm_completeness_error(out);
  if (err > 1e-2)
    throw NumericalError("build_povm: elements sum to identity only within " + std::to_string(err));
  return out;
}

ReconstructionResult mle_reconstruct(const TomographyDataset& data, const TomographyOptions& opts,
                                     const CavityState* target) {
  data.validate();
  const int n = data.n_fock;
  const BinGrid grid = default_bins(n, data.conv, opts.bin_width);
  const RMatrix flat = povm_bin_operators(grid, data.eta, n, data.conv);
  {
    RVector sum = flat.colwise().sum().transpose();
    Eigen::Map<RMatrix> s(sum.data(), n, n);
    const double err = (s - RMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (err > 1e-2) throw NumericalError("mle_reconstruct: POVM completeness error " + std::to_string(err));
  }

  struct AngleData {
    CMatrix phases;            // e^{-i(m-n)theta}
    std::vector<int> bins;     // occupied bins
    RVector counts;
    RMatrix ops;               // rows of `flat` for occupied bins
  };
  std::vector<AngleData> per_angle;
  double total = 0.0;
  for (std::size_t k = 0; k < data.angles.size(); ++k) {
    if (data.samples[k].empty()) continue;
    std::map<int, double> hist;
    for (double x : data.samples[k]) hist[grid.index(x)] += 1.0;
    AngleData a;
    a.phases = rotation_phases(data.angles[k], n);
    a.counts.resize(static_cast<Eigen::Index>(hist.size()));
    a.ops.resize(static_cast<Eigen::Index>(hist.size()), flat.cols());
    Eigen::Index i = 0;
    for (const auto& [bin, c] : hist) {
      a.bins.push_back(bin);
      a.counts(i) = c;
      a.ops.row(i) = flat.row(bin);
      ++i;
    }
    total += static_cast<double>(data.samples[k].size());
    per_angle.push_back(std::move(a));
  }

  // Log-likelihood per sample and the R operator at rho.
  auto evaluate = [&](const CMatrix& rho, CMatrix& r) {
    double ll = 0.0;
    r.setZero(n, n);
    for (const auto& a : per_angle) {
      const RMatrix rot = rho.cwiseProduct(a.phases).real();
      const RVector p = a.ops * Eigen::Map<const RVector>(rot.data(), rot.size());
      RVector w(p.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double pi = std::max(p(i), 1e-300);
        ll += a.counts(i) * std::log(pi);
        w(i) = a.counts(i) / (total * pi);
      }
      const RVector rk = a.ops.transpose() * w;
      r += Eigen::Map<const RMatrix>(rk.data(), n, n).cast<cplx>().cwiseProduct(a.phases.conjugate());
    }
    return ll / total;
  };
  auto normalized = [](CMatrix m) {
    m = 0.5 * (m + m.adjoint()).eval();
    return CMatrix(m / m.trace().real());
  };

  ReconstructionResult res;
  CMatrix rho = CMatrix::Identity(n, n) / static_cast<double>(n);
  CMatrix r(n, n), r_next(n, n);
  double ll = evaluate(rho, r);
  res.log_likelihood.push_back(ll);
  const CMatrix id = CMatrix::Identity(n, n);
  for (int it = 0; it < opts.max_iter; ++it) {
    CMatrix next = normalized(r * rho * r);
    double ll_next = evaluate(next, r_next);
    double eps = 1.0;
    while (ll_next < ll && eps > 1e-8) {
      const CMatrix step = id + eps * r;
      next = normalized(step * rho * step);
      ll_next = evaluate(next, r_next);
      eps *= 0.5;
    }
    if (ll_next < ll) {
      res.converged = true;  // no ascent direction left at working precision
      break;
    }
    const double change = (next - rho).cwiseAbs().maxCoeff();
    rho = std::move(next);
    std::swap(r, r_next);
    ll = ll_next;
    res.log_likelihood.push_back(ll);
    res.iterations = it + 1;
    if (change < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.rho = DensityMatrix(rho);
  if (target) res.fidelity = fidelity(res.rho, *target);
  return res;
}

std::vector<EtaQPoint> calibrate_eta_q(std::span<const double> readout_fidelities, const EtaQSettings& s) {
  if (s.n_traj < 10) throw ConfigError("calibrate_eta_q: need at least 10 trajectories to fit a center");
  const int n_fock = s.state.default_n_fock();
  const CavityState psi = prepare_state(s.state, n_fock);
  const FilterWeights f = filter_constant(s.phi, 1e-6, s.n_bit, s.conv);
  EnsembleOptions eo;
  eo.workers = s.workers;
  auto center_at = [&](double flip) {
    auto sched = CollisionSchedule::constant(s.phi, s.n_bit, MeasurementBasis::for_quadrature(0.0));
    sched.with_readout_error(flip);
    const auto runs = run_ensemble(psi, sched, s.n_traj, s.seed, eo);
    const auto j = homodyne_values(runs, f, 0.0);
    return moments(j).mean;
  };
  const double ideal = center_at(0.0);
  if (std::abs(ideal) < 1e-3) throw NumericalError("calibrate_eta_q: ideal center too close to zero to calibrate");
  std::vector<EtaQPoint> out;
  for (double fid : readout_fidelities) {
    if (!(fid > 0.5 && fid <= 1.0)) throw ConfigError("calibrate_eta_q: readout fidelity must lie in (0.5, 1]");
    EtaQPoint p;
    p.readout_fidelity = fid;
    p.center = fid >= 1.0 ? ideal : center_at(1.0 - fid);
    p.eta_q = (p.center / ideal) * (p.center / ideal);
    out.push_back(p);
  }
  return out;
}

void write_reconstruction_json(std::ostream& os, const ReconstructionResult& result) {
  nlohmann::json j;
  const auto& m = result.rho.matrix();
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    nlohmann::json rr = nlohmann::json::array(), ii = nlohmann::json::array();
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
      rr.push_back(m(a, b).real());
      ii.push_back(m(a, b).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  j["n_fock"] = m.rows();
  j["real"] = re;
  j["imag"] = im;
  j["fidelity"] = result.fidelity ? nlohmann::json(*result.fidelity) : nlohmann::json(nullptr);
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["log_likelihood"] = result.log_likelihood.empty() ? 0.0 : result.log_likelihood.back();
  os << j.dump(2) << '\n';
}

void write_dataset_csv(std::ostream& os, const TomographyDataset& data) {
  os << "theta,x\n";
  os.precision(17);
  for (std::size_t k = 0; k < data.angles.size(); ++k)
    for (double x : data.samples[k]) os << data.angles[k] << ',' << x << '\n';
}

TomographyDataset read_dataset_csv(std::istream& is, int n_fock, double eta, const QuadratureConvention& conv) {
  TomographyDataset d;
  d.n_fock = n_fock;
  d.eta = eta;
  d.conv = conv;
  std::string line;
  int lineno = 0;
  std::map<double, std::size_t> slot;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("theta", 0) == 0) continue;
    std::istringstream ss(line);
    double theta = 0.0, x = 0.0;
    char comma = 0;
    if (!(ss >> theta >> comma >> x) || comma != ',')
      throw ConfigError("dataset line " + std::to_string(lineno) + ": expected 'theta,x'");
    auto [it, inserted] = slot.try_emplace(theta, d.angles.size());
    if (inserted) {
      d.angles.push_back(theta);
      d.samples.emplace_back();
    }
    d.samples[it->second].push_back(x);
  }
  return d;
}

std::vector<double> tomography_angles(int n_angles) {
  std::vector<double> a(std::max(n_angles, 0));
  for (int k = 0; k < n_angles; ++k) a[k] = kPi * k / n_angles;
  return a;
}

}  // namespace qubitdyne
