#include "qubitdyne/phase_est.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qubitdyne/collision.hpp"
#include "qubitdyne/diagnostics.hpp"
#include "qubitdyne/rng.hpp"

namespace qubitdyne {

namespace {

double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

struct QuadratureBasis {
  CMatrix vectors;
  RVector values;

  QuadratureBasis(double theta, const QuadratureConvention& conv, int n_fock) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(quadrature_operator(theta, conv, n_fock));
    vectors = es.eigenvectors();
    values = es.eigenvalues();
  }
};

// State held in the eigenbasis of the truncated x_theta.
struct EigenFrame {
  const CMatrix& vectors;
  const RVector& values;
  CVector amps;

  EigenFrame(const CavityState& state, const QuadratureBasis& basis)
      : vectors(basis.vectors), values(basis.values), amps(basis.vectors.adjoint() * state.amps()) {}

  // Qubit in |+>, controlled kick exp(i eps 2^k x), phase varphi, X readout.
  // Returns 0 for g, 1 for e.
  int round(double epsilon, int k, double varphi, double u) {
    const auto n = amps.size();
    CVector g(n), e(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double kick = std::fmod(std::ldexp(epsilon * values(j), k), 2.0 * kPi);
      const cplx z = std::polar(1.0, kick + varphi);
      g(j) = 0.5 * (1.0 + z) * amps(j);
      e(j) = 0.5 * (1.0 - z) * amps(j);
    }
    const double pg = g.squaredNorm();
    const int outcome = u < pg ? 0 : 1;
    CVector& keep = outcome == 0 ? g : e;
    const double norm = keep.norm();
    if (!(norm > 1e-150)) throw NumericalError("phase estimation: branch with vanishing norm selected");
    amps = keep / norm;
    return outcome;
  }

  double photon_number() const {
    const CVector psi = vectors * amps;
    double acc = 0.0;
    for (Eigen::Index n = 0; n < psi.size(); ++n) acc += static_cast<double>(n) * std::norm(psi(n));
    return acc;
  }
};

double resolve_epsilon(const CavityState& state, const PhaseEstConfig& cfg) {
  cfg.validate();
  return cfg.epsilon > 0.0 ? cfg.epsilon : default_epsilon(DensityMatrix(state), cfg.conv);
}

}  // namespace

std::string to_string(PhaseEstMode mode) {
  switch (mode) {
    case PhaseEstMode::Iterative: return "iterative";
    case PhaseEstMode::NonAdaptive: return "nonadaptive";
    case PhaseEstMode::Adaptive: return "adaptive";
  }
  return "iterative";
}

PhaseEstMode parse_phase_est_mode(const std::string& text) {
  if (text == "iterative") return PhaseEstMode::Iterative;
  if (text == "nonadaptive" || text == "non-adaptive") return PhaseEstMode::NonAdaptive;
  if (text == "adaptive") return PhaseEstMode::Adaptive;
  throw ConfigError("unknown phase estimation mode '" + text + "'");
}

void PhaseEstConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("phase estimation: epsilon must be >= 0");
  if (n_m < 1) throw ConfigError("phase estimation: n_m must be >= 1");
  if (mode == PhaseEstMode::Iterative && n_m > 1000) throw ConfigError("phase estimation: iterative n_m must be <= 1000");
}

double default_epsilon(const DensityMatrix& rho, const QuadratureConvention& conv) {
  return kPi / (quadrature_support(rho, conv, 1e-6) + 2.0);
}

CMatrix controlled_phase_unitary(double epsilon, int k, double theta, int n_fock, const QuadratureConvention& conv) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(quadrature_operator(theta, conv, n_fock));
  CVector phases(n_fock);
  for (int j = 0; j < n_fock; ++j)
    phases(j) = std::polar(1.0, std::fmod(std::ldexp(epsilon * es.eigenvalues()(j), k), 2.0 * kPi));
  const CMatrix kick = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  if (std::norm(kick(n_fock - 1, 0)) > 1e-6)
    warn("controlled_phase_unitary: kick leaks " + std::to_string(std::norm(kick(n_fock - 1, 0))) +
         " of the vacuum into the top Fock level");
  CMatrix u = CMatrix::Zero(2 * n_fock, 2 * n_fock);
  u.topLeftCorner(n_fock, n_fock).setIdentity();
  u.bottomRightCorner(n_fock, n_fock) = kick;
  return u;
}

namespace {

PhaseEstimate iterative_pe(const CavityState& state, const PhaseEstConfig& cfg, double eps, const QuadratureBasis& basis,
                        std::uint64_t seed, std::uint64_t index) {
  EigenFrame frame(state, basis);
  const CounterRng rng(seed, index);
  PhaseEstimate est;
  double acc = 0.0;  // binary fraction 0.b_{k+1} b_{k+2} ...
  for (int r = 0; r < cfg.n_m; ++r) {
    const int k = cfg.n_m - 1 - r;  // least significant bit first
    const double omega = -kPi * acc;
    const int bit = frame.round(eps, k, omega, rng.uniform(static_cast<std::uint64_t>(r), 0));
    acc = 0.5 * (bit + acc);
    est.outcomes.push_back(static_cast<std::int8_t>(bit));
    est.phases.push_back(omega);
    if (cfg.trace) est.photon_trace.push_back(frame.photon_number());
  }
  est.phi_tilde = wrap_phase(2.0 * kPi * acc);
  est.x_tilde = est.phi_tilde / eps;
  return est;
}

}  // namespace

namespace {

PhaseEstimate nonadaptive_pe(const CavityState& state, const PhaseEstConfig& cfg, double eps, const QuadratureBasis& basis,
                        std::uint64_t seed, std::uint64_t index) {
  EigenFrame frame(state, basis);
  const CounterRng rng(seed, index);
  PhaseEstimate est;
  int g_real = 0, g_imag = 0;
  for (int r = 0; r < 2 * cfg.n_m; ++r) {
    const bool imag = r % 2 == 1;
    const double varphi = imag ? -kHalfPi : 0.0;
    const int bit = frame.round(eps, 0, varphi, rng.uniform(static_cast<std::uint64_t>(r), 0));
    (imag ? g_imag : g_real) += bit == 0;
    est.outcomes.push_back(static_cast<std::int8_t>(bit));
    est.phases.push_back(varphi);
    if (cfg.trace) est.photon_trace.push_back(frame.photon_number());
  }
  const double pr = static_cast<double>(g_real) / cfg.n_m, pi = static_cast<double>(g_imag) / cfg.n_m;
  est.phi_tilde = wrap_phase(std::arg(cplx(2.0 * pr - 1.0, 2.0 * pi - 1.0)));
  est.x_tilde = est.phi_tilde / eps;
  return est;
}

}  // namespace

namespace {

PhaseEstimate adaptive_pe(const CavityState& state, const PhaseEstConfig& cfg, double eps, const QuadratureBasis& basis,
                        std::uint64_t seed, std::uint64_t index) {
  EigenFrame frame(state, basis);
  const CounterRng rng(seed, index);

  std::vector<double> grid(kAdaptiveGrid), log_post(kAdaptiveGrid, 0.0);
  std::vector<cplx> e1(kAdaptiveGrid), e2(kAdaptiveGrid);
  for (int g = 0; g < kAdaptiveGrid; ++g) {
    grid[g] = -kPi + 2.0 * kPi * (g + 1) / kAdaptiveGrid;
    e1[g] = std::polar(1.0, grid[g]);
    e2[g] = std::polar(1.0, 2.0 * grid[g]);
  }
  std::vector<cplx> cand(kAdaptiveCandidates);
  for (int c = 0; c < kAdaptiveCandidates; ++c) cand[c] = std::polar(1.0, 2.0 * kPi * c / kAdaptiveCandidates);

  std::vector<double> w(kAdaptiveGrid);
  auto moments = [&](cplx& s1, cplx& s2) {
    const double top = *std::max_element(log_post.begin(), log_post.end());
    double s0 = 0.0;
    for (int g = 0; g < kAdaptiveGrid; ++g) {
      w[g] = std::exp(log_post[g] - top);
      s0 += w[g];
    }
    s1 = s2 = 0.0;
    for (int g = 0; g < kAdaptiveGrid; ++g) {
      w[g] /= s0;
      s1 += w[g] * e1[g];
      s2 += w[g] * e2[g];
    }
  };

  PhaseEstimate est;
  cplx s1, s2;
  for (int r = 0; r < cfg.n_m; ++r) {
    moments(s1, s2);
    // Sum over both outcomes of |int e^{i phi} P(x[m] | phi)|, up to a common factor.
    int best = 0;
    double best_score = -1.0;
    for (int c = 0; c < kAdaptiveCandidates; ++c) {
      const cplx b = 0.5 * (cand[c] * s2 + std::conj(cand[c]));
      const double score = std::abs(s1 + b) + std::abs(s1 - b);
      if (score > best_score + 1e-12) {
        best_score = score;
        best = c;
      }
    }
    const double varphi = 2.0 * kPi * best / kAdaptiveCandidates;
    const int bit = frame.round(eps, 0, varphi, rng.uniform(static_cast<std::uint64_t>(r), 0));
    const double sign = bit == 0 ? 1.0 : -1.0;
    for (int g = 0; g < kAdaptiveGrid; ++g)
      log_post[g] += std::log(std::max(0.5 * (1.0 + sign * std::cos(grid[g] + varphi)), 1e-300));
    est.outcomes.push_back(static_cast<std::int8_t>(bit));
    est.phases.push_back(varphi);
    if (cfg.trace) est.photon_trace.push_back(frame.photon_number());
  }
  moments(s1, s2);
  est.phi_tilde = wrap_phase(std::arg(s1));
  est.x_tilde = est.phi_tilde / eps;
  return est;
}

}  // namespace

namespace {

PhaseEstimate dispatch(const CavityState& state, const PhaseEstConfig& cfg, double eps, const QuadratureBasis& basis,
                       std::uint64_t seed, std::uint64_t index) {
  switch (cfg.mode) {
    case PhaseEstMode::Iterative: return iterative_pe(state, cfg, eps, basis, seed, index);
    case PhaseEstMode::NonAdaptive: return nonadaptive_pe(state, cfg, eps, basis, seed, index);
    case PhaseEstMode::Adaptive: return adaptive_pe(state, cfg, eps, basis, seed, index);
  }
  return iterative_pe(state, cfg, eps, basis, seed, index);
}

}  // namespace

PhaseEstimate run_iterative_pe(const CavityState& state, const PhaseEstConfig& cfg, std::uint64_t seed,
                               std::uint64_t index) {
  return iterative_pe(state, cfg, resolve_epsilon(state, cfg), QuadratureBasis(cfg.theta, cfg.conv, state.n_fock()),
                      seed, index);
}

PhaseEstimate run_nonadaptive_pe(const CavityState& state, const PhaseEstConfig& cfg, std::uint64_t seed,
                                 std::uint64_t index) {
  return nonadaptive_pe(state, cfg, resolve_epsilon(state, cfg), QuadratureBasis(cfg.theta, cfg.conv, state.n_fock()),
                        seed, index);
}

PhaseEstimate run_adaptive_pe(const CavityState& state, const PhaseEstConfig& cfg, std::uint64_t seed,
                              std::uint64_t index) {
  return adaptive_pe(state, cfg, resolve_epsilon(state, cfg), QuadratureBasis(cfg.theta, cfg.conv, state.n_fock()),
                     seed, index);
}

PhaseEstimate run_phase_estimation(const CavityState& state, const PhaseEstConfig& cfg, std::uint64_t seed,
                                   std::uint64_t index) {
  return dispatch(state, cfg, resolve_epsilon(state, cfg), QuadratureBasis(cfg.theta, cfg.conv, state.n_fock()), seed,
                  index);
}

std::vector<PhaseEstimate> run_pe_ensemble(const CavityState& state, const PhaseEstConfig& cfg, int n_traj,
                                           std::uint64_t seed, int workers) {
  const double eps = resolve_epsilon(state, cfg);
  const QuadratureBasis basis(cfg.theta, cfg.conv, state.n_fock());
  std::vector<PhaseEstimate> out(std::max(n_traj, 0));
  parallel_for(n_traj, workers,
               [&](int i) { out[i] = dispatch(state, cfg, eps, basis, seed, static_cast<std::uint64_t>(i)); });
  return out;
}

double iterative_pe_error_bound(double delta, double epsilon, int n_m) {
  const double denom = 2.0 * std::ldexp(epsilon, n_m) * delta - 2.0;
  return denom > 1.0 ? 1.0 / denom : 1.0;
}

double chernoff_bound(double delta, double epsilon, int n_m) {
  return std::min(1.0, 4.0 * std::exp(-std::sin(delta / epsilon) * n_m / (2.0 * kSqrt2)));
}

double hoeffding_bound(double delta, double epsilon, int n_m) {
  const double s = std::sin(std::min(epsilon * delta, kHalfPi));
  return std::min(1.0, 4.0 * std::exp(-n_m * s * s / 4.0));
}

void write_phase_est_csv(std::ostream& os, const std::vector<PhaseEstimate>& runs) {
  os << "run,x_tilde,phi_tilde,outcomes\n";
  os.precision(17);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    os << i << ',' << runs[i].x_tilde << ',' << runs[i].phi_tilde << ',';
    for (auto b : runs[i].outcomes) os << static_cast<char>('0' + b);
    os << '\n';
  }
}

}  // namespace qubitdyne
