#include "qubitdyne/collision.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "qubitdyne/diagnostics.hpp"
#include "qubitdyne/rng.hpp"

namespace qubitdyne {

namespace {

bool near(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * kPi)) < 1e-12; }

// Per-step lookup tables of cos(phi sqrt n) and sin(phi sqrt n), shared by
// all trajectories of an ensemble.
struct StepTables {
  int n_fock = 0;
  std::vector<RVector> cosines;
  std::vector<RVector> sines;
  std::vector<int> table_of_step;
  // loss factors
  bool lossy = false;
  RVector keep;   // e^{-x n/2}
  RVector jump;   // sqrt(1 - e^{-x}) sqrt(n) e^{-x (n-1)/2}, applied to level n

  StepTables(const CollisionSchedule& s, int nf) : n_fock(nf) {
    std::map<double, int> seen;
    table_of_step.reserve(s.phi.size());
    for (double phi : s.phi) {
      auto [it, inserted] = seen.emplace(phi, static_cast<int>(cosines.size()));
      if (inserted) {
        RVector c(nf), sn(nf);
        for (int n = 0; n < nf; ++n) {
          const double arg = phi * std::sqrt(static_cast<double>(n));
          c(n) = std::cos(arg);
          sn(n) = std::sin(arg);
        }
        cosines.push_back(std::move(c));
        sines.push_back(std::move(sn));
      }
      table_of_step.push_back(it->second);
    }
    const double x = s.kappa * s.t_step;
    lossy = x > 0.0;
    if (lossy) {
      keep.resize(nf);
      jump.resize(nf);
      const double pj = -std::expm1(-x);
      for (int n = 0; n < nf; ++n) {
        keep(n) = std::exp(-0.5 * x * n);
        jump(n) = n > 0 ? std::sqrt(pj * n) * std::exp(-0.5 * x * (n - 1)) : 0.0;
      }
    }
  }
};

TrajectoryResult simulate(const CavityState& state0, const CollisionSchedule& sched, const StepTables& tab,
                          std::uint64_t seed, std::uint64_t index, const TrajectoryOptions& opts) {
  const int nf = state0.n_fock();
  const int n_bit = sched.n_bit();
  const CounterRng rng(seed, index);

  TrajectoryResult out;
  out.record.outcomes.resize(n_bit);
  out.record.bases = sched.bases;
  out.record.times.resize(n_bit);
  if (opts.trace) {
    out.population_trace.resize(n_bit);
    out.vacuum_trace.resize(n_bit);
    out.excitation_trace.resize(n_bit);
  }

  CVector psi = state0.amps();
  CVector g(nf), e(nf);
  auto renormalize = [&](CVector& v, int step) {
    const double nrm = v.norm();
    if (!(nrm >= 1e-14))
      throw NumericalError("normalization underflow at step " + std::to_string(step) + " (norm " +
                           std::to_string(nrm) + ")");
    v /= nrm;
  };

  for (int step = 0; step < n_bit; ++step) {
    // (i) unmonitored loss, outcome discarded
    if (tab.lossy) {
      double p0 = 0.0, p1 = 0.0;
      for (int n = 0; n < nf; ++n) {
        const double pn = std::norm(psi(n));
        p0 += tab.keep(n) * tab.keep(n) * pn;
        p1 += tab.jump(n) * tab.jump(n) * pn;
      }
      if (rng.uniform(step, 0) * (p0 + p1) < p1) {
        for (int n = 0; n + 1 < nf; ++n) psi(n) = tab.jump(n + 1) * psi(n + 1);
        psi(nf - 1) = 0.0;
      } else {
        for (int n = 0; n < nf; ++n) psi(n) *= tab.keep(n);
      }
      renormalize(psi, step);
    }

    // (ii) collision and qubit measurement
    const RVector& cs = tab.cosines[tab.table_of_step[step]];
    const RVector& sn = tab.sines[tab.table_of_step[step]];
    for (int n = 0; n < nf; ++n) g(n) = cs(n) * psi(n);
    for (int n = 0; n + 1 < nf; ++n) e(n) = cplx(0.0, -sn(n + 1)) * psi(n + 1);
    e(nf - 1) = 0.0;
    const double gg = g.squaredNorm();
    const double ee = e.squaredNorm();
    const double s = gg + ee;
    const cplx w = std::polar(1.0, -sched.bases[step].axis);
    const double interference = 2.0 * (w * g.dot(e)).real();
    const double p_plus = std::clamp(0.5 * (s + interference) / s, 0.0, 1.0);
    const int outcome = rng.uniform(step, 1) < p_plus ? 1 : -1;
    psi = g + (static_cast<double>(outcome) * w) * e;
    renormalize(psi, step);

    // (iii) classical mis-read; the collapse branch is unaffected
    int recorded = outcome;
    if (sched.p_read_err > 0.0 && rng.uniform(step, 2) < sched.p_read_err) recorded = -outcome;
    out.record.outcomes[step] = static_cast<std::int8_t>(recorded);
    out.record.times[step] = step * sched.dt;

    if (opts.trace) {
      out.excitation_trace[step] = ee / s;
      double pop = 0.0;
      for (int n = 1; n < nf; ++n) pop += n * std::norm(psi(n));
      out.population_trace[step] = pop;
      out.vacuum_trace[step] = std::norm(psi(0));
    }
  }
  if (opts.keep_final_state) out.final_state = CavityState(std::move(psi));
  return out;
}

std::vector<double> mean_trace(const std::vector<TrajectoryResult>& runs,
                               std::vector<double> TrajectoryResult::*member) {
  if (runs.empty()) return {};
  std::vector<double> acc((runs.front().*member).size(), 0.0);
  for (const auto& r : runs) {
    const auto& t = r.*member;
    if (t.size() != acc.size()) throw DimensionError("trace lengths differ across trajectories");
    for (std::size_t i = 0; i < t.size(); ++i) acc[i] += t[i];
  }
  for (auto& v : acc) v /= static_cast<double>(runs.size());
  return acc;
}

}  // namespace

char MeasurementBasis::label() const {
  if (near(axis, 0.0)) return 'X';
  if (near(axis, kHalfPi)) return 'Y';
  if (near(axis, kPi)) return 'x';
  if (near(axis, -kHalfPi)) return 'y';
  return 'A';
}

// --- schedule -------------------------------------------------------------------

void CollisionSchedule::validate() const {
  if (bases.size() != phi.size())
    throw ConfigError("basis sequence length " + std::to_string(bases.size()) + " != n_bit " +
                      std::to_string(phi.size()));
  for (std::size_t n = 0; n < phi.size(); ++n) {
    if (!(phi[n] > 0.0 && phi[n] <= kHalfPi + 1e-12))
      throw ConfigError("phi[" + std::to_string(n) + "] = " + std::to_string(phi[n]) + " outside (0, pi/2]");
  }
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_step >= dt)) throw ConfigError("t_step must be >= dt");
  if (!(kappa >= 0.0)) throw ConfigError("kappa must be non-negative");
  if (!(p_read_err >= 0.0 && p_read_err < 0.5)) throw ConfigError("p_read_err must lie in [0, 0.5)");
  if (kappa * t_step > 0.05)
    warn("kappa * t_step = " + std::to_string(kappa * t_step) + " > 0.05; single-jump loss model is inaccurate");
}

CollisionSchedule CollisionSchedule::constant(double phi, int n_bit, MeasurementBasis basis) {
  CollisionSchedule s;
  s.phi.assign(std::max(n_bit, 0), phi);
  s.bases.assign(std::max(n_bit, 0), basis);
  return s;
}

CollisionSchedule CollisionSchedule::ramp(double phi0, double slope, int n_bit, MeasurementBasis basis) {
  CollisionSchedule s = constant(phi0, n_bit, basis);
  for (int n = 0; n < n_bit; ++n) s.phi[n] = phi0 + slope * n;
  return s;
}

CollisionSchedule& CollisionSchedule::homodyne(double theta) {
  bases.assign(phi.size(), MeasurementBasis::for_quadrature(theta));
  return *this;
}

CollisionSchedule& CollisionSchedule::heterodyne() {
  bases.resize(phi.size());
  for (std::size_t n = 0; n < phi.size(); ++n) bases[n] = n % 2 == 0 ? MeasurementBasis::Y() : MeasurementBasis::X();
  return *this;
}

CollisionSchedule& CollisionSchedule::with_loss(double kappa_, double dt_, double t_step_) {
  kappa = kappa_;
  dt = dt_;
  t_step = t_step_;
  return *this;
}

CollisionSchedule& CollisionSchedule::with_readout_error(double p) {
  p_read_err = p;
  return *this;
}

// --- Kraus operators --------------------------------------------------------------

KrausPair interaction_unitary_blocks(double phi, int n_fock) {
  KrausPair k{CMatrix::Zero(n_fock, n_fock), CMatrix::Zero(n_fock, n_fock)};
  for (int n = 0; n < n_fock; ++n) {
    const double arg = phi * std::sqrt(static_cast<double>(n));
    k.first(n, n) = std::cos(arg);
    if (n > 0) k.second(n - 1, n) = cplx(0.0, -std::sin(arg));
  }
  return k;
}

KrausPair measurement_kraus(double phi, MeasurementBasis basis, int n_fock) {
  const auto jc = interaction_unitary_blocks(phi, n_fock);
  const cplx w = std::polar(1.0, -basis.axis);
  const double r = 1.0 / kSqrt2;
  return {r * (jc.first + w * jc.second), r * (jc.first - w * jc.second)};
}

KrausPair loss_kraus(double kappa, double t_step, int n_fock) {
  const double x = kappa * t_step;
  if (x > 0.05) warn("loss per step kappa * t_step = " + std::to_string(x) + " exceeds 0.05");
  KrausPair k{CMatrix::Zero(n_fock, n_fock), CMatrix::Zero(n_fock, n_fock)};
  const double pj = -std::expm1(-x);
  for (int n = 0; n < n_fock; ++n) {
    k.first(n, n) = std::exp(-0.5 * x * n);
    if (n > 0) k.second(n - 1, n) = std::sqrt(pj * n) * std::exp(-0.5 * x * (n - 1));
  }
  return k;
}

double completeness_deficit(const KrausPair& k) {
  const auto n = k.first.rows();
  const CMatrix s = k.first.adjoint() * k.first + k.second.adjoint() * k.second;
  return (CMatrix::Identity(n, n) - s).cwiseAbs().maxCoeff();
}

double excitation_probability(const CavityState& state, double phi) {
  return phi * phi * state.mean_photon_number();
}

double excitation_probability_exact(const CavityState& state, double phi) {
  double acc = 0.0;
  for (int n = 1; n < state.n_fock(); ++n) {
    const double s = std::sin(phi * std::sqrt(static_cast<double>(n)));
    acc += s * s * std::norm(state.amps()(n));
  }
  return acc;
}

// --- trajectories -----------------------------------------------------------------

TrajectoryResult run_trajectory(const CavityState& state0, const CollisionSchedule& sched, std::uint64_t seed,
                                std::uint64_t index, const TrajectoryOptions& opts) {
  sched.validate();
  if (std::abs(state0.norm() - 1.0) > 1e-10) throw NumericalError("initial state is not normalized");
  const StepTables tab(sched, state0.n_fock());
  return simulate(state0, sched, tab, seed, index, opts);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int workers, const std::function<void(int)>& job) {
  if (count <= 0) return;
  const int nthreads = std::min(resolve_workers(workers), count);
  std::atomic<int> next{0};
  std::mutex err_mutex;
  int err_index = -1;
  std::exception_ptr err;
  auto body = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (err_index < 0 || i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  if (nthreads == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(body);
  }
  if (err) std::rethrow_exception(err);
}

std::vector<TrajectoryResult> run_ensemble(const CavityState& state0, const CollisionSchedule& sched, int n_traj,
                                           std::uint64_t seed, const EnsembleOptions& opts) {
  if (n_traj < 0) throw ConfigError("n_traj must be non-negative");
  sched.validate();
  if (std::abs(state0.norm() - 1.0) > 1e-10) throw NumericalError("initial state is not normalized");
  std::vector<TrajectoryResult> results(n_traj);
  if (n_traj == 0) return results;
  const StepTables tab(sched, state0.n_fock());
  const TrajectoryOptions topts{opts.keep_final_state, opts.trace};
  parallel_for(n_traj, opts.workers, [&](int i) {
    const std::uint64_t index = opts.first_index + static_cast<std::uint64_t>(i);
    try {
      results[i] = simulate(state0, sched, tab, seed, index, topts);
    } catch (const std::exception& ex) {
      throw TrajectoryError(index, ex.what());
    }
  });
  return results;
}

std::vector<double> mean_population_trace(const std::vector<TrajectoryResult>& runs) {
  return mean_trace(runs, &TrajectoryResult::population_trace);
}
std::vector<double> mean_vacuum_trace(const std::vector<TrajectoryResult>& runs) {
  return mean_trace(runs, &TrajectoryResult::vacuum_trace);
}
std::vector<double> mean_excitation_trace(const std::vector<TrajectoryResult>& runs) {
  return mean_trace(runs, &TrajectoryResult::excitation_trace);
}

ChannelEvolution evolve_ensemble_average(const DensityMatrix& rho0, const CollisionSchedule& sched) {
  sched.validate();
  const int nf = rho0.n_fock();
  const StepTables tab(sched, nf);
  CMatrix rho = rho0.matrix();
  CMatrix next(nf, nf);
  ChannelEvolution out;
  out.population.reserve(sched.n_bit());
  out.vacuum.reserve(sched.n_bit());
  for (int step = 0; step < sched.n_bit(); ++step) {
    if (tab.lossy) {
      for (int m = 0; m < nf; ++m)
        for (int n = 0; n < nf; ++n) {
          cplx v = tab.keep(m) * tab.keep(n) * rho(m, n);
          if (m + 1 < nf && n + 1 < nf) v += tab.jump(m + 1) * tab.jump(n + 1) * rho(m + 1, n + 1);
          next(m, n) = v;
        }
      rho = next / next.trace().real();
    }
    const RVector& cs = tab.cosines[tab.table_of_step[step]];
    const RVector& sn = tab.sines[tab.table_of_step[step]];
    for (int m = 0; m < nf; ++m)
      for (int n = 0; n < nf; ++n) {
        cplx v = cs(m) * cs(n) * rho(m, n);
        if (m + 1 < nf && n + 1 < nf) v += sn(m + 1) * sn(n + 1) * rho(m + 1, n + 1);
        next(m, n) = v;
      }
    rho = next;
    double pop = 0.0;
    for (int n = 0; n < nf; ++n) pop += n * rho(n, n).real();
    out.population.push_back(pop);
    out.vacuum.push_back(rho(0, 0).real());
  }
  out.final_rho = DensityMatrix::unchecked(rho);
  return out;
}

int vacuum_stop_step(const ChannelEvolution& evo, double target) {
  for (std::size_t n = 0; n < evo.vacuum.size(); ++n)
    if (evo.vacuum[n] >= target) return static_cast<int>(n + 1);
  return 0;
}

}  // namespace qubitdyne
