#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qubitdyne/diagnostics.hpp"
#include "qubitdyne/fockspace.hpp"

namespace qd_test {

using namespace qubitdyne;

// Random pure state on levels 0..n_max, embedded in n_fock levels.
inline CavityState random_state(int n_max, int n_fock, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  CVector v = CVector::Zero(n_fock);
  for (int n = 0; n <= n_max; ++n) v(n) = cplx(g(gen), g(gen));
  CavityState s(v);
  s.normalize();
  return s;
}

inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Captures warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  WarningSink previous;
  WarningCapture() {
    previous = set_warning_sink([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { set_warning_sink(previous); }
};

}  // namespace qd_test

#include "qubitdyne/collision.hpp"
#include "qubitdyne/records.hpp"

namespace qd_test {

// E[J] from the outcome-averaged state: sum_n w_n Tr(rho_n (K+^dag K+ - K-^dag K-)).
// Heterodyne weights are -2 f on Y steps and 2 f on X steps.
inline cplx expected_dyne_mean(const CavityState& s, const CollisionSchedule& sched, const FilterWeights& f,
                               bool heterodyne) {
  const int d = s.n_fock();
  CMatrix rho = s.amps() * s.amps().adjoint();
  cplx acc = 0.0;
  for (int n = 0; n < sched.n_bit(); ++n) {
    const auto m = measurement_kraus(sched.phi[n], sched.bases[n], d);
    const CMatrix o = m.first.adjoint() * m.first - m.second.adjoint() * m.second;
    const double e = (rho * o).trace().real();
    if (!heterodyne)
      acc += f.weights[n] * e;
    else if (n % 2 == 0)
      acc += -2.0 * f.weights[n] * e;
    else
      acc += cplx(0.0, 2.0 * f.weights[n] * e);
    const auto k = interaction_unitary_blocks(sched.phi[n], d);
    rho = k.first * rho * k.first.adjoint() + k.second * rho * k.second.adjoint();
  }
  return acc;
}

}  // namespace qd_test
