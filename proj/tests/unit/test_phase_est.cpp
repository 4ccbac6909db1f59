#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "qubitdyne/phase_est.hpp"
#include "qubitdyne/refstats.hpp"

using namespace qubitdyne;

namespace {

struct Eigenstate {
  CavityState state;
  double x;
};

// Exact eigenvector of the truncated x_0 matrix.
Eigenstate x_eigenstate(int n_fock, int j) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(quadrature_operator(0.0, {}, n_fock));
  return {CavityState(es.eigenvectors().col(j)), es.eigenvalues()(j)};
}

double phase_error(const PhaseEstimate& e, double phi) { return std::remainder(e.phi_tilde - phi, 2.0 * kPi); }

}  // namespace

TEST_SUITE("phase-est") {

TEST_CASE("controlled phase unitary") {
  qd_test::WarningCapture quiet;
  const int n = 20;
  const CMatrix id = CMatrix::Identity(2 * n, 2 * n);
  CHECK(qd_test::max_abs(CMatrix(controlled_phase_unitary(0.0, 0, 0.3, n) - id)) < 1e-12);

  const CMatrix x = quadrature_operator(0.4, {}, n);
  for (int k : {0, 2, 5}) {
    const CMatrix u = controlled_phase_unitary(0.3, k, 0.4, n);
    CHECK(qd_test::max_abs(CMatrix(u.adjoint() * u - id)) < 1e-10);
    CHECK(qd_test::max_abs(CMatrix(u.topLeftCorner(n, n) - CMatrix::Identity(n, n))) < 1e-15);
    CHECK(qd_test::max_abs(CMatrix(u.topRightCorner(n, n))) == 0.0);
    const CMatrix kick = u.bottomRightCorner(n, n);
    CHECK(qd_test::max_abs(CMatrix(kick * x - x * kick)) < 1e-10);
  }

  // control off: |g> (x) psi is untouched
  const auto psi = qd_test::random_state(4, n, 3);
  CVector joint = CVector::Zero(2 * n);
  joint.head(n) = psi.amps();
  CHECK(qd_test::max_abs(CMatrix(controlled_phase_unitary(0.5, 1, 0.0, n) * joint - joint)) < 1e-12);
}

TEST_CASE("large kicks warn about truncation") {
  qd_test::WarningCapture cap;
  controlled_phase_unitary(0.1, 0, 0.0, 20);
  CHECK(cap.messages.empty());
  controlled_phase_unitary(0.3, 5, 0.0, 20);
  CHECK_FALSE(cap.messages.empty());
}

TEST_CASE("vacuum single round matches the Gaussian characteristic function") {
  const int n = 30;
  const double eps = 0.8;
  const auto vac = CavityState::vacuum(n);
  const CMatrix u = controlled_phase_unitary(eps, 0, 0.0, n);
  CVector joint(2 * n);
  joint << vac.amps(), vac.amps();
  joint /= std::sqrt(2.0);
  const CVector out = u * joint;
  const CVector g = (out.head(n) + out.tail(n)) / std::sqrt(2.0);
  const double exact = 0.5 * (1.0 + std::exp(-eps * eps / 4.0));
  CHECK(g.squaredNorm() == doctest::Approx(exact).epsilon(1e-10));

  PhaseEstConfig c;
  c.epsilon = eps;
  c.n_m = 1;
  c.mode = PhaseEstMode::NonAdaptive;
  const int runs = 20000;
  int g_count = 0;
  for (const auto& e : run_pe_ensemble(vac, c, runs, 5)) g_count += e.outcomes[0] == 0;
  const double se = std::sqrt(exact * (1 - exact) / runs);
  CHECK(std::abs(g_count / double(runs) - exact) < 4 * se);
}

TEST_CASE("non-adaptive estimates on eigenstates") {
  SUBCASE("x = 0 gives p_R = 1") {
    const auto e = x_eigenstate(31, 15);
    REQUIRE(std::abs(e.x) < 1e-12);
    PhaseEstConfig c;
    c.epsilon = 0.5;
    c.n_m = 50;
    c.mode = PhaseEstMode::NonAdaptive;
    const auto est = run_nonadaptive_pe(e.state, c, 2);
    for (std::size_t r = 0; r < est.outcomes.size(); r += 2) CHECK(est.outcomes[r] == 0);
    CHECK(est.phases[0] == 0.0);
    CHECK(est.phases[1] == doctest::Approx(-kHalfPi));
  }
  SUBCASE("eps x = pi/2 gives p_R = 1/2, p_I = 1") {
    const auto e = x_eigenstate(31, 20);
    PhaseEstConfig c;
    c.epsilon = kHalfPi / e.x;
    c.n_m = 200;
    c.mode = PhaseEstMode::NonAdaptive;
    const auto runs = run_pe_ensemble(e.state, c, 200, 4);
    double mean = 0.0;
    int real_g = 0;
    for (const auto& est : runs) {
      for (std::size_t r = 1; r < est.outcomes.size(); r += 2) CHECK(est.outcomes[r] == 0);
      for (std::size_t r = 0; r < est.outcomes.size(); r += 2) real_g += est.outcomes[r] == 0;
      mean += est.phi_tilde / runs.size();
    }
    CHECK(real_g / (200.0 * 200.0) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(mean == doctest::Approx(kHalfPi).epsilon(0.01));
  }
}

TEST_CASE("estimates stay in (-pi, pi]") {
  const auto psi = prepare_state(StateSpec::coherent(cplx(1.0, 0.0)), 30);
  for (auto mode : {PhaseEstMode::Iterative, PhaseEstMode::NonAdaptive, PhaseEstMode::Adaptive}) {
    PhaseEstConfig c;
    c.n_m = 12;
    c.mode = mode;
    for (const auto& e : run_pe_ensemble(psi, c, 100, 9)) {
      CHECK(e.phi_tilde > -kPi);
      CHECK(e.phi_tilde <= kPi);
      CHECK(e.x_tilde == doctest::Approx(e.phi_tilde / default_epsilon(DensityMatrix(psi))));
    }
  }
}

TEST_CASE("iterative estimate of an approximate eigenstate") {
  const auto spec = StateSpec::squeezed(0.01, 1.5);
  const auto sq = prepare_state(spec, spec.default_n_fock());
  PhaseEstConfig c;
  c.epsilon = 0.5;
  c.n_m = 12;
  const auto runs = run_pe_ensemble(sq, c, 300, 6);
  int close = 0;
  double mean = 0.0;
  for (const auto& e : runs) {
    close += std::abs(e.x_tilde - 1.5) < 0.3;
    mean += e.x_tilde / runs.size();
  }
  CHECK(close >= 297);
  CHECK(mean == doctest::Approx(1.5).epsilon(0.01));
}

TEST_CASE("iterative estimate of an exact eigenstate lands on the grid") {
  const auto e = x_eigenstate(31, 18);
  PhaseEstConfig c;
  c.epsilon = 0.5;
  c.n_m = 10;
  const double step = 2.0 * kPi / std::ldexp(c.epsilon, c.n_m);
  const auto runs = run_pe_ensemble(e.state, c, 1000, 3);
  int within = 0;
  for (const auto& est : runs) within += std::abs(std::remainder(est.x_tilde - e.x, 2.0 * kPi / c.epsilon)) < step;
  // the two nearest grid points carry at least 8 / pi^2 of the probability
  CHECK(within >= 810);
}

TEST_CASE("adaptive beats non-adaptive at equal qubit measurements") {
  const double eps = 0.5;
  const int n_pairs = 50;
  for (int j : {15, 18, 22}) {
    const auto e = x_eigenstate(31, j);
    PhaseEstConfig na;
    na.epsilon = eps;
    na.n_m = n_pairs;
    na.mode = PhaseEstMode::NonAdaptive;
    PhaseEstConfig ad = na;
    ad.n_m = 2 * n_pairs;
    ad.mode = PhaseEstMode::Adaptive;
    double v_na = 0.0, v_ad = 0.0;
    const auto a = run_pe_ensemble(e.state, na, 1000, 12);
    const auto b = run_pe_ensemble(e.state, ad, 1000, 12);
    for (int i = 0; i < 1000; ++i) {
      v_na += std::pow(phase_error(a[i], eps * e.x), 2);
      v_ad += std::pow(phase_error(b[i], eps * e.x), 2);
    }
    CHECK(b[0].outcomes.size() == a[0].outcomes.size());
    CHECK(v_ad <= v_na);
  }
}

TEST_CASE("adaptive first phase is zero") {
  PhaseEstConfig c;
  c.n_m = 5;
  c.mode = PhaseEstMode::Adaptive;
  const auto est = run_adaptive_pe(CavityState::vacuum(20), c, 1);
  REQUIRE(est.phases.size() == 5);
  CHECK(est.phases[0] == 0.0);
}

TEST_CASE("cavity energy grows across rounds for coherent inputs") {
  const auto psi = prepare_state(StateSpec::coherent(cplx(1.0, 0.5)), 60);
  for (auto mode : {PhaseEstMode::NonAdaptive, PhaseEstMode::Adaptive, PhaseEstMode::Iterative}) {
    PhaseEstConfig c;
    c.n_m = 8;
    c.mode = mode;
    c.trace = true;
    const auto runs = run_pe_ensemble(psi, c, 200, 8);
    const auto rounds = runs[0].photon_trace.size();
    REQUIRE(rounds == runs[0].outcomes.size());
    std::vector<double> mean(rounds, 0.0);
    for (const auto& e : runs)
      for (std::size_t r = 0; r < rounds; ++r) mean[r] += e.photon_trace[r] / runs.size();
    const double n0 = std::norm(cplx(1.0, 0.5));
    CHECK(mean[0] >= n0);
    for (std::size_t r = 1; r < rounds; ++r) CHECK(mean[r] >= mean[r - 1] - 1e-9);
  }
}

TEST_CASE("ensemble is deterministic across worker counts") {
  const auto psi = prepare_state(StateSpec::fock(1), 40);
  PhaseEstConfig c;
  c.n_m = 20;
  const auto a = run_pe_ensemble(psi, c, 64, 2, 1);
  const auto b = run_pe_ensemble(psi, c, 64, 2, 4);
  for (int i = 0; i < 64; ++i) {
    CHECK(a[i].outcomes == b[i].outcomes);
    CHECK(a[i].x_tilde == b[i].x_tilde);
  }
  CHECK(run_iterative_pe(psi, c, 2, 5).outcomes == a[5].outcomes);
}

TEST_CASE("Fock 1 histogram follows the quadrature density") {
  const auto f1 = prepare_state(StateSpec::fock(1), 120);
  PhaseEstConfig c;
  c.n_m = 100;
  std::vector<double> x;
  for (const auto& e : run_pe_ensemble(f1, c, 500, 1)) x.push_back(e.x_tilde);
  CHECK(ks_statistic(x, homodyne_reference(DensityMatrix(f1), 0.0)) < 0.08);
}

TEST_CASE("default epsilon fits the support into one window") {
  for (const auto& spec : {StateSpec::vacuum(), StateSpec::fock(1), StateSpec::coherent(cplx(2.0, 0.0))}) {
    const DensityMatrix rho(prepare_state(spec, 40));
    const double eps = default_epsilon(rho);
    CHECK(eps * quadrature_support(rho, {}, 1e-6) < kPi);
  }
}

TEST_CASE("bound formulas") {
  CHECK(iterative_pe_error_bound(1.0, 0.5, 4) == doctest::Approx(1.0 / 14.0));
  CHECK(iterative_pe_error_bound(0.01, 0.5, 4) == 1.0);
  CHECK(chernoff_bound(0.5, 0.5, 100) == doctest::Approx(4.0 * std::exp(-std::sin(1.0) * 100 / (2 * kSqrt2))));
  CHECK(chernoff_bound(0.01, 0.5, 1) == 1.0);
  CHECK(hoeffding_bound(1.0, 0.5, 200) == doctest::Approx(4.0 * std::exp(-200 * std::pow(std::sin(0.5), 2) / 4)));
  CHECK(hoeffding_bound(1.0, 0.5, 1) == 1.0);
}

TEST_CASE("non-adaptive error rates respect the Hoeffding bound") {
  const auto e = x_eigenstate(31, 18);
  PhaseEstConfig c;
  c.epsilon = 0.5;
  c.n_m = 100;
  c.mode = PhaseEstMode::NonAdaptive;
  const auto runs = run_pe_ensemble(e.state, c, 4000, 7);
  for (double phase : {0.2, 0.4, 0.6}) {
    const double delta = phase / c.epsilon;
    int bad = 0;
    for (const auto& est : runs) bad += std::abs(est.x_tilde - e.x) >= delta;
    CHECK(bad / 4000.0 <= hoeffding_bound(delta, c.epsilon, c.n_m));
  }
}

TEST_CASE("config validation, mode names and CSV") {
  PhaseEstConfig c;
  c.n_m = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.n_m = 10;
  c.epsilon = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  for (auto m : {PhaseEstMode::Iterative, PhaseEstMode::NonAdaptive, PhaseEstMode::Adaptive})
    CHECK(parse_phase_est_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_phase_est_mode("quantum"), ConfigError);

  PhaseEstimate e;
  e.x_tilde = 0.5;
  e.phi_tilde = 0.25;
  e.outcomes = {0, 1, 1};
  std::ostringstream os;
  write_phase_est_csv(os, {e});
  CHECK(os.str() == "run,x_tilde,phi_tilde,outcomes\n0,0.5,0.25,011\n");
}

}
