#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "qubitdyne/refstats.hpp"
#include "qubitdyne/tomography.hpp"

using namespace qubitdyne;

namespace {

TomographyDataset sampled_dataset(const CavityState& psi, int n_fock, int per_angle, std::uint64_t seed,
                                  int n_angles = 10) {
  const DensityMatrix rho(psi);
  TomographyDataset d;
  d.angles = tomography_angles(n_angles);
  d.n_fock = n_fock;
  for (std::size_t k = 0; k < d.angles.size(); ++k)
    d.samples.push_back(sample_from_cdf(homodyne_reference(rho, d.angles[k]), per_angle, seed, k));
  return d;
}

// Noise-free data: each bin receives round(N p_j) samples at its center.
TomographyDataset exact_dataset(const CavityState& psi, int n_fock, int per_angle, int n_angles = 10) {
  const DensityMatrix rho(psi);
  const auto grid = default_bins(n_fock);
  const auto centers = grid.centers();
  TomographyDataset d;
  d.angles = tomography_angles(n_angles);
  d.n_fock = n_fock;
  for (double th : d.angles) {
    const auto povm = build_povm(th, grid, 1.0, n_fock);
    std::vector<double> s;
    for (int j = 0; j < grid.bins; ++j) {
      const double p = (povm[j] * rho.matrix()).trace().real();
      const long count = std::lround(per_angle * std::max(p, 0.0));
      s.insert(s.end(), count, centers[j]);
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

double min_eigenvalue(const DensityMatrix& rho) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(rho.matrix()).eigenvalues().minCoeff();
}

}  // namespace

TEST_SUITE("tomography") {

TEST_CASE("dataset validation") {
  TomographyDataset d;
  d.angles = {0.0, 1.0};
  d.samples = {{0.1}, {0.2}};
  CHECK_NOTHROW(d.validate());
  CHECK(d.total_samples() == 2);
  auto bad = d;
  bad.angles = {0.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = d;
  bad.angles = {0.0};
  bad.samples = {{0.1}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = d;
  bad.angles = {0.0, 3.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = d;
  bad.samples = {{0.1}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = d;
  bad.eta = 0.4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("bin grid covers the Fock support") {
  const auto g = default_bins(30);
  CHECK(g.width == 0.1);
  const double s = quadrature_support(DensityMatrix(prepare_state(StateSpec::fock(29), 31)));
  CHECK(g.lo <= -s);
  CHECK(g.lo + g.width * g.bins >= s);
  CHECK(g.index(-1e9) == 0);
  CHECK(g.index(1e9) == g.bins - 1);
  const auto c = g.centers();
  CHECK(g.index(c[7]) == 7);
  CHECK(c[1] - c[0] == doctest::Approx(0.1));
}

TEST_CASE("POVM completeness") {
  for (double eta : {1.0, 0.925}) {
    for (double th : {0.0, 0.9, 2.7}) {
      const auto povm = build_povm(th, default_bins(20), eta, 20);
      CHECK(povm_completeness_error(povm) < 1e-3);
      for (const auto& p : povm) CHECK(qd_test::max_abs(CMatrix(p - p.adjoint())) < 1e-12);
    }
  }
}

TEST_CASE("binned POVM reproduces the vacuum quadrature moments") {
  const int n = 12;
  const auto grid = default_bins(n);
  const auto centers = grid.centers();
  const DensityMatrix vac(prepare_state(StateSpec::vacuum(), n));
  double var = 0.0;
  for (int j = 0; j < grid.bins; ++j) {
    const double p = (build_povm(0.0, grid, 1.0, n)[j] * vac.matrix()).trace().real();
    var += p * centers[j] * centers[j];
  }
  // Sheppard correction: bin centers add width^2 / 12
  CHECK(var == doctest::Approx(0.5 + 0.01 / 12).epsilon(1e-4));
}

TEST_CASE("efficiency shrinks the coherent center by sqrt(eta)") {
  const int n = 25;
  const auto grid = default_bins(n);
  const auto centers = grid.centers();
  const DensityMatrix coh(prepare_state(StateSpec::coherent(cplx(1.5, 0.0)), n));
  for (double eta : {1.0, 0.8}) {
    const auto povm = build_povm(0.0, grid, eta, n);
    double mean = 0.0;
    for (int j = 0; j < grid.bins; ++j) mean += (povm[j] * coh.matrix()).trace().real() * centers[j];
    CHECK(mean == doctest::Approx(std::sqrt(eta) * 1.5 * kSqrt2).epsilon(1e-3));
  }
}

TEST_CASE("vacuum from noise-free counts reconstructs with fidelity >= 0.999") {
  const auto vac = prepare_state(StateSpec::vacuum(), 30);
  const auto r = mle_reconstruct(exact_dataset(vac, 30, 1000), {}, &vac);
  REQUIRE(r.fidelity.has_value());
  CHECK(*r.fidelity >= 0.999);
  CHECK(r.converged);
  CHECK(std::abs(r.rho.trace() - 1.0) < 1e-9);
  CHECK(min_eigenvalue(r.rho) > -1e-9);
}

TEST_CASE("noise-free counts of a cat state are reconstructed") {
  const auto cat = prepare_state(StateSpec::cat(cplx(2.0, 0.0)), 30);
  const auto r = mle_reconstruct(exact_dataset(cat, 30, 100000), {}, &cat);
  CHECK(*r.fidelity >= 0.999);
}

TEST_CASE("log-likelihood never decreases") {
  const auto psi = prepare_state(StateSpec::fock(2), 15);
  const auto r = mle_reconstruct(sampled_dataset(psi, 15, 2000, 3), {}, &psi);
  REQUIRE(r.log_likelihood.size() >= 2);
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
    CHECK(r.log_likelihood[i] >= r.log_likelihood[i - 1] - 1e-9);
}

TEST_CASE("iteration cap reports non-convergence") {
  const auto psi = prepare_state(StateSpec::coherent(cplx(1.0, 0.5)), 15);
  TomographyOptions o;
  o.max_iter = 3;
  const auto r = mle_reconstruct(sampled_dataset(psi, 15, 2000, 3), o, &psi);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  CHECK(min_eigenvalue(r.rho) > -1e-9);
}

TEST_CASE("efficiency compensation recovers the lossless reconstruction") {
  const int n = 20;
  const auto psi = prepare_state(StateSpec::fock(1), n);
  const double eta = 0.9;
  CMatrix m = CMatrix::Zero(n, n);
  m(1, 1) = eta;
  m(0, 0) = 1.0 - eta;
  const DensityMatrix lossy(m);

  TomographyDataset d;
  d.angles = tomography_angles(10);
  d.n_fock = n;
  for (std::size_t k = 0; k < d.angles.size(); ++k)
    d.samples.push_back(sample_from_cdf(homodyne_reference(lossy, d.angles[k]), 10000, 11, k));
  const auto plain = mle_reconstruct(d, {}, &psi);
  d.eta = eta;
  const auto comp = mle_reconstruct(d, {}, &psi);

  const auto ideal = sampled_dataset(psi, n, 10000, 11);
  const auto reference = mle_reconstruct(ideal, {}, &psi);
  CHECK(*comp.fidelity > *plain.fidelity);
  CHECK(std::abs(*comp.fidelity - *reference.fidelity) < 0.01);
}

TEST_CASE("bin width has little effect") {
  const auto psi = prepare_state(StateSpec::coherent(cplx(1.0, 1.0)), 20);
  const auto d = sampled_dataset(psi, 20, 5000, 5);
  std::vector<double> f;
  for (double w : {0.05, 0.1, 0.2}) {
    TomographyOptions o;
    o.bin_width = w;
    f.push_back(*mle_reconstruct(d, o, &psi).fidelity);
  }
  CHECK(std::abs(f[0] - f[1]) < 0.005);
  CHECK(std::abs(f[2] - f[1]) < 0.005);
}

TEST_CASE("qubit efficiency calibration") {
  EtaQSettings s;
  s.n_traj = 3000;
  const std::vector<double> fids = {1.0, 0.995, 0.9};
  const auto pts = calibrate_eta_q(fids, s);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].eta_q == doctest::Approx(1.0));
  CHECK(pts[1].eta_q == doctest::Approx(0.98).epsilon(0.01));
  CHECK(pts[2].eta_q < pts[1].eta_q);
  CHECK(pts[2].eta_q == doctest::Approx(0.64).epsilon(0.02));
  s.n_traj = 5;
  CHECK_THROWS_AS(calibrate_eta_q(fids, s), ConfigError);
}

TEST_CASE("dataset CSV round trip and errors") {
  TomographyDataset d;
  d.angles = {0.0, 0.5};
  d.samples = {{0.25, -1.5}, {3.0}};
  std::stringstream ss;
  write_dataset_csv(ss, d);
  const auto back = read_dataset_csv(ss, 30);
  CHECK(back.angles == d.angles);
  CHECK(back.samples == d.samples);

  std::istringstream bad("theta,x\n0.0,1.0\n0.5,abc\n");
  try {
    read_dataset_csv(bad, 30);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("reconstruction JSON") {
  const auto psi = prepare_state(StateSpec::vacuum(), 6);
  const auto r = mle_reconstruct(sampled_dataset(psi, 6, 500, 1, 4), {}, &psi);
  std::ostringstream os;
  write_reconstruction_json(os, r);
  const auto s = os.str();
  for (const char* key : {"\"n_fock\"", "\"real\"", "\"imag\"", "\"fidelity\"", "\"converged\"", "\"log_likelihood\""})
    CHECK(s.find(key) != std::string::npos);
}

TEST_CASE("tomography angles") {
  const auto a = tomography_angles(4);
  REQUIRE(a.size() == 4);
  CHECK(a[0] == 0.0);
  CHECK(a[3] == doctest::Approx(0.75 * kPi));
}

}

TEST_SUITE("tomography-statistics") {

TEST_CASE("10 angles x 10^4 ideal samples give fidelity >= 0.995 for <n> <= 4") {
  const std::vector<StateSpec> states = {StateSpec::vacuum(), StateSpec::fock(2),
                                         StateSpec::coherent(cplx(2.0, 0.0)),
                                         StateSpec::coherent(cplx(1.0, 1.0)), StateSpec::cat(cplx(2.0, 0.0))};
  for (const auto& spec : states) {
    const auto psi = prepare_state(spec, 30);
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto r = mle_reconstruct(sampled_dataset(psi, 30, 10000, seed), {}, &psi);
      INFO(spec.to_string(), " seed ", seed, " F = ", *r.fidelity);
      CHECK(*r.fidelity >= 0.995);
    }
  }
}

}
