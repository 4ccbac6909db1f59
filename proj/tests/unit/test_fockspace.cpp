#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"

using namespace qubitdyne;
using qd_test::random_state;

TEST_SUITE("fockspace") {

TEST_CASE("vacuum preparation") {
  const auto s = prepare_state(StateSpec::vacuum(), 20);
  CHECK(s.n_fock() == 20);
  CHECK(s.amps()(0) == cplx(1.0, 0.0));
  CHECK(s.amps().tail(19).norm() == 0.0);
}

TEST_CASE("coherent amplitudes match the direct series") {
  const auto s = prepare_state(StateSpec::coherent(cplx(2.0, 0.0)), 30);
  for (int n = 0; n < 30; ++n) {
    const double expect = std::exp(-2.0 + n * std::log(2.0) - 0.5 * std::lgamma(n + 1.0));
    CHECK(std::abs(s.amps()(n) - cplx(expect, 0.0)) < 1e-10);
  }
  CHECK(std::abs(s.mean_photon_number() - 4.0) < 1e-6);
  CHECK(std::abs(s.norm() - 1.0) < 1e-10);
}

TEST_CASE("cat state has even parity and the closed-form normalization") {
  const auto s = prepare_state(StateSpec::cat(cplx(2.0, 0.0)), 30);
  for (int n = 1; n < 30; n += 2) CHECK(s.amps()(n) == cplx(0.0, 0.0));
  const double norm = 1.0 / std::sqrt(2.0 * (1.0 + std::exp(-8.0)));
  // c_0 = norm * 2 e^{-2}
  CHECK(std::abs(s.amps()(0).real() - norm * 2.0 * std::exp(-2.0)) < 1e-12);
}

TEST_CASE("truncation overflow is rejected") {
  CHECK_THROWS_AS(prepare_state(StateSpec::coherent(cplx(2.0, 0.0)), 12), TruncationError);
  CHECK_THROWS_AS(prepare_state(StateSpec::fock(5), 5), TruncationError);
  CHECK_NOTHROW(prepare_state(StateSpec::coherent(cplx(0.0, std::sqrt(6.0))), 60));
}

TEST_CASE("default truncation keeps the top level empty") {
  for (const auto& spec : {StateSpec::coherent(cplx(2.0, 0.0)), StateSpec::cat(cplx(2.0, 0.0)), StateSpec::fock(2),
                           StateSpec::coherent(cplx(std::sqrt(6.0), 0.0)), StateSpec::squeezed(0.1, 1.0)}) {
    const auto s = prepare_state(spec, spec.default_n_fock());
    CHECK(s.top_level_population() < kTruncationTolerance);
  }
  CHECK(StateSpec::coherent(cplx(2.0, 0.0)).default_n_fock() == 30);
  CHECK(StateSpec::coherent(cplx(std::sqrt(6.0), 0.0)).default_n_fock() == 60);
}

TEST_CASE("state spec text round trip") {
  for (const char* text : {"vacuum", "fock:2", "coherent:2", "cat:2", "coherent:1.5+0.5i", "squeezed:0.01@1.5"}) {
    const auto spec = StateSpec::parse(text);
    CHECK(StateSpec::parse(spec.to_string()) == spec);
  }
  CHECK_THROWS_AS(StateSpec::parse("banana:3"), ConfigError);
  CHECK_THROWS_AS(StateSpec::parse("fock:1.5"), ConfigError);
}

TEST_CASE("normalize rejects a null vector") {
  CavityState s(CVector::Zero(4));
  CHECK_THROWS_AS(s.normalize(), NumericalError);
}

TEST_CASE("density matrix invariants are enforced") {
  CMatrix m = CMatrix::Zero(3, 3);
  m(0, 0) = 1.0;
  CHECK_NOTHROW(DensityMatrix{m});
  m(0, 1) = cplx(0.0, 0.2);
  CHECK_THROWS_AS(DensityMatrix{m}, NumericalError);
  CMatrix neg = CMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityMatrix{neg}, NumericalError);
  CMatrix tr = CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix{tr}, NumericalError);
}

TEST_CASE("quadrature operator elements") {
  const auto x = quadrature_operator(0.0, {}, 12);
  for (int n = 0; n + 1 < 12; ++n) CHECK(std::abs(x(n, n + 1) - cplx(std::sqrt((n + 1) / 2.0), 0.0)) < 1e-14);
  CHECK((x - x.adjoint()).cwiseAbs().maxCoeff() < 1e-14);

  // theta = pi/2 gives p = i (a^dagger - a) / sqrt2
  const CMatrix a = annihilation(12);
  const CMatrix p = cplx(0.0, 1.0) * (a.adjoint() - a) / kSqrt2;
  CHECK((quadrature_operator(kHalfPi, {}, 12) - p).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("operator builders are Hermitian") {
  for (double th : {0.0, 0.3, 1.7, 2.9}) {
    const auto x = quadrature_operator(th, QuadratureConvention::unit_variance(), 25);
    CHECK((x - x.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }
  const auto n = number_operator(25);
  CHECK((n - n.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("vacuum variance follows the convention") {
  const auto vac = prepare_state(StateSpec::vacuum(), 10);
  const QuadratureConvention convs[] = {QuadratureConvention::quarter_variance(),
                                        QuadratureConvention::half_variance(), QuadratureConvention::unit_variance()};
  const double expect[] = {0.25, 0.5, 1.0};
  for (int k = 0; k < 3; ++k) {
    for (double th : {0.0, 0.7, kHalfPi}) {
      const auto x = quadrature_operator(th, convs[k], 10);
      const double v = (vac.amps().adjoint() * x * x * vac.amps()).value().real();
      CHECK(std::abs(v - expect[k]) < 1e-12);
    }
    CHECK(convs[k].vacuum_variance() == doctest::Approx(expect[k]));
  }
}

TEST_CASE("vacuum quadrature density is Gaussian with variance 1/2") {
  const auto vac = prepare_state(StateSpec::vacuum(), 10);
  const auto grid = linspace(-6, 6, 1201);
  for (double th : {0.0, 1.1}) {
    const auto pdf = quadrature_pdf(vac, th, grid);
    for (std::size_t i = 0; i < grid.size(); i += 50)
      CHECK(std::abs(pdf[i] - std::exp(-grid[i] * grid[i]) / std::sqrt(kPi)) < 1e-12);
  }
}

TEST_CASE("Fock 2 density matches the Hermite oracle and vanishes at the roots of H_2") {
  const auto s = prepare_state(StateSpec::fock(2), 10);
  const std::vector<double> xs = {-2.0, -1.0 / std::sqrt(2.0), -0.3, 0.0, 0.5, 1.0 / std::sqrt(2.0), 1.7};
  const auto pdf = quadrature_pdf(s, 0.0, xs, {}, false);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double h2 = 4 * xs[i] * xs[i] - 2;
    const double oracle = h2 * h2 * std::exp(-xs[i] * xs[i]) / (8.0 * std::sqrt(kPi));
    CHECK(std::abs(pdf[i] - oracle) < 1e-12);
  }
  CHECK(pdf[1] < 1e-20);
  CHECK(pdf[5] < 1e-20);
}

TEST_CASE("coherent density is centred on <x> = sqrt2 Re(alpha)") {
  const auto s = prepare_state(StateSpec::coherent(cplx(2.0, 0.0)), 30);
  const auto grid = linspace(-4, 10, 2801);
  const auto pdf = quadrature_pdf(s, 0.0, grid);
  double mean = 0.0;
  const double h = grid[1] - grid[0];
  for (std::size_t i = 0; i < grid.size(); ++i) mean += grid[i] * pdf[i] * h;
  const auto x = quadrature_operator(0.0, {}, 30);
  const double op_mean = (s.amps().adjoint() * x * s.amps()).value().real();
  CHECK(std::abs(op_mean - 2.0 * kSqrt2) < 1e-8);
  CHECK(std::abs(mean - op_mean) < 1e-6);
}

TEST_CASE("quadrature density rejects a grid that misses the support") {
  const auto s = prepare_state(StateSpec::coherent(cplx(2.0, 0.0)), 30);
  const auto grid = linspace(-1, 1, 101);
  CHECK_THROWS_AS(quadrature_pdf(s, 0.0, grid), NumericalError);
}

TEST_CASE("mixed-state density is the weighted sum") {
  CMatrix m = CMatrix::Zero(6, 6);
  m(0, 0) = 0.5;
  m(1, 1) = 0.5;
  const DensityMatrix rho(m);
  const auto grid = linspace(-5, 5, 501);
  const auto mix = quadrature_pdf(rho, 0.4, grid);
  const auto p0 = quadrature_pdf(prepare_state(StateSpec::vacuum(), 6), 0.4, grid);
  const auto p1 = quadrature_pdf(prepare_state(StateSpec::fock(1), 6), 0.4, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(mix[i] - 0.5 * (p0[i] + p1[i])) < 1e-12);
}

TEST_CASE("rotation covariance") {
  const auto grid = linspace(-7, 7, 701);
  for (unsigned seed = 1; seed <= 4; ++seed) {
    const auto s = random_state(5, 20, seed);
    for (double th : {0.4, 2.2}) {
      const auto a = quadrature_pdf(s, th, grid);
      const auto b = quadrature_pdf(phase_rotate(s, th), 0.0, grid);
      double diff = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
      CHECK(diff < 1e-10);
    }
  }
}

TEST_CASE("Hermite recurrence is stable at high Fock numbers") {
  const std::vector<double> xs = linspace(-20, 20, 4001);
  const auto h = hermite_functions(xs, 150, {});
  CHECK(h.allFinite());
  const double dx = xs[1] - xs[0];
  for (int n : {0, 90, 149}) CHECK(std::abs(h.row(n).squaredNorm() * dx - 1.0) < 1e-6);
}

TEST_CASE("quadrature support grows with amplitude") {
  const DensityMatrix vac(prepare_state(StateSpec::vacuum(), 10));
  const DensityMatrix coh(prepare_state(StateSpec::coherent(cplx(2.0, 0.0)), 30));
  const double sv = quadrature_support(vac);
  CHECK(sv > 3.0);
  CHECK(sv < 4.0);
  CHECK(quadrature_support(coh) > sv + 2.0);
}

TEST_CASE("Husimi function examples") {
  const auto vac = prepare_state(StateSpec::vacuum(), 20);
  const std::vector<cplx> origin = {cplx(0, 0)};
  CHECK(husimi_q(vac, origin)[0] == doctest::Approx(1.0 / kPi).epsilon(1e-12));

  const auto f2 = prepare_state(StateSpec::fock(2), 20);
  CHECK(husimi_q(f2, origin)[0] < 1e-30);

  const cplx alpha(1.2, -0.7);
  const auto coh = prepare_state(StateSpec::coherent(alpha), 30);
  const std::vector<cplx> pts = {alpha, alpha + 0.05, alpha - 0.05, alpha + cplx(0, 0.05), alpha - cplx(0, 0.05)};
  const auto q = husimi_q(coh, pts);
  for (int k = 1; k < 5; ++k) CHECK(q[0] > q[k]);
  CHECK(q[0] == doctest::Approx(1.0 / kPi).epsilon(1e-9));
}

TEST_CASE("Husimi function integrates to one") {
  const DensityMatrix rho(prepare_state(StateSpec::cat(cplx(2.0, 0.0)), 30));
  const double lim = 5.5, h = 0.05;
  std::vector<cplx> pts;
  for (double re = -lim; re <= lim + 1e-9; re += h)
    for (double im = -lim; im <= lim + 1e-9; im += h) pts.emplace_back(re, im);
  const auto q = husimi_q(rho, pts);
  double total = 0.0;
  for (double v : q) total += v * h * h;
  CHECK(std::abs(total - 1.0) < 1e-3);
}

TEST_CASE("Wigner function examples") {
  const std::vector<double> zero = {0.0};
  CHECK(wigner(prepare_state(StateSpec::vacuum(), 10), zero, zero)[0] == doctest::Approx(1.0 / kPi).epsilon(1e-10));
  CHECK(wigner(prepare_state(StateSpec::fock(2), 10), zero, zero)[0] == doctest::Approx(1.0 / kPi).epsilon(1e-10));
  CHECK(wigner(prepare_state(StateSpec::fock(1), 10), zero, zero)[0] == doctest::Approx(-1.0 / kPi).epsilon(1e-10));

  // even cat: fringes along p with negative lobes next to the origin
  const auto cat = prepare_state(StateSpec::cat(cplx(2.0, 0.0)), 30);
  const auto ps = linspace(-1.0, 1.0, 81);
  const std::vector<double> xs(ps.size(), 0.0);
  const auto w = wigner(cat, xs, ps);
  CHECK(*std::min_element(w.begin(), w.end()) < -0.2);

  // unit-variance convention rescales the density
  CHECK(wigner(prepare_state(StateSpec::vacuum(), 10), zero, zero, QuadratureConvention::unit_variance())[0] ==
        doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-10));
}

TEST_CASE("Wigner marginal reproduces the quadrature density for random 5-photon states") {
  const double h = 0.04;
  const auto xs = linspace(-4.5, 4.5, 19);
  const auto ps = linspace(-9.0, 9.0, static_cast<int>(18.0 / h) + 1);
  for (unsigned seed = 11; seed <= 13; ++seed) {
    const DensityMatrix rho(random_state(5, 20, seed));
    std::vector<double> px, pp;
    for (double x : xs)
      for (double p : ps) {
        px.push_back(x);
        pp.push_back(p);
      }
    const auto w = wigner(rho, px, pp);
    const auto pdf = quadrature_pdf(rho, 0.0, xs, {}, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double m = 0.0;
      for (std::size_t j = 0; j < ps.size(); ++j) m += w[i * ps.size() + j] * h;
      worst = std::max(worst, std::abs(m - pdf[i]));
    }
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("fidelity examples") {
  const auto psi = random_state(4, 10, 3);
  CHECK(fidelity(DensityMatrix(psi), psi) == doctest::Approx(1.0).epsilon(1e-12));
  const DensityMatrix vac(prepare_state(StateSpec::vacuum(), 10));
  CHECK(fidelity(vac, prepare_state(StateSpec::fock(2), 10)) == 0.0);
  CMatrix m = CMatrix::Zero(10, 10);
  m(0, 0) = 0.5;
  m(1, 1) = 0.5;
  CHECK(fidelity(DensityMatrix(m), prepare_state(StateSpec::vacuum(), 10)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(fidelity(vac, prepare_state(StateSpec::vacuum(), 11)), DimensionError);
}

TEST_CASE("trace distance") {
  const DensityMatrix a(prepare_state(StateSpec::vacuum(), 4));
  const DensityMatrix b(prepare_state(StateSpec::fock(1), 4));
  CHECK(trace_distance(a, b) == doctest::Approx(1.0));
  CHECK(trace_distance(a, a) < 1e-14);
}

}
