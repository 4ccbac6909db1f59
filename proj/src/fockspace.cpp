#include "qubitdyne/fockspace.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

namespace qubitdyne {

// --- CavityState / DensityMatrix -------------------------------------------

CavityState::CavityState(CVector amps) : amps_(std::move(amps)) {
  if (amps_.size() < 1) throw DimensionError("cavity state needs at least one Fock level");
}

CavityState CavityState::vacuum(int n_fock) {
  CVector v = CVector::Zero(n_fock);
  v(0) = 1.0;
  return CavityState(std::move(v));
}

void CavityState::normalize() {
  const double n = amps_.norm();
  if (!(n >= 1e-14)) throw NumericalError("state norm underflow (" + std::to_string(n) + ")");
  amps_ /= n;
}

double CavityState::mean_photon_number() const {
  double acc = 0.0;
  for (Eigen::Index n = 1; n < amps_.size(); ++n) acc += static_cast<double>(n) * std::norm(amps_(n));
  return acc;
}

DensityMatrix::DensityMatrix(CMatrix elements) : rho_(std::move(elements)) {
  if (rho_.rows() != rho_.cols() || rho_.rows() < 1) throw DimensionError("density matrix must be square");
  const double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) throw NumericalError("density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
  const double tr = rho_.trace().real();
  if (std::abs(tr - 1.0) > 1e-10) throw NumericalError("density matrix trace " + std::to_string(tr) + " != 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) throw NumericalError("density matrix has negative eigenvalues");
}

DensityMatrix::DensityMatrix(const CavityState& pure) : rho_(pure.amps() * pure.amps().adjoint()) {}

DensityMatrix DensityMatrix::unchecked(CMatrix elements) {
  DensityMatrix d;
  d.rho_ = std::move(elements);
  return d;
}

double DensityMatrix::mean_photon_number() const {
  double acc = 0.0;
  for (Eigen::Index n = 1; n < rho_.rows(); ++n) acc += static_cast<double>(n) * rho_(n, n).real();
  return acc;
}

// --- StateSpec --------------------------------------------------------------

namespace {

std::string format_complex(cplx z) {
  std::ostringstream os;
  os.precision(17);
  os << z.real();
  if (z.imag() != 0.0) os << (z.imag() >= 0 ? "+" : "") << z.imag() << "i";
  return os.str();
}

cplx parse_complex(const std::string& s) {
  static const std::regex re(R"(^\s*([-+]?[0-9.eE+-]*?[0-9.])\s*(?:([-+])\s*([0-9.eE+-]*)i)?\s*$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw ConfigError("cannot parse complex amplitude '" + s + "'");
  try {
    const double re_part = std::stod(m[1].str());
    double im_part = 0.0;
    if (m[2].matched) {
      const std::string mag = m[3].str().empty() ? "1" : m[3].str();
      im_part = std::stod(mag) * (m[2].str() == "-" ? -1.0 : 1.0);
    }
    return {re_part, im_part};
  } catch (const std::exception&) {
    throw ConfigError("cannot parse complex amplitude '" + s + "'");
  }
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " '" + s + "'");
  }
}

}  // namespace

std::string StateSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::Vacuum: return "vacuum";
    case Kind::Fock: return "fock:" + std::to_string(photons);
    case Kind::Coherent: return "coherent:" + format_complex(alpha);
    case Kind::Cat: return "cat:" + format_complex(alpha);
    case Kind::Squeezed: os << "squeezed:" << variance << "@" << center; return os.str();
  }
  return "vacuum";
}

StateSpec StateSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "vacuum") return vacuum();
  if (arg.empty()) throw ConfigError("state '" + text + "' needs a parameter");
  if (head == "fock") {
    const double n = parse_real(arg, "photon number");
    if (n < 0 || n != std::floor(n)) throw ConfigError("fock photon number must be a non-negative integer");
    return fock(static_cast<int>(n));
  }
  if (head == "coherent") return coherent(parse_complex(arg));
  if (head == "cat") return cat(parse_complex(arg));
  if (head == "squeezed") {
    const auto at = arg.find('@');
    const double var = parse_real(arg.substr(0, at), "squeezed variance");
    const double ctr = at == std::string::npos ? 0.0 : parse_real(arg.substr(at + 1), "squeezed center");
    if (!(var > 0)) throw ConfigError("squeezed variance must be positive");
    return squeezed(var, ctr);
  }
  throw ConfigError("unknown state kind '" + head + "'");
}

double StateSpec::mean_photon_number() const {
  const double a2 = std::norm(alpha);
  switch (kind) {
    case Kind::Vacuum: return 0.0;
    case Kind::Fock: return photons;
    case Kind::Coherent: return a2;
    case Kind::Cat: return a2 * std::tanh(a2);
    case Kind::Squeezed: {
      // <n> = (<x^2> + <p^2> - 1)/2 with <p^2> = 1/(4 var).
      return 0.5 * (variance + center * center + 0.25 / variance - 1.0);
    }
  }
  return 0.0;
}

int StateSpec::default_n_fock() const {
  if (kind == Kind::Fock) return std::max(30, photons + 20);
  if (kind == Kind::Squeezed) {
    const double v = std::min(variance, 0.25 / variance);
    const double r = v < 0.5 ? -0.5 * std::log(2.0 * v) : 0.0;
    const double t = std::tanh(r);
    const double m = t > 0 ? std::log(1e-12) / (2.0 * std::log(t)) : 0.0;
    return std::max(30, static_cast<int>(2.0 * m + 2.0 * center * center + 30.0));
  }
  const double n = mean_photon_number();
  if (n <= 4.5) return 30;
  if (n <= 6.5) return 60;
  return static_cast<int>(std::ceil(n + 12.0 * std::sqrt(n) + 30.0));
}

// --- preparation ------------------------------------------------------------

namespace {

CVector coherent_amps(cplx alpha, int n_fock) {
  CVector c(n_fock);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < n_fock; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return c;
}

CVector squeezed_amps(double variance, double center, int n_fock) {
  const QuadratureConvention conv;
  const double reach = std::max(std::sqrt(2.0 * n_fock + 1.0) + 8.0, std::abs(center) + 14.0 * std::sqrt(variance));
  const double step = std::min(0.005, std::sqrt(variance) / 20.0);
  const int npts = static_cast<int>(2.0 * reach / step) + 1;
  const auto grid = linspace(-reach, reach, npts);
  const RMatrix psi = hermite_functions(grid, n_fock, conv);
  RVector g(npts);
  const double pref = std::pow(2.0 * kPi * variance, -0.25);
  for (int j = 0; j < npts; ++j) {
    const double d = grid[j] - center;
    g(j) = pref * std::exp(-d * d / (4.0 * variance));
  }
  const double dx = grid[1] - grid[0];
  CVector c(n_fock);
  for (int n = 0; n < n_fock; ++n) c(n) = psi.row(n).dot(g) * dx;
  return c;
}

}  // namespace

CavityState prepare_state(const StateSpec& spec, int n_fock) {
  if (n_fock < 1) throw DimensionError("n_fock must be positive");
  CVector c = CVector::Zero(n_fock);
  switch (spec.kind) {
    case StateSpec::Kind::Vacuum: c(0) = 1.0; break;
    case StateSpec::Kind::Fock:
      if (spec.photons >= n_fock - 1)
        throw TruncationError("Fock level " + std::to_string(spec.photons) + " does not fit below the top of n_fock=" +
                              std::to_string(n_fock));
      c(spec.photons) = 1.0;
      break;
    case StateSpec::Kind::Coherent: c = coherent_amps(spec.alpha, n_fock); break;
    case StateSpec::Kind::Cat: c = coherent_amps(spec.alpha, n_fock) + coherent_amps(-spec.alpha, n_fock); break;
    case StateSpec::Kind::Squeezed: c = squeezed_amps(spec.variance, spec.center, n_fock); break;
  }
  CavityState state(std::move(c));
  // Top-level population is checked relative to the truncated norm.
  const double top = std::norm(state.amps()(n_fock - 1)) / state.amps().squaredNorm();
  if (top >= kTruncationTolerance)
    throw TruncationError(spec.to_string() + " overflows n_fock=" + std::to_string(n_fock) +
                          " (top-level population " + std::to_string(top) + ")");
  state.normalize();
  return state;
}

// --- operators --------------------------------------------------------------

CMatrix annihilation(int n_fock) {
  CMatrix a = CMatrix::Zero(n_fock, n_fock);
  for (int n = 1; n < n_fock; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

CMatrix number_operator(int n_fock) {
  CMatrix m = CMatrix::Zero(n_fock, n_fock);
  for (int n = 0; n < n_fock; ++n) m(n, n) = n;
  return m;
}

CMatrix quadrature_operator(double theta, const QuadratureConvention& conv, int n_fock) {
  CMatrix x = CMatrix::Zero(n_fock, n_fock);
  const cplx up = conv.c * std::polar(1.0, -theta);
  for (int n = 0; n + 1 < n_fock; ++n) {
    const double s = std::sqrt(static_cast<double>(n + 1));
    x(n, n + 1) = up * s;
    x(n + 1, n) = std::conj(up) * s;
  }
  return x;
}

CavityState phase_rotate(const CavityState& state, double theta) {
  CVector c = state.amps();
  for (Eigen::Index n = 0; n < c.size(); ++n) c(n) *= std::polar(1.0, -theta * static_cast<double>(n));
  return CavityState(std::move(c));
}

DensityMatrix phase_rotate(const DensityMatrix& rho, double theta) {
  const int n = rho.n_fock();
  CVector d(n);
  for (int k = 0; k < n; ++k) d(k) = std::polar(1.0, -theta * k);
  return DensityMatrix::unchecked(d.asDiagonal() * rho.matrix() * d.conjugate().asDiagonal());
}

RMatrix hermite_functions(std::span<const double> x, int n_fock, const QuadratureConvention& conv) {
  const auto npts = static_cast<Eigen::Index>(x.size());
  RMatrix psi(n_fock, npts);
  // Dimensionless coordinate u = x / (sqrt2 c); density rescaled by 1/sqrt(sqrt2 c).
  const double scale = kSqrt2 * conv.c;
  const double jac = 1.0 / std::sqrt(scale);
  const double norm0 = std::pow(kPi, -0.25);
  for (Eigen::Index j = 0; j < npts; ++j) {
    const double u = x[j] / scale;
    double prev = 0.0;
    double cur = norm0 * std::exp(-0.5 * u * u);
    psi(0, j) = cur * jac;
    for (int n = 0; n + 1 < n_fock; ++n) {
      const double next = std::sqrt(2.0 / (n + 1)) * u * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
      prev = cur;
      cur = next;
      psi(n + 1, j) = cur * jac;
    }
  }
  return psi;
}

// --- quadrature densities -----------------------------------------------------

namespace {

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return acc;
}

void check_pdf_normalization(std::span<const double> grid, const std::vector<double>& pdf) {
  if (grid.size() < 2) throw NumericalError("quadrature grid needs at least two points");
  const double mass = trapezoid(grid, pdf);
  if (std::abs(mass - 1.0) > 1e-4)
    throw NumericalError("quadrature grid too coarse or too narrow: density integrates to " + std::to_string(mass));
}

}  // namespace

std::vector<double> quadrature_pdf(const DensityMatrix& rho, double theta, std::span<const double> grid,
                                   const QuadratureConvention& conv, bool check_normalization) {
  const RMatrix psi = hermite_functions(grid, rho.n_fock(), conv);
  const CMatrix r = phase_rotate(rho, theta).matrix();
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const RVector v = psi.col(static_cast<Eigen::Index>(j));
    out[j] = std::max(0.0, (v.transpose() * r.real() * v).value());
  }
  if (check_normalization) check_pdf_normalization(grid, out);
  return out;
}

std::vector<double> quadrature_pdf(const CavityState& state, double theta, std::span<const double> grid,
                                   const QuadratureConvention& conv, bool check_normalization) {
  const RMatrix psi = hermite_functions(grid, state.n_fock(), conv);
  const CVector c = phase_rotate(state, theta).amps();
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const cplx amp = psi.col(static_cast<Eigen::Index>(j)).cast<cplx>().dot(c);
    out[j] = std::norm(amp);
  }
  if (check_normalization) check_pdf_normalization(grid, out);
  return out;
}

double quadrature_support(const DensityMatrix& rho, const QuadratureConvention& conv, double tail) {
  const double reach = (std::sqrt(2.0 * rho.n_fock() + 1.0) + 8.0) * kSqrt2 * conv.c;
  const int npts = static_cast<int>(2.0 * reach / 0.01) + 1;
  const auto grid = linspace(-reach, reach, npts);
  double x_max = 0.0;
  for (int k = 0; k < 16; ++k) {
    const auto pdf = quadrature_pdf(rho, kPi * k / 16.0, grid, conv, false);
    const double dx = grid[1] - grid[0];
    // Walk inwards from both ends until the excluded mass reaches `tail`.
    double left = 0.0;
    int i = 0;
    while (i < npts - 1 && left + pdf[i] * dx < tail) left += pdf[i++] * dx;
    double right = 0.0;
    int j = npts - 1;
    while (j > 0 && right + pdf[j] * dx < tail) right += pdf[j--] * dx;
    x_max = std::max({x_max, std::abs(grid[i]), std::abs(grid[j])});
  }
  return x_max;
}

// --- phase-space functions ----------------------------------------------------

namespace {

CVector coherent_overlaps(cplx beta, int n_fock) {
  // <n|beta>
  return coherent_amps(beta, n_fock);
}

// Wigner function for c = 1/sqrt2 at complex amplitude A = (x + i p)/sqrt2,
// via the Laguerre-free recursion over |m><n| components.
double wigner_point(const CMatrix& rho, cplx A, std::vector<cplx>& wl) {
  const auto M = static_cast<int>(rho.rows());
  wl.assign(M, cplx{});
  wl[0] = std::exp(-2.0 * std::norm(A)) / kPi;
  double w = rho(0, 0).real() * wl[0].real();
  for (int n = 1; n < M; ++n) {
    wl[n] = 2.0 * A * wl[n - 1] / std::sqrt(static_cast<double>(n));
    w += 2.0 * (rho(0, n) * wl[n]).real();
  }
  for (int m = 1; m < M; ++m) {
    const double sm = std::sqrt(static_cast<double>(m));
    cplx temp = wl[m];
    wl[m] = (2.0 * std::conj(A) * temp - sm * wl[m - 1]) / sm;
    w += (rho(m, m) * wl[m]).real();
    for (int n = m + 1; n < M; ++n) {
      const cplx temp2 = (2.0 * A * wl[n - 1] - sm * temp) / std::sqrt(static_cast<double>(n));
      temp = wl[n];
      wl[n] = temp2;
      w += 2.0 * (rho(m, n) * wl[n]).real();
    }
  }
  return w;
}

}  // namespace

std::vector<double> husimi_q(const DensityMatrix& rho, std::span<const cplx> beta) {
  std::vector<double> out(beta.size());
  for (std::size_t k = 0; k < beta.size(); ++k) {
    const CVector v = coherent_overlaps(beta[k], rho.n_fock());
    out[k] = std::max(0.0, (v.adjoint() * rho.matrix() * v).value().real() / kPi);
  }
  return out;
}

std::vector<double> husimi_q(const CavityState& state, std::span<const cplx> beta) {
  std::vector<double> out(beta.size());
  for (std::size_t k = 0; k < beta.size(); ++k) {
    const CVector v = coherent_overlaps(beta[k], state.n_fock());
    out[k] = std::norm(v.dot(state.amps())) / kPi;
  }
  return out;
}

std::vector<double> husimi_q_xp(const DensityMatrix& rho, std::span<const double> x, std::span<const double> p,
                                const QuadratureConvention& conv) {
  if (x.size() != p.size()) throw DimensionError("husimi_q_xp: x and p sizes differ");
  std::vector<cplx> beta(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) beta[k] = cplx(x[k], p[k]) / (2.0 * conv.c);
  auto q = husimi_q(rho, beta);
  const double jac = 1.0 / (4.0 * conv.c * conv.c);
  for (auto& v : q) v *= jac;
  return q;
}

std::vector<double> wigner(const DensityMatrix& rho, std::span<const double> x, std::span<const double> p,
                           const QuadratureConvention& conv) {
  if (x.size() != p.size()) throw DimensionError("wigner: x and p sizes differ");
  std::vector<double> out(x.size());
  std::vector<cplx> scratch;
  // Map to the c = 1/sqrt2 frame, then rescale the density.
  const double to_std = 1.0 / (kSqrt2 * conv.c);
  const double jac = 1.0 / (2.0 * conv.c * conv.c);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const cplx A = cplx(x[k] * to_std, p[k] * to_std) / kSqrt2;
    out[k] = wigner_point(rho.matrix(), A, scratch) * jac;
  }
  return out;
}

std::vector<double> wigner(const CavityState& state, std::span<const double> x, std::span<const double> p,
                           const QuadratureConvention& conv) {
  return wigner(DensityMatrix(state), x, p, conv);
}

// --- metrics ------------------------------------------------------------------

double fidelity(const DensityMatrix& rho, const CavityState& psi) {
  if (rho.n_fock() != psi.n_fock())
    throw DimensionError("fidelity: dimension mismatch (" + std::to_string(rho.n_fock()) + " vs " +
                         std::to_string(psi.n_fock()) + ")");
  const double f = (psi.amps().adjoint() * rho.matrix() * psi.amps()).value().real();
  return std::clamp(f, 0.0, 1.0);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.n_fock() != b.n_fock()) throw DimensionError("trace_distance: dimension mismatch");
  const CMatrix d = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(std::max(n, 0));
  if (n == 1) v[0] = lo;
  for (int i = 0; i < n && n > 1; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace qubitdyne
