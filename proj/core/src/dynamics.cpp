#include "iontherm/dynamics.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "iontherm/numeric.hpp"
#include "iontherm/units.hpp"

namespace iontherm {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

MatrixXcd sigma_x() {
  MatrixXcd s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

MatrixXcd sigma_plus() {  // |e><g|, with |g> index 0 and |e> index 1
  MatrixXcd s(2, 2);
  s << 0, 0, 1, 0;
  return s;
}

MatrixXcd proj_e() {
  MatrixXcd s(2, 2);
  s << 0, 0, 0, 1;
  return s;
}

// Qubit operator for one ion embedded on the 2^M code space; bit `ion` of
// the code is that ion's state.
MatrixXcd embed_qubit(int n_ions, int ion, const MatrixXcd& op2) {
  const int dim = 1 << n_ions;
  MatrixXcd out = MatrixXcd::Zero(dim, dim);
  const int mask = 1 << ion;
  for (int c = 0; c < dim; ++c) {
    const int rest = c & ~mask;
    const int bc = (c & mask) ? 1 : 0;
    for (int br = 0; br < 2; ++br) {
      if (op2(br, bc) == 0.0) continue;
      out(rest | (br ? mask : 0), c) = op2(br, bc);
    }
  }
  return out;
}

MatrixXd number_operator(int n_max) {
  VectorXd diag(n_max + 1);
  for (int n = 0; n <= n_max; ++n) diag[n] = n;
  return diag.asDiagonal();
}

// exp(-i s B) for Hermitian B, applied to a bundle of column states.
struct HermitianExp {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es;
  explicit HermitianExp(const MatrixXcd& b) : es(b) {
    if (es.info() != Eigen::Success)
      throw integration_error("eigendecomposition failed in propagator");
  }
  MatrixXcd apply(double s, const MatrixXcd& psi) const {
    Eigen::VectorXcd phases =
        (-kI * s * es.eigenvalues().cast<cplx>().array()).exp();
    return es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * psi));
  }
};

// One CF4 step across [t, t+h]: two exponentials of Gauss-node combinations.
// The factor acting first weights the earlier node more.
void cf4_step(const PeriodicHamiltonian& h, double t, double dt, MatrixXcd& psi) {
  static const double root3_6 = std::sqrt(3.0) / 6.0;
  const double c1 = 0.5 - root3_6;
  const double c2 = 0.5 + root3_6;
  const double a = 0.25 + root3_6;
  const double b = 0.25 - root3_6;
  const MatrixXcd h1 = h.at(t + c1 * dt);
  const MatrixXcd h2 = h.at(t + c2 * dt);
  psi = HermitianExp(a * h1 + b * h2).apply(dt, psi);
  psi = HermitianExp(b * h1 + a * h2).apply(dt, psi);
}

double max_population_delta(const MatrixXcd& a, const MatrixXcd& b) {
  return (a.cwiseAbs2() - b.cwiseAbs2()).cwiseAbs().maxCoeff();
}

// Evolve psi0 columns from t=0 through all requested times with the given
// number of base subdivisions per segment; returns bundle at each time.
std::vector<MatrixXcd> run_grid(const PeriodicHamiltonian& h, const MatrixXcd& psi0,
                                const std::vector<double>& times, double base_dt) {
  std::vector<MatrixXcd> out;
  out.reserve(times.size());
  MatrixXcd psi = psi0;
  double t = 0.0;
  for (double target : times) {
    const double span = target - t;
    if (span < 0.0)
      throw std::invalid_argument("propagate: times must be ascending and >= 0");
    if (span > 0.0) {
      const int n = std::max(1, static_cast<int>(std::ceil(span / base_dt)));
      const double dt = span / n;
      for (int k = 0; k < n; ++k) cf4_step(h, t + k * dt, dt, psi);
      t = target;
    }
    out.push_back(psi);
  }
  return out;
}

double hamiltonian_scale(const PeriodicHamiltonian& h) {
  double scale = 0.0;
  for (const auto& term : h.terms) scale += term.op.cwiseAbs().maxCoeff();
  return scale;
}

double fastest_frequency(const PeriodicHamiltonian& h) {
  double f = 0.0;
  for (const auto& term : h.terms) f = std::max(f, std::abs(term.freq));
  return f;
}

}  // namespace

void TrapConfig::validate() const {
  if (!(omega >= 0.0)) throw std::invalid_argument("TrapConfig: omega must be >= 0");
  if (!(nu > 0.0)) throw std::invalid_argument("TrapConfig: nu must be > 0");
  if (n_ions < 1) throw std::invalid_argument("TrapConfig: n_ions must be >= 1");
  if (fock.n_max < 1) throw std::invalid_argument("TrapConfig: n_max must be >= 1");
  if (delta_laser.size() != n_ions || delta_zeeman.size() != n_ions ||
      eta.size() != n_ions)
    throw std::invalid_argument("TrapConfig: per-ion vectors must have length n_ions");
  for (int i = 0; i < n_ions; ++i)
    if (!(eta[i] > 0.0 && eta[i] < 1.0))
      throw std::invalid_argument("TrapConfig: eta must be in (0, 1)");
}

TrapConfig TrapConfig::single_ion(double omega, double nu, double eta, int n_max) {
  TrapConfig cfg;
  cfg.omega = omega;
  cfg.nu = nu;
  cfg.n_ions = 1;
  cfg.delta_laser = Eigen::VectorXd::Constant(1, nu);
  cfg.delta_zeeman = Eigen::VectorXd::Zero(1);
  cfg.eta = Eigen::VectorXd::Constant(1, eta);
  cfg.fock.n_max = n_max;
  cfg.validate();
  return cfg;
}

Eigen::MatrixXcd PeriodicHamiltonian::at(double t) const {
  if (terms.empty()) throw std::invalid_argument("PeriodicHamiltonian: no terms");
  MatrixXcd h = MatrixXcd::Zero(terms[0].op.rows(), terms[0].op.cols());
  for (const auto& term : terms) h += term.op * std::exp(-kI * term.freq * t);
  return h;
}

int PeriodicHamiltonian::dim() const {
  return terms.empty() ? 0 : static_cast<int>(terms[0].op.rows());
}

PeriodicHamiltonian bichromatic_terms(const TrapConfig& cfg, int ion) {
  cfg.validate();
  if (ion < 0 || ion >= cfg.n_ions)
    throw std::invalid_argument("bichromatic_terms: bad ion index");
  const int nf = cfg.fock.dim();
  const auto ops = build_lamb_dicke_ops(cfg.eta[ion], cfg.fock.n_max);
  const MatrixXcd eye_f = MatrixXcd::Identity(nf, nf);
  const MatrixXcd a_op = ops.a_matrix().cast<cplx>();
  const MatrixXcd m_op = ops.m_matrix().cast<cplx>();
  const MatrixXcd sx = sigma_x();
  const double half_omega = 0.5 * cfg.omega;
  const double delta = cfg.delta_laser[ion];

  PeriodicHamiltonian h;
  h.terms.push_back({-cfg.delta_zeeman[ion] * kron(proj_e(), eye_f), 0.0});
  // carrier A (e^{-i delta t} + e^{i delta t})
  h.terms.push_back({half_omega * kron(sx, a_op), delta});
  h.terms.push_back({half_omega * kron(sx, a_op), -delta});
  // sidebands M e^{-i(nu-delta)t} + M^dag e^{+i(nu-delta)t}
  h.terms.push_back({half_omega * kron(sx, m_op), cfg.nu - delta});
  h.terms.push_back({half_omega * kron(sx, m_op.adjoint()), -(cfg.nu - delta)});
  return h;
}

Eigen::MatrixXcd build_bichromatic_hamiltonian(const TrapConfig& cfg, int ion, double t) {
  return bichromatic_terms(cfg, ion).at(t);
}

PeriodicHamiltonian bichromatic_hamiltonian_joint(const TrapConfig& cfg) {
  cfg.validate();
  const int nf = cfg.fock.dim();
  const int nq = 1 << cfg.n_ions;
  const MatrixXcd eye_f = MatrixXcd::Identity(nf, nf);
  PeriodicHamiltonian h;
  for (int i = 0; i < cfg.n_ions; ++i) {
    const auto ops = build_lamb_dicke_ops(cfg.eta[i], cfg.fock.n_max);
    const MatrixXcd a_op = ops.a_matrix().cast<cplx>();
    const MatrixXcd m_op = ops.m_matrix().cast<cplx>();
    const MatrixXcd sx_i = embed_qubit(cfg.n_ions, i, sigma_x());
    const MatrixXcd pe_i = embed_qubit(cfg.n_ions, i, proj_e());
    const double half_omega = 0.5 * cfg.omega;
    const double delta = cfg.delta_laser[i];
    h.terms.push_back({-cfg.delta_zeeman[i] * kron(pe_i, eye_f), 0.0});
    h.terms.push_back({half_omega * kron(sx_i, a_op), delta});
    h.terms.push_back({half_omega * kron(sx_i, a_op), -delta});
    h.terms.push_back({half_omega * kron(sx_i, m_op), cfg.nu - delta});
    h.terms.push_back({half_omega * kron(sx_i, m_op.adjoint()), -(cfg.nu - delta)});
  }
  (void)nq;
  return h;
}

Eigen::MatrixXcd displacement_matrix(double eta, int n_max) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::domain_error("displacement_matrix: eta must be in (0, 1)");
  if (n_max < 1) throw std::invalid_argument("displacement_matrix: n_max must be >= 1");
  // Pad so the kept block of exp(i eta (a+adag)) carries no truncation error.
  const int pad = std::max(30, static_cast<int>(std::ceil(
                                   7.4 * eta * std::sqrt(n_max + 60.0))));
  const int big = n_max + 1 + pad;
  MatrixXd x = MatrixXd::Zero(big, big);
  for (int n = 0; n + 1 < big; ++n) {
    const double v = std::sqrt(n + 1.0);
    x(n, n + 1) = v;
    x(n + 1, n) = v;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(x);
  Eigen::VectorXcd phases = (kI * eta * es.eigenvalues().cast<cplx>().array()).exp();
  MatrixXcd full = es.eigenvectors().cast<cplx>() * phases.asDiagonal() *
                   es.eigenvectors().transpose().cast<cplx>();
  return full.topLeftCorner(n_max + 1, n_max + 1);
}

Eigen::MatrixXcd build_fit_hamiltonian(const TrapConfig& cfg) {
  cfg.validate();
  const int nf = cfg.fock.dim();
  const int nq = 1 << cfg.n_ions;
  const MatrixXcd eye_q = MatrixXcd::Identity(nq, nq);
  const MatrixXcd eye_f = MatrixXcd::Identity(nf, nf);
  MatrixXcd h = kron(eye_q, cfg.nu * number_operator(cfg.fock.n_max).cast<cplx>());
  for (int i = 0; i < cfg.n_ions; ++i) {
    const MatrixXcd pe_i = embed_qubit(cfg.n_ions, i, proj_e());
    h -= cfg.delta_laser[i] * kron(pe_i, eye_f);
    const MatrixXcd d = displacement_matrix(cfg.eta[i], cfg.fock.n_max);
    const MatrixXcd sp_i = embed_qubit(cfg.n_ions, i, sigma_plus());
    const MatrixXcd coupling = 0.5 * cfg.omega * kron(sp_i, d);
    h += coupling + coupling.adjoint();
  }
  return h;
}

Propagation propagate(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& rho0,
                      const std::vector<double>& times) {
  if (h.rows() != h.cols() || h.rows() != rho0.rows() || rho0.rows() != rho0.cols())
    throw std::invalid_argument("propagate: dimension mismatch");
  HermitianExp prop(h);
  Propagation out;
  out.times = times;
  out.states.reserve(times.size());
  const MatrixXcd eye = MatrixXcd::Identity(h.rows(), h.cols());
  for (double t : times) {
    MatrixXcd u = prop.apply(t, eye);
    out.states.push_back(u * rho0 * u.adjoint());
  }
  return out;
}

std::vector<Eigen::MatrixXcd> propagate_states(const PeriodicHamiltonian& h,
                                               const Eigen::MatrixXcd& psi0,
                                               const std::vector<double>& times,
                                               double tol) {
  if (h.dim() != psi0.rows())
    throw std::invalid_argument("propagate_states: dimension mismatch");
  const double scale = hamiltonian_scale(h);
  const double fmax = fastest_frequency(h);
  double base_dt = scale > 0.0 ? 0.3 / scale : times.back();
  if (fmax > 0.0) base_dt = std::min(base_dt, kTwoPi / fmax / 20.0);

  std::vector<MatrixXcd> prev = run_grid(h, psi0, times, base_dt);
  for (int iter = 0; iter < 14; ++iter) {
    base_dt *= 0.5;
    if (!(base_dt > 0.0))
      throw integration_error("propagate_states: step size underflow");
    std::vector<MatrixXcd> next = run_grid(h, psi0, times, base_dt);
    double delta = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j)
      delta = std::max(delta, max_population_delta(next[j], prev[j]));
    prev = std::move(next);
    if (delta < tol) return prev;
  }
  throw integration_error(
      "propagate_states: no convergence to tol after 14 refinements (dt=" +
      std::to_string(base_dt) + ")");
}

std::vector<Eigen::MatrixXcd> propagate_states_fixed(const PeriodicHamiltonian& h,
                                                     const Eigen::MatrixXcd& psi0,
                                                     const std::vector<double>& times,
                                                     int steps_per_segment) {
  if (steps_per_segment < 1)
    throw std::invalid_argument("propagate_states_fixed: steps_per_segment < 1");
  std::vector<MatrixXcd> out;
  out.reserve(times.size());
  MatrixXcd psi = psi0;
  double t = 0.0;
  for (double target : times) {
    const double span = target - t;
    if (span < 0.0)
      throw std::invalid_argument("propagate: times must be ascending and >= 0");
    if (span > 0.0) {
      const double dt = span / steps_per_segment;
      for (int k = 0; k < steps_per_segment; ++k) cf4_step(h, t + k * dt, dt, psi);
      t = target;
    }
    out.push_back(psi);
  }
  return out;
}

Propagation propagate(const PeriodicHamiltonian& h, const Eigen::MatrixXcd& rho0,
                      const std::vector<double>& times, double tol) {
  if (h.dim() != rho0.rows() || rho0.rows() != rho0.cols())
    throw std::invalid_argument("propagate: dimension mismatch");
  const MatrixXcd eye = MatrixXcd::Identity(rho0.rows(), rho0.cols());
  auto unitaries = propagate_states(h, eye, times, tol);
  Propagation out;
  out.times = times;
  out.states.reserve(times.size());
  for (const auto& u : unitaries) out.states.push_back(u * rho0 * u.adjoint());
  return out;
}

Eigen::MatrixXcd one_period_propagator(const PeriodicHamiltonian& h, double period,
                                       double tol) {
  const MatrixXcd eye = MatrixXcd::Identity(h.dim(), h.dim());
  std::vector<double> times{period};
  return propagate_states(h, eye, times, tol)[0];
}

PopulationTrace weak_coupling_evolution(double nbar, double eta, double omega,
                                        const std::vector<double>& times,
                                        WeakCouplingMode mode, int n_max,
                                        double tail_tol) {
  if (n_max < 0) n_max = default_n_max(nbar);
  const auto thermal = thermal_probs(nbar, n_max, tail_tol);
  const int nf = n_max + 1;
  const int dim = 2 * nf;

  // Real symmetric H = coupling * sigma_x (x) X with X tridiagonal.
  MatrixXd x = MatrixXd::Zero(nf, nf);
  if (mode == WeakCouplingMode::displacement) {
    for (int n = 0; n + 1 < nf; ++n) {
      const double v = eta * std::sqrt(n + 1.0);
      x(n, n + 1) = v;
      x(n + 1, n) = v;
    }
  } else {
    const auto ops = build_lamb_dicke_ops(eta, n_max);
    for (int n = 0; n + 1 < nf; ++n) {
      x(n, n + 1) = ops.m_upper[n];
      x(n + 1, n) = ops.m_upper[n];
    }
  }
  MatrixXd h = MatrixXd::Zero(dim, dim);
  h.topRightCorner(nf, nf) = 0.5 * omega * x;
  h.bottomLeftCorner(nf, nf) = 0.5 * omega * x;

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
  const MatrixXd& v = es.eigenvectors();
  const VectorXd& lam = es.eigenvalues();

  // rho0 = |g><g| x diag(p); work in the eigenbasis where evolution is a
  // pure phase on each matrix element.
  MatrixXd rho0_eig = MatrixXd::Zero(dim, dim);
  {
    // V^T rho0 V with rho0 diagonal on the ground block.
    MatrixXd vg = v.topRows(nf);  // rows of V in the ground block
    rho0_eig = vg.transpose() * thermal.probs.asDiagonal() * vg;
  }
  MatrixXd proj_eig;  // V^T Pi_e V
  {
    MatrixXd ve = v.bottomRows(nf);
    proj_eig = ve.transpose() * ve;
  }
  // reduced coherence rho_eg = tr(T rho) with T = sum_m |g,m><e,m|
  MatrixXd t_eig;
  {
    MatrixXd vg = v.topRows(nf);
    MatrixXd ve = v.bottomRows(nf);
    t_eig = vg.transpose() * ve;  // V^T T V
  }

  PopulationTrace out;
  out.times = times;
  out.pe.resize(static_cast<Eigen::Index>(times.size()));
  out.truncation_warning = thermal.truncation_warning;
  const MatrixXd pop_weight = proj_eig.cwiseProduct(rho0_eig);
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    double pe = 0.0;
    cplx coher = 0.0;
    for (int a = 0; a < dim; ++a) {
      pe += pop_weight(a, a);
      coher += t_eig(a, a) * rho0_eig(a, a);
      for (int b = a + 1; b < dim; ++b) {
        const double phase = (lam[b] - lam[a]) * t;
        pe += 2.0 * pop_weight(a, b) * std::cos(phase);
        // T is not symmetric; keep both triangles.
        const cplx e = std::exp(-kI * phase);
        coher += t_eig(a, b) * rho0_eig(b, a) * e;
        coher += t_eig(b, a) * rho0_eig(a, b) * std::conj(e);
      }
    }
    out.pe[static_cast<Eigen::Index>(j)] = pe;
    out.max_abs_coherence = std::max(out.max_abs_coherence, std::abs(coher));
  }
  return out;
}

PopulationTrace full_bichromatic_evolution(const TrapConfig& cfg, int ion, double nbar,
                                           const std::vector<double>& times, double tol) {
  cfg.validate();
  const auto h = bichromatic_terms(cfg, ion);
  const int nf = cfg.fock.dim();
  const auto thermal = thermal_probs(nbar, cfg.fock.n_max);

  // Bundle of initial states |g, n>, one column per Fock level.
  MatrixXcd psi0 = MatrixXcd::Zero(2 * nf, nf);
  for (int n = 0; n < nf; ++n) psi0(n, n) = 1.0;

  auto bundles = propagate_states(h, psi0, times, tol);

  PopulationTrace out;
  out.times = times;
  out.pe.resize(static_cast<Eigen::Index>(times.size()));
  out.truncation_warning = thermal.truncation_warning;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const MatrixXcd& psi = bundles[j];
    double pe = 0.0;
    cplx coher = 0.0;
    for (int n = 0; n < nf; ++n) {
      pe += thermal.probs[n] * psi.col(n).tail(nf).squaredNorm();
      coher += thermal.probs[n] *
               (psi.col(n).head(nf).dot(psi.col(n).tail(nf)));  // <g part|e part>
    }
    out.pe[static_cast<Eigen::Index>(j)] = pe;
    out.max_abs_coherence = std::max(out.max_abs_coherence, std::abs(coher));
  }
  return out;
}

FockSweepLibrary fock_sweep(const TrapConfig& cfg, int n_sweep,
                            const std::vector<double>& times_us) {
  cfg.validate();
  if (n_sweep < 0) throw std::invalid_argument("fock_sweep: n_sweep must be >= 0");
  if (cfg.fock.n_max < n_sweep + kFockSweepMargin)
    throw std::invalid_argument(
        "fock_sweep: refused, need n_max >= n_sweep + 15 margin against "
        "truncation reflection");
  if (times_us.empty() || times_us.front() != 0.0)
    throw std::invalid_argument("fock_sweep: time grid must start at 0");
  for (std::size_t j = 1; j < times_us.size(); ++j)
    if (!(times_us[j] > times_us[j - 1]))
      throw std::invalid_argument("fock_sweep: times must be strictly ascending");

  const int nf = cfg.fock.dim();
  const int nq = 1 << cfg.n_ions;
  const int dim = nq * nf;
  const int n_times = static_cast<int>(times_us.size());

  const MatrixXcd h = build_fit_hamiltonian(cfg);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw integration_error("fock_sweep: eigendecomposition failed");
  const MatrixXcd& v = es.eigenvectors();
  const VectorXd& lam = es.eigenvalues();

  // Initial states |code=0, n>: columns n of the identity.
  MatrixXcd w = v.adjoint().leftCols(n_sweep + 1);  // V^dag e_n for n <= n_sweep

  // Per-ion excited projectors as basis-index masks.
  std::vector<std::vector<int>> excited_indices(cfg.n_ions);
  for (int c = 0; c < nq; ++c)
    for (int i = 0; i < cfg.n_ions; ++i)
      if ((c >> i) & 1)
        for (int n = 0; n < nf; ++n) excited_indices[i].push_back(c * nf + n);

  FockSweepLibrary lib;
  lib.config = cfg;
  lib.times_us = times_us;
  lib.p.assign(n_sweep + 1, MatrixXd::Zero(cfg.n_ions, n_times));

  std::vector<MatrixXcd> psi_t(n_times);
  parallel_for(static_cast<std::size_t>(n_times), [&](std::size_t j) {
    const double t = seconds_from_us(times_us[j]);
    Eigen::VectorXcd phases = (-kI * t * lam.cast<cplx>().array()).exp();
    psi_t[j] = v * (phases.asDiagonal() * w);
  });

  for (int j = 0; j < n_times; ++j) {
    const MatrixXcd& psi = psi_t[j];
    for (int n = 0; n <= n_sweep; ++n)
      for (int i = 0; i < cfg.n_ions; ++i) {
        double pe = 0.0;
        for (int idx : excited_indices[i]) pe += std::norm(psi(idx, n));
        lib.p[n](i, j) = pe;
      }
  }
  return lib;
}

Eigen::MatrixXd sweep_thermal_mixture(const FockSweepLibrary& lib, double nbar) {
  const int n_sweep = lib.n_sweep();
  const auto thermal = thermal_probs(nbar, std::max(1, n_sweep));
  MatrixXd out = MatrixXd::Zero(lib.p[0].rows(), lib.p[0].cols());
  for (int n = 0; n <= n_sweep; ++n) out += thermal.probs[n] * lib.p[n];
  return out;
}

Eigen::MatrixXd sweep_thermal_mixture_derivative(const FockSweepLibrary& lib,
                                                 double nbar) {
  const int n_sweep = lib.n_sweep();
  const VectorXd d = thermal_prob_derivative(nbar, std::max(1, n_sweep));
  MatrixXd out = MatrixXd::Zero(lib.p[0].rows(), lib.p[0].cols());
  for (int n = 0; n <= n_sweep; ++n) out += d[n] * lib.p[n];
  return out;
}

}  // namespace iontherm
