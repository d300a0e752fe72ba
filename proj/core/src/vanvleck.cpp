#include "iontherm/vanvleck.hpp"

#include <cmath>
#include <stdexcept>

#include "iontherm/units.hpp"

namespace iontherm {

namespace {

using Eigen::MatrixXcd;
using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};

MatrixXcd commutator(const MatrixXcd& a, const MatrixXcd& b) {
  return a * b - b * a;
}

const MatrixXcd& component(const FourierComponents& c, int m, const MatrixXcd& zero) {
  auto it = c.find(m);
  return it == c.end() ? zero : it->second;
}

}  // namespace

FourierComponents vanvleck_components(const PeriodicHamiltonian& h,
                                      double omega_base, int n_range) {
  if (!(omega_base > 0.0))
    throw std::domain_error("vanvleck_components: omega_base must be > 0");
  if (n_range < 0) throw std::invalid_argument("vanvleck_components: n_range < 0");
  FourierComponents out;
  for (const auto& term : h.terms) {
    const double ratio = term.freq / omega_base;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)))
      throw std::domain_error(
          "vanvleck_components: term frequency not commensurate with omega_base");
    const int m = static_cast<int>(rounded);
    if (std::abs(m) > n_range)
      throw std::invalid_argument(
          "vanvleck_components: term harmonic outside requested n_range");
    auto [it, inserted] = out.try_emplace(m, term.op);
    if (!inserted) it->second += term.op;
  }
  return out;
}

Eigen::MatrixXcd EffectiveEvolution::kick_at(double t) const {
  MatrixXcd k = MatrixXcd::Zero(h_eff.rows(), h_eff.cols());
  for (const auto& [m, c] : kick) k += c * std::exp(-kI * (m * omega_base) * t);
  return k;
}

EffectiveEvolution vanvleck_effective(const FourierComponents& components,
                                      double omega_base, int order) {
  if (order < 0 || order > 2)
    throw std::invalid_argument("vanvleck_effective: only orders 0..2 are supported");
  if (components.empty())
    throw std::invalid_argument("vanvleck_effective: empty component set");
  const Eigen::Index dim = components.begin()->second.rows();
  const MatrixXcd zero = MatrixXcd::Zero(dim, dim);
  const double w = omega_base;

  EffectiveEvolution eff;
  eff.omega_base = omega_base;
  eff.order = order;
  eff.h_eff = component(components, 0, zero);

  if (order >= 1) {
    for (const auto& [m, hm] : components) {
      if (m == 0) continue;
      const MatrixXcd& hmm = component(components, -m, zero);
      eff.h_eff += commutator(hmm, hm) / (2.0 * m * w);
      auto [it, inserted] = eff.kick.try_emplace(m, (kI / (m * w)) * hm);
      if (!inserted) it->second += (kI / (m * w)) * hm;
    }
  }
  if (order >= 2) {
    const MatrixXcd& h0 = component(components, 0, zero);
    for (const auto& [m, hm] : components) {
      if (m == 0) continue;
      const MatrixXcd& hmm = component(components, -m, zero);
      eff.h_eff += commutator(commutator(hmm, h0), hm) / (2.0 * m * m * w * w);
      MatrixXcd k2 = commutator(hm, h0) / (static_cast<double>(m) * m * w * w);
      for (const auto& [n, hn] : components) {
        if (n == 0 || n == m) continue;
        const MatrixXcd& hmn = component(components, m - n, zero);
        eff.h_eff += commutator(commutator(hmm, hmn), hn) / (3.0 * m * n * w * w);
        k2 += commutator(hn, hmn) / (2.0 * m * n * w * w);
      }
      auto [it, inserted] = eff.kick.try_emplace(m, -kI * k2);
      if (!inserted) it->second += -kI * k2;
    }
  }
  // Clean the roundoff asymmetry; H_eff is Hermitian by construction.
  eff.h_eff = 0.5 * (eff.h_eff + eff.h_eff.adjoint()).eval();
  return eff;
}

std::vector<double> stroboscopic_evolution(const TrapConfig& cfg, double nbar,
                                           int k_max, int order, int ion) {
  cfg.validate();
  if (k_max < 0) throw std::invalid_argument("stroboscopic_evolution: k_max < 0");
  if (std::abs(cfg.delta_laser[ion] - cfg.nu) > 1e-9 * cfg.nu)
    throw std::invalid_argument(
        "stroboscopic_evolution: requires resonant sideband delta_laser = nu");

  const auto terms = bichromatic_terms(cfg, ion);
  const auto comps = vanvleck_components(terms, cfg.nu, 2);
  const auto eff = vanvleck_effective(comps, cfg.nu, order);

  const int nf = cfg.fock.dim();
  const int dim = 2 * nf;
  const auto thermal = thermal_probs(nbar, cfg.fock.n_max);

  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(dim, dim);
  rho0.topLeftCorner(nf, nf) = thermal.probs.cast<cplx>().asDiagonal();

  // K is 2pi/nu periodic, so K(t_k) = K(0) for every k.
  Eigen::SelfAdjointEigenSolver<MatrixXcd> kes(eff.kick_at(0.0));
  const MatrixXcd e_k0 = kes.eigenvectors() *
                         (kI * kes.eigenvalues().cast<cplx>().array()).exp().matrix().asDiagonal() *
                         kes.eigenvectors().adjoint();  // exp(+i K(0))

  Eigen::SelfAdjointEigenSolver<MatrixXcd> hes(eff.h_eff);
  const MatrixXcd& v = hes.eigenvectors();
  const Eigen::VectorXd& lam = hes.eigenvalues();

  // U(t_k) = exp(-iK0) V exp(-i lam t_k) V^dag exp(+iK0); populations via
  // the phase-bilinear form in the H_eff eigenbasis.
  const MatrixXcd rho_hat = v.adjoint() * e_k0 * rho0 * e_k0.adjoint() * v;
  Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(dim, dim);
  proj.bottomRightCorner(nf, nf).setIdentity();
  const MatrixXcd proj_hat = v.adjoint() * e_k0 * proj * e_k0.adjoint() * v;

  const double period = kTwoPi / cfg.nu;
  std::vector<double> pe(k_max + 1, 0.0);
  for (int k = 0; k <= k_max; ++k) {
    const double t = k * period;
    cplx acc = 0.0;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        acc += proj_hat(a, b) * rho_hat(b, a) * std::exp(-kI * (lam[b] - lam[a]) * t);
    pe[k] = acc.real();
  }
  return pe;
}

}  // namespace iontherm
