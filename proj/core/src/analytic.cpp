#include "iontherm/analytic.hpp"

#include <cmath>
#include <stdexcept>

#include "iontherm/numeric.hpp"

namespace iontherm {

double pe_reduced(double nbar, double eta, double omega, double t) {
  if (nbar < 0.0) throw std::domain_error("pe_reduced: nbar must be >= 0");
  if (t < 0.0) throw std::domain_error("pe_reduced: t must be >= 0");
  const double s = 0.25 * eta * eta * omega * omega * t * t;  // (eta Omega t / 2)^2
  // -expm1 keeps full precision at small argument.
  return -0.5 * std::expm1(-2.0 * s * (1.0 + 2.0 * nbar));
}

double pe_reduced_dnbar(double nbar, double eta, double omega, double t) {
  const double s = 0.25 * eta * eta * omega * omega * t * t;
  return 2.0 * s * std::exp(-2.0 * s * (1.0 + 2.0 * nbar));
}

double pe_extended(double nbar, double eta, double omega, double t) {
  if (nbar < 0.0) throw std::domain_error("pe_extended: nbar must be >= 0");
  if (t < 0.0) throw std::domain_error("pe_extended: t must be >= 0");
  const double e2 = eta * eta;
  const double w2t2 = omega * omega * t * t;
  const double x = e2 * w2t2 * (0.5 + nbar);
  const double decay = std::exp(-x);
  const double lead = -0.5 * std::expm1(-x);
  const double corr = 0.5 * e2 * e2 * w2t2 * (nbar + 1.0) *
                      (2.0 - e2 * w2t2 * (1.0 + nbar)) * decay;
  return lead - corr;
}

double fisher_bichromatic(double nbar, double eta, double omega, double t) {
  if (t < 0.0) throw std::domain_error("fisher_bichromatic: t must be >= 0");
  const double s = 0.25 * eta * eta * omega * omega * t * t;
  if (s == 0.0) return 0.0;  // removable limit
  const double denom = std::expm1(4.0 * s * (2.0 * nbar + 1.0));
  return 16.0 * s * s / denom;
}

double fisher_vs_pe(double nbar, double pe) {
  if (!(pe > 0.0 && pe < 0.5))
    throw std::domain_error("fisher_vs_pe: pe must be in (0, 1/2)");
  const double y = 1.0 - 2.0 * pe;
  const double l = std::log(y);
  const double c = 2.0 * nbar + 1.0;
  return 4.0 / (c * c) * l * l / (1.0 / (y * y) - 1.0);
}

double optimal_pe() {
  // Stationarity of ln^2(1-2pe) / ((1-2pe)^{-2} - 1): with u = -ln(1-2pe)
  // the maximizer solves u = 1 - exp(-2u). A bracketed root gives the flat
  // maximum far more precisely than direct function comparison could.
  static const double value = [] {
    const double u = bisect_root([](double u) { return 1.0 - std::exp(-2.0 * u) - u; },
                                 0.5, 1.0);
    return 0.5 * (1.0 - std::exp(-u));
  }();
  return value;
}

ProbePlan optimal_time(double nbar_guess, double eta, double omega) {
  if (nbar_guess < 0.0) throw std::domain_error("optimal_time: nbar must be >= 0");
  ProbePlan plan;
  plan.pe_star = optimal_pe();
  // Invert pe_reduced: (eta Omega t)^2 (1/2 + nbar) = -ln(1 - 2 pe*).
  const double u = -std::log(1.0 - 2.0 * plan.pe_star);
  plan.t_star = std::sqrt(2.0 * u / (1.0 + 2.0 * nbar_guess)) / (eta * omega);
  return plan;
}

EstimatorMoments estimator_moments(double nbar, double pe, long n_shots) {
  if (!(pe > 0.0 && pe < 0.5))
    throw std::domain_error("estimator_moments: pe must be in (0, 1/2)");
  if (n_shots < 1) throw std::invalid_argument("estimator_moments: n_shots must be >= 1");
  const double y = 1.0 - 2.0 * pe;
  const double l = std::log(y);
  const double c = 2.0 * nbar + 1.0;
  const double base = pe * (1.0 - pe) / (static_cast<double>(n_shots) * y * y);
  EstimatorMoments m;
  m.bias = -base * c / l;
  m.variance = base * c * c / (l * l);
  return m;
}

double multi_qubit_qfi(double nbar, double t, const TrapConfig& cfg) {
  cfg.validate();
  const int m_ions = cfg.n_ions;
  if (m_ions > 12)
    throw std::invalid_argument("multi_qubit_qfi: refusing M > 12 (2^M enumeration)");
  std::vector<double> pe(m_ions), dpe(m_ions);
  for (int i = 0; i < m_ions; ++i) {
    pe[i] = pe_reduced(nbar, cfg.eta[i], cfg.omega, t);
    dpe[i] = pe_reduced_dnbar(nbar, cfg.eta[i], cfg.omega, t);
  }
  double fisher = 0.0;
  const std::uint64_t n_outcomes = 1ull << m_ions;
  for (std::uint64_t k = 0; k < n_outcomes; ++k) {
    double p = 1.0;
    double dp = 0.0;  // product rule: dP_k = P_k sum_i dP_i / P_i
    bool zero = false;
    for (int i = 0; i < m_ions; ++i) {
      const bool excited = (k >> i) & 1u;
      const double pi = excited ? pe[i] : 1.0 - pe[i];
      const double di = excited ? dpe[i] : -dpe[i];
      if (pi == 0.0) {
        // outcome has zero probability; its derivative vanishes as well
        zero = true;
        break;
      }
      dp = dp * pi + p * di;
      p *= pi;
    }
    if (zero || p <= 0.0) continue;
    fisher += dp * dp / p;
  }
  return fisher;
}

}  // namespace iontherm
