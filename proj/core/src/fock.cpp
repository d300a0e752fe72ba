#include "iontherm/fock.hpp"

#include <cmath>
#include <stdexcept>

namespace iontherm {

int default_n_max(double nbar) {
  if (nbar < 0.0) throw std::domain_error("default_n_max: nbar must be >= 0");
  return static_cast<int>(std::ceil(nbar + 10.0 * std::sqrt(nbar + 1.0) + 10.0));
}

ThermalState thermal_probs(double nbar, int n_max, double tail_tol) {
  if (nbar < 0.0) throw std::domain_error("thermal_probs: nbar must be >= 0");
  if (n_max < 1) throw std::invalid_argument("thermal_probs: n_max must be >= 1");

  ThermalState st;
  st.nbar = nbar;
  st.probs.resize(n_max + 1);
  const double q = nbar / (nbar + 1.0);
  double p = 1.0 / (nbar + 1.0);
  for (int n = 0; n <= n_max; ++n) {
    st.probs[n] = p;
    p *= q;
  }
  // Exact geometric tail: sum_{n > n_max} P_n = q^(n_max+1).
  st.tail_deficit = std::pow(q, n_max + 1);
  st.truncation_warning = st.tail_deficit > tail_tol;
  return st;
}

Eigen::VectorXd thermal_prob_derivative(double nbar, int n_max) {
  if (nbar < 0.0) throw std::domain_error("thermal_prob_derivative: nbar must be >= 0");
  Eigen::VectorXd d(n_max + 1);
  // d P_n / d nbar = nbar^(n-1) (n - nbar) / (nbar+1)^(n+2)
  const double q = nbar / (nbar + 1.0);
  const double inv1 = 1.0 / (nbar + 1.0);
  if (nbar == 0.0) {
    d.setZero();
    d[0] = -1.0;
    if (n_max >= 1) d[1] = 1.0;
    return d;
  }
  double pow_q = 1.0;  // q^n
  for (int n = 0; n <= n_max; ++n) {
    d[n] = pow_q * (n - nbar) / (nbar * (nbar + 1.0)) * inv1;
    pow_q *= q;
  }
  return d;
}

double laguerre(int n, int alpha, double x) {
  if (n < 0 || alpha < 0) throw std::invalid_argument("laguerre: n, alpha must be >= 0");
  if (n == 0) return 1.0;
  double lm1 = 1.0;               // L_0
  double l = 1.0 + alpha - x;     // L_1
  for (int k = 1; k < n; ++k) {
    double lp1 = ((2.0 * k + 1.0 + alpha - x) * l - (k + alpha) * lm1) / (k + 1.0);
    lm1 = l;
    l = lp1;
  }
  return l;
}

Eigen::MatrixXd LambDickeOps::a_matrix() const {
  return a_diag.asDiagonal();
}

Eigen::MatrixXd LambDickeOps::m_matrix() const {
  const int dim = static_cast<int>(a_diag.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n + 1 < dim; ++n) m(n, n + 1) = m_upper[n];
  return m;
}

LambDickeOps build_lamb_dicke_ops(double eta, int n_max) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::domain_error("build_lamb_dicke_ops: eta must be in (0, 1)");
  if (n_max < 1) throw std::invalid_argument("build_lamb_dicke_ops: n_max must be >= 1");

  LambDickeOps ops;
  ops.eta = eta;
  const double x = eta * eta;
  const double pref = std::exp(-0.5 * x);
  ops.a_diag.resize(n_max + 1);
  ops.m_upper.resize(n_max);
  for (int n = 0; n <= n_max; ++n) ops.a_diag[n] = pref * laguerre(n, 0, x);
  for (int n = 0; n < n_max; ++n)
    ops.m_upper[n] = eta * pref * laguerre(n, 1, x) / std::sqrt(n + 1.0);
  return ops;
}

double f_approx(int n, double eta) {
  if (n < 0) throw std::invalid_argument("f_approx: n must be >= 0");
  const double root = std::sqrt(n + 1.0);
  return eta * root - 0.5 * eta * eta * eta * n * (n + 1.0) / root;
}

double qfi_thermal(double nbar) {
  if (nbar <= 0.0) throw std::domain_error("qfi_thermal: nbar must be > 0");
  const double r = 1.0 / nbar + 1.0;
  const double l = std::log(r);
  return 0.5 * nbar * std::sqrt(r) * l * l;
}

}  // namespace iontherm
