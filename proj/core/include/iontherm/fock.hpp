#pragma once

#include <Eigen/Dense>

// Truncated harmonic-oscillator state space, thermal states and Lamb-Dicke
// operator matrix elements. Everything here is a pure function of its
// inputs; values are immutable after construction and safe to share across
// threads.

namespace iontherm {

inline constexpr double kDefaultTailTol = 1e-6;

struct FockSpace {
  int n_max = 1;  // states |0> .. |n_max>
  int dim() const { return n_max + 1; }
};

// Thermal occupation probabilities P_n = nbar^n / (nbar+1)^(n+1), kept
// untruncated (no renormalization). The truncation deficit is carried
// explicitly so downstream fitting can decide what to do with it;
// renormalizing silently would bias populations at high nbar.
struct ThermalState {
  double nbar = 0.0;
  Eigen::VectorXd probs;
  double tail_deficit = 0.0;     // exact geometric tail (nbar/(nbar+1))^(n_max+1)
  bool truncation_warning = false;
};

// Default truncation rule: keeps the thermal tail below measurement noise.
int default_n_max(double nbar);

ThermalState thermal_probs(double nbar, int n_max, double tail_tol = kDefaultTailTol);

// d P_n / d nbar in closed form, same layout as ThermalState::probs.
Eigen::VectorXd thermal_prob_derivative(double nbar, int n_max);

// Generalized Laguerre polynomial L^alpha_n(x) by the stable three-term
// recurrence (the factorial formula overflows well before n = 30).
double laguerre(int n, int alpha, double x);

// Carrier and first-sideband operator matrix elements:
//   A_diag[n]  = <n| A |n>   = exp(-eta^2/2) L^0_n(eta^2)
//   m_upper[n] = <n| M |n+1> = eta exp(-eta^2/2) L^1_n(eta^2) / sqrt(n+1)
// As eta -> 0, A -> identity and M -> eta * a.
struct LambDickeOps {
  double eta = 0.0;
  Eigen::VectorXd a_diag;   // length n_max+1
  Eigen::VectorXd m_upper;  // length n_max, first superdiagonal

  Eigen::MatrixXd a_matrix() const;  // diagonal (n_max+1)^2
  Eigen::MatrixXd m_matrix() const;  // strictly upper first diagonal
};

LambDickeOps build_lamb_dicke_ops(double eta, int n_max);

// Sideband element approximation f(n) = eta sqrt(n+1) - (eta^3/2) n(n+1)/sqrt(n+1).
double f_approx(int n, double eta);

// Quantum Fisher information of nbar for the optimal projective measurement
// on a thermal state. Singular at nbar = 0.
double qfi_thermal(double nbar);

}  // namespace iontherm
