#pragma once

#include <map>

#include <Eigen/Dense>

#include "iontherm/dynamics.hpp"

// Van Vleck high-frequency expansion for time-periodic Hamiltonians,
// H(t) = sum_n H_n exp(-i n w t). The evolution factorizes as
//   U(t_f, t_i) = exp(-iK(t_f)) exp(-i (t_f - t_i) H_eff) exp(iK(t_i))
// with a static H_eff and a periodic, zero-average, Hermitian kick K(t).

namespace iontherm {

using FourierComponents = std::map<int, Eigen::MatrixXcd>;

// Fourier components H_n = (w/2pi) int_0^{2pi/w} e^{i n w t} H(t) dt,
// collected analytically from the harmonic term structure. Every term
// frequency must be an integer multiple of omega_base within n_range.
FourierComponents vanvleck_components(const PeriodicHamiltonian& h,
                                      double omega_base, int n_range);

struct EffectiveEvolution {
  Eigen::MatrixXcd h_eff;                // H^(0) + ... + H^(order)
  std::map<int, Eigen::MatrixXcd> kick;  // K(t) = sum_m kick[m] e^{-i m w t}
  double omega_base = 0.0;
  int order = 1;

  Eigen::MatrixXcd kick_at(double t) const;
};

// Expansion orders:
//   H^(0) = H_0
//   H^(1) = sum_{m!=0} [H_{-m}, H_m] / (2 m w)
//   H^(2) = sum_{m!=0} [[H_{-m}, H_0], H_m] / (2 m^2 w^2)
//         + sum_{m!=0} sum_{n!=0,m} [[H_{-m}, H_{m-n}], H_n] / (3 m n w^2)
//   K^(1)(t) = i sum_{m!=0} H_m e^{-i m w t} / (m w)
//   K^(2)(t) = -i sum_{m!=0} [ sum_{n!=0,m} [H_n, H_{m-n}] / (2 m n w^2)
//                              + [H_m, H_0] / (m^2 w^2) ] e^{-i m w t}
// Orders above 2 are not implemented.
EffectiveEvolution vanvleck_effective(const FourierComponents& components,
                                      double omega_base, int order);

}  // namespace iontherm
