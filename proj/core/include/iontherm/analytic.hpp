#pragma once

#include <vector>

#include "iontherm/dynamics.hpp"

// Closed-form populations, Fisher information and probe-time planning for
// bichromatic driving thermometry.

namespace iontherm {

// Extended excited-state population (keeps the eta^4 correction); valid to
// ~1% for nbar < 20 at eta ~ 0.1.
double pe_extended(double nbar, double eta, double omega, double t);

// Reduced excited-state population  1/2 [1 - exp(-2 (eta Omega t / 2)^2 (1 + 2 nbar))].
// Exact for the displacement-mode weak-coupling Hamiltonian.
double pe_reduced(double nbar, double eta, double omega, double t);

// d pe_reduced / d nbar in closed form.
double pe_reduced_dnbar(double nbar, double eta, double omega, double t);

// Fisher information per shot of a single-ion excited-state measurement,
//   16 s^2 / (exp(4 s (2 nbar + 1)) - 1),  s = (eta Omega t / 2)^2.
// Returns the removable limit 0 at t = 0.
double fisher_bichromatic(double nbar, double eta, double omega, double t);

// Fisher information re-parameterized by the excited population,
//   4/(2 nbar+1)^2 * ln^2(1-2 pe) / ((1-2 pe)^{-2} - 1),  0 < pe < 1/2.
double fisher_vs_pe(double nbar, double pe);

// The nbar-independent maximizer of fisher_vs_pe, ~0.274618. Computed once
// by bracketed search on the stationarity condition, not hardcoded.
double optimal_pe();

struct ProbePlan {
  double pe_star = 0.0;  // target excited population, in (0, 1/2)
  double t_star = 0.0;   // probe time solving pe_reduced(nbar, t*) = pe_star, seconds
};

ProbePlan optimal_time(double nbar_guess, double eta, double omega);

struct EstimatorMoments {
  double bias = 0.0;
  double variance = 0.0;
};

// Leading-order bias and variance of the single-point estimator at the true
// operating point (nbar, pe) with n_shots detections.
EstimatorMoments estimator_moments(double nbar, double pe, long n_shots);

// Multi-qubit Fisher information by explicit enumeration of all 2^M product
// outcomes, with per-ion populations from pe_reduced. Refuses M > 12.
double multi_qubit_qfi(double nbar, double t, const TrapConfig& cfg);

struct FisherCurve {
  enum class Axis { time, pe };
  Axis axis = Axis::time;
  std::vector<double> grid;
  std::vector<double> values;
};

}  // namespace iontherm
