#pragma once

#include <string>
#include <vector>

#include "iontherm/analytic.hpp"
#include "iontherm/dynamics.hpp"

// Mean-phonon-number estimators and their uncertainty: single-point
// inversion, inverse-variance combination across ions, MLE, sideband
// evolution fitting and heating-rate regression.

namespace iontherm {

enum class EstimateMethod { bichromatic_point, combined, mle, sideband_fit };

const char* to_string(EstimateMethod m);

enum EstimateFlags : unsigned {
  kFlagClipped = 1u << 0,
  kFlagTruncationWarning = 1u << 1,
  kFlagBoundary = 1u << 2,
};

struct Estimate {
  double nbar_hat = 0.0;  // may be negative near the ground state; not clamped
  double stddev = 0.0;
  EstimateMethod method = EstimateMethod::bichromatic_point;
  long n_shots = 0;
  unsigned flags = 0;
};

// Single-point inversion nbar = -ln(1 - 2 pe) / (eta Omega t)^2 - 1/2, with
// the stddev from the closed-form variance evaluated at the estimate.
// pe_hat >= 1/2 - eps_clip is clipped with eps_clip = 1/(2 n_shots): one
// half-count of headroom keeps the log finite.
Estimate estimate_point(double pe_hat, long n_shots, double eta, double omega, double t);

// argmin_nbar sum_i (nbar_i - nbar)^2 / std_i^2 = inverse-variance weighted
// mean; combined stddev (sum 1/std_i^2)^(-1/2).
Estimate combine_ions(const std::vector<Estimate>& estimates);

// Binomial maximum-likelihood estimate with the population model pe_reduced;
// bracketed scalar search on [0, max_nbar], stddev from the observed Fisher
// information at the maximum.
Estimate mle_point(long k_excited, long n_shots, double eta, double omega, double t,
                   double max_nbar = 100.0);

struct FitConfig {
  double beta = 0.317;      // F-distribution tail parameter
  double max_nbar = 100.0;  // search bound for the scalar minimization
  const FockSweepLibrary* library = nullptr;
};

// Weighted least-squares fit of a measured sideband evolution against the
// thermal mixture of Fock-sweep traces; variance from the nonlinear
// least-squares error propagation with the F(1, Mm-1; 1-beta) quantile.
Estimate fit_sideband(const EvolutionTrace& trace, const FitConfig& cfg);

// Loss profile over an nbar grid, for diagnostics and plot emission.
std::vector<std::pair<double, double>> fit_loss_curve(const EvolutionTrace& trace,
                                                      const FitConfig& cfg,
                                                      int n_grid = 400);

struct HeatingPoint {
  double delay_us = 0.0;
  double nbar_hat = 0.0;
  double stddev = 0.0;
};

struct HeatingFit {
  double rate = 0.0;  // per microsecond
  double rate_std = 0.0;
  double intercept = 0.0;
  double intercept_std = 0.0;
};

// Weighted least-squares line nbar(delay) = nbar0 + rate * delay.
HeatingFit heating_rate(const std::vector<HeatingPoint>& series);

struct degenerate_fit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace iontherm
