#pragma once

#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "iontherm/fock.hpp"

// Hamiltonian construction and time evolution for the bichromatically
// driven qubit-phonon system: the exact time-dependent model, the
// weak-coupling model, the time-independent fitting Hamiltonian and the
// Fock-sweep evolution library consumed by the sideband fitter.
//
// Basis layout: single ion uses |q, n> with index q*(n_max+1)+n, q=0 ground,
// q=1 excited. Joint M-ion states use |code, n> with index
// code*(n_max+1)+n where bit i of code is the state of ion i.

namespace iontherm {

struct TrapConfig {
  double omega = 0.0;            // carrier Rabi frequency, rad/s
  double nu = 0.0;               // mode frequency, rad/s
  Eigen::VectorXd delta_laser;   // laser detuning per ion, rad/s
  Eigen::VectorXd delta_zeeman;  // qubit frequency inhomogeneity per ion, rad/s
  Eigen::VectorXd eta;           // Lamb-Dicke parameter per ion
  int n_ions = 1;
  FockSpace fock;

  void validate() const;  // throws std::invalid_argument

  // Single-ion convenience, delta_laser = nu and delta_zeeman = 0.
  static TrapConfig single_ion(double omega, double nu, double eta, int n_max);
};

// Time-periodic Hamiltonian written as a sum of harmonic terms,
// H(t) = sum_k op_k exp(-i freq_k t). Hermiticity of H(t) requires terms in
// conjugate pairs; the static part has freq = 0.
struct HarmonicTerm {
  Eigen::MatrixXcd op;
  double freq = 0.0;  // rad/s
};

struct PeriodicHamiltonian {
  std::vector<HarmonicTerm> terms;
  Eigen::MatrixXcd at(double t) const;
  int dim() const;
};

// Eq.-(3)-type per-ion Hamiltonian on the 2(n_max+1) qubit x phonon space:
//   h_i(t) = -delta_i |e><e| + (Omega/2) sigma_x [A (e^{-i D t} + e^{i D t})
//            + M e^{-i (nu-D) t} + M^dag e^{i (nu-D) t}]
PeriodicHamiltonian bichromatic_terms(const TrapConfig& cfg, int ion);
Eigen::MatrixXcd build_bichromatic_hamiltonian(const TrapConfig& cfg, int ion, double t);

// Sum of all per-ion terms embedded on the joint 2^M (n_max+1) space.
PeriodicHamiltonian bichromatic_hamiltonian_joint(const TrapConfig& cfg);

// Exact Fock-basis matrix elements of exp(i eta (a + a^dag)), all sideband
// orders. Computed on a padded space so the returned block carries no
// truncation error at double precision.
Eigen::MatrixXcd displacement_matrix(double eta, int n_max);

// Time-independent fitting Hamiltonian on the joint M-ion space:
//   nu a^dag a - Delta sum_i |e>_i<e| + sum_i (Omega/2)(|e>_i<g| e^{i eta_i (a+a^dag)} + h.c.)
Eigen::MatrixXcd build_fit_hamiltonian(const TrapConfig& cfg);

struct Propagation {
  std::vector<double> times;
  std::vector<Eigen::MatrixXcd> states;  // density matrices at each time
};

// Unitary evolution of a density matrix. The time-independent overload uses
// one eigendecomposition; the time-dependent one uses a commutator-free
// 4th-order Magnus stepper with global step halving until successive
// refinements agree below tol in every population.
Propagation propagate(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& rho0,
                      const std::vector<double>& times);
Propagation propagate(const PeriodicHamiltonian& h, const Eigen::MatrixXcd& rho0,
                      const std::vector<double>& times, double tol = 1e-9);

// State-bundle version of the time-dependent stepper: evolves the columns of
// psi0 through the same CF4 scheme. Used where density matrices would be
// needlessly heavy.
std::vector<Eigen::MatrixXcd> propagate_states(const PeriodicHamiltonian& h,
                                               const Eigen::MatrixXcd& psi0,
                                               const std::vector<double>& times,
                                               double tol = 1e-9);

// Same scheme with a fixed number of steps per segment, no error control.
// Exposed for convergence-order checks and benchmarks.
std::vector<Eigen::MatrixXcd> propagate_states_fixed(const PeriodicHamiltonian& h,
                                                     const Eigen::MatrixXcd& psi0,
                                                     const std::vector<double>& times,
                                                     int steps_per_segment);

// U(period, 0), the building block for stroboscopic oracles: powers of this
// give the exact evolution at every multiple of the period.
Eigen::MatrixXcd one_period_propagator(const PeriodicHamiltonian& h, double period,
                                       double tol = 1e-11);

enum class WeakCouplingMode {
  displacement,  // (eta Omega / 2) sigma_x (a + a^dag)
  sideband,      // (Omega / 2) sigma_x (M + M^dag)
};

struct PopulationTrace {
  std::vector<double> times;  // seconds
  Eigen::VectorXd pe;
  double max_abs_coherence = 0.0;  // max_t |rho_eg| of the reduced qubit
  bool truncation_warning = false;
};

// Numeric propagation from |g><g| x thermal(nbar) under the weak-coupling
// Hamiltonian; per-time excited-state population of the qubit.
PopulationTrace weak_coupling_evolution(double nbar, double eta, double omega,
                                        const std::vector<double>& times,
                                        WeakCouplingMode mode, int n_max = -1,
                                        double tail_tol = kDefaultTailTol);

// Full time-dependent propagation of the bichromatic Hamiltonian for one ion
// from |g><g| x thermal(nbar).
PopulationTrace full_bichromatic_evolution(const TrapConfig& cfg, int ion, double nbar,
                                           const std::vector<double>& times,
                                           double tol = 1e-9);

// Excited-state populations at the stroboscopic times t_k = k 2pi/nu,
// k = 0..k_max, from the van Vleck sandwich
//   U(t_k) = exp(-iK(t_k)) exp(-i t_k H_eff) exp(iK(0))
// at the given expansion order. Requires delta_laser = nu on the probed ion.
std::vector<double> stroboscopic_evolution(const TrapConfig& cfg, double nbar,
                                           int k_max, int order = 2, int ion = 0);

// Per-ion excited-state populations over a time grid for every initial state
// |g..g>|n>, n = 0..n_sweep, evolved under the fitting Hamiltonian.
// Times are in microseconds because this is the on-disk exchange grid.
struct FockSweepLibrary {
  TrapConfig config;
  std::vector<double> times_us;
  std::vector<Eigen::MatrixXd> p;  // p[n](i, j): ion i, time j
  int n_sweep() const { return static_cast<int>(p.size()) - 1; }
};

// Requires cfg.fock.n_max >= n_sweep + 15: the top levels of the truncated
// space reflect amplitude back and corrupt high-n traces, so they are kept
// as a margin and never swept.
inline constexpr int kFockSweepMargin = 15;
FockSweepLibrary fock_sweep(const TrapConfig& cfg, int n_sweep,
                            const std::vector<double>& times_us);

struct EvolutionTrace {
  std::vector<double> times_us;
  Eigen::MatrixXd pe;     // n_ions x n_times
  Eigen::MatrixXd sigma;  // n_ions x n_times; empty when noiseless
};

// Model curve P^i(nbar, t_j) = sum_n P^th_n(nbar) p[n](i, j) and its nbar
// derivative, the thermal mixture of Fock-sweep traces.
Eigen::MatrixXd sweep_thermal_mixture(const FockSweepLibrary& lib, double nbar);
Eigen::MatrixXd sweep_thermal_mixture_derivative(const FockSweepLibrary& lib, double nbar);

// Integration failure (step-size underflow and similar).
struct integration_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace iontherm
