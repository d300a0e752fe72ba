#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "iontherm/estimators.hpp"

// Quantum-projection-noise simulation: counter-based reproducible Bernoulli
// sampling, the two-stage optimal-point protocol and Monte Carlo benchmark
// harnesses.

namespace iontherm {

// Stateless counter-based generator keyed by (seed, time index, repetition,
// ion): sampling order and thread count cannot change any outcome.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                           std::uint64_t c);
double counter_uniform(std::uint64_t seed, std::uint64_t time_index,
                       std::uint64_t rep, std::uint64_t ion);

// Binomial(n, p) count from a single counter draw by inverse-CDF scan.
// Statistically identical to summing n Bernoullis; used where per-shot
// outcomes are not needed and n is large.
long sample_binomial(std::uint64_t seed, std::uint64_t time_index, std::uint64_t ion,
                     long n, double p);

struct ReadoutModel {
  double eps_eg = 0.0;  // P(read g | state e)
  double eps_ge = 0.0;  // P(read e | state g)
};

struct SchedulePoint {
  double time_us = 0.0;
  int repetitions = 0;
};

struct ShotTable {
  std::uint64_t seed = 0;
  int n_ions = 1;
  std::vector<SchedulePoint> schedule;
  // outcomes[point][rep * n_ions + ion], 0 = ground, 1 = excited
  std::vector<std::vector<std::uint8_t>> outcomes;
};

// Appends one schedule point with n independent Bernoulli draws per ion.
void sample_shots(ShotTable& table, double time_us, const Eigen::VectorXd& pe_per_ion,
                  int n, const ReadoutModel& readout = {});

struct PopulationEstimate {
  double p_hat = 0.0;
  double sigma = 0.0;  // standard error sqrt(p(1-p)/N)
  bool boundary = false;
  long n = 0;
};

std::vector<PopulationEstimate> empirical_population(const ShotTable& table,
                                                     int time_index);

// CSV schema: header `time_us,rep,ion,outcome`, one row per draw, `#`
// comment lines allowed. Parse failures report the line number.
void write_shot_csv(std::ostream& out, const ShotTable& table);
ShotTable read_shot_csv(std::istream& in);

struct csv_parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProtocolOptions {
  double scan_t_max_us = 200.0;
  double scan_step_us = 2.0;
  int scan_shots = 100;
  int final_shots = 2000;
  double pe_trigger = 0.27;  // earliest scan point with p_hat >= this wins
  ReadoutModel readout;
};

struct ProtocolResult {
  Estimate estimate;               // combined across ions
  std::vector<Estimate> per_ion;
  double chosen_time_us = 0.0;
  ShotTable scan_table;
  ShotTable final_table;
};

struct protocol_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two-stage protocol: a coarse scan with scan_shots repetitions per point on
// the numeric dynamics, then final_shots repetitions at the first point
// whose ion-averaged population reaches pe_trigger.
ProtocolResult run_protocol(const TrapConfig& cfg, double true_nbar,
                            std::uint64_t seed, const ProtocolOptions& opt = {});

enum class BenchmarkEstimator { point, mle, combined };
enum class BenchmarkModel { numeric, eq9 };

struct CrbRow {
  double nbar = 0.0;
  double t_us = 0.0;
  double empirical_std = 0.0;
  double crb_std = 0.0;
  double bias = 0.0;
  double mean = 0.0;
  int n_seeds = 0;
  long n_shots = 0;
};

// Ensemble statistics of the selected estimator at the per-nbar optimal
// probe time versus the Cramer-Rao bound. The sampling model defaults to
// numeric propagation so analytic-model mismatch stays part of what the
// benchmark measures.
std::vector<CrbRow> crb_benchmark(const TrapConfig& cfg,
                                  const std::vector<double>& nbar_grid,
                                  long n_shots, int n_seeds,
                                  BenchmarkEstimator est = BenchmarkEstimator::point,
                                  BenchmarkModel model = BenchmarkModel::numeric,
                                  std::uint64_t seed0 = 1,
                                  unsigned n_threads = 0);

}  // namespace iontherm
