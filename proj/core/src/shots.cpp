#include "iontherm/shots.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "iontherm/csv.hpp"
#include "iontherm/numeric.hpp"
#include "iontherm/units.hpp"

namespace iontherm {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                           std::uint64_t c) {
  std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ull);
  h = mix64(h ^ (a + 0xD1B54A32D192ED03ull));
  h = mix64(h ^ (b + 0x8CB92BA72F3D8DD7ull));
  h = mix64(h ^ (c + 0x2545F4914F6CDD1Dull));
  return h;
}

double counter_uniform(std::uint64_t seed, std::uint64_t time_index,
                       std::uint64_t rep, std::uint64_t ion) {
  return static_cast<double>(counter_hash(seed, time_index, rep, ion) >> 11) *
         0x1.0p-53;
}

long sample_binomial(std::uint64_t seed, std::uint64_t time_index, std::uint64_t ion,
                     long n, double p) {
  if (n < 0) throw std::invalid_argument("sample_binomial: n must be >= 0");
  if (p < 0.0 || p > 1.0) throw std::domain_error("sample_binomial: p must be in [0, 1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  const double u = counter_uniform(seed, time_index, 0x81A5u, ion);
  const double q = 1.0 - p;
  // Start the CDF scan 12 sigma below the mean; the skipped lower-tail mass
  // is far below the 2^-53 resolution of u. Avoids pmf(0) underflow at
  // large n p.
  const double sigma = std::sqrt(n * p * q);
  long k = std::max(0L, static_cast<long>(std::floor(n * p - 12.0 * sigma)));
  auto log_pmf = [&](long kk) {
    return std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0) +
           kk * std::log(p) + (n - kk) * std::log1p(-p);
  };
  double pmf = std::exp(log_pmf(k));
  double cdf = pmf;
  const double ratio = p / q;
  while (cdf < u && k < n) {
    pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
    ++k;
    cdf += pmf;
  }
  return k;
}

void sample_shots(ShotTable& table, double time_us, const Eigen::VectorXd& pe_per_ion,
                  int n, const ReadoutModel& readout) {
  if (n < 1) throw std::invalid_argument("sample_shots: n must be >= 1");
  if (pe_per_ion.size() != table.n_ions)
    throw std::invalid_argument("sample_shots: pe vector size != n_ions");
  for (int i = 0; i < table.n_ions; ++i)
    if (pe_per_ion[i] < 0.0 || pe_per_ion[i] > 1.0)
      throw std::domain_error("sample_shots: pe must be in [0, 1]");

  const std::uint64_t tidx = table.schedule.size();
  table.schedule.push_back({time_us, n});
  std::vector<std::uint8_t> row(static_cast<std::size_t>(n) * table.n_ions);
  const bool with_readout = readout.eps_eg > 0.0 || readout.eps_ge > 0.0;
  for (int rep = 0; rep < n; ++rep) {
    for (int ion = 0; ion < table.n_ions; ++ion) {
      const double u = counter_uniform(table.seed, tidx, rep, ion);
      std::uint8_t bit = u < pe_per_ion[ion] ? 1 : 0;
      if (with_readout) {
        // separate counter stream for the readout flip
        const double u2 =
            counter_uniform(table.seed, tidx | 0x8000000000000000ull, rep, ion);
        if (bit == 1 && u2 < readout.eps_eg) bit = 0;
        if (bit == 0 && u2 < readout.eps_ge) bit = 1;
      }
      row[static_cast<std::size_t>(rep) * table.n_ions + ion] = bit;
    }
  }
  table.outcomes.push_back(std::move(row));
}

std::vector<PopulationEstimate> empirical_population(const ShotTable& table,
                                                     int time_index) {
  if (time_index < 0 || time_index >= static_cast<int>(table.schedule.size()))
    throw std::invalid_argument("empirical_population: bad time index");
  const int n = table.schedule[time_index].repetitions;
  const auto& row = table.outcomes[time_index];
  std::vector<PopulationEstimate> out(table.n_ions);
  for (int ion = 0; ion < table.n_ions; ++ion) {
    long k = 0;
    for (int rep = 0; rep < n; ++rep)
      k += row[static_cast<std::size_t>(rep) * table.n_ions + ion];
    PopulationEstimate& e = out[ion];
    e.n = n;
    e.p_hat = static_cast<double>(k) / n;
    e.sigma = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
    e.boundary = (k == 0 || k == n);
  }
  return out;
}

void write_shot_csv(std::ostream& out, const ShotTable& table) {
  out << "time_us,rep,ion,outcome\n";
  for (std::size_t p = 0; p < table.schedule.size(); ++p) {
    const auto& sched = table.schedule[p];
    const std::string t = format_double(sched.time_us);
    for (int rep = 0; rep < sched.repetitions; ++rep)
      for (int ion = 0; ion < table.n_ions; ++ion)
        out << t << ',' << rep << ',' << ion << ','
            << int(table.outcomes[p][static_cast<std::size_t>(rep) * table.n_ions + ion])
            << '\n';
  }
}

ShotTable read_shot_csv(std::istream& in) {
  ShotTable table;
  table.n_ions = 0;
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  // (point index, rep, ion) -> outcome; points keyed by time in file order
  std::map<double, int> point_of_time;
  struct RawPoint {
    double time_us;
    std::map<std::pair<long, long>, std::uint8_t> bits;
  };
  std::vector<RawPoint> points;

  auto fail = [&](const std::string& msg) {
    throw csv_parse_error("line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("time_us", 0) != 0) fail("expected header time_us,rep,ion,outcome");
      header_seen = true;
      continue;
    }
    const auto cols = split_csv_row(line);
    if (cols.size() != 4) fail("expected 4 columns");
    const auto t = parse_double(cols[0]);
    const auto rep = parse_int(cols[1]);
    const auto ion = parse_int(cols[2]);
    const auto bit = parse_int(cols[3]);
    if (!t) fail("bad time_us value");
    if (!rep || *rep < 0) fail("bad rep value");
    if (!ion || *ion < 0) fail("bad ion value");
    if (!bit || (*bit != 0 && *bit != 1)) fail("outcome must be 0 or 1");
    auto [it, inserted] = point_of_time.try_emplace(*t, static_cast<int>(points.size()));
    if (inserted) points.push_back({*t, {}});
    auto& pt = points[it->second];
    if (!pt.bits.emplace(std::make_pair(*rep, *ion), static_cast<std::uint8_t>(*bit)).second)
      fail("duplicate (time, rep, ion) row");
    table.n_ions = std::max(table.n_ions, static_cast<int>(*ion) + 1);
  }
  if (!header_seen) throw csv_parse_error("empty shot file (no header)");
  if (points.empty()) throw csv_parse_error("shot file has a header but no rows");
  if (table.n_ions == 0) throw csv_parse_error("no ions found");

  for (auto& pt : points) {
    long max_rep = -1;
    for (const auto& [key, bit] : pt.bits) max_rep = std::max(max_rep, key.first);
    const int reps = static_cast<int>(max_rep) + 1;
    if (static_cast<long>(pt.bits.size()) != static_cast<long>(reps) * table.n_ions)
      throw csv_parse_error("incomplete repetition block at time " +
                            format_double(pt.time_us) + " us");
    table.schedule.push_back({pt.time_us, reps});
    std::vector<std::uint8_t> row(static_cast<std::size_t>(reps) * table.n_ions);
    for (const auto& [key, bit] : pt.bits)
      row[static_cast<std::size_t>(key.first) * table.n_ions + key.second] = bit;
    table.outcomes.push_back(std::move(row));
  }
  return table;
}

ProtocolResult run_protocol(const TrapConfig& cfg, double true_nbar,
                            std::uint64_t seed, const ProtocolOptions& opt) {
  cfg.validate();
  if (true_nbar < 0.0) throw std::domain_error("run_protocol: nbar must be >= 0");
  if (opt.scan_step_us <= 0.0 || opt.scan_t_max_us <= 0.0)
    throw std::invalid_argument("run_protocol: bad scan grid");

  const int n_scan =
      static_cast<int>(std::floor(opt.scan_t_max_us / opt.scan_step_us + 1e-9)) + 1;
  std::vector<double> times_us(n_scan);
  std::vector<double> times_s(n_scan);
  for (int j = 0; j < n_scan; ++j) {
    times_us[j] = j * opt.scan_step_us;
    times_s[j] = seconds_from_us(times_us[j]);
  }

  // True dynamics: numeric propagation per distinct eta.
  Eigen::MatrixXd pe_curve(cfg.n_ions, n_scan);
  std::map<double, Eigen::VectorXd> by_eta;
  for (int i = 0; i < cfg.n_ions; ++i) {
    auto it = by_eta.find(cfg.eta[i]);
    if (it == by_eta.end()) {
      auto trace = weak_coupling_evolution(true_nbar, cfg.eta[i], cfg.omega, times_s,
                                           WeakCouplingMode::sideband, cfg.fock.n_max);
      it = by_eta.emplace(cfg.eta[i], trace.pe).first;
    }
    pe_curve.row(i) = it->second.transpose();
  }

  ProtocolResult res;
  res.scan_table.seed = seed;
  res.scan_table.n_ions = cfg.n_ions;
  int chosen = -1;
  for (int j = 0; j < n_scan; ++j) {
    sample_shots(res.scan_table, times_us[j], pe_curve.col(j), opt.scan_shots,
                 opt.readout);
    if (chosen < 0) {
      const auto pops = empirical_population(res.scan_table, j);
      double mean = 0.0;
      for (const auto& p : pops) mean += p.p_hat;
      mean /= cfg.n_ions;
      if (mean >= opt.pe_trigger) chosen = j;
    }
  }
  if (chosen < 0) {
    double peak = pe_curve.maxCoeff();
    throw protocol_error(
        "run_protocol: scan never reached the trigger population (max sampled "
        "model pe = " +
        std::to_string(peak) + ", trigger = " + std::to_string(opt.pe_trigger) + ")");
  }
  res.chosen_time_us = times_us[chosen];

  // Stage 2 uses its own derived stream so it never collides with scan draws.
  res.final_table.seed = counter_hash(seed, 0x5EEDu, 2u, 0u);
  res.final_table.n_ions = cfg.n_ions;
  sample_shots(res.final_table, res.chosen_time_us, pe_curve.col(chosen),
               opt.final_shots, opt.readout);

  const auto pops = empirical_population(res.final_table, 0);
  const double t_s = seconds_from_us(res.chosen_time_us);
  for (int i = 0; i < cfg.n_ions; ++i)
    res.per_ion.push_back(
        estimate_point(pops[i].p_hat, opt.final_shots, cfg.eta[i], cfg.omega, t_s));
  res.estimate = combine_ions(res.per_ion);
  return res;
}

std::vector<CrbRow> crb_benchmark(const TrapConfig& cfg,
                                  const std::vector<double>& nbar_grid,
                                  long n_shots, int n_seeds, BenchmarkEstimator est,
                                  BenchmarkModel model, std::uint64_t seed0,
                                  unsigned n_threads) {
  cfg.validate();
  if (nbar_grid.empty()) throw std::invalid_argument("crb_benchmark: empty grid");
  if (n_shots < 2 || n_seeds < 2)
    throw std::invalid_argument("crb_benchmark: need n_shots, n_seeds >= 2");

  std::vector<CrbRow> rows;
  for (double nbar : nbar_grid) {
    const auto plan = optimal_time(nbar, cfg.eta[0], cfg.omega);
    const double t = plan.t_star;

    Eigen::VectorXd pe_true(cfg.n_ions);
    for (int i = 0; i < cfg.n_ions; ++i) {
      if (model == BenchmarkModel::eq9) {
        pe_true[i] = pe_reduced(nbar, cfg.eta[i], cfg.omega, t);
      } else {
        auto trace = weak_coupling_evolution(nbar, cfg.eta[i], cfg.omega, {t},
                                             WeakCouplingMode::sideband);
        pe_true[i] = trace.pe[0];
      }
    }

    std::vector<double> nhat(n_seeds);
    parallel_for(
        static_cast<std::size_t>(n_seeds),
        [&](std::size_t s) {
          const std::uint64_t seed = seed0 + s;
          std::vector<Estimate> per_ion;
          const int n_use = est == BenchmarkEstimator::combined ? cfg.n_ions : 1;
          for (int i = 0; i < n_use; ++i) {
            long k = 0;
            for (long rep = 0; rep < n_shots; ++rep)
              k += counter_uniform(seed, 0, rep, i) < pe_true[i] ? 1 : 0;
            if (est == BenchmarkEstimator::mle) {
              per_ion.push_back(mle_point(k, n_shots, cfg.eta[i], cfg.omega, t));
            } else {
              per_ion.push_back(estimate_point(static_cast<double>(k) / n_shots,
                                               n_shots, cfg.eta[i], cfg.omega, t));
            }
          }
          nhat[s] = per_ion.size() == 1 ? per_ion[0].nbar_hat
                                        : combine_ions(per_ion).nbar_hat;
        },
        n_threads);

    CrbRow row;
    row.nbar = nbar;
    row.t_us = us_from_seconds(t);
    row.n_seeds = n_seeds;
    row.n_shots = n_shots;
    double mean = 0.0;
    for (double v : nhat) mean += v;
    mean /= n_seeds;
    double var = 0.0;
    for (double v : nhat) var += (v - mean) * (v - mean);
    var /= (n_seeds - 1);
    row.mean = mean;
    row.empirical_std = std::sqrt(var);
    row.bias = mean - nbar;
    const double fisher = est == BenchmarkEstimator::combined
                              ? multi_qubit_qfi(nbar, t, cfg)
                              : fisher_bichromatic(nbar, cfg.eta[0], cfg.omega, t);
    row.crb_std = 1.0 / std::sqrt(static_cast<double>(n_shots) * fisher);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace iontherm
