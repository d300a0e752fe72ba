#include "iontherm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/fisher_f.hpp>

#include "iontherm/numeric.hpp"

namespace iontherm {

const char* to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::bichromatic_point: return "bichromatic-point";
    case EstimateMethod::combined: return "combined";
    case EstimateMethod::mle: return "mle";
    case EstimateMethod::sideband_fit: return "sideband-fit";
  }
  return "unknown";
}

namespace {

// Eq.-(16)-style standard deviation evaluated at a (regularized) operating
// point p in (0, 1/2).
double point_stddev(double p, long n_shots, double k2 /* (eta Omega t)^2 */) {
  const double y = 1.0 - 2.0 * p;
  const double l = std::log(y);
  const double nb = -std::log1p(-2.0 * p) / k2 - 0.5;  // estimate at p
  const double c = 2.0 * nb + 1.0;
  const double var =
      p * (1.0 - p) * c * c / (static_cast<double>(n_shots) * y * y * l * l);
  return std::sqrt(var);
}

}  // namespace

Estimate estimate_point(double pe_hat, long n_shots, double eta, double omega,
                        double t) {
  if (t <= 0.0) throw std::domain_error("estimate_point: t must be > 0");
  if (n_shots < 1) throw std::invalid_argument("estimate_point: n_shots must be >= 1");
  if (pe_hat < 0.0 || pe_hat > 1.0)
    throw std::domain_error("estimate_point: pe_hat must be in [0, 1]");

  const double k2 = eta * omega * t * eta * omega * t;
  const double eps = 0.5 / static_cast<double>(n_shots);  // half count of headroom

  Estimate est;
  est.method = EstimateMethod::bichromatic_point;
  est.n_shots = n_shots;

  double p_used = pe_hat;
  if (pe_hat >= 0.5 - eps) {
    p_used = 0.5 - eps;
    est.flags |= kFlagClipped;
  }
  est.nbar_hat = -std::log1p(-2.0 * p_used) / k2 - 0.5;
  if (pe_hat <= 0.0) est.flags |= kFlagBoundary;

  const double p_std = std::clamp(p_used, eps, 0.5 - eps);
  est.stddev = point_stddev(p_std, n_shots, k2);
  return est;
}

Estimate combine_ions(const std::vector<Estimate>& estimates) {
  if (estimates.empty())
    throw std::invalid_argument("combine_ions: need at least one estimate");
  double wsum = 0.0;
  double acc = 0.0;
  Estimate out;
  out.method = EstimateMethod::combined;
  for (const auto& e : estimates) {
    if (!(e.stddev > 0.0))
      throw std::domain_error("combine_ions: every stddev must be > 0");
    const double w = 1.0 / (e.stddev * e.stddev);
    wsum += w;
    acc += w * e.nbar_hat;
    out.n_shots += e.n_shots;
    out.flags |= e.flags;
  }
  out.nbar_hat = acc / wsum;
  out.stddev = 1.0 / std::sqrt(wsum);
  return out;
}

Estimate mle_point(long k_excited, long n_shots, double eta, double omega, double t,
                   double max_nbar) {
  if (n_shots < 1) throw std::invalid_argument("mle_point: n_shots must be >= 1");
  if (k_excited < 0 || k_excited > n_shots)
    throw std::invalid_argument("mle_point: k must be in [0, N]");
  if (t <= 0.0) throw std::domain_error("mle_point: t must be > 0");

  Estimate est;
  est.method = EstimateMethod::mle;
  est.n_shots = n_shots;

  const double k = static_cast<double>(k_excited);
  const double n = static_cast<double>(n_shots);
  const double s = 0.25 * eta * eta * omega * omega * t * t;

  if (k / n >= 0.5) {
    // pe_reduced saturates below 1/2; the likelihood is increasing in nbar.
    est.nbar_hat = max_nbar;
    est.flags |= kFlagBoundary;
    est.stddev = 1.0 / std::sqrt(n * fisher_bichromatic(max_nbar, eta, omega, t));
    return est;
  }

  auto loglik = [&](double nb) {
    const double p = pe_reduced(nb, eta, omega, t);
    double l = 0.0;
    if (k_excited > 0) l += k * std::log(p);
    if (k_excited < n_shots) l += (n - k) * std::log1p(-p);
    return l;
  };
  est.nbar_hat = golden_section_max(loglik, 0.0, max_nbar, 1e-8);
  if (est.nbar_hat < 1e-6) {
    if (loglik(0.0) >= loglik(est.nbar_hat)) est.nbar_hat = 0.0;
    est.flags |= kFlagBoundary;
  } else if (est.nbar_hat > max_nbar - 1e-6 * max_nbar) {
    est.flags |= kFlagBoundary;
  }

  // Observed Fisher information from the analytic population derivatives.
  const double nb = est.nbar_hat;
  const double x = 2.0 * s * (1.0 + 2.0 * nb);
  const double p = -0.5 * std::expm1(-x);
  const double dp = 2.0 * s * std::exp(-x);
  const double d2p = -8.0 * s * s * std::exp(-x);
  const double q = 1.0 - p;
  const double lpp = (k / p - (n - k) / q) * d2p - (k / (p * p) + (n - k) / (q * q)) * dp * dp;
  if (lpp < 0.0) {
    est.stddev = 1.0 / std::sqrt(-lpp);
  } else {
    const double fisher = fisher_bichromatic(std::max(nb, 0.0), eta, omega, t);
    est.stddev = fisher > 0.0 ? 1.0 / std::sqrt(n * fisher) : 0.0;
  }
  return est;
}

namespace {

// Trace columns matched onto library time indices (exact grid up to 1e-9 us).
std::vector<int> match_times(const EvolutionTrace& trace, const FockSweepLibrary& lib) {
  std::vector<int> idx(trace.times_us.size(), -1);
  for (std::size_t j = 0; j < trace.times_us.size(); ++j) {
    const double t = trace.times_us[j];
    for (std::size_t l = 0; l < lib.times_us.size(); ++l) {
      if (std::abs(lib.times_us[l] - t) <= 1e-9 * std::max(1.0, std::abs(t))) {
        idx[j] = static_cast<int>(l);
        break;
      }
    }
    if (idx[j] < 0)
      throw std::invalid_argument(
          "fit_sideband: trace time " + std::to_string(t) +
          " us not on the library grid (time-grid mismatch)");
  }
  return idx;
}

double fit_loss(const EvolutionTrace& trace, const FockSweepLibrary& lib,
                const std::vector<int>& tidx, double nbar) {
  const int n_ions = static_cast<int>(trace.pe.rows());
  const int n_times = static_cast<int>(trace.pe.cols());
  const auto thermal = thermal_probs(nbar, std::max(1, lib.n_sweep()));
  double loss = 0.0;
  for (int j = 0; j < n_times; ++j) {
    const int l = tidx[j];
    for (int i = 0; i < n_ions; ++i) {
      double model = 0.0;
      for (int nn = 0; nn <= lib.n_sweep(); ++nn)
        model += thermal.probs[nn] * lib.p[nn](i, l);
      const double r = model - trace.pe(i, j);
      loss += r * r / trace.sigma(i, j) / trace.sigma(i, j);
    }
  }
  return loss;
}

}  // namespace

Estimate fit_sideband(const EvolutionTrace& trace, const FitConfig& cfg) {
  if (cfg.library == nullptr)
    throw std::invalid_argument("fit_sideband: FitConfig.library is required");
  const FockSweepLibrary& lib = *cfg.library;
  const int n_ions = static_cast<int>(trace.pe.rows());
  const int n_times = static_cast<int>(trace.pe.cols());
  if (n_ions != lib.config.n_ions)
    throw std::invalid_argument("fit_sideband: trace/library ion count mismatch");
  if (n_times == 0 || static_cast<int>(trace.times_us.size()) != n_times)
    throw std::invalid_argument("fit_sideband: empty or inconsistent trace");
  if (trace.sigma.rows() != n_ions || trace.sigma.cols() != n_times)
    throw std::invalid_argument("fit_sideband: per-point variances required");
  for (int i = 0; i < n_ions; ++i)
    for (int j = 0; j < n_times; ++j)
      if (!(trace.sigma(i, j) > 0.0))
        throw std::invalid_argument("fit_sideband: variances must be > 0");

  const auto tidx = match_times(trace, lib);
  auto loss = [&](double nb) { return fit_loss(trace, lib, tidx, nb); };
  Estimate est;
  est.method = EstimateMethod::sideband_fit;
  est.nbar_hat = golden_section_min(loss, 0.0, cfg.max_nbar, 1e-8);

  // Error propagation for the nonlinear weighted least-squares minimum:
  // sensitivity A_ij = d model / d nbar from the closed-form thermal
  // derivative, then the F(1, Mm-1; 1-beta) quantile factor.
  const Eigen::VectorXd dth = thermal_prob_derivative(est.nbar_hat,
                                                      std::max(1, lib.n_sweep()));
  double sum_a2 = 0.0;
  for (int j = 0; j < n_times; ++j) {
    const int l = tidx[j];
    for (int i = 0; i < n_ions; ++i) {
      double a = 0.0;
      for (int nn = 0; nn <= lib.n_sweep(); ++nn) a += dth[nn] * lib.p[nn](i, l);
      const double as = a / trace.sigma(i, j);
      sum_a2 += as * as;
    }
  }
  if (!(sum_a2 > 0.0))
    throw degenerate_fit_error("fit_sideband: flat loss, zero sensitivity to nbar");

  const long dof = static_cast<long>(n_ions) * n_times - 1;
  if (dof < 1) throw std::invalid_argument("fit_sideband: not enough data points");
  const boost::math::fisher_f_distribution<double> fdist(1.0, static_cast<double>(dof));
  const double fq = boost::math::quantile(fdist, 1.0 - cfg.beta);
  const double variance = (1.0 / sum_a2) * (loss(est.nbar_hat) / dof) * fq;
  est.stddev = std::sqrt(variance);

  const auto thermal = thermal_probs(est.nbar_hat, std::max(1, lib.n_sweep()));
  if (thermal.truncation_warning) est.flags |= kFlagTruncationWarning;
  if (est.nbar_hat < 1e-7 || est.nbar_hat > cfg.max_nbar * (1.0 - 1e-7))
    est.flags |= kFlagBoundary;
  return est;
}

std::vector<std::pair<double, double>> fit_loss_curve(const EvolutionTrace& trace,
                                                      const FitConfig& cfg,
                                                      int n_grid) {
  if (cfg.library == nullptr)
    throw std::invalid_argument("fit_loss_curve: FitConfig.library is required");
  const auto tidx = match_times(trace, *cfg.library);
  std::vector<std::pair<double, double>> out;
  out.reserve(n_grid);
  for (int g = 0; g < n_grid; ++g) {
    const double nb = cfg.max_nbar * g / (n_grid - 1.0);
    out.emplace_back(nb, fit_loss(trace, *cfg.library, tidx, nb));
  }
  return out;
}

HeatingFit heating_rate(const std::vector<HeatingPoint>& series) {
  if (series.size() < 3)
    throw std::invalid_argument("heating_rate: need at least 3 points");
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!(series[i].stddev > 0.0))
      throw std::invalid_argument("heating_rate: stddev must be > 0");
    if (i > 0 && !(series[i].delay_us > series[i - 1].delay_us))
      throw std::invalid_argument("heating_rate: delays must be strictly increasing");
  }
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : series) {
    const double w = 1.0 / (p.stddev * p.stddev);
    sw += w;
    sx += w * p.delay_us;
    sy += w * p.nbar_hat;
    sxx += w * p.delay_us * p.delay_us;
    sxy += w * p.delay_us * p.nbar_hat;
  }
  const double det = sw * sxx - sx * sx;
  HeatingFit fit;
  fit.rate = (sw * sxy - sx * sy) / det;
  fit.intercept = (sxx * sy - sx * sxy) / det;
  fit.rate_std = std::sqrt(sw / det);
  fit.intercept_std = std::sqrt(sxx / det);
  return fit;
}

}  // namespace iontherm
