#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "iontherm/estimators.hpp"
#include "iontherm/units.hpp"

using namespace iontherm;

namespace {
const double kNu = rad_per_s_from_2pi_khz(1000.0);
const double kOmega = rad_per_s_from_2pi_khz(50.0);
const double kEta = 0.1;
}  // namespace

TEST_CASE("estimate_point inverts pe_reduced exactly") {
  const double t = 2.0 * 0.5 / (kEta * kOmega);  // eta Omega t / 2 = 0.5
  const double pe = pe_reduced(1.0, kEta, kOmega, t);
  CHECK(pe == doctest::Approx(0.38843).epsilon(1e-4));
  auto est = estimate_point(pe, 2000, kEta, kOmega, t);
  CHECK(est.nbar_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.flags == 0);

  auto est0 = estimate_point(pe_reduced(0.0, kEta, kOmega, t), 2000, kEta, kOmega, t);
  CHECK(est0.nbar_hat == doctest::Approx(0.0).epsilon(1e-12));

  // property: round trip over random (nbar, t)
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> un(0.0, 20.0);
  std::uniform_real_distribution<double> uf(0.2, 2.0);
  for (int i = 0; i < 50; ++i) {
    const double nbar = un(rng);
    const double tt = optimal_time(nbar, kEta, kOmega).t_star * uf(rng);
    auto e = estimate_point(pe_reduced(nbar, kEta, kOmega, tt), 1000000, kEta, kOmega, tt);
    CHECK(std::abs(e.nbar_hat - nbar) <= 1e-12 * std::max(1.0, nbar));
  }
}

TEST_CASE("estimate_point boundary and clipping guards") {
  const double t = 20e-6;
  auto zero = estimate_point(0.0, 100, kEta, kOmega, t);
  CHECK(zero.nbar_hat == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK((zero.flags & kFlagBoundary) != 0);
  CHECK(std::isfinite(zero.stddev));

  auto clipped = estimate_point(0.62, 100, kEta, kOmega, t);
  CHECK((clipped.flags & kFlagClipped) != 0);
  CHECK(std::isfinite(clipped.nbar_hat));
  CHECK(std::isfinite(clipped.stddev));

  CHECK_THROWS_AS(estimate_point(0.3, 100, kEta, kOmega, 0.0), std::domain_error);
  CHECK_THROWS_AS(estimate_point(1.2, 100, kEta, kOmega, t), std::domain_error);
}

TEST_CASE("combine_ions: weights, degenerate limits, permutation invariance") {
  Estimate a{1.0, 0.1, EstimateMethod::bichromatic_point, 100, 0};
  auto triple = combine_ions({a, a, a});
  CHECK(triple.nbar_hat == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(triple.stddev == doctest::Approx(0.1 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(triple.method == EstimateMethod::combined);
  CHECK(triple.n_shots == 300);

  Estimate far{2.0, 1e6, EstimateMethod::bichromatic_point, 100, 0};
  auto weighted = combine_ions({a, far});
  CHECK(weighted.nbar_hat == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(weighted.stddev == doctest::Approx(0.1).epsilon(1e-9));

  Estimate b{1.7, 0.25, EstimateMethod::bichromatic_point, 100, 0};
  Estimate c{0.4, 0.3, EstimateMethod::bichromatic_point, 100, 0};
  auto abc = combine_ions({a, b, c});
  auto cba = combine_ions({c, b, a});
  CHECK(abc.nbar_hat == cba.nbar_hat);
  CHECK(abc.stddev == cba.stddev);
  CHECK(abc.stddev < a.stddev);
  CHECK(abc.stddev < b.stddev);
  CHECK(abc.stddev < c.stddev);

  auto single = combine_ions({b});
  CHECK(single.nbar_hat == b.nbar_hat);
  CHECK(single.stddev == b.stddev);

  Estimate bad{1.0, 0.0, EstimateMethod::bichromatic_point, 10, 0};
  CHECK_THROWS_AS(combine_ions({a, bad}), std::domain_error);
  CHECK_THROWS_AS(combine_ions({}), std::invalid_argument);
}

TEST_CASE("mle_point: moment matching, boundaries, grid-scan oracle") {
  const double t = optimal_time(1.0, kEta, kOmega).t_star;

  // k/N on the model curve puts the likelihood peak at the true nbar
  const double p_true = pe_reduced(1.0, kEta, kOmega, t);
  const long n = 4000;
  const long k = std::lround(p_true * n);
  auto est = mle_point(k, n, kEta, kOmega, t);
  const double p_used = static_cast<double>(k) / n;
  // invert exactly what k/N rounds to
  const double nbar_expect =
      estimate_point(p_used, n, kEta, kOmega, t).nbar_hat;
  CHECK(est.nbar_hat == doctest::Approx(nbar_expect).epsilon(1e-6));

  // grid-scan oracle: no grid point beats the reported maximum
  auto loglik = [&](double nb) {
    const double p = pe_reduced(nb, kEta, kOmega, t);
    return k * std::log(p) + (n - k) * std::log1p(-p);
  };
  const double lmax = loglik(est.nbar_hat);
  for (int g = 0; g <= 400; ++g) CHECK(loglik(0.01 * g) <= lmax + 1e-7 * std::abs(lmax));

  auto zero = mle_point(0, 500, kEta, kOmega, t);
  CHECK(zero.nbar_hat == doctest::Approx(0.0).epsilon(1e-6));
  CHECK((zero.flags & kFlagBoundary) != 0);
  {
    auto ll0 = [&](double nb) {
      return 500.0 * std::log1p(-pe_reduced(nb, kEta, kOmega, t));
    };
    for (int g = 1; g <= 100; ++g) CHECK(ll0(0.05 * g) < ll0(0.0));
  }

  auto sat = mle_point(300, 500, kEta, kOmega, t, 50.0);
  CHECK(sat.nbar_hat == 50.0);
  CHECK((sat.flags & kFlagBoundary) != 0);
}

namespace {

// Small synthetic library: 1 ion, smooth monotone-in-n traces. Not a physics
// model, just a controlled fixture for the fitter.
FockSweepLibrary toy_library(int n_sweep, int n_times) {
  FockSweepLibrary lib;
  lib.config = TrapConfig::single_ion(kOmega, kNu, kEta, n_sweep + 15);
  lib.times_us.resize(n_times);
  for (int j = 0; j < n_times; ++j) lib.times_us[j] = 2.0 * j;
  lib.p.assign(n_sweep + 1, Eigen::MatrixXd::Zero(1, n_times));
  for (int nn = 0; nn <= n_sweep; ++nn)
    for (int j = 0; j < n_times; ++j) {
      const double phase = 0.05 * (1.0 + 0.4 * nn) * j;
      lib.p[nn](0, j) = std::pow(std::sin(phase), 2);
    }
  return lib;
}

}  // namespace

TEST_CASE("fit_sideband: noiseless self-consistency and sigma homogeneity") {
  auto lib = toy_library(25, 40);
  FitConfig cfg;
  cfg.library = &lib;
  cfg.max_nbar = 20.0;

  EvolutionTrace trace;
  trace.times_us = lib.times_us;
  trace.pe = sweep_thermal_mixture(lib, 2.0);
  trace.sigma = Eigen::MatrixXd::Constant(1, 40, 0.02);

  auto est = fit_sideband(trace, cfg);
  CHECK(est.nbar_hat == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(est.method == EstimateMethod::sideband_fit);

  // argmin invariant under uniform sigma scaling; Eq.-(20)-style stddev is not
  EvolutionTrace scaled = trace;
  scaled.sigma *= 3.0;
  auto est2 = fit_sideband(scaled, cfg);
  CHECK(est2.nbar_hat == doctest::Approx(est.nbar_hat).epsilon(1e-9));

  EvolutionTrace noisy = trace;
  noisy.pe(0, 7) += 0.01;
  noisy.pe(0, 21) -= 0.013;
  auto e_noisy = fit_sideband(noisy, cfg);
  EvolutionTrace noisy_scaled = noisy;
  noisy_scaled.sigma *= 3.0;
  auto e_noisy_scaled = fit_sideband(noisy_scaled, cfg);
  CHECK(e_noisy_scaled.nbar_hat == doctest::Approx(e_noisy.nbar_hat).epsilon(1e-7));
  CHECK(e_noisy_scaled.stddev == doctest::Approx(3.0 * e_noisy.stddev).epsilon(1e-6));
}

TEST_CASE("fit_sideband guards: grid mismatch, flat loss, bad variances") {
  auto lib = toy_library(10, 12);
  FitConfig cfg;
  cfg.library = &lib;

  EvolutionTrace trace;
  trace.times_us = {0.0, 2.0, 5.0};  // 5 us is not on the library grid
  trace.pe = Eigen::MatrixXd::Zero(1, 3);
  trace.sigma = Eigen::MatrixXd::Constant(1, 3, 0.1);
  CHECK_THROWS_AS(fit_sideband(trace, cfg), std::invalid_argument);

  // all-zero library -> no sensitivity to nbar
  auto flat = lib;
  for (auto& pn : flat.p) pn.setZero();
  FitConfig cfg_flat;
  cfg_flat.library = &flat;
  EvolutionTrace tr2;
  tr2.times_us = flat.times_us;
  tr2.pe = Eigen::MatrixXd::Zero(1, 12);
  tr2.sigma = Eigen::MatrixXd::Constant(1, 12, 0.1);
  CHECK_THROWS_AS(fit_sideband(tr2, cfg_flat), degenerate_fit_error);

  EvolutionTrace tr3;
  tr3.times_us = lib.times_us;
  tr3.pe = Eigen::MatrixXd::Zero(1, 12);
  tr3.sigma = Eigen::MatrixXd::Zero(1, 12);
  CHECK_THROWS_AS(fit_sideband(tr3, cfg), std::invalid_argument);
}

TEST_CASE("fit loss curve is unimodal for well-posed synthetic data") {
  auto lib = toy_library(25, 40);
  FitConfig cfg;
  cfg.library = &lib;
  cfg.max_nbar = 12.0;
  EvolutionTrace trace;
  trace.times_us = lib.times_us;
  trace.pe = sweep_thermal_mixture(lib, 3.0);
  trace.sigma = Eigen::MatrixXd::Constant(1, 40, 0.02);
  auto curve = fit_loss_curve(trace, cfg, 200);
  int sign_changes = 0;
  for (std::size_t g = 2; g < curve.size(); ++g) {
    const bool inc_prev = curve[g - 1].second > curve[g - 2].second;
    const bool inc = curve[g].second > curve[g - 1].second;
    if (inc != inc_prev) ++sign_changes;
  }
  CHECK(sign_changes == 1);
}

TEST_CASE("heating_rate: exact line, homogeneity, input guards") {
  std::vector<HeatingPoint> pts{{0.0, 1.0, 0.05}, {10.0, 1.73, 0.05}, {20.0, 2.46, 0.05}};
  auto fit = heating_rate(pts);
  CHECK(fit.rate == doctest::Approx(0.073).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));

  // residuals are zero on an exact line
  for (const auto& p : pts)
    CHECK(fit.intercept + fit.rate * p.delay_us ==
          doctest::Approx(p.nbar_hat).epsilon(1e-12));

  // scaling all stds by c leaves the rate unchanged, scales its std by c
  auto scaled = pts;
  for (auto& p : scaled) p.stddev *= 4.0;
  auto fit2 = heating_rate(scaled);
  CHECK(fit2.rate == doctest::Approx(fit.rate).epsilon(1e-13));
  CHECK(fit2.rate_std == doctest::Approx(4.0 * fit.rate_std).epsilon(1e-12));

  CHECK_THROWS_AS(heating_rate({pts[0], pts[1]}), std::invalid_argument);
  auto dup = pts;
  dup[1].delay_us = 0.0;
  CHECK_THROWS_AS(heating_rate(dup), std::invalid_argument);
}
