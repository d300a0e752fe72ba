#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace iontherm {

// Golden-section minimization on [a, b]. Ties break toward smaller x so
// repeated runs are deterministic. tol is on the bracket width.
template <typename F>
double golden_section_min(F&& f, double a, double b, double tol = 1e-8) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

template <typename F>
double golden_section_max(F&& f, double a, double b, double tol = 1e-8) {
  return golden_section_min([&](double x) { return -f(x); }, a, b, tol);
}

// Bisection root finding; requires a sign change on [a, b].
template <typename F>
double bisect_root(F&& f, double a, double b, int iters = 200) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw std::invalid_argument("bisect_root: no sign change on bracket");
  for (int i = 0; i < iters; ++i) {
    double m = 0.5 * (a + b);
    double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Index-parallel loop. Each index writes only its own outputs, so results
// are identical for any worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                         unsigned n_threads = 0) {
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  if (n_threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n));
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (unsigned w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += n_threads) body(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace iontherm
