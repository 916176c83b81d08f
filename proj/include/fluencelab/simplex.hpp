#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace fluencelab {

template <std::size_t N>
struct SimplexResult {
  std::array<double, N> x{};
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double rel_tol = 1e-6;    // relative spread of objective values over the simplex
  double x_tol = 1e-12;     // simplex diameter
  int max_iterations = 500;
};

/// Nelder-Mead minimization inside a box. Trial points are projected onto
/// [lo, hi] before evaluation.
template <std::size_t N, class F>
SimplexResult<N> nelder_mead(F&& f, std::array<double, N> start, std::array<double, N> step, std::array<double, N> lo,
                             std::array<double, N> hi, const SimplexOptions& opt = {}) {
  using Point = std::array<double, N>;
  auto project = [&](Point p) {
    for (std::size_t d = 0; d < N; ++d) p[d] = std::clamp(p[d], lo[d], hi[d]);
    return p;
  };

  std::array<Point, N + 1> pts;
  std::array<double, N + 1> vals;
  pts[0] = project(start);
  for (std::size_t d = 0; d < N; ++d) {
    Point p = pts[0];
    p[d] += step[d];
    if (p[d] > hi[d]) p[d] = pts[0][d] - step[d];
    pts[d + 1] = project(p);
  }
  for (std::size_t i = 0; i <= N; ++i) vals[i] = f(pts[i]);

  SimplexResult<N> res;
  std::array<std::size_t, N + 1> order;
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[N - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
      for (std::size_t d = 0; d < N; ++d) diameter = std::max(diameter, std::abs(pts[i][d] - pts[best][d]));
    }
    const double spread = vals[worst] - vals[best];
    if (spread <= opt.rel_tol * std::abs(vals[best]) || diameter <= opt.x_tol) {
      res.converged = true;
      break;
    }

    Point centroid{};
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < N; ++d) centroid[d] += pts[i][d] / static_cast<double>(N);
    }
    auto along = [&](double t) {
      Point p;
      for (std::size_t d = 0; d < N; ++d) p[d] = centroid[d] + t * (pts[worst][d] - centroid[d]);
      return project(p);
    };

    const Point reflected = along(-1.0);
    const double f_reflected = f(reflected);
    if (f_reflected < vals[best]) {
      const Point expanded = along(-2.0);
      const double f_expanded = f(expanded);
      if (f_expanded < f_reflected) {
        pts[worst] = expanded;
        vals[worst] = f_expanded;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < vals[worst];
    const Point contracted = along(outside ? -0.5 : 0.5);
    const double f_contracted = f(contracted);
    if (f_contracted < (outside ? f_reflected : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < N; ++d) pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
      vals[i] = f(pts[i]);
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

/// Reruns the simplex from its own result until a restart no longer improves
/// the objective by more than the relative tolerance. A simplex that has
/// collapsed inside a long narrow valley otherwise reports convergence early.
template <std::size_t N, class F>
SimplexResult<N> restarted_nelder_mead(F&& f, std::array<double, N> start, std::array<double, N> step,
                                       std::array<double, N> lo, std::array<double, N> hi,
                                       const SimplexOptions& opt = {}, int restarts = 4) {
  auto best = nelder_mead<N>(f, start, step, lo, hi, opt);
  for (int r = 0; r < restarts; ++r) {
    auto next = nelder_mead<N>(f, best.x, step, lo, hi, opt);
    next.iterations += best.iterations;
    const bool improved = next.value < best.value - opt.rel_tol * std::abs(best.value);
    if (next.value < best.value) best = next;
    if (!improved) break;
  }
  return best;
}

}  // namespace fluencelab
