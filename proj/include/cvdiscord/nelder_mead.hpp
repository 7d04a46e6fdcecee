#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace cvdiscord {

struct SimplexOptions {
  int max_iterations = 400;
  double f_tolerance = 1e-12;
  double x_tolerance = 1e-8;
};

template <std::size_t N>
struct SimplexResult {
  std::array<double, N> x{};
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  // Objective spread over the final simplex.
  double spread = 0.0;
  bool converged = false;
};

// Deterministic Nelder-Mead minimizer. Vertices are ordered with a stable sort so
// equal objective values keep their insertion order.
template <std::size_t N, class F>
SimplexResult<N> nelder_mead(F &&f, const std::array<double, N> &start, const std::array<double, N> &step,
                             const SimplexOptions &options = {}) {
  using Point = std::array<double, N>;
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  std::array<Point, N + 1> pts;
  std::array<double, N + 1> vals;
  SimplexResult<N> result;
  auto eval = [&](const Point &p) {
    ++result.evaluations;
    return static_cast<double>(f(p));
  };

  pts[0] = start;
  for (std::size_t i = 0; i < N; ++i) {
    pts[i + 1] = start;
    pts[i + 1][i] += step[i];
  }
  for (std::size_t i = 0; i <= N; ++i) vals[i] = eval(pts[i]);

  std::array<std::size_t, N + 1> order;
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    auto p2 = pts;
    auto v2 = vals;
    for (std::size_t i = 0; i <= N; ++i) {
      pts[i] = p2[order[i]];
      vals[i] = v2[order[i]];
    }
  };
  auto simplex_size = [&] {
    double size = 0.0;
    for (std::size_t i = 1; i <= N; ++i)
      for (std::size_t k = 0; k < N; ++k) size = std::max(size, std::abs(pts[i][k] - pts[0][k]));
    return size;
  };
  auto along = [](const Point &c, const Point &w, double t) {
    Point p;
    for (std::size_t k = 0; k < N; ++k) p[k] = c[k] + t * (w[k] - c[k]);
    return p;
  };

  sort_simplex();
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (vals[N] - vals[0] <= options.f_tolerance && simplex_size() <= options.x_tolerance) break;

    Point centroid{};
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < N; ++k) centroid[k] += pts[i][k] / N;

    const Point xr = along(centroid, pts[N], -kReflect);
    const double fr = eval(xr);
    if (fr < vals[0]) {
      const Point xe = along(centroid, pts[N], -kExpand);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[N] = xe;
        vals[N] = fe;
      } else {
        pts[N] = xr;
        vals[N] = fr;
      }
    } else if (fr < vals[N - 1]) {
      pts[N] = xr;
      vals[N] = fr;
    } else {
      const bool outside = fr < vals[N];
      const Point xc = outside ? along(centroid, pts[N], -kContract) : along(centroid, pts[N], kContract);
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[N])) {
        pts[N] = xc;
        vals[N] = fc;
      } else {
        for (std::size_t i = 1; i <= N; ++i) {
          pts[i] = along(pts[0], pts[i], kShrink);
          vals[i] = eval(pts[i]);
        }
      }
    }
    sort_simplex();
  }

  result.x = pts[0];
  result.value = vals[0];
  result.iterations = it;
  result.spread = vals[N] - vals[0];
  result.converged = result.spread <= options.f_tolerance && simplex_size() <= options.x_tolerance;
  return result;
}

}  // namespace cvdiscord
