#pragma once

// Levenberg-Marquardt fit of y = d + a·exp(−(x−b)²/(2c²)).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "homcam/error.hpp"

namespace homcam {

struct Gaussian1DFit {
  double a{0.0};  ///< amplitude, signed (negative for dips)
  double b{0.0};  ///< centre
  double c{0.0};  ///< width σ
  double d{0.0};  ///< offset
  double residual_sse{0.0};
  bool converged{false};
  int iterations{0};
  /// Parameter covariance in (a, b, c, d) order, s²(JᵀJ)⁻¹ with s² = SSE/(n−4).
  std::array<std::array<double, 4>, 4> covariance{};

  double operator()(double x) const noexcept {
    const double u = (x - b) / c;
    return d + a * std::exp(-0.5 * u * u);
  }
  double error(std::size_t i) const noexcept { return std::sqrt(std::max(0.0, covariance[i][i])); }
};

struct FitOptions {
  double relative_tolerance{1e-8};
  int max_iterations{200};
};

namespace detail {

inline double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

/// Moment-style starting point: d from the edge samples, b and a from the
/// sample furthest from d, c from the half-maximum crossing.
inline std::array<double, 4> initial_guess(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t edge = std::max<std::size_t>(2, n / 5);
  std::vector<double> edges;
  for (std::size_t i = 0; i < edge; ++i) {
    edges.push_back(y[i]);
    edges.push_back(y[n - 1 - i]);
  }
  const double d = median(edges);
  std::size_t ext = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(y[i] - d) > std::abs(y[ext] - d)) ext = i;
  const double a = y[ext] - d;
  const double half = 0.5 * std::abs(a);
  std::size_t lo = ext;
  while (lo > 0 && std::abs(y[lo - 1] - d) > half) --lo;
  std::size_t hi = ext;
  while (hi + 1 < n && std::abs(y[hi + 1] - d) > half) ++hi;
  const double left = lo > 0 ? 0.5 * (x[lo] + x[lo - 1]) : x[lo];
  const double right = hi + 1 < n ? 0.5 * (x[hi] + x[hi + 1]) : x[hi];
  double c = (right - left) / 2.354820045;
  const double span = x[n - 1] - x[0];
  if (!(c > 0.0)) c = span / (2.0 * static_cast<double>(n));
  return {a, x[ext], c, d};
}

} // namespace detail

/// Least-squares Gaussian fit. Degenerate input (constant ys, singular
/// Jacobian, non-finite values) yields converged = false rather than throwing.
inline Gaussian1DFit fit_gaussian_1d(std::span<const double> xs_in, std::span<const double> ys_in,
                                     const FitOptions& opt = {}) {
  if (xs_in.size() != ys_in.size()) throw DomainError("fit_gaussian_1d: xs and ys differ in length");
  if (xs_in.size() < 5) throw DomainError("fit_gaussian_1d: at least 5 points required");
  const std::size_t n = xs_in.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return xs_in[i] < xs_in[j]; });
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = xs_in[order[i]];
    y[i] = ys_in[order[i]];
  }

  Gaussian1DFit fit;
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); }) || *ymax == *ymin ||
      x.front() == x.back()) {
    fit.d = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    fit.residual_sse = 0.0;
    for (double v : y) fit.residual_sse += (v - fit.d) * (v - fit.d);
    return fit;
  }

  using Vec4 = Eigen::Vector4d;
  using Mat4 = Eigen::Matrix4d;
  const auto g0 = detail::initial_guess(x, y);
  Vec4 p(g0[0], g0[1], g0[2], g0[3]);

  const auto sse_of = [&](const Vec4& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (x[i] - q[1]) / q[2];
      const double r = y[i] - (q[3] + q[0] * std::exp(-0.5 * u * u));
      s += r * r;
    }
    return s;
  };
  const auto normal_equations = [&](const Vec4& q, Mat4& jtj, Vec4& jtr) {
    jtj.setZero();
    jtr.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = x[i] - q[1];
      const double c2 = q[2] * q[2];
      const double g = std::exp(-0.5 * dx * dx / c2);
      const Vec4 j(g, q[0] * g * dx / c2, q[0] * g * dx * dx / (c2 * q[2]), 1.0);
      const double r = y[i] - (q[3] + q[0] * g);
      jtj.noalias() += j * j.transpose();
      jtr.noalias() += j * r;
    }
  };

  double y_scale = 0.0;
  for (double v : y) y_scale += v * v;
  const double sse_floor = 1e-26 * std::max(y_scale, 1e-300);

  double sse = sse_of(p);
  double lambda = 1e-3;
  Mat4 jtj;
  Vec4 jtr;
  normal_equations(p, jtj, jtr);
  bool done = sse <= sse_floor;
  int it = 0;
  while (!done && it < opt.max_iterations) {
    ++it;
    Mat4 damped = jtj;
    for (int k = 0; k < 4; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-300);
    const Vec4 step = damped.ldlt().solve(jtr);
    const Vec4 trial = p + step;
    const double trial_sse = step.allFinite() && trial[2] != 0.0 ? sse_of(trial) : INFINITY;
    if (std::isfinite(trial_sse) && trial_sse <= sse) {
      const double rel = (sse - trial_sse) / std::max(sse, 1e-300);
      p = trial;
      sse = trial_sse;
      lambda = std::max(lambda / 10.0, 1e-12);
      normal_equations(p, jtj, jtr);
      if (rel < opt.relative_tolerance || sse <= sse_floor) done = true;
    } else {
      lambda *= 10.0;
      // No descent direction left at any damping: already at the minimum.
      if (lambda > 1e16) done = true;
    }
  }

  fit.a = p[0];
  fit.b = p[1];
  fit.c = std::abs(p[2]);
  fit.d = p[3];
  fit.residual_sse = sse;
  fit.iterations = it;

  const bool finite = p.allFinite() && std::isfinite(sse);
  Eigen::FullPivLU<Mat4> lu(jtj);
  const bool identifiable = finite && lu.rank() == 4 && fit.c > 0.0;
  fit.converged = done && identifiable;
  if (identifiable) {
    const double s2 = n > 4 ? sse / static_cast<double>(n - 4) : 0.0;
    const Mat4 cov = s2 * lu.inverse();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) fit.covariance[i][j] = 0.5 * (cov(i, j) + cov(j, i));
  }
  return fit;
}

} // namespace homcam
