#ifndef CASIMIR_QUADRATURE_HPP
#define CASIMIR_QUADRATURE_HPP

#include "casimir/errors.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <string>
#include <vector>

namespace casimir::quad {

// 7-point Gauss / 15-point Kronrod pair (QUADPACK dqk15 constants).
// Nodes are given for the positive half of [-1, 1]; index 7 is the origin.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.9914553711208126392068547, 0.9491079123427585245261897,
    0.8648644233597690727897128, 0.7415311855993944398638648,
    0.5860872354676911302941448, 0.4058451513773971669066064,
    0.2077849550078984676006894, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.0229353220105292249637320, 0.0630920926299785532907007,
    0.1047900103222501838398763, 0.1406532597155259187451896,
    0.1690047266392679028265834, 0.1903505780647854099132564,
    0.2044329400752988924141620, 0.2094821410847278280129992};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.1294849661688696932706114, 0.2797053914892766679014678,
    0.3818300505051189449503698, 0.4179591836734693877551020};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;   // estimated
  int panels = 0;
};

struct Options {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  int max_panels = 4000;
};

namespace detail {

// One GK15 panel. F evaluates a batch: f(const double* x, double* y, size_t n).
template <class F>
void panel(F&& f, double a, double b, double& value, double& error) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  std::array<double, 15> xs;
  std::array<double, 15> ys;
  for (int i = 0; i < 7; ++i) {
    xs[2 * i] = mid - half * kKronrodNodes[i];
    xs[2 * i + 1] = mid + half * kKronrodNodes[i];
  }
  xs[14] = mid;
  f(xs.data(), ys.data(), xs.size());

  double kron = kKronrodWeights[7] * ys[14];
  double gauss = kGaussWeights[3] * ys[14];
  for (int i = 0; i < 7; ++i) {
    const double pair = ys[2 * i] + ys[2 * i + 1];
    kron += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  value = kron * half;
  error = std::abs((kron - gauss) * half);
  if (!std::isfinite(value))
    throw NumericError("quadrature: integrand produced a non-finite value", value, error);
}

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of a batch integrand over [a, b].
// Throws NumericError (carrying the best estimate and achieved tolerance) if
// the panel budget runs out before the tolerance is met.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  Result res;
  if (a == b) return res;

  std::priority_queue<detail::Segment> heap;
  double value, error;
  detail::panel(f, a, b, value, error);
  heap.push({a, b, value, error});
  double total = value;
  double total_err = error;
  res.panels = 1;

  const auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };

  while (total_err > tolerance()) {
    if (res.panels >= opt.max_panels) {
      const double achieved = std::abs(total) > 0 ? total_err / std::abs(total) : total_err;
      throw NumericError("quadrature: panel budget exhausted (achieved relative tolerance " +
                             std::to_string(achieved) + ")",
                         total, achieved);
    }
    detail::Segment worst = heap.top();
    heap.pop();
    total -= worst.value;
    total_err -= worst.error;

    const double mid = 0.5 * (worst.a + worst.b);
    double v1, e1, v2, e2;
    detail::panel(f, worst.a, mid, v1, e1);
    detail::panel(f, mid, worst.b, v2, e2);
    heap.push({worst.a, mid, v1, e1});
    heap.push({mid, worst.b, v2, e2});
    total += v1 + v2;
    total_err += e1 + e2;
    ++res.panels;
  }

  res.value = total;
  res.abs_error = total_err;
  return res;
}

// Convenience wrapper for scalar integrands f(double) -> double.
template <class F>
Result integrate_scalar(F&& f, double a, double b, const Options& opt = {}) {
  auto batch = [&f](const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
  };
  return integrate(batch, a, b, opt);
}

}  // namespace casimir::quad

#endif
