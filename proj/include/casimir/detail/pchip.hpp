#ifndef CASIMIR_DETAIL_PCHIP_HPP
#define CASIMIR_DETAIL_PCHIP_HPP

#include "casimir/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace casimir::detail {

// Fritsch-Carlson monotone cubic interpolant (PCHIP). Shape-preserving: never
// overshoots the data, so monotone samples stay monotone between nodes.
class Pchip {
 public:
  Pchip() = default;

  Pchip(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw ValidationError("pchip: need at least two nodes and matching arrays");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw ValidationError("pchip: abscissae must be strictly increasing");

    d_.resize(n);
    std::vector<double> h(n - 1), s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      s[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = s[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (s[i - 1] * s[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
      }
    }
    d_[0] = edge(h[0], h[1], s[0], s[1]);
    d_[n - 1] = edge(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
  }

  double operator()(double xq) const {
    const std::size_t i = segment(xq);
    const double h = x_[i + 1] - x_[i];
    const double t = (xq - x_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
  }

  double x_front() const { return x_.front(); }
  double x_back() const { return x_.back(); }

 private:
  static double edge(double h0, double h1, double s0, double s1) {
    // three-point one-sided slope, clamped for shape preservation
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0.0)
      d = 0.0;
    else if (s0 * s1 < 0.0 && std::abs(d) > 3.0 * std::abs(s0))
      d = 3.0 * s0;
    return d;
  }

  std::size_t segment(double xq) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it));
    if (i == 0) return 0;
    if (i >= x_.size()) return x_.size() - 2;
    return i - 1;
  }

  std::vector<double> x_, y_, d_;
};

}  // namespace casimir::detail

#endif
