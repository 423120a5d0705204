#include "casimir/kernels.hpp"

#include <cmath>

namespace casimir::kernels {
namespace {

void lifshitz_inner_scalar(double eps, double inv_t, const double* y, double* out,
                           std::size_t n) {
  const double em1 = eps - 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double yi = y[i];
    const double p = yi * inv_t;
    const double K = std::sqrt(em1 + p * p);
    const double rte = (K - p) / (K + p);
    const double rtm = (K - eps * p) / (K + eps * p);
    const double e = std::exp(-yi);
    out[i] = yi * (std::log1p(-rte * rte * e) + std::log1p(-rtm * rtm * e));
  }
}

double es_series_block_scalar(double alpha, double coth_alpha, double n0,
                              std::size_t count, double* last_abs) {
  double sum = 0.0;
  double term = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double n = n0 + static_cast<double>(k);
    const double q = std::exp(-n * alpha);
    const double q2 = q * q;
    const double inv_den = 1.0 / (1.0 - q2);
    const double csch = 2.0 * q * inv_den;
    const double coth_n = (1.0 + q2) * inv_den;
    term = csch * (coth_alpha - n * coth_n);
    sum += term;
  }
  if (last_abs) *last_abs = std::abs(term);
  return sum;
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend{"scalar", &lifshitz_inner_scalar, &es_series_block_scalar};
  return backend;
}

}  // namespace casimir::kernels
