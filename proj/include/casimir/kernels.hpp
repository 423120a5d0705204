#ifndef CASIMIR_KERNELS_HPP
#define CASIMIR_KERNELS_HPP

#include <cstddef>
#include <string_view>

namespace casimir::kernels {

// Hot inner loops, provided as a scalar reference implementation plus an AVX2
// variant selected at runtime. Both implement exactly the same math; the
// equivalence tests in tests/test_kernels.cpp pin them against each other.
struct Backend {
  const char* name;

  // Lifshitz inner integrand at fixed imaginary frequency (fixed eps, t):
  //   p_i   = y_i * inv_t
  //   K_i   = sqrt(eps - 1 + p_i^2)
  //   rTE_i = (K_i - p_i) / (K_i + p_i)
  //   rTM_i = (K_i - eps p_i) / (K_i + eps p_i)
  //   out_i = y_i * [ log1p(-rTE_i^2 e^{-y_i}) + log1p(-rTM_i^2 e^{-y_i}) ]
  // Requires eps >= 1, inv_t > 0, y_i > 0.
  void (*lifshitz_inner)(double eps, double inv_t, const double* y, double* out,
                         std::size_t n);

  // Electrostatic image-charge series block: sum over k in [0, count) of
  //   term(n) = csch(n alpha) * (coth(alpha) - n coth(n alpha)),  n = n0 + k,
  // evaluated through q = e^{-n alpha}:
  //   csch(n alpha) = 2q/(1-q^2),  coth(n alpha) = (1+q^2)/(1-q^2).
  // Intended for the tail region n0*alpha >= ~0.5 where 1-q^2 is
  // well-conditioned; the series driver keeps the small-n head on a scalar
  // expm1 path. Returns the block sum; *last_abs gets |term(n0+count-1)|.
  double (*es_series_block)(double alpha, double coth_alpha, double n0,
                            std::size_t count, double* last_abs);
};

const Backend& scalar_backend();

#if defined(__x86_64__) || defined(_M_X64)
// Null when the binary was built without AVX2 support.
const Backend* avx2_backend();
#endif

// Runtime-selected backend: AVX2 when compiled in and the CPU supports it,
// otherwise the scalar reference. set_backend("scalar"|"avx2"|"auto") forces
// the choice (returns false if unavailable); intended for tests and the CLI's
// --kernel flag, not for concurrent use.
const Backend& active_backend();
bool set_backend(std::string_view name);

}  // namespace casimir::kernels

#endif
