// AVX2 variants of the hot kernels. Vector exp/log are Cephes-style rational
// approximations (~1-2 ulp); log1p goes through log(w) plus the first-order
// rounding correction (u - (w-1))/w. Compiled with -mavx2 -mfma; only invoked
// after a CPUID check in the dispatch layer.

#include "casimir/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <immintrin.h>

namespace casimir::kernels {
namespace {

inline __m256d mm_set1(double v) { return _mm256_set1_pd(v); }

// e^x for x in roughly [-709, 709]; callers here stay within [-80, 0].
inline __m256d vexp(__m256d x) {
  const __m256d log2e = mm_set1(1.4426950408889634073599);
  const __m256d c1 = mm_set1(6.93145751953125e-1);
  const __m256d c2 = mm_set1(1.42860682030941723212e-6);

  x = _mm256_max_pd(x, mm_set1(-708.0));
  x = _mm256_min_pd(x, mm_set1(708.0));

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, x);
  r = _mm256_fnmadd_pd(n, c2, r);

  const __m256d r2 = _mm256_mul_pd(r, r);
  __m256d p = mm_set1(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, r2, mm_set1(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, r2, mm_set1(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = mm_set1(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, r2, mm_set1(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, r2, mm_set1(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, r2, mm_set1(2.00000000000000000005e0));

  const __m256d frac = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  __m256d res = _mm256_fmadd_pd(mm_set1(2.0), frac, mm_set1(1.0));

  // scale by 2^n through the exponent bits
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i biased = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  const __m256d pow2 = _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
  return _mm256_mul_pd(res, pow2);
}

// ln(x) for normal positive x.
inline __m256d vlog(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);

  // exponent as double via the 2^52 magic-number trick
  __m256i e_bits = _mm256_srli_epi64(bits, 52);
  e_bits = _mm256_and_si256(e_bits, _mm256_set1_epi64x(0x7FF));
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(e_bits, magic)),
                            mm_set1(4503599627370496.0 + 1023.0));

  // mantissa in [1, 2)
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  // renormalize to [sqrt(1/2), sqrt(2))
  const __m256d gt = _mm256_cmp_pd(m, mm_set1(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, mm_set1(0.5)), gt);
  e = _mm256_add_pd(e, _mm256_and_pd(gt, mm_set1(1.0)));

  const __m256d z = _mm256_sub_pd(m, mm_set1(1.0));
  const __m256d z2 = _mm256_mul_pd(z, z);

  __m256d p = mm_set1(1.01875663804580931796e-4);
  p = _mm256_fmadd_pd(p, z, mm_set1(4.97494994976747001425e-1));
  p = _mm256_fmadd_pd(p, z, mm_set1(4.70579119878881725854e0));
  p = _mm256_fmadd_pd(p, z, mm_set1(1.44989225341610930846e1));
  p = _mm256_fmadd_pd(p, z, mm_set1(1.79368678507819816313e1));
  p = _mm256_fmadd_pd(p, z, mm_set1(7.70838733755885391666e0));

  __m256d q = _mm256_add_pd(z, mm_set1(1.12873587189167450590e1));
  q = _mm256_fmadd_pd(q, z, mm_set1(4.52279145837532221105e1));
  q = _mm256_fmadd_pd(q, z, mm_set1(8.29875266912776603211e1));
  q = _mm256_fmadd_pd(q, z, mm_set1(7.11544750618563894466e1));
  q = _mm256_fmadd_pd(q, z, mm_set1(2.31251620126765340583e1));

  __m256d y = _mm256_mul_pd(_mm256_mul_pd(z, z2), _mm256_div_pd(p, q));
  y = _mm256_fmadd_pd(e, mm_set1(-2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(mm_set1(0.5), z2, y);
  __m256d res = _mm256_add_pd(z, y);
  return _mm256_fmadd_pd(e, mm_set1(0.693359375), res);
}

// ln(1+u) for u in (-1, 0]; w = 1+u plus a first-order rounding correction.
inline __m256d vlog1p(__m256d u) {
  const __m256d one = mm_set1(1.0);
  const __m256d w = _mm256_add_pd(one, u);
  const __m256d corr =
      _mm256_div_pd(_mm256_sub_pd(u, _mm256_sub_pd(w, one)), w);
  return _mm256_add_pd(vlog(w), corr);
}

void lifshitz_inner_avx2(double eps, double inv_t, const double* y, double* out,
                         std::size_t n) {
  const __m256d veps = mm_set1(eps);
  const __m256d vem1 = mm_set1(eps - 1.0);
  const __m256d vinv_t = mm_set1(inv_t);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yi = _mm256_loadu_pd(y + i);
    const __m256d p = _mm256_mul_pd(yi, vinv_t);
    const __m256d K = _mm256_sqrt_pd(_mm256_fmadd_pd(p, p, vem1));
    const __m256d rte =
        _mm256_div_pd(_mm256_sub_pd(K, p), _mm256_add_pd(K, p));
    const __m256d ep = _mm256_mul_pd(veps, p);
    const __m256d rtm =
        _mm256_div_pd(_mm256_sub_pd(K, ep), _mm256_add_pd(K, ep));
    const __m256d e = vexp(_mm256_sub_pd(_mm256_setzero_pd(), yi));
    const __m256d u1 =
        _mm256_sub_pd(_mm256_setzero_pd(),
                      _mm256_mul_pd(_mm256_mul_pd(rte, rte), e));
    const __m256d u2 =
        _mm256_sub_pd(_mm256_setzero_pd(),
                      _mm256_mul_pd(_mm256_mul_pd(rtm, rtm), e));
    const __m256d val =
        _mm256_mul_pd(yi, _mm256_add_pd(vlog1p(u1), vlog1p(u2)));
    _mm256_storeu_pd(out + i, val);
  }
  if (i < n)
    scalar_backend().lifshitz_inner(eps, inv_t, y + i, out + i, n - i);
}

double es_series_block_avx2(double alpha, double coth_alpha, double n0,
                            std::size_t count, double* last_abs) {
  const __m256d vca = mm_set1(coth_alpha);
  const __m256d valpha = mm_set1(alpha);
  const __m256d one = mm_set1(1.0);
  __m256d nv = _mm256_add_pd(mm_set1(n0), _mm256_set_pd(3.0, 2.0, 1.0, 0.0));
  const __m256d four = mm_set1(4.0);

  __m256d acc = _mm256_setzero_pd();
  __m256d term = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d q = vexp(_mm256_sub_pd(_mm256_setzero_pd(),
                                         _mm256_mul_pd(nv, valpha)));
    const __m256d q2 = _mm256_mul_pd(q, q);
    const __m256d inv_den = _mm256_div_pd(one, _mm256_sub_pd(one, q2));
    const __m256d csch = _mm256_mul_pd(_mm256_add_pd(q, q), inv_den);
    const __m256d coth_n = _mm256_mul_pd(_mm256_add_pd(one, q2), inv_den);
    term = _mm256_mul_pd(csch, _mm256_fnmadd_pd(nv, coth_n, vca));
    acc = _mm256_add_pd(acc, term);
    nv = _mm256_add_pd(nv, four);
  }

  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);

  double tail_abs = 0.0;
  if (i > 0) {
    _mm256_store_pd(lanes, term);
    tail_abs = std::abs(lanes[3]);
  }
  if (i < count) {
    sum += scalar_backend().es_series_block(alpha, coth_alpha,
                                            n0 + static_cast<double>(i),
                                            count - i, &tail_abs);
  }
  if (last_abs) *last_abs = tail_abs;
  return sum;
}

}  // namespace

const Backend* avx2_backend() {
  static const Backend backend{"avx2", &lifshitz_inner_avx2, &es_series_block_avx2};
  return &backend;
}

}  // namespace casimir::kernels
