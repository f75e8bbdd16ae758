#include "score_kernel.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#include <immintrin.h>
#define RASGG_HAVE_AVX2_KERNEL 1
#endif

namespace rasgg::detail {

namespace {

void scores_portable(const float* keys, std::size_t m, std::size_t d, const float* queries,
                     std::size_t b, float* out, std::size_t ld) {
  for (std::size_t c = 0; c < b; ++c) {
    const float* q = queries + c * d;
    for (std::size_t i = 0; i < m; ++i) {
      const float* k = keys + i * d;
      float s = 0.0f;
      for (std::size_t j = 0; j < d; ++j) s += k[j] * q[j];
      out[c * ld + i] = s;
    }
  }
}

#ifdef RASGG_HAVE_AVX2_KERNEL

__attribute__((target("avx2,fma"))) float hsum(__m256 v) {
  const __m128 lo = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  const __m128 sh = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  return _mm_cvtss_f32(_mm_add_ss(sh, _mm_shuffle_ps(sh, sh, 1)));
}

// Two keys against four queries per step: each loaded key chunk is reused
// four times and each query chunk twice.
__attribute__((target("avx2,fma"))) void scores_avx2(const float* keys, std::size_t m,
                                                     std::size_t d, const float* queries,
                                                     std::size_t b, float* out, std::size_t ld) {
  const std::size_t dv = d / 8 * 8;
  auto tail = [&](const float* k, const float* q) {
    float s = 0.0f;
    for (std::size_t j = dv; j < d; ++j) s += k[j] * q[j];
    return s;
  };
  std::size_t c = 0;
  for (; c + 4 <= b; c += 4) {
    const float* q0 = queries + c * d;
    const float* q1 = q0 + d;
    const float* q2 = q1 + d;
    const float* q3 = q2 + d;
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
      const float* k0 = keys + i * d;
      const float* k1 = k0 + d;
      __m256 a00 = _mm256_setzero_ps(), a01 = _mm256_setzero_ps(), a02 = _mm256_setzero_ps(),
             a03 = _mm256_setzero_ps(), a10 = _mm256_setzero_ps(), a11 = _mm256_setzero_ps(),
             a12 = _mm256_setzero_ps(), a13 = _mm256_setzero_ps();
      for (std::size_t j = 0; j < dv; j += 8) {
        const __m256 x0 = _mm256_loadu_ps(k0 + j);
        const __m256 x1 = _mm256_loadu_ps(k1 + j);
        __m256 y = _mm256_loadu_ps(q0 + j);
        a00 = _mm256_fmadd_ps(x0, y, a00);
        a10 = _mm256_fmadd_ps(x1, y, a10);
        y = _mm256_loadu_ps(q1 + j);
        a01 = _mm256_fmadd_ps(x0, y, a01);
        a11 = _mm256_fmadd_ps(x1, y, a11);
        y = _mm256_loadu_ps(q2 + j);
        a02 = _mm256_fmadd_ps(x0, y, a02);
        a12 = _mm256_fmadd_ps(x1, y, a12);
        y = _mm256_loadu_ps(q3 + j);
        a03 = _mm256_fmadd_ps(x0, y, a03);
        a13 = _mm256_fmadd_ps(x1, y, a13);
      }
      out[c * ld + i] = hsum(a00) + tail(k0, q0);
      out[(c + 1) * ld + i] = hsum(a01) + tail(k0, q1);
      out[(c + 2) * ld + i] = hsum(a02) + tail(k0, q2);
      out[(c + 3) * ld + i] = hsum(a03) + tail(k0, q3);
      out[c * ld + i + 1] = hsum(a10) + tail(k1, q0);
      out[(c + 1) * ld + i + 1] = hsum(a11) + tail(k1, q1);
      out[(c + 2) * ld + i + 1] = hsum(a12) + tail(k1, q2);
      out[(c + 3) * ld + i + 1] = hsum(a13) + tail(k1, q3);
    }
    if (i < m) scores_portable(keys + i * d, m - i, d, q0, 4, out + c * ld + i, ld);
  }
  if (c < b) scores_portable(keys, m, d, queries + c * d, b - c, out + c * ld, ld);
}

bool avx2_available() {
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
}

#endif

}  // namespace

void coarse_scores(const float* keys, std::size_t m, std::size_t d, const float* queries,
                   std::size_t b, float* out, std::size_t ld) {
#ifdef RASGG_HAVE_AVX2_KERNEL
  if (avx2_available()) {
    scores_avx2(keys, m, d, queries, b, out, ld);
    return;
  }
#endif
  scores_portable(keys, m, d, queries, b, out, ld);
}

}  // namespace rasgg::detail
