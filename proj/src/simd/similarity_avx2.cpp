#include "kgfuzz/simd/similarity.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace kgfuzz::simd {
namespace {

__attribute__((target("avx2,fma"))) inline double hsum(__m256d v) noexcept {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

// 8 floats per step, widened to two 4-lane double accumulators.
__attribute__((target("avx2,fma"))) double dot_avx2(const float* a, const float* b, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                           _mm256_cvtps_pd(_mm256_castps256_ps128(vb)), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                           _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

__attribute__((target("avx2,fma"))) double squared_norm_avx2(const float* a, std::size_t n) noexcept {
  return dot_avx2(a, a, n);
}

constexpr Kernels kAvx2{Isa::Avx2, &dot_avx2, &squared_norm_avx2};

}  // namespace

const Kernels* avx2_kernels() noexcept { return &kAvx2; }

}  // namespace kgfuzz::simd

#else

namespace kgfuzz::simd {
const Kernels* avx2_kernels() noexcept { return nullptr; }
}  // namespace kgfuzz::simd

#endif
