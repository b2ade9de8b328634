#include "kgfuzz/simd/similarity.hpp"

namespace kgfuzz::simd {
namespace {

double dot_scalar(const float* a, const float* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double squared_norm_scalar(const float* a, std::size_t n) noexcept { return dot_scalar(a, a, n); }

constexpr Kernels kScalar{Isa::Scalar, &dot_scalar, &squared_norm_scalar};

}  // namespace

const Kernels& scalar_kernels() noexcept { return kScalar; }

}  // namespace kgfuzz::simd
