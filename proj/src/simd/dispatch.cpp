#include <cmath>
#include <cstdlib>
#include <string_view>

#include "kgfuzz/simd/similarity.hpp"

namespace kgfuzz::simd {

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
      return neon_kernels() != nullptr;
  }
  return false;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

namespace {

const Kernels* kernels_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return &scalar_kernels();
    case Isa::Avx2: return avx2_kernels();
    case Isa::Neon: return neon_kernels();
  }
  return nullptr;
}

const Kernels& choose() noexcept {
  if (const char* forced = std::getenv("KGFUZZ_SIMD")) {
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (isa_name(isa) == forced && cpu_supports(isa)) return *kernels_for(isa);
    }
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (cpu_supports(isa)) return *kernels_for(isa);
  }
  return scalar_kernels();
}

}  // namespace

const Kernels& active_kernels() noexcept {
  static const Kernels& k = choose();
  return k;
}

double cosine(std::span<const float> a, std::span<const float> b, const Kernels& k) noexcept {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  const double na = k.squared_norm(a.data(), n);
  const double nb = k.squared_norm(b.data(), n);
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return k.dot(a.data(), b.data(), n) / std::sqrt(na * nb);
}

void cosine_scan(std::span<const float> query, std::span<const float> rows, std::size_t dim,
                 std::span<double> out, const Kernels& k) noexcept {
  if (dim == 0 || query.size() < dim) return;
  const std::size_t count = rows.size() / dim;
  const double nq = k.squared_norm(query.data(), dim);
  for (std::size_t r = 0; r < count && r < out.size(); ++r) {
    const float* row = rows.data() + r * dim;
    const double nr = k.squared_norm(row, dim);
    out[r] = (nq <= 0.0 || nr <= 0.0) ? 0.0 : k.dot(query.data(), row, dim) / std::sqrt(nq * nr);
  }
}

}  // namespace kgfuzz::simd
