#pragma once

// Dense-vector similarity kernels. The scalar variant is the reference; vectorized
// variants must agree with it to within accumulated rounding (all variants accumulate
// in double precision). The active variant is picked once per process from CPU
// features; KGFUZZ_SIMD=scalar|avx2|neon forces a choice when supported.

#include <cstddef>
#include <span>
#include <string_view>

namespace kgfuzz::simd {

enum class Isa { Scalar, Avx2, Neon };

struct Kernels {
  Isa isa;
  double (*dot)(const float* a, const float* b, std::size_t n) noexcept;
  double (*squared_norm)(const float* a, std::size_t n) noexcept;
};

const Kernels& scalar_kernels() noexcept;
const Kernels* avx2_kernels() noexcept;  // nullptr when not built for x86-64
const Kernels* neon_kernels() noexcept;  // nullptr when not built for aarch64

bool cpu_supports(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

const Kernels& active_kernels() noexcept;

/// Cosine similarity; 0 when either vector has zero norm.
double cosine(std::span<const float> a, std::span<const float> b, const Kernels& k = active_kernels()) noexcept;

/// Cosine of `query` against each `dim`-wide row of `rows`; writes rows.size()/dim scores.
void cosine_scan(std::span<const float> query, std::span<const float> rows, std::size_t dim,
                 std::span<double> out, const Kernels& k = active_kernels()) noexcept;

}  // namespace kgfuzz::simd
