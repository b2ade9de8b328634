#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kgfuzz/simd/similarity.hpp"

using namespace kgfuzz::simd;

namespace {

double reference_cosine(const std::vector<float>& a, const std::vector<float>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot / std::sqrt(na * nb));
}

std::vector<const Kernels*> available() {
  std::vector<const Kernels*> out{&scalar_kernels()};
  if (avx2_kernels() && cpu_supports(Isa::Avx2)) out.push_back(avx2_kernels());
  if (neon_kernels() && cpu_supports(Isa::Neon)) out.push_back(neon_kernels());
  return out;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("every available kernel agrees with a long double oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> val(-3.0f, 3.0f);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 63u, 64u, 100u, 257u}) {
      std::vector<float> a(n), b(n);
      for (auto& x : a) x = val(rng);
      for (auto& x : b) x = val(rng);
      const double want = reference_cosine(a, b);
      for (const auto* k : available()) {
        CAPTURE(isa_name(k->isa));
        CAPTURE(n);
        CHECK(cosine(a, b, *k) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("vectorized kernels match scalar dot and norm") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<float> val(-1.0f, 1.0f);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = rng() % 130;
      std::vector<float> a(n), b(n);
      for (auto& x : a) x = val(rng);
      for (auto& x : b) x = val(rng);
      const auto& s = scalar_kernels();
      for (const auto* k : available()) {
        CHECK(k->dot(a.data(), b.data(), n) == doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(k->squared_norm(a.data(), n) == doctest::Approx(s.squared_norm(a.data(), n)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("zero vectors score zero and scans match pairwise cosine") {
    std::vector<float> z(8, 0.0f), a{1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(cosine(z, a) == 0.0);
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    std::vector<float> rows;
    rows.insert(rows.end(), a.begin(), a.end());
    rows.insert(rows.end(), z.begin(), z.end());
    std::vector<double> out(2);
    cosine_scan(a, rows, 8, out);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == 0.0);
  }
}
