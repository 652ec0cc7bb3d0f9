// Compiled with -mavx2. Only reached after CPUID confirms AVX2.
#include <immintrin.h>

#include "privmon/kernels.hpp"

namespace privmon::kernels::avx2 {

namespace {

inline __m256i load(const void* p) { return _mm256_loadu_si256(static_cast<const __m256i*>(p)); }
inline void store(void* p, __m256i v) { _mm256_storeu_si256(static_cast<__m256i*>(p), v); }

// Low 64 bits of a 64x64 product per lane.
inline __m256i mullo64(__m256i a, __m256i b) {
  const __m256i a_hi = _mm256_srli_epi64(a, 32);
  const __m256i b_hi = _mm256_srli_epi64(b, 32);
  const __m256i lo = _mm256_mul_epu32(a, b);
  const __m256i cross = _mm256_add_epi64(_mm256_mul_epu32(a_hi, b), _mm256_mul_epu32(a, b_hi));
  return _mm256_add_epi64(lo, _mm256_slli_epi64(cross, 32));
}

// Two u128 slots per register: lanes [lo0, hi0, lo1, hi1]. The high lanes of
// a w <= 64 value are zero, and the mask keeps them zero.
inline __m256i slot_mask(u64 mask) {
  return _mm256_set_epi64x(0, static_cast<long long>(mask), 0, static_cast<long long>(mask));
}

}  // namespace

void xor_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b) {
  const std::size_t n = dst.size();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) store(&dst[i], _mm256_xor_si256(load(&a[i]), load(&b[i])));
  scalar::xor_bits(dst.subspan(i), a.subspan(i), b.subspan(i));
}

void and_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b) {
  const std::size_t n = dst.size();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) store(&dst[i], _mm256_and_si256(load(&a[i]), load(&b[i])));
  scalar::and_bits(dst.subspan(i), a.subspan(i), b.subspan(i));
}

void beaver_and(std::span<u8> z, std::span<const u8> a, std::span<const u8> b, std::span<const u8> c,
                std::span<const u8> d, std::span<const u8> e, bool lead) {
  const std::size_t n = z.size();
  const __m256i l = _mm256_set1_epi8(lead ? 1 : 0);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i dv = load(&d[i]);
    const __m256i ev = load(&e[i]);
    __m256i v = _mm256_xor_si256(load(&c[i]), _mm256_and_si256(dv, load(&b[i])));
    v = _mm256_xor_si256(v, _mm256_and_si256(ev, load(&a[i])));
    v = _mm256_xor_si256(v, _mm256_and_si256(l, _mm256_and_si256(dv, ev)));
    store(&z[i], v);
  }
  scalar::beaver_and(z.subspan(i), a.subspan(i), b.subspan(i), c.subspan(i), d.subspan(i), e.subspan(i),
                     lead);
}

void ring_add(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask) {
  const std::size_t n = dst.size();
  const __m256i m = slot_mask(mask);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    store(&dst[i], _mm256_and_si256(_mm256_add_epi64(load(&a[i]), load(&b[i])), m));
  }
  scalar::ring_add(dst.subspan(i), a.subspan(i), b.subspan(i), mask);
}

void ring_sub(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask) {
  const std::size_t n = dst.size();
  const __m256i m = slot_mask(mask);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    store(&dst[i], _mm256_and_si256(_mm256_sub_epi64(load(&a[i]), load(&b[i])), m));
  }
  scalar::ring_sub(dst.subspan(i), a.subspan(i), b.subspan(i), mask);
}

void ring_mul(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask) {
  const std::size_t n = dst.size();
  const __m256i m = slot_mask(mask);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    store(&dst[i], _mm256_and_si256(mullo64(load(&a[i]), load(&b[i])), m));
  }
  scalar::ring_mul(dst.subspan(i), a.subspan(i), b.subspan(i), mask);
}

void ring_beaver(std::span<u128> z, std::span<const u128> a, std::span<const u128> b,
                 std::span<const u128> c, std::span<const u128> e, std::span<const u128> f, bool lead,
                 u64 mask) {
  const std::size_t n = z.size();
  const __m256i m = slot_mask(mask);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256i ev = load(&e[i]);
    const __m256i fv = load(&f[i]);
    __m256i v = _mm256_add_epi64(load(&c[i]), mullo64(ev, load(&b[i])));
    v = _mm256_add_epi64(v, mullo64(fv, load(&a[i])));
    if (lead) v = _mm256_add_epi64(v, mullo64(ev, fv));
    store(&z[i], _mm256_and_si256(v, m));
  }
  scalar::ring_beaver(z.subspan(i), a.subspan(i), b.subspan(i), c.subspan(i), e.subspan(i), f.subspan(i),
                      lead, mask);
}

}  // namespace privmon::kernels::avx2
