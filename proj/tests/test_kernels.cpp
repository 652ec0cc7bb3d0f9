#include <gtest/gtest.h>

#include "privmon/kernels.hpp"
#include "privmon/prg.hpp"

namespace privmon {
namespace {

namespace k = kernels;

std::vector<u8> random_bits(Prg& rng, std::size_t n) {
  std::vector<u8> out(n);
  for (auto& b : out) b = rng.bit();
  return out;
}

std::vector<u128> random_lanes(Prg& rng, const Modulus& m, std::size_t n) {
  std::vector<u128> out(n);
  for (auto& v : out) v = rng.uniform(m);
  return out;
}

// Lengths straddle the vector widths so tails are exercised.
const std::size_t kLengths[] = {0, 1, 3, 4, 7, 31, 32, 33, 100, 1023};

TEST(Kernels, Avx2MatchesScalarOnBits) {
  if (!k::isa_supported(k::Isa::Avx2)) GTEST_SKIP() << "no AVX2 on this CPU";
  Prg rng(1, "bits");
  for (auto n : kLengths) {
    const auto a = random_bits(rng, n), b = random_bits(rng, n), c = random_bits(rng, n);
    const auto d = random_bits(rng, n), e = random_bits(rng, n);
    std::vector<u8> s(n), v(n);
    k::scalar::xor_bits(s, a, b);
    k::avx2::xor_bits(v, a, b);
    ASSERT_EQ(s, v);
    k::scalar::and_bits(s, a, b);
    k::avx2::and_bits(v, a, b);
    ASSERT_EQ(s, v);
    for (bool lead : {false, true}) {
      k::scalar::beaver_and(s, a, b, c, d, e, lead);
      k::avx2::beaver_and(v, a, b, c, d, e, lead);
      ASSERT_EQ(s, v);
    }
  }
}

TEST(Kernels, Avx2MatchesScalarOnRings) {
  if (!k::isa_supported(k::Isa::Avx2)) GTEST_SKIP() << "no AVX2 on this CPU";
  Prg rng(2, "rings");
  for (unsigned w : {1u, 8u, 16u, 32u, 63u, 64u}) {
    const auto m = Modulus::power_of_two(w);
    const u64 mask = static_cast<u64>(m.mask());
    for (auto n : kLengths) {
      const auto a = random_lanes(rng, m, n), b = random_lanes(rng, m, n), c = random_lanes(rng, m, n);
      const auto e = random_lanes(rng, m, n), f = random_lanes(rng, m, n);
      std::vector<u128> s(n), v(n);
      k::scalar::ring_add(s, a, b, mask);
      k::avx2::ring_add(v, a, b, mask);
      ASSERT_EQ(s, v);
      k::scalar::ring_sub(s, a, b, mask);
      k::avx2::ring_sub(v, a, b, mask);
      ASSERT_EQ(s, v);
      k::scalar::ring_mul(s, a, b, mask);
      k::avx2::ring_mul(v, a, b, mask);
      ASSERT_EQ(s, v);
      for (bool lead : {false, true}) {
        k::scalar::ring_beaver(s, a, b, c, e, f, lead, mask);
        k::avx2::ring_beaver(v, a, b, c, e, f, lead, mask);
        ASSERT_EQ(s, v);
      }
    }
  }
}

TEST(Kernels, DispatchedOpsMatchModulusArithmetic) {
  Prg rng(3, "dispatch");
  for (const auto& m : {Modulus::power_of_two(16), Modulus::power_of_two(64), Modulus::power_of_two(100),
                        Modulus::prime(17), Modulus::default_prime()}) {
    for (auto isa : {k::Isa::Scalar, k::Isa::Avx2}) {
      if (!k::isa_supported(isa)) continue;
      k::set_isa(isa);
      const std::size_t n = 77;
      const auto a = random_lanes(rng, m, n), b = random_lanes(rng, m, n), c = random_lanes(rng, m, n);
      const auto e = random_lanes(rng, m, n), f = random_lanes(rng, m, n);
      std::vector<u128> sum(n), diff(n), prod(n), z(n);
      k::mod_add(m, sum, a, b);
      k::mod_sub(m, diff, a, b);
      k::mod_mul(m, prod, a, b);
      k::mod_beaver(m, z, a, b, c, e, f, true);
      for (std::size_t i = 0; i < n; ++i) {
        ASSERT_EQ(sum[i], m.add(a[i], b[i]));
        ASSERT_EQ(diff[i], m.sub(a[i], b[i]));
        ASSERT_EQ(prod[i], m.mul(a[i], b[i]));
        const u128 want = m.add(m.add(c[i], m.mul(e[i], b[i])), m.add(m.mul(f[i], a[i]), m.mul(e[i], f[i])));
        ASSERT_EQ(z[i], want);
      }
    }
  }
  k::set_isa(k::Isa::Scalar);
  EXPECT_EQ(k::active_isa(), k::Isa::Scalar);
  EXPECT_STREQ(k::isa_name(k::Isa::Avx2), "avx2");
}

}  // namespace
}  // namespace privmon
