#include "privmon/kernels.hpp"

namespace privmon::kernels::scalar {

void xor_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] ^ b[i];
}

void and_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i] & b[i];
}

void beaver_and(std::span<u8> z, std::span<const u8> a, std::span<const u8> b, std::span<const u8> c,
                std::span<const u8> d, std::span<const u8> e, bool lead) {
  const u8 l = lead ? 1 : 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = c[i] ^ (d[i] & b[i]) ^ (e[i] & a[i]) ^ (l & d[i] & e[i]);
  }
}

void ring_add(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = (static_cast<u64>(a[i]) + static_cast<u64>(b[i])) & mask;
  }
}

void ring_sub(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = (static_cast<u64>(a[i]) - static_cast<u64>(b[i])) & mask;
  }
}

void ring_mul(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = (static_cast<u64>(a[i]) * static_cast<u64>(b[i])) & mask;
  }
}

void ring_beaver(std::span<u128> z, std::span<const u128> a, std::span<const u128> b,
                 std::span<const u128> c, std::span<const u128> e, std::span<const u128> f, bool lead,
                 u64 mask) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    const u64 ei = static_cast<u64>(e[i]);
    const u64 fi = static_cast<u64>(f[i]);
    u64 v = static_cast<u64>(c[i]) + ei * static_cast<u64>(b[i]) + fi * static_cast<u64>(a[i]);
    if (lead) v += ei * fi;
    z[i] = v & mask;
  }
}

}  // namespace privmon::kernels::scalar
