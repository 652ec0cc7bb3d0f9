#pragma once

#include <span>

#include "privmon/algebra.hpp"

// Batched share arithmetic. Every kernel has a scalar reference version and,
// where the lane type allows, an AVX2 version; the active variant is chosen
// once from CPUID (override with PRIVMON_ISA=scalar|avx2).
//
// Boolean shares are stored one bit per byte (values 0/1). Ring kernels cover
// Z_{2^w} with w <= 64 stored in u128 slots; wider rings and prime fields go
// through the scalar Modulus path in the mod_* helpers below.
namespace privmon::kernels {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Throws Error if the CPU cannot run `isa`.
void set_isa(Isa isa);

namespace scalar {
void xor_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b);
void and_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b);
void beaver_and(std::span<u8> z, std::span<const u8> a, std::span<const u8> b, std::span<const u8> c,
                std::span<const u8> d, std::span<const u8> e, bool lead);
void ring_add(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask);
void ring_sub(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask);
void ring_mul(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask);
void ring_beaver(std::span<u128> z, std::span<const u128> a, std::span<const u128> b,
                 std::span<const u128> c, std::span<const u128> e, std::span<const u128> f, bool lead,
                 u64 mask);
}  // namespace scalar

namespace avx2 {
void xor_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b);
void and_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b);
void beaver_and(std::span<u8> z, std::span<const u8> a, std::span<const u8> b, std::span<const u8> c,
                std::span<const u8> d, std::span<const u8> e, bool lead);
void ring_add(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask);
void ring_sub(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask);
void ring_mul(std::span<u128> dst, std::span<const u128> a, std::span<const u128> b, u64 mask);
void ring_beaver(std::span<u128> z, std::span<const u128> a, std::span<const u128> b,
                 std::span<const u128> c, std::span<const u128> e, std::span<const u128> f, bool lead,
                 u64 mask);
}  // namespace avx2

// Dispatched entry points.
void xor_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b);
void and_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b);
// z = c ^ (d & b) ^ (e & a) ^ (lead ? d & e : 0), the Beaver identity over Z_2.
void beaver_and(std::span<u8> z, std::span<const u8> a, std::span<const u8> b, std::span<const u8> c,
                std::span<const u8> d, std::span<const u8> e, bool lead);

// Lane-wise arithmetic under any modulus; takes the SIMD path for small rings.
void mod_add(const Modulus& m, std::span<u128> dst, std::span<const u128> a, std::span<const u128> b);
void mod_sub(const Modulus& m, std::span<u128> dst, std::span<const u128> a, std::span<const u128> b);
void mod_mul(const Modulus& m, std::span<u128> dst, std::span<const u128> a, std::span<const u128> b);
// z = c + e*b + f*a (+ e*f when lead), the Beaver identity.
void mod_beaver(const Modulus& m, std::span<u128> z, std::span<const u128> a, std::span<const u128> b,
                std::span<const u128> c, std::span<const u128> e, std::span<const u128> f, bool lead);

}  // namespace privmon::kernels
