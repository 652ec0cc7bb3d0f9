#include <atomic>
#include <cstdlib>
#include <string_view>

#include "privmon/kernels.hpp"

namespace privmon::kernels {

namespace {

struct Table {
  decltype(&scalar::xor_bits) xor_bits;
  decltype(&scalar::and_bits) and_bits;
  decltype(&scalar::beaver_and) beaver_and;
  decltype(&scalar::ring_add) ring_add;
  decltype(&scalar::ring_sub) ring_sub;
  decltype(&scalar::ring_mul) ring_mul;
  decltype(&scalar::ring_beaver) ring_beaver;
};

constexpr Table kScalar{scalar::xor_bits, scalar::and_bits,  scalar::beaver_and, scalar::ring_add,
                        scalar::ring_sub, scalar::ring_mul, scalar::ring_beaver};
#ifdef PRIVMON_HAVE_AVX2
constexpr Table kAvx2{avx2::xor_bits, avx2::and_bits,  avx2::beaver_and, avx2::ring_add,
                      avx2::ring_sub, avx2::ring_mul, avx2::ring_beaver};
#endif

const Table& table_for(Isa isa) {
#ifdef PRIVMON_HAVE_AVX2
  if (isa == Isa::Avx2) return kAvx2;
#endif
  (void)isa;
  return kScalar;
}

Isa initial_isa() {
  if (const char* env = std::getenv("PRIVMON_ISA")) {
    std::string_view v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> t{&table_for(initial_isa())};
  return t;
}

const Table& tbl() { return *current().load(std::memory_order_relaxed); }

bool small_ring(const Modulus& m) { return !m.is_prime() && m.bits() <= 64; }

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::Scalar) return true;
#ifdef PRIVMON_HAVE_AVX2
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return &tbl() == &kScalar ? Isa::Scalar : Isa::Avx2; }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) throw Error(std::string("kernel ISA not supported: ") + isa_name(isa));
  current().store(&table_for(isa), std::memory_order_relaxed);
}

void xor_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b) {
  tbl().xor_bits(dst, a, b);
}

void and_bits(std::span<u8> dst, std::span<const u8> a, std::span<const u8> b) {
  tbl().and_bits(dst, a, b);
}

void beaver_and(std::span<u8> z, std::span<const u8> a, std::span<const u8> b, std::span<const u8> c,
                std::span<const u8> d, std::span<const u8> e, bool lead) {
  tbl().beaver_and(z, a, b, c, d, e, lead);
}

void mod_add(const Modulus& m, std::span<u128> dst, std::span<const u128> a, std::span<const u128> b) {
  if (small_ring(m)) return tbl().ring_add(dst, a, b, static_cast<u64>(m.mask()));
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = m.add(a[i], b[i]);
}

void mod_sub(const Modulus& m, std::span<u128> dst, std::span<const u128> a, std::span<const u128> b) {
  if (small_ring(m)) return tbl().ring_sub(dst, a, b, static_cast<u64>(m.mask()));
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = m.sub(a[i], b[i]);
}

void mod_mul(const Modulus& m, std::span<u128> dst, std::span<const u128> a, std::span<const u128> b) {
  if (small_ring(m)) return tbl().ring_mul(dst, a, b, static_cast<u64>(m.mask()));
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = m.mul(a[i], b[i]);
}

void mod_beaver(const Modulus& m, std::span<u128> z, std::span<const u128> a, std::span<const u128> b,
                std::span<const u128> c, std::span<const u128> e, std::span<const u128> f, bool lead) {
  if (small_ring(m)) return tbl().ring_beaver(z, a, b, c, e, f, lead, static_cast<u64>(m.mask()));
  for (std::size_t i = 0; i < z.size(); ++i) {
    u128 v = m.add(c[i], m.add(m.mul(e[i], b[i]), m.mul(f[i], a[i])));
    if (lead) v = m.add(v, m.mul(e[i], f[i]));
    z[i] = v;
  }
}

}  // namespace privmon::kernels
