#pragma once

#include <span>
#include <string>
#include <vector>

#include "privmon/common.hpp"

namespace privmon {

// Either Z_{2^w} (1 <= w <= 128) or F_p (p prime, p < 2^128).
//
// Prime multiplication uses a native 128-bit product for p < 2^64 and
// two-limb Montgomery multiplication above that.
class Modulus {
 public:
  enum class Kind : u8 { PowerOfTwo = 0, Prime = 1 };

  static Modulus power_of_two(unsigned width);
  static Modulus prime(u128 p);
  // Smallest prime above 2^127.
  static Modulus default_prime();
  // "ring:<w>" or "prime:<p>" (also "prime:default").
  static Modulus parse(std::string_view text);

  Kind kind() const { return kind_; }
  bool is_prime() const { return kind_ == Kind::Prime; }
  // w for rings, bit length of p for fields.
  unsigned bits() const { return bits_; }
  std::size_t byte_width() const { return (bits_ + 7) / 8; }
  // p for fields; for rings the mask 2^w - 1.
  u128 prime_value() const { return p_; }
  u128 mask() const { return mask_; }

  bool contains(u128 v) const { return is_prime() ? v < p_ : (v & ~mask_) == 0; }
  u128 reduce(u128 v) const { return is_prime() ? v % p_ : v & mask_; }
  // Every value of the domain is < 2^k when k >= log2(size); this is the
  // largest k with 2^k <= size, i.e. values below 2^k all fit.
  unsigned value_bits() const { return is_prime() ? bits_ - 1 : bits_; }

  u128 add(u128 a, u128 b) const {
    if (!is_prime()) return (a + b) & mask_;
    u128 s = a + b;
    if (s < a || s >= p_) s -= p_;
    return s;
  }
  u128 sub(u128 a, u128 b) const {
    if (!is_prime()) return (a - b) & mask_;
    return a >= b ? a - b : a - b + p_;
  }
  u128 neg(u128 a) const { return sub(0, a); }
  u128 mul(u128 a, u128 b) const;
  u128 pow(u128 base, u128 exp) const;
  // Field inverse. Throws DomainError for zero or for ring moduli.
  u128 inv(u128 a) const;

  std::string to_string() const;

  friend bool operator==(const Modulus& a, const Modulus& b) {
    return a.kind_ == b.kind_ && a.bits_ == b.bits_ && a.p_ == b.p_;
  }

 private:
  Modulus() = default;
  u128 mont_mul(u128 a, u128 b) const;

  Kind kind_ = Kind::PowerOfTwo;
  unsigned bits_ = 0;
  u128 p_ = 0;
  u128 mask_ = 0;
  // Montgomery constants, R = 2^128. Only set for primes >= 2^64.
  u64 n0inv_ = 0;
  u128 r2_ = 0;
};

// Deterministic Miller-Rabin over the first 24 prime bases.
bool is_probable_prime(u128 n);

// A fully reduced value tagged with its modulus.
class Element {
 public:
  // Throws DomainError if v is not already reduced.
  Element(const Modulus& m, u128 v);
  static Element reduced(const Modulus& m, u128 v) { return Element(m, m.reduce(v)); }
  static Element zero(const Modulus& m) { return Element(m, 0); }
  static Element one(const Modulus& m) { return Element(m, m.reduce(1)); }

  u128 value() const { return v_; }
  const Modulus& modulus() const { return m_; }

  Element operator+(const Element& o) const;
  Element operator-(const Element& o) const;
  Element operator*(const Element& o) const;
  Element operator-() const { return Element(m_, m_.neg(v_)); }
  Element inv() const { return Element(m_, m_.inv(v_)); }

  friend bool operator==(const Element& a, const Element& b) {
    return a.m_ == b.m_ && a.v_ == b.v_;
  }

  // Fixed-width big-endian, modulus.byte_width() octets.
  std::vector<u8> encode() const;
  static Element decode(const Modulus& m, std::span<const u8> bytes);

 private:
  void check_same(const Element& o) const;

  u128 v_;
  Modulus m_;
};

// Big-endian fixed-width helpers shared with the wire layer.
void encode_be(u128 v, std::span<u8> out);
u128 decode_be(std::span<const u8> in);

// Weight L_i with sum_i L_i * f(points[i]) = f(0) for deg f < points.size().
Element lagrange_weight(std::span<const Element> points, std::size_t i);
// All weights at once for evaluation points given as raw values.
std::vector<u128> lagrange_weights_at_zero(const Modulus& m, std::span<const u128> points);

}  // namespace privmon
