#pragma once

#include <array>
#include <span>
#include <string_view>

#include "privmon/algebra.hpp"

namespace privmon {

using Seed = std::array<u8, 32>;

// Deterministic ChaCha20 keystream. Every random choice in a session is
// drawn from one of these, so transcripts replay exactly from the seed.
class Prg {
 public:
  explicit Prg(const Seed& key);
  Prg(u64 seed, std::string_view label) : Prg(derive_seed(seed, label)) {}

  // Domain-separated key derivation (BLAKE2b over seed || label).
  static Seed derive_seed(u64 seed, std::string_view label);
  static Seed derive_seed(const Seed& parent, std::string_view label);

  void fill(std::span<u8> out);
  u64 next_u64();
  u8 bit() { return static_cast<u8>(next_u64() & 1); }
  // Uniform in [0, 2^n), n <= 128.
  u128 bits(unsigned n);
  // Uniform over the whole domain of m (rejection sampling for primes).
  u128 uniform(const Modulus& m);

 private:
  void refill();

  Seed key_;
  u64 nonce_ = 0;
  std::array<u8, 4096> buf_{};
  std::size_t pos_ = 4096;
};

}  // namespace privmon
