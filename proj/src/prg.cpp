#include "privmon/prg.hpp"

#include <cstring>

#include <sodium.h>

namespace privmon {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw Error("libsodium initialisation failed");
}

}  // namespace

Prg::Prg(const Seed& key) : key_(key) { ensure_sodium(); }

Seed Prg::derive_seed(u64 seed, std::string_view label) {
  Seed parent{};
  for (int i = 0; i < 8; ++i) parent[static_cast<std::size_t>(i)] = static_cast<u8>(seed >> (8 * i));
  return derive_seed(parent, label);
}

Seed Prg::derive_seed(const Seed& parent, std::string_view label) {
  ensure_sodium();
  Seed out{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, out.size());
  crypto_generichash_update(&st, parent.data(), parent.size());
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  crypto_generichash_final(&st, out.data(), out.size());
  return out;
}

void Prg::refill() {
  unsigned char nonce[crypto_stream_chacha20_NONCEBYTES] = {};
  std::memcpy(nonce, &nonce_, sizeof(nonce_));
  ++nonce_;
  crypto_stream_chacha20(buf_.data(), buf_.size(), nonce, key_.data());
  pos_ = 0;
}

void Prg::fill(std::span<u8> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buf_.size()) refill();
    std::size_t n = std::min(out.size() - done, buf_.size() - pos_);
    std::memcpy(out.data() + done, buf_.data() + pos_, n);
    pos_ += n;
    done += n;
  }
}

u64 Prg::next_u64() {
  u64 v;
  if (buf_.size() - pos_ >= sizeof(v)) {
    std::memcpy(&v, buf_.data() + pos_, sizeof(v));
    pos_ += sizeof(v);
    return v;
  }
  fill(std::span<u8>(reinterpret_cast<u8*>(&v), sizeof(v)));
  return v;
}

u128 Prg::bits(unsigned n) {
  if (n == 0) return 0;
  if (n <= 64) return u128{next_u64()} & low_mask(n);
  u128 v = (u128{next_u64()} << 64) | next_u64();
  return v & low_mask(n);
}

u128 Prg::uniform(const Modulus& m) {
  if (!m.is_prime()) return bits(m.bits());
  const u128 p = m.prime_value();
  for (;;) {
    u128 v = bits(m.bits());
    if (v < p) return v;
  }
}

}  // namespace privmon
