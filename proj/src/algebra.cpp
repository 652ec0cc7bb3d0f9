#include "privmon/algebra.hpp"

#include <algorithm>
#include <array>
#include <charconv>

namespace privmon {

namespace {

inline u64 lo64(u128 v) { return static_cast<u64>(v); }
inline u64 hi64(u128 v) { return static_cast<u64>(v >> 64); }
inline u128 make128(u64 hi, u64 lo) { return (u128{hi} << 64) | lo; }

// (a + b) mod p for a, b < p, tolerating p close to 2^128.
inline u128 addmod(u128 a, u128 b, u128 p) {
  u128 s = a + b;
  if (s < a || s >= p) s -= p;
  return s;
}

}  // namespace

std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string u128_to_hex(u128 v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  if (v == 0) return "0x0";
  std::string out;
  while (v != 0) {
    out.push_back(kDigits[static_cast<int>(v & 0xf)]);
    v >>= 4;
  }
  out += "x0";
  std::reverse(out.begin(), out.end());
  return out;
}

u128 parse_u128(std::string_view text) {
  unsigned base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    text.remove_prefix(2);
  }
  if (text.empty()) throw DomainError("empty integer literal");
  u128 v = 0;
  for (char ch : text) {
    unsigned d;
    if (ch >= '0' && ch <= '9') {
      d = static_cast<unsigned>(ch - '0');
    } else if (base == 16 && ch >= 'a' && ch <= 'f') {
      d = static_cast<unsigned>(ch - 'a' + 10);
    } else if (base == 16 && ch >= 'A' && ch <= 'F') {
      d = static_cast<unsigned>(ch - 'A' + 10);
    } else {
      throw DomainError("invalid digit in integer literal '" + std::string(text) + "'");
    }
    if (d >= base) throw DomainError("invalid digit in integer literal");
    if (v > (~u128{0} - d) / base) throw DomainError("integer literal exceeds 128 bits");
    v = v * base + d;
  }
  return v;
}

unsigned bit_length(u128 v) {
  if (v == 0) return 0;
  const u64 hi = hi64(v);
  if (hi != 0) return 128 - static_cast<unsigned>(__builtin_clzll(hi));
  return 64 - static_cast<unsigned>(__builtin_clzll(lo64(v)));
}

// ---- primality -------------------------------------------------------------

namespace {

// Slow but overflow-free a*b mod n by double-and-add; only for primality
// testing and Montgomery setup.
u128 mulmod_slow(u128 a, u128 b, u128 n) {
  u128 r = 0;
  a %= n;
  while (b != 0) {
    if (b & 1) r = addmod(r, a, n);
    a = addmod(a, a, n);
    b >>= 1;
  }
  return r;
}

u128 mulmod_any(u128 a, u128 b, u128 n) {
  if (hi64(n) == 0) return (a % n) * (b % n) % n;
  return mulmod_slow(a, b, n);
}

u128 powmod_any(u128 b, u128 e, u128 n) {
  u128 r = 1 % n;
  b %= n;
  while (e != 0) {
    if (e & 1) r = mulmod_any(r, b, n);
    b = mulmod_any(b, b, n);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_probable_prime(u128 n) {
  static constexpr std::array<unsigned, 24> kBases = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                                      41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
  if (n < 2) return false;
  for (unsigned b : kBases) {
    if (n == b) return true;
    if (n % b == 0) return false;
  }
  u128 d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (unsigned b : kBases) {
    u128 x = powmod_any(b, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (unsigned r = 1; r < s; ++r) {
      x = mulmod_any(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// ---- Modulus ---------------------------------------------------------------

Modulus Modulus::power_of_two(unsigned width) {
  if (width < 1 || width > 128) {
    throw DomainError("ring width must be in 1..128, got " + std::to_string(width));
  }
  Modulus m;
  m.kind_ = Kind::PowerOfTwo;
  m.bits_ = width;
  m.mask_ = low_mask(width);
  return m;
}

Modulus Modulus::prime(u128 p) {
  if (!is_probable_prime(p)) throw DomainError("modulus " + u128_to_string(p) + " is not prime");
  Modulus m;
  m.kind_ = Kind::Prime;
  m.p_ = p;
  m.bits_ = bit_length(p);
  m.mask_ = low_mask(m.bits_);
  if (hi64(p) != 0) {
    // -p^{-1} mod 2^64 by Newton iteration.
    u64 p0 = lo64(p);
    u64 x = p0;
    for (int i = 0; i < 6; ++i) x *= 2 - p0 * x;
    m.n0inv_ = ~x + 1;
    u128 r1 = (u128{0} - p) % p;  // 2^128 mod p
    m.r2_ = mulmod_slow(r1, r1, p);
  }
  return m;
}

Modulus Modulus::default_prime() {
  static const Modulus kDefault = prime((u128{1} << 127) + 29);
  return kDefault;
}

Modulus Modulus::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw DomainError("modulus must be ring:<w> or prime:<p>");
  auto kind = text.substr(0, colon);
  auto arg = text.substr(colon + 1);
  if (kind == "ring") {
    unsigned w = 0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), w);
    if (ec != std::errc{} || ptr != arg.data() + arg.size()) {
      throw DomainError("bad ring width '" + std::string(arg) + "'");
    }
    return power_of_two(w);
  }
  if (kind == "prime") {
    if (arg == "default") return default_prime();
    return prime(parse_u128(arg));
  }
  throw DomainError("unknown modulus kind '" + std::string(kind) + "'");
}

std::string Modulus::to_string() const {
  if (is_prime()) return "prime:" + u128_to_string(p_);
  return "ring:" + std::to_string(bits_);
}

u128 Modulus::mont_mul(u128 a, u128 b) const {
  // CIOS with two 64-bit limbs and two spare words.
  const u64 a_limbs[2] = {lo64(a), lo64(a >> 64)};
  const u64 b_limbs[2] = {lo64(b), lo64(b >> 64)};
  const u64 p_limbs[2] = {lo64(p_), hi64(p_)};
  u64 t[4] = {0, 0, 0, 0};
  for (int i = 0; i < 2; ++i) {
    u128 c = 0;
    for (int j = 0; j < 2; ++j) {
      c = u128{t[j]} + u128{a_limbs[j]} * b_limbs[i] + (c >> 64);
      t[j] = lo64(c);
    }
    c = u128{t[2]} + (c >> 64);
    t[2] = lo64(c);
    t[3] = hi64(c);

    const u64 m = t[0] * n0inv_;
    c = u128{t[0]} + u128{m} * p_limbs[0];
    c = u128{t[1]} + u128{m} * p_limbs[1] + (c >> 64);
    t[0] = lo64(c);
    c = u128{t[2]} + (c >> 64);
    t[1] = lo64(c);
    t[2] = t[3] + hi64(c);
  }
  u128 r = make128(t[1], t[0]);
  if (t[2] != 0 || r >= p_) r -= p_;
  return r;
}

u128 Modulus::mul(u128 a, u128 b) const {
  if (!is_prime()) return (a * b) & mask_;
  if (hi64(p_) == 0) return (a * b) % p_;
  return mont_mul(mont_mul(a, b), r2_);
}

u128 Modulus::pow(u128 base, u128 exp) const {
  u128 r = reduce(1);
  while (exp != 0) {
    if (exp & 1) r = mul(r, base);
    base = mul(base, base);
    exp >>= 1;
  }
  return r;
}

u128 Modulus::inv(u128 a) const {
  if (!is_prime()) throw DomainError("inverse requested in ring " + to_string());
  if (a % p_ == 0) throw DomainError("inverse of zero");
  return pow(a % p_, p_ - 2);
}

// ---- Element ---------------------------------------------------------------

Element::Element(const Modulus& m, u128 v) : v_(v), m_(m) {
  if (!m.contains(v)) {
    throw DomainError("value " + u128_to_string(v) + " not reduced modulo " + m.to_string());
  }
}

void Element::check_same(const Element& o) const {
  if (!(m_ == o.m_)) {
    throw DomainError("modulus mismatch: " + m_.to_string() + " vs " + o.m_.to_string());
  }
}

Element Element::operator+(const Element& o) const {
  check_same(o);
  return Element(m_, m_.add(v_, o.v_));
}

Element Element::operator-(const Element& o) const {
  check_same(o);
  return Element(m_, m_.sub(v_, o.v_));
}

Element Element::operator*(const Element& o) const {
  check_same(o);
  return Element(m_, m_.mul(v_, o.v_));
}

void encode_be(u128 v, std::span<u8> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<u8>(v & 0xff);
    v >>= 8;
  }
}

u128 decode_be(std::span<const u8> in) {
  u128 v = 0;
  for (u8 b : in) v = (v << 8) | b;
  return v;
}

std::vector<u8> Element::encode() const {
  std::vector<u8> out(m_.byte_width());
  encode_be(v_, out);
  return out;
}

Element Element::decode(const Modulus& m, std::span<const u8> bytes) {
  if (bytes.size() != m.byte_width()) {
    throw DomainError("element encoding has " + std::to_string(bytes.size()) + " octets, expected " +
                      std::to_string(m.byte_width()));
  }
  return Element(m, decode_be(bytes));
}

// ---- Lagrange --------------------------------------------------------------

std::vector<u128> lagrange_weights_at_zero(const Modulus& m, std::span<const u128> points) {
  if (!m.is_prime()) throw DomainError("Lagrange interpolation needs a prime field");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!m.contains(points[i]) || points[i] == 0) throw DomainError("evaluation points must be nonzero");
    for (std::size_t j = 0; j < i; ++j) {
      if (points[i] == points[j]) throw DomainError("duplicate evaluation point");
    }
  }
  std::vector<u128> w(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    u128 num = m.reduce(1);
    u128 den = m.reduce(1);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      num = m.mul(num, points[j]);
      den = m.mul(den, m.sub(points[j], points[i]));
    }
    w[i] = m.mul(num, m.inv(den));
  }
  return w;
}

Element lagrange_weight(std::span<const Element> points, std::size_t i) {
  if (points.empty() || i >= points.size()) throw DomainError("lagrange index out of range");
  const Modulus& m = points.front().modulus();
  std::vector<u128> raw;
  raw.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.modulus() == m)) throw DomainError("modulus mismatch among evaluation points");
    raw.push_back(p.value());
  }
  return Element(m, lagrange_weights_at_zero(m, raw)[i]);
}

}  // namespace privmon
