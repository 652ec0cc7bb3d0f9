#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace privmon {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Party ids on the wire. The System client is 0, monitor parties are 1..k.
using PartyId = unsigned;
inline constexpr PartyId kSystemId = 0;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand from the wrong domain: mismatched moduli, out-of-range values.
class DomainError : public Error {
 public:
  using Error::Error;
};

class MaterialExhausted : public Error {
 public:
  using Error::Error;
};

// Peers disagreed, a peer aborted, or the transport failed.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

std::string u128_to_string(u128 v);
std::string u128_to_hex(u128 v);
// Accepts decimal or 0x-prefixed hex. Throws DomainError on overflow or junk.
u128 parse_u128(std::string_view text);
unsigned bit_length(u128 v);

inline u128 low_mask(unsigned bits) {
  return bits >= 128 ? ~u128{0} : ((u128{1} << bits) - 1);
}

}  // namespace privmon
