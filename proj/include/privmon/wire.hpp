#pragma once

#include <span>
#include <vector>

#include "privmon/common.hpp"

namespace privmon {

enum class Tag : u8 { ObsShare = 1, MaskedOpen = 2, FlagShare = 3, Sync = 4, Abort = 5 };

const char* to_string(Tag t);

// Frame layout, all integers little-endian:
//   u32 length of what follows
//   u32 round | u8 tag | u8 label | u16 count | payload
// The payload holds `count` elements of a width both ends agree on; the
// label tells the receiver which protocol step the elements belong to.
struct RoundMessage {
  u32 round = 0;
  Tag tag = Tag::Sync;
  u8 label = 0;
  u16 count = 0;
  std::vector<u8> payload;

  static constexpr std::size_t kHeaderSize = 8;
  static constexpr std::size_t kMaxCount = 0xffff;

  // Packs values as fixed-width big-endian elements. Throws if there are more
  // than kMaxCount of them.
  static RoundMessage pack(u32 round, Tag tag, u8 label, std::span<const u128> values, std::size_t width);
  // Throws ProtocolError unless payload.size() == count * width.
  std::vector<u128> unpack(std::size_t width) const;
};

std::vector<u8> encode_frame(const RoundMessage& m);
// Decodes one frame body (everything after the length prefix).
RoundMessage decode_body(std::span<const u8> body);
// Decodes a whole frame including its prefix; the span must hold exactly one.
RoundMessage decode_frame(std::span<const u8> frame);

}  // namespace privmon
