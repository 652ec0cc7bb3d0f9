#include "privmon/wire.hpp"

#include "privmon/algebra.hpp"

namespace privmon {

namespace {

void put_le(std::vector<u8>& out, u64 v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
}

u64 get_le(std::span<const u8> in, std::size_t at, int bytes) {
  u64 v = 0;
  for (int i = 0; i < bytes; ++i) v |= u64{in[at + static_cast<std::size_t>(i)]} << (8 * i);
  return v;
}

}  // namespace

const char* to_string(Tag t) {
  switch (t) {
    case Tag::ObsShare:
      return "OBS_SHARE";
    case Tag::MaskedOpen:
      return "MASKED_OPEN";
    case Tag::FlagShare:
      return "FLAG_SHARE";
    case Tag::Sync:
      return "SYNC";
    case Tag::Abort:
      return "ABORT";
  }
  return "?";
}

RoundMessage RoundMessage::pack(u32 round, Tag tag, u8 label, std::span<const u128> values, std::size_t width) {
  if (values.size() > kMaxCount) throw ProtocolError("too many elements for one message");
  if (width == 0 || width > 16) throw DomainError("element width must be 1..16 octets");
  const u128 limit = low_mask(static_cast<unsigned>(8 * width));
  for (auto v : values) {
    if (v > limit) throw DomainError("value does not fit a " + std::to_string(width) + "-octet element");
  }
  RoundMessage m;
  m.round = round;
  m.tag = tag;
  m.label = label;
  m.count = static_cast<u16>(values.size());
  m.payload.resize(values.size() * width);
  for (std::size_t i = 0; i < values.size(); ++i) {
    encode_be(values[i], std::span<u8>(m.payload).subspan(i * width, width));
  }
  return m;
}

std::vector<u128> RoundMessage::unpack(std::size_t width) const {
  if (payload.size() != std::size_t{count} * width) {
    throw ProtocolError("payload of " + std::to_string(payload.size()) + " bytes does not hold " +
                        std::to_string(count) + " elements of width " + std::to_string(width));
  }
  std::vector<u128> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = decode_be(std::span<const u8>(payload).subspan(i * width, width));
  return out;
}

std::vector<u8> encode_frame(const RoundMessage& m) {
  std::vector<u8> out;
  out.reserve(4 + RoundMessage::kHeaderSize + m.payload.size());
  put_le(out, RoundMessage::kHeaderSize + m.payload.size(), 4);
  put_le(out, m.round, 4);
  out.push_back(static_cast<u8>(m.tag));
  out.push_back(m.label);
  put_le(out, m.count, 2);
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  return out;
}

RoundMessage decode_body(std::span<const u8> body) {
  if (body.size() < RoundMessage::kHeaderSize) throw ProtocolError("frame shorter than its header");
  RoundMessage m;
  m.round = static_cast<u32>(get_le(body, 0, 4));
  const u8 tag = body[4];
  if (tag < static_cast<u8>(Tag::ObsShare) || tag > static_cast<u8>(Tag::Abort)) {
    throw ProtocolError("unknown message tag " + std::to_string(tag));
  }
  m.tag = static_cast<Tag>(tag);
  m.label = body[5];
  m.count = static_cast<u16>(get_le(body, 6, 2));
  m.payload.assign(body.begin() + RoundMessage::kHeaderSize, body.end());
  return m;
}

RoundMessage decode_frame(std::span<const u8> frame) {
  if (frame.size() < 4) throw ProtocolError("frame shorter than its length prefix");
  const u64 len = get_le(frame, 0, 4);
  if (len != frame.size() - 4) throw ProtocolError("frame length prefix disagrees with frame size");
  return decode_body(frame.subspan(4));
}

}  // namespace privmon
