#pragma once

#include <optional>
#include <span>
#include <vector>

#include "privmon/dealer.hpp"
#include "privmon/transport.hpp"

namespace privmon {

// What an opened value is. The first four are masked by fresh dealer
// randomness before opening; Flag is the round verdict and Explicit is a
// direct opening that monitoring sessions never perform. Doubles as the wire
// label.
enum class OpenKind : u8 { BeaverEF = 1, AndDE = 2, MaskedInput = 3, DaBitMask = 4, Flag = 5, Explicit = 6 };

const char* to_string(OpenKind k);
inline bool is_masked(OpenKind k) { return k != OpenKind::Flag && k != OpenKind::Explicit; }

struct OpenRecord {
  u32 round;
  OpenKind kind;
  u64 count;
  friend bool operator==(const OpenRecord&, const OpenRecord&) = default;
};

// A party's links to the other monitor parties. Each exchange() is one
// communication round: send to everyone, then receive from everyone.
class Channel {
 public:
  Channel(Endpoint& net, PartyId self, unsigned parties);

  // Returns every party's values indexed by party id - 1 (own slot included).
  std::vector<std::vector<u128>> exchange(u32 round, Tag tag, u8 label, std::span<const u128> mine,
                                          std::size_t width);
  // One-way transfer in kMaxCount chunks, and the matching receive.
  void send(PartyId to, u32 round, Tag tag, u8 label, std::span<const u128> values, std::size_t width);
  std::vector<u128> recv(PartyId from, u32 round, Tag tag, u8 label, std::size_t count, std::size_t width);
  // Tells every other node (System included) that this party gave up.
  void abort_all(u32 round) noexcept;

  u64 rounds() const { return rounds_; }
  Endpoint& endpoint() { return net_; }

 private:
  Endpoint& net_;
  PartyId self_;
  unsigned parties_;
  u64 rounds_ = 0;
};

class PartyContext {
 public:
  PartyContext(PartyId id, const SchemeId& arith, Endpoint& net, PartyMaterial& material);

  PartyId id() const { return id_; }
  unsigned parties() const { return arith_.parties(); }
  const SchemeId& arith() const { return arith_; }
  const SchemeId& boolean() const { return bool_; }
  const Modulus& modulus() const { return arith_.modulus(); }
  // Whether this party adds public constants to arithmetic / Boolean shares.
  bool lead_arith() const { return arith_.adds_constant(id_); }
  bool lead_bool() const { return id_ == 1; }

  void begin_round(u32 round) { round_ = round; }
  u32 round() const { return round_; }

  PartyMaterial& material() { return material_; }
  ResourceLedger& ledger() { return ledger_; }
  const ResourceLedger& ledger() const { return ledger_; }
  Channel& channel() { return channel_; }
  u64 comm_rounds() const { return channel_.rounds(); }

  const std::vector<OpenRecord>& open_log() const { return open_log_; }
  void clear_open_log() { open_log_.clear(); }

  std::vector<u128> open_arith(OpenKind kind, std::span<const u128> shares);
  std::vector<u8> open_bits(OpenKind kind, std::span<const u8> shares);
  // This party's bit of a fresh XOR sharing of zero (pairwise PRG seeds).
  u8 zero_share_bit();

  // Trivial sharings of public values.
  u128 arith_constant(u128 c) const { return lead_arith() ? modulus().reduce(c) : 0; }
  u8 bool_constant(u8 b) const { return lead_bool() ? (b & 1) : 0; }

 private:
  PartyId id_;
  SchemeId arith_;
  SchemeId bool_;
  PartyMaterial& material_;
  Channel channel_;
  ResourceLedger ledger_;
  std::vector<OpenRecord> open_log_;
  std::vector<std::optional<Prg>> pair_prgs_;
  u32 round_ = 0;
};

// Batched protocols. All parties call with equally long inputs; values are
// this party's raw shares (arithmetic under ctx.arith(), bits as 0/1 bytes).
namespace engine {

std::vector<u128> mul(PartyContext& ctx, std::span<const u128> x, std::span<const u128> y);
std::vector<u8> bit_and(PartyContext& ctx, std::span<const u8> x, std::span<const u8> y);
// Arithmetic share of each bit.
std::vector<u128> b2a(PartyContext& ctx, std::span<const u8> bits);
// out[v][i] is bit i of x[v], least significant first. x[v] < 2^n.
std::vector<std::vector<u8>> bit_decompose(PartyContext& ctx, std::span<const u128> x, unsigned n);
// Inverse of bit_decompose: sum_i bits[v][i] * 2^i.
std::vector<u128> bits_to_arith(PartyContext& ctx, const std::vector<std::vector<u8>>& bits);
// [x < y] and [x == y] for x, y < 2^n.
std::vector<u8> less_than(PartyContext& ctx, std::span<const u128> x, std::span<const u128> y, unsigned n);
std::vector<u8> equal(PartyContext& ctx, std::span<const u128> x, std::span<const u128> y, unsigned n);
// Re-randomises the share, exchanges it with the other parties and the
// System, and returns the public bit.
u8 reveal_flag(PartyContext& ctx, u8 share);

// Static cost of one batched call: material, communication rounds and the
// sequence of openings it performs.
struct OpCost {
  MaterialCounts material;
  u64 rounds = 0;
  std::vector<std::pair<OpenKind, u64>> opens;
  OpCost& operator+=(const OpCost& o);
};

OpCost cost_mul(std::size_t batch);
OpCost cost_and(std::size_t batch);
OpCost cost_b2a(std::size_t batch);
OpCost cost_decompose(const Modulus& m, unsigned n, std::size_t batch);
OpCost cost_bits_to_arith(std::size_t bits);
OpCost cost_less_than(const Modulus& m, unsigned n, std::size_t batch);
OpCost cost_equal(const Modulus& m, unsigned n, std::size_t batch);
OpCost cost_reveal_flag();

}  // namespace engine

// Single-value forms over typed shares.
Element open(PartyContext& ctx, const TypedShare& x, OpenKind kind = OpenKind::Explicit);
TypedShare beaver_mul(PartyContext& ctx, const TypedShare& x, const TypedShare& y);
TypedShare bool_and(PartyContext& ctx, const TypedShare& x, const TypedShare& y);
std::vector<TypedShare> bit_decompose(PartyContext& ctx, const TypedShare& x, unsigned n);
TypedShare bits_to_arith(PartyContext& ctx, const std::vector<TypedShare>& bits);
TypedShare secure_lt(PartyContext& ctx, const TypedShare& x, const TypedShare& y, unsigned n);
TypedShare secure_eq(PartyContext& ctx, const TypedShare& x, const TypedShare& y, unsigned n);

}  // namespace privmon
