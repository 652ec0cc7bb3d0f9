#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "privmon/sharing.hpp"

namespace privmon {

// How comparison and bit decomposition mask a secret before opening it.
//   Ring:        Z_{2^w}; r uniform over the ring, perfectly hiding.
//   Statistical: prime field wide enough for 16-bit comparisons under a
//                40-bit security slack; r uniform below 2^(bits-2), so the
//                sum never wraps p and hides the secret up to 2^-40.
//   Perfect:     prime at most kPerfectMaxPrime; r uniform mod p with a
//                one-hot Boolean side (bit v set iff r == v), so any bit of
//                c - r mod p is a local XOR.
//   None:        primes in between; no comparisons or decompositions.
enum class MaskMode : u8 { Ring, Statistical, Perfect, None };

inline constexpr unsigned kStatisticalSecurity = 40;
inline constexpr unsigned kMinStatisticalCompare = 16;
inline constexpr u128 kPerfectMaxPrime = 4096;

MaskMode mask_mode(const Modulus& m);
// Width of every edaBit issued for this modulus (p for Perfect, 0 for None).
unsigned edabit_width(const Modulus& m);
// Largest operand width (in bits) LT/EQ accept.
unsigned max_compare_width(const Modulus& m);
// Largest width bit_decompose accepts.
unsigned max_decompose_width(const Modulus& m);

struct BeaverTriple {
  ShareVector a, b, c;
};

struct BitTriple {
  ShareVector a, b, c;
};

struct DaBit {
  ShareVector b_arith;
  ShareVector b_bool;
};

struct EdaBit {
  ShareVector r_arith;
  std::vector<ShareVector> r_bits;  // least significant first
};

std::vector<BeaverTriple> issue_triples(std::size_t n, const SchemeId& scheme, Prg& rng);
std::vector<BitTriple> issue_bit_triples(std::size_t n, unsigned parties, Prg& rng);
std::vector<DaBit> issue_dabits(std::size_t n, const SchemeId& scheme, Prg& rng);
std::vector<EdaBit> issue_edabits(std::size_t n, unsigned width, const SchemeId& scheme, Prg& rng);
// Perfect mode only: r uniform mod p, r_bits[v] a sharing of [r == v].
std::vector<EdaBit> issue_one_hot_edabits(std::size_t n, const SchemeId& scheme, Prg& rng);

// One party's slice of each correlation.
struct TripleShare {
  u128 a, b, c;
};
struct BitTripleShare {
  u8 a, b, c;
};
struct DaBitShare {
  u128 arith;
  u8 bit;
};
struct EdaBitShare {
  u128 arith;
  std::vector<u8> bits;
};

struct MaterialCounts {
  u64 triples = 0;
  u64 bit_triples = 0;
  u64 dabits = 0;
  u64 edabits = 0;

  MaterialCounts& operator+=(const MaterialCounts& o) {
    triples += o.triples;
    bit_triples += o.bit_triples;
    dabits += o.dabits;
    edabits += o.edabits;
    return *this;
  }
  friend MaterialCounts operator-(MaterialCounts a, const MaterialCounts& b) {
    a.triples -= b.triples;
    a.bit_triples -= b.bit_triples;
    a.dabits -= b.dabits;
    a.edabits -= b.edabits;
    return a;
  }
  friend bool operator==(const MaterialCounts&, const MaterialCounts&) = default;
};

// Consumption counters and traffic for one party. Counters only grow.
class ResourceLedger {
 public:
  explicit ResourceLedger(unsigned parties = 0) : bytes_sent_(parties + 1, 0) {}

  const MaterialCounts& consumed() const { return consumed_; }
  void add_consumed(const MaterialCounts& c) { consumed_ += c; }
  void add_bytes(PartyId from, u64 bytes);
  // Indexed by sender id (0 is the System).
  const std::vector<u64>& bytes_sent() const { return bytes_sent_; }

 private:
  MaterialCounts consumed_;
  std::vector<u64> bytes_sent_;
};

struct LedgerReport {
  std::string scenario;
  u64 size = 0;
  MaterialCounts counts;
  u64 bytes_sent = 0;
  double compute_s = 0;
  double total_s = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

LedgerReport ledger_report(const ResourceLedger& l, PartyId party = 1);

// Per-party FIFO stock of dealer material. The dealer pushes, the party's
// engine takes; each kind is numbered so replays and gaps are rejected.
class PartyMaterial {
 public:
  PartyMaterial() = default;
  PartyMaterial(PartyId party, unsigned parties) : party_(party), parties_(parties) {}
  PartyMaterial(const PartyMaterial&) = delete;
  PartyMaterial& operator=(const PartyMaterial&) = delete;

  PartyId party() const { return party_; }
  unsigned parties() const { return parties_; }

  void push_triples(u64 first_id, std::vector<TripleShare> items);
  void push_bit_triples(u64 first_id, std::vector<BitTripleShare> items);
  void push_dabits(u64 first_id, std::vector<DaBitShare> items);
  void push_edabits(u64 first_id, std::vector<EdaBitShare> items);

  // Throw MaterialExhausted when the stock is short.
  std::vector<TripleShare> take_triples(std::size_t n);
  std::vector<BitTripleShare> take_bit_triples(std::size_t n);
  std::vector<DaBitShare> take_dabits(std::size_t n);
  std::vector<EdaBitShare> take_edabits(std::size_t n);

  MaterialCounts available() const;
  MaterialCounts issued() const;

  void set_pair_seed(PartyId peer, const Seed& seed);
  const std::map<PartyId, Seed>& pair_seeds() const { return pair_seeds_; }

 private:
  template <class T>
  struct Stock {
    std::deque<T> items;
    u64 next_push = 0;
  };
  template <class T>
  void push(Stock<T>& s, u64 first_id, std::vector<T> items, const char* what);
  template <class T>
  std::vector<T> take(Stock<T>& s, std::size_t n, const char* what);

  PartyId party_ = 0;
  unsigned parties_ = 0;
  mutable std::mutex mu_;
  Stock<TripleShare> triples_;
  Stock<BitTripleShare> bit_triples_;
  Stock<DaBitShare> dabits_;
  Stock<EdaBitShare> edabits_;
  std::map<PartyId, Seed> pair_seeds_;
};

// Trusted dealer for one session: splits fresh correlations into the parties'
// stocks.
class Dealer {
 public:
  Dealer(const SchemeId& arith, const Seed& seed);

  const SchemeId& arith_scheme() const { return arith_; }
  unsigned parties() const { return arith_.parties(); }

  // Pairwise seeds for XOR zero-sharings; call once per session.
  void deal_pair_seeds(std::span<PartyMaterial* const> parties);
  void deal(std::span<PartyMaterial* const> parties, const MaterialCounts& counts);
  const MaterialCounts& issued() const { return issued_; }

 private:
  SchemeId arith_;
  SchemeId bool_;
  Prg rng_;
  MaterialCounts issued_;
};

// Material file: "PMAT1\n", one header line of key=value pairs, then items in
// wire element encoding (see README).
void write_material_file(const std::string& path, const SchemeId& arith, PartyMaterial& material);
void read_material_file(const std::string& path, const SchemeId& arith, PartyMaterial& material);

}  // namespace privmon
