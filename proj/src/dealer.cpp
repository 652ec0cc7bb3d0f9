#include "privmon/dealer.hpp"

#include <fstream>
#include <sstream>

namespace privmon {

MaskMode mask_mode(const Modulus& m) {
  if (!m.is_prime()) return MaskMode::Ring;
  if (m.bits() >= kStatisticalSecurity + 3 + kMinStatisticalCompare) return MaskMode::Statistical;
  return m.prime_value() <= kPerfectMaxPrime ? MaskMode::Perfect : MaskMode::None;
}

unsigned edabit_width(const Modulus& m) {
  switch (mask_mode(m)) {
    case MaskMode::Ring:
      return m.bits();
    case MaskMode::Statistical:
      return m.bits() - 2;
    case MaskMode::Perfect:
      return static_cast<unsigned>(m.prime_value());
    case MaskMode::None:
      return 0;
  }
  return 0;
}

unsigned max_compare_width(const Modulus& m) {
  switch (mask_mode(m)) {
    case MaskMode::Ring:
      return m.bits() - 1;
    case MaskMode::Statistical:
      return m.bits() - 3 - kStatisticalSecurity;
    case MaskMode::Perfect:
      return m.bits() >= 2 ? m.bits() - 2 : 0;
    case MaskMode::None:
      return 0;
  }
  return 0;
}

unsigned max_decompose_width(const Modulus& m) {
  switch (mask_mode(m)) {
    case MaskMode::Ring:
      return m.bits();
    case MaskMode::Statistical:
      return m.bits() - 2 - kStatisticalSecurity;
    case MaskMode::Perfect:
      return m.bits() - 1;
    case MaskMode::None:
      return 0;
  }
  return 0;
}

namespace {

ShareVector to_vector(const SchemeId& s, const std::vector<u128>& raw) {
  ShareVector sv{s, {}};
  for (u128 v : raw) sv.shares.emplace_back(s.modulus(), v);
  return sv;
}

void require_arith(const SchemeId& s) {
  if (s.stype() != ShareType::Arith) throw DomainError("operation needs an arithmetic scheme");
}

// Draws the edaBit mask r for `width` under the arithmetic modulus.
u128 sample_mask(const Modulus& m, unsigned width, Prg& rng) {
  if (m.is_prime() && width == m.bits()) return rng.uniform(m);
  return rng.bits(width);
}

void check_edabit_width(const Modulus& m, unsigned width) {
  if (width == 0) throw DomainError("edaBit width must be positive");
  if (width > m.bits()) {
    throw DomainError("edaBit width " + std::to_string(width) + " exceeds " + m.to_string());
  }
}

}  // namespace

std::vector<BeaverTriple> issue_triples(std::size_t n, const SchemeId& scheme, Prg& rng) {
  require_arith(scheme);
  const Modulus& m = scheme.modulus();
  std::vector<BeaverTriple> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const u128 a = rng.uniform(m);
    const u128 b = rng.uniform(m);
    out.push_back(BeaverTriple{to_vector(scheme, scheme.share(a, rng)), to_vector(scheme, scheme.share(b, rng)),
                               to_vector(scheme, scheme.share(m.mul(a, b), rng))});
  }
  return out;
}

std::vector<BitTriple> issue_bit_triples(std::size_t n, unsigned parties, Prg& rng) {
  const SchemeId s = SchemeId::boolean(parties);
  std::vector<BitTriple> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const u128 a = rng.bit();
    const u128 b = rng.bit();
    out.push_back(BitTriple{to_vector(s, s.share(a, rng)), to_vector(s, s.share(b, rng)),
                            to_vector(s, s.share(a & b, rng))});
  }
  return out;
}

std::vector<DaBit> issue_dabits(std::size_t n, const SchemeId& scheme, Prg& rng) {
  require_arith(scheme);
  const SchemeId bs = SchemeId::boolean(scheme.parties());
  std::vector<DaBit> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const u128 b = rng.bit();
    out.push_back(DaBit{to_vector(scheme, scheme.share(b, rng)), to_vector(bs, bs.share(b, rng))});
  }
  return out;
}

std::vector<EdaBit> issue_edabits(std::size_t n, unsigned width, const SchemeId& scheme, Prg& rng) {
  require_arith(scheme);
  const Modulus& m = scheme.modulus();
  check_edabit_width(m, width);
  const SchemeId bs = SchemeId::boolean(scheme.parties());
  std::vector<EdaBit> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const u128 r = sample_mask(m, width, rng);
    EdaBit e{to_vector(scheme, scheme.share(r, rng)), {}};
    for (unsigned j = 0; j < width; ++j) e.r_bits.push_back(to_vector(bs, bs.share((r >> j) & 1, rng)));
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EdaBit> issue_one_hot_edabits(std::size_t n, const SchemeId& scheme, Prg& rng) {
  require_arith(scheme);
  const Modulus& m = scheme.modulus();
  if (mask_mode(m) != MaskMode::Perfect) {
    throw DomainError("one-hot masks need a prime of at most " + u128_to_string(kPerfectMaxPrime));
  }
  const SchemeId bs = SchemeId::boolean(scheme.parties());
  const unsigned p = static_cast<unsigned>(m.prime_value());
  std::vector<EdaBit> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const u128 r = rng.uniform(m);
    EdaBit e{to_vector(scheme, scheme.share(r, rng)), {}};
    for (unsigned v = 0; v < p; ++v) e.r_bits.push_back(to_vector(bs, bs.share(r == v ? 1 : 0, rng)));
    out.push_back(std::move(e));
  }
  return out;
}

// ---- ledger ----------------------------------------------------------------

void ResourceLedger::add_bytes(PartyId from, u64 bytes) {
  if (from >= bytes_sent_.size()) bytes_sent_.resize(from + 1, 0);
  bytes_sent_[from] += bytes;
}

std::string LedgerReport::csv_header() {
  return "scenario,size,triples,bit_triples,dabits,bytes_sent,compute_s,total_s,edabits";
}

std::string LedgerReport::csv_row() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << scenario << ',' << size << ',' << counts.triples << ',' << counts.bit_triples << ',' << counts.dabits
     << ',' << bytes_sent << ',' << compute_s << ',' << total_s << ',' << counts.edabits;
  return os.str();
}

LedgerReport ledger_report(const ResourceLedger& l, PartyId party) {
  LedgerReport r;
  r.counts = l.consumed();
  r.bytes_sent = party < l.bytes_sent().size() ? l.bytes_sent()[party] : 0;
  return r;
}

// ---- party stock -----------------------------------------------------------

template <class T>
void PartyMaterial::push(Stock<T>& s, u64 first_id, std::vector<T> items, const char* what) {
  std::lock_guard lock(mu_);
  if (first_id < s.next_push) {
    throw ProtocolError(std::string(what) + " #" + std::to_string(first_id) + " was already issued to party " +
                        std::to_string(party_));
  }
  if (first_id > s.next_push) {
    throw ProtocolError(std::string(what) + " stream has a gap before #" + std::to_string(first_id));
  }
  s.next_push += items.size();
  for (auto& it : items) s.items.push_back(std::move(it));
}

template <class T>
std::vector<T> PartyMaterial::take(Stock<T>& s, std::size_t n, const char* what) {
  std::lock_guard lock(mu_);
  if (s.items.size() < n) {
    throw MaterialExhausted(std::string(what) + " exhausted at party " + std::to_string(party_) + ": need " +
                            std::to_string(n) + ", have " + std::to_string(s.items.size()));
  }
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(std::move(s.items.front()));
    s.items.pop_front();
  }
  return out;
}

void PartyMaterial::push_triples(u64 first_id, std::vector<TripleShare> items) {
  push(triples_, first_id, std::move(items), "triple");
}
void PartyMaterial::push_bit_triples(u64 first_id, std::vector<BitTripleShare> items) {
  push(bit_triples_, first_id, std::move(items), "bit triple");
}
void PartyMaterial::push_dabits(u64 first_id, std::vector<DaBitShare> items) {
  push(dabits_, first_id, std::move(items), "daBit");
}
void PartyMaterial::push_edabits(u64 first_id, std::vector<EdaBitShare> items) {
  push(edabits_, first_id, std::move(items), "edaBit");
}

std::vector<TripleShare> PartyMaterial::take_triples(std::size_t n) { return take(triples_, n, "triple"); }
std::vector<BitTripleShare> PartyMaterial::take_bit_triples(std::size_t n) {
  return take(bit_triples_, n, "bit triple");
}
std::vector<DaBitShare> PartyMaterial::take_dabits(std::size_t n) { return take(dabits_, n, "daBit"); }
std::vector<EdaBitShare> PartyMaterial::take_edabits(std::size_t n) { return take(edabits_, n, "edaBit"); }

MaterialCounts PartyMaterial::available() const {
  std::lock_guard lock(mu_);
  return {triples_.items.size(), bit_triples_.items.size(), dabits_.items.size(), edabits_.items.size()};
}

MaterialCounts PartyMaterial::issued() const {
  std::lock_guard lock(mu_);
  return {triples_.next_push, bit_triples_.next_push, dabits_.next_push, edabits_.next_push};
}

void PartyMaterial::set_pair_seed(PartyId peer, const Seed& seed) {
  std::lock_guard lock(mu_);
  pair_seeds_[peer] = seed;
}

// ---- dealer ----------------------------------------------------------------

Dealer::Dealer(const SchemeId& arith, const Seed& seed)
    : arith_(arith), bool_(SchemeId::boolean(arith.parties())), rng_(seed) {
  require_arith(arith);
}

void Dealer::deal_pair_seeds(std::span<PartyMaterial* const> parties) {
  for (std::size_t i = 0; i < parties.size(); ++i) {
    for (std::size_t j = i + 1; j < parties.size(); ++j) {
      Seed s;
      rng_.fill(s);
      parties[i]->set_pair_seed(parties[j]->party(), s);
      parties[j]->set_pair_seed(parties[i]->party(), s);
    }
  }
}

void Dealer::deal(std::span<PartyMaterial* const> parties, const MaterialCounts& counts) {
  const unsigned k = arith_.parties();
  if (parties.size() != k) throw DomainError("dealer expects one stock per party");
  const Modulus& m = arith_.modulus();

  std::vector<std::vector<TripleShare>> triples(k);
  for (u64 i = 0; i < counts.triples; ++i) {
    const u128 a = rng_.uniform(m);
    const u128 b = rng_.uniform(m);
    auto sa = arith_.share(a, rng_);
    auto sb = arith_.share(b, rng_);
    auto sc = arith_.share(m.mul(a, b), rng_);
    for (unsigned p = 0; p < k; ++p) triples[p].push_back({sa[p], sb[p], sc[p]});
  }

  std::vector<std::vector<BitTripleShare>> bit_triples(k);
  for (u64 i = 0; i < counts.bit_triples; ++i) {
    const u128 a = rng_.bit();
    const u128 b = rng_.bit();
    auto sa = bool_.share(a, rng_);
    auto sb = bool_.share(b, rng_);
    auto sc = bool_.share(a & b, rng_);
    for (unsigned p = 0; p < k; ++p) {
      bit_triples[p].push_back({static_cast<u8>(sa[p]), static_cast<u8>(sb[p]), static_cast<u8>(sc[p])});
    }
  }

  std::vector<std::vector<DaBitShare>> dabits(k);
  for (u64 i = 0; i < counts.dabits; ++i) {
    const u128 b = rng_.bit();
    auto sa = arith_.share(b, rng_);
    auto sb = bool_.share(b, rng_);
    for (unsigned p = 0; p < k; ++p) dabits[p].push_back({sa[p], static_cast<u8>(sb[p])});
  }

  const unsigned width = edabit_width(m);
  const bool one_hot = mask_mode(m) == MaskMode::Perfect;
  std::vector<std::vector<EdaBitShare>> edabits(k);
  for (u64 i = 0; i < counts.edabits; ++i) {
    const u128 r = one_hot ? rng_.uniform(m) : sample_mask(m, width, rng_);
    auto sa = arith_.share(r, rng_);
    std::vector<EdaBitShare> item(k);
    for (unsigned p = 0; p < k; ++p) {
      item[p].arith = sa[p];
      item[p].bits.resize(width);
    }
    for (unsigned j = 0; j < width; ++j) {
      auto sb = bool_.share(one_hot ? (r == j ? 1 : 0) : (r >> j) & 1, rng_);
      for (unsigned p = 0; p < k; ++p) item[p].bits[j] = static_cast<u8>(sb[p]);
    }
    for (unsigned p = 0; p < k; ++p) edabits[p].push_back(std::move(item[p]));
  }

  for (unsigned p = 0; p < k; ++p) {
    parties[p]->push_triples(issued_.triples, std::move(triples[p]));
    parties[p]->push_bit_triples(issued_.bit_triples, std::move(bit_triples[p]));
    parties[p]->push_dabits(issued_.dabits, std::move(dabits[p]));
    parties[p]->push_edabits(issued_.edabits, std::move(edabits[p]));
  }
  issued_ += counts;
}

// ---- material files --------------------------------------------------------

namespace {

constexpr char kMagic[] = "PMAT1\n";

std::string seed_hex(const Seed& s) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (u8 b : s) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Seed parse_seed_hex(const std::string& hex) {
  if (hex.size() != 64) throw ProtocolError("bad seed in material file");
  Seed s{};
  for (std::size_t i = 0; i < 32; ++i) s[i] = static_cast<u8>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
  return s;
}

void put(std::ostream& os, u128 v, std::size_t width) {
  std::vector<u8> buf(width);
  encode_be(v, buf);
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

u128 get(std::istream& is, std::size_t width) {
  std::vector<u8> buf(width);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!is) throw ProtocolError("material file truncated");
  return decode_be(buf);
}

}  // namespace

void write_material_file(const std::string& path, const SchemeId& arith, PartyMaterial& material) {
  const MaterialCounts avail = material.available();
  const MaterialCounts issued = material.issued();
  const Modulus& m = arith.modulus();
  const std::size_t w = m.byte_width();
  const unsigned ew = edabit_width(m);

  auto triples = material.take_triples(avail.triples);
  auto bit_triples = material.take_bit_triples(avail.bit_triples);
  auto dabits = material.take_dabits(avail.dabits);
  auto edabits = material.take_edabits(avail.edabits);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write material file " + path);
  os << kMagic;
  os << "scheme=" << to_string(arith.kind()) << " modulus=" << m.to_string() << " parties=" << arith.parties()
     << " threshold=" << arith.threshold() << " party=" << material.party() << " edabit_width=" << ew
     << " triples=" << avail.triples << " first_triple=" << issued.triples - avail.triples
     << " bit_triples=" << avail.bit_triples << " first_bit_triple=" << issued.bit_triples - avail.bit_triples
     << " dabits=" << avail.dabits << " first_dabit=" << issued.dabits - avail.dabits
     << " edabits=" << avail.edabits << " first_edabit=" << issued.edabits - avail.edabits;
  for (const auto& [peer, seed] : material.pair_seeds()) os << " seed." << peer << '=' << seed_hex(seed);
  os << '\n';
  for (const auto& t : triples) {
    put(os, t.a, w);
    put(os, t.b, w);
    put(os, t.c, w);
  }
  for (const auto& t : bit_triples) {
    put(os, t.a, 1);
    put(os, t.b, 1);
    put(os, t.c, 1);
  }
  for (const auto& d : dabits) {
    put(os, d.arith, w);
    put(os, d.bit, 1);
  }
  for (const auto& e : edabits) {
    put(os, e.arith, w);
    for (u8 b : e.bits) put(os, b, 1);
  }
  if (!os) throw Error("failed writing material file " + path);
}

void read_material_file(const std::string& path, const SchemeId& arith, PartyMaterial& material) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open material file " + path);
  std::string magic(sizeof(kMagic) - 1, '\0');
  is.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (magic != kMagic) throw ProtocolError(path + ": not a material file");
  std::string header;
  std::getline(is, header);
  std::map<std::string, std::string> kv;
  std::istringstream hs(header);
  std::string tok;
  while (hs >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ProtocolError(path + ": malformed header token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ProtocolError(path + ": header lacks '" + key + "'");
    return it->second;
  };
  const Modulus& m = arith.modulus();
  if (need("scheme") != to_string(arith.kind()) || need("modulus") != m.to_string() ||
      std::stoul(need("parties")) != arith.parties() || std::stoul(need("threshold")) != arith.threshold()) {
    throw ProtocolError(path + ": material was issued for a different scheme");
  }
  if (std::stoul(need("party")) != material.party()) {
    throw ProtocolError(path + ": material belongs to party " + need("party"));
  }
  const unsigned ew = static_cast<unsigned>(std::stoul(need("edabit_width")));
  if (ew != edabit_width(m)) throw ProtocolError(path + ": unexpected edaBit width");
  const std::size_t w = m.byte_width();
  auto count = [&](const std::string& key) { return static_cast<u64>(std::stoull(need(key))); };

  auto check = [&](u128 v) {
    if (!m.contains(v)) throw ProtocolError(path + ": element out of range");
    return v;
  };
  auto bit = [&](u128 v) {
    if (v > 1) throw ProtocolError(path + ": bit out of range");
    return static_cast<u8>(v);
  };

  std::vector<TripleShare> triples(count("triples"));
  for (auto& t : triples) {
    t.a = check(get(is, w));
    t.b = check(get(is, w));
    t.c = check(get(is, w));
  }
  std::vector<BitTripleShare> bit_triples(count("bit_triples"));
  for (auto& t : bit_triples) {
    t.a = bit(get(is, 1));
    t.b = bit(get(is, 1));
    t.c = bit(get(is, 1));
  }
  std::vector<DaBitShare> dabits(count("dabits"));
  for (auto& d : dabits) {
    d.arith = check(get(is, w));
    d.bit = bit(get(is, 1));
  }
  std::vector<EdaBitShare> edabits(count("edabits"));
  for (auto& e : edabits) {
    e.arith = check(get(is, w));
    e.bits.resize(ew);
    for (auto& b : e.bits) b = bit(get(is, 1));
  }
  material.push_triples(count("first_triple"), std::move(triples));
  material.push_bit_triples(count("first_bit_triple"), std::move(bit_triples));
  material.push_dabits(count("first_dabit"), std::move(dabits));
  material.push_edabits(count("first_edabit"), std::move(edabits));
  for (const auto& [key, value] : kv) {
    if (key.rfind("seed.", 0) == 0) material.set_pair_seed(static_cast<PartyId>(std::stoul(key.substr(5))), parse_seed_hex(value));
  }
}

}  // namespace privmon
