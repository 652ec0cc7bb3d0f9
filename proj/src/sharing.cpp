#include "privmon/sharing.hpp"

namespace privmon {

const char* to_string(ShareType t) { return t == ShareType::Arith ? "arith" : "bool"; }

const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::AdditiveRing:
      return "additive";
    case SchemeKind::Shamir:
      return "shamir";
    case SchemeKind::BooleanXor:
      return "boolean";
  }
  return "?";
}

SchemeId::SchemeId(SchemeKind kind, const Modulus& m, unsigned parties, unsigned threshold)
    : kind_(kind), modulus_(m), parties_(parties), threshold_(threshold) {
  if (parties < 2) throw DomainError("a sharing scheme needs at least 2 parties");
}

SchemeId SchemeId::additive(const Modulus& m, unsigned parties) {
  return SchemeId(SchemeKind::AdditiveRing, m, parties, parties - 1);
}

SchemeId SchemeId::shamir(const Modulus& field, unsigned threshold, unsigned parties) {
  if (!field.is_prime()) throw DomainError("Shamir sharing needs a prime field");
  if (threshold < 1 || threshold >= parties) throw DomainError("Shamir threshold must be in [1, parties - 1]");
  if (field.prime_value() <= parties) throw DomainError("field too small for the evaluation points");
  SchemeId s(SchemeKind::Shamir, field, parties, threshold);
  std::vector<u128> points(threshold + 1);
  for (unsigned i = 0; i <= threshold; ++i) points[i] = i + 1;
  s.weights_ = std::make_shared<const std::vector<u128>>(lagrange_weights_at_zero(field, points));
  return s;
}

SchemeId SchemeId::boolean(unsigned parties) {
  return SchemeId(SchemeKind::BooleanXor, Modulus::power_of_two(1), parties, parties - 1);
}

std::size_t SchemeId::randomness_size() const {
  return kind_ == SchemeKind::Shamir ? threshold_ : parties_ - 1;
}

std::string SchemeId::to_string() const {
  std::string s = privmon::to_string(kind_);
  s += "(" + modulus_.to_string() + ", k=" + std::to_string(parties_);
  if (kind_ == SchemeKind::Shamir) s += ", t=" + std::to_string(threshold_);
  return s + ")";
}

u128 SchemeId::reconstruct(std::span<const u128> shares) const {
  if (shares.size() != parties_) {
    throw DomainError("expected " + std::to_string(parties_) + " shares, got " + std::to_string(shares.size()));
  }
  const Modulus& m = modulus_;
  u128 acc = 0;
  if (kind_ == SchemeKind::Shamir) {
    const auto& w = *weights_;
    for (std::size_t i = 0; i < w.size(); ++i) acc = m.add(acc, m.mul(w[i], shares[i]));
  } else {
    for (u128 s : shares) acc = m.add(acc, s);
  }
  return acc;
}

std::vector<u128> SchemeId::share_with(u128 v, std::span<const u128> randomness) const {
  const Modulus& m = modulus_;
  if (!m.contains(v)) throw DomainError("secret " + u128_to_string(v) + " outside " + m.to_string());
  if (randomness.size() != randomness_size()) throw DomainError("wrong amount of sharing randomness");
  for (u128 r : randomness) {
    if (!m.contains(r)) throw DomainError("sharing randomness outside the domain");
  }
  std::vector<u128> out(parties_);
  if (kind_ == SchemeKind::Shamir) {
    for (unsigned i = 0; i < parties_; ++i) {
      const u128 x = i + 1;
      u128 acc = 0;
      for (std::size_t j = randomness.size(); j-- > 0;) acc = m.add(m.mul(acc, x), randomness[j]);
      out[i] = m.add(m.mul(acc, x), v);
    }
    return out;
  }
  u128 last = v;
  for (unsigned i = 0; i + 1 < parties_; ++i) {
    out[i] = randomness[i];
    last = m.sub(last, randomness[i]);
  }
  out[parties_ - 1] = last;
  return out;
}

std::vector<u128> SchemeId::share(u128 v, Prg& rng) const {
  std::vector<u128> r(randomness_size());
  for (auto& x : r) x = rng.uniform(modulus_);
  return share_with(v, r);
}

namespace {

ShareVector wrap(const SchemeId& scheme, const std::vector<u128>& raw) {
  ShareVector sv{scheme, {}};
  sv.shares.reserve(raw.size());
  for (u128 s : raw) sv.shares.emplace_back(scheme.modulus(), s);
  return sv;
}

void check_domain(const Element& v, const SchemeId& scheme) {
  if (!(v.modulus() == scheme.modulus())) {
    throw DomainError("value in " + v.modulus().to_string() + " cannot be shared under " + scheme.to_string());
  }
}

void check_pair(const TypedShare& a, const TypedShare& b) {
  if (a.party != b.party) throw DomainError("shares belong to different parties");
  if (!(a.scheme == b.scheme) || a.stype != b.stype) throw DomainError("share scheme/type mismatch");
}

}  // namespace

ShareVector share(const Element& v, const SchemeId& scheme, Prg& rng) {
  check_domain(v, scheme);
  return wrap(scheme, scheme.share(v.value(), rng));
}

ShareVector share_with(const Element& v, const SchemeId& scheme, std::span<const u128> randomness) {
  check_domain(v, scheme);
  return wrap(scheme, scheme.share_with(v.value(), randomness));
}

Element reconstruct(const ShareVector& sv) {
  std::vector<u128> raw;
  raw.reserve(sv.shares.size());
  for (const auto& s : sv.shares) {
    if (!(s.modulus() == sv.scheme.modulus())) throw DomainError("share outside the scheme's domain");
    raw.push_back(s.value());
  }
  return Element(sv.scheme.modulus(), sv.scheme.reconstruct(raw));
}

Element reconstruct_subset(const SchemeId& scheme, std::span<const PartyId> parties,
                           std::span<const Element> shares) {
  if (parties.size() != shares.size()) throw DomainError("party/share count mismatch");
  const Modulus& m = scheme.modulus();
  if (scheme.kind() != SchemeKind::Shamir) {
    if (parties.size() != scheme.parties()) throw DomainError("scheme needs every share to reconstruct");
    u128 acc = 0;
    for (const auto& s : shares) acc = m.add(acc, s.value());
    return Element(m, acc);
  }
  if (parties.size() < scheme.threshold() + 1) throw DomainError("too few Shamir shares to reconstruct");
  std::vector<u128> points;
  for (PartyId p : parties) {
    if (p < 1 || p > scheme.parties()) throw DomainError("party id out of range");
    points.push_back(p);
  }
  const auto w = lagrange_weights_at_zero(m, points);
  u128 acc = 0;
  for (std::size_t i = 0; i < w.size(); ++i) acc = m.add(acc, m.mul(w[i], shares[i].value()));
  return Element(m, acc);
}

TypedShare typed_share(const ShareVector& sv, PartyId party) {
  if (party < 1 || party > sv.shares.size()) throw DomainError("party id out of range");
  return TypedShare{party, sv.shares[party - 1], sv.scheme.stype(), sv.scheme};
}

TypedShare local_add(const TypedShare& a, const TypedShare& b) {
  check_pair(a, b);
  return TypedShare{a.party, a.value + b.value, a.stype, a.scheme};
}

TypedShare local_sub(const TypedShare& a, const TypedShare& b) {
  check_pair(a, b);
  return TypedShare{a.party, a.value - b.value, a.stype, a.scheme};
}

TypedShare local_scale(const TypedShare& a, const Element& c) {
  if (a.stype != ShareType::Arith) throw DomainError("scalar multiplication needs an arithmetic share");
  return TypedShare{a.party, a.value * c, a.stype, a.scheme};
}

TypedShare local_add_const(const TypedShare& a, const Element& c) {
  if (a.stype != ShareType::Arith) throw DomainError("constant addition needs an arithmetic share");
  if (!a.scheme.adds_constant(a.party)) {
    if (!(c.modulus() == a.value.modulus())) throw DomainError("modulus mismatch");
    return a;
  }
  return TypedShare{a.party, a.value + c, a.stype, a.scheme};
}

}  // namespace privmon
