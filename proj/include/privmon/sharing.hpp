#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "privmon/algebra.hpp"
#include "privmon/prg.hpp"

namespace privmon {

enum class SchemeKind : u8 { AdditiveRing = 0, Shamir = 1, BooleanXor = 2 };
enum class ShareType : u8 { Arith = 0, Bool = 1 };

const char* to_string(ShareType t);
const char* to_string(SchemeKind k);

// A sharing system for k parties. Shamir uses evaluation points alpha_i = i.
class SchemeId {
 public:
  static SchemeId additive(const Modulus& m, unsigned parties);
  static SchemeId shamir(const Modulus& field, unsigned threshold, unsigned parties);
  static SchemeId boolean(unsigned parties);

  SchemeKind kind() const { return kind_; }
  const Modulus& modulus() const { return modulus_; }
  unsigned parties() const { return parties_; }
  // Largest coalition the scheme hides the secret from.
  unsigned threshold() const { return threshold_; }
  ShareType stype() const { return kind_ == SchemeKind::BooleanXor ? ShareType::Bool : ShareType::Arith; }

  // Whether `party` adds a public constant to its share. Shamir shares of a
  // constant are the constant itself, so every party adds; additive and XOR
  // schemes designate party 1.
  bool adds_constant(PartyId party) const { return kind_ == SchemeKind::Shamir || party == 1; }

  // Secret from a full share vector (index 0 is party 1). Shamir interpolates
  // the first t+1 shares.
  u128 reconstruct(std::span<const u128> shares) const;
  // Splits v using caller-supplied randomness: k-1 leading shares for
  // additive/XOR, t polynomial coefficients (degree 1..t) for Shamir.
  std::vector<u128> share_with(u128 v, std::span<const u128> randomness) const;
  std::vector<u128> share(u128 v, Prg& rng) const;
  std::size_t randomness_size() const;

  std::string to_string() const;

  friend bool operator==(const SchemeId& a, const SchemeId& b) {
    return a.kind_ == b.kind_ && a.modulus_ == b.modulus_ && a.parties_ == b.parties_ &&
           a.threshold_ == b.threshold_;
  }

 private:
  SchemeId(SchemeKind kind, const Modulus& m, unsigned parties, unsigned threshold);

  SchemeKind kind_;
  Modulus modulus_;
  unsigned parties_;
  unsigned threshold_;
  std::shared_ptr<const std::vector<u128>> weights_;  // Shamir only
};

struct ShareVector {
  SchemeId scheme;
  std::vector<Element> shares;
};

struct TypedShare {
  PartyId party;
  Element value;
  ShareType stype;
  SchemeId scheme;
};

ShareVector share(const Element& v, const SchemeId& scheme, Prg& rng);
ShareVector share_with(const Element& v, const SchemeId& scheme, std::span<const u128> randomness);
Element reconstruct(const ShareVector& sv);
// Reconstruction from any t+1 Shamir shares (or all k for other schemes).
Element reconstruct_subset(const SchemeId& scheme, std::span<const PartyId> parties,
                           std::span<const Element> shares);
TypedShare typed_share(const ShareVector& sv, PartyId party);

TypedShare local_add(const TypedShare& a, const TypedShare& b);
TypedShare local_sub(const TypedShare& a, const TypedShare& b);
TypedShare local_scale(const TypedShare& a, const Element& c);
TypedShare local_add_const(const TypedShare& a, const Element& c);

}  // namespace privmon
