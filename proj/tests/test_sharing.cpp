#include <gtest/gtest.h>

#include <map>

#include "privmon/sharing.hpp"

namespace privmon {
namespace {

Element el(const Modulus& m, u128 v) { return Element(m, v); }

ShareVector vec(const SchemeId& s, std::vector<u128> vs) {
  ShareVector sv{s, {}};
  const Modulus m = s.stype() == ShareType::Bool ? Modulus::power_of_two(1) : s.modulus();
  for (auto v : vs) sv.shares.push_back(el(m, v));
  return sv;
}

TEST(Sharing, Examples) {
  const auto z256 = Modulus::power_of_two(8);
  const auto f7 = Modulus::prime(7);
  const auto add = SchemeId::additive(z256, 3);
  const auto sh = SchemeId::shamir(f7, 1, 3);
  const auto xr = SchemeId::boolean(3);

  const auto a = share_with(el(z256, 5), add, std::vector<u128>{17, 200});
  EXPECT_EQ(a.shares[2].value(), 44u);
  EXPECT_EQ(reconstruct(vec(add, {17, 200, 44})).value(), 5u);

  const auto s = share_with(el(f7, 4), sh, std::vector<u128>{0});
  for (const auto& x : s.shares) EXPECT_EQ(x.value(), 4u);
  EXPECT_EQ(reconstruct(vec(sh, {4, 6, 1})).value(), 2u);

  EXPECT_EQ(reconstruct(vec(xr, {1, 0, 0})).value(), 1u);
  EXPECT_EQ(reconstruct(vec(xr, {1, 1, 0})).value(), 0u);
}

TEST(Sharing, LocalOperationExamples) {
  const auto z256 = Modulus::power_of_two(8);
  const auto f7 = Modulus::prime(7);
  const auto add = SchemeId::additive(z256, 3);
  const auto sh = SchemeId::shamir(f7, 1, 3);
  const auto xr = SchemeId::boolean(3);
  const auto b1 = Modulus::power_of_two(1);

  auto ts = [](PartyId p, const Element& v, const SchemeId& s) { return TypedShare{p, v, s.stype(), s}; };
  EXPECT_EQ(local_add(ts(1, el(b1, 1), xr), ts(1, el(b1, 1), xr)).value.value(), 0u);
  EXPECT_EQ(local_add(ts(1, el(z256, 200), add), ts(1, el(z256, 100), add)).value.value(), 44u);
  EXPECT_EQ(local_add(ts(2, el(f7, 4), sh), ts(2, el(f7, 6), sh)).value.value(), 3u);
  EXPECT_EQ(local_scale(ts(1, el(z256, 17), add), el(z256, 2)).value.value(), 34u);
  EXPECT_EQ(local_scale(ts(1, el(f7, 4), sh), el(f7, 0)).value.value(), 0u);
  EXPECT_EQ(local_scale(ts(1, el(f7, 4), sh), el(f7, 2)).value.value(), 1u);
  EXPECT_EQ(local_add_const(ts(1, el(z256, 17), add), el(z256, 5)).value.value(), 22u);
  EXPECT_EQ(local_add_const(ts(2, el(z256, 17), add), el(z256, 5)).value.value(), 17u);
  for (PartyId p = 1; p <= 3; ++p) {
    EXPECT_EQ(local_add_const(ts(p, el(f7, 4), sh), el(f7, 5)).value.value(), 2u);
    EXPECT_EQ(local_add_const(ts(p, el(f7, 4), sh), el(f7, 0)).value.value(), 4u);
  }
  EXPECT_THROW(local_add(ts(1, el(f7, 1), sh), ts(2, el(f7, 1), sh)), DomainError);
}

TEST(Sharing, RejectsBadSchemes) {
  EXPECT_THROW(SchemeId::shamir(Modulus::prime(7), 3, 3), DomainError);
  EXPECT_THROW(SchemeId::shamir(Modulus::prime(7), 0, 3), DomainError);
  EXPECT_THROW(SchemeId::shamir(Modulus::power_of_two(8), 1, 3), DomainError);
  EXPECT_THROW(SchemeId::shamir(Modulus::prime(3), 1, 3), DomainError);  // needs k distinct nonzero points
  EXPECT_THROW(SchemeId::additive(Modulus::prime(7), 1), DomainError);
  EXPECT_THROW(SchemeId::boolean(1), DomainError);
}

std::vector<SchemeId> small_schemes() {
  return {SchemeId::additive(Modulus::power_of_two(8), 3), SchemeId::additive(Modulus::power_of_two(4), 3),
          SchemeId::additive(Modulus::prime(17), 4),       SchemeId::shamir(Modulus::prime(17), 1, 3),
          SchemeId::shamir(Modulus::prime(257), 2, 5),     SchemeId::boolean(3),
          SchemeId::shamir(Modulus::default_prime(), 3, 7)};
}

TEST(Sharing, ReconstructsRandomSecrets) {
  Prg rng(1, "sharing");
  for (const auto& s : small_schemes()) {
    const Modulus m = s.stype() == ShareType::Bool ? Modulus::power_of_two(1) : s.modulus();
    for (int i = 0; i < 10'000; ++i) {
      const u128 v = rng.uniform(m);
      ASSERT_EQ(s.reconstruct(s.share(v, rng)), v) << s.to_string();
    }
  }
}

TEST(Sharing, ShamirAnySubsetOfThresholdPlusOne) {
  Prg rng(2, "subset");
  const auto s = SchemeId::shamir(Modulus::prime(257), 2, 5);
  for (int i = 0; i < 200; ++i) {
    const auto sv = share(el(s.modulus(), rng.uniform(s.modulus())), s, rng);
    for (PartyId a = 1; a <= 5; ++a) {
      for (PartyId b = a + 1; b <= 5; ++b) {
        for (PartyId c = b + 1; c <= 5; ++c) {
          const std::vector<PartyId> ids{a, b, c};
          const std::vector<Element> xs{sv.shares[a - 1], sv.shares[b - 1], sv.shares[c - 1]};
          ASSERT_EQ(reconstruct_subset(s, ids, xs), reconstruct(sv));
        }
      }
    }
  }
  const std::vector<PartyId> two{1, 2};
  const auto sv = share(el(s.modulus(), 9), s, rng);
  EXPECT_THROW(reconstruct_subset(s, two, std::vector<Element>{sv.shares[0], sv.shares[1]}), DomainError);
}

TEST(Sharing, HomomorphicExhaustivelyOverF7) {
  const auto f7 = Modulus::prime(7);
  Prg rng(3, "homomorphism");
  for (const auto& s : {SchemeId::shamir(f7, 1, 3), SchemeId::additive(f7, 3)}) {
    for (u128 x = 0; x < 7; ++x) {
      for (u128 y = 0; y < 7; ++y) {
        const auto a = share(el(f7, x), s, rng);
        const auto b = share(el(f7, y), s, rng);
        ShareVector sum{s, {}}, scaled{s, {}}, shifted{s, {}};
        for (PartyId p = 1; p <= 3; ++p) {
          const auto ta = typed_share(a, p), tb = typed_share(b, p);
          sum.shares.push_back(local_add(ta, tb).value);
          scaled.shares.push_back(local_scale(ta, el(f7, y)).value);
          shifted.shares.push_back(local_add_const(ta, el(f7, y)).value);
        }
        ASSERT_EQ(reconstruct(sum).value(), (x + y) % 7);
        ASSERT_EQ(reconstruct(scaled).value(), (x * y) % 7);
        ASSERT_EQ(reconstruct(shifted).value(), (x + y) % 7);
      }
    }
  }
}

// Every share vector a coalition can see, over all dealer randomness: for a
// private scheme each joint value occurs equally often whatever the secret.
std::map<std::vector<u128>, u64> coalition_counts(const SchemeId& s, u128 v, const std::vector<PartyId>& coalition) {
  const u128 domain = s.stype() == ShareType::Bool ? 2 : (s.modulus().is_prime() ? s.modulus().prime_value()
                                                                                  : s.modulus().mask() + 1);
  const std::size_t nr = s.randomness_size();
  std::map<std::vector<u128>, u64> counts;
  std::vector<u128> r(nr, 0);
  while (true) {
    const auto sh = s.share_with(v, r);
    std::vector<u128> seen;
    for (auto p : coalition) seen.push_back(sh[p - 1]);
    ++counts[seen];
    std::size_t i = 0;
    while (i < nr && ++r[i] == domain) r[i++] = 0;
    if (i == nr) break;
  }
  return counts;
}

TEST(Sharing, CoalitionSharesAreIndependentOfTheSecret) {
  struct Case {
    SchemeId scheme;
    std::vector<std::vector<PartyId>> coalitions;
  };
  const std::vector<Case> cases = {
      {SchemeId::shamir(Modulus::prime(17), 1, 3), {{1}, {2}, {3}}},
      {SchemeId::additive(Modulus::power_of_two(4), 3), {{1}, {3}, {1, 2}, {2, 3}}},
      {SchemeId::additive(Modulus::prime(17), 3), {{1, 3}}},
      {SchemeId::boolean(3), {{1}, {1, 2}, {2, 3}}},
  };
  for (const auto& c : cases) {
    const u128 domain = c.scheme.stype() == ShareType::Bool ? 2 : 16;
    for (const auto& coalition : c.coalitions) {
      const auto ref = coalition_counts(c.scheme, 0, coalition);
      for (u128 v = 1; v < domain; ++v) {
        ASSERT_EQ(coalition_counts(c.scheme, v, coalition), ref) << c.scheme.to_string() << " v=" << u128_to_string(v);
      }
      u64 lo = ~u64{0}, hi = 0;
      for (const auto& [k, n] : ref) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      EXPECT_EQ(lo, hi) << "coalition view is not uniform";
    }
  }
}

TEST(Sharing, ShamirThresholdPlusOneLearnsTheSecret) {
  const auto s = SchemeId::shamir(Modulus::prime(17), 1, 3);
  EXPECT_NE(coalition_counts(s, 0, {1, 2}), coalition_counts(s, 1, {1, 2}));
}

}  // namespace
}  // namespace privmon
