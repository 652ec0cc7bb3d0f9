#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "privmon/dealer.hpp"

namespace privmon {
namespace {

u128 open_vec(const ShareVector& sv) { return reconstruct(sv).value(); }

u128 compose(const std::vector<ShareVector>& bits) {
  u128 acc = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) acc |= open_vec(bits[i]) << i;
  return acc;
}

TEST(Dealer, CorrelationsHoldAfterReconstruction) {
  Prg rng(1, "dealer");
  for (const auto& s : {SchemeId::shamir(Modulus::prime(17), 1, 3), SchemeId::additive(Modulus::power_of_two(8), 3),
                        SchemeId::shamir(Modulus::default_prime(), 2, 5)}) {
    const Modulus& m = s.modulus();
    for (const auto& t : issue_triples(1000, s, rng)) {
      ASSERT_EQ(open_vec(t.c), m.mul(open_vec(t.a), open_vec(t.b)));
    }
    for (const auto& t : issue_bit_triples(1000, s.parties(), rng)) {
      ASSERT_EQ(open_vec(t.c), open_vec(t.a) & open_vec(t.b));
    }
    for (const auto& d : issue_dabits(1000, s, rng)) {
      ASSERT_LE(open_vec(d.b_bool), 1u);
      ASSERT_EQ(open_vec(d.b_arith), open_vec(d.b_bool));
    }
    const unsigned w = edabit_width(m);
    if (mask_mode(m) == MaskMode::Perfect) {
      for (const auto& e : issue_one_hot_edabits(1000, s, rng)) {
        ASSERT_EQ(e.r_bits.size(), w);
        const u128 r = open_vec(e.r_arith);
        for (unsigned v = 0; v < w; ++v) ASSERT_EQ(open_vec(e.r_bits[v]), r == v ? 1u : 0u);
      }
      continue;
    }
    for (const auto& e : issue_edabits(1000, w, s, rng)) {
      ASSERT_EQ(e.r_bits.size(), w);
      ASSERT_EQ(open_vec(e.r_arith), m.reduce(compose(e.r_bits)));
    }
  }
  EXPECT_THROW(issue_one_hot_edabits(1, SchemeId::shamir(Modulus::default_prime(), 1, 3), rng), DomainError);
  EXPECT_TRUE(issue_triples(0, SchemeId::shamir(Modulus::prime(17), 1, 3), rng).empty());
  EXPECT_THROW(issue_triples(1, SchemeId::boolean(3), rng), DomainError);
}

TEST(Dealer, OneHotMaskIsUniform) {
  Prg rng(6, "onehot");
  const auto s = SchemeId::shamir(Modulus::prime(17), 1, 3);
  std::vector<u64> counts(17);
  for (const auto& e : issue_one_hot_edabits(17'000, s, rng)) ++counts[open_vec(e.r_arith)];
  for (auto c : counts) EXPECT_NEAR(static_cast<double>(c), 1000.0, 150.0);
}

TEST(Dealer, EdabitWidthOneIsADabit) {
  Prg rng(2, "edabit");
  const auto s = SchemeId::shamir(Modulus::prime(17), 1, 3);
  for (const auto& e : issue_edabits(200, 1, s, rng)) {
    ASSERT_EQ(open_vec(e.r_arith), open_vec(e.r_bits[0]));
  }
}

// Pearson statistic of counts against the uniform distribution.
double chi_square(const std::vector<u64>& counts) {
  double n = 0;
  for (auto c : counts) n += static_cast<double>(c);
  const double e = n / static_cast<double>(counts.size());
  double x = 0;
  for (auto c : counts) x += (static_cast<double>(c) - e) * (static_cast<double>(c) - e) / e;
  return x;
}

TEST(Dealer, SinglePartyTripleSharesAreUniform) {
  Prg rng(3, "chi");
  const auto s = SchemeId::shamir(Modulus::prime(17), 1, 3);
  std::vector<u64> a(17), b(17), c(17);
  for (const auto& t : issue_triples(100'000, s, rng)) {
    ++a[t.a.shares[1].value()];
    ++b[t.b.shares[1].value()];
    ++c[t.c.shares[1].value()];
  }
  // 16 degrees of freedom; 39.25 is the 0.001 critical value
  EXPECT_LT(chi_square(a), 39.25);
  EXPECT_LT(chi_square(b), 39.25);
  EXPECT_LT(chi_square(c), 39.25);
}

struct Stocks {
  std::vector<std::unique_ptr<PartyMaterial>> mats;
  std::vector<PartyMaterial*> raw;
  explicit Stocks(unsigned k) {
    for (PartyId p = 1; p <= k; ++p) {
      mats.push_back(std::make_unique<PartyMaterial>(p, k));
      raw.push_back(mats.back().get());
    }
  }
};

TEST(Dealer, StocksAreConsistentAcrossParties) {
  const auto s = SchemeId::shamir(Modulus::prime(257), 1, 3);
  Dealer dealer(s, Prg::derive_seed(4, "d"));
  Stocks st(3);
  dealer.deal_pair_seeds(st.raw);
  dealer.deal(st.raw, {5, 6, 7, 8});
  EXPECT_EQ(dealer.issued(), (MaterialCounts{5, 6, 7, 8}));
  for (auto* p : st.raw) EXPECT_EQ(p->available(), (MaterialCounts{5, 6, 7, 8}));

  std::vector<std::vector<TripleShare>> tr;
  std::vector<std::vector<EdaBitShare>> ed;
  for (auto* p : st.raw) {
    tr.push_back(p->take_triples(5));
    ed.push_back(p->take_edabits(8));
  }
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<u128> a, b, c;
    for (unsigned p = 0; p < 3; ++p) {
      a.push_back(tr[p][i].a);
      b.push_back(tr[p][i].b);
      c.push_back(tr[p][i].c);
    }
    EXPECT_EQ(s.reconstruct(c), s.modulus().mul(s.reconstruct(a), s.reconstruct(b)));
  }
  // F_257 is a perfect-mode field: the Boolean side is one-hot
  for (std::size_t i = 0; i < 8; ++i) {
    std::vector<u128> r;
    for (unsigned p = 0; p < 3; ++p) r.push_back(ed[p][i].arith);
    ASSERT_EQ(ed[0][i].bits.size(), 257u);
    std::vector<u128> hot;
    for (std::size_t j = 0; j < 257; ++j) {
      u8 bit = 0;
      for (unsigned p = 0; p < 3; ++p) bit ^= ed[p][i].bits[j];
      if (bit) hot.push_back(j);
    }
    EXPECT_EQ(hot, std::vector<u128>{s.reconstruct(r)});
  }
  // pair seeds agree both ways and differ between pairs
  EXPECT_EQ(st.raw[0]->pair_seeds().at(2), st.raw[1]->pair_seeds().at(1));
  EXPECT_NE(st.raw[0]->pair_seeds().at(2), st.raw[0]->pair_seeds().at(3));
}

TEST(Dealer, ConsumedMaterialCannotBeReused) {
  PartyMaterial m(1, 3);
  m.push_triples(0, {{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.take_triples(1)[0].a, 1u);
  EXPECT_EQ(m.take_triples(1)[0].a, 4u);
  EXPECT_THROW(m.take_triples(1), MaterialExhausted);
  // replaying an already issued id, or skipping ahead, is rejected
  EXPECT_THROW(m.push_triples(0, {{1, 2, 3}}), ProtocolError);
  EXPECT_THROW(m.push_triples(5, {{1, 2, 3}}), ProtocolError);
  m.push_triples(2, {{7, 8, 9}});
  EXPECT_EQ(m.take_triples(1)[0].c, 9u);
  EXPECT_EQ(m.issued().triples, 3u);
  EXPECT_THROW(m.take_bit_triples(1), MaterialExhausted);
}

TEST(Dealer, MaterialFileRoundTrips) {
  const auto s = SchemeId::shamir(Modulus::default_prime(), 1, 3);
  Dealer dealer(s, Prg::derive_seed(5, "d"));
  Stocks st(3), copy(3);
  dealer.deal_pair_seeds(st.raw);
  dealer.deal(st.raw, {3, 2, 1, 4});
  const auto before = st.raw[1]->available();
  const auto path = (std::filesystem::temp_directory_path() / "privmon-test-party-2.pmat").string();
  // keep a reference copy of what is written
  Stocks ref(3);
  Dealer dealer2(s, Prg::derive_seed(5, "d"));
  dealer2.deal_pair_seeds(ref.raw);
  dealer2.deal(ref.raw, {3, 2, 1, 4});

  write_material_file(path, s, *st.raw[1]);
  read_material_file(path, s, *copy.raw[1]);
  EXPECT_EQ(copy.raw[1]->available(), before);
  EXPECT_EQ(copy.raw[1]->pair_seeds(), ref.raw[1]->pair_seeds());
  const auto a = copy.raw[1]->take_triples(3), b = ref.raw[1]->take_triples(3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].a, b[i].a);
    EXPECT_EQ(a[i].c, b[i].c);
  }
  const auto ea = copy.raw[1]->take_edabits(4), eb = ref.raw[1]->take_edabits(4);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(ea[i].arith, eb[i].arith);
    EXPECT_EQ(ea[i].bits, eb[i].bits);
  }

  PartyMaterial wrong(2, 3);
  EXPECT_THROW(read_material_file(path, SchemeId::shamir(Modulus::prime(257), 1, 3), wrong), ProtocolError);
  {
    std::ofstream junk(path, std::ios::binary);
    junk << "not a material file";
  }
  EXPECT_THROW(read_material_file(path, s, wrong), ProtocolError);
  std::filesystem::remove(path);
}

TEST(Ledger, CountsAndCsv) {
  ResourceLedger l(3);
  EXPECT_EQ(l.consumed(), MaterialCounts{});
  for (int i = 0; i < 100; ++i) l.add_consumed({1, 0, 0, 0});
  l.add_bytes(1, 500);
  l.add_bytes(1, 20);
  auto r = ledger_report(l, 1);
  EXPECT_EQ(r.counts.triples, 100u);
  EXPECT_EQ(r.bytes_sent, 520u);
  r.scenario = "acs";
  r.size = 10;
  EXPECT_EQ(LedgerReport::csv_header(), "scenario,size,triples,bit_triples,dabits,bytes_sent,compute_s,total_s,edabits");
  EXPECT_EQ(r.csv_row(), "acs,10,100,0,0,520,0.000000,0.000000,0");
}

TEST(MaskModes, WidthsPerModulus) {
  EXPECT_EQ(mask_mode(Modulus::power_of_two(64)), MaskMode::Ring);
  EXPECT_EQ(mask_mode(Modulus::default_prime()), MaskMode::Statistical);
  EXPECT_EQ(mask_mode(Modulus::prime(17)), MaskMode::Perfect);
  EXPECT_EQ(mask_mode(Modulus::prime(4093)), MaskMode::Perfect);
  EXPECT_EQ(mask_mode(Modulus::prime(4099)), MaskMode::None);
  EXPECT_EQ(mask_mode(Modulus::prime((u128{1} << 31) - 1)), MaskMode::None);
  EXPECT_EQ(edabit_width(Modulus::prime(17)), 17u);
  EXPECT_EQ(edabit_width(Modulus::prime(4099)), 0u);
  EXPECT_EQ(max_compare_width(Modulus::prime(4099)), 0u);
  EXPECT_EQ(max_decompose_width(Modulus::prime(4099)), 0u);
  EXPECT_EQ(max_compare_width(Modulus::power_of_two(64)), 63u);
  EXPECT_EQ(max_compare_width(Modulus::default_prime()), 128u - 3 - 40);
  EXPECT_EQ(max_compare_width(Modulus::prime(257)), 7u);
  EXPECT_EQ(max_compare_width(Modulus::prime(17)), 3u);
}

}  // namespace
}  // namespace privmon
