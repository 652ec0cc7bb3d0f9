#include <gtest/gtest.h>

#include <unistd.h>

#include <map>
#include <thread>

#include "privmon/runtime.hpp"
#include "views.hpp"

namespace privmon {
namespace {

SessionConfig session(const std::string& name, u64 size, const std::string& scheme = "shamir") {
  SessionConfig cfg;
  cfg.scenario.name = name;
  cfg.scenario.size = size;
  cfg.scheme = scheme;
  if (scheme == "additive") cfg.scenario.modulus = Modulus::power_of_two(64);
  return cfg;
}

std::vector<u8> oracle_flags(const Scenario& s, const std::vector<std::vector<u128>>& trace, bool stop) {
  auto oracle = make_oracle(s);
  std::vector<u8> out;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out.push_back(oracle->step(trace[t], t + 1));
    if (stop && out.back()) break;
  }
  return out;
}

TEST(Runtime, AcsOneDoorStopsAtFirstViolation) {
  const auto cfg = session("acs", 1);
  const auto s = build_scenario(cfg.scenario);
  const std::vector<std::vector<u128>> trace{{2, 0, 1, 0}, {0, 2, 0, 0}, {0, 0, 0, 0}};
  const auto r = run_local_session(cfg, s, trace);
  const std::vector<Verdict> want{{1, 0, false}, {2, 1, true}};
  EXPECT_EQ(r.system.verdicts, want);
  for (const auto& p : r.parties) EXPECT_EQ(p.verdicts, want) << "party " << p.id;
}

TEST(Runtime, ContinueModeRunsTheWholeTrace) {
  auto cfg = session("acs", 1);
  cfg.stop_on_violation = false;
  const auto s = build_scenario(cfg.scenario);
  const std::vector<std::vector<u128>> trace{{2, 0, 1, 0}, {0, 2, 0, 0}, {0, 0, 0, 0}};
  const auto r = run_local_session(cfg, s, trace);
  EXPECT_EQ(r.system.flags(), oracle_flags(s, trace, false));
  EXPECT_EQ(r.system.verdicts.size(), 3u);
}

TEST(Runtime, EmptyTraceEndsImmediately) {
  const auto cfg = session("locks", 2);
  const auto s = build_scenario(cfg.scenario);
  const auto r = run_local_session(cfg, s, {}, LocalOptions{true});
  EXPECT_TRUE(r.system.verdicts.empty());
  for (const auto& p : r.parties) {
    EXPECT_TRUE(p.verdicts.empty());
    EXPECT_TRUE(p.metrics.empty());
    EXPECT_EQ(p.consumed, MaterialCounts{});
  }
  EXPECT_TRUE(collect_metrics(r, s).empty());
  EXPECT_TRUE(r.inbox[0].empty());
}

TEST(Runtime, RoundLimitCapsTheTrace) {
  auto cfg = session("acs", 1);
  cfg.scenario.rounds = 2;
  const auto s = build_scenario(cfg.scenario);
  const auto r = run_local_session(cfg, s, std::vector<std::vector<u128>>(5, std::vector<u128>(4, 0)));
  EXPECT_EQ(r.system.verdicts.size(), 2u);
}

TEST(Runtime, SystemReceivesOnlyFlagShares) {
  auto cfg = session("car", 2);
  cfg.stop_on_violation = false;
  const auto s = build_scenario(cfg.scenario);
  Prg rng(3, "trace");
  const auto trace = s.random_trace(rng, 6);
  const auto r = run_local_session(cfg, s, trace, LocalOptions{true});
  ASSERT_EQ(r.inbox.size(), 4u);
  EXPECT_EQ(r.inbox[0].size(), 3 * trace.size());
  for (const auto& om : r.inbox[0]) {
    EXPECT_EQ(om.message.tag, Tag::FlagShare);
    EXPECT_EQ(om.message.count, 1u);
  }
  EXPECT_TRUE(leakage_violations(r).empty());
}

TEST(Runtime, ReplayIsDeterministic) {
  const auto cfg = session("locks", 3);
  const auto s = build_scenario(cfg.scenario);
  Prg rng(4, "trace");
  const auto trace = s.random_trace(rng, 10);
  const auto a = run_local_session(cfg, s, trace, LocalOptions{true});
  const auto b = run_local_session(cfg, s, trace, LocalOptions{true});
  EXPECT_EQ(a.system.verdicts, b.system.verdicts);
  // senders interleave freely; each sender's stream is fixed
  auto by_sender = [](const std::vector<ObservedMessage>& in) {
    std::map<PartyId, std::vector<std::vector<u8>>> out;
    for (const auto& om : in) out[om.from].push_back(om.message.payload);
    return out;
  };
  for (std::size_t node = 0; node < a.inbox.size(); ++node) {
    EXPECT_EQ(by_sender(a.inbox[node]), by_sender(b.inbox[node])) << "node " << node;
  }
  auto other = cfg;
  other.seed = 2;
  const auto c = run_local_session(other, s, trace, LocalOptions{true});
  EXPECT_EQ(c.system.verdicts, a.system.verdicts);
  EXPECT_NE(by_sender(c.inbox[1]), by_sender(a.inbox[1]));
}

class Differential : public ::testing::TestWithParam<std::string> {};

TEST_P(Differential, MatchesOracleInBothModes) {
  std::vector<SessionConfig> cfgs = {session("acs", 2, GetParam()), session("locks", 3, GetParam()),
                                     session("car", 2, GetParam()), session("bloodsugar", 1, GetParam())};
  cfgs[2].scenario.r_base = 8;
  cfgs[2].scenario.growth = 0;
  cfgs[2].scenario.r_max = 8;
  cfgs[3].scenario.window_lo = 10;
  cfgs[3].scenario.window_hi = 15;
  cfgs[3].scenario.rounds = 25;
  for (auto cfg : cfgs) {
    const auto s = build_scenario(cfg.scenario);
    Prg rng(11, cfg.scenario.name);
    u64 raised = 0;
    for (int trace_no = 0; trace_no < 4; ++trace_no) {
      const auto trace = s.random_trace(rng, 25);
      for (bool stop : {true, false}) {
        cfg.stop_on_violation = stop;
        cfg.seed = 100 + trace_no;
        const auto r = run_local_session(cfg, s, trace, LocalOptions{true});
        const auto want = oracle_flags(s, trace, stop);
        ASSERT_EQ(r.system.flags(), want) << cfg.scenario.name << " trace " << trace_no << " stop " << stop;
        EXPECT_TRUE(leakage_violations(r).empty()) << cfg.scenario.name;
        const auto per_round = cost_estimate(s.program, cfg.scenario.modulus).material;
        for (const auto& m : r.parties[0].metrics) EXPECT_EQ(m.material, per_round);
        for (u8 f : want) raised += f;
      }
    }
    EXPECT_GT(raised, 0u) << cfg.scenario.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Schemes, Differential, ::testing::Values("shamir", "additive"));

TEST(Runtime, MetricsRowsFollowRounds) {
  auto cfg = session("acs", 3);
  cfg.stop_on_violation = false;
  const auto s = build_scenario(cfg.scenario);
  const auto r = run_local_session(cfg, s, std::vector<std::vector<u128>>(4, std::vector<u128>(12, 0)));
  const auto rows = collect_metrics(r, s);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& row : rows) {
    EXPECT_EQ(row.scenario, "acs");
    EXPECT_EQ(row.size, 3u);
    EXPECT_GT(row.bytes_sent, 0u);
    EXPECT_GE(row.total_s, 0.0);
  }
  EXPECT_EQ(rows[0].counts, rows[3].counts);
}

TEST(Runtime, RejectsOutOfRangeObservation) {
  const auto cfg = session("locks", 1);
  const auto s = build_scenario(cfg.scenario);
  EXPECT_THROW(run_local_session(cfg, s, {{0, 0}, {1, 1}}), DomainError);
}

TEST(Runtime, ProbeChecksTheCoalition) {
  auto cfg = session("acs", 1);
  cfg.parties = 4;
  cfg.privacy_threshold = 1;
  const auto s = build_scenario(cfg.scenario);
  const std::vector<std::vector<u128>> trace(2, std::vector<u128>(4, 0));
  const auto r = run_local_session(cfg, s, trace, LocalOptions{true});
  EXPECT_EQ(transcript_probe(r, cfg, {2}).size(), 2u);
  EXPECT_THROW(transcript_probe(r, cfg, {1, 2}), DomainError);
  EXPECT_THROW(transcript_probe(r, cfg, {0}), DomainError);
  EXPECT_THROW(transcript_probe(r, cfg, {5}), DomainError);
  EXPECT_THROW(transcript_probe(r, cfg, {3, 3}), DomainError);
  const auto blind = run_local_session(cfg, s, trace);
  EXPECT_THROW(transcript_probe(blind, cfg, {1}), DomainError);

  auto add = session("acs", 1, "additive");
  add.parties = 3;
  const auto sa = build_scenario(add.scenario);
  const auto ra = run_local_session(add, sa, trace, LocalOptions{true});
  EXPECT_EQ(transcript_probe(ra, add, {1, 3}).size(), 2u);
  EXPECT_THROW(transcript_probe(ra, add, {1, 2, 3}), DomainError);
}

TEST(Runtime, CoalitionViewDoesNotDependOnInputs) {
  const auto m = Modulus::prime(17);
  const auto s = testing::tiny_threshold(m);
  SessionConfig cfg;
  cfg.scenario = s.config;
  const auto a = testing::sample_views(cfg, s, {4}, 40, 50, 1, {1});
  const auto b = testing::sample_views(cfg, s, {7}, 40, 50, 100'000, {1});
  Prg rng(5, "projections");
  const auto d = testing::view_distance(a, b, 17, 20, rng);
  EXPECT_LT(d.marginal, 0.15);
  EXPECT_LT(d.projection, 0.15);
}

TEST(MaterialSupply, DealsCostPlusTenPercentWhenShort) {
  const MaterialCounts per{10, 0, 3, 1};
  EXPECT_EQ(MaterialSupply::batch_for(per, {5, 0, 3, 0}), (MaterialCounts{11, 0, 0, 2}));
  EXPECT_EQ(MaterialSupply::batch_for(per, {10, 7, 3, 1}), MaterialCounts{});

  const auto scheme = SchemeId::shamir(Modulus::default_prime(), 1, 3);
  Dealer dealer(scheme, Prg::derive_seed(1, "d"));
  std::vector<std::unique_ptr<PartyMaterial>> mats;
  std::vector<PartyMaterial*> raw;
  for (PartyId p = 1; p <= 3; ++p) {
    mats.push_back(std::make_unique<PartyMaterial>(p, 3));
    raw.push_back(mats.back().get());
  }
  MaterialSupply supply(dealer, raw, per);
  supply.before_round(1);
  supply.before_round(1);
  EXPECT_EQ(dealer.issued(), (MaterialCounts{11, 0, 4, 2}));
  supply.before_round(2);
  EXPECT_EQ(dealer.issued(), (MaterialCounts{11, 0, 4, 2}));
}

TEST(SessionConfig, ParsesAndValidates) {
  auto kv = KeyValues::parse(
      "scenario = locks\nsize = 2\nparties = 5\nprivacy_threshold = 2\nmode = continue\nseed = 9\n"
      "addresses = a:1, b:2, c:3, d:4, e:5, f:6\n");
  const auto cfg = SessionConfig::from(kv);
  kv.require_all_used();
  EXPECT_EQ(cfg.parties, 5u);
  EXPECT_EQ(cfg.max_corrupted(), 2u);
  EXPECT_FALSE(cfg.stop_on_violation);
  EXPECT_EQ(cfg.addresses.size(), 6u);
  EXPECT_EQ(cfg.scenario.name, "locks");
  EXPECT_EQ(cfg.material_path(3), "./party-3.pmat");

  auto bad = [](const std::string& text) {
    auto k = KeyValues::parse(text);
    return SessionConfig::from(k);
  };
  EXPECT_THROW(bad("parties = 1\n"), ConfigError);
  EXPECT_THROW(bad("parties = 3\nprivacy_threshold = 3\n"), ConfigError);
  EXPECT_THROW(bad("mode = sometimes\n"), ConfigError);
  EXPECT_THROW(bad("scheme = shamir\nmodulus = ring:64\n"), ConfigError);
  EXPECT_THROW(bad("scheme = replicated\n"), ConfigError);
  EXPECT_THROW(bad("parties = 2\naddresses = a:1\n"), ConfigError);
}

TEST(Runtime, TcpLoopbackSession) {
  SessionConfig cfg = session("acs", 1);
  cfg.stop_on_violation = false;
  const auto s = build_scenario(cfg.scenario);
  const unsigned k = cfg.parties;
  const int base = 20000 + static_cast<int>(getpid() % 20000);
  std::vector<std::string> addr;
  for (unsigned i = 0; i <= k; ++i) addr.push_back("127.0.0.1:" + std::to_string(base + i));

  const auto scheme = cfg.arith_scheme();
  Dealer dealer(scheme, Prg::derive_seed(1, "dealer"));
  std::vector<std::unique_ptr<PartyMaterial>> mats;
  std::vector<PartyMaterial*> raw;
  for (PartyId p = 1; p <= k; ++p) {
    mats.push_back(std::make_unique<PartyMaterial>(p, k));
    raw.push_back(mats.back().get());
  }
  dealer.deal_pair_seeds(raw);
  MaterialSupply supply(dealer, raw, cost_estimate(s.program, scheme.modulus()).material);
  const std::vector<std::vector<u128>> trace{{2, 0, 1, 0}, {0, 2, 0, 0}, {1, 1, 1, 1}};

  std::vector<PartyResult> results(k);
  std::vector<std::string> errors(k);
  std::vector<std::thread> threads;
  for (PartyId p = 1; p <= k; ++p) {
    threads.emplace_back([&, p] {
      try {
        TcpEndpoint net(p, addr, 10s);
        PartyContext ctx(p, scheme, net, *mats[p - 1]);
        PartyOptions opt;
        opt.stop_on_violation = false;
        opt.before_round = [&](u32 r) { supply.before_round(r); };
        results[p - 1] = run_party(s, ctx, opt);
      } catch (const std::exception& e) {
        errors[p - 1] = e.what();
      }
    });
  }
  SystemResult sys;
  {
    TcpEndpoint net(kSystemId, addr, 10s);
    sys = run_system(s, net, scheme, trace, 1, false);
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) EXPECT_EQ(e, "");
  EXPECT_EQ(sys.flags(), oracle_flags(s, trace, false));
  for (const auto& r : results) EXPECT_EQ(r.verdicts, sys.verdicts);
}

}  // namespace
}  // namespace privmon
