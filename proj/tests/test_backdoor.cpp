#include <gtest/gtest.h>

#include "privmon/runtime.hpp"
#include "views.hpp"

// Linked against a runtime that opens a state share every round. The checks
// that pass on the real runtime must fail here.
namespace privmon {
namespace {

TEST(Backdoor, LeakageCheckerFlagsExplicitOpenings) {
  SessionConfig cfg;
  cfg.scenario.name = "acs";
  const auto s = build_scenario(cfg.scenario);
  const auto r = run_local_session(cfg, s, std::vector<std::vector<u128>>(3, std::vector<u128>(4, 0)),
                                   LocalOptions{true});
  const auto bad = leakage_violations(r);
  EXPECT_FALSE(bad.empty());
  bool explicit_seen = false;
  for (const auto& b : bad) explicit_seen |= b.find("explicit") != std::string::npos;
  EXPECT_TRUE(explicit_seen);
}

TEST(Backdoor, ViewDistanceDetectsTheLeak) {
  const auto m = Modulus::prime(17);
  const auto s = testing::tiny_threshold(m);
  SessionConfig cfg;
  cfg.scenario = s.config;
  const auto a = testing::sample_views(cfg, s, {4}, 10, 20, 1, {1});
  const auto b = testing::sample_views(cfg, s, {7}, 10, 20, 100'000, {1});
  Prg rng(5, "projections");
  EXPECT_GT(testing::view_distance(a, b, 17, 20, rng).marginal, 0.5);
}

}  // namespace
}  // namespace privmon
