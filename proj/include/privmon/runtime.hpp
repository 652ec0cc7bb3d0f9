#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "privmon/compiler.hpp"
#include "privmon/config.hpp"
#include "privmon/engine.hpp"

namespace privmon {

// Reads PRIVMON_LOG (trace, debug, info, warn, error, off); default warn.
void init_logging();

struct SessionConfig {
  ScenarioConfig scenario;
  unsigned parties = 3;
  std::string scheme = "shamir";  // shamir | additive
  unsigned privacy_threshold = 1;  // Shamir degree
  bool stop_on_violation = true;
  u64 seed = 1;
  // TCP: "host:port" for node 0 (the System) through node k.
  std::vector<std::string> addresses;
  // Party material files written by the dealer: <dir>/party-<id>.pmat
  std::string material_dir = ".";
  std::chrono::milliseconds timeout{60'000};

  SchemeId arith_scheme() const;
  // Most parties a coalition may hold while still learning nothing.
  unsigned max_corrupted() const;
  std::string material_path(PartyId id) const;

  // Reads session keys and the scenario keys from the same file.
  static SessionConfig from(KeyValues& kv);
  void validate() const;
};

struct Verdict {
  u32 round;
  u8 flag;
  bool terminal;
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct RoundMetrics {
  u32 round = 0;
  MaterialCounts material;
  u64 bytes_sent = 0;
  double compute_s = 0;  // thread CPU time
  double total_s = 0;    // wall time
};

struct PartyResult {
  PartyId id = 0;
  std::vector<Verdict> verdicts;
  std::vector<RoundMetrics> metrics;
  std::vector<OpenRecord> opens;
  MaterialCounts consumed;
  u64 bytes_sent = 0;
  // This party's state shares after each round, when recorded.
  std::vector<std::vector<u128>> states;
};

struct PartyOptions {
  bool stop_on_violation = true;
  bool record_states = false;
  // Called before each round's timer starts (material top-up).
  std::function<void(u32 round)> before_round;
};

// One monitor party: receive observation shares, run the round program,
// reveal the flag, carry the state. Ends on SYNC from the System or on the
// first violation in stop mode.
PartyResult run_party(const Scenario& s, PartyContext& ctx, const PartyOptions& opt);

struct SystemResult {
  std::vector<Verdict> verdicts;
  std::vector<u8> flags() const;
};

// The System: freshly shares each observation, sends share i to party i,
// and collects the flag.
SystemResult run_system(const Scenario& s, Endpoint& net, const SchemeId& arith,
                        const std::vector<std::vector<u128>>& trace, u64 seed, bool stop_on_violation,
                        u64 max_rounds = kUnboundedRounds);

// Keeps each stock at least one round's static cost, dealing the cost plus
// 10% whenever a stock runs short. Safe to call from every party thread.
class MaterialSupply {
 public:
  MaterialSupply(Dealer& dealer, std::vector<PartyMaterial*> parties, MaterialCounts per_round);
  void before_round(u32 round);
  static MaterialCounts batch_for(const MaterialCounts& per_round, const MaterialCounts& available);

 private:
  std::mutex mu_;
  Dealer& dealer_;
  std::vector<PartyMaterial*> parties_;
  MaterialCounts per_round_;
  u32 last_round_ = 0;
};

struct LocalOptions {
  bool record_transcripts = false;
};

struct SessionResult {
  SystemResult system;
  std::vector<PartyResult> parties;
  // Messages delivered to each node (index = node id), when recorded.
  std::vector<std::vector<ObservedMessage>> inbox;
  double wall_s = 0;
};

// Whole session on one machine: trusted dealer, k party threads, System on
// the calling thread, in-process network.
SessionResult run_local_session(const SessionConfig& cfg, const Scenario& s,
                                const std::vector<std::vector<u128>>& trace, const LocalOptions& opt = {});

// One CSV row per executed round, party 1's figures.
std::vector<LedgerReport> collect_metrics(const SessionResult& r, const Scenario& s);

// Everything the coalition sees in one round, flattened in a fixed order:
// payloads it received, its state shares afterwards, then every value opened
// that round as the coalition reconstructs it.
struct ProbeRound {
  u32 round;
  std::vector<u128> values;
};
// Throws DomainError when the coalition is larger than the scheme tolerates.
std::vector<ProbeRound> transcript_probe(const SessionResult& r, const SessionConfig& cfg,
                                         const std::vector<PartyId>& corrupted);

// Empty when every unmasked opening in the session is a per-round flag and
// the System received nothing but flag shares.
std::vector<std::string> leakage_violations(const SessionResult& r);

// Bytes per payload element for a message kind.
std::size_t payload_width(Tag tag, u8 label, const Modulus& m);

}  // namespace privmon
