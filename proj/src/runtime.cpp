#include "privmon/runtime.hpp"

#include <spdlog/spdlog.h>
#include <time.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <map>
#include <set>
#include <thread>

namespace privmon {

namespace {

constexpr u8 kArithObs = 0;
constexpr u8 kBoolObs = 1;

double thread_cpu_s() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto end = s.find_first_of(", \t", pos);
    if (end == std::string::npos) end = s.size();
    if (end > pos) out.push_back(s.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

void send_control(Endpoint& net, PartyId to, u32 round, Tag tag) {
  RoundMessage m;
  m.round = round;
  m.tag = tag;
  net.send(to, m);
}

// Observation slots split by share type, in program order.
struct ObsLayout {
  std::vector<std::size_t> arith, boolean;
};

ObsLayout layout_of(const Scenario& s) {
  ObsLayout l;
  for (std::size_t i = 0; i < s.obs_types.size(); ++i) {
    (s.obs_types[i] == ShareType::Bool ? l.boolean : l.arith).push_back(i);
  }
  return l;
}

}  // namespace

void init_logging() {
  const char* env = std::getenv("PRIVMON_LOG");
  auto level = spdlog::level::warn;
  if (env && *env) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

// ---- session config --------------------------------------------------------

SchemeId SessionConfig::arith_scheme() const {
  const Modulus& m = scenario.modulus;
  if (scheme == "shamir") {
    if (!m.is_prime()) throw ConfigError("shamir sharing needs a prime modulus");
    return SchemeId::shamir(m, privacy_threshold, parties);
  }
  if (scheme == "additive") return SchemeId::additive(m, parties);
  throw ConfigError("unknown scheme '" + scheme + "' (shamir or additive)");
}

unsigned SessionConfig::max_corrupted() const { return scheme == "shamir" ? privacy_threshold : parties - 1; }

std::string SessionConfig::material_path(PartyId id) const {
  return material_dir + "/party-" + std::to_string(id) + ".pmat";
}

SessionConfig SessionConfig::from(KeyValues& kv) {
  SessionConfig c;
  c.parties = static_cast<unsigned>(kv.take_u64("parties", c.parties));
  c.scheme = kv.take_string("scheme", c.scheme);
  c.privacy_threshold = static_cast<unsigned>(kv.take_u64("privacy_threshold", c.privacy_threshold));
  const auto mode = kv.take_string("mode", "stop");
  if (mode == "stop") {
    c.stop_on_violation = true;
  } else if (mode == "continue") {
    c.stop_on_violation = false;
  } else {
    throw ConfigError("config key 'mode' expects stop or continue");
  }
  c.seed = kv.take_u64("seed", c.seed);
  c.addresses = split_list(kv.take_string("addresses", ""));
  c.material_dir = kv.take_string("material_dir", c.material_dir);
  c.timeout = std::chrono::milliseconds(kv.take_u64("timeout_ms", static_cast<u64>(c.timeout.count())));
  c.scenario = ScenarioConfig::from(kv);
  c.validate();
  return c;
}

void SessionConfig::validate() const {
  if (parties < 2) throw ConfigError("need at least 2 monitor parties");
  if (parties > 64) throw ConfigError("at most 64 monitor parties");
  if (scheme == "shamir" && (privacy_threshold < 1 || privacy_threshold >= parties)) {
    throw ConfigError("privacy_threshold must be in [1, parties - 1]");
  }
  if (!addresses.empty() && addresses.size() != parties + 1) {
    throw ConfigError("addresses lists " + std::to_string(addresses.size()) + " nodes, expected " +
                      std::to_string(parties + 1));
  }
  if (timeout.count() <= 0) throw ConfigError("timeout_ms must be positive");
  (void)arith_scheme();
}

// ---- party -----------------------------------------------------------------

PartyResult run_party(const Scenario& s, PartyContext& ctx, const PartyOptions& opt) {
  const Machine vm(s.program, ctx.modulus());
  const Program& prog = vm.program();
  const Modulus& m = ctx.modulus();
  const ObsLayout lay = layout_of(s);
  Endpoint& net = ctx.channel().endpoint();

  PartyResult res;
  res.id = ctx.id();
  std::vector<u128> state;
  for (std::size_t i = 0; i < prog.state.size(); ++i) {
    const u128 v = s.initial_state[i];
    state.push_back(prog.regs[prog.state[i]] == ShareType::Bool ? ctx.bool_constant(static_cast<u8>(v & 1))
                                                                 : ctx.arith_constant(v));
  }

  u32 round = 0;
  try {
    for (round = 1;; ++round) {
      RoundMessage first = net.recv(kSystemId);
      if (first.tag == Tag::Sync) break;
      if (first.tag == Tag::Abort) throw ProtocolError("the System aborted the session");
      if (first.tag != Tag::ObsShare || first.label != kArithObs) {
        throw ProtocolError(std::string("expected observation shares from the System, got ") + to_string(first.tag));
      }
      if (first.round != round) {
        throw ProtocolError("round desync with the System: expected " + std::to_string(round) + ", got " +
                            std::to_string(first.round));
      }
      auto arith = first.unpack(m.byte_width());
      if (arith.size() < lay.arith.size()) {
        auto more = ctx.channel().recv(kSystemId, round, Tag::ObsShare, kArithObs, lay.arith.size() - arith.size(),
                                       m.byte_width());
        arith.insert(arith.end(), more.begin(), more.end());
      }
      if (arith.size() != lay.arith.size()) throw ProtocolError("wrong number of observation shares");
      const auto bits = ctx.channel().recv(kSystemId, round, Tag::ObsShare, kBoolObs, lay.boolean.size(), 1);

      std::vector<u128> obs(s.obs_types.size());
      for (std::size_t i = 0; i < lay.arith.size(); ++i) {
        if (!m.contains(arith[i])) throw ProtocolError("observation share outside the domain");
        obs[lay.arith[i]] = arith[i];
      }
      for (std::size_t i = 0; i < lay.boolean.size(); ++i) {
        if (bits[i] > 1) throw ProtocolError("observation bit share is not a bit");
        obs[lay.boolean[i]] = bits[i];
      }

      if (opt.before_round) opt.before_round(round);
      const auto wall0 = std::chrono::steady_clock::now();
      const double cpu0 = thread_cpu_s();
      const MaterialCounts used0 = ctx.ledger().consumed();
      const u64 bytes0 = net.bytes_sent();

      ctx.begin_round(round);
      const auto params = s.params ? s.params(round) : std::vector<u128>{};
      RoundResult r = vm.execute_round(ctx, state, obs, params);
#ifdef PRIVMON_TEST_BACKDOOR
      // negative control for the leakage checks
      if (!r.next_state.empty()) ctx.open_arith(OpenKind::Explicit, std::span<const u128>(r.next_state.data(), 1));
#endif
      state = std::move(r.next_state);

      RoundMetrics rm;
      rm.round = round;
      rm.material = ctx.ledger().consumed() - used0;
      rm.bytes_sent = net.bytes_sent() - bytes0;
      rm.compute_s = thread_cpu_s() - cpu0;
      rm.total_s = since(wall0);
      ctx.ledger().add_bytes(ctx.id(), rm.bytes_sent);
      res.metrics.push_back(rm);
      if (opt.record_states) res.states.push_back(state);

      const bool terminal = r.flag && opt.stop_on_violation;
      res.verdicts.push_back({round, r.flag, terminal});
      spdlog::debug("party {} round {} flag {}", ctx.id(), round, r.flag);
      if (terminal) break;
    }
  } catch (const std::exception& e) {
    spdlog::warn("party {} aborting in round {}: {}", ctx.id(), round, e.what());
    ctx.channel().abort_all(round);
    throw;
  }

  res.opens = ctx.open_log();
  res.consumed = ctx.ledger().consumed();
  res.bytes_sent = net.bytes_sent();
  return res;
}

// ---- system ----------------------------------------------------------------

std::vector<u8> SystemResult::flags() const {
  std::vector<u8> out;
  for (const auto& v : verdicts) out.push_back(v.flag);
  return out;
}

SystemResult run_system(const Scenario& s, Endpoint& net, const SchemeId& arith,
                        const std::vector<std::vector<u128>>& trace, u64 seed, bool stop_on_violation,
                        u64 max_rounds) {
  const unsigned k = arith.parties();
  if (net.nodes() != k + 1) throw DomainError("network size does not match the number of parties");
  const Modulus& m = arith.modulus();
  const SchemeId bools = SchemeId::boolean(k);
  const ObsLayout lay = layout_of(s);
  Channel ch(net, kSystemId, k);
  Prg rng(seed, "system-sharing");

  SystemResult res;
  const u64 rounds = std::min<u64>(trace.size(), max_rounds);
  u32 round = 1;
  try {
    for (; round <= rounds; ++round) {
      const auto& obs = trace[round - 1];
      s.check_observation(obs);

      std::vector<std::vector<u128>> arith_sh(k), bool_sh(k);
      for (auto i : lay.arith) {
        const auto sh = arith.share(m.reduce(obs[i]), rng);
        for (unsigned p = 0; p < k; ++p) arith_sh[p].push_back(sh[p]);
      }
      for (auto i : lay.boolean) {
        const auto sh = bools.share(obs[i] & 1, rng);
        for (unsigned p = 0; p < k; ++p) bool_sh[p].push_back(sh[p]);
      }
      for (PartyId p = 1; p <= k; ++p) {
        if (arith_sh[p - 1].empty()) {
          net.send(p, RoundMessage::pack(round, Tag::ObsShare, kArithObs, {}, m.byte_width()));
        } else {
          ch.send(p, round, Tag::ObsShare, kArithObs, arith_sh[p - 1], m.byte_width());
        }
        ch.send(p, round, Tag::ObsShare, kBoolObs, bool_sh[p - 1], 1);
      }

      u8 flag = 0;
      for (PartyId p = 1; p <= k; ++p) {
        const auto v = ch.recv(p, round, Tag::FlagShare, static_cast<u8>(OpenKind::Flag), 1, 1);
        if (v[0] > 1) throw ProtocolError("flag share is not a bit");
        flag ^= static_cast<u8>(v[0]);
      }
      const bool terminal = flag && stop_on_violation;
      res.verdicts.push_back({round, flag, terminal});
      spdlog::debug("system round {} flag {}", round, flag);
      if (terminal) return res;
    }
    for (PartyId p = 1; p <= k; ++p) send_control(net, p, round, Tag::Sync);
  } catch (const std::exception& e) {
    spdlog::warn("system aborting in round {}: {}", round, e.what());
    ch.abort_all(round);
    throw;
  }
  return res;
}

// ---- material --------------------------------------------------------------

MaterialSupply::MaterialSupply(Dealer& dealer, std::vector<PartyMaterial*> parties, MaterialCounts per_round)
    : dealer_(dealer), parties_(std::move(parties)), per_round_(per_round) {}

MaterialCounts MaterialSupply::batch_for(const MaterialCounts& per_round, const MaterialCounts& available) {
  auto need = [](u64 cost, u64 have) -> u64 { return have < cost ? cost + (cost + 9) / 10 : 0; };
  return {need(per_round.triples, available.triples), need(per_round.bit_triples, available.bit_triples),
          need(per_round.dabits, available.dabits), need(per_round.edabits, available.edabits)};
}

void MaterialSupply::before_round(u32 round) {
  std::lock_guard lock(mu_);
  if (round <= last_round_) return;
  last_round_ = round;
  // every party holds the same stock between rounds; the slowest decides
  MaterialCounts avail = parties_.front()->available();
  for (auto* p : parties_) {
    const auto a = p->available();
    avail.triples = std::min(avail.triples, a.triples);
    avail.bit_triples = std::min(avail.bit_triples, a.bit_triples);
    avail.dabits = std::min(avail.dabits, a.dabits);
    avail.edabits = std::min(avail.edabits, a.edabits);
  }
  const auto batch = batch_for(per_round_, avail);
  if (batch == MaterialCounts{}) return;
  dealer_.deal(parties_, batch);
}

// ---- local session ---------------------------------------------------------

SessionResult run_local_session(const SessionConfig& cfg, const Scenario& s,
                                const std::vector<std::vector<u128>>& trace, const LocalOptions& opt) {
  cfg.validate();
  const SchemeId arith = cfg.arith_scheme();
  if (!(s.config.modulus == arith.modulus())) throw ConfigError("scenario was built for a different modulus");
  const unsigned k = cfg.parties;
  const auto t0 = std::chrono::steady_clock::now();

  InProcessHub hub(k + 1, cfg.timeout);
  if (opt.record_transcripts) {
    for (PartyId id = 0; id <= k; ++id) hub.watch(id);
  }
  Dealer dealer(arith, Prg::derive_seed(cfg.seed, "dealer"));
  std::vector<std::unique_ptr<PartyMaterial>> mats;
  std::vector<PartyMaterial*> raw;
  for (PartyId p = 1; p <= k; ++p) {
    mats.push_back(std::make_unique<PartyMaterial>(p, k));
    raw.push_back(mats.back().get());
  }
  dealer.deal_pair_seeds(raw);
  MaterialSupply supply(dealer, raw, cost_estimate(s.program, arith.modulus()).material);

  std::vector<std::unique_ptr<PartyContext>> ctxs;
  for (PartyId p = 1; p <= k; ++p) ctxs.push_back(std::make_unique<PartyContext>(p, arith, hub.endpoint(p), *mats[p - 1]));

  PartyOptions popt;
  popt.stop_on_violation = cfg.stop_on_violation;
  popt.record_states = opt.record_transcripts;
  popt.before_round = [&supply](u32 r) { supply.before_round(r); };

  SessionResult res;
  res.parties.resize(k);
  std::vector<std::exception_ptr> errors(k);
  std::vector<std::thread> threads;
  for (PartyId p = 1; p <= k; ++p) {
    threads.emplace_back([&, p] {
      try {
        res.parties[p - 1] = run_party(s, *ctxs[p - 1], popt);
      } catch (...) {
        errors[p - 1] = std::current_exception();
      }
    });
  }
  std::exception_ptr system_error;
  try {
    res.system = run_system(s, hub.endpoint(kSystemId), arith, trace, cfg.seed, cfg.stop_on_violation, cfg.scenario.rounds);
  } catch (...) {
    system_error = std::current_exception();
    hub.close("the System failed");
  }
  for (auto& t : threads) t.join();
  // a rejected observation is the root cause; party errors follow from it
  if (system_error) {
    try {
      std::rethrow_exception(system_error);
    } catch (const ProtocolError&) {
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      throw;
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  if (opt.record_transcripts) {
    for (PartyId id = 0; id <= k; ++id) res.inbox.push_back(hub.observed(id));
  }
  res.wall_s = since(t0);
  spdlog::debug("session {}: {} rounds in {:.3f}s", s.config.name, res.system.verdicts.size(), res.wall_s);
  return res;
}

std::vector<LedgerReport> collect_metrics(const SessionResult& r, const Scenario& s) {
  std::vector<LedgerReport> out;
  if (r.parties.empty()) return out;
  for (const auto& m : r.parties.front().metrics) {
    out.push_back({s.config.name, s.config.size, m.material, m.bytes_sent, m.compute_s, m.total_s});
  }
  return out;
}

// ---- leakage checks --------------------------------------------------------

std::size_t payload_width(Tag tag, u8 label, const Modulus& m) {
  switch (tag) {
    case Tag::ObsShare:
      return label == kBoolObs ? 1 : m.byte_width();
    case Tag::MaskedOpen:
      switch (static_cast<OpenKind>(label)) {
        case OpenKind::AndDE:
        case OpenKind::DaBitMask:
          return 1;
        default:
          return m.byte_width();
      }
    case Tag::FlagShare:
      return 1;
    default:
      return 0;
  }
}

namespace {

bool opens_bits(u8 label) {
  const auto k = static_cast<OpenKind>(label);
  return k == OpenKind::AndDE || k == OpenKind::DaBitMask || k == OpenKind::Flag;
}

// Every value the coalition opens, rebuilt from the shares party p sent and
// received. A function of the view, so it can only sharpen a distinguisher.
void append_openings(const SessionResult& r, const SchemeId& arith, PartyId p, std::vector<ProbeRound>& out) {
  const unsigned k = arith.parties();
  const PartyId peer = p == 1 ? 2 : 1;
  auto opening = [](const ObservedMessage& om, PartyId from) {
    return om.from == from && (om.message.tag == Tag::MaskedOpen || om.message.tag == Tag::FlagShare);
  };
  std::vector<std::vector<const RoundMessage*>> streams(k);
  for (PartyId j = 1; j <= k; ++j) {
    const auto& box = j == p ? r.inbox[peer] : r.inbox[p];
    for (const auto& om : box) {
      if (opening(om, j)) streams[j - 1].push_back(&om.message);
    }
  }
  for (const auto& st : streams) {
    if (st.size() != streams[0].size()) throw ProtocolError("opening streams differ in length");
  }
  std::vector<u128> column(k);
  for (std::size_t n = 0; n < streams[0].size(); ++n) {
    const RoundMessage& head = *streams[0][n];
    if (head.count == 0 || head.round < 1 || head.round > out.size()) continue;
    const std::size_t width = head.payload.size() / head.count;
    std::vector<std::vector<u128>> shares(k);
    for (unsigned j = 0; j < k; ++j) shares[j] = streams[j][n]->unpack(width);
    for (std::size_t i = 0; i < head.count; ++i) {
      for (unsigned j = 0; j < k; ++j) column[j] = shares[j].at(i);
      u128 v = 0;
      if (opens_bits(head.label)) {
        for (auto c : column) v ^= c & 1;
      } else {
        v = arith.reconstruct(column);
      }
      out[head.round - 1].values.push_back(v);
    }
  }
}

}  // namespace

std::vector<ProbeRound> transcript_probe(const SessionResult& r, const SessionConfig& cfg,
                                         const std::vector<PartyId>& corrupted) {
  const unsigned k = cfg.parties;
  std::set<PartyId> coalition(corrupted.begin(), corrupted.end());
  if (coalition.size() != corrupted.size()) throw DomainError("coalition lists a party twice");
  for (auto p : coalition) {
    if (p < 1 || p > k) throw DomainError("no monitor party " + std::to_string(p));
  }
  if (coalition.size() >= k) throw DomainError("a coalition of every party sees all secrets");
  if (coalition.size() > cfg.max_corrupted()) {
    throw DomainError("coalition of " + std::to_string(coalition.size()) + " exceeds the " + cfg.scheme +
                      " privacy threshold " + std::to_string(cfg.max_corrupted()));
  }
  if (r.inbox.size() != k + 1) throw DomainError("session was run without recording transcripts");

  const u32 rounds = static_cast<u32>(r.system.verdicts.size());
  std::vector<ProbeRound> out(rounds);
  for (u32 i = 0; i < rounds; ++i) out[i].round = i + 1;
  for (auto p : coalition) {
    for (const auto& om : r.inbox[p]) {
      const auto& msg = om.message;
      if (msg.round < 1 || msg.round > rounds || msg.count == 0) continue;
      if (msg.tag == Tag::Sync || msg.tag == Tag::Abort) continue;
      const auto vals = msg.unpack(msg.payload.size() / msg.count);
      auto& dst = out[msg.round - 1].values;
      dst.insert(dst.end(), vals.begin(), vals.end());
    }
    const auto& states = r.parties[p - 1].states;
    for (u32 i = 0; i < rounds && i < states.size(); ++i) {
      out[i].values.insert(out[i].values.end(), states[i].begin(), states[i].end());
    }
  }
  if (!coalition.empty()) append_openings(r, cfg.arith_scheme(), *coalition.begin(), out);
  return out;
}

std::vector<std::string> leakage_violations(const SessionResult& r) {
  std::vector<std::string> bad;
  const auto sys_flags = r.system.flags();
  for (const auto& pr : r.parties) {
    const std::string who = "party " + std::to_string(pr.id);
    std::map<u32, u64> flag_opens;
    for (const auto& o : pr.opens) {
      if (o.kind == OpenKind::Flag) {
        flag_opens[o.round] += o.count;
      } else if (!is_masked(o.kind)) {
        bad.push_back(who + " round " + std::to_string(o.round) + ": " + to_string(o.kind) + " opening of " +
                      std::to_string(o.count) + " values");
      }
    }
    for (const auto& v : pr.verdicts) {
      const u64 n = flag_opens.count(v.round) ? flag_opens[v.round] : 0;
      if (n != 1) {
        bad.push_back(who + " round " + std::to_string(v.round) + ": " + std::to_string(n) + " flag openings");
      }
    }
    std::vector<u8> mine;
    for (const auto& v : pr.verdicts) mine.push_back(v.flag);
    if (mine != sys_flags) bad.push_back(who + " disagrees with the System on the verdicts");
  }

  for (std::size_t node = 0; node < r.inbox.size(); ++node) {
    for (const auto& om : r.inbox[node]) {
      const auto& msg = om.message;
      const std::string where = "node " + std::to_string(node) + " received " + to_string(msg.tag) +
                                " from node " + std::to_string(om.from) + " in round " + std::to_string(msg.round);
      bool ok = false;
      if (node == kSystemId) {
        ok = msg.tag == Tag::Abort || (msg.tag == Tag::FlagShare && msg.label == static_cast<u8>(OpenKind::Flag));
      } else {
        switch (msg.tag) {
          case Tag::ObsShare:
          case Tag::Sync:
            ok = om.from == kSystemId;
            break;
          case Tag::MaskedOpen:
            ok = om.from != kSystemId && msg.label >= 1 && msg.label <= 6 && is_masked(static_cast<OpenKind>(msg.label));
            break;
          case Tag::FlagShare:
            ok = om.from != kSystemId && msg.label == static_cast<u8>(OpenKind::Flag);
            break;
          case Tag::Abort:
            ok = true;
            break;
        }
      }
      if (!ok) bad.push_back(where + " (label " + std::to_string(msg.label) + ")");
    }
  }
  return bad;
}

}  // namespace privmon
