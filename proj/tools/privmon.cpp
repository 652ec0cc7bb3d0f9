#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>

#include "privmon/runtime.hpp"

using namespace privmon;

namespace {

// Exit codes: 0 clean, 1 a violation was reported, 2 error.
constexpr int kViolation = 1;
constexpr int kFailure = 2;

SessionConfig load_session(const std::string& path) {
  auto kv = KeyValues::load(path);
  auto cfg = SessionConfig::from(kv);
  kv.require_all_used();
  return cfg;
}

// Scenario keys from an optional file, then the command-line overrides.
ScenarioConfig load_scenario(const std::string& path, const std::string& name, u64 size, u64 rounds,
                             const std::string& modulus) {
  KeyValues kv;
  if (!path.empty()) kv = KeyValues::load(path);
  if (!name.empty()) kv.set("scenario", name);
  if (size) kv.set("size", std::to_string(size));
  if (rounds) kv.set("rounds", std::to_string(rounds));
  if (!modulus.empty()) kv.set("modulus", modulus);
  auto c = ScenarioConfig::from(kv);
  kv.require_all_used();
  return c;
}

std::vector<std::vector<u128>> load_trace(const std::string& path, const Scenario& s) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trace " + path);
  return read_trace(in, s);
}

int print_verdicts(const std::vector<Verdict>& vs) {
  int rc = 0;
  std::cout << "round,flag\n";
  for (const auto& v : vs) {
    std::cout << v.round << ',' << int(v.flag) << '\n';
    if (v.flag) rc = kViolation;
  }
  return rc;
}

void write_metrics(const std::string& path, const std::vector<LedgerReport>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << LedgerReport::csv_header() << '\n';
  for (const auto& r : rows) out << r.csv_row() << '\n';
}

int cmd_dealer(const std::string& config, u64 rounds) {
  const auto cfg = load_session(config);
  const auto s = build_scenario(cfg.scenario);
  if (!rounds) {
    if (cfg.scenario.rounds == kUnboundedRounds) throw ConfigError("unbounded session: pass --rounds to size the stock");
    rounds = cfg.scenario.rounds;
  }
  const auto scheme = cfg.arith_scheme();
  const auto per = cost_estimate(s.program, scheme.modulus()).material;
  MaterialCounts total{per.triples * rounds, per.bit_triples * rounds, per.dabits * rounds, per.edabits * rounds};

  Dealer dealer(scheme, Prg::derive_seed(cfg.seed, "dealer"));
  std::vector<std::unique_ptr<PartyMaterial>> mats;
  std::vector<PartyMaterial*> raw;
  for (PartyId p = 1; p <= cfg.parties; ++p) {
    mats.push_back(std::make_unique<PartyMaterial>(p, cfg.parties));
    raw.push_back(mats.back().get());
  }
  dealer.deal_pair_seeds(raw);
  dealer.deal(raw, total);
  for (PartyId p = 1; p <= cfg.parties; ++p) {
    write_material_file(cfg.material_path(p), scheme, *mats[p - 1]);
    std::cout << cfg.material_path(p) << '\n';
  }
  std::cout << "rounds " << rounds << ": triples " << total.triples << ", bit triples " << total.bit_triples
            << ", dabits " << total.dabits << ", edabits " << total.edabits << '\n';
  return 0;
}

int cmd_party(const std::string& config, PartyId id, const std::string& metrics) {
  const auto cfg = load_session(config);
  if (id < 1 || id > cfg.parties) throw ConfigError("--id must be in [1, " + std::to_string(cfg.parties) + "]");
  if (cfg.addresses.empty()) throw ConfigError("party needs addresses in the config");
  const auto s = build_scenario(cfg.scenario);
  const auto scheme = cfg.arith_scheme();
  PartyMaterial mat(id, cfg.parties);
  read_material_file(cfg.material_path(id), scheme, mat);
  TcpEndpoint net(id, cfg.addresses, cfg.timeout);
  PartyContext ctx(id, scheme, net, mat);
  PartyOptions opt;
  opt.stop_on_violation = cfg.stop_on_violation;
  const auto r = run_party(s, ctx, opt);
  for (const auto& v : r.verdicts) {
    if (v.flag) spdlog::warn("party {}: violation in round {}", id, v.round);
  }
  if (!metrics.empty()) {
    SessionResult sr;
    sr.parties.push_back(r);
    write_metrics(metrics, collect_metrics(sr, s));
  }
  return print_verdicts(r.verdicts);
}

int cmd_system(const std::string& config, const std::string& trace_path, std::optional<u64> random_seed) {
  const auto cfg = load_session(config);
  if (cfg.addresses.empty()) throw ConfigError("system needs addresses in the config");
  const auto s = build_scenario(cfg.scenario);
  std::vector<std::vector<u128>> trace;
  if (random_seed) {
    Prg rng(*random_seed, "trace");
    trace = s.random_trace(rng, cfg.scenario.horizon());
  } else {
    trace = load_trace(trace_path, s);
  }
  TcpEndpoint net(kSystemId, cfg.addresses, cfg.timeout);
  const auto r = run_system(s, net, cfg.arith_scheme(), trace, cfg.seed, cfg.stop_on_violation, cfg.scenario.rounds);
  return print_verdicts(r.verdicts);
}

int cmd_local(const std::string& config, const std::string& trace_path, std::optional<u64> random_seed,
              const std::string& metrics) {
  const auto cfg = load_session(config);
  const auto s = build_scenario(cfg.scenario);
  std::vector<std::vector<u128>> trace;
  if (random_seed) {
    Prg rng(*random_seed, "trace");
    trace = s.random_trace(rng, cfg.scenario.horizon());
  } else {
    trace = load_trace(trace_path, s);
  }
  const auto r = run_local_session(cfg, s, trace);
  if (!metrics.empty()) write_metrics(metrics, collect_metrics(r, s));
  return print_verdicts(r.system.verdicts);
}

struct BenchArgs {
  std::string config, scenario, out, scheme = "shamir", modulus;
  u64 size = 0, rounds = 20, seed = 1;
  unsigned parties = 3;
};

int cmd_bench(const BenchArgs& a) {
  SessionConfig cfg;
  cfg.scenario = load_scenario(a.config, a.scenario, a.size, a.rounds, a.modulus);
  cfg.parties = a.parties;
  cfg.scheme = a.scheme;
  cfg.seed = a.seed;
  cfg.stop_on_violation = false;
  cfg.validate();
  const auto s = build_scenario(cfg.scenario);
  Prg rng(a.seed, "trace");
  const auto trace = s.random_trace(rng, cfg.scenario.horizon());
  const auto r = run_local_session(cfg, s, trace);
  const auto rows = collect_metrics(r, s);
  if (!a.out.empty()) write_metrics(a.out, rows);
  double compute = 0, total = 0;
  u64 bytes = 0;
  for (const auto& row : rows) {
    compute += row.compute_s;
    total += row.total_s;
    bytes += row.bytes_sent;
  }
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  const MaterialCounts c = rows.empty() ? MaterialCounts{} : rows.front().counts;
  std::cout << s.config.name << " size " << s.config.size << ", " << rows.size() << " rounds\n"
            << "per round: compute " << compute / n << " s, total " << total / n << " s, " << bytes / n
            << " bytes sent by party 1\n"
            << "material per round: triples " << c.triples << ", bit triples " << c.bit_triples << ", dabits "
            << c.dabits << ", edabits " << c.edabits << '\n';
  return 0;
}

int cmd_oracle(const std::string& config, const std::string& scenario, u64 size, const std::string& trace_path,
               bool stop) {
  const auto s = build_scenario(load_scenario(config, scenario, size, 0, ""));
  const auto trace = load_trace(trace_path, s);
  auto oracle = make_oracle(s);
  std::vector<Verdict> out;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const u8 f = oracle->step(trace[t], t + 1);
    out.push_back({static_cast<u32>(t + 1), f, stop && f});
    if (stop && f) break;
  }
  return print_verdicts(out);
}

int cmd_compile(const std::string& config, const std::string& scenario, u64 size, const std::string& modulus) {
  const auto s = build_scenario(load_scenario(config, scenario, size, 0, modulus));
  std::cout << print_program(s.program);
  const auto cost = cost_estimate(s.program, s.config.modulus);
  std::cout << "; per round: " << cost.rounds << " communication rounds, triples " << cost.material.triples
            << ", bit triples " << cost.material.bit_triples << ", dabits " << cost.material.dabits << ", edabits "
            << cost.material.edabits << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"privacy-preserving runtime monitor"};
  app.require_subcommand(1);

  std::string config, trace, metrics, scenario, modulus;
  u64 size = 0, rounds = 0, random_seed = 0;
  unsigned id = 0;
  bool stop = false;

  auto* dealer = app.add_subcommand("dealer", "write each party's correlated randomness and pair seeds");
  dealer->add_option("--config", config, "session config")->required()->check(CLI::ExistingFile);
  dealer->add_option("--rounds", rounds, "rounds to stock for (default: the config's rounds)");

  auto* party = app.add_subcommand("party", "run one monitor party over TCP");
  party->add_option("--id", id, "party id, 1..k")->required();
  party->add_option("--config", config, "session config")->required()->check(CLI::ExistingFile);
  party->add_option("--metrics", metrics, "write per-round metrics CSV");

  auto* system = app.add_subcommand("system", "share a trace to the parties over TCP and print the flags");
  system->add_option("--config", config, "session config")->required()->check(CLI::ExistingFile);
  auto* sys_trace = system->add_option("--trace", trace, "trace file")->check(CLI::ExistingFile);
  auto* sys_random = system->add_option("--random", random_seed, "generate a random trace from this seed");
  sys_trace->excludes(sys_random);

  auto* local = app.add_subcommand("local", "run dealer, parties and System in one process");
  local->add_option("--config", config, "session config")->required()->check(CLI::ExistingFile);
  auto* loc_trace = local->add_option("--trace", trace, "trace file")->check(CLI::ExistingFile);
  auto* loc_random = local->add_option("--random", random_seed, "generate a random trace from this seed");
  loc_trace->excludes(loc_random);
  local->add_option("--metrics", metrics, "write per-round metrics CSV");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "in-process session on a random trace, metrics to CSV");
  bench->add_option("--scenario", bench_args.scenario, "acs | locks | car | bloodsugar | custom")->required();
  bench->add_option("--size", bench_args.size, "doors, locks or dimensions");
  bench->add_option("--rounds", bench_args.rounds, "iterations")->capture_default_str();
  bench->add_option("--out", bench_args.out, "metrics CSV");
  bench->add_option("--config", bench_args.config, "scenario keys")->check(CLI::ExistingFile);
  bench->add_option("--parties", bench_args.parties, "monitor parties")->capture_default_str();
  bench->add_option("--scheme", bench_args.scheme, "shamir | additive")->capture_default_str();
  bench->add_option("--modulus", bench_args.modulus, "ring:<w> | prime:<p> | prime:default");
  bench->add_option("--seed", bench_args.seed, "trace and session seed")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "plaintext reference verdicts for a trace");
  oracle->add_option("--scenario", scenario, "acs | locks | car | bloodsugar | custom");
  oracle->add_option("--size", size, "doors, locks or dimensions");
  oracle->add_option("--config", config, "scenario keys")->check(CLI::ExistingFile);
  oracle->add_option("--trace", trace, "trace file")->required()->check(CLI::ExistingFile);
  oracle->add_flag("--stop", stop, "stop at the first violation");

  auto* compile_cmd = app.add_subcommand("compile", "print a scenario's round program and its cost");
  compile_cmd->add_option("--scenario", scenario, "acs | locks | car | bloodsugar | custom");
  compile_cmd->add_option("--size", size, "doors, locks or dimensions");
  compile_cmd->add_option("--config", config, "scenario keys")->check(CLI::ExistingFile);
  compile_cmd->add_option("--modulus", modulus, "ring:<w> | prime:<p> | prime:default");

  CLI11_PARSE(app, argc, argv);

  try {
    auto pick_seed = [&](CLI::Option* rnd, CLI::Option* tr) -> std::optional<u64> {
      if (rnd->count()) return random_seed;
      if (!tr->count()) throw ConfigError("pass --trace FILE or --random SEED");
      return std::nullopt;
    };
    if (*dealer) return cmd_dealer(config, rounds);
    if (*party) return cmd_party(config, id, metrics);
    if (*system) return cmd_system(config, trace, pick_seed(sys_random, sys_trace));
    if (*local) return cmd_local(config, trace, pick_seed(loc_random, loc_trace), metrics);
    if (*bench) return cmd_bench(bench_args);
    if (*oracle) return cmd_oracle(config, scenario, size, trace, stop);
    if (*compile_cmd) return cmd_compile(config, scenario, size, modulus);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
