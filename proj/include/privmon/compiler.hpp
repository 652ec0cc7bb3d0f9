#pragma once

#include <algorithm>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "privmon/config.hpp"
#include "privmon/prg.hpp"
#include "privmon/vm.hpp"

namespace privmon {

// ---- expressions -----------------------------------------------------------

enum class ExprKind : u8 { State, Obs, Param, Const, Add, Sub, Mul, Lt, Le, Eq, And, Or, Xor, Not, Mux };

struct SpecExpr;
using Expr = std::shared_ptr<const SpecExpr>;

// Nodes are immutable and may be shared; a shared node is lowered once.
struct SpecExpr {
  ExprKind kind;
  u32 index = 0;              // State / Obs / Param
  u128 value = 0;             // Const
  ShareType type = ShareType::Arith;  // Const
  std::vector<Expr> args;
};

namespace expr {
Expr state(u32 i);
Expr obs(u32 i);
Expr param(u32 i);
Expr constant(u128 v);
Expr truth(bool v);
Expr add(Expr a, Expr b);
// Truncated: max(a - b, 0).
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr lt(Expr a, Expr b);
Expr le(Expr a, Expr b);
Expr eq(Expr a, Expr b);
Expr land(Expr a, Expr b);
Expr lor(Expr a, Expr b);
Expr lxor(Expr a, Expr b);
Expr lnot(Expr a);
// c ? then : otherwise
Expr mux(Expr c, Expr then, Expr otherwise);
// Balanced, so depth stays logarithmic in the number of terms.
Expr sum(std::span<const Expr> xs);
Expr any(std::span<const Expr> xs);
}  // namespace expr

struct VarDecl {
  ShareType type = ShareType::Arith;
  u128 max = 0;  // inclusive upper bound; 1 for bool
};

// A monitor: next-state function, flag function, declared input ranges.
struct Spec {
  std::vector<VarDecl> state;
  std::vector<VarDecl> obs;
  std::vector<u128> param_max;
  std::vector<Expr> next;
  Expr flag;
  // Keep the old state in the round that raises the flag.
  bool guard = false;
};

class CompileError : public Error {
 public:
  using Error::Error;
};

// Type of an expression; throws CompileError on ill-typed trees.
ShareType type_of(const Spec& s, const Expr& e);
void check_spec(const Spec& s);

// Comparisons get width max(needed, 32) clipped to what the modulus supports;
// an operand range that does not fit throws CompileError.
Program compile(const Spec& s, const Modulus& m);

// Direct evaluation, the reference for the compiler.
RoundResult evaluate(const Spec& s, const Modulus& m, std::span<const u128> state, std::span<const u128> obs,
                     std::span<const u128> params);

// ---- scenarios -------------------------------------------------------------

inline constexpr u64 kUnboundedRounds = ~u64{0};
// Counters in unbounded sessions are sized for this many rounds.
inline constexpr u64 kUnboundedHorizon = 1'000'000;

struct ScenarioConfig {
  std::string name = "acs";  // acs | locks | car | bloodsugar | custom
  u64 size = 1;              // doors | locks | dimensions | unused
  Modulus modulus = Modulus::default_prime();
  u64 rounds = 50;

  u128 max_events = 5;  // acs: per door, per kind, per round

  u128 r_base = 100;  // car
  u128 growth = 1;
  u128 r_max = 200;
  u128 max_step = 5;

  u128 threshold = 200;  // bloodsugar
  u64 window_lo = 600;
  u64 window_hi = 700;
  u128 reading_max = 400;

  std::string program;  // custom: path to a program text
  std::vector<u128> initial;
  std::vector<u128> obs_max;

  u64 horizon() const { return rounds == kUnboundedRounds ? kUnboundedHorizon : std::max<u64>(rounds, 1); }

  static ScenarioConfig from(KeyValues& kv);
  // The keys `from` understands, for writing config files.
  std::string to_text() const;
};

struct Scenario {
  ScenarioConfig config;
  Spec spec;  // empty for custom programs
  Program program;
  std::vector<u128> initial_state;
  std::vector<ShareType> obs_types;
  std::vector<u128> obs_max;
  std::function<std::vector<u128>(u64 round)> params;

  // Range and encoding checks done by the System before sharing.
  void check_observation(std::span<const u128> obs) const;
  std::vector<std::vector<u128>> random_trace(Prg& rng, u64 rounds) const;
};

Scenario build_acs(const ScenarioConfig& c);
Scenario build_locks(const ScenarioConfig& c);
Scenario build_car(const ScenarioConfig& c);
Scenario build_bloodsugar(const ScenarioConfig& c);
Scenario build_custom(const ScenarioConfig& c);
Scenario build_scenario(const ScenarioConfig& c);

// Plaintext monitor written directly from each scenario's property, with no
// use of the compiler. Rounds are numbered from 1.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual u8 step(std::span<const u128> obs, u64 round) = 0;
};
std::unique_ptr<Oracle> make_oracle(const Scenario& s);

// Trace files: one round per line, values separated by commas or spaces.
std::vector<std::vector<u128>> read_trace(std::istream& in, const Scenario& s);
void write_trace(std::ostream& out, const std::vector<std::vector<u128>>& trace);

}  // namespace privmon
