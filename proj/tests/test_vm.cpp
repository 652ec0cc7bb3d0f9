#include <gtest/gtest.h>

#include "privmon/vm.hpp"
#include "support.hpp"

namespace privmon {
namespace {

using testing::Cluster;

struct SecureRun {
  u8 flag = 0;
  std::vector<u128> next;
  u64 rounds = 0;
  MaterialCounts material;
  std::vector<std::pair<OpenKind, u64>> opens;
};

// Shares the plaintext inputs, runs one round on every party, reconstructs.
SecureRun run_secure(Cluster& c, const Program& prog, const std::vector<u128>& state, const std::vector<u128>& obs,
                     const std::vector<u128>& params = {}, u32 round = 1) {
  const Machine vm(prog, c.modulus());
  c.stock(vm.cost().material);
  Prg rng(round, "vm-inputs");
  auto share = [&](const std::vector<u32>& regs, const std::vector<u128>& values) {
    std::vector<std::vector<u128>> per(c.parties(), std::vector<u128>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (prog.regs[regs[i]] == ShareType::Bool) {
        const auto b = c.share_bits({static_cast<u8>(values[i] & 1)}, rng);
        for (unsigned p = 0; p < c.parties(); ++p) per[p][i] = b[p][0];
      } else {
        const auto a = c.share_arith({values[i]}, rng);
        for (unsigned p = 0; p < c.parties(); ++p) per[p][i] = a[p][0];
      }
    }
    return per;
  };
  const auto st = share(prog.state, state);
  const auto ob = share(prog.obs, obs);

  SecureRun out;
  const u64 before = c.ctx(1).comm_rounds();
  const auto before_mat = c.ctx(1).ledger().consumed();
  c.ctx(1).clear_open_log();
  auto results = c.run<RoundResult>([&](PartyContext& ctx) {
    ctx.begin_round(round);
    return vm.execute_round(ctx, st[ctx.id() - 1], ob[ctx.id() - 1], params);
  });
  out.rounds = c.ctx(1).comm_rounds() - before;
  out.material = c.ctx(1).ledger().consumed() - before_mat;
  for (const auto& r : c.ctx(1).open_log()) out.opens.emplace_back(r.kind, r.count);
  out.flag = results[0].flag;
  for (const auto& r : results) EXPECT_EQ(r.flag, out.flag);
  for (std::size_t i = 0; i < prog.next.size(); ++i) {
    if (prog.regs[prog.next[i]] == ShareType::Bool) {
      u8 acc = 0;
      for (const auto& r : results) acc ^= static_cast<u8>(r.next_state[i]);
      out.next.push_back(acc);
    } else {
      std::vector<u128> col;
      for (const auto& r : results) col.push_back(r.next_state[i]);
      out.next.push_back(c.arith().reconstruct(col));
    }
  }
  return out;
}

const char* kThreshold = R"(
reg 0 arith   ; observation x
reg 1 bool
obs R0
flag R1
LT R1 $3 R0 #8
REVEAL flag R1
)";

TEST(Vm, ThresholdExample) {
  const auto prog = parse_program(kThreshold);
  Cluster c(SchemeId::shamir(Modulus::default_prime(), 1, 3));
  const auto r = run_secure(c, prog, {}, {7});
  EXPECT_EQ(r.flag, 1);
  EXPECT_EQ(interpret(prog, c.modulus(), {}, std::vector<u128>{7}, {}).flag, 1);
  EXPECT_EQ(run_secure(c, prog, {}, {3}, {}, 2).flag, 0);
  EXPECT_EQ(run_secure(c, prog, {}, {2}, {}, 3).flag, 0);
}

TEST(Vm, StateUpdateInRing) {
  const auto prog = parse_program(R"(
reg 0 arith
reg 1 arith
reg 2 arith
reg 3 bool
state R0
obs R1
next R2
flag R3
ADD R2 R0 R1
EQ R3 R2 $15 #7
REVEAL flag R3
)");
  Cluster c(SchemeId::additive(Modulus::power_of_two(8), 3));
  const auto r = run_secure(c, prog, {10}, {5});
  ASSERT_EQ(r.next.size(), 1u);
  EXPECT_EQ(r.next[0], 15u);
  EXPECT_EQ(r.flag, 1);
  const auto wrap = run_secure(c, prog, {250}, {10}, {}, 2);
  EXPECT_EQ(wrap.next[0], 4u);
  EXPECT_EQ(wrap.flag, 0);
}

const char* kConjunction = R"(
reg 0 arith  ; x
reg 1 arith  ; mu
reg 2 bool
reg 3 bool
reg 4 bool
state R1
obs R0
next R1
flag R4
LT R2 $100 R0 #8
EQ R3 R1 $5 #8
AND R4 R2 R3
REVEAL flag R4
)";

TEST(Vm, ConjunctionExample) {
  const auto prog = parse_program(kConjunction);
  for (const auto& scheme : {SchemeId::shamir(Modulus::default_prime(), 1, 3),
                             SchemeId::additive(Modulus::power_of_two(16), 2)}) {
    Cluster c(scheme);
    struct Case {
      u128 x, mu;
      u8 flag;
    };
    u32 round = 1;
    for (const Case& k : {Case{150, 5, 1}, Case{50, 5, 0}, Case{150, 4, 0}, Case{100, 5, 0}, Case{101, 5, 1}}) {
      const auto r = run_secure(c, prog, {k.mu}, {k.x}, {}, round++);
      EXPECT_EQ(r.flag, k.flag) << scheme.to_string() << " x=" << u128_to_string(k.x);
      EXPECT_EQ(r.next[0], k.mu);
    }
  }
}

TEST(Vm, ComparisonsShareOneWave) {
  const auto prog = parse_program(kConjunction);
  const auto steps = schedule(prog);
  std::size_t interactive = 0;
  for (const auto& s : steps) interactive += is_interactive(s.op);
  // EQ and LT in one wave, then AND, then REVEAL.
  EXPECT_EQ(interactive, 4u);
  const auto m = Modulus::default_prime();
  const auto lt = engine::cost_less_than(m, 8, 1);
  const auto eq = engine::cost_equal(m, 8, 1);
  EXPECT_EQ(cost_estimate(prog, m).rounds, lt.rounds + eq.rounds + 1 + 1);
}

TEST(Vm, ParamsFeedConstants) {
  const auto prog = parse_program(R"(
reg 0 arith
reg 1 arith
reg 2 bool
obs R0
params 1
flag R2
ADDC R1 R0 @0
LT R2 R1 $10 #7
REVEAL flag R2
)");
  Cluster c(SchemeId::additive(Modulus::prime(257), 3));
  EXPECT_EQ(run_secure(c, prog, {}, {4}, {5}).flag, 1);
  EXPECT_EQ(run_secure(c, prog, {}, {4}, {6}, 2).flag, 0);
  EXPECT_THROW(interpret(prog, c.modulus(), {}, std::vector<u128>{4}, {}), DomainError);
}

// ---- type checking ---------------------------------------------------------

bool mentions(const std::vector<TypeDiagnostic>& d, const std::string& needle) {
  for (const auto& x : d) {
    if (x.message.find(needle) != std::string::npos) return true;
  }
  return false;
}

Program base() { return parse_program(kThreshold); }

TEST(Typecheck, AcceptsExamples) {
  EXPECT_TRUE(typecheck(parse_program(kThreshold)).empty());
  EXPECT_TRUE(typecheck(parse_program(kConjunction)).empty());
}

TEST(Typecheck, RejectsBooleanIntoArithmetic) {
  auto p = base();
  p.regs.push_back(ShareType::Arith);
  p.code.insert(p.code.end() - 1, Instruction{Opcode::Add, 4, 0, 1});
  const auto d = typecheck(p);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].instr, p.code.size() - 2);
  EXPECT_TRUE(mentions(d, "has type bool, expected arith"));
}

TEST(Typecheck, RejectsReadBeforeWrite) {
  const auto d = typecheck(parse_program(R"(
reg 0 bool
reg 1 bool
reg 2 bool
flag R2
XOR R2 R1 R0
REVEAL flag R2
)"));
  EXPECT_TRUE(mentions(d, "R1 is read before it is written"));
  EXPECT_TRUE(mentions(d, "R0 is read before it is written"));
}

TEST(Typecheck, RejectsDoubleWriteAndInputWrite) {
  const auto d = typecheck(parse_program(R"(
reg 0 bool
reg 1 bool
obs R0
flag R1
NOT R1 R0
NOT R1 R0
NOT R0 R1
REVEAL flag R1
)"));
  EXPECT_TRUE(mentions(d, "R1 is written twice"));
  EXPECT_TRUE(mentions(d, "R0 is written twice"));
}

TEST(Typecheck, RequiresExactlyOneReveal) {
  auto p = base();
  p.code.pop_back();
  EXPECT_TRUE(mentions(typecheck(p), "missing REVEAL"));
  EXPECT_THROW(require_well_typed(p), DomainError);
  EXPECT_THROW(Machine(p, Modulus::default_prime()), DomainError);
  auto twice = base();
  twice.code.push_back(twice.code.back());
  EXPECT_TRUE(mentions(typecheck(twice), "more than one REVEAL"));
}

TEST(Typecheck, RejectsMismatchedNextState) {
  const auto d = typecheck(parse_program(R"(
reg 0 arith
reg 1 bool
state R0
obs R1
next R1
flag R1
REVEAL flag R1
)"));
  EXPECT_TRUE(mentions(d, "does not match the type"));
  auto p = base();
  p.next.push_back(0);
  EXPECT_TRUE(mentions(typecheck(p), "next lists 1 registers for 0"));
}

TEST(Typecheck, RejectsMissingWidthAndFlag) {
  auto p = base();
  p.code[2].width = 0;
  EXPECT_TRUE(mentions(typecheck(p), "width annotation"));
  auto q = base();
  q.flag = kNoReg;
  EXPECT_TRUE(mentions(typecheck(q), "no flag register"));
}

// ---- text form -------------------------------------------------------------

TEST(Parse, ReportsLineAndColumn) {
  try {
    parse_program("reg 0 arith\nreg 1 bool\nLT R1 R0 Rx #8\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 10u);
  }
  EXPECT_THROW(parse_program("FOO R1 R2\n"), ParseError);
  EXPECT_THROW(parse_program("reg 0 int\n"), ParseError);
  EXPECT_THROW(parse_program("reg 0 bool\nreg 0 bool\n"), ParseError);
  EXPECT_THROW(parse_program("reg 0 arith\nreg 1 bool\nLT R1 R0 R0\n"), ParseError);
  EXPECT_THROW(parse_program("reg 0 arith\nreg 1 bool\nLT R1 $1 $2 #4\n"), ParseError);
  EXPECT_THROW(parse_program("reg 0 arith\nADD R0 R0 R0 R0\n"), ParseError);
  EXPECT_THROW(parse_program("reg 1 arith\n"), ParseError);
}

TEST(Parse, LiteralsExpandThroughZeroRegister) {
  const auto p = parse_program(kThreshold);
  ASSERT_EQ(p.code.size(), 4u);
  EXPECT_EQ(p.code[0].op, Opcode::Sub);
  EXPECT_EQ(p.code[1].op, Opcode::AddC);
  EXPECT_EQ(p.code[1].constant, 3u);
  EXPECT_EQ(p.code[2].src1, p.code[1].dst);
  EXPECT_EQ(p.code[2].src2, 0u);
}

TEST(Parse, PrintRoundTrips) {
  for (const char* text : {kThreshold, kConjunction}) {
    const auto p = parse_program(text);
    const auto printed = print_program(p);
    EXPECT_EQ(parse_program(printed), p);
    EXPECT_EQ(print_program(parse_program(printed)), printed);
  }
}

// ---- random programs ---------------------------------------------------------

u64 below(Prg& rng, u64 n) { return rng.next_u64() % n; }

struct RandomProgram {
  Program prog;
  std::vector<u128> state, obs;
  std::vector<u128> params;
};

// Comparisons only read small registers (inputs and literals) so that the
// plaintext reference never rejects an operand.
RandomProgram random_program(Prg& rng, unsigned width, std::size_t length) {
  RandomProgram out;
  Program& p = out.prog;
  std::vector<u32> arith, small, bools;
  auto fresh = [&](ShareType t) {
    p.regs.push_back(t);
    return static_cast<u32>(p.regs.size() - 1);
  };
  auto small_value = [&] { return below(rng, u128{1} << width); };
  const std::size_t n_state = 1 + below(rng, 3);
  for (std::size_t i = 0; i < n_state; ++i) {
    const bool is_bool = below(rng, 3) == 0;
    const u32 r = fresh(is_bool ? ShareType::Bool : ShareType::Arith);
    p.state.push_back(r);
    out.state.push_back(is_bool ? below(rng, 2) : small_value());
    (is_bool ? bools : small).push_back(r);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const bool is_bool = i == 2;
    const u32 r = fresh(is_bool ? ShareType::Bool : ShareType::Arith);
    p.obs.push_back(r);
    out.obs.push_back(is_bool ? below(rng, 2) : small_value());
    (is_bool ? bools : small).push_back(r);
  }
  arith = small;
  p.params = 1;
  out.params.push_back(below(rng, 1000));
  auto pick = [&](const std::vector<u32>& v) { return v[below(rng, v.size())]; };
  for (std::size_t i = 0; i < length; ++i) {
    Instruction ins;
    switch (below(rng, 10)) {
      case 0: ins = {Opcode::Add, fresh(ShareType::Arith), pick(arith), pick(arith)}; break;
      case 1: ins = {Opcode::Sub, fresh(ShareType::Arith), pick(arith), pick(arith)}; break;
      case 2: ins = {Opcode::Mul, fresh(ShareType::Arith), pick(arith), pick(arith)}; break;
      case 3:
        ins = {Opcode::AddC, fresh(ShareType::Arith), pick(arith)};
        if (below(rng, 2)) {
          ins.param = 0;
        } else {
          ins.constant = below(rng, 1000);
        }
        break;
      case 4: ins = {Opcode::Xor, fresh(ShareType::Bool), pick(bools), pick(bools)}; break;
      case 5: ins = {Opcode::And, fresh(ShareType::Bool), pick(bools), pick(bools)}; break;
      case 6: ins = {Opcode::Not, fresh(ShareType::Bool), pick(bools)}; break;
      case 7: ins = {Opcode::Lt, fresh(ShareType::Bool), pick(small), pick(small), width}; break;
      case 8: ins = {Opcode::Eq, fresh(ShareType::Bool), pick(small), pick(small), width}; break;
      default: ins = {Opcode::B2A, fresh(ShareType::Arith), pick(bools)}; break;
    }
    p.code.push_back(ins);
    (p.regs[ins.dst] == ShareType::Bool ? bools : arith).push_back(ins.dst);
  }
  u32 flag = bools[0];
  for (std::size_t i = 1; i < bools.size(); ++i) {
    const u32 r = fresh(ShareType::Bool);
    p.code.push_back({Opcode::Xor, r, flag, bools[i]});
    flag = r;
  }
  p.flag = flag;
  p.code.push_back({Opcode::Reveal, kNoReg, flag});
  for (u32 s : p.state) p.next.push_back(pick(p.regs[s] == ShareType::Bool ? bools : arith));
  return out;
}

class RandomPrograms : public ::testing::TestWithParam<SchemeId> {};

TEST_P(RandomPrograms, SecureMatchesPlaintextAndStaticCost) {
  const SchemeId scheme = GetParam();
  Cluster c(scheme, 7);
  Prg rng(11, "random-programs");
  const unsigned width = std::min(8u, max_compare_width(c.modulus()));
  for (u32 trial = 1; trial <= 25; ++trial) {
    const auto rp = random_program(rng, width, 4 + below(rng, 20));
    ASSERT_TRUE(typecheck(rp.prog).empty());
    ASSERT_EQ(parse_program(print_program(rp.prog)), rp.prog);
    const auto want = interpret(rp.prog, c.modulus(), rp.state, rp.obs, rp.params);
    const auto got = run_secure(c, rp.prog, rp.state, rp.obs, rp.params, trial);
    EXPECT_EQ(got.flag, want.flag) << print_program(rp.prog);
    EXPECT_EQ(got.next, want.next_state) << print_program(rp.prog);
    const auto cost = cost_estimate(rp.prog, c.modulus());
    EXPECT_EQ(got.rounds, cost.rounds);
    EXPECT_EQ(got.material, cost.material);
    EXPECT_EQ(got.opens, cost.opens);
  }
}

INSTANTIATE_TEST_SUITE_P(Schemes, RandomPrograms,
                         ::testing::Values(SchemeId::additive(Modulus::power_of_two(32), 3),
                                           SchemeId::shamir(Modulus::default_prime(), 1, 3),
                                           SchemeId::additive(Modulus::default_prime(), 2),
                                           SchemeId::shamir(Modulus::prime(257), 2, 5)));

}  // namespace
}  // namespace privmon
