#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "privmon/engine.hpp"

namespace privmon {

enum class Opcode : u8 { Add, Sub, Mul, AddC, Xor, And, Not, Lt, Eq, B2A, Reveal };

const char* mnemonic(Opcode op);
std::optional<Opcode> parse_opcode(std::string_view text);
// Whether the instruction needs communication.
bool is_interactive(Opcode op);

inline constexpr u32 kNoReg = std::numeric_limits<u32>::max();

struct Instruction {
  Opcode op = Opcode::Add;
  u32 dst = kNoReg;
  u32 src1 = kNoReg;
  u32 src2 = kNoReg;
  unsigned width = 0;   // LT / EQ
  u128 constant = 0;    // ADDC
  int param = -1;       // ADDC: index of a public per-round parameter instead

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

// Straight-line per-round body. Registers are single-assignment; state and
// observation registers are inputs, `next` lists the registers carried into
// the following round as the new state (same order and types as `state`).
struct Program {
  std::vector<ShareType> regs;
  std::vector<u32> state;
  std::vector<u32> obs;
  std::vector<u32> next;
  u32 flag = kNoReg;
  u32 params = 0;
  std::vector<Instruction> code;

  friend bool operator==(const Program&, const Program&) = default;
};

struct TypeDiagnostic {
  static constexpr std::size_t kProgram = std::numeric_limits<std::size_t>::max();
  std::size_t instr;  // kProgram for declaration-level problems
  std::string message;
};

std::vector<TypeDiagnostic> typecheck(const Program& p);
// Throws DomainError listing every diagnostic.
void require_well_typed(const Program& p);

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_, column_;
};

// Text form, one item per line:
//   reg <idx> arith|bool
//   state R.. / obs R.. / next R.. / flag R<idx> / params <count>
//   OPCODE dst src1 [src2] [#width] [const]
// Constants are decimal or 0x-hex; `@k` names per-round parameter k. LT and
// EQ accept a literal `$c` operand, expanded through a zero register and ADDC.
// `;` starts a comment.
Program parse_program(std::string_view text);
std::string print_program(const Program& p);

// Execution order: local instructions run as soon as their inputs exist;
// ready interactive instructions are batched by (opcode, width) per wave.
struct Step {
  Opcode op;
  unsigned width = 0;
  std::vector<u32> instrs;
};
std::vector<Step> schedule(const Program& p);

// Static per-round cost: material, rounds and openings in execution order.
engine::OpCost cost_estimate(const Program& p, const Modulus& m);

struct RoundResult {
  u8 flag = 0;
  std::vector<u128> next_state;  // this party's shares (bits as 0/1)
};

// One party's executor for a checked program.
class Machine {
 public:
  Machine(Program p, const Modulus& m);

  const Program& program() const { return program_; }
  const std::vector<Step>& steps() const { return steps_; }
  const engine::OpCost& cost() const { return cost_; }

  RoundResult execute_round(PartyContext& ctx, std::span<const u128> state, std::span<const u128> obs,
                            std::span<const u128> params) const;

 private:
  Program program_;
  std::vector<Step> steps_;
  engine::OpCost cost_;
};

// Plaintext reference: same program over public values. Throws DomainError
// when an LT/EQ operand does not fit its declared width.
RoundResult interpret(const Program& p, const Modulus& m, std::span<const u128> state, std::span<const u128> obs,
                      std::span<const u128> params);

}  // namespace privmon
