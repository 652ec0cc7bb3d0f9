#include "privmon/vm.hpp"

#include <cctype>
#include <map>
#include <sstream>

namespace privmon {

namespace {

struct Signature {
  int sources;
  ShareType in;
  std::optional<ShareType> out;
};

Signature signature(Opcode op) {
  switch (op) {
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
      return {2, ShareType::Arith, ShareType::Arith};
    case Opcode::AddC:
      return {1, ShareType::Arith, ShareType::Arith};
    case Opcode::Xor:
    case Opcode::And:
      return {2, ShareType::Bool, ShareType::Bool};
    case Opcode::Not:
      return {1, ShareType::Bool, ShareType::Bool};
    case Opcode::Lt:
    case Opcode::Eq:
      return {2, ShareType::Arith, ShareType::Bool};
    case Opcode::B2A:
      return {1, ShareType::Bool, ShareType::Arith};
    case Opcode::Reveal:
      return {1, ShareType::Bool, std::nullopt};
  }
  return {0, ShareType::Arith, std::nullopt};
}

constexpr std::pair<Opcode, const char*> kMnemonics[] = {
    {Opcode::Add, "ADD"}, {Opcode::Sub, "SUB"}, {Opcode::Mul, "MUL"}, {Opcode::AddC, "ADDC"},
    {Opcode::Xor, "XOR"}, {Opcode::And, "AND"}, {Opcode::Not, "NOT"}, {Opcode::Lt, "LT"},
    {Opcode::Eq, "EQ"},   {Opcode::B2A, "B2A"}, {Opcode::Reveal, "REVEAL"}};

}  // namespace

const char* mnemonic(Opcode op) {
  for (const auto& [o, name] : kMnemonics) {
    if (o == op) return name;
  }
  return "?";
}

std::optional<Opcode> parse_opcode(std::string_view text) {
  for (const auto& [o, name] : kMnemonics) {
    if (text == name) return o;
  }
  return std::nullopt;
}

bool is_interactive(Opcode op) {
  switch (op) {
    case Opcode::Mul:
    case Opcode::And:
    case Opcode::Lt:
    case Opcode::Eq:
    case Opcode::B2A:
    case Opcode::Reveal:
      return true;
    default:
      return false;
  }
}

// ---- type checking ---------------------------------------------------------

std::vector<TypeDiagnostic> typecheck(const Program& p) {
  std::vector<TypeDiagnostic> out;
  const auto prog = [&](std::string msg) { out.push_back({TypeDiagnostic::kProgram, std::move(msg)}); };
  const std::size_t n = p.regs.size();
  std::vector<bool> written(n, false);
  std::vector<bool> input(n, false);

  auto declare_inputs = [&](const std::vector<u32>& regs, const char* what) {
    for (u32 r : regs) {
      if (r >= n) {
        prog(std::string(what) + " register R" + std::to_string(r) + " is not declared");
      } else if (input[r]) {
        prog("register R" + std::to_string(r) + " is listed as an input twice");
      } else {
        input[r] = written[r] = true;
      }
    }
  };
  declare_inputs(p.state, "state");
  declare_inputs(p.obs, "observation");

  std::size_t reveals = 0;
  for (std::size_t i = 0; i < p.code.size(); ++i) {
    const Instruction& ins = p.code[i];
    const Signature sig = signature(ins.op);
    const auto diag = [&](std::string msg) { out.push_back({i, std::string(mnemonic(ins.op)) + ": " + msg}); };
    const u32 srcs[2] = {ins.src1, ins.src2};
    for (int s = 0; s < 2; ++s) {
      const u32 r = srcs[s];
      if (s >= sig.sources) {
        if (r != kNoReg) diag("unexpected operand " + std::to_string(s + 1));
        continue;
      }
      if (r == kNoReg || r >= n) {
        diag("operand " + std::to_string(s + 1) + " is not a declared register");
        continue;
      }
      if (p.regs[r] != sig.in) {
        diag("operand R" + std::to_string(r) + " has type " + to_string(p.regs[r]) + ", expected " +
             to_string(sig.in));
      }
      if (!written[r]) diag("R" + std::to_string(r) + " is read before it is written");
    }
    if (ins.op == Opcode::Lt || ins.op == Opcode::Eq) {
      if (ins.width == 0) diag("comparison needs a width annotation");
    } else if (ins.width != 0) {
      diag("only LT and EQ take a width");
    }
    if (ins.op == Opcode::AddC) {
      if (ins.param >= 0 && static_cast<u32>(ins.param) >= p.params) {
        diag("parameter @" + std::to_string(ins.param) + " is not declared");
      }
    }
    if (ins.op == Opcode::Reveal) {
      ++reveals;
      if (ins.dst != kNoReg) diag("REVEAL writes no register");
      if (ins.src1 != p.flag) diag("REVEAL must target the flag register");
      continue;
    }
    if (ins.dst == kNoReg || ins.dst >= n) {
      diag("destination is not a declared register");
      continue;
    }
    if (p.regs[ins.dst] != *sig.out) {
      diag("destination R" + std::to_string(ins.dst) + " has type " + to_string(p.regs[ins.dst]) + ", expected " +
           to_string(*sig.out));
    }
    if (written[ins.dst]) diag("R" + std::to_string(ins.dst) + " is written twice");
    written[ins.dst] = true;
  }

  if (p.flag == kNoReg) {
    prog("no flag register declared");
  } else if (p.flag >= n || p.regs[p.flag] != ShareType::Bool) {
    prog("flag register must be a declared bool register");
  }
  if (reveals == 0) prog("missing REVEAL of the flag");
  if (reveals > 1) prog("more than one REVEAL");
  if (p.next.size() != p.state.size()) {
    prog("next lists " + std::to_string(p.next.size()) + " registers for " + std::to_string(p.state.size()) +
         " state registers");
  } else {
    for (std::size_t i = 0; i < p.next.size(); ++i) {
      const u32 r = p.next[i];
      if (r >= n || p.state[i] >= n) continue;
      if (!written[r]) prog("next-state register R" + std::to_string(r) + " is never written");
      if (p.regs[r] != p.regs[p.state[i]]) {
        prog("next-state register R" + std::to_string(r) + " does not match the type of R" +
             std::to_string(p.state[i]));
      }
    }
  }
  return out;
}

void require_well_typed(const Program& p) {
  const auto diags = typecheck(p);
  if (diags.empty()) return;
  std::string msg = "ill-typed program:";
  for (const auto& d : diags) {
    msg += "\n  ";
    if (d.instr != TypeDiagnostic::kProgram) msg += "instruction " + std::to_string(d.instr) + ": ";
    msg += d.message;
  }
  throw DomainError(msg);
}

// ---- text form -------------------------------------------------------------

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& what)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

namespace {

struct Token {
  std::string text;
  std::size_t column;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ';') break;
    if (std::isspace(static_cast<unsigned char>(line[i])) || line[i] == ',') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != ',' &&
           line[i] != ';') {
      ++i;
    }
    out.push_back({std::string(line.substr(start, i - start)), start + 1});
  }
  return out;
}

// Instruction operand before literal expansion.
struct Pending {
  Instruction ins;
  std::optional<u128> lit1, lit2;
  std::size_t line;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Program run() {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      auto nl = text_.find('\n', pos);
      if (nl == std::string_view::npos) nl = text_.size();
      ++line_no;
      line_ = line_no;
      toks_ = tokenize(text_.substr(pos, nl - pos));
      if (!toks_.empty()) parse_line();
      pos = nl + 1;
    }
    return finish();
  }

 private:
  [[noreturn]] void fail(std::size_t tok, const std::string& msg) const {
    const std::size_t col = tok < toks_.size() ? toks_[tok].column : (toks_.empty() ? 1 : toks_.back().column);
    throw ParseError(line_, col, msg);
  }

  const std::string& tok(std::size_t i) const {
    if (i >= toks_.size()) fail(i, "missing operand");
    return toks_[i].text;
  }

  u32 reg(std::size_t i) const {
    std::string t = tok(i);
    if (!t.empty() && (t[0] == 'R' || t[0] == 'r')) t.erase(0, 1);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
      fail(i, "expected a register, got '" + tok(i) + "'");
    }
    const unsigned long v = std::stoul(t);
    if (v >= kNoReg) fail(i, "register index too large");
    return static_cast<u32>(v);
  }

  u128 number(std::size_t i, std::string_view t) const {
    try {
      return parse_u128(t);
    } catch (const DomainError& e) {
      fail(i, e.what());
    }
  }

  void expect_end(std::size_t n) const {
    if (toks_.size() > n) fail(n, "unexpected token '" + toks_[n].text + "'");
  }

  std::vector<u32> reg_list() const {
    std::vector<u32> out;
    for (std::size_t i = 1; i < toks_.size(); ++i) out.push_back(reg(i));
    return out;
  }

  void parse_line() {
    const std::string& head = toks_[0].text;
    if (head == "reg") {
      const u32 r = reg(1);
      const std::string& t = tok(2);
      ShareType st;
      if (t == "arith") {
        st = ShareType::Arith;
      } else if (t == "bool") {
        st = ShareType::Bool;
      } else {
        fail(2, "register type must be arith or bool");
      }
      expect_end(3);
      if (r < declared_.size() && declared_[r]) fail(1, "register R" + std::to_string(r) + " declared twice");
      if (r >= prog_.regs.size()) {
        prog_.regs.resize(r + 1, ShareType::Arith);
        declared_.resize(r + 1, false);
      }
      prog_.regs[r] = st;
      declared_[r] = true;
      return;
    }
    if (head == "state") return void(prog_.state = reg_list());
    if (head == "obs") return void(prog_.obs = reg_list());
    if (head == "next") return void(prog_.next = reg_list());
    if (head == "flag") {
      prog_.flag = reg(1);
      return expect_end(2);
    }
    if (head == "params") {
      const u128 v = number(1, tok(1));
      if (v > 1'000'000) fail(1, "too many parameters");
      prog_.params = static_cast<u32>(v);
      return expect_end(2);
    }
    const auto op = parse_opcode(head);
    if (!op) fail(0, "unknown opcode or directive '" + head + "'");
    Pending p{{}, std::nullopt, std::nullopt, line_};
    p.ins.op = *op;
    std::size_t i = 1;
    if (*op == Opcode::Reveal) {
      if (tok(1) != "flag") fail(1, "REVEAL takes 'flag' as its destination");
      p.ins.src1 = reg(2);
      expect_end(3);
      pending_.push_back(p);
      return;
    }
    p.ins.dst = reg(i++);
    const int sources = signature(*op).sources;
    const bool literals = *op == Opcode::Lt || *op == Opcode::Eq;
    for (int s = 0; s < sources; ++s, ++i) {
      const std::string& t = tok(i);
      if (literals && !t.empty() && t[0] == '$') {
        (s == 0 ? p.lit1 : p.lit2) = number(i, std::string_view(t).substr(1));
      } else {
        (s == 0 ? p.ins.src1 : p.ins.src2) = reg(i);
      }
    }
    if (literals) {
      const std::string& t = tok(i);
      if (t.size() < 2 || t[0] != '#') fail(i, "expected a #width annotation");
      const u128 w = number(i, std::string_view(t).substr(1));
      if (w == 0 || w > 128) fail(i, "width must be in 1..128");
      p.ins.width = static_cast<unsigned>(w);
      ++i;
    }
    if (*op == Opcode::AddC) {
      const std::string& t = tok(i);
      if (!t.empty() && t[0] == '@') {
        const u128 k = number(i, std::string_view(t).substr(1));
        if (k > 1'000'000) fail(i, "parameter index too large");
        p.ins.param = static_cast<int>(k);
      } else {
        p.ins.constant = number(i, t);
      }
      ++i;
    }
    expect_end(i);
    pending_.push_back(p);
  }

  Program finish() {
    for (std::size_t r = 0; r < declared_.size(); ++r) {
      if (!declared_[r]) throw ParseError(0, 0, "register R" + std::to_string(r) + " is used as an index but never declared");
    }
    for (auto& p : pending_) {
      if (p.lit1 || p.lit2) {
        if (p.lit1 && p.lit2) throw ParseError(p.line, 1, "comparison needs at least one register operand");
        const u32 base = p.lit1 ? p.ins.src2 : p.ins.src1;
        const u32 zero = fresh();
        const u32 lit = fresh();
        prog_.code.push_back({Opcode::Sub, zero, base, base});
        Instruction load{Opcode::AddC, lit, zero};
        load.constant = p.lit1 ? *p.lit1 : *p.lit2;
        prog_.code.push_back(load);
        (p.lit1 ? p.ins.src1 : p.ins.src2) = lit;
      }
      prog_.code.push_back(p.ins);
    }
    return prog_;
  }

  u32 fresh() {
    prog_.regs.push_back(ShareType::Arith);
    return static_cast<u32>(prog_.regs.size() - 1);
  }

  std::string_view text_;
  std::size_t line_ = 0;
  std::vector<Token> toks_;
  Program prog_;
  std::vector<bool> declared_;
  std::vector<Pending> pending_;
};

std::string reg_name(u32 r) { return "R" + std::to_string(r); }

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).run(); }

std::string print_program(const Program& p) {
  std::ostringstream os;
  for (std::size_t r = 0; r < p.regs.size(); ++r) os << "reg " << r << ' ' << to_string(p.regs[r]) << '\n';
  auto list = [&](const char* head, const std::vector<u32>& regs) {
    os << head;
    for (u32 r : regs) os << ' ' << reg_name(r);
    os << '\n';
  };
  list("state", p.state);
  list("obs", p.obs);
  list("next", p.next);
  if (p.params) os << "params " << p.params << '\n';
  if (p.flag != kNoReg) os << "flag " << reg_name(p.flag) << '\n';
  for (const auto& ins : p.code) {
    os << mnemonic(ins.op);
    if (ins.op == Opcode::Reveal) {
      os << " flag " << reg_name(ins.src1) << '\n';
      continue;
    }
    os << ' ' << reg_name(ins.dst) << ' ' << reg_name(ins.src1);
    if (ins.src2 != kNoReg) os << ' ' << reg_name(ins.src2);
    if (ins.width) os << " #" << ins.width;
    if (ins.op == Opcode::AddC) {
      if (ins.param >= 0) {
        os << " @" << ins.param;
      } else {
        os << ' ' << u128_to_string(ins.constant);
      }
    }
    os << '\n';
  }
  return os.str();
}

// ---- scheduling and cost ---------------------------------------------------

std::vector<Step> schedule(const Program& p) {
  require_well_typed(p);
  std::vector<bool> ready(p.regs.size(), false);
  for (u32 r : p.state) ready[r] = true;
  for (u32 r : p.obs) ready[r] = true;
  std::vector<bool> done(p.code.size(), false);
  std::size_t remaining = p.code.size();
  auto inputs_ready = [&](const Instruction& ins) {
    return (ins.src1 == kNoReg || ready[ins.src1]) && (ins.src2 == kNoReg || ready[ins.src2]);
  };
  auto finish = [&](std::size_t i) {
    done[i] = true;
    --remaining;
    if (p.code[i].dst != kNoReg) ready[p.code[i].dst] = true;
  };

  std::vector<Step> steps;
  while (remaining > 0) {
    for (std::size_t i = 0; i < p.code.size(); ++i) {
      const auto& ins = p.code[i];
      if (done[i] || is_interactive(ins.op) || !inputs_ready(ins)) continue;
      steps.push_back({ins.op, 0, {static_cast<u32>(i)}});
      finish(i);
    }
    std::map<std::pair<Opcode, unsigned>, std::vector<u32>> wave;
    for (std::size_t i = 0; i < p.code.size(); ++i) {
      const auto& ins = p.code[i];
      if (done[i] || !is_interactive(ins.op) || !inputs_ready(ins)) continue;
      wave[{ins.op, ins.width}].push_back(static_cast<u32>(i));
    }
    if (wave.empty()) {
      if (remaining > 0) throw DomainError("program has instructions whose inputs never become available");
      break;
    }
    for (auto& [key, instrs] : wave) {
      for (u32 i : instrs) finish(i);
      steps.push_back({key.first, key.second, std::move(instrs)});
    }
  }
  return steps;
}

namespace {

engine::OpCost step_cost(const Step& s, const Modulus& m) {
  const std::size_t n = s.instrs.size();
  switch (s.op) {
    case Opcode::Mul:
      return engine::cost_mul(n);
    case Opcode::And:
      return engine::cost_and(n);
    case Opcode::B2A:
      return engine::cost_b2a(n);
    case Opcode::Lt:
      return engine::cost_less_than(m, s.width, n);
    case Opcode::Eq:
      return engine::cost_equal(m, s.width, n);
    case Opcode::Reveal:
      return engine::cost_reveal_flag();
    default:
      return {};
  }
}

}  // namespace

engine::OpCost cost_estimate(const Program& p, const Modulus& m) {
  engine::OpCost total;
  for (const auto& s : schedule(p)) total += step_cost(s, m);
  return total;
}

// ---- execution -------------------------------------------------------------

Machine::Machine(Program p, const Modulus& m) : program_(std::move(p)) {
  steps_ = schedule(program_);
  for (const auto& s : steps_) cost_ += step_cost(s, m);
}

namespace {

void check_inputs(const Program& p, std::size_t state, std::size_t obs, std::size_t params) {
  if (state != p.state.size()) throw DomainError("wrong number of state values");
  if (obs != p.obs.size()) throw DomainError("wrong number of observation values");
  if (params < p.params) throw DomainError("missing per-round parameters");
}

u128 addc_value(const Instruction& ins, std::span<const u128> params) {
  return ins.param >= 0 ? params[static_cast<std::size_t>(ins.param)] : ins.constant;
}

}  // namespace

RoundResult Machine::execute_round(PartyContext& ctx, std::span<const u128> state, std::span<const u128> obs,
                                   std::span<const u128> params) const {
  const Program& p = program_;
  check_inputs(p, state.size(), obs.size(), params.size());
  const Modulus& m = ctx.modulus();
  std::vector<u128> v(p.regs.size(), 0);
  for (std::size_t i = 0; i < state.size(); ++i) v[p.state[i]] = state[i];
  for (std::size_t i = 0; i < obs.size(); ++i) v[p.obs[i]] = obs[i];

  RoundResult out;
  std::vector<u128> a, b, ra;
  std::vector<u8> x, y, rb;
  for (const auto& step : steps_) {
    if (!is_interactive(step.op)) {
      const auto& ins = p.code[step.instrs[0]];
      switch (ins.op) {
        case Opcode::Add:
          v[ins.dst] = m.add(v[ins.src1], v[ins.src2]);
          break;
        case Opcode::Sub:
          v[ins.dst] = m.sub(v[ins.src1], v[ins.src2]);
          break;
        case Opcode::AddC:
          v[ins.dst] = m.add(v[ins.src1], ctx.arith_constant(m.reduce(addc_value(ins, params))));
          break;
        case Opcode::Xor:
          v[ins.dst] = v[ins.src1] ^ v[ins.src2];
          break;
        case Opcode::Not:
          v[ins.dst] = v[ins.src1] ^ ctx.bool_constant(1);
          break;
        default:
          break;
      }
      continue;
    }
    a.clear();
    b.clear();
    x.clear();
    y.clear();
    for (u32 i : step.instrs) {
      const auto& ins = p.code[i];
      switch (step.op) {
        case Opcode::Mul:
        case Opcode::Lt:
        case Opcode::Eq:
          a.push_back(v[ins.src1]);
          b.push_back(v[ins.src2]);
          break;
        case Opcode::And:
          x.push_back(static_cast<u8>(v[ins.src1]));
          y.push_back(static_cast<u8>(v[ins.src2]));
          break;
        default:
          x.push_back(static_cast<u8>(v[ins.src1]));
          break;
      }
    }
    switch (step.op) {
      case Opcode::Mul:
        ra = engine::mul(ctx, a, b);
        break;
      case Opcode::B2A:
        ra = engine::b2a(ctx, x);
        break;
      case Opcode::And:
        rb = engine::bit_and(ctx, x, y);
        break;
      case Opcode::Lt:
        rb = engine::less_than(ctx, a, b, step.width);
        break;
      case Opcode::Eq:
        rb = engine::equal(ctx, a, b, step.width);
        break;
      case Opcode::Reveal:
        out.flag = engine::reveal_flag(ctx, x[0]);
        continue;
      default:
        break;
    }
    const bool arith_out = step.op == Opcode::Mul || step.op == Opcode::B2A;
    for (std::size_t k = 0; k < step.instrs.size(); ++k) {
      v[p.code[step.instrs[k]].dst] = arith_out ? ra[k] : rb[k];
    }
  }
  for (u32 r : p.next) out.next_state.push_back(v[r]);
  return out;
}

RoundResult interpret(const Program& p, const Modulus& m, std::span<const u128> state, std::span<const u128> obs,
                      std::span<const u128> params) {
  require_well_typed(p);
  check_inputs(p, state.size(), obs.size(), params.size());
  std::vector<u128> v(p.regs.size(), 0);
  for (std::size_t i = 0; i < state.size(); ++i) v[p.state[i]] = p.regs[p.state[i]] == ShareType::Bool ? state[i] & 1 : m.reduce(state[i]);
  for (std::size_t i = 0; i < obs.size(); ++i) v[p.obs[i]] = p.regs[p.obs[i]] == ShareType::Bool ? obs[i] & 1 : m.reduce(obs[i]);
  auto fits = [&](u128 value, unsigned w, std::size_t at) {
    if (w < 128 && value >> w) {
      throw DomainError("instruction " + std::to_string(at) + ": operand " + u128_to_string(value) +
                        " does not fit in " + std::to_string(w) + " bits");
    }
  };
  RoundResult out;
  for (std::size_t i = 0; i < p.code.size(); ++i) {
    const auto& ins = p.code[i];
    switch (ins.op) {
      case Opcode::Add:
        v[ins.dst] = m.add(v[ins.src1], v[ins.src2]);
        break;
      case Opcode::Sub:
        v[ins.dst] = m.sub(v[ins.src1], v[ins.src2]);
        break;
      case Opcode::Mul:
        v[ins.dst] = m.mul(v[ins.src1], v[ins.src2]);
        break;
      case Opcode::AddC:
        v[ins.dst] = m.add(v[ins.src1], m.reduce(addc_value(ins, params)));
        break;
      case Opcode::Xor:
        v[ins.dst] = v[ins.src1] ^ v[ins.src2];
        break;
      case Opcode::And:
        v[ins.dst] = v[ins.src1] & v[ins.src2];
        break;
      case Opcode::Not:
        v[ins.dst] = v[ins.src1] ^ 1;
        break;
      case Opcode::Lt:
      case Opcode::Eq:
        fits(v[ins.src1], ins.width, i);
        fits(v[ins.src2], ins.width, i);
        v[ins.dst] = ins.op == Opcode::Lt ? v[ins.src1] < v[ins.src2] : v[ins.src1] == v[ins.src2];
        break;
      case Opcode::B2A:
        v[ins.dst] = v[ins.src1];
        break;
      case Opcode::Reveal:
        out.flag = static_cast<u8>(v[ins.src1]);
        break;
    }
  }
  for (u32 r : p.next) out.next_state.push_back(v[r]);
  return out;
}

}  // namespace privmon
