#include "privmon/compiler.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "privmon/dealer.hpp"

namespace privmon {

// ---- expressions -----------------------------------------------------------

namespace expr {

namespace {

Expr node(ExprKind k, std::vector<Expr> args) {
  for (const auto& a : args) {
    if (!a) throw CompileError("null subexpression");
  }
  auto e = std::make_shared<SpecExpr>();
  e->kind = k;
  e->args = std::move(args);
  return e;
}

Expr leaf(ExprKind k, u32 i) {
  auto e = std::make_shared<SpecExpr>();
  e->kind = k;
  e->index = i;
  return e;
}

template <class F>
Expr balanced(std::span<const Expr> xs, F combine, Expr empty) {
  if (xs.empty()) return empty;
  if (xs.size() == 1) return xs[0];
  const std::size_t half = xs.size() / 2;
  return combine(balanced(xs.first(half), combine, empty), balanced(xs.subspan(half), combine, empty));
}

}  // namespace

Expr state(u32 i) { return leaf(ExprKind::State, i); }
Expr obs(u32 i) { return leaf(ExprKind::Obs, i); }
Expr param(u32 i) { return leaf(ExprKind::Param, i); }

Expr constant(u128 v) {
  auto e = std::make_shared<SpecExpr>();
  e->kind = ExprKind::Const;
  e->value = v;
  return e;
}

Expr truth(bool v) {
  auto e = std::make_shared<SpecExpr>();
  e->kind = ExprKind::Const;
  e->value = v;
  e->type = ShareType::Bool;
  return e;
}

Expr add(Expr a, Expr b) { return node(ExprKind::Add, {std::move(a), std::move(b)}); }
Expr sub(Expr a, Expr b) { return node(ExprKind::Sub, {std::move(a), std::move(b)}); }
Expr mul(Expr a, Expr b) { return node(ExprKind::Mul, {std::move(a), std::move(b)}); }
Expr lt(Expr a, Expr b) { return node(ExprKind::Lt, {std::move(a), std::move(b)}); }
Expr le(Expr a, Expr b) { return node(ExprKind::Le, {std::move(a), std::move(b)}); }
Expr eq(Expr a, Expr b) { return node(ExprKind::Eq, {std::move(a), std::move(b)}); }
Expr land(Expr a, Expr b) { return node(ExprKind::And, {std::move(a), std::move(b)}); }
Expr lor(Expr a, Expr b) { return node(ExprKind::Or, {std::move(a), std::move(b)}); }
Expr lxor(Expr a, Expr b) { return node(ExprKind::Xor, {std::move(a), std::move(b)}); }
Expr lnot(Expr a) { return node(ExprKind::Not, {std::move(a)}); }
Expr mux(Expr c, Expr then, Expr otherwise) {
  return node(ExprKind::Mux, {std::move(c), std::move(then), std::move(otherwise)});
}

Expr sum(std::span<const Expr> xs) { return balanced(xs, add, constant(0)); }
Expr any(std::span<const Expr> xs) { return balanced(xs, lor, truth(false)); }

}  // namespace expr

// ---- typing ----------------------------------------------------------------

namespace {

class Typer {
 public:
  explicit Typer(const Spec& s) : s_(s) {}

  ShareType operator()(const Expr& e) {
    if (!e) throw CompileError("null expression");
    if (auto it = memo_.find(e.get()); it != memo_.end()) return it->second;
    const ShareType t = compute(*e);
    memo_[e.get()] = t;
    return t;
  }

 private:
  void want(const Expr& e, ShareType t, const char* where) {
    if ((*this)(e) != t) throw CompileError(std::string(where) + " expects " + to_string(t) + " operands");
  }

  ShareType compute(const SpecExpr& e) {
    auto arity = [&](std::size_t n, const char* what) {
      if (e.args.size() != n) throw CompileError(std::string(what) + " takes " + std::to_string(n) + " operands");
    };
    switch (e.kind) {
      case ExprKind::State:
        if (e.index >= s_.state.size()) throw CompileError("state variable " + std::to_string(e.index) + " undeclared");
        return s_.state[e.index].type;
      case ExprKind::Obs:
        if (e.index >= s_.obs.size()) throw CompileError("observation " + std::to_string(e.index) + " undeclared");
        return s_.obs[e.index].type;
      case ExprKind::Param:
        if (e.index >= s_.param_max.size()) throw CompileError("parameter " + std::to_string(e.index) + " undeclared");
        return ShareType::Arith;
      case ExprKind::Const:
        if (e.type == ShareType::Bool && e.value > 1) throw CompileError("bool constant must be 0 or 1");
        return e.type;
      case ExprKind::Add:
      case ExprKind::Sub:
      case ExprKind::Mul:
        arity(2, "arithmetic");
        want(e.args[0], ShareType::Arith, "arithmetic");
        want(e.args[1], ShareType::Arith, "arithmetic");
        return ShareType::Arith;
      case ExprKind::Lt:
      case ExprKind::Le:
      case ExprKind::Eq:
        arity(2, "comparison");
        want(e.args[0], ShareType::Arith, "comparison");
        want(e.args[1], ShareType::Arith, "comparison");
        return ShareType::Bool;
      case ExprKind::And:
      case ExprKind::Or:
      case ExprKind::Xor:
        arity(2, "logic");
        want(e.args[0], ShareType::Bool, "logic");
        want(e.args[1], ShareType::Bool, "logic");
        return ShareType::Bool;
      case ExprKind::Not:
        arity(1, "not");
        want(e.args[0], ShareType::Bool, "not");
        return ShareType::Bool;
      case ExprKind::Mux: {
        arity(3, "mux");
        want(e.args[0], ShareType::Bool, "mux condition");
        const ShareType t = (*this)(e.args[1]);
        if ((*this)(e.args[2]) != t) throw CompileError("mux branches have different types");
        return t;
      }
    }
    throw CompileError("unknown expression kind");
  }

  const Spec& s_;
  std::unordered_map<const SpecExpr*, ShareType> memo_;
};

}  // namespace

ShareType type_of(const Spec& s, const Expr& e) { return Typer(s)(e); }

void check_spec(const Spec& s) {
  Typer typer(s);
  if (s.next.size() != s.state.size()) throw CompileError("one next-state expression per state variable required");
  for (std::size_t i = 0; i < s.next.size(); ++i) {
    if (typer(s.next[i]) != s.state[i].type) {
      throw CompileError("next-state expression " + std::to_string(i) + " has the wrong type");
    }
  }
  if (typer(s.flag) != ShareType::Bool) throw CompileError("flag expression must be bool");
  for (const auto* decls : {&s.state, &s.obs}) {
    for (const auto& d : *decls) {
      if (d.type == ShareType::Bool && d.max > 1) throw CompileError("bool variables range over 0..1");
    }
  }
}

// ---- reference evaluation --------------------------------------------------

RoundResult evaluate(const Spec& s, const Modulus& m, std::span<const u128> state, std::span<const u128> obs,
                     std::span<const u128> params) {
  check_spec(s);
  if (state.size() != s.state.size() || obs.size() != s.obs.size() || params.size() < s.param_max.size()) {
    throw DomainError("input count mismatch");
  }
  std::unordered_map<const SpecExpr*, u128> memo;
  std::function<u128(const Expr&)> ev = [&](const Expr& e) -> u128 {
    if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
    u128 v = 0;
    auto arg = [&](std::size_t i) { return ev(e->args[i]); };
    switch (e->kind) {
      case ExprKind::State: v = m.reduce(state[e->index]); break;
      case ExprKind::Obs: v = m.reduce(obs[e->index]); break;
      case ExprKind::Param: v = m.reduce(params[e->index]); break;
      case ExprKind::Const: v = m.reduce(e->value); break;
      case ExprKind::Add: v = m.add(arg(0), arg(1)); break;
      case ExprKind::Sub: {
        const u128 a = arg(0), b = arg(1);
        v = a >= b ? a - b : 0;
        break;
      }
      case ExprKind::Mul: v = m.mul(arg(0), arg(1)); break;
      case ExprKind::Lt: v = arg(0) < arg(1); break;
      case ExprKind::Le: v = arg(0) <= arg(1); break;
      case ExprKind::Eq: v = arg(0) == arg(1); break;
      case ExprKind::And: v = arg(0) & arg(1); break;
      case ExprKind::Or: v = arg(0) | arg(1); break;
      case ExprKind::Xor: v = arg(0) ^ arg(1); break;
      case ExprKind::Not: v = arg(0) ^ 1; break;
      case ExprKind::Mux: {
        const u128 c = arg(0), t = arg(1), o = arg(2);
        v = c ? t : o;
        break;
      }
    }
    memo[e.get()] = v;
    return v;
  };
  RoundResult out;
  out.flag = static_cast<u8>(ev(s.flag));
  for (std::size_t i = 0; i < s.next.size(); ++i) {
    out.next_state.push_back(s.guard && out.flag ? m.reduce(state[i]) : ev(s.next[i]));
  }
  return out;
}

// ---- lowering --------------------------------------------------------------

namespace {

// A lowered value: a register, a public constant, or a public parameter,
// with the interval its plaintext is known to lie in.
struct Val {
  ShareType type = ShareType::Arith;
  u32 reg = kNoReg;
  std::optional<u128> k;
  std::optional<u32> param;
  u128 lo = 0, hi = 0;
  bool exact = true;  // false once the interval may have wrapped
};

class Lowerer {
 public:
  Lowerer(const Spec& s, const Modulus& m) : s_(s), m_(m), top_(m.is_prime() ? m.prime_value() - 1 : low_mask(m.bits())) {}

  Program run() {
    check_spec(s_);
    p_.params = static_cast<u32>(s_.param_max.size());
    for (const auto& d : s_.state) p_.state.push_back(input(d));
    for (const auto& d : s_.obs) p_.obs.push_back(input(d));

    Val flag = lower(s_.flag);
    std::vector<Val> next;
    for (std::size_t i = 0; i < s_.next.size(); ++i) {
      Val v = lower(s_.next[i]);
      if (s_.guard) v = mux(flag, state_val(i), v);
      next.push_back(v);
    }
    for (const auto& v : next) p_.next.push_back(materialize(v));
    p_.flag = materialize(flag);
    p_.code.push_back({Opcode::Reveal, kNoReg, p_.flag});
    require_well_typed(p_);
    return std::move(p_);
  }

 private:
  // -- registers and constants --

  u32 fresh(ShareType t) {
    p_.regs.push_back(t);
    return static_cast<u32>(p_.regs.size() - 1);
  }

  u32 emit(Opcode op, ShareType t, u32 a, u32 b = kNoReg, unsigned width = 0) {
    const u32 dst = fresh(t);
    p_.code.push_back({op, dst, a, b, width});
    return dst;
  }

  u32 input(const VarDecl& d) {
    if (d.max > top_) throw CompileError("declared range " + u128_to_string(d.max) + " exceeds the modulus");
    return fresh(d.type);
  }

  Val state_val(std::size_t i) const { return reg_val(s_.state[i].type, p_.state[i], 0, s_.state[i].max); }

  static Val reg_val(ShareType t, u32 r, u128 lo, u128 hi, bool exact = true) {
    Val v;
    v.type = t;
    v.reg = r;
    v.lo = lo;
    v.hi = hi;
    v.exact = exact;
    return v;
  }

  Val arith(u32 r, u128 lo, u128 hi, bool exact) {
    if (!exact || hi > top_) return reg_val(ShareType::Arith, r, 0, top_, false);
    return reg_val(ShareType::Arith, r, lo, hi, true);
  }

  Val bit(u32 r) { return reg_val(ShareType::Bool, r, 0, 1); }

  Val konst(u128 k) {
    Val v;
    v.k = m_.reduce(k);
    v.lo = v.hi = *v.k;
    return v;
  }

  Val truth(bool b) {
    Val v;
    v.type = ShareType::Bool;
    v.k = b;
    v.lo = v.hi = b;
    return v;
  }

  u32 first_input(ShareType t) const {
    for (u32 r : p_.state) {
      if (p_.regs[r] == t) return r;
    }
    for (u32 r : p_.obs) {
      if (p_.regs[r] == t) return r;
    }
    return kNoReg;
  }

  u32 zero_arith() {
    if (zero_arith_ != kNoReg) return zero_arith_;
    if (const u32 a = first_input(ShareType::Arith); a != kNoReg) {
      zero_arith_ = emit(Opcode::Sub, ShareType::Arith, a, a);
    } else if (first_input(ShareType::Bool) != kNoReg) {
      zero_arith_ = emit(Opcode::B2A, ShareType::Arith, zero_bool());
    } else {
      throw CompileError("a constant needs at least one input variable");
    }
    return zero_arith_;
  }

  u32 zero_bool() {
    if (zero_bool_ != kNoReg) return zero_bool_;
    if (const u32 b = first_input(ShareType::Bool); b != kNoReg) {
      zero_bool_ = emit(Opcode::Xor, ShareType::Bool, b, b);
    } else {
      const u32 z = zero_arith();
      zero_bool_ = emit(Opcode::Not, ShareType::Bool, emit(Opcode::Eq, ShareType::Bool, z, z, 1));
    }
    return zero_bool_;
  }

  u32 materialize(const Val& v) {
    if (v.reg != kNoReg) return v.reg;
    if (v.type == ShareType::Bool) {
      const u32 z = zero_bool();
      if (!*v.k) return z;
      if (one_bool_ == kNoReg) one_bool_ = emit(Opcode::Not, ShareType::Bool, z);
      return one_bool_;
    }
    const auto key = v.param ? std::pair{true, u128{*v.param}} : std::pair{false, *v.k};
    if (auto it = consts_.find(key); it != consts_.end()) return it->second;
    const u32 z = zero_arith();
    if (!v.param && *v.k == 0) return consts_[key] = z;
    const u32 dst = fresh(ShareType::Arith);
    Instruction ins{Opcode::AddC, dst, z};
    if (v.param) {
      ins.param = static_cast<int>(*v.param);
    } else {
      ins.constant = *v.k;
    }
    p_.code.push_back(ins);
    return consts_[key] = dst;
  }

  u32 b2a(u32 bit_reg) {
    if (auto it = b2a_.find(bit_reg); it != b2a_.end()) return it->second;
    return b2a_[bit_reg] = emit(Opcode::B2A, ShareType::Arith, bit_reg);
  }

  static bool public_value(const Val& v) { return v.reg == kNoReg; }
  static bool same(const Val& a, const Val& b) {
    if (a.reg != kNoReg || b.reg != kNoReg) return a.reg == b.reg;
    return a.k == b.k && a.param == b.param;
  }

  // -- arithmetic --

  static bool add_overflows(u128 a, u128 b, u128& out) { return __builtin_add_overflow(a, b, &out); }
  static bool mul_overflows(u128 a, u128 b, u128& out) { return __builtin_mul_overflow(a, b, &out); }

  Val add(const Val& a, const Val& b) {
    if (a.k && b.k) return konst(m_.add(*a.k, *b.k));
    if (a.k && *a.k == 0) return b;
    if (b.k && *b.k == 0) return a;
    u128 lo = 0, hi = 0;
    const bool exact = a.exact && b.exact && !add_overflows(a.lo, b.lo, lo) && !add_overflows(a.hi, b.hi, hi);
    if (public_value(a) && public_value(b)) return add_public(materialize(a), b, lo, hi, exact);
    if (public_value(a)) return add_public(b.reg, a, lo, hi, exact);
    if (public_value(b)) return add_public(a.reg, b, lo, hi, exact);
    return arith(emit(Opcode::Add, ShareType::Arith, a.reg, b.reg), lo, hi, exact);
  }

  Val add_public(u32 r, const Val& pub, u128 lo, u128 hi, bool exact) {
    const u32 dst = fresh(ShareType::Arith);
    Instruction ins{Opcode::AddC, dst, r};
    if (pub.param) {
      ins.param = static_cast<int>(*pub.param);
    } else {
      ins.constant = *pub.k;
    }
    p_.code.push_back(ins);
    return arith(dst, lo, hi, exact);
  }

  // a - b in the modulus, with the caller supplying the interval.
  Val raw_sub(const Val& a, const Val& b, u128 lo, u128 hi, bool exact) {
    if (a.k && b.k) return konst(m_.sub(*a.k, *b.k));
    if (b.k) {
      if (*b.k == 0) return a;
      Val neg = konst(m_.sub(0, *b.k));
      return add_public(a.reg, neg, lo, hi, exact);
    }
    const u32 ra = materialize(a);
    const u32 rb = materialize(b);
    return arith(emit(Opcode::Sub, ShareType::Arith, ra, rb), lo, hi, exact);
  }

  Val sub(const Val& a, const Val& b) {
    if (a.k && b.k) return konst(*a.k >= *b.k ? *a.k - *b.k : 0);
    if (same(a, b)) return konst(0);
    if (!a.exact || !b.exact) throw CompileError("range overflow: subtraction operands may have wrapped");
    if (a.lo >= b.hi) return raw_sub(a, b, a.lo - b.hi, a.hi - b.lo, true);
    if (a.hi <= b.lo) return konst(0);
    const u128 hi = a.hi - b.lo;
    const Val d = raw_sub(a, b, 0, top_, false);
    const Val under = lt(a, b);
    return mux(under, konst(0), arith(d.reg, 0, hi, true));
  }

  // Multiplication by a public constant through doublings and additions.
  Val scale(const Val& v, u128 k) {
    k = m_.reduce(k);
    if (k == 0) return konst(0);
    if (v.k) return konst(m_.mul(*v.k, k));
    u128 lo = 0, hi = 0;
    bool exact = v.exact && !mul_overflows(v.lo, k, lo) && !mul_overflows(v.hi, k, hi);
    const u32 base = materialize(v);
    u32 acc = base;
    u32 result = kNoReg;
    for (u128 bits = k;;) {
      if (bits & 1) result = result == kNoReg ? acc : emit(Opcode::Add, ShareType::Arith, result, acc);
      bits >>= 1;
      if (!bits) break;
      acc = emit(Opcode::Add, ShareType::Arith, acc, acc);
    }
    return arith(result, lo, hi, exact);
  }

  Val mul(const Val& a, const Val& b) {
    if (a.k) return scale(b, *a.k);
    if (b.k) return scale(a, *b.k);
    u128 lo = 0, hi = 0;
    const bool exact = a.exact && b.exact && !mul_overflows(a.lo, b.lo, lo) && !mul_overflows(a.hi, b.hi, hi);
    const u32 ra = materialize(a);
    const u32 rb = materialize(b);
    return arith(emit(Opcode::Mul, ShareType::Arith, ra, rb), lo, hi, exact);
  }

  // -- comparisons --

  unsigned width_for(const Val& a, const Val& b, const char* what) {
    if (!a.exact || !b.exact) throw CompileError(std::string("range overflow: ") + what + " operand may have wrapped");
    const unsigned needed = std::max(1u, bit_length(std::max(a.hi, b.hi)));
    const unsigned cap = max_compare_width(m_);
    if (needed > cap) {
      throw CompileError(std::string("range overflow: ") + what + " needs " + std::to_string(needed) +
                         " bits, the modulus supports " + std::to_string(cap));
    }
    return std::min(std::max(needed, 32u), cap);
  }

  Val lt(const Val& a, const Val& b) {
    if (a.k && b.k) return truth(*a.k < *b.k);
    if (same(a, b)) return truth(false);
    if (a.exact && b.exact) {
      if (a.hi < b.lo) return truth(true);
      if (a.lo >= b.hi) return truth(false);
    }
    const unsigned w = width_for(a, b, "comparison");
    const u32 ra = materialize(a);
    const u32 rb = materialize(b);
    return bit(emit(Opcode::Lt, ShareType::Bool, ra, rb, w));
  }

  Val eq(const Val& a, const Val& b) {
    if (a.k && b.k) return truth(*a.k == *b.k);
    if (same(a, b)) return truth(true);
    if (a.exact && b.exact && (a.hi < b.lo || b.hi < a.lo)) return truth(false);
    const unsigned w = width_for(a, b, "equality");
    const u32 ra = materialize(a);
    const u32 rb = materialize(b);
    return bit(emit(Opcode::Eq, ShareType::Bool, ra, rb, w));
  }

  // -- logic --

  Val lnot(const Val& a) {
    if (a.k) return truth(!*a.k);
    return bit(emit(Opcode::Not, ShareType::Bool, a.reg));
  }

  Val lxor(const Val& a, const Val& b) {
    if (a.k && b.k) return truth(*a.k != *b.k);
    if (a.k) return *a.k ? lnot(b) : b;
    if (b.k) return *b.k ? lnot(a) : a;
    if (same(a, b)) return truth(false);
    return bit(emit(Opcode::Xor, ShareType::Bool, a.reg, b.reg));
  }

  Val land(const Val& a, const Val& b) {
    if (a.k) return *a.k ? b : truth(false);
    if (b.k) return *b.k ? a : truth(false);
    if (same(a, b)) return a;
    return bit(emit(Opcode::And, ShareType::Bool, a.reg, b.reg));
  }

  Val lor(const Val& a, const Val& b) {
    if (a.k) return *a.k ? truth(true) : b;
    if (b.k) return *b.k ? truth(true) : a;
    if (same(a, b)) return a;
    const Val x = lxor(a, b);
    const Val both = land(a, b);
    return lxor(x, both);
  }

  Val mux(const Val& c, const Val& t, const Val& o) {
    if (c.k) return *c.k ? t : o;
    if (same(t, o)) return t;
    if (t.type == ShareType::Bool) {
      const Val d = lxor(t, o);
      return lxor(o, land(c, d));
    }
    const u128 lo = std::min(t.lo, o.lo);
    const u128 hi = std::max(t.hi, o.hi);
    const bool exact = t.exact && o.exact;
    const Val cb = arith(b2a(c.reg), 0, 1, true);
    // o + c * (t - o), all in the modulus; the result lies in the hull.
    Val delta;
    if (t.k && o.k) {
      delta = scale(cb, m_.sub(*t.k, *o.k));
    } else {
      const Val diff = raw_sub(t, o, 0, top_, false);
      delta = mul(cb, diff);
    }
    if (o.k && *o.k == 0) return arith(materialize(delta), lo, hi, exact);
    Val loose = o;
    loose.exact = false;
    const Val r = add(loose, delta);
    return arith(materialize(r), lo, hi, exact);
  }

  // -- tree walk --

  Val lower(const Expr& e) {
    if (auto it = memo_.find(e.get()); it != memo_.end()) return it->second;
    const Val v = compute(*e);
    memo_[e.get()] = v;
    return v;
  }

  Val compute(const SpecExpr& e) {
    // Operands are lowered left to right so instruction order is stable.
    std::vector<Val> a;
    for (const auto& x : e.args) a.push_back(lower(x));
    switch (e.kind) {
      case ExprKind::State:
        return state_val(e.index);
      case ExprKind::Obs:
        return reg_val(s_.obs[e.index].type, p_.obs[e.index], 0, s_.obs[e.index].max);
      case ExprKind::Param: {
        Val v;
        v.param = e.index;
        v.hi = std::min(s_.param_max[e.index], top_);
        v.exact = s_.param_max[e.index] <= top_;
        return v;
      }
      case ExprKind::Const:
        return e.type == ShareType::Bool ? truth(e.value != 0) : konst(e.value);
      case ExprKind::Add: return add(a[0], a[1]);
      case ExprKind::Sub: return sub(a[0], a[1]);
      case ExprKind::Mul: return mul(a[0], a[1]);
      case ExprKind::Lt: return lt(a[0], a[1]);
      case ExprKind::Le: return lnot(lt(a[1], a[0]));
      case ExprKind::Eq: return eq(a[0], a[1]);
      case ExprKind::And: return land(a[0], a[1]);
      case ExprKind::Or: return lor(a[0], a[1]);
      case ExprKind::Xor: return lxor(a[0], a[1]);
      case ExprKind::Not: return lnot(a[0]);
      case ExprKind::Mux: return mux(a[0], a[1], a[2]);
    }
    throw CompileError("unknown expression kind");
  }

  const Spec& s_;
  const Modulus& m_;
  const u128 top_;
  Program p_;
  std::unordered_map<const SpecExpr*, Val> memo_;
  std::map<std::pair<bool, u128>, u32> consts_;
  std::map<u32, u32> b2a_;
  u32 zero_arith_ = kNoReg;
  u32 zero_bool_ = kNoReg;
  u32 one_bool_ = kNoReg;
};

}  // namespace

Program compile(const Spec& s, const Modulus& m) { return Lowerer(s, m).run(); }

// ---- scenario configuration ------------------------------------------------

ScenarioConfig ScenarioConfig::from(KeyValues& kv) {
  ScenarioConfig c;
  c.name = kv.take_string("scenario", c.name);
  c.size = kv.take_u64("size", c.size);
  if (auto m = kv.take("modulus")) c.modulus = Modulus::parse(*m);
  if (auto r = kv.take("rounds")) {
    if (*r == "inf" || *r == "unbounded") {
      c.rounds = kUnboundedRounds;
    } else {
      kv.set("rounds", *r);
      c.rounds = kv.take_u64("rounds", c.rounds);
    }
  }
  c.max_events = kv.take_u128("max_events", c.max_events);
  c.r_base = kv.take_u128("r_base", c.r_base);
  c.growth = kv.take_u128("growth", c.growth);
  c.r_max = kv.take_u128("r_max", c.r_max);
  c.max_step = kv.take_u128("max_step", c.max_step);
  c.threshold = kv.take_u128("threshold", c.threshold);
  c.window_lo = kv.take_u64("window_lo", c.window_lo);
  c.window_hi = kv.take_u64("window_hi", c.window_hi);
  c.reading_max = kv.take_u128("reading_max", c.reading_max);
  c.program = kv.take_string("program", c.program);
  c.initial = kv.take_list("initial");
  c.obs_max = kv.take_list("obs_max");
  return c;
}

std::string ScenarioConfig::to_text() const {
  std::ostringstream os;
  auto list = [](const std::vector<u128>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + u128_to_string(v[i]);
    return s;
  };
  os << "scenario = " << name << '\n'
     << "size = " << size << '\n'
     << "modulus = " << modulus.to_string() << '\n'
     << "rounds = " << (rounds == kUnboundedRounds ? std::string("unbounded") : std::to_string(rounds)) << '\n'
     << "max_events = " << u128_to_string(max_events) << '\n'
     << "r_base = " << u128_to_string(r_base) << '\n'
     << "growth = " << u128_to_string(growth) << '\n'
     << "r_max = " << u128_to_string(r_max) << '\n'
     << "max_step = " << u128_to_string(max_step) << '\n'
     << "threshold = " << u128_to_string(threshold) << '\n'
     << "window_lo = " << window_lo << '\n'
     << "window_hi = " << window_hi << '\n'
     << "reading_max = " << u128_to_string(reading_max) << '\n';
  if (!program.empty()) os << "program = " << program << '\n';
  if (!initial.empty()) os << "initial = " << list(initial) << '\n';
  if (!obs_max.empty()) os << "obs_max = " << list(obs_max) << '\n';
  return os.str();
}

// ---- scenarios -------------------------------------------------------------

namespace {

u128 checked_mul(u128 a, u128 b) {
  u128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw CompileError("scenario bounds overflow");
  return r;
}

u128 checked_add(u128 a, u128 b) {
  u128 r;
  if (__builtin_add_overflow(a, b, &r)) throw CompileError("scenario bounds overflow");
  return r;
}

void finish(Scenario& s) {
  s.program = compile(s.spec, s.config.modulus);
  for (const auto& d : s.spec.obs) {
    s.obs_types.push_back(d.type);
    s.obs_max.push_back(d.max);
  }
}

u128 random_below(Prg& rng, u128 bound_inclusive) {
  if (bound_inclusive == ~u128{0}) return rng.bits(128);
  const u128 n = bound_inclusive + 1;
  const unsigned bits = bit_length(n);
  for (;;) {
    const u128 v = rng.bits(bits);
    if (v < n) return v;
  }
}

u128 car_radius_sq(const ScenarioConfig& c, u64 round) {
  u128 r = c.r_base;
  u128 g;
  if (__builtin_mul_overflow(c.growth, u128{round}, &g) || __builtin_add_overflow(r, g, &r)) r = c.r_max;
  r = std::min(r, c.r_max);
  return r * r;
}

}  // namespace

// Per door: cumulative entries and exits for both employee types, so the
// occupancy difference never has to be represented as a signed value.
Scenario build_acs(const ScenarioConfig& c) {
  if (c.size == 0) throw CompileError("acs needs at least one door");
  Scenario s;
  s.config = c;
  const std::size_t vars = 4 * c.size;
  const u128 total = checked_mul(c.horizon(), c.max_events);
  s.spec.state.assign(vars, {ShareType::Arith, total});
  s.spec.obs.assign(vars, {ShareType::Arith, c.max_events});
  std::vector<Expr> ent_a, ex_a, ent_b, ex_b;
  for (u32 i = 0; i < vars; ++i) {
    Expr updated = expr::add(expr::state(i), expr::obs(i));
    s.spec.next.push_back(updated);
    switch (i % 4) {
      case 0: ent_a.push_back(updated); break;
      case 1: ex_a.push_back(updated); break;
      case 2: ent_b.push_back(updated); break;
      default: ex_b.push_back(updated); break;
    }
  }
  // inA < inB  <=>  entA + exB < entB + exA
  s.spec.flag = expr::lt(expr::add(expr::sum(ent_a), expr::sum(ex_b)), expr::add(expr::sum(ent_b), expr::sum(ex_a)));
  s.spec.guard = true;
  s.initial_state.assign(vars, 0);
  s.params = [](u64) { return std::vector<u128>{}; };
  finish(s);
  return s;
}

// Per lock one bool state (1 = locked) and an event as (is_lock, is_unlock).
Scenario build_locks(const ScenarioConfig& c) {
  if (c.size == 0) throw CompileError("locks needs at least one lock");
  Scenario s;
  s.config = c;
  s.spec.state.assign(c.size, {ShareType::Bool, 1});
  s.spec.obs.assign(2 * c.size, {ShareType::Bool, 1});
  std::vector<Expr> bad;
  for (u32 i = 0; i < c.size; ++i) {
    const Expr locked = expr::state(i);
    const Expr lock = expr::obs(2 * i);
    const Expr unlock = expr::obs(2 * i + 1);
    const Expr skip = expr::lnot(expr::lxor(lock, unlock));
    s.spec.next.push_back(expr::lxor(lock, expr::land(skip, locked)));
    bad.push_back(expr::mux(locked, lock, unlock));
  }
  s.spec.flag = expr::any(bad);
  s.spec.guard = true;
  s.initial_state = c.initial.empty() ? std::vector<u128>(c.size, 0) : c.initial;
  if (s.initial_state.size() != c.size) throw CompileError("locks: initial needs one value per lock");
  s.params = [](u64) { return std::vector<u128>{}; };
  finish(s);
  return s;
}

// Position per axis as two nonnegative limbs (plus, minus); the squared
// distance is sum P^2 + sum M^2 - 2 sum PM, compared without subtraction.
Scenario build_car(const ScenarioConfig& c) {
  if (c.size == 0) throw CompileError("car needs at least one dimension");
  Scenario s;
  s.config = c;
  const std::size_t vars = 2 * c.size;
  s.initial_state = c.initial.empty() ? std::vector<u128>(vars, 0) : c.initial;
  if (s.initial_state.size() != vars) throw CompileError("car: initial needs plus,minus per dimension");
  const u128 start = *std::max_element(s.initial_state.begin(), s.initial_state.end());
  const u128 limb = checked_add(start, checked_mul(c.horizon(), c.max_step));
  s.spec.state.assign(vars, {ShareType::Arith, limb});
  s.spec.obs.assign(vars, {ShareType::Arith, c.max_step});
  s.spec.param_max = {checked_mul(c.r_max, c.r_max)};
  std::vector<Expr> plus_sq, minus_sq, cross;
  for (u32 i = 0; i < c.size; ++i) {
    const Expr p = expr::add(expr::state(2 * i), expr::obs(2 * i));
    const Expr m = expr::add(expr::state(2 * i + 1), expr::obs(2 * i + 1));
    s.spec.next.push_back(p);
    s.spec.next.push_back(m);
    plus_sq.push_back(expr::mul(p, p));
    minus_sq.push_back(expr::mul(m, m));
    cross.push_back(expr::mul(p, m));
  }
  const Expr twice_cross = expr::add(expr::sum(cross), expr::sum(cross));
  // |p|^2 > r^2  <=>  r^2 + 2 sum PM < sum P^2 + sum M^2
  s.spec.flag = expr::lt(expr::add(expr::param(0), twice_cross), expr::add(expr::sum(plus_sq), expr::sum(minus_sq)));
  s.spec.guard = true;
  const ScenarioConfig cfg = c;
  s.params = [cfg](u64 round) { return std::vector<u128>{car_radius_sq(cfg, round)}; };
  finish(s);
  return s;
}

// s counts readings since the last one above the threshold, saturating at
// b - a + 2. From round b on the window [t-b+a, t] fails iff s <= b - a.
Scenario build_bloodsugar(const ScenarioConfig& c) {
  const u64 a = c.window_lo, b = c.window_hi;
  if (!(0 < a && a < b)) throw CompileError("bloodsugar needs 0 < window_lo < window_hi");
  Scenario s;
  s.config = c;
  const u128 span = b - a;
  const u128 cap = span + 2;
  s.spec.state = {{ShareType::Arith, cap}};
  s.spec.obs = {{ShareType::Arith, c.reading_max}};
  s.spec.param_max = {span + 1};
  const Expr count = expr::state(0);
  const Expr high = expr::lt(expr::constant(c.threshold), expr::obs(0));
  const Expr bumped = expr::mux(expr::lt(count, expr::constant(cap)), expr::add(count, expr::constant(1)), count);
  const Expr updated = expr::mux(high, expr::constant(0), bumped);
  s.spec.next = {updated};
  s.spec.flag = expr::lt(updated, expr::param(0));
  s.initial_state = {cap};
  s.params = [b, span](u64 round) { return std::vector<u128>{round >= b ? span + 1 : 0}; };
  finish(s);
  return s;
}

Scenario build_custom(const ScenarioConfig& c) {
  if (c.program.empty()) throw CompileError("custom scenario needs program = <file>");
  std::ifstream in(c.program);
  if (!in) throw CompileError("cannot read program " + c.program);
  std::ostringstream text;
  text << in.rdbuf();
  Scenario s;
  s.config = c;
  s.program = parse_program(text.str());
  require_well_typed(s.program);
  if (s.program.params) throw CompileError("custom programs take no per-round parameters");
  s.initial_state = c.initial.empty() ? std::vector<u128>(s.program.state.size(), 0) : c.initial;
  if (s.initial_state.size() != s.program.state.size()) throw CompileError("initial needs one value per state register");
  for (std::size_t i = 0; i < s.program.obs.size(); ++i) {
    const ShareType t = s.program.regs[s.program.obs[i]];
    s.obs_types.push_back(t);
    u128 bound = t == ShareType::Bool ? 1 : 0xffff;
    if (!c.obs_max.empty()) {
      if (c.obs_max.size() != s.program.obs.size()) throw CompileError("obs_max needs one bound per observation");
      bound = std::min(bound == 1 ? u128{1} : ~u128{0}, c.obs_max[i]);
    }
    s.obs_max.push_back(bound);
  }
  s.params = [](u64) { return std::vector<u128>{}; };
  return s;
}

Scenario build_scenario(const ScenarioConfig& c) {
  if (c.name == "acs") return build_acs(c);
  if (c.name == "locks") return build_locks(c);
  if (c.name == "car") return build_car(c);
  if (c.name == "bloodsugar") return build_bloodsugar(c);
  if (c.name == "custom") return build_custom(c);
  throw CompileError("unknown scenario '" + c.name + "'");
}

void Scenario::check_observation(std::span<const u128> obs) const {
  if (obs.size() != obs_max.size()) {
    throw DomainError("observation has " + std::to_string(obs.size()) + " values, expected " +
                      std::to_string(obs_max.size()));
  }
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i] > obs_max[i]) {
      throw DomainError("observation " + std::to_string(i) + " = " + u128_to_string(obs[i]) + " exceeds " +
                        u128_to_string(obs_max[i]));
    }
  }
  if (config.name == "locks") {
    for (std::size_t i = 0; i + 1 < obs.size(); i += 2) {
      if (obs[i] && obs[i + 1]) throw DomainError("lock " + std::to_string(i / 2) + ": lock and unlock together");
    }
  }
}

std::vector<std::vector<u128>> Scenario::random_trace(Prg& rng, u64 rounds) const {
  std::vector<std::vector<u128>> out(rounds);
  const auto& c = config;
  for (auto& obs : out) {
    obs.assign(obs_max.size(), 0);
    if (c.name == "locks") {
      for (std::size_t i = 0; i < c.size; ++i) {
        const u64 r = rng.next_u64() % 4;
        if (r == 1) obs[2 * i] = 1;
        if (r == 2) obs[2 * i + 1] = 1;
      }
    } else if (c.name == "car") {
      for (std::size_t i = 0; i < c.size; ++i) {
        const u128 step = random_below(rng, c.max_step);
        obs[2 * i + rng.bit()] = step;
      }
    } else if (c.name == "bloodsugar") {
      const bool high = rng.next_u64() % 16 == 0 && c.threshold < c.reading_max;
      obs[0] = high ? c.threshold + 1 + random_below(rng, c.reading_max - c.threshold - 1)
                    : random_below(rng, std::min(c.threshold, c.reading_max));
    } else {
      for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = random_below(rng, obs_max[i]);
    }
  }
  return out;
}

// ---- oracles ---------------------------------------------------------------

namespace {

using i128 = __int128;

class AcsOracle : public Oracle {
 public:
  explicit AcsOracle(u64 doors) : doors_(doors) {}
  u8 step(std::span<const u128> obs, u64) override {
    i128 in_a = in_a_, in_b = in_b_;
    for (u64 d = 0; d < doors_; ++d) {
      in_a += static_cast<i128>(obs[4 * d]) - static_cast<i128>(obs[4 * d + 1]);
      in_b += static_cast<i128>(obs[4 * d + 2]) - static_cast<i128>(obs[4 * d + 3]);
    }
    if (in_a < in_b) return 1;
    in_a_ = in_a;
    in_b_ = in_b;
    return 0;
  }

 private:
  u64 doors_;
  i128 in_a_ = 0, in_b_ = 0;
};

class LocksOracle : public Oracle {
 public:
  explicit LocksOracle(std::vector<u128> initial) {
    for (u128 v : initial) locked_.push_back(v != 0);
  }
  u8 step(std::span<const u128> obs, u64) override {
    std::vector<bool> next = locked_;
    u8 flag = 0;
    for (std::size_t i = 0; i < locked_.size(); ++i) {
      const bool lock = obs[2 * i], unlock = obs[2 * i + 1];
      if (lock && unlock) throw DomainError("lock and unlock together");
      if ((lock && locked_[i]) || (unlock && !locked_[i])) flag = 1;
      if (lock) next[i] = true;
      if (unlock) next[i] = false;
    }
    if (!flag) locked_ = next;
    return flag;
  }

 private:
  std::vector<bool> locked_;
};

class CarOracle : public Oracle {
 public:
  CarOracle(const ScenarioConfig& c, const std::vector<u128>& initial) : c_(c) {
    for (std::size_t i = 0; i < c.size; ++i) {
      pos_.push_back(static_cast<i128>(initial[2 * i]) - static_cast<i128>(initial[2 * i + 1]));
    }
  }
  u8 step(std::span<const u128> obs, u64 round) override {
    std::vector<i128> next = pos_;
    i128 norm = 0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] += static_cast<i128>(obs[2 * i]) - static_cast<i128>(obs[2 * i + 1]);
      norm += next[i] * next[i];
    }
    const u8 flag = norm > static_cast<i128>(car_radius_sq(c_, round));
    if (!flag) pos_ = next;
    return flag;
  }

 private:
  ScenarioConfig c_;
  std::vector<i128> pos_;
};

// Keeps every reading and checks the window directly.
class BloodsugarOracle : public Oracle {
 public:
  explicit BloodsugarOracle(const ScenarioConfig& c) : c_(c) {}
  u8 step(std::span<const u128> obs, u64 round) override {
    readings_.push_back(obs[0]);
    if (round != readings_.size()) throw DomainError("bloodsugar oracle expects consecutive rounds from 1");
    if (round < c_.window_hi) return 0;
    const u64 anchor = round - c_.window_hi;
    for (u64 t = anchor + c_.window_lo; t <= round; ++t) {
      if (t >= 1 && readings_[t - 1] > c_.threshold) return 1;
    }
    return 0;
  }

 private:
  ScenarioConfig c_;
  std::vector<u128> readings_;
};

class ProgramOracle : public Oracle {
 public:
  explicit ProgramOracle(const Scenario& s) : s_(s), state_(s.initial_state) {}
  u8 step(std::span<const u128> obs, u64 round) override {
    const auto r = interpret(s_.program, s_.config.modulus, state_, obs, s_.params(round));
    state_ = r.next_state;
    return r.flag;
  }

 private:
  const Scenario& s_;
  std::vector<u128> state_;
};

}  // namespace

std::unique_ptr<Oracle> make_oracle(const Scenario& s) {
  const auto& c = s.config;
  if (c.name == "acs") return std::make_unique<AcsOracle>(c.size);
  if (c.name == "locks") return std::make_unique<LocksOracle>(s.initial_state);
  if (c.name == "car") return std::make_unique<CarOracle>(c, s.initial_state);
  if (c.name == "bloodsugar") return std::make_unique<BloodsugarOracle>(c);
  return std::make_unique<ProgramOracle>(s);
}

std::vector<std::vector<u128>> read_trace(std::istream& in, const Scenario& s) {
  std::vector<std::vector<u128>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto obs = parse_number_list(line);
      s.check_observation(obs);
      out.push_back(std::move(obs));
    } catch (const DomainError& e) {
      throw DomainError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_trace(std::ostream& out, const std::vector<std::vector<u128>>& trace) {
  for (const auto& obs : trace) {
    for (std::size_t i = 0; i < obs.size(); ++i) out << (i ? "," : "") << u128_to_string(obs[i]);
    out << '\n';
  }
}

}  // namespace privmon
