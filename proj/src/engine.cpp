#include "privmon/engine.hpp"

#include <algorithm>

#include "privmon/kernels.hpp"

namespace privmon {

const char* to_string(OpenKind k) {
  switch (k) {
    case OpenKind::BeaverEF:
      return "beaver-ef";
    case OpenKind::AndDE:
      return "and-de";
    case OpenKind::MaskedInput:
      return "masked-input";
    case OpenKind::DaBitMask:
      return "dabit-mask";
    case OpenKind::Flag:
      return "flag";
    case OpenKind::Explicit:
      return "explicit";
  }
  return "?";
}

// ---- channel ---------------------------------------------------------------

Channel::Channel(Endpoint& net, PartyId self, unsigned parties) : net_(net), self_(self), parties_(parties) {}

void Channel::send(PartyId to, u32 round, Tag tag, u8 label, std::span<const u128> values, std::size_t width) {
  for (std::size_t at = 0; at < values.size(); at += RoundMessage::kMaxCount) {
    const auto n = std::min(RoundMessage::kMaxCount, values.size() - at);
    net_.send(to, RoundMessage::pack(round, tag, label, values.subspan(at, n), width));
  }
}

std::vector<u128> Channel::recv(PartyId from, u32 round, Tag tag, u8 label, std::size_t count, std::size_t width) {
  std::vector<u128> out;
  out.reserve(count);
  while (out.size() < count) {
    RoundMessage m = net_.recv(from);
    if (m.tag == Tag::Abort) throw ProtocolError("node " + std::to_string(from) + " aborted the session");
    if (m.round != round) {
      throw ProtocolError("round desync: expected round " + std::to_string(round) + " from node " +
                          std::to_string(from) + ", got " + std::to_string(m.round));
    }
    if (m.tag != tag) {
      throw ProtocolError(std::string("expected ") + to_string(tag) + " from node " + std::to_string(from) +
                          ", got " + to_string(m.tag));
    }
    if (m.label != label) {
      throw ProtocolError("label mismatch with node " + std::to_string(from) + ": expected " +
                          std::to_string(label) + ", got " + std::to_string(m.label));
    }
    auto vals = m.unpack(width);
    if (out.size() + vals.size() > count) throw ProtocolError("node " + std::to_string(from) + " sent too much");
    out.insert(out.end(), vals.begin(), vals.end());
  }
  return out;
}

std::vector<std::vector<u128>> Channel::exchange(u32 round, Tag tag, u8 label, std::span<const u128> mine,
                                                 std::size_t width) {
  std::vector<std::vector<u128>> all(parties_);
  if (mine.empty()) return all;
  for (PartyId j = 1; j <= parties_; ++j) {
    if (j != self_) send(j, round, tag, label, mine, width);
  }
  for (PartyId j = 1; j <= parties_; ++j) {
    all[j - 1] = j == self_ ? std::vector<u128>(mine.begin(), mine.end())
                            : recv(j, round, tag, label, mine.size(), width);
  }
  ++rounds_;
  return all;
}

void Channel::abort_all(u32 round) noexcept {
  for (PartyId j = 0; j < net_.nodes(); ++j) {
    if (j == self_) continue;
    try {
      RoundMessage m;
      m.round = round;
      m.tag = Tag::Abort;
      net_.send(j, m);
    } catch (...) {
    }
  }
}

// ---- party context ---------------------------------------------------------

PartyContext::PartyContext(PartyId id, const SchemeId& arith, Endpoint& net, PartyMaterial& material)
    : id_(id),
      arith_(arith),
      bool_(SchemeId::boolean(arith.parties())),
      material_(material),
      channel_(net, id, arith.parties()),
      ledger_(arith.parties()),
      pair_prgs_(arith.parties() + 1) {
  if (id < 1 || id > arith.parties()) throw DomainError("party id out of range");
  if (arith.stype() != ShareType::Arith) throw DomainError("context needs an arithmetic scheme");
}

std::vector<u128> PartyContext::open_arith(OpenKind kind, std::span<const u128> shares) {
  if (shares.empty()) return {};
  const Modulus& m = modulus();
  const Tag tag = kind == OpenKind::Flag ? Tag::FlagShare : Tag::MaskedOpen;
  auto all = channel_.exchange(round_, tag, static_cast<u8>(kind), shares, m.byte_width());
  std::vector<u128> out(shares.size());
  std::vector<u128> column(parties());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    for (unsigned p = 0; p < parties(); ++p) {
      if (!m.contains(all[p][i])) throw ProtocolError("opened share outside the domain");
      column[p] = all[p][i];
    }
    out[i] = arith_.reconstruct(column);
  }
  open_log_.push_back({round_, kind, shares.size()});
  return out;
}

std::vector<u8> PartyContext::open_bits(OpenKind kind, std::span<const u8> shares) {
  if (shares.empty()) return {};
  const Tag tag = kind == OpenKind::Flag ? Tag::FlagShare : Tag::MaskedOpen;
  std::vector<u128> mine(shares.begin(), shares.end());
  auto all = channel_.exchange(round_, tag, static_cast<u8>(kind), mine, 1);
  std::vector<u8> out(shares.size(), 0);
  for (unsigned p = 0; p < parties(); ++p) {
    for (std::size_t i = 0; i < shares.size(); ++i) {
      if (all[p][i] > 1) throw ProtocolError("opened bit share is not a bit");
      out[i] ^= static_cast<u8>(all[p][i]);
    }
  }
  open_log_.push_back({round_, kind, shares.size()});
  return out;
}

u8 PartyContext::zero_share_bit() {
  u8 acc = 0;
  for (PartyId j = 1; j <= parties(); ++j) {
    if (j == id_) continue;
    auto& prg = pair_prgs_[j];
    if (!prg) {
      const auto& seeds = material_.pair_seeds();
      auto it = seeds.find(j);
      if (it == seeds.end()) throw Error("no pairwise seed shared with party " + std::to_string(j));
      prg.emplace(Prg::derive_seed(it->second, "flag-zero-sharing"));
    }
    acc ^= prg->bit();
  }
  return acc;
}

namespace engine {

namespace {

u8 bit_of(u128 v, unsigned i) { return static_cast<u8>((v >> i) & 1); }

void check_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw DomainError("operand batches differ in length");
}

// Generate/propagate networks for the borrow of (public - shared) subtraction.
// Leaf i is bit i. Combining a more significant group `hi` with `lo` gives
// G = G_hi ^ (P_hi & G_lo) and P = P_hi & P_lo; XOR stands in for OR because
// a group cannot both generate and propagate.
struct GpOp {
  u32 dst, hi, lo;
  bool need_p;
};

struct GpPlan {
  u32 leaves = 0;
  std::vector<std::vector<GpOp>> levels;
};

// Pairwise reduction; the group covering every leaf ends up in slot 0.
GpPlan tree_plan(u32 leaves) {
  GpPlan plan{leaves, {}};
  for (u32 stride = 1; stride < leaves; stride *= 2) {
    std::vector<GpOp> level;
    for (u32 lo = 0; lo + stride < leaves; lo += 2 * stride) level.push_back({lo, lo + stride, lo, lo != 0});
    plan.levels.push_back(std::move(level));
  }
  return plan;
}

// Kogge-Stone prefix: slot i ends up covering leaves 0..i.
GpPlan scan_plan(u32 leaves) {
  GpPlan plan{leaves, {}};
  for (u32 stride = 1; stride < leaves; stride *= 2) {
    std::vector<GpOp> level;
    for (u32 i = stride; i < leaves; ++i) level.push_back({i, i, i - stride, i >= 2 * stride});
    plan.levels.push_back(std::move(level));
  }
  return plan;
}

u64 level_ands(const std::vector<GpOp>& level) {
  u64 n = 0;
  for (const auto& op : level) n += op.need_p ? 2 : 1;
  return n;
}

struct GpJob {
  GpPlan plan;
  std::size_t instances;
  std::vector<u8> g, p;  // instance-major, plan.leaves per instance

  GpJob(GpPlan pl, std::size_t inst)
      : plan(std::move(pl)), instances(inst), g(inst * plan.leaves), p(inst * plan.leaves) {}
};

// Runs all jobs level by level; one AND batch per level across every job.
void run_gp(PartyContext& ctx, std::vector<GpJob*> jobs) {
  std::size_t depth = 0;
  for (auto* j : jobs) depth = std::max(depth, j->plan.levels.size());
  std::vector<u8> a, b;
  for (std::size_t lvl = 0; lvl < depth; ++lvl) {
    a.clear();
    b.clear();
    for (auto* j : jobs) {
      if (lvl >= j->plan.levels.size()) continue;
      const u32 L = j->plan.leaves;
      for (std::size_t inst = 0; inst < j->instances; ++inst) {
        const std::size_t base = inst * L;
        for (const auto& op : j->plan.levels[lvl]) {
          a.push_back(j->p[base + op.hi]);
          b.push_back(j->g[base + op.lo]);
          if (op.need_p) {
            a.push_back(j->p[base + op.hi]);
            b.push_back(j->p[base + op.lo]);
          }
        }
      }
    }
    if (a.empty()) continue;
    const auto r = bit_and(ctx, a, b);
    std::size_t k = 0;
    for (auto* j : jobs) {
      if (lvl >= j->plan.levels.size()) continue;
      const u32 L = j->plan.leaves;
      for (std::size_t inst = 0; inst < j->instances; ++inst) {
        const std::size_t base = inst * L;
        for (const auto& op : j->plan.levels[lvl]) {
          j->g[base + op.dst] = j->g[base + op.hi] ^ r[k++];
          if (op.need_p) j->p[base + op.dst] = r[k++];
        }
      }
    }
  }
}

// AND of all leaves per instance, pairwise.
std::vector<u8> and_tree(PartyContext& ctx, std::vector<u8> v, std::size_t instances, u32 leaves) {
  const GpPlan plan = tree_plan(leaves);
  std::vector<u8> a, b;
  for (const auto& level : plan.levels) {
    a.clear();
    b.clear();
    for (std::size_t inst = 0; inst < instances; ++inst) {
      for (const auto& op : level) {
        a.push_back(v[inst * leaves + op.hi]);
        b.push_back(v[inst * leaves + op.lo]);
      }
    }
    const auto r = bit_and(ctx, a, b);
    std::size_t k = 0;
    for (std::size_t inst = 0; inst < instances; ++inst) {
      for (const auto& op : level) v[inst * leaves + op.dst] = r[k++];
    }
  }
  std::vector<u8> out(instances);
  for (std::size_t inst = 0; inst < instances; ++inst) out[inst] = v[inst * leaves];
  return out;
}

std::vector<EdaBitShare> take_edabits(PartyContext& ctx, std::size_t n) {
  auto e = ctx.material().take_edabits(n);
  ctx.ledger().add_consumed({0, 0, 0, n});
  return e;
}

// Opens value + r for each input and returns the public sums.
std::vector<u128> open_masked(PartyContext& ctx, const std::vector<u128>& values,
                              const std::vector<EdaBitShare>& eda) {
  const Modulus& m = ctx.modulus();
  std::vector<u128> masked(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) masked[i] = m.add(values[i], eda[i].arith);
  return ctx.open_arith(OpenKind::MaskedInput, masked);
}

// Leaves for borrow_out(a - r) over bits [0, leaves) with public a.
void fill_borrow_leaves(PartyContext& ctx, GpJob& job, std::size_t inst, u128 a, const EdaBitShare& r) {
  const u32 L = job.plan.leaves;
  for (u32 i = 0; i < L; ++i) {
    const u8 ai = bit_of(a, i);
    const u8 ri = r.bits[i];
    job.g[inst * L + i] = ai ? 0 : ri;
    job.p[inst * L + i] = ri ^ ctx.bool_constant(1 ^ ai);
  }
}

// Sharing of [pred((c - r) mod p)] from a one-hot r; no interaction.
template <class Pred>
u8 one_hot_select(const Modulus& m, u128 c, const EdaBitShare& r, Pred pred) {
  u8 acc = 0;
  for (u128 v = 0; v < r.bits.size(); ++v) {
    if (pred(m.sub(c, v))) acc ^= r.bits[static_cast<std::size_t>(v)];
  }
  return acc;
}

void check_width(unsigned n, unsigned max, const char* what, const Modulus& m) {
  if (max == 0) {
    throw DomainError(std::string(what) + " unsupported under " + m.to_string() + "; use a ring, a prime of at most " +
                      u128_to_string(kPerfectMaxPrime) + " or one of at least " +
                      std::to_string(kStatisticalSecurity + 3 + kMinStatisticalCompare) + " bits");
  }
  if (n == 0 || n > max) {
    throw DomainError(std::string(what) + " width " + std::to_string(n) + " unsupported under " + m.to_string() +
                      " (max " + std::to_string(max) + ")");
  }
}

void add_gp_levels(const GpPlan& plan, std::size_t instances, std::vector<u64>& per_level) {
  if (per_level.size() < plan.levels.size()) per_level.resize(plan.levels.size(), 0);
  for (std::size_t l = 0; l < plan.levels.size(); ++l) per_level[l] += level_ands(plan.levels[l]) * instances;
}

void finish_levels(OpCost& c, const std::vector<u64>& per_level) {
  for (u64 n : per_level) {
    if (n == 0) continue;
    c += cost_and(n);
  }
}

}  // namespace

std::vector<u128> mul(PartyContext& ctx, std::span<const u128> x, std::span<const u128> y) {
  check_same_length(x.size(), y.size());
  const std::size_t n = x.size();
  if (n == 0) return {};
  const Modulus& m = ctx.modulus();
  auto t = ctx.material().take_triples(n);
  ctx.ledger().add_consumed({n, 0, 0, 0});
  std::vector<u128> a(n), b(n), c(n), ef(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = t[i].a;
    b[i] = t[i].b;
    c[i] = t[i].c;
  }
  kernels::mod_sub(m, std::span<u128>(ef).first(n), x, a);
  kernels::mod_sub(m, std::span<u128>(ef).last(n), y, b);
  const auto opened = ctx.open_arith(OpenKind::BeaverEF, ef);
  std::vector<u128> z(n);
  kernels::mod_beaver(m, z, a, b, c, std::span<const u128>(opened).first(n), std::span<const u128>(opened).last(n),
                      ctx.lead_arith());
  return z;
}

std::vector<u8> bit_and(PartyContext& ctx, std::span<const u8> x, std::span<const u8> y) {
  check_same_length(x.size(), y.size());
  const std::size_t n = x.size();
  if (n == 0) return {};
  auto t = ctx.material().take_bit_triples(n);
  ctx.ledger().add_consumed({0, n, 0, 0});
  std::vector<u8> a(n), b(n), c(n), de(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = t[i].a;
    b[i] = t[i].b;
    c[i] = t[i].c;
  }
  kernels::xor_bits(std::span<u8>(de).first(n), x, a);
  kernels::xor_bits(std::span<u8>(de).last(n), y, b);
  const auto opened = ctx.open_bits(OpenKind::AndDE, de);
  std::vector<u8> z(n);
  kernels::beaver_and(z, a, b, c, std::span<const u8>(opened).first(n), std::span<const u8>(opened).last(n),
                      ctx.lead_bool());
  return z;
}

std::vector<u128> b2a(PartyContext& ctx, std::span<const u8> bits) {
  const std::size_t n = bits.size();
  if (n == 0) return {};
  const Modulus& m = ctx.modulus();
  auto d = ctx.material().take_dabits(n);
  ctx.ledger().add_consumed({0, 0, n, 0});
  std::vector<u8> masked(n);
  for (std::size_t i = 0; i < n; ++i) masked[i] = bits[i] ^ d[i].bit;
  const auto e = ctx.open_bits(OpenKind::DaBitMask, masked);
  std::vector<u128> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = e[i] ? m.sub(ctx.arith_constant(1), d[i].arith) : d[i].arith;
  return out;
}

std::vector<std::vector<u8>> bit_decompose(PartyContext& ctx, std::span<const u128> x, unsigned n) {
  const Modulus& m = ctx.modulus();
  check_width(n, max_decompose_width(m), "bit decomposition", m);
  const std::size_t B = x.size();
  if (B == 0) return {};
  const auto eda = take_edabits(ctx, B);
  const auto c = open_masked(ctx, std::vector<u128>(x.begin(), x.end()), eda);
  std::vector<std::vector<u8>> out(B, std::vector<u8>(n));

  if (mask_mode(m) != MaskMode::Perfect) {
    GpJob scan(scan_plan(n - 1), B);
    for (std::size_t v = 0; v < B; ++v) fill_borrow_leaves(ctx, scan, v, c[v], eda[v]);
    run_gp(ctx, {&scan});
    for (std::size_t v = 0; v < B; ++v) {
      for (unsigned i = 0; i < n; ++i) {
        u8 bit = eda[v].bits[i] ^ ctx.bool_constant(bit_of(c[v], i));
        if (i > 0) bit ^= scan.g[v * (n - 1) + i - 1];
        out[v][i] = bit;
      }
    }
    return out;
  }

  for (std::size_t v = 0; v < B; ++v) {
    for (unsigned i = 0; i < n; ++i) {
      out[v][i] = one_hot_select(m, c[v], eda[v], [i](u128 x) { return bit_of(x, i) != 0; });
    }
  }
  return out;
}

std::vector<u128> bits_to_arith(PartyContext& ctx, const std::vector<std::vector<u8>>& bits) {
  const Modulus& m = ctx.modulus();
  std::vector<u8> flat;
  for (const auto& v : bits) {
    if (v.size() > m.value_bits()) throw DomainError("too many bits for the arithmetic domain");
    flat.insert(flat.end(), v.begin(), v.end());
  }
  const auto arith = b2a(ctx, flat);
  std::vector<u128> out(bits.size(), 0);
  std::size_t k = 0;
  for (std::size_t v = 0; v < bits.size(); ++v) {
    for (std::size_t i = 0; i < bits[v].size(); ++i) out[v] = m.add(out[v], m.mul(arith[k++], u128{1} << i));
  }
  return out;
}

std::vector<u8> less_than(PartyContext& ctx, std::span<const u128> x, std::span<const u128> y, unsigned n) {
  check_same_length(x.size(), y.size());
  const Modulus& m = ctx.modulus();
  check_width(n, max_compare_width(m), "comparison", m);
  const std::size_t B = x.size();
  if (B == 0) return {};
  // z = x - y + 2^n lies in [1, 2^(n+1)); x < y iff bit n of z is clear.
  std::vector<u128> z(B);
  for (std::size_t i = 0; i < B; ++i) z[i] = m.add(m.sub(x[i], y[i]), ctx.arith_constant(u128{1} << n));
  const auto eda = take_edabits(ctx, B);
  const auto c = open_masked(ctx, z, eda);
  std::vector<u8> out(B);

  if (mask_mode(m) != MaskMode::Perfect) {
    // bit n of c - r is c_n ^ r_n ^ [c mod 2^n < r mod 2^n].
    GpJob tree(tree_plan(n), B);
    for (std::size_t v = 0; v < B; ++v) fill_borrow_leaves(ctx, tree, v, c[v], eda[v]);
    run_gp(ctx, {&tree});
    for (std::size_t v = 0; v < B; ++v) {
      out[v] = tree.g[v * n] ^ eda[v].bits[n] ^ ctx.bool_constant(1 ^ bit_of(c[v], n));
    }
    return out;
  }

  // one-hot r: z = c - r mod p
  const u128 two_n = u128{1} << n;
  for (std::size_t v = 0; v < B; ++v) out[v] = one_hot_select(m, c[v], eda[v], [two_n](u128 x) { return x < two_n; });
  return out;
}

std::vector<u8> equal(PartyContext& ctx, std::span<const u128> x, std::span<const u128> y, unsigned n) {
  check_same_length(x.size(), y.size());
  const Modulus& m = ctx.modulus();
  check_width(n, max_compare_width(m), "equality", m);
  const std::size_t B = x.size();
  if (B == 0) return {};
  const bool perfect = mask_mode(m) == MaskMode::Perfect;
  std::vector<u128> z(B);
  for (std::size_t i = 0; i < B; ++i) {
    z[i] = m.sub(x[i], y[i]);
    if (!perfect) z[i] = m.add(z[i], ctx.arith_constant(u128{1} << n));
  }
  const auto eda = take_edabits(ctx, B);
  const auto c = open_masked(ctx, z, eda);
  if (perfect) {
    std::vector<u8> out(B);
    for (std::size_t v = 0; v < B; ++v) out[v] = eda[v].bits[static_cast<std::size_t>(c[v])];
    return out;
  }

  // Equal iff r == c - 2^n modulo 2^(n+1).
  const u32 L = n + 1;
  std::vector<u8> leaves(B * L);
  for (std::size_t v = 0; v < B; ++v) {
    const u128 target = (c[v] + (u128{1} << n)) & low_mask(n + 1);
    for (u32 i = 0; i < L; ++i) leaves[v * L + i] = eda[v].bits[i] ^ ctx.bool_constant(1 ^ bit_of(target, i));
  }
  return and_tree(ctx, std::move(leaves), B, L);
}

u8 reveal_flag(PartyContext& ctx, u8 share) {
  const u8 mine = (share ^ ctx.zero_share_bit()) & 1;
  const u128 v = mine;
  ctx.channel().send(kSystemId, ctx.round(), Tag::FlagShare, static_cast<u8>(OpenKind::Flag),
                     std::span<const u128>(&v, 1), 1);
  return ctx.open_bits(OpenKind::Flag, std::span<const u8>(&mine, 1))[0];
}

OpCost& OpCost::operator+=(const OpCost& o) {
  material += o.material;
  rounds += o.rounds;
  opens.insert(opens.end(), o.opens.begin(), o.opens.end());
  return *this;
}

OpCost cost_mul(std::size_t batch) {
  if (batch == 0) return {};
  return OpCost{{batch, 0, 0, 0}, 1, {{OpenKind::BeaverEF, 2 * batch}}};
}

OpCost cost_and(std::size_t batch) {
  if (batch == 0) return {};
  return OpCost{{0, batch, 0, 0}, 1, {{OpenKind::AndDE, 2 * batch}}};
}

OpCost cost_b2a(std::size_t batch) {
  if (batch == 0) return {};
  return OpCost{{0, 0, batch, 0}, 1, {{OpenKind::DaBitMask, batch}}};
}

OpCost cost_bits_to_arith(std::size_t bits) { return cost_b2a(bits); }

namespace {

OpCost masked_opening(std::size_t batch) { return OpCost{{0, 0, 0, batch}, 1, {{OpenKind::MaskedInput, batch}}}; }

}  // namespace

OpCost cost_decompose(const Modulus& m, unsigned n, std::size_t batch) {
  check_width(n, max_decompose_width(m), "bit decomposition", m);
  if (batch == 0) return {};
  OpCost c = masked_opening(batch);
  if (mask_mode(m) == MaskMode::Perfect) return c;
  std::vector<u64> levels;
  add_gp_levels(scan_plan(n - 1), batch, levels);
  finish_levels(c, levels);
  return c;
}

OpCost cost_less_than(const Modulus& m, unsigned n, std::size_t batch) {
  check_width(n, max_compare_width(m), "comparison", m);
  if (batch == 0) return {};
  OpCost c = masked_opening(batch);
  if (mask_mode(m) == MaskMode::Perfect) return c;
  std::vector<u64> levels;
  add_gp_levels(tree_plan(n), batch, levels);
  finish_levels(c, levels);
  return c;
}

OpCost cost_equal(const Modulus& m, unsigned n, std::size_t batch) {
  check_width(n, max_compare_width(m), "equality", m);
  if (batch == 0) return {};
  OpCost c = masked_opening(batch);
  if (mask_mode(m) == MaskMode::Perfect) return c;
  const u32 L = n + 1;
  for (const auto& level : tree_plan(L).levels) c += cost_and(level.size() * batch);
  return c;
}

OpCost cost_reveal_flag() { return OpCost{{}, 1, {{OpenKind::Flag, 1}}}; }

}  // namespace engine

// ---- typed single-value forms ----------------------------------------------

namespace {

void check_typed(const PartyContext& ctx, const TypedShare& s, ShareType want) {
  if (s.party != ctx.id()) throw DomainError("share belongs to another party");
  if (s.stype != want) throw DomainError(std::string("expected a ") + to_string(want) + " share");
}

TypedShare arith_share(const PartyContext& ctx, u128 v) {
  return TypedShare{ctx.id(), Element(ctx.modulus(), v), ShareType::Arith, ctx.arith()};
}

TypedShare bool_share(const PartyContext& ctx, u8 v) {
  return TypedShare{ctx.id(), Element(ctx.boolean().modulus(), v), ShareType::Bool, ctx.boolean()};
}

}  // namespace

Element open(PartyContext& ctx, const TypedShare& x, OpenKind kind) {
  if (x.party != ctx.id()) throw DomainError("share belongs to another party");
  const u128 v = x.value.value();
  if (x.stype == ShareType::Arith) {
    return Element(ctx.modulus(), ctx.open_arith(kind, std::span<const u128>(&v, 1))[0]);
  }
  const u8 b = static_cast<u8>(v);
  return Element(ctx.boolean().modulus(), ctx.open_bits(kind, std::span<const u8>(&b, 1))[0]);
}

TypedShare beaver_mul(PartyContext& ctx, const TypedShare& x, const TypedShare& y) {
  check_typed(ctx, x, ShareType::Arith);
  check_typed(ctx, y, ShareType::Arith);
  const u128 a = x.value.value(), b = y.value.value();
  return arith_share(ctx, engine::mul(ctx, std::span(&a, 1), std::span(&b, 1))[0]);
}

TypedShare bool_and(PartyContext& ctx, const TypedShare& x, const TypedShare& y) {
  check_typed(ctx, x, ShareType::Bool);
  check_typed(ctx, y, ShareType::Bool);
  const u8 a = static_cast<u8>(x.value.value()), b = static_cast<u8>(y.value.value());
  return bool_share(ctx, engine::bit_and(ctx, std::span(&a, 1), std::span(&b, 1))[0]);
}

std::vector<TypedShare> bit_decompose(PartyContext& ctx, const TypedShare& x, unsigned n) {
  check_typed(ctx, x, ShareType::Arith);
  const u128 v = x.value.value();
  const auto bits = engine::bit_decompose(ctx, std::span(&v, 1), n);
  std::vector<TypedShare> out;
  for (u8 b : bits[0]) out.push_back(bool_share(ctx, b));
  return out;
}

TypedShare bits_to_arith(PartyContext& ctx, const std::vector<TypedShare>& bits) {
  std::vector<std::vector<u8>> raw(1);
  for (const auto& b : bits) {
    check_typed(ctx, b, ShareType::Bool);
    raw[0].push_back(static_cast<u8>(b.value.value()));
  }
  return arith_share(ctx, engine::bits_to_arith(ctx, raw)[0]);
}

TypedShare secure_lt(PartyContext& ctx, const TypedShare& x, const TypedShare& y, unsigned n) {
  check_typed(ctx, x, ShareType::Arith);
  check_typed(ctx, y, ShareType::Arith);
  const u128 a = x.value.value(), b = y.value.value();
  return bool_share(ctx, engine::less_than(ctx, std::span(&a, 1), std::span(&b, 1), n)[0]);
}

TypedShare secure_eq(PartyContext& ctx, const TypedShare& x, const TypedShare& y, unsigned n) {
  check_typed(ctx, x, ShareType::Arith);
  check_typed(ctx, y, ShareType::Arith);
  const u128 a = x.value.value(), b = y.value.value();
  return bool_share(ctx, engine::equal(ctx, std::span(&a, 1), std::span(&b, 1), n)[0]);
}

}  // namespace privmon
