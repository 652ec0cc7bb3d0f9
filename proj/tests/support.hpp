#pragma once

#include <exception>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "privmon/engine.hpp"

namespace privmon::testing {

// k monitor parties on an in-process network with a dealer feeding their
// stocks. run() executes the same body on every party concurrently.
class Cluster {
 public:
  Cluster(const SchemeId& arith, u64 seed = 1)
      : arith_(arith), hub_(arith.parties() + 1), dealer_(arith, Prg::derive_seed(seed, "test-dealer")) {
    std::vector<PartyMaterial*> raw;
    for (PartyId p = 1; p <= arith.parties(); ++p) {
      mats_.push_back(std::make_unique<PartyMaterial>(p, arith.parties()));
      raw.push_back(mats_.back().get());
    }
    dealer_.deal_pair_seeds(raw);
    for (PartyId p = 1; p <= arith.parties(); ++p) {
      ctxs_.push_back(std::make_unique<PartyContext>(p, arith, hub_.endpoint(p), *mats_[p - 1]));
    }
  }

  unsigned parties() const { return arith_.parties(); }
  const SchemeId& arith() const { return arith_; }
  const Modulus& modulus() const { return arith_.modulus(); }
  PartyContext& ctx(PartyId p) { return *ctxs_[p - 1]; }
  PartyMaterial& material(PartyId p) { return *mats_[p - 1]; }
  InProcessHub& hub() { return hub_; }

  void stock(const MaterialCounts& c) {
    std::vector<PartyMaterial*> raw;
    for (auto& m : mats_) raw.push_back(m.get());
    dealer_.deal(raw, c);
  }

  template <class R>
  std::vector<R> run(const std::function<R(PartyContext&)>& body) {
    std::vector<R> out(parties());
    std::vector<std::exception_ptr> errors(parties());
    std::vector<std::thread> threads;
    for (PartyId p = 1; p <= parties(); ++p) {
      threads.emplace_back([&, p] {
        try {
          out[p - 1] = body(ctx(p));
        } catch (...) {
          errors[p - 1] = std::current_exception();
          ctx(p).channel().abort_all(ctx(p).round());
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    return out;
  }

  // Party-indexed sharings of each value.
  std::vector<std::vector<u128>> share_arith(const std::vector<u128>& values, Prg& rng) const {
    std::vector<std::vector<u128>> per(parties(), std::vector<u128>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto s = arith_.share(modulus().reduce(values[i]), rng);
      for (unsigned p = 0; p < parties(); ++p) per[p][i] = s[p];
    }
    return per;
  }

  std::vector<std::vector<u8>> share_bits(const std::vector<u8>& values, Prg& rng) const {
    const auto scheme = SchemeId::boolean(parties());
    std::vector<std::vector<u8>> per(parties(), std::vector<u8>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto s = scheme.share(values[i] & 1, rng);
      for (unsigned p = 0; p < parties(); ++p) per[p][i] = static_cast<u8>(s[p]);
    }
    return per;
  }

  u128 reconstruct_arith(const std::vector<std::vector<u128>>& per, std::size_t i) const {
    std::vector<u128> col;
    for (const auto& v : per) col.push_back(v[i]);
    return arith_.reconstruct(col);
  }

  static u8 reconstruct_bits(const std::vector<std::vector<u8>>& per, std::size_t i) {
    u8 acc = 0;
    for (const auto& v : per) acc ^= v[i];
    return acc;
  }

 private:
  SchemeId arith_;
  InProcessHub hub_;
  Dealer dealer_;
  std::vector<std::unique_ptr<PartyMaterial>> mats_;
  std::vector<std::unique_ptr<PartyContext>> ctxs_;
};

inline u64 ceil_log2(u64 v) {
  u64 r = 0;
  while ((u64{1} << r) < v) ++r;
  return r;
}

}  // namespace privmon::testing
