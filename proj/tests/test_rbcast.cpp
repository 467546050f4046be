#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "nab/rbcast.hpp"

using namespace nab;

namespace {

Payload byte(int v) { return Payload{static_cast<uint8_t>(v)}; }

// behavior table for exhaustive lying: recipient -> value
Strategy table_liar(const std::map<int, int>& per_recipient) {
  Strategy s = make_strategy("honest");
  s.name = "table-liar";
  s.eig_message = [per_recipient](const EigCtx& ctx, const Payload& honest) {
    auto it = per_recipient.find(ctx.recipient);
    if (it == per_recipient.end()) return honest;
    return byte(it->second);
  };
  return s;
}

}  // namespace

TEST_CASE("emulate_send: faithful with no faults, deterministic accounting") {
  auto k4 = fixtures::k4();
  EmulatedNet net(k4, 1);
  Strategy honest = make_strategy("honest");
  LinkBits b1(k4), b2(k4);
  auto got = emulate_send(net, 1, 2, byte(0xab), 8, {}, honest, b1);
  CHECK_EQ(got, byte(0xab));
  auto got2 = emulate_send(net, 1, 2, byte(0xab), 8, {}, honest, b2);
  CHECK_EQ(got2, byte(0xab));
  CHECK(b1.bits == b2.bits);
  // 3 vertex-disjoint paths: direct (1 hop) plus two 2-hop paths = 5 link uses
  CHECK_EQ(b1.total(), 5 * 8);
}

TEST_CASE("emulate_send: majority survives one corrupting relay") {
  auto k4 = fixtures::k4();
  EmulatedNet net(k4, 1);
  Strategy corrupt = make_strategy("path-corruptor");
  for (int relay : {3, 4}) {
    LinkBits acct(k4);
    auto got = emulate_send(net, 1, 2, byte(0x5c), 8, {relay}, corrupt, acct, 99, 1, 7);
    CHECK_EQ(got, byte(0x5c));
  }
}

TEST_CASE("emulate_send: silent-cut relay drops copies but majority holds") {
  auto k4 = fixtures::k4();
  EmulatedNet net(k4, 1);
  std::map<std::string, std::string> params{{"cut", "3-2,3-1,3-4"}};
  Strategy cut = make_strategy("silent-cut", params);
  LinkBits acct(k4);
  auto got = emulate_send(net, 1, 2, byte(0x77), 8, {3}, cut, acct);
  CHECK_EQ(got, byte(0x77));
}

TEST_CASE("broadcast_small: f = 0 single round") {
  auto k4 = fixtures::k4();
  EmulatedNet net(k4, 0);
  Strategy honest = make_strategy("honest");
  auto res = broadcast_small(net, {1, 2, 3, 4}, 2, byte(1), 0, byte(0), {}, honest);
  for (int v : {1, 2, 3, 4}) CHECK_EQ(res.decided.at(v), byte(1));
  CHECK_GT(res.time, 0);
}

TEST_CASE("EIG n=4 t=1: exhaustive faulty-source behaviors") {
  auto k4 = fixtures::k4();
  EmulatedNet net(k4, 1);
  // source 1 faulty: round-1 messages to 2,3,4 range over all bit patterns
  for (int a = 0; a <= 1; ++a)
    for (int b = 0; b <= 1; ++b)
      for (int c = 0; c <= 1; ++c) {
        auto strat = table_liar({{2, a}, {3, b}, {4, c}});
        auto res = broadcast_small(net, {1, 2, 3, 4}, 1, byte(0), 1, byte(0), {1}, strat);
        int majority = (a + b + c >= 2) ? 1 : 0;
        for (int v : {2, 3, 4}) CHECK_EQ(res.decided.at(v), byte(majority));
      }
}

TEST_CASE("EIG n=4 t=1: exhaustive faulty-relay behaviors keep validity") {
  auto k4 = fixtures::k4();
  EmulatedNet net(k4, 1);
  for (int src_value : {0, 1}) {
    for (int faulty : {2, 3, 4}) {
      for (int mask = 0; mask < 8; ++mask) {
        std::map<int, int> table;
        int bit = 0;
        for (int r : {1, 2, 3, 4}) {
          if (r == faulty) continue;
          table[r] = (mask >> bit) & 1;
          ++bit;
        }
        auto strat = table_liar(table);
        auto res =
            broadcast_small(net, {1, 2, 3, 4}, 1, byte(src_value), 1, byte(0), {faulty}, strat);
        for (int v : {1, 2, 3, 4}) {
          if (v == faulty) continue;
          CHECK_EQ(res.decided.at(v), byte(src_value));
        }
      }
    }
  }
}

TEST_CASE("EIG n=7 t=2: randomized adversaries keep agreement and validity") {
  auto k7 = fixtures::k7();
  EmulatedNet net(k7, 2);
  for (uint64_t seed = 0; seed < 30; ++seed) {
    auto rng = make_rng(mix64(777, seed));
    int f1 = 2 + static_cast<int>(rng() % 6);
    int f2 = 2 + static_cast<int>(rng() % 6);
    while (f2 == f1) f2 = 2 + static_cast<int>(rng() % 6);
    std::set<int> faulty{f1, f2};
    Strategy s = make_strategy("honest");
    s.eig_message = [seed](const EigCtx& ctx, const Payload&) {
      auto r = make_rng(mix64(seed, ctx.node, ctx.recipient, ctx.label_id, ctx.round));
      return byte(static_cast<int>(r() % 2));
    };
    s.path_relay = [seed](const PathCtx& ctx, const Payload& copy) {
      auto r = make_rng(mix64(seed, ctx.node, ctx.copy_index, ctx.stream));
      Payload bad = copy;
      if (!bad.empty()) bad[0] ^= static_cast<uint8_t>(r() % 256);
      return bad;
    };
    s.touches_paths = true;
    int src = 1;  // fault-free source
    auto res = broadcast_small(net, {1, 2, 3, 4, 5, 6, 7}, src, byte(1), 2, byte(0), faulty, s,
                               seed, 3);
    for (int v = 1; v <= 7; ++v) {
      if (faulty.count(v)) continue;
      CHECK_EQ(res.decided.at(v), byte(1));
    }
    // faulty source: agreement among the fault-free
    auto res2 = broadcast_small(net, {1, 2, 3, 4, 5, 6, 7}, f1, byte(1), 2, byte(0), faulty, s,
                                seed, 4);
    Payload agreed;
    bool first = true;
    for (int v = 1; v <= 7; ++v) {
      if (faulty.count(v)) continue;
      if (first) {
        agreed = res2.decided.at(v);
        first = false;
      } else {
        CHECK_EQ(res2.decided.at(v), agreed);
      }
    }
  }
}

TEST_CASE("broadcast accounting is a pure function of the configuration") {
  auto k5 = fixtures::k5();
  EmulatedNet net(k5, 1);
  Strategy honest = make_strategy("honest");
  auto r1 = broadcast_small(net, {1, 2, 3, 4, 5}, 3, byte(1), 1, byte(0), {2}, honest, 11, 2);
  auto r2 = broadcast_small(net, {1, 2, 3, 4, 5}, 3, byte(1), 1, byte(0), {2}, honest, 11, 2);
  CHECK(r1.bits.bits == r2.bits.bits);
  CHECK_EQ(r1.time, r2.time);
}
