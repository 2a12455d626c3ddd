#include "doctest.h"

#include <random>

#include "flowmine/error.hpp"
#include "support.hpp"

using namespace fmtest;

namespace {

const EventType e1 = ev("A", "B", "e1");
const EventType e2 = ev("B", "C", "e2");
const EventType e3 = ev("C", "D", "e3");

Trace eq1_trace() {
  Trace t;
  t.steps = {{{e1, 10}}, {{e2, 10}, {e1, 15}}, {{e3, 10}, {e2, 15}}, {{e1, 15}}};
  return t;
}

std::multiset<EventInstance> all_events(const std::vector<SubTrace> &subs) {
  std::multiset<EventInstance> out;
  for (const auto &s : subs)
    out.insert(s.events.begin(), s.events.end());
  return out;
}

// True when `sub` can be embedded into `whole` as an order-preserving
// projection.
bool is_projection(const std::vector<EventInstance> &sub, const std::vector<EventInstance> &whole) {
  std::size_t j = 0;
  for (const auto &e : sub) {
    while (j < whole.size() && !(whole[j] == e))
      ++j;
    if (j == whole.size())
      return false;
    ++j;
  }
  return true;
}

Trace random_trace(std::mt19937_64 &g, bool with_addr) {
  const char *comps[] = {"A", "B", "C", "D", "E"};
  std::uniform_int_distribution<int> c(0, 4), n(1, 3), len(1, 30), a(0, 3);
  Trace t;
  const int steps = len(g);
  for (int s = 0; s < steps; ++s) {
    TimeStep step;
    for (int k = n(g); k > 0; --k) {
      std::optional<Address> addr;
      if (with_addr && a(g) != 0)
        addr = static_cast<Address>(a(g));
      step.push_back({ev(comps[c(g)], comps[c(g)], "m"), addr});
    }
    t.steps.push_back(canonical_step(step));
  }
  return t;
}

} // namespace

TEST_CASE("address slicing splits the example trace by addr") {
  auto subs = address_slice(eq1_trace());
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].key == Address{10});
  CHECK(subs[0].types() == std::vector<EventType>{e1, e2, e3});
  CHECK(subs[1].key == Address{15});
  CHECK(subs[1].types() == std::vector<EventType>{e1, e2, e1});
  CHECK(slice(eq1_trace(), SliceMethod::Address).size() == 2);
}

TEST_CASE("no slicing keeps one sub-trace with every event") {
  auto subs = slice(eq1_trace(), SliceMethod::None);
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].events.size() == 6);
}

TEST_CASE("addr-less events follow the configured policy") {
  Trace t;
  t.steps = {{{e1, 1}}, {{e2, std::nullopt}}, {{e3, 2}}};
  auto copy = address_slice(t, AddrlessPolicy::Copy);
  REQUIRE(copy.size() == 2);
  CHECK(copy[0].types() == std::vector<EventType>{e1, e2});
  CHECK(copy[1].types() == std::vector<EventType>{e2, e3});
  auto res = address_slice(t, AddrlessPolicy::Residual);
  REQUIRE(res.size() == 3);
  CHECK_FALSE(res[2].key.has_value());
  CHECK(res[2].types() == std::vector<EventType>{e2});
  // Nothing addressed: the whole trace is one slice.
  CHECK(address_slice(singleton_trace({e1, e2})).size() == 1);
}

TEST_CASE("causality slicing separates the two interleaved chains") {
  const EventType a = ev("A", "B", "e0"), b = ev("D", "E", "e1"), c = ev("B", "C", "e2"),
                  d = ev("E", "F", "e3");
  auto subs = causality_slice(singleton_trace({a, b, c, d}));
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].types() == std::vector<EventType>{a, c});
  CHECK(subs[1].types() == std::vector<EventType>{b, d});
  CHECK_FALSE(subs[0].merged);
}

TEST_CASE("ambiguous causal match merges sub-traces in trace order") {
  const EventType a = ev("X", "Y", "a"), b = ev("Z", "Y", "b"), c = ev("Y", "W", "c");
  auto subs = causality_slice(singleton_trace({a, b, c}));
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].types() == std::vector<EventType>{a, b, c});
  CHECK(subs[0].merged);
}

TEST_CASE("only the last event of a sub-trace is matched") {
  // a: X->Y, then c: Y->W extends it; a later d: Y->V cannot attach to a.
  const EventType a = ev("X", "Y", "a"), c = ev("Y", "W", "c"), d = ev("Y", "V", "d");
  auto subs = causality_slice(singleton_trace({a, c, d}));
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].types() == std::vector<EventType>{a, c});
  CHECK(subs[1].types() == std::vector<EventType>{d});
}

TEST_CASE("slicing conserves events and preserves order") {
  std::mt19937_64 g(17);
  for (int trial = 0; trial < 200; ++trial) {
    Trace t = random_trace(g, true);
    const auto whole = linearize_instances(t);
    const std::multiset<EventInstance> bag(whole.begin(), whole.end());
    for (auto m : {SliceMethod::None, SliceMethod::Causality, SliceMethod::AddressThenCausality}) {
      auto subs = slice(t, m, AddrlessPolicy::Residual);
      CHECK(all_events(subs) == bag);
      for (const auto &s : subs) {
        CHECK_FALSE(s.events.empty());
        CHECK(is_projection(s.events, whole));
      }
    }
    auto res = address_slice(t, AddrlessPolicy::Residual);
    CHECK(all_events(res) == bag);
    for (const auto &s : res) {
      CHECK(is_projection(s.events, whole));
      for (const auto &e : s.events)
        CHECK(e.addr == s.key);
    }
    auto causal = causality_slice(t);
    for (const auto &s : causal) {
      if (s.merged)
        continue;
      for (std::size_t i = 1; i < s.events.size(); ++i)
        CHECK(causality_ok(s.events[i - 1].etype, s.events[i].etype));
    }
  }
}

TEST_CASE("address then causality equals causality applied to each address slice") {
  std::mt19937_64 g(99);
  for (int trial = 0; trial < 100; ++trial) {
    Trace t = random_trace(g, true);
    std::vector<std::vector<EventInstance>> want;
    for (const auto &a : address_slice(t))
      for (const auto &c : causality_slice(a.events))
        want.push_back(c.events);
    std::vector<std::vector<EventInstance>> got;
    for (const auto &s : slice(t, SliceMethod::AddressThenCausality))
      got.push_back(s.events);
    CHECK(got == want);
  }
}

TEST_CASE("causality slicing is a fixpoint on an unmerged chain") {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 100; ++trial) {
    for (const auto &s : causality_slice(random_trace(g, false))) {
      if (s.merged)
        continue;
      auto again = causality_slice(s.events);
      REQUIRE(again.size() == 1);
      CHECK(again[0].events == s.events);
    }
  }
}

TEST_CASE("slice method names parse") {
  CHECK(parse_slice_method("none") == SliceMethod::None);
  CHECK(parse_slice_method("address") == SliceMethod::Address);
  CHECK(parse_slice_method("causality") == SliceMethod::Causality);
  CHECK(parse_slice_method("address+causality") == SliceMethod::AddressThenCausality);
  CHECK(to_string(SliceMethod::AddressThenCausality) == "address+causality");
  CHECK_THROWS_AS(parse_slice_method("fancy"), ConfigError);
}
