#include <cmath>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "sempf/feedback.hpp"
#include "sempf/memsys.hpp"
#include "sempf/pie.hpp"
#include "test_util.hpp"

using namespace sempf;

namespace {

using S = PieState;
using E = LifecycleEvent;

Pie& armed_pie(PieArray& pies, ContextKey k = {0x40, 0, 0}) {
  Pie& p = pies.allocate(k, 0);
  pies.transition(p, E::qualified_hot_flaky);
  pies.transition(p, E::walk_done);
  for (int i = 0; i < pies.config().validation_rounds; ++i) pies.transition(p, E::pass);
  pies.arm(p, {});
  return p;
}

}  // namespace

TEST_CASE("lifecycle: enumerated transition graph is exactly the designed one") {
  // Legal edges written out by hand; every other (state, event) pair throws.
  const std::set<std::tuple<S, E, bool, S>> legal = {
      {S::Active, E::qualified_hot_flaky, false, S::Gen},
      {S::Active, E::qualified_hot_flaky, true, S::Gen},
      {S::Gen, E::walk_done, false, S::Validate},
      {S::Gen, E::walk_done, true, S::Validate},
      {S::Validate, E::pass, false, S::Validate},
      {S::Validate, E::pass, true, S::Trim},
      {S::Trim, E::trim_done, false, S::Armed},
      {S::Trim, E::trim_done, true, S::Armed},
      {S::Gen, E::fail, false, S::Active},
      {S::Gen, E::fail, true, S::Active},
      {S::Validate, E::fail, false, S::Active},
      {S::Validate, E::fail, true, S::Active},
      {S::Trim, E::fail, false, S::Active},
      {S::Trim, E::fail, true, S::Active},
      {S::Armed, E::fail, false, S::Active},
      {S::Armed, E::fail, true, S::Active},
  };
  std::set<std::tuple<S, E, bool, S>> seen;
  for (int s = 0; s < kNumPieStates; ++s) {
    for (int e = 0; e < kNumLifecycleEvents; ++e) {
      for (bool last : {false, true}) {
        const auto st = static_cast<S>(s);
        const auto ev = static_cast<E>(e);
        try {
          seen.insert({st, ev, last, next_state(st, ev, last)});
        } catch (const std::logic_error&) {
        }
      }
    }
  }
  CHECK(seen == legal);
  // Disabled has no way out.
  for (int e = 0; e < kNumLifecycleEvents; ++e)
    CHECK_THROWS_AS(next_state(S::Disabled, static_cast<E>(e)), std::logic_error);
}

TEST_CASE("lifecycle: third validation pass moves to Trim") {
  PieArray pies;
  Pie& p = pies.allocate({0x40, 0, 0}, 0);
  pies.transition(p, E::qualified_hot_flaky);
  CHECK(p.state == S::Gen);
  pies.transition(p, E::walk_done);
  pies.transition(p, E::pass);
  pies.transition(p, E::pass);
  CHECK(p.state == S::Validate);
  pies.transition(p, E::pass);
  CHECK(p.state == S::Trim);
}

TEST_CASE("reset clears construction state and the 26th reset disables") {
  PieArray pies;
  Pie& p = pies.allocate({0x40, 0, 0}, 0);
  pies.transition(p, E::qualified_hot_flaky);
  const std::uint64_t uid = p.uid;
  pies.reset(p, ResetCause::too_long);
  CHECK(p.state == S::Active);
  CHECK(p.resets == 1);
  CHECK_FALSE(p.draft.has_value());
  CHECK(p.uid != uid);
  CHECK(pies.cause_histogram()[static_cast<std::size_t>(ResetCause::too_long)] == 1);

  for (int i = 2; i <= 25; ++i) pies.reset(p, ResetCause::inconsistent);
  CHECK(p.resets == 25);
  CHECK(p.state == S::Active);  // still re-constructible
  pies.transition(p, E::qualified_hot_flaky);
  pies.reset(p, ResetCause::inconsistent);
  CHECK(p.resets == 26);
  CHECK(p.state == S::Disabled);
  CHECK(pies.disabled_count() == 1);
  CHECK_THROWS_AS(pies.reset(p, ResetCause::timeout), std::logic_error);
}

TEST_CASE("saturating counters: shifting halves both and keeps the ratio") {
  PieArray pies;
  Pie& p = armed_pie(pies);
  p.sent = 64;
  p.useless = 20;
  p.raw_sent = 0;
  pies.record_sent(p);  // 65 -> shift
  CHECK(p.sent == 32);
  CHECK(p.useless == 10);
}

TEST_CASE("property: after any shift the useless/sent ratio moves by at most 1/32") {
  auto rng = test::rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    PieArray pies(PieConfig{.steady_events = 1'000'000'000});  // keep the usefulness test out of the way
    Pie& p = armed_pie(pies);
    for (int i = 0; i < 400; ++i) {
      const std::uint32_t s0 = p.sent, u0 = p.useless;
      const bool send = p.useless >= p.sent || rng() % 3 != 0;
      if (send) pies.record_sent(p);
      else pies.record_useless(p);
      REQUIRE(p.sent <= 64);
      REQUIRE(p.useless <= p.sent);
      if (p.sent < s0) {  // shift happened on this send
        const double pre = static_cast<double>(u0) / (s0 + 1.0);
        const double after = static_cast<double>(p.useless) / p.sent;
        REQUIRE(std::abs(after - pre) <= 1.0 / 32);
      }
    }
  }
}

TEST_CASE("usefulness: 95 useless of 100 resets, 50 hits of 100 does not") {
  {
    PieArray pies;
    Pie& p = armed_pie(pies);
    bool reset = false;
    for (int i = 0; i < 100 && !reset; ++i) {
      reset = pies.record_sent(p);
      if (!reset && i % 20 != 0) reset = pies.record_useless(p);
    }
    CHECK(reset);
    CHECK(p.state == S::Active);
    CHECK(p.causes[static_cast<std::size_t>(ResetCause::low_usefulness)] == 1);
  }
  {
    PieArray pies;
    Pie& p = armed_pie(pies);
    for (int i = 0; i < 100; ++i) {
      REQUIRE_FALSE(pies.record_sent(p));
      if (i % 2) REQUIRE_FALSE(pies.record_hit(p, 20, false));
      else REQUIRE_FALSE(pies.record_useless(p));
    }
    CHECK(p.state == S::Armed);
  }
}

TEST_CASE("usefulness is not judged before the steady-state count") {
  PieArray pies;
  Pie& p = armed_pie(pies);
  for (int i = 0; i < 31; ++i) {
    REQUIRE_FALSE(pies.record_sent(p));
    REQUIRE_FALSE(pies.record_useless(p));
  }
  CHECK(p.state == S::Armed);
  CHECK(pies.record_sent(p));  // 32nd send, all useless so far
}

TEST_CASE("repeat filter: three repeats pass, four reset, alternating never resets") {
  {
    PieArray pies;
    Pie& p = armed_pie(pies);
    CHECK_FALSE(pies.repeat_address_check(p, 0x1000));
    CHECK_FALSE(pies.repeat_address_check(p, 0x1000));
    CHECK_FALSE(pies.repeat_address_check(p, 0x1000));
    CHECK(pies.repeat_address_check(p, 0x1000));
    CHECK(p.state == S::Active);
    CHECK(p.causes[static_cast<std::size_t>(ResetCause::repeated_address)] == 1);
  }
  {
    PieArray pies;
    Pie& p = armed_pie(pies);
    for (int i = 0; i < 1000; ++i) REQUIRE_FALSE(pies.repeat_address_check(p, i % 2 ? 0x1000 : 0x2000));
    CHECK(p.state == S::Armed);
  }
}

TEST_CASE("timeout: reset after 100,001 cycles in construction; armed and active exempt") {
  PieArray pies;
  Pie& v = pies.allocate({0x10, 0, 1}, 0);
  pies.transition(v, E::qualified_hot_flaky);
  v.gen_time = 500;
  pies.transition(v, E::walk_done);
  Pie& a = armed_pie(pies, {0x20, 0, 2});
  a.gen_time = 0;
  Pie& idle = pies.allocate({0x30, 0, 3}, 0);

  CHECK(pies.timeout_sweep(500 + 100'000) == 0);
  CHECK(v.state == S::Validate);
  CHECK(pies.timeout_sweep(500 + 100'001) == 1);
  CHECK(v.state == S::Active);
  CHECK(v.causes[static_cast<std::size_t>(ResetCause::timeout)] == 1);
  CHECK(a.state == S::Armed);
  CHECK(idle.state == S::Active);
  CHECK(idle.resets == 0);
}

TEST_CASE("allocation overwrites a slot and records early eviction") {
  PieArray pies;
  pies.allocate({0x10, 1, 4}, 0);
  pies.allocate({0x20, 2, 4}, 1);
  CHECK(pies.find({0x10, 1, 4}) == nullptr);
  CHECK(pies.find({0x20, 2, 4}) != nullptr);
  CHECK(pies.context_record({0x10, 1, 4}).evicted_early == 1);
  CHECK_THROWS_AS(PieArray(PieConfig{.entries = 12}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Prefetch queue and lookahead

TEST_CASE("queue eviction examples") {
  PrefetchQueue q(4);
  for (Addr l = 0; l < 4; ++l) CHECK_FALSE(q.enqueue(PrefetchRecord{l}).has_value());
  auto ev = q.enqueue(PrefetchRecord{10});
  REQUIRE(ev.has_value());
  CHECK(ev->line == 0);
  CHECK(q.useless() == 1);

  CHECK(q.match_demand(1 << kLineBits).has_value());  // line 1 is now the oldest
  CHECK_FALSE(q.enqueue(PrefetchRecord{11}).has_value());
  CHECK(q.useless() == 1);
}

TEST_CASE("match_demand picks the most recent matching record") {
  PrefetchQueue q(8);
  q.enqueue(PrefetchRecord{5});
  q.enqueue(PrefetchRecord{6});
  q.enqueue(PrefetchRecord{5});
  q.enqueue(PrefetchRecord{7});
  auto h = q.match_demand(5 * kLineSize + 3);
  REQUIRE(h.has_value());
  CHECK(h->depth == 1);
  CHECK(q.records()[2].hit);
  CHECK_FALSE(q.records()[0].hit);
  CHECK(q.match_demand(7 * kLineSize)->depth == 0);
  CHECK_FALSE(q.match_demand(99 * kLineSize).has_value());
}

TEST_CASE("property: every enqueued record ends as exactly one of hit or useless") {
  auto rng = test::rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cap = 1 + rng() % 16;
    PrefetchQueue q(cap);
    std::uint64_t hits = 0;
    const int n = 500;
    for (int i = 0; i < n; ++i) {
      q.enqueue(PrefetchRecord{rng() % 20});
      if (rng() % 2 && q.match_demand((rng() % 20) * kLineSize)) ++hits;
    }
    // Drain with fresh lines so every remaining record is resolved.
    for (std::size_t i = 0; i < cap; ++i) q.enqueue(PrefetchRecord{1000 + i});
    CHECK(hits == q.hits());
    CHECK(q.hits() + q.useless() == q.enqueued() - cap);
  }
}

TEST_CASE("reward examples, Q=64") {
  CHECK(reward(20, 64) == 2);
  CHECK(reward(2, 64) == 1);
  CHECK(reward(60, 64) == 1);
  CHECK(reward(8, 64) == 2);
  CHECK(reward(48, 64) == 2);
}

TEST_CASE("lookahead controller examples") {
  CHECK(adapt_lookahead(1, 3, 64) == 2);
  CHECK(adapt_lookahead(64, 3, 64) == 64);
  CHECK(adapt_lookahead(10, 30, 64) == 10);
  CHECK(adapt_lookahead(10, 50, 64) == 9);
  CHECK(adapt_lookahead(1, 60, 64) == 1);
  CHECK(update_ewma(0, false, 40) == 40);
  CHECK(update_ewma(40, true, 0) == doctest::Approx(35));
}

TEST_CASE("property: L stays in [1, 64] under arbitrary hit streams") {
  auto rng = test::rng(1234);
  for (LookaheadPolicy pol : {LookaheadPolicy::dynamic_from_1, LookaheadPolicy::dynamic_from_16, LookaheadPolicy::fixed_32}) {
    PieArray pies(PieConfig{.policy = pol});
    Pie& p = armed_pie(pies);
    CHECK(p.lookahead == initial_lookahead(pol));
    for (int i = 0; i < 20000; ++i) {
      pies.record_hit(p, rng() % 64, rng() % 4 == 0);
      REQUIRE(p.lookahead >= 1);
      REQUIRE(p.lookahead <= kMaxLookahead);
    }
    if (pol == LookaheadPolicy::fixed_32) CHECK(p.lookahead == 32);
  }
}

TEST_CASE("policy names") {
  CHECK(parse_policy("dynamic_from_16") == LookaheadPolicy::dynamic_from_16);
  CHECK_FALSE(parse_policy("adaptive").has_value());
  CHECK(initial_lookahead(LookaheadPolicy::dynamic_from_1) == 1);
  CHECK(initial_lookahead(LookaheadPolicy::dynamic_from_16) == 16);
  CHECK(initial_lookahead(LookaheadPolicy::fixed_32) == 32);
}
