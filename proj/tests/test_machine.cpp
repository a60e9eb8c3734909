#include <map>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace sealpk;

namespace
{
  constexpr Prot kRW{true, true, false};
  constexpr Prot kR{true, false, false};

  TraceEvent ev(InstrAddr ia, Op op) { return TraceEvent{ia, std::move(op), false}; }

  Scenario single(std::vector<TraceEvent> events)
  {
    Scenario s;
    s.threads.push_back(ThreadTrace{0, std::move(events)});
    return s;
  }

  std::vector<const LogRecord*> eventsOf(const EventLog& log)
  {
    std::vector<const LogRecord*> out;
    for (const auto& r : log.records)
      if (r.kind == RecordKind::Event)
        out.push_back(&r);
    return out;
  }
}


TEST(Machine, LoadsCostOneEach)
{
  std::vector<TraceEvent> evs{ev(0x10, op::Mmap{{0, 4}, kR})};
  for (Vpn v = 0; v < 4; ++v)
    for (int i = 0; i < 3; ++i)
      evs.push_back(ev(0x20, op::Load{v, std::nullopt}));
  Scenario s = single(evs);
  s.config.costs.at(CostClass::PkeySyscall) = 0;
  Machine m(s);
  const auto& log = m.run();
  const auto rep = costReport(log);
  EXPECT_EQ(rep.total, 12u);
  EXPECT_EQ(rep[CostClass::Load], 12u);
  EXPECT_TRUE(log.faults.empty());
}

TEST(CostReport, EmptyLogIsZero)
{
  const auto rep = costReport(EventLog{});
  EXPECT_EQ(rep.total, 0u);
  for (CostClass c : kChargedClasses)
    EXPECT_EQ(rep[c], 0u);
  EXPECT_TRUE(rep.byThread.empty());
}

TEST(CostReport, OneMprotectTwoWrpkr)
{
  Scenario s = single({
      ev(0x10, op::Mmap{{0, 1}, kRW}),
      ev(0x14, Syscall{sys::Mprotect{{0, 1}, kR}}),
      ev(0x18, op::Wrpkr{ProtectionKey{1}, std::uint64_t{0}}),
      ev(0x1c, op::Wrpkr{ProtectionKey{1}, std::uint64_t{4}}),
  });
  s.config.costs.at(CostClass::PkeySyscall) = 0;
  Machine m(s);
  EXPECT_EQ(costReport(m.run()).total, 1364u);
}

TEST(CostReport, PartitionsTotal)
{
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    {
      fuzz::RandomScenario gen(seed);
      Machine m(gen.scenario());
      const auto rep = costReport(m.run());
      std::uint64_t byClass = 0, byThread = 0, byRecord = 0;
      for (CostClass c : kChargedClasses)
        byClass += rep[c];
      for (const auto& [t, n] : rep.byThread)
        byThread += n;
      for (const auto& r : m.log().records)
        byRecord += r.cycles;
      ASSERT_EQ(byClass, rep.total);
      ASSERT_EQ(byThread, rep.total);
      ASSERT_EQ(byRecord, rep.total);
    }
}

// Every record's charge is the configured price of its class, so the
// total is the class histogram dotted with the cost vector.
TEST(CostReport, AdditiveInCostVector)
{
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    {
      fuzz::RandomScenario gen(seed);
      const Scenario s = gen.scenario();
      Machine a(s);
      a.run();
      std::map<CostClass, std::uint64_t> histogram;
      for (const auto& r : a.log().records)
        ++histogram[r.costClass];

      Scenario t = s;
      for (CostClass c : kChargedClasses)
        t.config.costs.at(c) = 3 + 7 * static_cast<std::uint64_t>(c);
      Machine b(t);
      b.run();
      std::uint64_t want = 0;
      for (auto [c, n] : histogram)
        want += n * t.config.costs[c];
      ASSERT_EQ(costReport(b.log()).total, want) << seed;
    }
}

TEST(Machine, Deterministic)
{
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    {
      fuzz::RandomScenario gen(seed);
      const Scenario s = gen.scenario();
      Machine a(s), b(s);
      ASSERT_EQ(renderReport(a.run(), ReportFormat::Json), renderReport(b.run(), ReportFormat::Json));
    }
}

// Every trace event yields exactly one event record, in program order per thread.
TEST(Machine, DispatchIsTotal)
{
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    {
      fuzz::RandomScenario gen(seed);
      Scenario s = gen.scenario();
      s.config.continueOnFault = true;
      Machine m(s);
      m.run();
      std::map<ThreadId, std::size_t> next;
      for (const auto* r : eventsOf(m.log()))
        {
          ASSERT_TRUE(r->event);
          ASSERT_EQ(*r->event, next[r->thread]++);
        }
      for (const auto& t : s.threads)
        ASSERT_EQ(next[t.id], t.events.size());
    }
}

// No row-changing WRPKR is recorded without an allow decision right before it.
TEST(Machine, GateBeforeWrite)
{
  for (std::uint64_t seed = 0; seed < 300; ++seed)
    {
      fuzz::RandomScenario gen(seed);
      Machine m(gen.scenario());
      const auto& recs = m.run().records;
      for (std::size_t i = 0; i < recs.size(); ++i)
        {
          if (recs[i].kind != RecordKind::Event or recs[i].op != "Wrpkr")
            continue;
          ASSERT_GT(i, 0u);
          const auto& g = recs[i - 1];
          ASSERT_EQ(g.kind, RecordKind::Gate);
          ASSERT_EQ(g.event, recs[i].event);
          ASSERT_EQ(g.result == "allow", recs[i].result == "OK");
        }
    }
}

TEST(Machine, WriteOnlyPage)
{
  Scenario s = single({
      ev(0x10, op::Mmap{{5, 1}, kRW}),
      ev(0x14, Syscall{sys::PkeyAlloc{PermPair::writeOnly()}}),
      ev(0x18, Syscall{sys::PkeyMprotect{{5, 1}, kRW, KeyRef::lastAlloc()}}),
      ev(0x1c, op::Store{5, op::StoreValue{0, 9}}),
      ev(0x20, op::Load{5, 0}),
  });
  Machine m(s);
  m.run();
  ASSERT_EQ(m.log().faults.size(), 1u);
  EXPECT_EQ(m.log().faults[0].cause, FaultCause::PkeyDenied);
  EXPECT_EQ(m.log().faults[0].kind, AccessKind::Load);
  EXPECT_EQ(m.log().faults[0].pkey, 1u);
  EXPECT_EQ(m.memoryWord(5, 0), 9u);
  EXPECT_TRUE(m.terminated(0));
  EXPECT_EQ(m.log().records.back().kind, RecordKind::Terminate);
}

TEST(Machine, SealedWrpkrAllowedInRangeDeniedOutside)
{
  const ProtectionKey k{3};
  Scenario s = single({
      ev(0x10, op::SealStart{k, 0x100}),
      ev(0x14, op::SealEnd{k, 0x1ff}),
      ev(0x18, Syscall{sys::PkeyPermSeal{k}}),
      ev(0x120, op::Wrpkr{k, PermPair::readOnly()}),
      ev(0x300, op::Wrpkr{k, PermPair::allowAll()}),
      ev(0x304, op::Load{0, std::nullopt}),
  });
  Machine m(s);
  m.run();
  EXPECT_EQ(m.pkrOf(0).pair(k), PermPair::readOnly());
  ASSERT_EQ(m.log().faults.size(), 1u);
  EXPECT_EQ(m.log().faults[0].cause, FaultCause::SealViolation);
  EXPECT_EQ(m.log().faults[0].ia, 0x300u);
  EXPECT_EQ(m.log().faults[0].pkey, k.value());
  // the thread stopped at the violation
  EXPECT_EQ(eventsOf(m.log()).size(), 5u);
}

TEST(Machine, ContinueOnFaultKeepsRunning)
{
  Scenario s = single({ev(0x10, op::Load{1, std::nullopt}), ev(0x14, op::Store{1, std::nullopt})});
  s.config.continueOnFault = true;
  Machine m(s);
  m.run();
  EXPECT_EQ(m.log().faults.size(), 2u);
  EXPECT_FALSE(m.terminated(0));
  EXPECT_EQ(m.log().faults[0].cause, FaultCause::InvalidPage);
  EXPECT_FALSE(m.log().faults[0].pkey);
}

TEST(Machine, YieldSchedulingAndIsolation)
{
  const ProtectionKey k{1};
  Scenario s;
  s.threads.push_back(ThreadTrace{7, {
      ev(0x10, Syscall{sys::PkeyAlloc{PermPair::allowAll()}}),
      ev(0x14, op::Yield{}),
      ev(0x18, op::Rdpkr{k}),
  }});
  s.threads.push_back(ThreadTrace{9, {
      ev(0x20, op::Rdpkr{k}),
      ev(0x24, op::Wrpkr{k, PermPair::readOnly()}),
      ev(0x28, op::Yield{}),
  }});
  Machine m(s);
  m.run();
  std::vector<ThreadId> order;
  std::uint64_t switches = 0;
  for (const auto& r : m.log().records)
    {
      if (r.kind == RecordKind::ContextSwitch)
        {
          ++switches;
          EXPECT_EQ(r.cycles, 200u);
        }
      if (r.kind == RecordKind::Event)
        order.push_back(r.thread);
    }
  EXPECT_EQ(order, (std::vector<ThreadId>{7, 7, 9, 9, 9, 7}));
  EXPECT_EQ(switches, 2u);
  EXPECT_EQ(m.pkrOf(7).pair(k), PermPair::allowAll());
  EXPECT_EQ(m.pkrOf(9).pair(k), PermPair::readOnly());
  // thread 9 read deny-all (both bits of column 1) from the alloc
  EXPECT_EQ(eventsOf(m.log())[2]->value, 0b1100u);
}

TEST(Machine, UnresolvedLastAllocIsInvalidKey)
{
  Machine m(single({ev(0x10, Syscall{sys::PkeyFree{KeyRef::lastAlloc()}})}));
  m.run();
  EXPECT_EQ(m.log().records[0].result, "InvalidKey");
}

TEST(Machine, AdHocStepHasNoIndex)
{
  Machine m(SimConfig{}, {0, 1});
  EXPECT_TRUE(m.step(1, ev(0x10, op::Mmap{{0, 1}, kR})));
  EXPECT_FALSE(m.step(1, ev(0x14, op::Store{0, std::nullopt})));
  EXPECT_FALSE(m.log().records.back().event);
  EXPECT_EQ(m.log().faults.back().cause, FaultCause::PteDenied);
}

TEST(Machine, SharedKeyAlert)
{
  Scenario s = single({
      ev(0x10, op::Mmap{{0, 2}, kRW}),
      ev(0x14, Syscall{sys::PkeyAlloc{PermPair::allowAll()}}),
      ev(0x18, Syscall{sys::PkeyMprotect{{0, 2}, kRW, KeyRef::lastAlloc()}}),
      ev(0x1c, Syscall{sys::PkeyFree{KeyRef::lastAlloc()}}),
      ev(0x20, Syscall{sys::PkeyAlloc{PermPair::readOnly()}}),
  });
  for (bool lazy : {true, false})
    {
      s.config.lazyDealloc = lazy;
      Machine m(s);
      m.run();
      std::size_t alerts = 0;
      for (const auto& r : m.log().records)
        if (r.kind == RecordKind::Alert)
          {
            ++alerts;
            EXPECT_EQ(r.pkey, 1u);
            EXPECT_EQ(r.value, 2u);
          }
      EXPECT_EQ(alerts, lazy ? 0u : 1u);
    }
}

TEST(Machine, MunmapForgetsMemory)
{
  Machine m(single({
      ev(0x10, op::Mmap{{0, 1}, kRW}),
      ev(0x14, op::Store{0, op::StoreValue{3, 77}}),
      ev(0x18, op::Munmap{{0, 1}}),
      ev(0x1c, op::Mmap{{0, 1}, kRW}),
      ev(0x20, op::Load{0, 3}),
  }));
  m.run();
  EXPECT_EQ(m.memoryWord(0, 3), 0u);
  EXPECT_EQ(m.log().records.back().value, 0u);
}

TEST(Machine, RejectsBadThreads)
{
  EXPECT_THROW(Machine(SimConfig{}, {}), std::invalid_argument);
  EXPECT_THROW(Machine(SimConfig{}, {1, 1}), std::invalid_argument);
}
