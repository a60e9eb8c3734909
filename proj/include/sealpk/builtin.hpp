#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trace.hpp"

namespace sealpk
{

  namespace detail
  {
    /// Appends events to one thread and hands back their indices.
    class ThreadBuilder
    {
    public:
      explicit ThreadBuilder(ThreadId id) { trace_.id = id; }

      std::size_t add(InstrAddr ia, Op op)
      {
        trace_.events.push_back(TraceEvent{ia, std::move(op), false});
        return trace_.events.size() - 1;
      }

      std::size_t sys(InstrAddr ia, Syscall s) { return add(ia, Op{std::move(s)}); }

      ThreadTrace take() { return std::move(trace_); }

    private:
      ThreadTrace trace_;
    };

    inline Expectation expectEvent(ThreadId t, std::size_t index, std::string result,
                                   std::optional<unsigned> key = std::nullopt,
                                   std::optional<bool> whenLazy = std::nullopt)
    {
      return Expectation{expect::EventResult{t, index, std::move(result), key}, whenLazy};
    }

    inline Expectation expectKey(ThreadId t, std::size_t index, unsigned key,
                                 std::optional<bool> whenLazy = std::nullopt)
    {
      return Expectation{expect::EventResult{t, index, std::string("OK"), key}, whenLazy};
    }

    inline Expectation expectFault(FaultCause c, ThreadId t, std::size_t index,
                                   std::optional<bool> whenLazy = std::nullopt)
    {
      return Expectation{expect::Fault{c, t, index}, whenLazy};
    }

    inline constexpr Prot kRW{true, true, false};
    inline constexpr Prot kR{true, false, false};


    // Page 87 is readable-writable in the page table; its key has WD set,
    // so the effective permission is read-only.
    inline Scenario writeDenied()
    {
      Scenario s;
      ThreadBuilder t(0);
      t.add(0x100, op::Mmap{{87, 1}, kRW});
      const auto alloc = t.sys(0x104, sys::PkeyAlloc{PermPair{false, true}});
      t.sys(0x108, sys::PkeyMprotect{{87, 1}, kRW, KeyRef::lastAlloc()});
      const auto load = t.add(0x10c, op::Load{87, std::nullopt});
      const auto store = t.add(0x110, op::Store{87, std::nullopt});
      s.threads.push_back(t.take());
      s.expectations = {
        expectKey(0, alloc, 1),
        expectEvent(0, load, "OK"),
        expectFault(FaultCause::PkeyDenied, 0, store),
        Expectation{expect::Pair{0, ProtectionKey{1}, PermPair{false, true}}, std::nullopt},
      };
      return s;
    }

    // PTE RW with pair (1,0): stores go through, loads fault.
    inline Scenario writeOnly()
    {
      Scenario s;
      ThreadBuilder t(0);
      t.add(0x100, op::Mmap{{90, 1}, kRW});
      t.sys(0x104, sys::PkeyAlloc{PermPair::writeOnly()});
      t.sys(0x108, sys::PkeyMprotect{{90, 1}, kRW, KeyRef::lastAlloc()});
      const auto store = t.add(0x10c, op::Store{90, op::StoreValue{0, 42}});
      const auto load = t.add(0x110, op::Load{90, 0});
      s.threads.push_back(t.take());
      s.expectations = {
        expectEvent(0, store, "OK"),
        expectFault(FaultCause::PkeyDenied, 0, load),
      };
      return s;
    }


    // Shared opening of the financial-log story: Main maps the log and a
    // price list, gives the log its own key, restricts WRPKR on that key
    // to the logger and seals the domain and its pages. The logger then opens the
    // log write-only, appends, and leaves it read-only for the others.
    inline constexpr Vpn kLog = 0x100;
    inline constexpr Vpn kPrices = 0x200;
    inline constexpr InstrAddr kMain = 0x1000;
    inline constexpr InstrAddr kLogger = 0x4000;
    inline constexpr InstrAddr kLoggerEnd = 0x40ff;
    inline constexpr InstrAddr kRekeyFn = 0x5000;
    inline constexpr InstrAddr kJoinFn = 0x6000;
    inline constexpr InstrAddr kInjectFn = 0x7000;
    inline constexpr ProtectionKey kLogKey{1};

    struct LogStory
    {
      ThreadBuilder t{0};
      std::size_t loggerWrite = 0;
      std::size_t loggerAppend = 0;
    };

    inline LogStory logPrologue()
    {
      LogStory st;
      auto& t = st.t;
      t.add(kMain, op::Mmap{{kLog, 2}, kRW});
      t.add(kMain + 4, op::Mmap{{kPrices, 1}, kRW});
      t.sys(kMain + 8, sys::PkeyAlloc{PermPair::allowAll()});
      t.sys(kMain + 12, sys::PkeyMprotect{{kLog, 2}, kRW, kLogKey});
      t.add(kMain + 16, op::SealStart{kLogKey, kLogger});
      t.add(kMain + 20, op::SealEnd{kLogKey, kLoggerEnd});
      t.sys(kMain + 24, sys::PkeyPermSeal{kLogKey});
      t.sys(kMain + 28, sys::PkeySeal{kLogKey, true, true});

      t.add(kLogger, op::Rdpkr{kLogKey});
      st.loggerWrite = t.add(kLogger + 4, op::Wrpkr{kLogKey, PermPair::writeOnly()});
      st.loggerAppend = t.add(kLogger + 8, op::Store{kLog, op::StoreValue{0, 1000}});
      t.add(kLogger + 12, op::Rdpkr{kLogKey});
      t.add(kLogger + 16, op::Wrpkr{kLogKey, PermPair::readOnly()});
      return st;
    }

    inline std::vector<Expectation> prologueExpectations(const LogStory& st)
    {
      return {
        expectEvent(0, st.loggerWrite, "OK"),
        expectEvent(0, st.loggerAppend, "OK"),
      };
    }

    // The attacker takes a fresh RW key and tries to move the log into it.
    inline Scenario attackRekey()
    {
      LogStory st = logPrologue();
      auto& t = st.t;
      const auto alloc = t.sys(kRekeyFn, sys::PkeyAlloc{PermPair::allowAll()});
      const auto rekey = t.sys(kRekeyFn + 4, sys::PkeyMprotect{{kLog, 2}, kRW, KeyRef::lastAlloc()});
      const auto plain = t.sys(kRekeyFn + 8, sys::Mprotect{{kLog, 2}, kRW});
      const auto read = t.add(kRekeyFn + 12, op::Load{kLog, 0});
      const auto forge = t.add(kRekeyFn + 16, op::Store{kLog, op::StoreValue{0, 1}});
      Scenario s;
      s.expectations = prologueExpectations(st);
      s.expectations.push_back(expectKey(0, alloc, 2));
      s.expectations.push_back(expectEvent(0, rekey, "EPERM"));
      s.expectations.push_back(expectEvent(0, plain, "EPERM"));
      s.expectations.push_back(expectEvent(0, read, "OK"));
      s.expectations.push_back(expectFault(FaultCause::PkeyDenied, 0, forge));
      s.expectations.push_back(
          Expectation{expect::KeyState{kLogKey, true, false, 2}, std::nullopt});
      s.threads.push_back(t.take());
      return s;
    }

    // The attacker tries to push the price list into the log's domain.
    inline Scenario attackAddPages()
    {
      LogStory st = logPrologue();
      auto& t = st.t;
      const auto join = t.sys(kJoinFn, sys::PkeyMprotect{{kPrices, 1}, kR, kLogKey});
      const auto read = t.add(kLogger + 20, op::Load{kPrices, 0});
      Scenario s;
      s.expectations = prologueExpectations(st);
      s.expectations.push_back(expectEvent(0, join, "EPERM"));
      s.expectations.push_back(expectEvent(0, read, "OK"));
      s.expectations.push_back(
          Expectation{expect::KeyState{kLogKey, true, false, 2}, std::nullopt});
      s.expectations.push_back(Expectation{expect::NoFaults{}, std::nullopt});
      s.threads.push_back(t.take());
      return s;
    }

    // An injected WRPKR outside the logger's range.
    inline Scenario attackWrpkr()
    {
      LogStory st = logPrologue();
      auto& t = st.t;
      t.add(kInjectFn, op::Rdpkr{kLogKey});
      const auto inject = t.add(kInjectFn + 4, op::Wrpkr{kLogKey, PermPair::allowAll()});
      t.add(kInjectFn + 8, op::Store{kLog, op::StoreValue{0, 1}});
      Scenario s;
      s.expectations = prologueExpectations(st);
      s.expectations.push_back(expectFault(FaultCause::SealViolation, 0, inject));
      s.expectations.push_back(
          Expectation{expect::Pair{0, kLogKey, PermPair::readOnly()}, std::nullopt});
      s.threads.push_back(t.take());
      return s;
    }


    // alloc -> assign -> free -> alloc. Without lazy release the second
    // alloc hands back the key the old pages still carry, and the new
    // domain's WD lands on them.
    inline Scenario useAfterFree()
    {
      Scenario s;
      s.config.continueOnFault = true;
      ThreadBuilder t(0);
      t.add(0x100, op::Mmap{{0x100, 2}, kRW});
      t.sys(0x104, sys::PkeyAlloc{PermPair::allowAll()});
      t.sys(0x108, sys::PkeyMprotect{{0x100, 2}, kRW, KeyRef::lastAlloc()});
      t.add(0x10c, op::Store{0x100, op::StoreValue{0, 7}});
      const auto freed = t.sys(0x110, sys::PkeyFree{ProtectionKey{1}});
      t.add(0x114, op::Mmap{{0x200, 1}, kRW});
      const auto second = t.sys(0x118, sys::PkeyAlloc{PermPair{false, true}});
      t.sys(0x11c, sys::PkeyMprotect{{0x200, 1}, kRW, KeyRef::lastAlloc()});
      const auto oldStore = t.add(0x120, op::Store{0x100, op::StoreValue{0, 8}});
      t.add(0x124, op::Munmap{{0x100, 1}});
      const auto third = t.sys(0x128, sys::PkeyAlloc{PermPair::allowAll()});
      t.add(0x12c, op::Munmap{{0x101, 1}});
      const auto fourth = t.sys(0x130, sys::PkeyAlloc{PermPair::allowAll()});
      s.threads.push_back(t.take());

      const ProtectionKey k1{1};
      s.expectations = {
        expectEvent(0, freed, "OK"),
        // lazy: key 1 stays dirty until both of its pages are gone
        expectKey(0, second, 2, true),
        expectEvent(0, oldStore, "OK", std::nullopt, true),
        expectKey(0, third, 3, true),
        expectKey(0, fourth, 1, true),
        Expectation{expect::SharedKey{false}, true},
        Expectation{expect::NoFaults{}, true},
        // non-lazy: the old pages join the new domain
        expectKey(0, second, 1, false),
        expectFault(FaultCause::PkeyDenied, 0, oldStore, false),
        expectKey(0, third, 2, false),
        expectKey(0, fourth, 3, false),
        Expectation{expect::SharedKey{true}, false},
        Expectation{expect::KeyState{k1, true, false, 0}, true},
        Expectation{expect::KeyState{k1, true, false, 1}, false},
      };
      return s;
    }

    inline Scenario exhaustion()
    {
      Scenario s;
      ThreadBuilder t(0);
      for (unsigned i = 0; i < kNumPkeys; ++i)
        t.sys(0x100 + 4 * i, sys::PkeyAlloc{PermPair::allowAll()});
      s.threads.push_back(t.take());
      s.expectations = {
        expectKey(0, 0, 1),
        expectKey(0, kNumPkeys - 2, kNumPkeys - 1),
        expectEvent(0, kNumPkeys - 1, "NoFreeKey"),
        Expectation{expect::NoFaults{}, std::nullopt},
      };
      return s;
    }

    inline constexpr std::size_t kThrashWrites = 8;

    // Two sealed keys in one row share a one-entry PK-CAM. Each WRPKR
    // changes only its own key's bits, so writes that alternate between
    // the keys miss on every lookup after the first.
    inline Scenario camThrash()
    {
      Scenario s;
      s.config.camCapacity = 1;
      ThreadBuilder t(0);
      const ProtectionKey a{1}, b{2};
      t.sys(0x100, sys::PkeyAlloc{PermPair::allowAll()});
      t.sys(0x104, sys::PkeyAlloc{PermPair::allowAll()});
      t.add(0x108, op::SealStart{a, 0x1000});
      t.add(0x10c, op::SealEnd{a, 0x10ff});
      t.sys(0x110, sys::PkeyPermSeal{a});
      t.add(0x114, op::SealStart{b, 0x2000});
      t.add(0x118, op::SealEnd{b, 0x20ff});
      t.sys(0x11c, sys::PkeyPermSeal{b});
      for (std::size_t i = 0; i < kThrashWrites; ++i)
        {
          const bool second = i % 2 == 0;
          const ProtectionKey k = second ? b : a;
          const InstrAddr base = second ? 0x2000 : 0x1000;
          const PermPair p = (i / 2) % 2 == 0 ? PermPair::readOnly() : PermPair::allowAll();
          t.add(base + 8 * i, op::Rdpkr{k});
          t.add(base + 8 * i + 4, op::Wrpkr{k, p});
        }
      s.threads.push_back(t.take());
      s.expectations = {
        Expectation{expect::Refills{kThrashWrites - 1}, std::nullopt},
        Expectation{expect::NoFaults{}, std::nullopt},
      };
      return s;
    }

    // Thread 0 allocates; thread 1 starts with deny-all for the key and
    // its own writes do not leak back.
    inline Scenario pkrPerThread()
    {
      Scenario s;
      ThreadBuilder a(0), b(1);
      const ProtectionKey k{1};
      a.add(0x100, op::Mmap{{0x300, 1}, kRW});
      a.sys(0x104, sys::PkeyAlloc{PermPair::allowAll()});
      a.sys(0x108, sys::PkeyMprotect{{0x300, 1}, kRW, k});
      a.add(0x10c, op::Store{0x300, op::StoreValue{0, 5}});
      a.add(0x110, op::Yield{});
      const auto denied = b.add(0x200, op::Load{0x300, 0});
      b.add(0x204, op::Rdpkr{k});
      b.add(0x208, op::Wrpkr{k, PermPair::readOnly()});
      const auto read = b.add(0x20c, op::Load{0x300, 0});
      b.add(0x210, op::Yield{});
      const auto write = a.add(0x114, op::Store{0x300, op::StoreValue{0, 6}});
      s.config.continueOnFault = true;
      s.threads.push_back(a.take());
      s.threads.push_back(b.take());
      s.expectations = {
        expectFault(FaultCause::PkeyDenied, 1, denied),
        expectEvent(1, read, "OK"),
        expectEvent(0, write, "OK"),
        Expectation{expect::Pair{0, k, PermPair::allowAll()}, std::nullopt},
        Expectation{expect::Pair{1, k, PermPair::readOnly()}, std::nullopt},
      };
      return s;
    }
  }


  struct BuiltinInfo
  {
    std::string_view name;
    std::string_view summary;
    Scenario (*make)();
  };

  inline const std::vector<BuiltinInfo>& builtins()
  {
    static const std::vector<BuiltinInfo> all = {
      {"write-denied", "RW page, key pair WD=1: load passes, store faults", detail::writeDenied},
      {"write-only", "RW page, key pair RD=1: store passes, load faults", detail::writeOnly},
      {"attack-rekey", "re-keying a sealed domain is refused", detail::attackRekey},
      {"attack-add-pages", "adding pages to a page-sealed domain is refused", detail::attackAddPages},
      {"attack-wrpkr", "WRPKR outside the permissible range faults", detail::attackWrpkr},
      {"use-after-free", "key reuse with and without lazy de-allocation", detail::useAfterFree},
      {"exhaustion-1023", "1023 allocations succeed, the next fails", detail::exhaustion},
      {"cam-thrash", "alternating sealed keys in a one-entry PK-CAM", detail::camThrash},
      {"pkr-per-thread", "permission pairs are private to each thread", detail::pkrPerThread},
    };
    return all;
  }

  inline std::optional<Scenario> builtinScenario(std::string_view name)
  {
    for (const auto& b : builtins())
      if (b.name == name)
        return b.make();
    return std::nullopt;
  }

}
