#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cost_model.hpp"
#include "seal_unit.hpp"
#include "types.hpp"

namespace sealpk
{

  namespace detail
  {
    template <class... Ts> struct Overloaded : Ts... { using Ts::operator()...; };
    template <class... Ts> Overloaded(Ts...) -> Overloaded<Ts...>;
  }


  /// Scenario-level thread identifier (as written in the scenario file).
  using ThreadId = std::uint32_t;

  namespace op
  {
    /// Data read. slot selects a word inside the page for value-carrying
    /// accesses (used by the shadow stack).
    struct Load
    {
      Vpn page = 0;
      std::optional<std::uint64_t> slot;
      friend bool operator==(const Load&, const Load&) = default;
    };

    struct StoreValue
    {
      std::uint64_t slot = 0;
      std::uint64_t value = 0;
      friend bool operator==(const StoreValue&, const StoreValue&) = default;
    };

    struct Store
    {
      Vpn page = 0;
      std::optional<StoreValue> data;
      friend bool operator==(const Store&, const Store&) = default;
    };

    /// WRPKR. Either a literal row, or a pair spliced into the row most
    /// recently read by this thread's RDPKR (read-modify-write).
    struct Wrpkr
    {
      ProtectionKey pkey;
      std::variant<std::uint64_t, PermPair> value;
      friend bool operator==(const Wrpkr&, const Wrpkr&) = default;
    };

    struct Rdpkr
    {
      ProtectionKey pkey;
      friend bool operator==(const Rdpkr&, const Rdpkr&) = default;
    };
    struct SealStart
    {
      ProtectionKey pkey;
      InstrAddr addr = 0;
      friend bool operator==(const SealStart&, const SealStart&) = default;
    };
    struct SealEnd
    {
      ProtectionKey pkey;
      InstrAddr addr = 0;
      friend bool operator==(const SealEnd&, const SealEnd&) = default;
    };
    struct Call
    {
      std::uint64_t fn = 0;
      InstrAddr ret = 0;
      friend bool operator==(const Call&, const Call&) = default;
    };
    struct Return
    {
      InstrAddr ret = 0;
      friend bool operator==(const Return&, const Return&) = default;
    };

    /// Overwrite the architectural return slot at depth `slot`.
    struct SmashStack
    {
      std::uint64_t slot = 0;
      std::uint64_t value = 0;
      friend bool operator==(const SmashStack&, const SmashStack&) = default;
    };

    struct Mmap
    {
      PageRange pages;
      Prot prot;
      friend bool operator==(const Mmap&, const Mmap&) = default;
    };
    struct Munmap
    {
      PageRange pages;
      friend bool operator==(const Munmap&, const Munmap&) = default;
    };
    struct Yield { friend bool operator==(const Yield&, const Yield&) = default; };
  }

  /// Key operand of a syscall: a literal key, or the key most recently
  /// returned to the issuing thread by pkey_alloc.
  struct KeyRef
  {
    std::optional<ProtectionKey> fixed;

    KeyRef() = default;
    KeyRef(ProtectionKey k) : fixed(k) { }

    static KeyRef lastAlloc() { return KeyRef{}; }

    std::optional<ProtectionKey> resolve(std::optional<ProtectionKey> lastAlloc) const
    { return fixed ? fixed : lastAlloc; }

    friend bool operator==(const KeyRef&, const KeyRef&) = default;
  };

  namespace sys
  {
    struct PkeyAlloc
    {
      PermPair init;
      friend bool operator==(const PkeyAlloc&, const PkeyAlloc&) = default;
    };
    struct PkeyFree
    {
      KeyRef pkey;
      friend bool operator==(const PkeyFree&, const PkeyFree&) = default;
    };
    struct PkeyMprotect
    {
      PageRange pages;
      Prot prot;
      KeyRef pkey;
      friend bool operator==(const PkeyMprotect&, const PkeyMprotect&) = default;
    };
    struct Mprotect
    {
      PageRange pages;
      Prot prot;
      friend bool operator==(const Mprotect&, const Mprotect&) = default;
    };
    struct PkeySeal
    {
      KeyRef pkey;
      bool domain = false;
      bool page = false;
      friend bool operator==(const PkeySeal&, const PkeySeal&) = default;
    };
    struct PkeyPermSeal
    {
      KeyRef pkey;
      friend bool operator==(const PkeyPermSeal&, const PkeyPermSeal&) = default;
    };
  }

  using Syscall = std::variant<sys::PkeyAlloc, sys::PkeyFree, sys::PkeyMprotect, sys::Mprotect,
                               sys::PkeySeal, sys::PkeyPermSeal>;

  constexpr std::string_view syscallName(const Syscall& s)
  {
    constexpr std::string_view names[] = {"pkey_alloc", "pkey_free", "pkey_mprotect",
                                          "mprotect", "pkey_seal", "pkey_perm_seal"};
    return names[s.index()];
  }

  using Op = std::variant<op::Load, op::Store, op::Wrpkr, op::Rdpkr, op::SealStart, op::SealEnd,
                          op::Call, op::Return, op::SmashStack, op::Mmap, op::Munmap, Syscall,
                          op::Yield>;

  constexpr std::string_view opName(const Op& o)
  {
    constexpr std::string_view names[] = {"Load", "Store", "Wrpkr", "Rdpkr", "SealStart",
                                          "SealEnd", "Call", "Return", "SmashStack", "Mmap",
                                          "Munmap", "Syscall", "Yield"};
    return names[o.index()];
  }


  struct TraceEvent
  {
    InstrAddr ia = 0;
    Op op;
    /// Set on events inserted by an instrumentation pass.
    bool instrumented = false;
    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
  };


  struct ThreadTrace
  {
    ThreadId id = 0;
    std::vector<TraceEvent> events;
    friend bool operator==(const ThreadTrace&, const ThreadTrace&) = default;
  };


  struct SimConfig
  {
    bool lazyDealloc = true;
    std::size_t camCapacity = PkCam::kDefaultCapacity;
    bool continueOnFault = false;
    CostModel costs;
    friend bool operator==(const SimConfig&, const SimConfig&) = default;
  };


  namespace expect
  {
    struct Fault
    {
      FaultCause cause = FaultCause::PkeyDenied;
      std::optional<ThreadId> thread;
      std::optional<std::size_t> event;
      friend bool operator==(const Fault&, const Fault&) = default;
    };

    /// Outcome of the event at (thread, index): its result string ("OK",
    /// an error code or a fault cause) and/or, for pkey_alloc, the key.
    struct EventResult
    {
      ThreadId thread = 0;
      std::size_t index = 0;
      std::optional<std::string> result;
      std::optional<unsigned> key;
      friend bool operator==(const EventResult&, const EventResult&) = default;
    };

    /// Final permission pair of a key as seen by a thread.
    struct Pair
    {
      ThreadId thread = 0;
      ProtectionKey pkey;
      PermPair pair;
      friend bool operator==(const Pair&, const Pair&) = default;
    };

    struct SharedKey
    {
      bool shared = false;
      friend bool operator==(const SharedKey&, const SharedKey&) = default;
    };
    struct Refills
    {
      std::uint64_t count = 0;
      friend bool operator==(const Refills&, const Refills&) = default;
    };

    struct KeyState
    {
      ProtectionKey pkey;
      std::optional<bool> allocated;
      std::optional<bool> dirty;
      std::optional<std::uint32_t> pages;
      friend bool operator==(const KeyState&, const KeyState&) = default;
    };

    struct NoFaults { friend bool operator==(const NoFaults&, const NoFaults&) = default; };
  }

  struct Expectation
  {
    std::variant<expect::Fault, expect::EventResult, expect::Pair, expect::SharedKey,
                 expect::Refills, expect::KeyState, expect::NoFaults> what;
    /// Only checked when the run's lazy_dealloc setting matches.
    std::optional<bool> whenLazy;
    friend bool operator==(const Expectation&, const Expectation&) = default;
  };


  struct Scenario
  {
    SimConfig config;
    std::vector<ThreadTrace> threads;
    std::vector<Expectation> expectations;
    friend bool operator==(const Scenario&, const Scenario&) = default;
  };

}
