#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <sealpk.hpp>

namespace sealpk::fuzz
{

  /// Small-universe random scenarios: few pages, few keys, short address
  /// ranges, so that seals, faults and key reuse actually happen.
  struct RandomScenario
  {
    std::mt19937_64 rng;

    explicit RandomScenario(std::uint64_t seed) : rng(seed) { }

    std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

    ProtectionKey key() { return ProtectionKey{static_cast<unsigned>(below(8))}; }
    KeyRef keyRef() { return coin(0.3) ? KeyRef::lastAlloc() : KeyRef{key()}; }
    PermPair pair() { return PermPair{coin(), coin()}; }
    Prot prot() { return Prot{coin(0.8), coin(0.7), coin(0.1)}; }
    PageRange pages() { return PageRange{below(12), 1 + below(3)}; }
    InstrAddr ia() { return 0x1000 + 4 * below(64); }

    Op op()
    {
      switch (below(16))
        {
        case 0: case 1: return op::Load{below(16), coin() ? std::optional<std::uint64_t>(below(4)) : std::nullopt};
        case 2: case 3:
          return op::Store{below(16), coin() ? std::optional(op::StoreValue{below(4), rng()}) : std::nullopt};
        case 4:
          if (coin())
            return op::Wrpkr{key(), rng()};
          return op::Wrpkr{key(), pair()};
        case 5: return op::Rdpkr{key()};
        case 6: return op::SealStart{key(), ia()};
        case 7: return op::SealEnd{key(), ia()};
        case 8: return op::Mmap{pages(), prot()};
        case 9: return op::Munmap{pages()};
        case 10: return op::Yield{};
        case 11: return op::Call{below(8), ia()};
        case 12: return coin() ? Op{op::Return{ia()}} : Op{op::SmashStack{below(3), ia()}};
        default: return Syscall{syscall()};
        }
    }

    Syscall syscall()
    {
      switch (below(8))
        {
        case 0: case 1: return sys::PkeyAlloc{pair()};
        case 2: return sys::PkeyFree{keyRef()};
        case 3: case 4: return sys::PkeyMprotect{pages(), prot(), keyRef()};
        case 5: return sys::Mprotect{pages(), prot()};
        case 6: return sys::PkeySeal{keyRef(), coin(), coin()};
        default: return sys::PkeyPermSeal{keyRef()};
        }
    }

    Scenario scenario(std::size_t maxEvents = 40)
    {
      Scenario s;
      s.config.lazyDealloc = coin();
      s.config.continueOnFault = coin(0.7);
      s.config.camCapacity = 1 + below(4);
      const std::size_t threads = 1 + below(3);
      for (std::size_t t = 0; t < threads; ++t)
        {
          ThreadTrace tr;
          tr.id = static_cast<ThreadId>(t * 3 + below(3));
          const std::size_t n = below(maxEvents + 1);
          for (std::size_t i = 0; i < n; ++i)
            tr.events.push_back(TraceEvent{ia(), op(), coin(0.1)});
          s.threads.push_back(std::move(tr));
        }
      return s;
    }
  };

}
