#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mmu.hpp"
#include "pkr.hpp"
#include "types.hpp"

namespace sealpk
{

  /// Fault record augmented with the pkey, as delivered to the faulting
  /// thread.
  struct FaultReport
  {
    ThreadIndex thread = 0;
    Vpn page = 0;
    AccessKind kind = AccessKind::Load;
    std::optional<ProtectionKey> pkey;   // absent for unmapped pages
    FaultCause cause = FaultCause::InvalidPage;
    InstrAddr ia = 0;

    friend bool operator==(const FaultReport&, const FaultReport&) = default;
  };


  /// Live PKR of the running thread plus the saved images of all others.
  class ThreadContexts
  {
  public:
    ThreadIndex add()
    {
      saved_.emplace_back();
      return saved_.size() - 1;
    }

    std::size_t count() const { return saved_.size(); }
    ThreadIndex current() const { return current_; }

    PkrStore& pkr(ThreadIndex t)
    { return t == current_ ? live_ : saved_.at(t); }

    const PkrStore& pkr(ThreadIndex t) const
    { return t == current_ ? live_ : saved_.at(t); }

    /// The hardware PKR (belongs to the current thread).
    PkrStore& live() { return live_; }

    void switchTo(ThreadIndex to)
    {
      if (to >= saved_.size())
        throw std::out_of_range("no such thread");
      if (to == current_)
        return;
      saved_.at(current_) = live_;
      live_ = saved_[to];
      current_ = to;
    }

  private:
    PkrStore live_;
    std::vector<PkrStore> saved_;
    ThreadIndex current_ = 0;
  };


  struct KernelConfig
  {
    bool lazyDealloc = true;
  };


  /// Simulated OS: pkey lifecycle with lazy de-allocation, domain and page
  /// sealing, page mapping and the per-thread PKR images.
  class Kernel
  {
  public:
    using AllocResult = std::variant<ProtectionKey, Errc>;

    explicit Kernel(KernelConfig config = {})
      : config_(config)
    {
      alloc_.set(0);
    }

    ThreadIndex addThread() { return threads_.add(); }

    // ---- page mapping ----

    Errc mmap(PageRange pages, Prot prot)
    {
      if (auto e = checkRange(pages); e != Errc::Ok)
        return e;
      for (Vpn v = pages.start; v < pages.end(); ++v)
        if (mmu_.isMapped(v))
          return Errc::AlreadyMapped;
      for (Vpn v = pages.start; v < pages.end(); ++v)
        {
          mmu_.setPte(v, PteEntry::make(prot));
          generation_[v] = 0;
        }
      return Errc::Ok;
    }

    Errc munmap(PageRange pages)
    {
      if (auto e = checkMapped(pages); e != Errc::Ok)
        return e;
      for (Vpn v = pages.start; v < pages.end(); ++v)
        {
          const ProtectionKey key = mmu_.walk(v).pkey;
          mmu_.removePte(v);
          generation_.erase(v);
          if (not key.isDefault())
            pageUnmappedHook(key);
        }
      return Errc::Ok;
    }

    // ---- pkey lifecycle ----

    /// Lowest non-allocated, non-dirty key >= 1. The caller gets initPerm,
    /// every other thread gets deny-all for the new key.
    AllocResult pkeyAlloc(ThreadIndex caller, PermPair initPerm)
    {
      for (unsigned k = 1; k < kNumPkeys; ++k)
        {
          if (alloc_.test(k))
            continue;
          alloc_.set(k);
          ++allocGeneration_[k];
          const ProtectionKey key{k};
          for (ThreadIndex t = 0; t < threads_.count(); ++t)
            threads_.pkr(t).setPair(key, t == caller ? initPerm : PermPair::denyAll());
          return key;
        }
      return Errc::NoFreeKey;
    }

    Errc pkeyFree(ProtectionKey key)
    {
      const unsigned k = key.value();
      if (key.isDefault() or not alloc_.test(k) or dirty_.test(k))
        return Errc::InvalidKey;

      if (counter_[k] == 0)
        {
          release(k);
          return Errc::Ok;
        }

      if (not config_.lazyDealloc)
        {
          // Intel-MPK style: the key is handed back while pages still
          // carry it.
          if (sealedDomain_.test(k) or sealedPage_.test(k))
            return Errc::Eperm;
          alloc_.reset(k);
          return Errc::Ok;
        }

      dirty_.set(k);
      for (ThreadIndex t = 0; t < threads_.count(); ++t)
        threads_.pkr(t).setPair(key, PermPair::allowAll());
      return Errc::Ok;
    }

    /// Bookkeeping when a page leaves the domain of key (unmapped or
    /// re-keyed). A dirty key becomes allocatable once its count drains.
    void pageUnmappedHook(ProtectionKey key)
    {
      const unsigned k = key.value();
      if (key.isDefault())
        return;
      if (counter_[k] == 0)
        throw std::logic_error("page counter underflow for pkey " + std::to_string(k));
      if (--counter_[k] == 0 and dirty_.test(k))
        release(k);
    }

    Errc pkeyMprotect(PageRange pages, Prot prot, ProtectionKey key)
    {
      if (auto e = checkMapped(pages); e != Errc::Ok)
        return e;
      const unsigned k = key.value();
      if (not alloc_.test(k) or dirty_.test(k))
        return Errc::InvalidKey;
      for (Vpn v = pages.start; v < pages.end(); ++v)
        {
          const ProtectionKey current = mmu_.walk(v).pkey;
          if (sealedDomain_.test(current.value()))
            return Errc::Eperm;
          if (sealedPage_.test(k) and current != key)
            return Errc::Eperm;
        }

      for (Vpn v = pages.start; v < pages.end(); ++v)
        {
          const ProtectionKey old = mmu_.walk(v).pkey;
          mmu_.setPte(v, PteEntry::make(prot, key));
          if (old == key)
            continue;
          if (not key.isDefault())
            ++counter_[k];
          generation_[v] = allocGeneration_[k];
          pageUnmappedHook(old);
        }
      return Errc::Ok;
    }

    /// Plain mprotect: rewrites R/W/X and keeps each page's pkey.
    Errc mprotect(PageRange pages, Prot prot)
    {
      if (auto e = checkMapped(pages); e != Errc::Ok)
        return e;
      for (Vpn v = pages.start; v < pages.end(); ++v)
        if (sealedDomain_.test(mmu_.walk(v).pkey.value()))
          return Errc::Eperm;
      for (Vpn v = pages.start; v < pages.end(); ++v)
        mmu_.setPte(v, PteEntry::make(prot, mmu_.walk(v).pkey));
      return Errc::Ok;
    }

    /// OR the requested seal bits in. There is no way to unseal.
    Errc pkeySeal(ProtectionKey key, bool sealDomain, bool sealPage)
    {
      const unsigned k = key.value();
      if (key.isDefault() or not alloc_.test(k) or dirty_.test(k))
        return Errc::InvalidKey;
      if (sealDomain)
        sealedDomain_.set(k);
      if (sealPage)
        sealedPage_.set(k);
      return Errc::Ok;
    }

    FaultReport handleFault(const Fault& fault, InstrAddr ia) const
    {
      FaultReport r{fault.thread, fault.page, fault.kind, fault.pkey, fault.cause, ia};
      if (fault.cause == FaultCause::InvalidPage)
        r.pkey.reset();
      return r;
    }

    void contextSwitch(ThreadIndex to) { threads_.switchTo(to); }

    // ---- state inspection ----

    bool allocated(ProtectionKey k) const     { return alloc_.test(k.value()); }
    bool dirty(ProtectionKey k) const         { return dirty_.test(k.value()); }
    std::uint32_t pageCount(ProtectionKey k) const { return counter_[k.value()]; }
    bool sealedDomain(ProtectionKey k) const  { return sealedDomain_.test(k.value()); }
    bool sealedPage(ProtectionKey k) const    { return sealedPage_.test(k.value()); }

    /// Mapped pages still tagged with a key that has since been handed out
    /// again to a new domain (the pkey use-after-free condition).
    std::vector<Vpn> staleKeyPages() const
    {
      std::vector<Vpn> stale;
      for (const auto& [vpn, pte] : mmu_.pageTable())
        {
          const unsigned k = pte.pkey.value();
          if (k != 0 and generation_.at(vpn) < allocGeneration_[k])
            stale.push_back(vpn);
        }
      return stale;
    }

    const KernelConfig& config() const { return config_; }
    Mmu& mmu() { return mmu_; }
    const Mmu& mmu() const { return mmu_; }
    ThreadContexts& threads() { return threads_; }
    const ThreadContexts& threads() const { return threads_; }

  private:
    static Errc checkRange(PageRange pages)
    {
      if (pages.count == 0 or pages.start >= kVpnLimit or pages.count > kVpnLimit - pages.start)
        return Errc::InvalidArgument;
      return Errc::Ok;
    }

    Errc checkMapped(PageRange pages) const
    {
      if (auto e = checkRange(pages); e != Errc::Ok)
        return e;
      for (Vpn v = pages.start; v < pages.end(); ++v)
        if (not mmu_.isMapped(v))
          return Errc::UnmappedPage;
      return Errc::Ok;
    }

    void release(unsigned k)
    {
      alloc_.reset(k);
      dirty_.reset(k);
      sealedDomain_.reset(k);
      sealedPage_.reset(k);
    }

    KernelConfig config_;
    Mmu mmu_;
    ThreadContexts threads_;

    std::bitset<kNumPkeys> alloc_;
    std::bitset<kNumPkeys> dirty_;
    std::array<std::uint32_t, kNumPkeys> counter_{};
    std::bitset<kNumPkeys> sealedDomain_;
    std::bitset<kNumPkeys> sealedPage_;

    // Allocation generation per key and the generation each page joined
    // its domain in; used only to detect stale key sharing.
    std::array<std::uint32_t, kNumPkeys> allocGeneration_{};
    std::map<Vpn, std::uint32_t> generation_;
  };

}
