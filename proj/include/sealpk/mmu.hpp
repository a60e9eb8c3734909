#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>

#include "pkr.hpp"
#include "types.hpp"

namespace sealpk
{

  /// Leaf page table entry. Only the fields the permission check needs are
  /// modeled; the pkey lives in the otherwise reserved upper PTE bits.
  struct PteEntry
  {
    bool valid = false;
    bool readable = false;
    bool writable = false;
    bool executable = false;
    ProtectionKey pkey;

    static PteEntry make(Prot prot, ProtectionKey key = ProtectionKey{})
    { return PteEntry{true, prot.read, prot.write, prot.exec, key}; }

    Prot prot() const { return Prot{readable, writable, executable}; }

    friend bool operator==(const PteEntry&, const PteEntry&) = default;
  };


  struct EffectivePermission
  {
    bool readOk = false;
    bool writeOk = false;

    friend constexpr bool operator==(EffectivePermission, EffectivePermission) = default;
  };

  /// Intersection of the PTE rights with the pkey pair. The pair can only
  /// take rights away.
  constexpr EffectivePermission effectivePermission(const PteEntry& pte, PermPair pair)
  {
    return EffectivePermission{pte.readable and not pair.readDisable,
                               pte.writable and not pair.writeDisable};
  }


  struct AccessRequest
  {
    Vpn page = 0;
    AccessKind kind = AccessKind::Load;
    ThreadIndex thread = 0;
  };

  /// Permission check for one data access against an already translated
  /// entry. Never mutates state.
  inline std::optional<Fault> checkAccess(const AccessRequest& req, const PteEntry& pte,
                                          const PkrStore& pkr)
  {
    Fault fault{req.page, req.kind, pte.pkey, FaultCause::InvalidPage, req.thread};
    if (not pte.valid)
      {
        fault.pkey = ProtectionKey{};
        return fault;
      }

    const bool isLoad = req.kind == AccessKind::Load;
    const bool pteOk = isLoad ? pte.readable : pte.writable;
    if (not pteOk)
      {
        fault.cause = FaultCause::PteDenied;
        return fault;
      }

    const auto eff = effectivePermission(pte, pkr.pair(pte.pkey));
    if (isLoad ? eff.readOk : eff.writeOk)
      return std::nullopt;

    fault.cause = FaultCause::PkeyDenied;
    return fault;
  }


  using PageTable = std::map<Vpn, PteEntry>;


  /// Fully associative DTLB with FIFO replacement. It caches whole leaf
  /// entries including the pkey field.
  class Dtlb
  {
  public:
    static constexpr std::size_t kDefaultEntries = 32;

    explicit Dtlb(std::size_t capacity = kDefaultEntries)
      : capacity_(capacity)
    { }

    /// Return the cached entry for page or nullopt on miss.
    std::optional<PteEntry> probe(Vpn page) const
    {
      auto it = std::find_if(lines_.begin(), lines_.end(),
                             [page](const Line& l) { return l.page == page; });
      if (it == lines_.end())
        return std::nullopt;
      return it->pte;
    }

    void insert(Vpn page, const PteEntry& pte)
    {
      invalidate(page);
      if (lines_.size() == capacity_)
        lines_.pop_front();
      lines_.push_back(Line{page, pte});
    }

    void invalidate(Vpn page)
    {
      std::erase_if(lines_, [page](const Line& l) { return l.page == page; });
    }

    void flush() { lines_.clear(); }

    std::size_t size() const     { return lines_.size(); }
    std::size_t capacity() const { return capacity_; }

  private:
    struct Line
    {
      Vpn page;
      PteEntry pte;
    };

    std::size_t capacity_;
    std::deque<Line> lines_;
  };


  /// Page table plus DTLB. Every PTE rewrite goes through here so the
  /// affected DTLB line is invalidated synchronously.
  class Mmu
  {
  public:
    explicit Mmu(std::size_t dtlbEntries = Dtlb::kDefaultEntries)
      : dtlb_(dtlbEntries)
    { }

    /// Translate through the DTLB, refilling from the page table on a miss.
    /// Unmapped pages return an invalid entry and are not cached.
    PteEntry dtlbLookup(Vpn page)
    {
      if (auto hit = dtlb_.probe(page))
        {
          ++hits_;
          return *hit;
        }
      ++misses_;
      auto it = table_.find(page);
      if (it == table_.end())
        return PteEntry{};
      dtlb_.insert(page, it->second);
      return it->second;
    }

    std::optional<Fault> checkAccess(const AccessRequest& req, const PkrStore& pkr)
    { return sealpk::checkAccess(req, dtlbLookup(req.page), pkr); }

    /// Direct page-table read, bypassing the DTLB.
    PteEntry walk(Vpn page) const
    {
      auto it = table_.find(page);
      return it == table_.end() ? PteEntry{} : it->second;
    }

    bool isMapped(Vpn page) const { return table_.contains(page); }

    void setPte(Vpn page, const PteEntry& pte)
    {
      table_[page] = pte;
      dtlb_.invalidate(page);
    }

    void removePte(Vpn page)
    {
      table_.erase(page);
      dtlb_.invalidate(page);
    }

    const PageTable& pageTable() const { return table_; }
    const Dtlb& dtlb() const { return dtlb_; }

    std::uint64_t hits() const   { return hits_; }
    std::uint64_t misses() const { return misses_; }

  private:
    PageTable table_;
    Dtlb dtlb_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
  };

}
