#pragma once

#include <bitset>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "pkr.hpp"
#include "types.hpp"

namespace sealpk
{

  /// Inclusive instruction-address interval in which WRPKR may change a
  /// sealed key.
  struct PermissibleRange
  {
    InstrAddr start = 0;
    InstrAddr end = 0;

    constexpr bool contains(InstrAddr a) const { return a >= start and a <= end; }

    friend constexpr bool operator==(PermissibleRange, PermissibleRange) = default;
  };


  /// PK-CAM: small FIFO cache of committed ranges consulted by the WRPKR
  /// gate. A miss is refilled by the kernel handler.
  class PkCam
  {
  public:
    static constexpr std::size_t kDefaultCapacity = 4;

    explicit PkCam(std::size_t capacity = kDefaultCapacity)
      : capacity_(capacity)
    {
      if (capacity_ == 0)
        throw std::invalid_argument("PK-CAM capacity must be positive");
    }

    std::optional<PermissibleRange> find(ProtectionKey pkey) const
    {
      for (const auto& e : entries_)
        if (e.pkey == pkey)
          return e.range;
      return std::nullopt;
    }

    void insert(ProtectionKey pkey, PermissibleRange range)
    {
      std::erase_if(entries_, [pkey](const Entry& e) { return e.pkey == pkey; });
      if (entries_.size() == capacity_)
        entries_.pop_front();
      entries_.push_back(Entry{pkey, range});
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t refillCount() const { return refills_; }

  private:
    friend class SealUnit;

    struct Entry
    {
      ProtectionKey pkey;
      PermissibleRange range;
    };

    std::size_t capacity_;
    std::deque<Entry> entries_;
    std::uint64_t refills_ = 0;
  };


  struct GateResult
  {
    bool allowed = true;
    ProtectionKey offendingKey;     // meaningful when not allowed
    std::vector<ProtectionKey> refilled;  // CAM misses serviced during this check
  };


  /// SealReg plus PK-CAM. Per process; shared by all simulated threads.
  class SealUnit
  {
  public:
    explicit SealUnit(std::size_t camCapacity = PkCam::kDefaultCapacity)
      : cam_(camCapacity)
    { }

    /// Stage the start of a permissible range. Pre-commit staging is
    /// last-writer-wins.
    Errc sealStart(ProtectionKey pkey, InstrAddr addr)
    {
      if (sealed_.test(pkey.value()))
        return Errc::SealViolation;
      pending_[pkey.value()].start = addr;
      return Errc::Ok;
    }

    Errc sealEnd(ProtectionKey pkey, InstrAddr addr)
    {
      if (sealed_.test(pkey.value()))
        return Errc::SealViolation;
      pending_[pkey.value()].end = addr;
      return Errc::Ok;
    }

    /// pkey_perm_seal: blow the fuse for pkey with its staged range and
    /// pre-load the range into the CAM.
    Errc commitPermSeal(ProtectionKey pkey)
    {
      const unsigned k = pkey.value();
      if (sealed_.test(k))
        return Errc::SealViolation;
      auto it = pending_.find(k);
      if (it == pending_.end() or not it->second.start or not it->second.end
          or *it->second.start > *it->second.end)
        return Errc::InvalidArgument;

      const PermissibleRange range{*it->second.start, *it->second.end};
      pending_.erase(it);
      sealed_.set(k);
      ranges_.emplace(k, range);
      cam_.insert(pkey, range);
      return Errc::Ok;
    }

    /// CAM lookup for a sealed key; a miss refills from SealReg.
    /// Returns true on hit.
    bool camLookup(ProtectionKey pkey)
    {
      if (cam_.find(pkey))
        return true;
      ++cam_.refills_;
      cam_.insert(pkey, ranges_.at(pkey.value()));
      return false;
    }

    /// Decide whether a WRPKR at instrAddr replacing oldRow with newRow in
    /// the row addressed by pkey may proceed. Every sealed key in the row
    /// whose pair actually changes must have instrAddr in its range.
    GateResult gateWrpkr(ProtectionKey pkey, InstrAddr instrAddr, std::uint64_t oldRow,
                         std::uint64_t newRow)
    {
      GateResult result;
      const unsigned base = pkey.row() * kKeysPerRow;
      for (unsigned col = 0; col < kKeysPerRow; ++col)
        {
          const unsigned k = base + col;
          if (not sealed_.test(k) or unpackPerm(oldRow, col) == unpackPerm(newRow, col))
            continue;
          const ProtectionKey key{k};
          if (not camLookup(key))
            result.refilled.push_back(key);
          // The decision comes from the (now cached) committed range; a
          // miss only costs a refill.
          if (not cam_.find(key)->contains(instrAddr))
            {
              result.allowed = false;
              result.offendingKey = key;
              return result;
            }
        }
      return result;
    }

    bool isSealed(ProtectionKey pkey) const { return sealed_.test(pkey.value()); }

    std::optional<PermissibleRange> range(ProtectionKey pkey) const
    {
      auto it = ranges_.find(pkey.value());
      if (it == ranges_.end())
        return std::nullopt;
      return it->second;
    }

    struct Pending
    {
      std::optional<InstrAddr> start;
      std::optional<InstrAddr> end;
    };

    std::optional<Pending> pending(ProtectionKey pkey) const
    {
      auto it = pending_.find(pkey.value());
      if (it == pending_.end())
        return std::nullopt;
      return it->second;
    }

    const std::bitset<kNumPkeys>& sealedKeys() const { return sealed_; }
    const PkCam& cam() const { return cam_; }

  private:
    std::bitset<kNumPkeys> sealed_;
    std::map<unsigned, PermissibleRange> ranges_;
    std::map<unsigned, Pending> pending_;
    PkCam cam_;
  };

}
