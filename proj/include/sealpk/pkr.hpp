#pragma once

#include <array>
#include <cassert>
#include <cstdint>

#include "types.hpp"

namespace sealpk
{

  /// Store a permission pair into column `column` of a PKR row word.
  /// Column c occupies bit 2c (read disable) and bit 2c+1 (write disable).
  constexpr std::uint64_t packPerm(PermPair pair, unsigned column, std::uint64_t rowWord)
  {
    assert(column < kKeysPerRow);
    const unsigned rdBit = 2 * column;
    const std::uint64_t mask = std::uint64_t{3} << rdBit;
    const std::uint64_t bits = (std::uint64_t{pair.readDisable} << rdBit) |
                               (std::uint64_t{pair.writeDisable} << (rdBit + 1));
    return (rowWord & ~mask) | bits;
  }

  constexpr PermPair unpackPerm(std::uint64_t rowWord, unsigned column)
  {
    assert(column < kKeysPerRow);
    const unsigned rdBit = 2 * column;
    return PermPair{((rowWord >> rdBit) & 1) != 0, ((rowWord >> (rdBit + 1)) & 1) != 0};
  }


  /// The 1024-entry permission store: 32 rows of 32 packed pairs.
  class PkrStore
  {
  public:
    using Rows = std::array<std::uint64_t, kPkrRows>;

    /// RDPKR: the whole row selected by the upper 5 bits of the key.
    std::uint64_t rdpkr(ProtectionKey pkey) const
    { return rows_[pkey.row()]; }

    /// WRPKR: overwrite the row selected by the key. Seal gating is the
    /// caller's job.
    void wrpkr(ProtectionKey pkey, std::uint64_t newRow)
    { rows_[pkey.row()] = newRow; }

    PermPair pair(ProtectionKey pkey) const
    { return unpackPerm(rows_[pkey.row()], pkey.column()); }

    void setPair(ProtectionKey pkey, PermPair p)
    {
      auto& row = rows_[pkey.row()];
      row = packPerm(p, pkey.column(), row);
    }

    const Rows& rows() const { return rows_; }

    friend bool operator==(const PkrStore&, const PkrStore&) = default;

  private:
    Rows rows_{};
  };

}
