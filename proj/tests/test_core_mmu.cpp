#include <random>
#include <set>

#include <gtest/gtest.h>

#include <sealpk/mmu.hpp>
#include <sealpk/pkr.hpp>

using namespace sealpk;

namespace
{
  // Rights as sets of letters; the pair removes letters, never adds.
  std::set<char> pteRights(bool r, bool w)
  {
    std::set<char> s;
    if (r)
      s.insert('r');
    if (w)
      s.insert('w');
    return s;
  }

  std::set<char> removedByPair(bool rd, bool wd)
  {
    std::set<char> s;
    if (rd)
      s.insert('r');
    if (wd)
      s.insert('w');
    return s;
  }
}


TEST(ProtectionKey, RowAndColumn)
{
  // 0b111100001: upper five bits pick row 15, lower five column 1
  const ProtectionKey k{0b111100001};
  EXPECT_EQ(k.row(), 15u);
  EXPECT_EQ(k.column(), 1u);
  EXPECT_EQ(ProtectionKey{1023}.row(), 31u);
  EXPECT_EQ(ProtectionKey{1023}.column(), 31u);
  EXPECT_THROW(ProtectionKey{1024}, std::out_of_range);
  EXPECT_TRUE(ProtectionKey{}.isDefault());
}

TEST(Pkr, PackTouchesOnlyItsColumn)
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial)
    {
      const std::uint64_t word = rng();
      for (unsigned col = 0; col < kKeysPerRow; ++col)
        for (int bits = 0; bits < 4; ++bits)
          {
            const PermPair p{(bits & 1) != 0, (bits & 2) != 0};
            const std::uint64_t out = packPerm(p, col, word);
            EXPECT_EQ(unpackPerm(out, col), p);
            const std::uint64_t mask = std::uint64_t{3} << (2 * col);
            EXPECT_EQ(out & ~mask, word & ~mask);
            // RD in the even bit, WD in the odd bit
            EXPECT_EQ((out >> (2 * col)) & 1, std::uint64_t{p.readDisable});
            EXPECT_EQ((out >> (2 * col + 1)) & 1, std::uint64_t{p.writeDisable});
          }
    }
}

TEST(Pkr, RowsAreIndependent)
{
  PkrStore pkr;
  pkr.setPair(ProtectionKey{33}, PermPair::denyAll());
  EXPECT_EQ(pkr.rdpkr(ProtectionKey{32}), 0b1100u);
  EXPECT_EQ(pkr.rdpkr(ProtectionKey{1}), 0u);
  pkr.wrpkr(ProtectionKey{40}, ~std::uint64_t{0});
  EXPECT_EQ(pkr.pair(ProtectionKey{63}), PermPair::denyAll());
  EXPECT_EQ(pkr.pair(ProtectionKey{64}), PermPair::allowAll());
}


// All 8 PTE R/W/X x 4 pairs x 2 access kinds against the set oracle.
TEST(CheckAccess, TruthTableMatchesIntersection)
{
  int cases = 0;
  for (int rwx = 0; rwx < 8; ++rwx)
    for (int pb = 0; pb < 4; ++pb)
      for (AccessKind kind : {AccessKind::Load, AccessKind::Store})
        {
          const bool r = rwx & 1, w = rwx & 2, x = rwx & 4;
          const PermPair pair{(pb & 1) != 0, (pb & 2) != 0};
          const ProtectionKey key{5};
          PkrStore pkr;
          pkr.setPair(key, pair);
          const PteEntry pte = PteEntry::make(Prot{r, w, x}, key);

          std::set<char> eff = pteRights(r, w);
          for (char c : removedByPair(pair.readDisable, pair.writeDisable))
            eff.erase(c);
          const char need = kind == AccessKind::Load ? 'r' : 'w';
          const bool allowed = eff.contains(need);

          const auto fault = checkAccess(AccessRequest{9, kind, 0}, pte, pkr);
          ASSERT_EQ(not fault.has_value(), allowed) << rwx << " " << pb;
          if (fault)
            {
              const FaultCause want = pteRights(r, w).contains(need) ? FaultCause::PkeyDenied
                                                                     : FaultCause::PteDenied;
              EXPECT_EQ(fault->cause, want);
              EXPECT_EQ(fault->pkey, key);
              EXPECT_EQ(fault->page, 9u);
            }
          const auto e = effectivePermission(pte, pair);
          EXPECT_EQ(e.readOk, eff.contains('r'));
          EXPECT_EQ(e.writeOk, eff.contains('w'));
          ++cases;
        }
  EXPECT_EQ(cases, 64);
}

TEST(CheckAccess, InvalidPageHasNoKey)
{
  PkrStore pkr;
  const auto f = checkAccess(AccessRequest{3, AccessKind::Load, 0}, PteEntry{}, pkr);
  ASSERT_TRUE(f);
  EXPECT_EQ(f->cause, FaultCause::InvalidPage);
  EXPECT_TRUE(f->pkey.isDefault());
}

TEST(CheckAccess, WriteOnlyPage)
{
  PkrStore pkr;
  const ProtectionKey k{2};
  pkr.setPair(k, PermPair::writeOnly());
  const PteEntry pte = PteEntry::make(Prot{true, true, false}, k);
  EXPECT_FALSE(checkAccess(AccessRequest{1, AccessKind::Store, 0}, pte, pkr));
  EXPECT_TRUE(checkAccess(AccessRequest{1, AccessKind::Load, 0}, pte, pkr));
}


TEST(Dtlb, FifoEviction)
{
  Dtlb tlb(4);
  for (Vpn v = 0; v < 5; ++v)
    tlb.insert(v, PteEntry::make(Prot{true, false, false}));
  EXPECT_FALSE(tlb.probe(0));
  for (Vpn v = 1; v < 5; ++v)
    EXPECT_TRUE(tlb.probe(v));
  // a hit does not refresh the position
  tlb.insert(9, PteEntry{});
  EXPECT_FALSE(tlb.probe(1));
}

// The DTLB never changes the answer: lookups equal page-table walks
// under arbitrary interleavings of PTE rewrites.
TEST(Mmu, DtlbTransparent)
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial)
    {
      Mmu mmu(1 + rng() % 8);
      for (int step = 0; step < 400; ++step)
        {
          const Vpn v = rng() % 20;
          switch (rng() % 4)
            {
            case 0:
              mmu.setPte(v, PteEntry::make(Prot{bool(rng() & 1), bool(rng() & 2), false},
                                           ProtectionKey{unsigned(rng() % 1024)}));
              break;
            case 1:
              mmu.removePte(v);
              break;
            default:
              ASSERT_EQ(mmu.dtlbLookup(v), mmu.walk(v));
            }
        }
      EXPECT_LE(mmu.dtlb().size(), mmu.dtlb().capacity());
    }
}

TEST(Mmu, HitAfterMissAndInvalidateOnRewrite)
{
  Mmu mmu;
  mmu.setPte(4, PteEntry::make(Prot{true, true, false}, ProtectionKey{3}));
  mmu.dtlbLookup(4);
  mmu.dtlbLookup(4);
  EXPECT_EQ(mmu.misses(), 1u);
  EXPECT_EQ(mmu.hits(), 1u);
  mmu.setPte(4, PteEntry::make(Prot{true, false, false}, ProtectionKey{7}));
  EXPECT_FALSE(mmu.dtlb().probe(4));
  EXPECT_EQ(mmu.dtlbLookup(4).pkey, ProtectionKey{7});
  // unmapped pages are not cached
  mmu.dtlbLookup(99);
  EXPECT_FALSE(mmu.dtlb().probe(99));
}
