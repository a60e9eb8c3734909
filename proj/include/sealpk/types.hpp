#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sealpk
{

  /// Virtual page number. One simulated page is one VPN unit.
  using Vpn = std::uint64_t;

  /// Instruction address attributed to a trace event.
  using InstrAddr = std::uint64_t;

  /// Kernel-internal thread index (position in the scenario's thread list).
  using ThreadIndex = std::size_t;

  inline constexpr unsigned kPkeyBits = 10;
  inline constexpr unsigned kNumPkeys = 1u << kPkeyBits;
  inline constexpr unsigned kPkrRows = 32;
  inline constexpr unsigned kKeysPerRow = 32;
  inline constexpr Vpn kVpnLimit = Vpn{1} << 27;


  /// 10-bit protection key. Key 0 is the default domain of every page.
  class ProtectionKey
  {
  public:
    constexpr ProtectionKey() = default;

    constexpr explicit ProtectionKey(unsigned value)
      : value_(static_cast<std::uint16_t>(value))
    {
      if (value >= kNumPkeys)
        throw std::out_of_range("protection key out of range: " + std::to_string(value));
    }

    constexpr unsigned value() const  { return value_; }

    /// PKR row holding this key (upper 5 bits).
    constexpr unsigned row() const    { return value_ >> 5; }

    /// Position of this key inside its row (lower 5 bits).
    constexpr unsigned column() const { return value_ & 31u; }

    constexpr bool isDefault() const  { return value_ == 0; }

    friend constexpr auto operator<=>(ProtectionKey, ProtectionKey) = default;

  private:
    std::uint16_t value_ = 0;
  };


  /// Pkey-level permission: the two bits stored per key in PKR.
  struct PermPair
  {
    bool readDisable = false;
    bool writeDisable = false;

    static constexpr PermPair allowAll()  { return {false, false}; }
    static constexpr PermPair denyAll()   { return {true, true}; }
    static constexpr PermPair readOnly()  { return {false, true}; }
    static constexpr PermPair writeOnly() { return {true, false}; }

    friend constexpr bool operator==(PermPair, PermPair) = default;
  };


  /// R/W/X page protection as passed to mmap/mprotect.
  struct Prot
  {
    bool read = false;
    bool write = false;
    bool exec = false;

    friend constexpr bool operator==(Prot, Prot) = default;
  };

  /// Parse "rwx"-style strings ("", "-", "r", "rw", "rx", ...).
  inline std::optional<Prot> parseProt(std::string_view text)
  {
    Prot p;
    if (text == "-")
      return p;
    for (char c : text)
      {
        bool* bit = nullptr;
        switch (c)
          {
          case 'r': bit = &p.read; break;
          case 'w': bit = &p.write; break;
          case 'x': bit = &p.exec; break;
          default: return std::nullopt;
          }
        if (*bit)
          return std::nullopt;
        *bit = true;
      }
    return p;
  }

  inline std::string toString(Prot p)
  {
    std::string s;
    if (p.read)  s += 'r';
    if (p.write) s += 'w';
    if (p.exec)  s += 'x';
    return s.empty() ? "-" : s;
  }


  /// Contiguous run of virtual pages [start, start + count).
  struct PageRange
  {
    Vpn start = 0;
    std::uint64_t count = 0;

    constexpr Vpn end() const { return start + count; }
    constexpr bool contains(Vpn v) const { return v >= start and v < end(); }

    friend constexpr bool operator==(PageRange, PageRange) = default;
  };


  enum class AccessKind { Load, Store };

  constexpr std::string_view toString(AccessKind k)
  { return k == AccessKind::Load ? "Load" : "Store"; }


  enum class FaultCause { PteDenied, PkeyDenied, InvalidPage, SealViolation };

  constexpr std::string_view toString(FaultCause c)
  {
    switch (c)
      {
      case FaultCause::PteDenied:     return "PteDenied";
      case FaultCause::PkeyDenied:    return "PkeyDenied";
      case FaultCause::InvalidPage:   return "InvalidPage";
      case FaultCause::SealViolation: return "SealViolation";
      }
    return "?";
  }

  inline std::optional<FaultCause> parseFaultCause(std::string_view s)
  {
    for (auto c : {FaultCause::PteDenied, FaultCause::PkeyDenied, FaultCause::InvalidPage,
                   FaultCause::SealViolation})
      if (toString(c) == s)
        return c;
    return std::nullopt;
  }


  /// Result code of simulated syscalls and seal instructions.
  enum class Errc
  {
    Ok,
    NoFreeKey,
    InvalidKey,
    Eperm,
    UnmappedPage,
    AlreadyMapped,
    InvalidArgument,
    SealViolation,
  };

  constexpr std::string_view toString(Errc e)
  {
    switch (e)
      {
      case Errc::Ok:              return "OK";
      case Errc::NoFreeKey:       return "NoFreeKey";
      case Errc::InvalidKey:      return "InvalidKey";
      case Errc::Eperm:           return "EPERM";
      case Errc::UnmappedPage:    return "UnmappedPage";
      case Errc::AlreadyMapped:   return "AlreadyMapped";
      case Errc::InvalidArgument: return "EINVAL";
      case Errc::SealViolation:   return "SealViolation";
      }
    return "?";
  }

  inline std::optional<Errc> parseErrc(std::string_view s)
  {
    for (auto e : {Errc::Ok, Errc::NoFreeKey, Errc::InvalidKey, Errc::Eperm, Errc::UnmappedPage,
                   Errc::AlreadyMapped, Errc::InvalidArgument, Errc::SealViolation})
      if (toString(e) == s)
        return e;
    return std::nullopt;
  }


  /// Exception record produced by a denied access or a gated WRPKR.
  struct Fault
  {
    Vpn page = 0;
    AccessKind kind = AccessKind::Load;
    ProtectionKey pkey;
    FaultCause cause = FaultCause::InvalidPage;
    ThreadIndex thread = 0;

    friend bool operator==(const Fault&, const Fault&) = default;
  };

}
