#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace sealpk
{

  enum class CostClass : std::uint8_t
  {
    Wrpkr,
    Rdpkr,
    Load,
    Store,
    Mprotect,
    PkeySyscall,
    ContextSwitch,
    CamRefill,
    None,   // events that carry no charge (Call, Return, Yield, seal staging)
  };

  inline constexpr std::size_t kNumCostClasses = 8;

  inline constexpr std::array<CostClass, kNumCostClasses> kChargedClasses = {
    CostClass::Wrpkr, CostClass::Rdpkr, CostClass::Load, CostClass::Store,
    CostClass::Mprotect, CostClass::PkeySyscall, CostClass::ContextSwitch, CostClass::CamRefill,
  };

  constexpr std::string_view toString(CostClass c)
  {
    switch (c)
      {
      case CostClass::Wrpkr:         return "wrpkr";
      case CostClass::Rdpkr:         return "rdpkr";
      case CostClass::Load:          return "load";
      case CostClass::Store:         return "store";
      case CostClass::Mprotect:      return "mprotect";
      case CostClass::PkeySyscall:   return "pkey_syscall";
      case CostClass::ContextSwitch: return "context_switch";
      case CostClass::CamRefill:     return "cam_refill";
      case CostClass::None:          return "none";
      }
    return "?";
  }

  inline std::optional<CostClass> parseCostClass(std::string_view s)
  {
    for (auto c : kChargedClasses)
      if (toString(c) == s)
        return c;
    if (s == "none")
      return CostClass::None;
    return std::nullopt;
  }


  /// Cycles charged per event class. mprotect = 1094 is the measured
  /// average for the syscall; wrpkr = 135 is the middle of the 11..260
  /// cycle range reported for a user-level permission write. The others
  /// are simulator parameters.
  struct CostModel
  {
    std::array<std::uint64_t, kNumCostClasses> cycles = {
      135,   // wrpkr
      20,    // rdpkr
      1,     // load
      1,     // store
      1094,  // mprotect
      500,   // pkey_syscall
      200,   // context_switch
      300,   // cam_refill
    };

    std::uint64_t operator[](CostClass c) const
    { return c == CostClass::None ? 0 : cycles[static_cast<std::size_t>(c)]; }

    std::uint64_t& at(CostClass c)
    { return cycles.at(static_cast<std::size_t>(c)); }

    friend bool operator==(const CostModel&, const CostModel&) = default;
  };

}
