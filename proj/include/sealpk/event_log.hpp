#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cost_model.hpp"
#include "trace.hpp"
#include "types.hpp"

namespace sealpk
{

  enum class RecordKind : std::uint8_t
  {
    Event,          // execution of one trace event
    Gate,           // WRPKR seal-gate decision (always precedes the write)
    Refill,         // PK-CAM miss serviced by the kernel handler
    ContextSwitch,
    Terminate,      // faulting thread killed by the fault policy
    Alert,          // condition worth reporting (e.g. a key issued while still in use)
  };

  constexpr std::string_view toString(RecordKind k)
  {
    switch (k)
      {
      case RecordKind::Event:         return "event";
      case RecordKind::Gate:          return "gate";
      case RecordKind::Refill:        return "refill";
      case RecordKind::ContextSwitch: return "switch";
      case RecordKind::Terminate:     return "terminate";
      case RecordKind::Alert:         return "alert";
      }
    return "?";
  }

  inline std::optional<RecordKind> parseRecordKind(std::string_view s)
  {
    for (auto k : {RecordKind::Event, RecordKind::Gate, RecordKind::Refill,
                   RecordKind::ContextSwitch, RecordKind::Terminate, RecordKind::Alert})
      if (toString(k) == s)
        return k;
    return std::nullopt;
  }


  struct LogRecord
  {
    RecordKind kind = RecordKind::Event;
    ThreadId thread = 0;
    std::optional<std::size_t> event;      // index in the thread's trace
    InstrAddr ia = 0;
    std::string op;                        // op or syscall name
    std::string result;                    // "OK", an Errc or FaultCause name, ...
    std::optional<Vpn> page;
    std::optional<unsigned> pkey;
    std::optional<std::uint64_t> value;    // row, returned key, loaded word, return target
    bool instrumented = false;
    CostClass costClass = CostClass::None;
    std::uint64_t cycles = 0;

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
  };


  struct LoggedFault
  {
    ThreadId thread = 0;
    std::optional<std::size_t> event;     // absent for events run outside a program
    InstrAddr ia = 0;
    FaultCause cause = FaultCause::InvalidPage;
    std::optional<Vpn> page;
    std::optional<AccessKind> kind;
    std::optional<unsigned> pkey;

    friend bool operator==(const LoggedFault&, const LoggedFault&) = default;
  };


  /// Append-only record of a run.
  struct EventLog
  {
    std::vector<LogRecord> records;
    std::vector<LoggedFault> faults;

    std::uint64_t refills() const
    {
      std::uint64_t n = 0;
      for (const auto& r : records)
        n += r.kind == RecordKind::Refill;
      return n;
    }

    friend bool operator==(const EventLog&, const EventLog&) = default;
  };


  struct CostReport
  {
    std::array<std::uint64_t, kNumCostClasses> byClass{};
    std::map<ThreadId, std::uint64_t> byThread;
    std::uint64_t total = 0;

    std::uint64_t operator[](CostClass c) const
    { return c == CostClass::None ? 0 : byClass[static_cast<std::size_t>(c)]; }

    friend bool operator==(const CostReport&, const CostReport&) = default;
  };

  /// Partition the charged cycles of a log by class and by thread.
  inline CostReport costReport(const EventLog& log)
  {
    CostReport rep;
    for (const auto& r : log.records)
      {
        if (r.costClass == CostClass::None)
          continue;
        rep.byClass[static_cast<std::size_t>(r.costClass)] += r.cycles;
        rep.byThread[r.thread] += r.cycles;
        rep.total += r.cycles;
      }
    return rep;
  }

}
