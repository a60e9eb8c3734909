#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "machine.hpp"
#include "trace.hpp"

namespace sealpk
{

  /// Shadow-stack isolation variant. Inline and Func front-end passes
  /// behave identically here (no permission toggling) and both map to
  /// Unprotected.
  enum class Variant { Unprotected, SealPkWr, SealPkRdRw, Mprotect };

  inline constexpr std::array<Variant, 4> kAllVariants = {
    Variant::Unprotected, Variant::SealPkWr, Variant::SealPkRdRw, Variant::Mprotect,
  };

  constexpr std::string_view toString(Variant v)
  {
    switch (v)
      {
      case Variant::Unprotected: return "unprotected";
      case Variant::SealPkWr:    return "sealpk-wr";
      case Variant::SealPkRdRw:  return "sealpk-rdrw";
      case Variant::Mprotect:    return "mprotect";
      }
    return "?";
  }

  inline std::optional<Variant> parseVariant(std::string_view s)
  {
    for (Variant v : kAllVariants)
      if (toString(v) == s)
        return v;
    return std::nullopt;
  }

  constexpr bool usesPkey(Variant v)
  { return v == Variant::SealPkWr or v == Variant::SealPkRdRw; }


  struct ShadowStackOptions
  {
    Vpn base = 0x40000;                 // shadow page of the first thread
    InstrAddr setupIa = 0x1000;         // address of the setup code
    InstrAddr passStart = 0x80000;      // back-end pass instrumentation code
    InstrAddr passEnd = 0x800ff;
    bool permSeal = true;               // commit a WRPKR range for the pass (SealPk variants)
    std::uint64_t maxDepth = 512;
  };


  /// Result of setup: where the shadow stack lives and how it is guarded.
  struct ShadowStack
  {
    Variant variant = Variant::Unprotected;
    PageRange pages;                     // one page per thread
    std::optional<ProtectionKey> pkey;   // SealPk variants only
    ShadowStackOptions options;
    std::map<ThreadId, Vpn> pageOf;
  };


  namespace detail
  {
    // Fixed offsets of the instrumentation sequences inside the pass.
    inline constexpr InstrAddr kEnableOffset = 0x10;
    inline constexpr InstrAddr kPushOffset = 0x20;
    inline constexpr InstrAddr kDisableOffset = 0x30;
    inline constexpr InstrAddr kPopOffset = 0x40;
    inline constexpr InstrAddr kInitOffset = 0x50;

    inline TraceEvent instr(InstrAddr ia, Op op) { return TraceEvent{ia, std::move(op), true}; }

    /// WRPKR sequence that sets the shadow key to `pair`.
    inline void appendPairWrite(std::vector<TraceEvent>& out, Variant v, ProtectionKey key,
                                PermPair pair, InstrAddr ia)
    {
      if (v == Variant::SealPkWr)
        {
          // Blind write: only the shadow key's two bits, the rest of the
          // row becomes zero.
          out.push_back(instr(ia, op::Wrpkr{key, packPerm(pair, key.column(), 0)}));
        }
      else
        {
          out.push_back(instr(ia, op::Rdpkr{key}));
          out.push_back(instr(ia + 4, op::Wrpkr{key, pair}));
        }
    }
  }


  /// Allocate and protect the shadow stack on a fresh machine. Thread ids
  /// are taken in machine order; the first one runs the setup code.
  inline ShadowStack setupShadowStack(Machine& m, Variant variant, const std::vector<ThreadId>& threads,
                                      const ShadowStackOptions& opts = {})
  {
    if (threads.empty())
      throw std::invalid_argument("shadow stack needs at least one thread");

    ShadowStack ss;
    ss.variant = variant;
    ss.options = opts;
    ss.pages = PageRange{opts.base, threads.size()};
    for (std::size_t i = 0; i < threads.size(); ++i)
      ss.pageOf[threads[i]] = opts.base + i;

    const ThreadId owner = threads.front();
    const InstrAddr ia = opts.setupIa;
    auto run = [&](ThreadId t, TraceEvent ev) {
      ev.instrumented = true;
      m.step(t, ev);
      const auto& rec = m.log().records.back();
      if (rec.kind == RecordKind::Event and rec.result != "OK")
        throw std::runtime_error("shadow stack setup failed at " + rec.op + ": " + rec.result);
    };

    run(owner, {ia, op::Mmap{ss.pages, Prot{true, true, false}}});
    if (variant == Variant::Mprotect)
      run(owner, {ia + 4, Syscall{sys::Mprotect{ss.pages, Prot{true, false, false}}}});

    if (not usesPkey(variant))
      return ss;

    run(owner, {ia + 8, Syscall{sys::PkeyAlloc{PermPair::readOnly()}}});
    const ProtectionKey key{static_cast<unsigned>(*m.log().records.back().value)};
    ss.pkey = key;
    run(owner, {ia + 12, Syscall{sys::PkeyMprotect{ss.pages, Prot{true, true, false}, key}}});
    run(owner, {ia + 16, Syscall{sys::PkeySeal{key, true, true}}});
    if (opts.permSeal)
      {
        run(owner, {ia + 20, op::SealStart{key, opts.passStart}});
        run(owner, {ia + 24, op::SealEnd{key, opts.passEnd}});
        run(owner, {ia + 28, Syscall{sys::PkeyPermSeal{key}}});
      }

    // Other threads received deny-all for the new key; open read access.
    for (std::size_t i = 1; i < threads.size(); ++i)
      {
        std::vector<TraceEvent> init;
        detail::appendPairWrite(init, variant, key, PermPair::readOnly(),
                                opts.passStart + detail::kInitOffset);
        for (auto& ev : init)
          run(threads[i], ev);
      }
    return ss;
  }


  /// Expand Call/Return events into shadow push/pop sequences. Calls and
  /// returns keep their position relative to the thread's other events.
  inline std::vector<TraceEvent> instrument(const std::vector<TraceEvent>& trace, ThreadId thread,
                                            const ShadowStack& ss)
  {
    const Vpn page = ss.pageOf.at(thread);
    const InstrAddr pass = ss.options.passStart;
    std::vector<InstrAddr> expected;
    std::vector<TraceEvent> out;

    for (std::size_t i = 0; i < trace.size(); ++i)
      {
        const TraceEvent& ev = trace[i];
        if (const auto* call = std::get_if<op::Call>(&ev.op))
          {
            const std::uint64_t depth = expected.size();
            if (depth >= ss.options.maxDepth)
              throw std::invalid_argument("call depth exceeds shadow stack capacity at event "
                                          + std::to_string(i));
            out.push_back(ev);
            switch (ss.variant)
              {
              case Variant::Unprotected:
                break;
              case Variant::Mprotect:
                out.push_back(detail::instr(pass + detail::kEnableOffset,
                    Syscall{sys::Mprotect{PageRange{page, 1}, Prot{true, true, false}}}));
                break;
              default:
                detail::appendPairWrite(out, ss.variant, *ss.pkey, PermPair::allowAll(),
                                        pass + detail::kEnableOffset);
              }
            out.push_back(detail::instr(pass + detail::kPushOffset,
                                        op::Store{page, op::StoreValue{depth, call->ret}}));
            switch (ss.variant)
              {
              case Variant::Unprotected:
                break;
              case Variant::Mprotect:
                out.push_back(detail::instr(pass + detail::kDisableOffset,
                    Syscall{sys::Mprotect{PageRange{page, 1}, Prot{true, false, false}}}));
                break;
              default:
                detail::appendPairWrite(out, ss.variant, *ss.pkey, PermPair::readOnly(),
                                        pass + detail::kDisableOffset);
              }
            expected.push_back(call->ret);
          }
        else if (const auto* ret = std::get_if<op::Return>(&ev.op))
          {
            if (expected.empty())
              throw std::invalid_argument("Return without matching Call at event "
                                          + std::to_string(i));
            if (expected.back() != ret->ret)
              throw std::invalid_argument("Return address does not match its Call at event "
                                          + std::to_string(i));
            expected.pop_back();
            out.push_back(detail::instr(pass + detail::kPopOffset,
                                        op::Load{page, expected.size()}));
            out.push_back(ev);
          }
        else
          out.push_back(ev);
      }
    return out;
  }


  struct RopFlag
  {
    ThreadId thread = 0;
    std::optional<std::size_t> event;    // the Return event
    std::uint64_t shadow = 0;            // value popped from the shadow stack
    std::uint64_t target = 0;            // address actually returned to

    friend bool operator==(const RopFlag&, const RopFlag&) = default;
  };

  struct DetectionReport
  {
    std::vector<RopFlag> mismatches;
    std::uint64_t returnsChecked = 0;
    /// Non-instrumentation stores to shadow pages that faulted.
    std::uint64_t blockedTamper = 0;
    /// Non-instrumentation stores to shadow pages that succeeded.
    std::uint64_t breaches = 0;

    friend bool operator==(const DetectionReport&, const DetectionReport&) = default;
  };

  /// Scan a finished run: every Return is compared with the word its
  /// epilogue popped from the shadow stack.
  inline DetectionReport detectRop(const EventLog& log, const ShadowStack& ss)
  {
    DetectionReport rep;
    std::map<ThreadId, std::optional<std::uint64_t>> popped;
    for (const auto& r : log.records)
      {
        if (r.kind != RecordKind::Event)
          continue;
        const bool shadowPage = r.page and ss.pages.contains(*r.page);
        if (r.op == "Load" and r.instrumented and shadowPage)
          popped[r.thread] = r.result == "OK" ? r.value : std::nullopt;
        else if (r.op == "Store" and shadowPage and not r.instrumented)
          {
            if (r.result == "OK")
              ++rep.breaches;
            else
              ++rep.blockedTamper;
          }
        else if (r.op == "Return" and r.value)
          {
            auto& p = popped[r.thread];
            if (p)
              {
                ++rep.returnsChecked;
                if (*p != *r.value)
                  rep.mismatches.push_back(RopFlag{r.thread, r.event, *p, *r.value});
              }
            p.reset();
          }
      }
    return rep;
  }


  /// One complete shadow-stack run: setup, instrumented program, scan.
  struct ShadowStackRun
  {
    Machine machine;
    ShadowStack stack;
    DetectionReport detection;
    std::uint64_t setupCycles = 0;
    std::uint64_t traceCycles = 0;
    /// Cycles of the permission toggling in the trace phase
    /// (wrpkr + rdpkr + mprotect + cam_refill).
    std::uint64_t toggleCycles = 0;
  };

  inline ShadowStackRun runShadowStack(const Scenario& trace, Variant variant,
                                       const ShadowStackOptions& opts = {})
  {
    std::vector<ThreadId> ids;
    for (const auto& t : trace.threads)
      ids.push_back(t.id);

    // Malformed traces fail before anything runs.
    {
      ShadowStack probe;
      probe.options = opts;
      for (std::size_t i = 0; i < ids.size(); ++i)
        probe.pageOf[ids[i]] = opts.base + i;
      for (const auto& t : trace.threads)
        instrument(t.events, t.id, probe);
    }

    ShadowStackRun r{Machine(trace.config, ids), {}, {}, 0, 0, 0};
    r.stack = setupShadowStack(r.machine, variant, ids, opts);
    const CostReport setup = costReport(r.machine.log());
    r.setupCycles = setup.total;

    for (const auto& t : trace.threads)
      r.machine.load(t.id, instrument(t.events, t.id, r.stack));
    r.machine.run();

    const CostReport all = costReport(r.machine.log());
    r.traceCycles = all.total - setup.total;
    for (CostClass c : {CostClass::Wrpkr, CostClass::Rdpkr, CostClass::Mprotect, CostClass::CamRefill})
      r.toggleCycles += all[c] - setup[c];
    r.detection = detectRop(r.machine.log(), r.stack);
    return r;
  }


  struct VariantCost
  {
    Variant variant = Variant::Unprotected;
    std::uint64_t setupCycles = 0;
    std::uint64_t traceCycles = 0;
    std::uint64_t toggleCycles = 0;
  };

  struct CostComparison
  {
    std::vector<VariantCost> rows;
    /// Toggle-cost ratio mprotect / SealPK-RD+RW.
    double toggleRatio = 0;
    /// Trace-phase total ratio mprotect / SealPK-RD+RW.
    double traceRatio = 0;
  };

  inline CostComparison compareCosts(const Scenario& trace, const ShadowStackOptions& opts = {})
  {
    CostComparison cmp;
    for (Variant v : kAllVariants)
      {
        const auto run = runShadowStack(trace, v, opts);
        cmp.rows.push_back(VariantCost{v, run.setupCycles, run.traceCycles, run.toggleCycles});
      }
    const auto& rdrw = cmp.rows[2];
    const auto& mp = cmp.rows[3];
    cmp.toggleRatio = rdrw.toggleCycles ? double(mp.toggleCycles) / double(rdrw.toggleCycles) : 0;
    cmp.traceRatio = rdrw.traceCycles ? double(mp.traceCycles) / double(rdrw.traceCycles) : 0;
    return cmp;
  }

}
