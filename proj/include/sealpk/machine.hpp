#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "event_log.hpp"
#include "kernel.hpp"
#include "seal_unit.hpp"
#include "trace.hpp"

namespace sealpk
{

  /// Position of an event in its thread's program; empty for ad-hoc steps.
  using EventIndex = std::optional<std::size_t>;


  /// Deterministic executor for a multi-thread trace. Threads run in
  /// program order and hand over the core only at Yield or when they end.
  class Machine
  {
  public:
    Machine(const SimConfig& config, const std::vector<ThreadId>& threadIds)
      : config_(config),
        kernel_(KernelConfig{config.lazyDealloc}),
        seal_(config.camCapacity)
    {
      if (threadIds.empty())
        throw std::invalid_argument("machine needs at least one thread");
      for (ThreadId id : threadIds)
        {
          if (index_.contains(id))
            throw std::invalid_argument("duplicate thread id " + std::to_string(id));
          index_.emplace(id, kernel_.addThread());
          ThreadState st;
          st.id = id;
          threads_.push_back(std::move(st));
        }
    }

    explicit Machine(const Scenario& scenario)
      : Machine(scenario.config, idsOf(scenario))
    {
      for (std::size_t i = 0; i < scenario.threads.size(); ++i)
        threads_[i].program = scenario.threads[i].events;
    }

    /// Run every loaded program to completion and return the log.
    const EventLog& run()
    {
      ThreadIndex cur = kernel_.threads().current();
      while (true)
        {
          auto& t = threads_[cur];
          while (t.pc < t.program.size())
            {
              const std::size_t idx = t.pc++;
              const TraceEvent& ev = t.program[idx];
              executeAs(cur, ev, idx);
              if (std::holds_alternative<op::Yield>(ev.op))
                break;
            }

          auto next = nextRunnable(cur);
          if (not next)
            break;
          if (*next != cur)
            switchTo(*next);
          cur = *next;
        }
      return log_;
    }

    /// Execute one event on behalf of thread id outside any loaded
    /// program, switching to it first if needed. Returns false if the
    /// event faulted. Logged without an event index.
    bool step(ThreadId id, const TraceEvent& ev)
    {
      const ThreadIndex t = indexOf(id);
      if (t != kernel_.threads().current())
        switchTo(t);
      return executeAs(t, ev, std::nullopt);
    }

    /// Replace the program of a thread; run() starts it from the top.
    void load(ThreadId id, std::vector<TraceEvent> program)
    {
      auto& th = threads_[indexOf(id)];
      th.program = std::move(program);
      th.pc = 0;
      th.terminated = false;
    }

    const EventLog& log() const { return log_; }
    const Kernel& kernel() const { return kernel_; }
    Kernel& kernel() { return kernel_; }
    const SealUnit& sealUnit() const { return seal_; }
    const SimConfig& config() const { return config_; }

    const PkrStore& pkrOf(ThreadId id) const { return kernel_.threads().pkr(indexOf(id)); }

    bool terminated(ThreadId id) const { return threads_[indexOf(id)].terminated; }

    /// Word stored at (page, slot); unwritten words read as 0.
    std::uint64_t memoryWord(Vpn page, std::uint64_t slot) const
    {
      auto it = memory_.find({page, slot});
      return it == memory_.end() ? 0 : it->second;
    }

    const std::vector<std::uint64_t>& callStack(ThreadId id) const
    { return threads_[indexOf(id)].callStack; }

    ThreadIndex indexOf(ThreadId id) const
    {
      auto it = index_.find(id);
      if (it == index_.end())
        throw std::out_of_range("unknown thread id " + std::to_string(id));
      return it->second;
    }

  private:
    struct ThreadState
    {
      ThreadId id = 0;
      std::vector<TraceEvent> program;
      std::size_t pc = 0;
      bool terminated = false;
      std::uint64_t lastRdpkr = 0;            // rd of the latest RDPKR
      std::optional<ProtectionKey> lastAlloc; // latest key returned by pkey_alloc
      std::vector<std::uint64_t> callStack;   // architectural return slots
    };

    static std::vector<ThreadId> idsOf(const Scenario& s)
    {
      std::vector<ThreadId> ids;
      for (const auto& t : s.threads)
        ids.push_back(t.id);
      return ids;
    }

    std::optional<ThreadIndex> nextRunnable(ThreadIndex from) const
    {
      const std::size_t n = threads_.size();
      for (std::size_t i = 1; i <= n; ++i)
        {
          const ThreadIndex c = (from + i) % n;
          if (threads_[c].pc < threads_[c].program.size())
            return c;
        }
      return std::nullopt;
    }

    void switchTo(ThreadIndex to)
    {
      const ThreadIndex from = kernel_.threads().current();
      kernel_.contextSwitch(to);
      LogRecord r;
      r.kind = RecordKind::ContextSwitch;
      r.thread = threads_[to].id;
      r.op = "context_switch";
      r.result = "OK";
      r.value = threads_[from].id;
      charge(r, CostClass::ContextSwitch);
      log_.records.push_back(std::move(r));
    }

    void charge(LogRecord& r, CostClass c) const
    {
      r.costClass = c;
      r.cycles = config_.costs[c];
    }

    LogRecord eventRecord(ThreadIndex t, const TraceEvent& ev, EventIndex idx) const
    {
      LogRecord r;
      r.thread = threads_[t].id;
      r.event = idx;
      r.ia = ev.ia;
      r.op = std::string(opName(ev.op));
      r.result = "OK";
      r.instrumented = ev.instrumented;
      return r;
    }

    void raise(ThreadIndex t, EventIndex idx, const FaultReport& rep)
    {
      LoggedFault f;
      f.thread = threads_[t].id;
      f.event = idx;
      f.ia = rep.ia;
      f.cause = rep.cause;
      if (rep.cause != FaultCause::SealViolation)
        {
          f.page = rep.page;
          f.kind = rep.kind;
        }
      if (rep.pkey)
        f.pkey = rep.pkey->value();
      log_.faults.push_back(f);

      if (config_.continueOnFault)
        return;
      auto& th = threads_[t];
      th.terminated = true;
      th.pc = th.program.size();
      LogRecord r;
      r.kind = RecordKind::Terminate;
      r.thread = th.id;
      r.event = idx;
      r.ia = rep.ia;
      r.op = "terminate";
      r.result = std::string(toString(rep.cause));
      log_.records.push_back(std::move(r));
    }

    bool executeAs(ThreadIndex t, const TraceEvent& ev, EventIndex idx)
    {
      auto& th = threads_[t];
      LogRecord rec = eventRecord(t, ev, idx);
      bool ok = true;

      std::visit(detail::Overloaded{
          [&](const op::Load& o) {
            rec.page = o.page;
            charge(rec, CostClass::Load);
            ok = access(t, idx, ev, rec, o.page, AccessKind::Load);
            if (ok and o.slot)
              rec.value = memoryWord(o.page, *o.slot);
          },
          [&](const op::Store& o) {
            rec.page = o.page;
            charge(rec, CostClass::Store);
            ok = access(t, idx, ev, rec, o.page, AccessKind::Store);
            if (ok and o.data)
              {
                memory_[{o.page, o.data->slot}] = o.data->value;
                rec.value = o.data->value;
              }
          },
          [&](const op::Rdpkr& o) {
            rec.pkey = o.pkey.value();
            charge(rec, CostClass::Rdpkr);
            th.lastRdpkr = kernel_.threads().live().rdpkr(o.pkey);
            rec.value = th.lastRdpkr;
          },
          [&](const op::Wrpkr& o) {
            ok = wrpkr(t, idx, ev, rec, o);
          },
          [&](const op::SealStart& o) {
            rec.pkey = o.pkey.value();
            rec.value = o.addr;
            ok = sealStaging(t, idx, ev, rec, seal_.sealStart(o.pkey, o.addr), o.pkey);
          },
          [&](const op::SealEnd& o) {
            rec.pkey = o.pkey.value();
            rec.value = o.addr;
            ok = sealStaging(t, idx, ev, rec, seal_.sealEnd(o.pkey, o.addr), o.pkey);
          },
          [&](const op::Call& o) {
            th.callStack.push_back(o.ret);
            rec.value = o.ret;
          },
          [&](const op::Return&) {
            if (th.callStack.empty())
              rec.result = "underflow";
            else
              {
                rec.value = th.callStack.back();
                th.callStack.pop_back();
              }
          },
          [&](const op::SmashStack& o) {
            if (o.slot < th.callStack.size())
              th.callStack[o.slot] = o.value;
            else
              rec.result = "out_of_range";
            rec.value = o.value;
          },
          [&](const op::Mmap& o) {
            rec.page = o.pages.start;
            charge(rec, CostClass::PkeySyscall);
            rec.result = std::string(toString(kernel_.mmap(o.pages, o.prot)));
          },
          [&](const op::Munmap& o) {
            rec.page = o.pages.start;
            charge(rec, CostClass::PkeySyscall);
            const Errc e = kernel_.munmap(o.pages);
            if (e == Errc::Ok)
              std::erase_if(memory_, [&](const auto& kv) { return o.pages.contains(kv.first.first); });
            rec.result = std::string(toString(e));
          },
          [&](const Syscall& s) {
            rec.op = std::string(syscallName(s));
            syscall(t, rec, s);
          },
          [&](const op::Yield&) { },
        }, ev.op);

      log_.records.push_back(std::move(rec));
      if (pendingAlert_)
        {
          log_.records.push_back(std::move(*pendingAlert_));
          pendingAlert_.reset();
        }
      // The terminate record follows the record of the faulting event.
      if (pendingTerminate_)
        {
          log_.records.push_back(std::move(*pendingTerminate_));
          pendingTerminate_.reset();
        }
      return ok;
    }

    bool access(ThreadIndex t, EventIndex idx, const TraceEvent& ev, LogRecord& rec, Vpn page,
                AccessKind kind)
    {
      const PteEntry pte = kernel_.mmu().dtlbLookup(page);
      if (pte.valid)
        rec.pkey = pte.pkey.value();
      auto fault = checkAccess(AccessRequest{page, kind, t}, pte, kernel_.threads().live());
      if (not fault)
        return true;
      rec.result = std::string(toString(fault->cause));
      deferFault(t, idx, kernel_.handleFault(*fault, ev.ia));
      return false;
    }

    void deferFault(ThreadIndex t, EventIndex idx, const FaultReport& rep)
    {
      const std::size_t before = log_.records.size();
      raise(t, idx, rep);
      if (log_.records.size() > before)
        {
          pendingTerminate_ = std::move(log_.records.back());
          log_.records.pop_back();
        }
    }

    bool sealStaging(ThreadIndex t, EventIndex idx, const TraceEvent& ev, LogRecord& rec,
                     Errc e, ProtectionKey key)
    {
      rec.result = std::string(toString(e));
      if (e == Errc::Ok)
        return true;
      deferFault(t, idx, kernel_.handleFault(
          Fault{0, AccessKind::Store, key, FaultCause::SealViolation, t}, ev.ia));
      return false;
    }

    bool wrpkr(ThreadIndex t, EventIndex idx, const TraceEvent& ev, LogRecord& rec,
               const op::Wrpkr& o)
    {
      auto& th = threads_[t];
      PkrStore& pkr = kernel_.threads().live();
      const std::uint64_t oldRow = pkr.rdpkr(o.pkey);
      const std::uint64_t newRow = std::visit(detail::Overloaded{
          [](std::uint64_t row) { return row; },
          [&](PermPair p) { return packPerm(p, o.pkey.column(), th.lastRdpkr); },
        }, o.value);

      rec.pkey = o.pkey.value();
      rec.value = newRow;
      charge(rec, CostClass::Wrpkr);

      const GateResult gate = seal_.gateWrpkr(o.pkey, ev.ia, oldRow, newRow);
      for (ProtectionKey k : gate.refilled)
        {
          LogRecord r;
          r.kind = RecordKind::Refill;
          r.thread = th.id;
          r.event = idx;
          r.ia = ev.ia;
          r.op = "cam_refill";
          r.result = "OK";
          r.pkey = k.value();
          charge(r, CostClass::CamRefill);
          log_.records.push_back(std::move(r));
        }

      LogRecord g;
      g.kind = RecordKind::Gate;
      g.thread = th.id;
      g.event = idx;
      g.ia = ev.ia;
      g.op = "gate";
      g.result = gate.allowed ? "allow" : "deny";
      g.pkey = (gate.allowed ? o.pkey : gate.offendingKey).value();
      log_.records.push_back(std::move(g));

      if (gate.allowed)
        {
          pkr.wrpkr(o.pkey, newRow);
          return true;
        }
      rec.result = std::string(toString(FaultCause::SealViolation));
      deferFault(t, idx, kernel_.handleFault(
          Fault{0, AccessKind::Store, gate.offendingKey, FaultCause::SealViolation, t}, ev.ia));
      return false;
    }

    void syscall(ThreadIndex t, LogRecord& rec, const Syscall& s)
    {
      auto& th = threads_[t];
      Errc result = Errc::Ok;
      std::optional<LogRecord> alert;
      charge(rec, CostClass::PkeySyscall);

      // Resolve a key operand; an unresolvable last_alloc is an invalid key.
      auto key = [&](const KeyRef& ref) -> std::optional<ProtectionKey> {
        auto k = ref.resolve(th.lastAlloc);
        if (k)
          rec.pkey = k->value();
        else
          result = Errc::InvalidKey;
        return k;
      };

      std::visit(detail::Overloaded{
          [&](const sys::PkeyAlloc& a) {
            auto r = kernel_.pkeyAlloc(t, a.init);
            if (auto* k = std::get_if<ProtectionKey>(&r))
              {
                th.lastAlloc = *k;
                rec.pkey = k->value();
                rec.value = k->value();
                if (kernel_.pageCount(*k) > 0)
                  {
                    // Key handed out while old pages still carry it.
                    alert = LogRecord{};
                    alert->kind = RecordKind::Alert;
                    alert->thread = th.id;
                    alert->event = rec.event;
                    alert->ia = rec.ia;
                    alert->op = "shared_key";
                    alert->result = "stale_pages";
                    alert->pkey = k->value();
                    alert->value = kernel_.pageCount(*k);
                  }
              }
            else
              result = std::get<Errc>(r);
          },
          [&](const sys::PkeyFree& a) {
            if (auto k = key(a.pkey))
              result = kernel_.pkeyFree(*k);
          },
          [&](const sys::PkeyMprotect& a) {
            rec.page = a.pages.start;
            if (auto k = key(a.pkey))
              result = kernel_.pkeyMprotect(a.pages, a.prot, *k);
          },
          [&](const sys::Mprotect& a) {
            rec.page = a.pages.start;
            charge(rec, CostClass::Mprotect);
            result = kernel_.mprotect(a.pages, a.prot);
          },
          [&](const sys::PkeySeal& a) {
            if (auto k = key(a.pkey))
              result = kernel_.pkeySeal(*k, a.domain, a.page);
          },
          [&](const sys::PkeyPermSeal& a) {
            if (auto k = key(a.pkey))
              result = seal_.commitPermSeal(*k);
          },
        }, s);
      rec.result = std::string(toString(result));
      if (alert)
        pendingAlert_ = std::move(alert);
    }

    SimConfig config_;
    Kernel kernel_;
    SealUnit seal_;
    std::vector<ThreadState> threads_;
    std::map<ThreadId, ThreadIndex> index_;
    std::map<std::pair<Vpn, std::uint64_t>, std::uint64_t> memory_;
    EventLog log_;
    std::optional<LogRecord> pendingTerminate_;
    std::optional<LogRecord> pendingAlert_;
  };

}
