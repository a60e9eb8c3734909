#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "machine.hpp"
#include "trace.hpp"

namespace sealpk
{

  struct ExpectationOutcome
  {
    std::string description;
    bool met = false;
    bool skipped = false;
    std::string observed;
  };


  namespace detail
  {
    inline std::string describe(const Expectation& e)
    {
      std::ostringstream os;
      std::visit(Overloaded{
          [&](const expect::Fault& x) {
            os << "fault " << toString(x.cause);
            if (x.thread)
              os << " at thread " << *x.thread;
            if (x.event)
              os << " event " << *x.event;
          },
          [&](const expect::EventResult& x) {
            os << "thread " << x.thread << " event " << x.index;
            if (x.result)
              os << " returns " << *x.result;
            if (x.key)
              os << " yields key " << *x.key;
          },
          [&](const expect::Pair& x) {
            os << "thread " << x.thread << " pkey " << x.pkey.value() << " pair (RD="
               << x.pair.readDisable << ",WD=" << x.pair.writeDisable << ")";
          },
          [&](const expect::SharedKey& x) {
            os << (x.shared ? "stale pages share a re-issued key"
                            : "no stale pages share a re-issued key");
          },
          [&](const expect::Refills& x) { os << "PK-CAM refills = " << x.count; },
          [&](const expect::KeyState& x) {
            os << "pkey " << x.pkey.value();
            if (x.allocated)
              os << (*x.allocated ? " allocated" : " not allocated");
            if (x.dirty)
              os << (*x.dirty ? " dirty" : " clean");
            if (x.pages)
              os << " pages=" << *x.pages;
          },
          [&](const expect::NoFaults&) { os << "no faults"; },
        }, e.what);
      if (e.whenLazy)
        os << " [when lazy_dealloc=" << (*e.whenLazy ? "true" : "false") << "]";
      return os.str();
    }
  }


  /// Check the declared expectations against a finished run.
  inline std::vector<ExpectationOutcome> evaluate(const std::vector<Expectation>& expectations,
                                                  const Machine& m)
  {
    const EventLog& log = m.log();
    std::vector<ExpectationOutcome> out;
    for (const auto& e : expectations)
      {
        ExpectationOutcome o{detail::describe(e), false, false, ""};
        if (e.whenLazy and *e.whenLazy != m.config().lazyDealloc)
          {
            o.met = true;
            o.skipped = true;
            out.push_back(o);
            continue;
          }

        std::visit(detail::Overloaded{
            [&](const expect::Fault& x) {
              o.met = std::any_of(log.faults.begin(), log.faults.end(), [&](const LoggedFault& f) {
                return f.cause == x.cause and (not x.thread or f.thread == *x.thread)
                       and (not x.event or f.event == *x.event);
              });
              o.observed = std::to_string(log.faults.size()) + " fault(s) logged";
            },
            [&](const expect::EventResult& x) {
              auto it = std::find_if(log.records.begin(), log.records.end(), [&](const LogRecord& r) {
                return r.kind == RecordKind::Event and r.thread == x.thread and r.event
                       and *r.event == x.index;
              });
              if (it == log.records.end())
                {
                  o.observed = "event not executed";
                  return;
                }
              o.observed = it->op + " -> " + it->result;
              if (it->value)
                o.observed += " value " + std::to_string(*it->value);
              o.met = (not x.result or it->result == *x.result)
                      and (not x.key or (it->value and *it->value == *x.key));
            },
            [&](const expect::Pair& x) {
              const PermPair p = m.pkrOf(x.thread).pair(x.pkey);
              o.observed = "(RD=" + std::to_string(p.readDisable) + ",WD="
                           + std::to_string(p.writeDisable) + ")";
              o.met = p == x.pair;
            },
            [&](const expect::SharedKey& x) {
              const auto alerts = std::count_if(log.records.begin(), log.records.end(),
                  [](const LogRecord& r) { return r.kind == RecordKind::Alert and r.op == "shared_key"; });
              const auto stale = m.kernel().staleKeyPages();
              o.observed = std::to_string(alerts) + " shared-key alert(s), "
                           + std::to_string(stale.size()) + " stale page(s)";
              o.met = (alerts > 0 or not stale.empty()) == x.shared;
            },
            [&](const expect::Refills& x) {
              o.observed = std::to_string(log.refills());
              o.met = log.refills() == x.count;
            },
            [&](const expect::KeyState& x) {
              const Kernel& k = m.kernel();
              o.observed = std::string(k.allocated(x.pkey) ? "allocated" : "free")
                           + (k.dirty(x.pkey) ? " dirty" : " clean")
                           + " pages=" + std::to_string(k.pageCount(x.pkey));
              o.met = (not x.allocated or k.allocated(x.pkey) == *x.allocated)
                      and (not x.dirty or k.dirty(x.pkey) == *x.dirty)
                      and (not x.pages or k.pageCount(x.pkey) == *x.pages);
            },
            [&](const expect::NoFaults&) {
              o.observed = std::to_string(log.faults.size()) + " fault(s)";
              o.met = log.faults.empty();
            },
          }, e.what);
        out.push_back(o);
      }
    return out;
  }

  inline bool allMet(const std::vector<ExpectationOutcome>& v)
  {
    return std::all_of(v.begin(), v.end(), [](const auto& o) { return o.met; });
  }

}
