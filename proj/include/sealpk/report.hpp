#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "event_log.hpp"
#include "scenario_io.hpp"

namespace sealpk
{

  enum class ReportFormat { Json, Text };

  inline std::optional<ReportFormat> parseReportFormat(std::string_view s)
  {
    if (s == "json")
      return ReportFormat::Json;
    if (s == "text")
      return ReportFormat::Text;
    return std::nullopt;
  }


  /// Machine-readable form of a log. Field names are stable.
  inline nlohmann::ordered_json reportToJson(const EventLog& log)
  {
    using J = nlohmann::ordered_json;
    J events = J::array();
    for (const auto& r : log.records)
      {
        J e;
        e["kind"] = std::string(toString(r.kind));
        e["thread"] = r.thread;
        if (r.event)
          e["event"] = *r.event;
        e["ia"] = r.ia;
        e["op"] = r.op;
        e["result"] = r.result;
        if (r.page)
          e["page"] = *r.page;
        if (r.pkey)
          e["pkey"] = *r.pkey;
        if (r.value)
          e["value"] = *r.value;
        if (r.instrumented)
          e["instrumented"] = true;
        e["class"] = std::string(toString(r.costClass));
        e["cycles"] = r.cycles;
        events.push_back(std::move(e));
      }

    J faults = J::array();
    for (const auto& f : log.faults)
      {
        J e;
        e["thread"] = f.thread;
        if (f.event)
          e["event"] = *f.event;
        e["ia"] = f.ia;
        e["cause"] = std::string(toString(f.cause));
        if (f.page)
          e["page"] = *f.page;
        if (f.kind)
          e["kind"] = std::string(toString(*f.kind));
        if (f.pkey)
          e["pkey"] = *f.pkey;
        faults.push_back(std::move(e));
      }

    const CostReport cost = costReport(log);
    J byClass = J::object();
    for (CostClass c : kChargedClasses)
      byClass[std::string(toString(c))] = cost[c];
    J byThread = J::object();
    for (const auto& [t, n] : cost.byThread)
      byThread[std::to_string(t)] = n;

    J root;
    root["events"] = events;
    root["faults"] = faults;
    root["cycles"] = J{{"total", cost.total}, {"by_class", byClass}, {"by_thread", byThread}};
    root["refills"] = log.refills();
    return root;
  }


  namespace detail
  {
    inline std::string hex(std::uint64_t v)
    {
      std::ostringstream os;
      os << "0x" << std::hex << v;
      return os.str();
    }

    template <class T>
    std::string optStr(const std::optional<T>& v)
    {
      if (not v)
        return "-";
      std::ostringstream os;
      os << *v;
      return os.str();
    }

    /// Left-aligned column that always leaves at least one space.
    inline void cell(std::ostream& os, const std::string& v, std::size_t width)
    {
      os << v << std::string(v.size() < width ? width - v.size() : 1, ' ');
    }
  }

  /// Human-readable table. Carries the same information as the JSON form
  /// and can be read back with parseTextReport.
  inline std::string reportToText(const EventLog& log)
  {
    using detail::cell;
    using detail::optStr;
    std::ostringstream os;
    os << "# events\n";
    for (auto [h, w] : {std::pair{"seq", 6}, {"kind", 10}, {"thread", 7}, {"event", 6},
                        {"ia", 12}, {"op", 16}, {"result", 15}, {"page", 10}, {"pkey", 6},
                        {"value", 20}, {"instr", 6}, {"class", 15}})
      cell(os, h, w);
    os << "cycles\n";
    for (std::size_t i = 0; i < log.records.size(); ++i)
      {
        const auto& r = log.records[i];
        cell(os, std::to_string(i), 6);
        cell(os, std::string(toString(r.kind)), 10);
        cell(os, std::to_string(r.thread), 7);
        cell(os, optStr(r.event), 6);
        cell(os, detail::hex(r.ia), 12);
        cell(os, r.op, 16);
        cell(os, r.result, 15);
        cell(os, optStr(r.page), 10);
        cell(os, optStr(r.pkey), 6);
        cell(os, r.value ? detail::hex(*r.value) : "-", 20);
        cell(os, r.instrumented ? "yes" : "no", 6);
        cell(os, std::string(toString(r.costClass)), 15);
        os << r.cycles << "\n";
      }

    os << "# faults\n";
    for (auto [h, w] : {std::pair{"thread", 7}, {"event", 6}, {"ia", 12}, {"cause", 15},
                        {"page", 10}, {"kind", 7}})
      cell(os, h, w);
    os << "pkey\n";
    for (const auto& f : log.faults)
      {
        cell(os, std::to_string(f.thread), 7);
        cell(os, optStr(f.event), 6);
        cell(os, detail::hex(f.ia), 12);
        cell(os, std::string(toString(f.cause)), 15);
        cell(os, optStr(f.page), 10);
        cell(os, f.kind ? std::string(toString(*f.kind)) : "-", 7);
        os << optStr(f.pkey) << "\n";
      }

    const CostReport cost = costReport(log);
    os << "# cycles\n";
    os << "total " << cost.total << "\n";
    for (CostClass c : kChargedClasses)
      os << "class " << toString(c) << " " << cost[c] << "\n";
    for (const auto& [t, n] : cost.byThread)
      os << "thread " << t << " " << n << "\n";
    os << "refills " << log.refills() << "\n";
    return os.str();
  }

  inline std::string renderReport(const EventLog& log, ReportFormat format)
  {
    if (format == ReportFormat::Json)
      return reportToJson(log).dump(2) + "\n";
    return reportToText(log);
  }


  namespace detail
  {
    inline std::uint64_t readNum(const std::string& tok)
    {
      if (tok.rfind("0x", 0) == 0)
        return std::stoull(tok.substr(2), nullptr, 16);
      return std::stoull(tok);
    }

    template <class T>
    std::optional<T> readOpt(const std::string& tok)
    {
      if (tok == "-")
        return std::nullopt;
      return static_cast<T>(readNum(tok));
    }
  }

  /// Rebuild the log from its text rendering.
  inline EventLog parseTextReport(const std::string& text)
  {
    using detail::readNum;
    using detail::readOpt;
    EventLog log;
    std::istringstream in(text);
    std::string line, section;
    bool header = false;
    while (std::getline(in, line))
      {
        if (line.rfind("# ", 0) == 0)
          {
            section = line.substr(2);
            header = section != "cycles";
            continue;
          }
        if (header)
          {
            header = false;
            continue;
          }
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;)
          tok.push_back(t);
        if (tok.empty())
          continue;

        if (section == "events")
          {
            if (tok.size() != 13)
              throw ParseError("report", "bad event line: " + line);
            LogRecord r;
            auto kind = parseRecordKind(tok[1]);
            auto cls = parseCostClass(tok[11]);
            if (not kind or not cls)
              throw ParseError("report", "bad event line: " + line);
            r.kind = *kind;
            r.thread = static_cast<ThreadId>(readNum(tok[2]));
            r.event = readOpt<std::size_t>(tok[3]);
            r.ia = readNum(tok[4]);
            r.op = tok[5];
            r.result = tok[6];
            r.page = readOpt<Vpn>(tok[7]);
            r.pkey = readOpt<unsigned>(tok[8]);
            r.value = readOpt<std::uint64_t>(tok[9]);
            r.instrumented = tok[10] == "yes";
            r.costClass = *cls;
            r.cycles = readNum(tok[12]);
            log.records.push_back(std::move(r));
          }
        else if (section == "faults")
          {
            if (tok.size() != 7)
              throw ParseError("report", "bad fault line: " + line);
            LoggedFault f;
            f.thread = static_cast<ThreadId>(readNum(tok[0]));
            f.event = readOpt<std::size_t>(tok[1]);
            f.ia = readNum(tok[2]);
            auto cause = parseFaultCause(tok[3]);
            if (not cause)
              throw ParseError("report", "bad fault cause: " + tok[3]);
            f.cause = *cause;
            f.page = readOpt<Vpn>(tok[4]);
            if (tok[5] == "Load")
              f.kind = AccessKind::Load;
            else if (tok[5] == "Store")
              f.kind = AccessKind::Store;
            f.pkey = readOpt<unsigned>(tok[6]);
            log.faults.push_back(f);
          }
      }
    return log;
  }

  /// Rebuild the log from its JSON rendering.
  inline EventLog parseJsonReport(const std::string& text)
  {
    const auto root = nlohmann::json::parse(text);
    EventLog log;
    for (const auto& e : root.at("events"))
      {
        LogRecord r;
        r.kind = parseRecordKind(e.at("kind").get<std::string>()).value();
        r.thread = e.at("thread").get<ThreadId>();
        if (e.contains("event"))
          r.event = e.at("event").get<std::size_t>();
        r.ia = e.at("ia").get<InstrAddr>();
        r.op = e.at("op").get<std::string>();
        r.result = e.at("result").get<std::string>();
        if (e.contains("page"))
          r.page = e.at("page").get<Vpn>();
        if (e.contains("pkey"))
          r.pkey = e.at("pkey").get<unsigned>();
        if (e.contains("value"))
          r.value = e.at("value").get<std::uint64_t>();
        r.instrumented = e.value("instrumented", false);
        r.costClass = parseCostClass(e.at("class").get<std::string>()).value();
        r.cycles = e.at("cycles").get<std::uint64_t>();
        log.records.push_back(std::move(r));
      }
    for (const auto& e : root.at("faults"))
      {
        LoggedFault f;
        f.thread = e.at("thread").get<ThreadId>();
        if (e.contains("event"))
          f.event = e.at("event").get<std::size_t>();
        f.ia = e.at("ia").get<InstrAddr>();
        f.cause = parseFaultCause(e.at("cause").get<std::string>()).value();
        if (e.contains("page"))
          f.page = e.at("page").get<Vpn>();
        if (e.contains("kind"))
          f.kind = e.at("kind").get<std::string>() == "Load" ? AccessKind::Load : AccessKind::Store;
        if (e.contains("pkey"))
          f.pkey = e.at("pkey").get<unsigned>();
        log.faults.push_back(f);
      }
    return log;
  }

}
