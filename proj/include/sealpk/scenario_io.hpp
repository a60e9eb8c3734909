#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "trace.hpp"

namespace sealpk
{

  /// Parse or validation failure. where() is "line:col" for syntax errors
  /// and a JSON path (threads[0].events[3].op) for semantic ones.
  class ParseError : public std::runtime_error
  {
  public:
    ParseError(std::string where, std::string what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)), message_(std::move(what))
    { }

    const std::string& where() const { return where_; }
    const std::string& message() const { return message_; }

  private:
    std::string where_;
    std::string message_;
  };


  namespace detail
  {
    using Json = nlohmann::json;

    inline std::string lineCol(std::string_view text, std::size_t byte)
    {
      std::size_t line = 1, col = 1;
      for (std::size_t i = 0; i < byte and i < text.size(); ++i)
        {
          if (text[i] == '\n')
            {
              ++line;
              col = 1;
            }
          else
            ++col;
        }
      return std::to_string(line) + ":" + std::to_string(col);
    }

    /// Byte offset of every value (and object key) of a JSON document,
    /// indexed by the same paths the parser reports. Assumes valid JSON.
    class PathIndex
    {
    public:
      explicit PathIndex(std::string_view text) : t_(text) { value(""); }

      std::optional<std::size_t> find(std::string_view path) const
      {
        if (path.starts_with("$."))
          path.remove_prefix(2);
        else if (path == "$")
          path = "";
        auto it = at_.find(std::string(path));
        if (it == at_.end())
          return std::nullopt;
        return it->second;
      }

    private:
      void ws()
      {
        while (i_ < t_.size() and (t_[i_] == ' ' or t_[i_] == '\n' or t_[i_] == '\t' or t_[i_] == '\r'))
          ++i_;
      }

      std::string string()
      {
        std::string out;
        ++i_;
        while (i_ < t_.size() and t_[i_] != '"')
          {
            if (t_[i_] == '\\')
              ++i_;
            out += t_[i_++];
          }
        ++i_;
        return out;
      }

      void value(const std::string& path)
      {
        ws();
        if (i_ >= t_.size())
          return;
        at_.emplace(path, i_);
        const char c = t_[i_];
        if (c == '{')
          {
            ++i_;
            ws();
            while (i_ < t_.size() and t_[i_] != '}')
              {
                const std::size_t keyAt = i_;
                const std::string key = string();
                const std::string sub = path.empty() ? key : path + "." + key;
                ws();
                ++i_;                          // ':'
                value(sub);
                at_[sub] = keyAt;
                ws();
                if (i_ < t_.size() and t_[i_] == ',')
                  ++i_;
                ws();
              }
            ++i_;
          }
        else if (c == '[')
          {
            ++i_;
            ws();
            for (std::size_t n = 0; i_ < t_.size() and t_[i_] != ']'; ++n)
              {
                value(path + "[" + std::to_string(n) + "]");
                ws();
                if (i_ < t_.size() and t_[i_] == ',')
                  ++i_;
                ws();
              }
            ++i_;
          }
        else if (c == '"')
          string();
        else
          while (i_ < t_.size() and t_[i_] != ',' and t_[i_] != '}' and t_[i_] != ']'
                 and t_[i_] != ' ' and t_[i_] != '\n' and t_[i_] != '\t' and t_[i_] != '\r')
            ++i_;
      }

      std::string_view t_;
      std::size_t i_ = 0;
      std::map<std::string, std::size_t> at_;
    };

    /// Strict view of one JSON object: every key must be consumed.
    class ObjReader
    {
    public:
      ObjReader(const Json& j, std::string path)
        : j_(j), path_(std::move(path))
      {
        if (not j_.is_object())
          throw ParseError(path_, "expected an object");
      }

      const std::string& path() const { return path_; }
      std::string at(std::string_view key) const { return path_ + "." + std::string(key); }

      bool has(const std::string& key) const { return j_.contains(key); }

      const Json& get(const std::string& key)
      {
        if (not j_.contains(key))
          throw ParseError(path_, "missing field '" + key + "'");
        seen_.insert(key);
        return j_.at(key);
      }

      const Json* find(const std::string& key)
      {
        if (not j_.contains(key))
          return nullptr;
        seen_.insert(key);
        return &j_.at(key);
      }

      std::uint64_t u64(const std::string& key) { return toU64(get(key), at(key)); }

      std::optional<std::uint64_t> optU64(const std::string& key)
      {
        const Json* v = find(key);
        return v ? std::optional(toU64(*v, at(key))) : std::nullopt;
      }

      bool boolean(const std::string& key) { return toBool(get(key), at(key)); }

      std::optional<bool> optBool(const std::string& key)
      {
        const Json* v = find(key);
        return v ? std::optional(toBool(*v, at(key))) : std::nullopt;
      }

      std::string str(const std::string& key)
      {
        const Json& v = get(key);
        if (not v.is_string())
          throw ParseError(at(key), "expected a string");
        return v.get<std::string>();
      }

      ProtectionKey pkey(const std::string& key)
      {
        const std::uint64_t v = u64(key);
        if (v >= kNumPkeys)
          throw ParseError(at(key), "pkey " + std::to_string(v) + " out of range (must be < 1024)");
        return ProtectionKey{static_cast<unsigned>(v)};
      }

      KeyRef keyRef(const std::string& key)
      {
        const Json& v = get(key);
        if (v.is_string() and v.get<std::string>() == "last_alloc")
          return KeyRef::lastAlloc();
        return pkey(key);
      }

      Prot prot(const std::string& key)
      {
        const std::string s = str(key);
        auto p = parseProt(s);
        if (not p)
          throw ParseError(at(key), "bad protection '" + s + "'");
        return *p;
      }

      PageRange pages(const std::string& key)
      {
        ObjReader r(get(key), at(key));
        PageRange range{r.u64("start"), r.u64("count")};
        r.done();
        if (range.count == 0)
          throw ParseError(at(key), "page count must be positive");
        if (range.start >= kVpnLimit or range.count > kVpnLimit - range.start)
          throw ParseError(at(key), "page range exceeds 2^27");
        return range;
      }

      Vpn page(const std::string& key)
      {
        const std::uint64_t v = u64(key);
        if (v >= kVpnLimit)
          throw ParseError(at(key), "page " + std::to_string(v) + " out of range (must be < 2^27)");
        return v;
      }

      PermPair pair(const std::string& key)
      {
        ObjReader r(get(key), at(key));
        PermPair p{r.boolean("rd"), r.boolean("wd")};
        r.done();
        return p;
      }

      void done() const
      {
        for (const auto& [k, v] : j_.items())
          if (not seen_.contains(k))
            throw ParseError(at(k), "unknown field '" + k + "'");
      }

      static std::uint64_t toU64(const Json& v, const std::string& path)
      {
        if (v.is_number_unsigned())
          return v.get<std::uint64_t>();
        if (v.is_string())
          {
            const std::string s = v.get<std::string>();
            if (s.size() > 2 and s[0] == '0' and (s[1] == 'x' or s[1] == 'X'))
              {
                std::size_t used = 0;
                try
                  {
                    const std::uint64_t x = std::stoull(s.substr(2), &used, 16);
                    if (used == s.size() - 2)
                      return x;
                  }
                catch (const std::exception&)
                  { }
              }
          }
        throw ParseError(path, "expected a non-negative integer");
      }

      static bool toBool(const Json& v, const std::string& path)
      {
        if (not v.is_boolean())
          throw ParseError(path, "expected true or false");
        return v.get<bool>();
      }

    private:
      const Json& j_;
      std::string path_;
      std::set<std::string> seen_;
    };


    /// Words an event record can carry in its result field.
    inline bool isResultName(const std::string& s)
    {
      if (parseErrc(s) or parseFaultCause(s))
        return true;
      return s == "underflow" or s == "out_of_range" or s == "allow" or s == "deny";
    }

    inline Syscall parseSyscall(ObjReader& ev)
    {
      const std::string name = ev.str("name");
      ObjReader a(ev.get("args"), ev.at("args"));
      Syscall s;
      if (name == "pkey_alloc")
        s = sys::PkeyAlloc{PermPair{a.boolean("rd"), a.boolean("wd")}};
      else if (name == "pkey_free")
        s = sys::PkeyFree{a.keyRef("pkey")};
      else if (name == "pkey_mprotect")
        s = sys::PkeyMprotect{a.pages("pages"), a.prot("prot"), a.keyRef("pkey")};
      else if (name == "mprotect")
        s = sys::Mprotect{a.pages("pages"), a.prot("prot")};
      else if (name == "pkey_seal")
        s = sys::PkeySeal{a.keyRef("pkey"), a.boolean("domain"), a.boolean("page")};
      else if (name == "pkey_perm_seal")
        s = sys::PkeyPermSeal{a.keyRef("pkey")};
      else
        throw ParseError(ev.at("name"), "unknown syscall '" + name + "'");
      a.done();
      return s;
    }

    inline TraceEvent parseEvent(const Json& j, const std::string& path)
    {
      ObjReader ev(j, path);
      TraceEvent out;
      const std::string name = ev.str("op");
      out.ia = ev.u64("ia");
      out.instrumented = ev.optBool("instrumented").value_or(false);

      if (name == "Load")
        out.op = op::Load{ev.page("page"), ev.optU64("slot")};
      else if (name == "Store")
        {
          op::Store s{ev.page("page"), std::nullopt};
          auto slot = ev.optU64("slot");
          auto value = ev.optU64("value");
          if (slot.has_value() != value.has_value())
            throw ParseError(path, "Store needs both 'slot' and 'value' or neither");
          if (slot)
            s.data = op::StoreValue{*slot, *value};
          out.op = s;
        }
      else if (name == "Wrpkr")
        {
          op::Wrpkr w{ev.pkey("pkey"), std::uint64_t{0}};
          const bool hasRow = ev.has("row"), hasPair = ev.has("pair");
          if (hasRow == hasPair)
            throw ParseError(path, "Wrpkr needs exactly one of 'row' or 'pair'");
          if (hasRow)
            w.value = ev.u64("row");
          else
            w.value = ev.pair("pair");
          out.op = w;
        }
      else if (name == "Rdpkr")
        out.op = op::Rdpkr{ev.pkey("pkey")};
      else if (name == "SealStart")
        out.op = op::SealStart{ev.pkey("pkey"), ev.u64("addr")};
      else if (name == "SealEnd")
        out.op = op::SealEnd{ev.pkey("pkey"), ev.u64("addr")};
      else if (name == "Call")
        out.op = op::Call{ev.u64("fn"), ev.u64("ret")};
      else if (name == "Return")
        out.op = op::Return{ev.u64("ret")};
      else if (name == "SmashStack")
        out.op = op::SmashStack{ev.u64("slot"), ev.u64("value")};
      else if (name == "Mmap")
        out.op = op::Mmap{ev.pages("pages"), ev.prot("prot")};
      else if (name == "Munmap")
        out.op = op::Munmap{ev.pages("pages")};
      else if (name == "Syscall")
        out.op = parseSyscall(ev);
      else if (name == "Yield")
        out.op = op::Yield{};
      else
        throw ParseError(ev.at("op"), "unknown op '" + name + "'");
      ev.done();
      return out;
    }

    inline Expectation parseExpectation(const Json& j, const std::string& path)
    {
      ObjReader r(j, path);
      Expectation e;
      if (const Json* w = r.find("when"))
        {
          ObjReader wr(*w, r.at("when"));
          e.whenLazy = wr.boolean("lazy_dealloc");
          wr.done();
        }

      int kinds = 0;
      if (const Json* f = r.find("fault"))
        {
          ++kinds;
          ObjReader fr(*f, r.at("fault"));
          const std::string c = fr.str("cause");
          auto cause = parseFaultCause(c);
          if (not cause)
            throw ParseError(fr.at("cause"), "unknown fault cause '" + c + "'");
          expect::Fault x{*cause, std::nullopt, std::nullopt};
          if (auto t = fr.optU64("thread"))
            x.thread = static_cast<ThreadId>(*t);
          x.event = fr.optU64("event");
          fr.done();
          e.what = x;
        }
      if (const Json* s = r.find("event"))
        {
          ++kinds;
          ObjReader sr(*s, r.at("event"));
          expect::EventResult x;
          x.thread = static_cast<ThreadId>(sr.u64("thread"));
          x.index = sr.u64("index");
          if (sr.has("result"))
            {
              const std::string res = sr.str("result");
              if (not isResultName(res))
                throw ParseError(sr.at("result"), "unknown result '" + res + "'");
              x.result = res;
            }
          if (auto k = sr.optU64("key"))
            x.key = static_cast<unsigned>(*k);
          if (not x.result and not x.key)
            throw ParseError(sr.path(), "event expectation needs 'result' or 'key'");
          sr.done();
          e.what = x;
        }
      if (const Json* p = r.find("pkr"))
        {
          ++kinds;
          ObjReader pr(*p, r.at("pkr"));
          expect::Pair x;
          x.thread = static_cast<ThreadId>(pr.u64("thread"));
          x.pkey = pr.pkey("pkey");
          x.pair = PermPair{pr.boolean("rd"), pr.boolean("wd")};
          pr.done();
          e.what = x;
        }
      if (const Json* s = r.find("shared_key"))
        {
          ++kinds;
          e.what = expect::SharedKey{ObjReader::toBool(*s, r.at("shared_key"))};
        }
      if (const Json* n = r.find("refills"))
        {
          ++kinds;
          e.what = expect::Refills{ObjReader::toU64(*n, r.at("refills"))};
        }
      if (const Json* k = r.find("key_state"))
        {
          ++kinds;
          ObjReader kr(*k, r.at("key_state"));
          expect::KeyState x;
          x.pkey = kr.pkey("pkey");
          x.allocated = kr.optBool("allocated");
          x.dirty = kr.optBool("dirty");
          if (auto n = kr.optU64("pages"))
            x.pages = static_cast<std::uint32_t>(*n);
          kr.done();
          e.what = x;
        }
      if (const Json* n = r.find("no_faults"))
        {
          ++kinds;
          if (not ObjReader::toBool(*n, r.at("no_faults")))
            throw ParseError(r.at("no_faults"), "no_faults must be true");
          e.what = expect::NoFaults{};
        }
      if (kinds != 1)
        throw ParseError(path, "expectation needs exactly one of fault, event, pkr, "
                               "shared_key, refills, key_state, no_faults");
      r.done();
      return e;
    }

    inline SimConfig parseConfig(const Json& j, const std::string& path)
    {
      ObjReader r(j, path);
      SimConfig c;
      c.lazyDealloc = r.optBool("lazy_dealloc").value_or(c.lazyDealloc);
      c.continueOnFault = r.optBool("continue_on_fault").value_or(c.continueOnFault);
      if (auto cap = r.optU64("cam_capacity"))
        {
          if (*cap == 0)
            throw ParseError(r.at("cam_capacity"), "cam_capacity must be at least 1");
          c.camCapacity = *cap;
        }
      if (const Json* costs = r.find("costs"))
        {
          ObjReader cr(*costs, r.at("costs"));
          for (CostClass cls : kChargedClasses)
            if (auto v = cr.optU64(std::string(toString(cls))))
              c.costs.at(cls) = *v;
          cr.done();
        }
      r.done();
      return c;
    }

    inline Scenario parseDocument(const Json& root)
    {
      ObjReader r(root, "$");
      Scenario s;
      if (const auto* cfg = r.find("config"))
        s.config = parseConfig(*cfg, "config");

      const auto& threads = r.get("threads");
      if (not threads.is_array() or threads.empty())
        throw ParseError("threads", "expected a non-empty array");
      std::set<ThreadId> ids;
      for (std::size_t i = 0; i < threads.size(); ++i)
        {
          const std::string tpath = "threads[" + std::to_string(i) + "]";
          ObjReader tr(threads[i], tpath);
          ThreadTrace t;
          const std::uint64_t id = tr.u64("id");
          if (id > UINT32_MAX)
            throw ParseError(tr.at("id"), "thread id too large");
          t.id = static_cast<ThreadId>(id);
          if (not ids.insert(t.id).second)
            throw ParseError(tr.at("id"), "duplicate thread id " + std::to_string(t.id));
          const auto& events = tr.get("events");
          if (not events.is_array())
            throw ParseError(tr.at("events"), "expected an array");
          for (std::size_t k = 0; k < events.size(); ++k)
            t.events.push_back(parseEvent(events[k],
                                                  tpath + ".events[" + std::to_string(k) + "]"));
          tr.done();
          s.threads.push_back(std::move(t));
        }

      if (const auto* ex = r.find("expect"))
        {
          if (not ex->is_array())
            throw ParseError("expect", "expected an array");
          for (std::size_t i = 0; i < ex->size(); ++i)
            s.expectations.push_back(
                parseExpectation((*ex)[i], "expect[" + std::to_string(i) + "]"));
        }
      r.done();
      return s;
    }
  }


  /// Strict scenario parser. Unknown fields and op names are errors.
  inline Scenario parseScenario(std::string_view text)
  {
    detail::Json root;
    try
      {
        root = detail::Json::parse(text);
      }
    catch (const detail::Json::parse_error& e)
      {
        throw ParseError(detail::lineCol(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
      }

    try
      {
        return detail::parseDocument(root);
      }
    catch (const ParseError& e)
      {
        // Prefix the source position of the offending field when known.
        const auto at = detail::PathIndex(text).find(e.where());
        if (not at)
          throw;
        throw ParseError(detail::lineCol(text, *at) + " " + e.where(), e.message());
      }
  }


  /// Apply one "key=value" override (lazy_dealloc, continue_on_fault,
  /// cam_capacity, costs.<class>) on top of a parsed config.
  inline void applyConfigOverride(SimConfig& c, std::string_view kv)
  {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("--config", "expected key=value, got '" + std::string(kv) + "'");
    const std::string key(kv.substr(0, eq));
    const std::string val(kv.substr(eq + 1));

    auto flag = [&]() {
      if (val == "true" or val == "1")
        return true;
      if (val == "false" or val == "0")
        return false;
      throw ParseError("--config " + key, "expected true or false, got '" + val + "'");
    };
    auto number = [&]() -> std::uint64_t {
      if (val.empty() or val.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("--config " + key, "expected an unsigned integer, got '" + val + "'");
      return std::stoull(val);
    };

    if (key == "lazy_dealloc")
      c.lazyDealloc = flag();
    else if (key == "continue_on_fault")
      c.continueOnFault = flag();
    else if (key == "cam_capacity")
      {
        const auto n = number();
        if (n == 0)
          throw ParseError("--config cam_capacity", "must be at least 1");
        c.camCapacity = n;
      }
    else if (key.starts_with("costs."))
      {
        auto cls = parseCostClass(std::string_view(key).substr(6));
        if (not cls or *cls == CostClass::None)
          throw ParseError("--config " + key, "unknown cost class");
        c.costs.at(*cls) = number();
      }
    else
      throw ParseError("--config", "unknown key '" + key + "'");
  }



  namespace detail
  {
    using OJson = nlohmann::ordered_json;

    inline OJson toJson(const KeyRef& k)
    {
      if (k.fixed)
        return k.fixed->value();
      return "last_alloc";
    }

    inline OJson toJson(PageRange p) { return OJson{{"start", p.start}, {"count", p.count}}; }

    inline OJson toJson(const TraceEvent& ev)
    {
      OJson j;
      j["op"] = std::string(opName(ev.op));
      j["ia"] = ev.ia;
      std::visit(Overloaded{
          [&](const op::Load& o) {
            j["page"] = o.page;
            if (o.slot)
              j["slot"] = *o.slot;
          },
          [&](const op::Store& o) {
            j["page"] = o.page;
            if (o.data)
              {
                j["slot"] = o.data->slot;
                j["value"] = o.data->value;
              }
          },
          [&](const op::Wrpkr& o) {
            j["pkey"] = o.pkey.value();
            if (auto* row = std::get_if<std::uint64_t>(&o.value))
              j["row"] = *row;
            else
              {
                const PermPair p = std::get<PermPair>(o.value);
                j["pair"] = OJson{{"rd", p.readDisable}, {"wd", p.writeDisable}};
              }
          },
          [&](const op::Rdpkr& o) { j["pkey"] = o.pkey.value(); },
          [&](const op::SealStart& o) { j["pkey"] = o.pkey.value(); j["addr"] = o.addr; },
          [&](const op::SealEnd& o) { j["pkey"] = o.pkey.value(); j["addr"] = o.addr; },
          [&](const op::Call& o) { j["fn"] = o.fn; j["ret"] = o.ret; },
          [&](const op::Return& o) { j["ret"] = o.ret; },
          [&](const op::SmashStack& o) { j["slot"] = o.slot; j["value"] = o.value; },
          [&](const op::Mmap& o) { j["pages"] = toJson(o.pages); j["prot"] = toString(o.prot); },
          [&](const op::Munmap& o) { j["pages"] = toJson(o.pages); },
          [&](const Syscall& s) {
            j["name"] = std::string(syscallName(s));
            OJson a = OJson::object();
            std::visit(Overloaded{
                [&](const sys::PkeyAlloc& x) {
                  a["rd"] = x.init.readDisable;
                  a["wd"] = x.init.writeDisable;
                },
                [&](const sys::PkeyFree& x) { a["pkey"] = toJson(x.pkey); },
                [&](const sys::PkeyMprotect& x) {
                  a["pages"] = toJson(x.pages);
                  a["prot"] = toString(x.prot);
                  a["pkey"] = toJson(x.pkey);
                },
                [&](const sys::Mprotect& x) {
                  a["pages"] = toJson(x.pages);
                  a["prot"] = toString(x.prot);
                },
                [&](const sys::PkeySeal& x) {
                  a["pkey"] = toJson(x.pkey);
                  a["domain"] = x.domain;
                  a["page"] = x.page;
                },
                [&](const sys::PkeyPermSeal& x) { a["pkey"] = toJson(x.pkey); },
              }, s);
            j["args"] = a;
          },
          [&](const op::Yield&) { },
        }, ev.op);
      if (ev.instrumented)
        j["instrumented"] = true;
      return j;
    }

    inline OJson toJson(const Expectation& e)
    {
      OJson j;
      if (e.whenLazy)
        j["when"] = OJson{{"lazy_dealloc", *e.whenLazy}};
      std::visit(Overloaded{
          [&](const expect::Fault& x) {
            OJson f{{"cause", std::string(toString(x.cause))}};
            if (x.thread)
              f["thread"] = *x.thread;
            if (x.event)
              f["event"] = *x.event;
            j["fault"] = f;
          },
          [&](const expect::EventResult& x) {
            OJson s{{"thread", x.thread}, {"index", x.index}};
            if (x.result)
              s["result"] = *x.result;
            if (x.key)
              s["key"] = *x.key;
            j["event"] = s;
          },
          [&](const expect::Pair& x) {
            j["pkr"] = OJson{{"thread", x.thread}, {"pkey", x.pkey.value()},
                             {"rd", x.pair.readDisable}, {"wd", x.pair.writeDisable}};
          },
          [&](const expect::SharedKey& x) { j["shared_key"] = x.shared; },
          [&](const expect::Refills& x) { j["refills"] = x.count; },
          [&](const expect::KeyState& x) {
            OJson k{{"pkey", x.pkey.value()}};
            if (x.allocated)
              k["allocated"] = *x.allocated;
            if (x.dirty)
              k["dirty"] = *x.dirty;
            if (x.pages)
              k["pages"] = *x.pages;
            j["key_state"] = k;
          },
          [&](const expect::NoFaults&) { j["no_faults"] = true; },
        }, e.what);
      return j;
    }
  }


  inline nlohmann::ordered_json scenarioToJson(const Scenario& s)
  {
    using detail::OJson;
    OJson costs;
    for (CostClass c : kChargedClasses)
      costs[std::string(toString(c))] = s.config.costs[c];

    OJson root;
    root["config"] = OJson{{"lazy_dealloc", s.config.lazyDealloc},
                           {"cam_capacity", s.config.camCapacity},
                           {"continue_on_fault", s.config.continueOnFault},
                           {"costs", costs}};
    OJson threads = OJson::array();
    for (const auto& t : s.threads)
      {
        OJson events = OJson::array();
        for (const auto& ev : t.events)
          events.push_back(detail::toJson(ev));
        threads.push_back(OJson{{"id", t.id}, {"events", events}});
      }
    root["threads"] = threads;
    if (not s.expectations.empty())
      {
        OJson ex = OJson::array();
        for (const auto& e : s.expectations)
          ex.push_back(detail::toJson(e));
        root["expect"] = ex;
      }
    return root;
  }

  inline std::string renderScenario(const Scenario& s)
  { return scenarioToJson(s).dump(2) + "\n"; }

}
