#include <string>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace sealpk;

namespace
{
  std::string withEvent(const std::string& event)
  {
    return R"({"threads": [{"id": 0, "events": [)" + event + "]}]}";
  }

  ParseError parseFailure(const std::string& text)
  {
    try
      {
        parseScenario(text);
      }
    catch (const ParseError& e)
      {
        return e;
      }
    ADD_FAILURE() << "parsed: " << text;
    return ParseError("", "");
  }
}


TEST(ScenarioIo, MinimalFileTakesDefaults)
{
  const Scenario s = parseScenario(withEvent(R"({"op": "Load", "ia": 16, "page": 3})"));
  ASSERT_EQ(s.threads.size(), 1u);
  ASSERT_EQ(s.threads[0].events.size(), 1u);
  EXPECT_EQ(s.config, SimConfig{});
  EXPECT_EQ(s.config.costs[CostClass::Mprotect], 1094u);
  const auto* ld = std::get_if<op::Load>(&s.threads[0].events[0].op);
  ASSERT_TRUE(ld);
  EXPECT_EQ(ld->page, 3u);
}

TEST(ScenarioIo, UnknownOpNamesTokenAndPosition)
{
  const std::string text = "{\"threads\": [{\"id\": 0, \"events\": [\n"
                           "  {\"op\": \"Wrpkru\", \"ia\": 4, \"pkey\": 1, \"row\": 0}]}]}";
  const auto e = parseFailure(text);
  EXPECT_NE(std::string(e.what()).find("Wrpkru"), std::string::npos) << e.what();
  EXPECT_EQ(e.where().rfind("2:", 0), 0u) << e.where();
  EXPECT_NE(e.where().find("threads[0].events[0]"), std::string::npos) << e.where();
}

TEST(ScenarioIo, KeyOutOfRange)
{
  const auto e = parseFailure(withEvent(R"({"op": "Rdpkr", "ia": 4, "pkey": 1024})"));
  EXPECT_NE(e.where().find("pkey"), std::string::npos) << e.what();
}

TEST(ScenarioIo, UnknownFieldRejected)
{
  const auto e = parseFailure(withEvent(R"({"op": "Load", "ia": 4, "page": 1, "size": 8})"));
  EXPECT_NE(std::string(e.what()).find("size"), std::string::npos) << e.what();
  parseFailure(R"({"threads": [], "extra": 1})");
}

TEST(ScenarioIo, PageBeyondAddressSpace)
{
  parseFailure(withEvent(R"({"op": "Load", "ia": 4, "page": 134217728})"));
  EXPECT_NO_THROW(parseScenario(withEvent(R"({"op": "Load", "ia": 4, "page": 134217727})")));
  parseFailure(withEvent(R"({"op": "Mmap", "ia": 4, "pages": {"start": 134217727, "count": 2}, "prot": "r"})"));
}

TEST(ScenarioIo, DuplicateThreadIds)
{
  parseFailure(R"({"threads": [{"id": 1, "events": []}, {"id": 1, "events": []}]})");
}

TEST(ScenarioIo, MalformedJsonHasLineAndColumn)
{
  const auto e = parseFailure("{\n  \"threads\": [\n    {\"id\": 0,,}\n]}");
  EXPECT_EQ(e.where().rfind("3:", 0), 0u) << e.where();
}

TEST(ScenarioIo, UnknownSyscall)
{
  const auto e = parseFailure(withEvent(R"({"op": "Syscall", "ia": 4, "name": "pkey_steal", "args": {}})"));
  EXPECT_NE(std::string(e.what()).find("pkey_steal"), std::string::npos) << e.what();
}

TEST(ScenarioIo, RenderParseRoundTrip)
{
  for (const auto& b : builtins())
    {
      const Scenario s = b.make();
      ASSERT_EQ(parseScenario(renderScenario(s)), s) << b.name;
    }
  for (std::uint64_t seed = 0; seed < 300; ++seed)
    {
      const Scenario s = fuzz::RandomScenario(seed).scenario();
      const std::string once = renderScenario(s);
      const Scenario back = parseScenario(once);
      ASSERT_EQ(back, s) << seed;
      ASSERT_EQ(renderScenario(back), once) << seed;
    }
}

TEST(ConfigOverride, AppliesAndValidates)
{
  SimConfig c;
  applyConfigOverride(c, "lazy_dealloc=false");
  applyConfigOverride(c, "cam_capacity=2");
  applyConfigOverride(c, "costs.mprotect=2000");
  applyConfigOverride(c, "continue_on_fault=1");
  EXPECT_FALSE(c.lazyDealloc);
  EXPECT_TRUE(c.continueOnFault);
  EXPECT_EQ(c.camCapacity, 2u);
  EXPECT_EQ(c.costs[CostClass::Mprotect], 2000u);

  EXPECT_THROW(applyConfigOverride(c, "cam_capacity=0"), ParseError);
  EXPECT_THROW(applyConfigOverride(c, "costs.none=1"), ParseError);
  EXPECT_THROW(applyConfigOverride(c, "costs.wrpkr=-1"), ParseError);
  EXPECT_THROW(applyConfigOverride(c, "lazy_dealloc=maybe"), ParseError);
  EXPECT_THROW(applyConfigOverride(c, "speed=11"), ParseError);
  EXPECT_THROW(applyConfigOverride(c, "lazy_dealloc"), ParseError);
}


TEST(Report, EmptyLogIsValidJson)
{
  const auto j = nlohmann::json::parse(renderReport(EventLog{}, ReportFormat::Json));
  EXPECT_TRUE(j.at("events").empty());
  EXPECT_TRUE(j.at("faults").empty());
  EXPECT_EQ(j.at("cycles").at("total"), 0);
  EXPECT_EQ(j.at("refills"), 0);
  EXPECT_EQ(parseTextReport(renderReport(EventLog{}, ReportFormat::Text)), EventLog{});
}

// Both renderings carry the whole log: reading either back gives it again.
TEST(Report, JsonAndTextCarrySameLog)
{
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    {
      Machine m(fuzz::RandomScenario(seed).scenario());
      const EventLog& log = m.run();
      ASSERT_EQ(parseJsonReport(renderReport(log, ReportFormat::Json)), log) << seed;
      ASSERT_EQ(parseTextReport(renderReport(log, ReportFormat::Text)), log) << seed;
    }
}

TEST(Report, FaultEntriesCarryKey)
{
  Machine m(*builtinScenario("write-denied"));
  const auto j = nlohmann::json::parse(renderReport(m.run(), ReportFormat::Json));
  ASSERT_EQ(j.at("faults").size(), 1u);
  const auto& f = j.at("faults")[0];
  EXPECT_EQ(f.at("cause"), "PkeyDenied");
  EXPECT_EQ(f.at("kind"), "Store");
  EXPECT_EQ(f.at("pkey"), 1);
  EXPECT_EQ(f.at("page"), 87);
}


TEST(Builtins, AllExpectationsMet)
{
  for (const auto& b : builtins())
    {
      const Scenario s = b.make();
      Machine m(s);
      m.run();
      for (const auto& o : evaluate(s.expectations, m))
        EXPECT_TRUE(o.met) << b.name << ": " << o.description << " " << o.observed;
    }
}
