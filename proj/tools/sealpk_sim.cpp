// sealpk-sim: run scenario files, built-in scenarios and the shadow-stack
// case study from the command line.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <sealpk.hpp>

namespace
{

  using namespace sealpk;

  std::string readFile(const std::string& path)
  {
    std::ifstream in(path, std::ios::binary);
    if (not in)
      throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void writeFile(const std::string& path, const std::string& text)
  {
    std::ofstream out(path, std::ios::binary);
    if (not out)
      throw std::runtime_error("cannot write '" + path + "'");
    out << text;
  }

  struct RunOptions
  {
    std::string report = "text";
    std::string logPath;
    std::vector<std::string> overrides;
    bool quiet = false;
  };

  /// Run a scenario, print the report and the expectation outcomes.
  /// Returns the process exit status.
  int execute(Scenario s, const RunOptions& o)
  {
    for (const auto& kv : o.overrides)
      applyConfigOverride(s.config, kv);
    const auto format = parseReportFormat(o.report);
    if (not format)
      throw std::runtime_error("unknown report format '" + o.report + "'");

    Machine m(s);
    const EventLog& log = m.run();
    const std::string rendered = renderReport(log, *format);
    if (not o.logPath.empty())
      writeFile(o.logPath, rendered);
    else if (not o.quiet)
      std::cout << rendered;

    for (const auto& r : log.records)
      if (r.kind == RecordKind::Alert)
        std::cerr << "alert: " << r.op << " pkey " << r.pkey.value_or(0) << " still tags "
                  << r.value.value_or(0) << " page(s) (thread " << r.thread << ")\n";

    const auto outcomes = evaluate(s.expectations, m);
    for (const auto& e : outcomes)
      {
        const char* tag = e.skipped ? "SKIP" : (e.met ? "ok  " : "FAIL");
        std::cerr << "expect " << tag << " " << e.description;
        if (not e.skipped and not e.met)
          std::cerr << " (observed: " << e.observed << ")";
        std::cerr << "\n";
      }
    return allMet(outcomes) ? 0 : 1;
  }

  /// Shadow-stack traces only carry control-flow events.
  Scenario loadTrace(const std::string& path)
  {
    Scenario s = parseScenario(readFile(path));
    for (std::size_t k = 0; k < s.threads.size(); ++k)
      for (std::size_t i = 0; i < s.threads[k].events.size(); ++i)
        {
          const Op& op = s.threads[k].events[i].op;
          if (not (std::holds_alternative<op::Call>(op) or std::holds_alternative<op::Return>(op)
                   or std::holds_alternative<op::SmashStack>(op)
                   or std::holds_alternative<op::Yield>(op)))
            throw ParseError("threads[" + std::to_string(k) + "].events[" + std::to_string(i) + "]",
                             std::string("op ") + std::string(opName(op))
                             + " not allowed in a shadow-stack trace");
        }
    return s;
  }

}


int main(int argc, char** argv)
{
  CLI::App app{"SealPK desk-scale simulator"};
  app.require_subcommand(1);

  RunOptions opts;
  auto addRunFlags = [&](CLI::App* sub) {
    sub->add_option("--report", opts.report, "report format: json or text")
        ->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--log", opts.logPath, "write the report to this file instead of stdout");
    sub->add_option("--config", opts.overrides, "override a config key (key=value)");
    sub->add_flag("--quiet", opts.quiet, "do not print the report");
  };

  std::string file;
  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("file", file, "scenario file")->required();
  addRunFlags(run);

  std::string name;
  bool dump = false;
  auto* builtin = app.add_subcommand("builtin", "run a built-in scenario");
  builtin->add_option("name", name, "scenario name (see 'list')")->required();
  builtin->add_flag("--dump", dump, "print the scenario file instead of running it");
  addRunFlags(builtin);

  auto* list = app.add_subcommand("list", "list built-in scenarios");

  std::string variantName;
  auto* ss = app.add_subcommand("shadowstack", "run a call/return trace under one shadow-stack variant");
  ss->add_option("trace", file, "trace file")->required();
  ss->add_option("--variant", variantName, "unprotected, sealpk-wr, sealpk-rdrw or mprotect")
      ->required()
      ->check(CLI::IsMember({"unprotected", "sealpk-wr", "sealpk-rdrw", "mprotect"}));
  std::string ssReport;
  ss->add_option("--report", ssReport, "also print the event log (json or text)")
      ->check(CLI::IsMember({"json", "text"}));

  auto* cmp = app.add_subcommand("shadowstack-compare", "cost of one trace under every variant");
  cmp->add_option("trace", file, "trace file")->required();

  CLI11_PARSE(app, argc, argv);

  try
    {
      if (*run)
        return execute(parseScenario(readFile(file)), opts);

      if (*builtin)
        {
          auto s = builtinScenario(name);
          if (not s)
            {
              std::cerr << "unknown built-in scenario '" << name << "'\n";
              return 2;
            }
          if (dump)
            {
              for (const auto& kv : opts.overrides)
                applyConfigOverride(s->config, kv);
              std::cout << renderScenario(*s);
              return 0;
            }
          return execute(std::move(*s), opts);
        }

      if (*list)
        {
          for (const auto& b : builtins())
            std::cout << std::left << std::setw(20) << b.name << b.summary << "\n";
          return 0;
        }

      if (*ss)
        {
          const Variant v = *parseVariant(variantName);
          const auto r = runShadowStack(loadTrace(file), v);
          if (not ssReport.empty())
            std::cout << renderReport(r.machine.log(), *parseReportFormat(ssReport));
          const auto& d = r.detection;
          std::cout << "variant " << toString(v) << "\n";
          std::cout << "returns checked " << d.returnsChecked << "\n";
          std::cout << "mismatches " << d.mismatches.size() << "\n";
          for (const auto& f : d.mismatches)
            std::cout << "  thread " << f.thread << " event " << (f.event ? std::to_string(*f.event) : "-")
                      << " shadow 0x" << std::hex << f.shadow << " target 0x" << f.target << std::dec
                      << "\n";
          std::cout << "setup cycles " << r.setupCycles << "\n";
          std::cout << "trace cycles " << r.traceCycles << "\n";
          std::cout << "toggle cycles " << r.toggleCycles << "\n";
          return 0;
        }

      if (*cmp)
        {
          const auto c = compareCosts(loadTrace(file));
          std::cout << std::left << std::setw(14) << "variant" << std::setw(14) << "setup"
                    << std::setw(14) << "trace" << "toggle\n";
          for (const auto& row : c.rows)
            std::cout << std::left << std::setw(14) << toString(row.variant) << std::setw(14)
                      << row.setupCycles << std::setw(14) << row.traceCycles << row.toggleCycles << "\n";
          std::cout << std::fixed << std::setprecision(3);
          std::cout << "toggle ratio mprotect/sealpk-rdrw " << c.toggleRatio << "\n";
          std::cout << "trace ratio mprotect/sealpk-rdrw " << c.traceRatio << "\n";
          std::cout << "note: inline and function-call front ends both run as 'unprotected'\n";
          return 0;
        }
    }
  catch (const ParseError& e)
    {
      std::cerr << "parse error: " << e.what() << "\n";
      return 2;
    }
  catch (const std::exception& e)
    {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  return 0;
}
