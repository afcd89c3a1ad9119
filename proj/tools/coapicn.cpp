// Command line front end: run a scenario in either forwarding mode and dump
// metrics/logs, or compare two metric files side by side.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "coapicn/scenario/compare.hpp"
#include "coapicn/scenario/metrics.hpp"
#include "coapicn/scenario/parser.hpp"
#include "coapicn/scenario/runner.hpp"

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw coapicn::Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int runScenario(const std::string& path, const std::string& mode,
                std::optional<std::uint64_t> seed, const std::string& csvOut,
                const std::string& logOut) {
  auto cfg = coapicn::scenario::loadScenario(path);
  if (seed) cfg.seed = *seed;
  auto napMode = mode == "baseline" ? coapicn::nap::NapMode::Baseline
                                    : coapicn::nap::NapMode::Icn;
  coapicn::scenario::ScenarioRun run(std::move(cfg), napMode);
  run.run();

  auto report = coapicn::scenario::collectMetrics(run);
  if (!csvOut.empty()) {
    std::ofstream f(csvOut, std::ios::binary);
    if (!f) throw coapicn::Error("cannot write " + csvOut);
    f << report.csv();
  }
  if (!logOut.empty()) run.log().write(logOut);

  std::cout << "scenario " << run.config().name << " mode=" << mode
            << " seed=" << run.config().seed << "\n";
  std::cout << "  events=" << run.executedEvents()
            << " final_tick=" << run.finalTick() << "\n";
  for (const auto& row : report.rows) {
    if (row.section == "total" || row.section == "control")
      std::cout << "  " << row.section << "." << row.key << "=" << row.value
                << "\n";
  }
  for (const auto& c : run.clients()) {
    std::uint64_t responses = 0;
    for (const auto& conv : c->conversations()) responses += conv.responses.size();
    std::cout << "  client " << c->config().id << ": "
              << c->conversations().size() << " requests, " << responses
              << " responses\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CoAP-over-named-objects network simulator"};
  app.require_subcommand(1);

  std::string scenarioPath, mode = "icn", csvOut, logOut;
  std::optional<std::uint64_t> seed;
  auto* runCmd = app.add_subcommand("run", "simulate one scenario file");
  runCmd->add_option("scenario", scenarioPath, "scenario file")->required();
  runCmd->add_option("--mode", mode, "forwarding mode")
      ->check(CLI::IsMember({"icn", "baseline"}));
  runCmd->add_option("--seed", seed, "override the scenario seed");
  runCmd->add_option("--csv", csvOut, "write metrics CSV here");
  runCmd->add_option("--log", logOut, "write the event log here");

  std::string csvA, csvB;
  auto* cmpCmd = app.add_subcommand("compare", "diff two metrics CSV files");
  cmpCmd->add_option("csv-a", csvA, "first metrics file")->required();
  cmpCmd->add_option("csv-b", csvB, "second metrics file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (runCmd->parsed())
      return runScenario(scenarioPath, mode, seed, csvOut, logOut);
    std::cout << coapicn::scenario::compareCsvTexts(readFile(csvA),
                                                    readFile(csvB));
    return 0;
  } catch (const coapicn::scenario::RuntimeInvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
