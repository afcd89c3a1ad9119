#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "coapicn/scenario/compare.hpp"
#include "coapicn/scenario/metrics.hpp"
#include "coapicn/scenario/parser.hpp"
#include "coapicn/scenario/runner.hpp"

using namespace coapicn;
using endpoints::ClientAction;
using scenario::CompareError;
using scenario::ConfigError;
using scenario::ParseError;
using scenario::ScenarioConfig;
using scenario::ScenarioMismatch;
using scenario::ScenarioRun;

namespace {

std::string scenarioPath(const std::string& name) {
  return std::string(COAPICN_SCENARIO_DIR) + "/" + name;
}

}  // namespace

// ---- parser ----------------------------------------------------------

TEST_CASE("scenario text parses into a full config") {
  const std::string text = R"(
# full-grammar reference input
scenario everything
seed 42
control_latency 2
rv_node hub
rd_nap hub
anycast first_advertiser

node hub
node edge1
node edge2
link hub edge1 3
link hub edge2 1

server srv nap=edge1 host=box.example group=all.example,lights.example register_at=5
resource srv /state value=off rt=switch obs
resource srv /info/build available_at=20

client cli nap=edge2
action cli get at=10 host=box.example path=/state query=unit=c query=alt=1
action cli observe at=30 host=box.example path=/state
action cli cancel at=90 host=box.example path=/state
action cli group_get at=40 host=all.example path=/state non

update at=50 server=srv path=/state value=on
)";

  auto cfg = scenario::parseScenario(text);
  CHECK(cfg.name == "everything");
  CHECK(cfg.seed == 42);
  CHECK(cfg.control_latency == 2);
  CHECK(cfg.rv_node == "hub");
  CHECK(cfg.rd_nap == "hub");
  CHECK(cfg.anycast.kind == nap::AnycastPolicyKind::FirstAdvertiser);
  CHECK(cfg.nodes == std::vector<icn::NodeId>{"hub", "edge1", "edge2"});
  REQUIRE(cfg.links.size() == 2);
  CHECK(cfg.links[0].a == "hub");
  CHECK(cfg.links[0].b == "edge1");
  CHECK(cfg.links[0].latency == 3);

  REQUIRE(cfg.servers.size() == 1);
  const auto& s = cfg.servers[0];
  CHECK(s.id == "srv");
  CHECK(s.nap == "edge1");
  CHECK(s.host == "box.example");
  CHECK(s.groups == std::vector<std::string>{"all.example", "lights.example"});
  CHECK(s.register_at == 5);
  REQUIRE(s.resources.size() == 2);
  CHECK(s.resources[0].path == std::vector<std::string>{"state"});
  CHECK(s.resources[0].rt == "switch");
  CHECK(s.resources[0].value == toBytes("off"));
  CHECK(s.resources[0].observable);
  CHECK(s.resources[1].path == std::vector<std::string>{"info", "build"});
  CHECK(s.resources[1].available_at == 20);
  CHECK_FALSE(s.resources[1].observable);

  REQUIRE(cfg.clients.size() == 1);
  const auto& c = cfg.clients[0];
  CHECK(c.id == "cli");
  CHECK(c.nap == "edge2");
  REQUIRE(c.actions.size() == 4);
  CHECK(c.actions[0].kind == ClientAction::Kind::Get);
  CHECK(c.actions[0].at == 10);
  CHECK(c.actions[0].host == "box.example");
  CHECK(c.actions[0].path == std::vector<std::string>{"state"});
  // query values keep their inner '=' and their order
  CHECK(c.actions[0].query == std::vector<std::string>{"unit=c", "alt=1"});
  CHECK(c.actions[0].confirmable);
  CHECK(c.actions[1].kind == ClientAction::Kind::Observe);
  CHECK(c.actions[2].kind == ClientAction::Kind::Cancel);
  CHECK(c.actions[3].kind == ClientAction::Kind::GroupGet);
  CHECK_FALSE(c.actions[3].confirmable);

  REQUIRE(cfg.updates.size() == 1);
  CHECK(cfg.updates[0].at == 50);
  CHECK(cfg.updates[0].server == "srv");
  CHECK(cfg.updates[0].path == std::vector<std::string>{"state"});
  CHECK(cfg.updates[0].value == toBytes("on"));

  cfg.validate();  // the reference input is also referentially sound
}

TEST_CASE("parse problems are reported together with line numbers") {
  const std::string text =
      "scenario broken\n"           // 1
      "node a\n"                    // 2
      "link a\n"                    // 3: missing arguments
      "resource ghost /x\n"         // 4: undeclared server
      "client c nap=a\n"            // 5
      "action c fly at=1 host=h\n"  // 6: unknown action kind
      "action c get at=9\n"         // 7: missing host=
      "warp 9\n";                   // 8: unknown directive
  try {
    scenario::parseScenario(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find("scenario parse failed") != std::string::npos);
    CHECK(msg.find("line 3:") != std::string::npos);
    CHECK(msg.find("line 4: resource for undeclared server ghost") !=
          std::string::npos);
    CHECK(msg.find("line 6: unknown action kind fly") != std::string::npos);
    CHECK(msg.find("line 7: missing host=") != std::string::npos);
    CHECK(msg.find("line 8: unknown directive warp") != std::string::npos);
    // the good lines did not produce noise
    CHECK(msg.find("line 2:") == std::string::npos);
  }
}

TEST_CASE("parser rejects malformed values") {
  CHECK_THROWS_AS(scenario::parseScenario("seed banana\n"), ParseError);
  CHECK_THROWS_AS(scenario::parseScenario("node a\nlink a a x\n"), ParseError);
  CHECK_THROWS_AS(
      scenario::parseScenario("server s nap=a host=h\nresource s noslash\n"),
      ParseError);
  CHECK_THROWS_AS(
      scenario::parseScenario("server s nap=a host=h\nresource s //x\n"),
      ParseError);
  CHECK_THROWS_AS(
      scenario::parseScenario("server s nap=a host=h\n"
                              "server s nap=a host=h2\n"),
      ParseError);
  CHECK_THROWS_AS(scenario::parseScenario("anycast nearest\n"), ParseError);
  // key given twice where one value is expected
  CHECK_THROWS_AS(scenario::parseScenario("server s nap=a nap=b host=h\n"),
                  ParseError);
}

TEST_CASE("config validation collects referential errors") {
  ScenarioConfig cfg;
  cfg.name = "bad";
  cfg.rv_node = "nowhere";       // unknown node
  cfg.rd_nap = "a";
  cfg.nodes = {"a", "b", "a"};   // duplicate
  cfg.links = {{"a", "a", 1},    // self link
               {"a", "b", 0}};   // zero latency
  endpoints::ServerConfig s;
  s.id = "dup";
  s.nap = "ghost";               // unknown nap
  s.host = "rd";                 // collides with the directory host
  cfg.servers = {s};             // also: no resources
  endpoints::ClientConfig c;
  c.id = "dup";                  // same endpoint id as the server
  c.nap = "b";
  c.actions.push_back(
      {5, ClientAction::Kind::Cancel, "x.example", {"p"}, {}, true});
  cfg.clients = {c};
  cfg.updates.push_back({9, "nosuch", {"p"}, toBytes("v")});

  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    for (const char* expect :
         {"node a declared twice", "rv_node references unknown node nowhere",
          "self link", "zero latency", "server dup references unknown node",
          "claims the directory host", "has no resources",
          "endpoint id dup used twice", "cancels x.example",
          "references unknown server nosuch"}) {
      INFO(expect);
      CHECK(msg.find(expect) != std::string::npos);
    }
  }
}

TEST_CASE("update for a resource the server does not serve is rejected") {
  auto cfg = scenario::loadScenario(scenarioPath("minimal.scn"));
  cfg.updates.push_back({50, "s", {"nope"}, toBytes("x")});
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("disconnected topologies cannot run") {
  ScenarioConfig cfg;
  cfg.name = "split";
  cfg.rv_node = "a";
  cfg.rd_nap = "a";
  cfg.nodes = {"a", "b"};  // no links at all
  CHECK_THROWS_AS(ScenarioRun(cfg, nap::NapMode::Icn), ConfigError);
}

// ---- running and metrics ---------------------------------------------

TEST_CASE("minimal scenario completes in both modes") {
  for (auto mode : {nap::NapMode::Icn, nap::NapMode::Baseline}) {
    INFO(nap::name(mode));
    auto cfg = scenario::loadScenario(scenarioPath("minimal.scn"));
    ScenarioRun run(cfg, mode);
    run.run();
    REQUIRE(run.client("c").conversations().size() == 1);
    const auto& conv = run.client("c").conversations()[0];
    REQUIRE(conv.responses.size() == 1);
    CHECK(conv.responses[0].code == coap::codes::Content);
    CHECK(conv.responses[0].payload == toBytes("ok"));
    CHECK(run.server("s").requestsReceived() == 1);
  }
}

TEST_CASE("a run cannot be repeated") {
  ScenarioRun run(scenario::loadScenario(scenarioPath("minimal.scn")),
                  nap::NapMode::Icn);
  run.run();
  CHECK_THROWS_AS(run.run(), Error);
}

TEST_CASE("identical runs produce identical logs and metrics") {
  auto once = [](nap::NapMode mode) {
    ScenarioRun run(scenario::loadScenario(scenarioPath("fig3.scn")), mode);
    run.run();
    return std::make_pair(run.log().str(),
                          scenario::collectMetrics(run).csv());
  };
  for (auto mode : {nap::NapMode::Icn, nap::NapMode::Baseline}) {
    INFO(nap::name(mode));
    auto a = once(mode);
    auto b = once(mode);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
}

TEST_CASE("metrics csv round-trips through the comparison parser") {
  ScenarioRun run(scenario::loadScenario(scenarioPath("minimal.scn")),
                  nap::NapMode::Icn);
  run.run();
  auto csv = scenario::collectMetrics(run).csv();

  auto parsed = scenario::parseMetricsCsv(csv);
  CHECK(parsed.meta.at("scenario") == "minimal");
  CHECK(parsed.meta.at("mode") == "icn");
  CHECK(parsed.meta.at("seed") == "1");
  CHECK(parsed.values.at("server,s:requests") == 1);
  CHECK(parsed.values.at("client,c:responses") == 1);
  CHECK(parsed.values.count("total,request") == 1);
  CHECK(parsed.values.count("sim,events") == 1);
  // file order is preserved for the comparison table
  CHECK(parsed.order.front().rfind("link,", 0) == 0);
}

TEST_CASE("comparing the two modes reports the multicast savings") {
  auto csvFor = [](nap::NapMode mode) {
    ScenarioRun run(scenario::loadScenario(scenarioPath("observe4.scn")), mode);
    run.run();
    return scenario::collectMetrics(run).csv();
  };
  auto icn = csvFor(nap::NapMode::Icn);
  auto base = csvFor(nap::NapMode::Baseline);

  auto out = scenario::compareCsvTexts(icn, base);
  CHECK(out.find("scenario observe4") != std::string::npos);
  CHECK(out.find("a: mode=icn") != std::string::npos);
  CHECK(out.find("b: mode=baseline") != std::string::npos);
  CHECK(out.find("total,notify") != std::string::npos);
  // 15 icn vs 24 baseline notify transmissions -> 0.375 saved
  CHECK(out.find("multicast_savings(notify) = 0.3750") != std::string::npos);
  CHECK(out.find("(icn 15 vs baseline 24 link transmissions)") !=
        std::string::npos);

  // column order must not change the savings direction
  auto flipped = scenario::compareCsvTexts(base, icn);
  CHECK(flipped.find("multicast_savings(notify) = 0.3750") !=
        std::string::npos);
}

TEST_CASE("comparison refuses csvs from different scenarios") {
  auto csvFor = [](const std::string& file) {
    ScenarioRun run(scenario::loadScenario(scenarioPath(file)),
                    nap::NapMode::Icn);
    run.run();
    return scenario::collectMetrics(run).csv();
  };
  CHECK_THROWS_AS(
      scenario::compareCsvTexts(csvFor("minimal.scn"), csvFor("fig3.scn")),
      ScenarioMismatch);
}

TEST_CASE("comparison rejects malformed csv input") {
  CHECK_THROWS_AS(scenario::parseMetricsCsv("just one field\n"), CompareError);
  CHECK_THROWS_AS(
      scenario::parseMetricsCsv("section,key,value\ntotal,request,many\n"),
      CompareError);
  // numeric rows alone are not enough: the scenario meta row is required
  CHECK_THROWS_AS(scenario::parseMetricsCsv("total,request,5\n"), CompareError);
}
