#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "coapicn/bytes.hpp"
#include "coapicn/endpoints/client.hpp"
#include "coapicn/endpoints/server.hpp"
#include "coapicn/icn/name.hpp"
#include "coapicn/nap/anycast.hpp"

namespace coapicn::scenario {

class ConfigError : public Error {
public:
  using Error::Error;
};

struct LinkSpec {
  icn::NodeId a;
  icn::NodeId b;
  Tick latency = 1;
};

// Scheduled change to a server resource; drives observe notifications.
struct ResourceUpdate {
  Tick at = 0;
  std::string server;
  std::vector<std::string> path;
  Bytes value;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 1;
  Tick control_latency = 1;
  icn::NodeId rv_node;
  icn::NodeId rd_nap;
  std::string rd_host = "rd";
  nap::AnycastPolicy anycast{};
  std::vector<icn::NodeId> nodes;
  std::vector<LinkSpec> links;
  std::vector<endpoints::ServerConfig> servers;
  std::vector<endpoints::ClientConfig> clients;
  std::vector<ResourceUpdate> updates;

  // Referential checks; syntax problems are the parser's job. All
  // violations are reported at once.
  void validate() const {
    std::vector<std::string> errs;
    auto fail = [&errs](std::string msg) { errs.push_back(std::move(msg)); };

    if (name.empty()) fail("scenario has no name");
    if (nodes.empty()) fail("scenario declares no nodes");

    std::set<icn::NodeId> nodeSet;
    for (const auto& n : nodes) {
      if (!nodeSet.insert(n).second) fail("node " + n + " declared twice");
    }
    auto requireNode = [&](const icn::NodeId& n, const std::string& where) {
      if (!nodeSet.count(n)) fail(where + " references unknown node " + n);
    };

    if (rv_node.empty()) fail("rv_node not set");
    else requireNode(rv_node, "rv_node");
    if (rd_nap.empty()) fail("rd_nap not set");
    else requireNode(rd_nap, "rd_nap");

    for (const auto& l : links) {
      requireNode(l.a, "link " + l.a + "-" + l.b);
      requireNode(l.b, "link " + l.a + "-" + l.b);
      if (l.a == l.b) fail("link " + l.a + "-" + l.b + " is a self link");
      if (l.latency == 0) fail("link " + l.a + "-" + l.b + " has zero latency");
    }

    std::set<std::string> endpointIds;
    std::map<std::string, const endpoints::ServerConfig*> serverById;
    for (const auto& s : servers) {
      if (s.id.empty()) fail("server without id");
      if (!endpointIds.insert(s.id).second)
        fail("endpoint id " + s.id + " used twice");
      serverById[s.id] = &s;
      requireNode(s.nap, "server " + s.id);
      if (s.host.empty()) fail("server " + s.id + " has no host");
      if (s.host == rd_host)
        fail("server " + s.id + " claims the directory host " + rd_host);
      if (s.resources.empty()) fail("server " + s.id + " has no resources");
      for (const auto& r : s.resources) {
        if (r.path.empty())
          fail("server " + s.id + " has a resource with an empty path");
      }
    }

    for (const auto& c : clients) {
      if (c.id.empty()) fail("client without id");
      if (!endpointIds.insert(c.id).second)
        fail("endpoint id " + c.id + " used twice");
      requireNode(c.nap, "client " + c.id);
      for (std::size_t i = 0; i < c.actions.size(); ++i) {
        const auto& a = c.actions[i];
        if (a.host.empty())
          fail("client " + c.id + " action " + std::to_string(i) +
               " has no host");
        if (a.kind == endpoints::ClientAction::Kind::Cancel) {
          bool covered = false;
          for (std::size_t j = 0; j < i; ++j) {
            const auto& prev = c.actions[j];
            if (prev.kind == endpoints::ClientAction::Kind::Observe &&
                prev.host == a.host && prev.path == a.path && prev.at <= a.at)
              covered = true;
          }
          if (!covered)
            fail("client " + c.id + " cancels " + a.host +
                 " without an earlier observe");
        }
      }
    }

    for (const auto& u : updates) {
      auto it = serverById.find(u.server);
      if (it == serverById.end()) {
        fail("update at t=" + std::to_string(u.at) +
             " references unknown server " + u.server);
        continue;
      }
      bool found = false;
      for (const auto& r : it->second->resources)
        if (r.path == u.path) found = true;
      if (!found)
        fail("update at t=" + std::to_string(u.at) + " targets " + u.server +
             " resource it does not serve");
    }

    if (!errs.empty()) {
      std::string msg = "invalid scenario";
      if (!name.empty()) msg += " " + name;
      for (const auto& e : errs) msg += "\n  " + e;
      throw ConfigError(msg);
    }
  }
};

}  // namespace coapicn::scenario
