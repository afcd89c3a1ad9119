#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coapicn/endpoints/client.hpp"
#include "coapicn/endpoints/server.hpp"
#include "coapicn/nap/nap.hpp"
#include "coapicn/rd/directory.hpp"
#include "coapicn/scenario/config.hpp"
#include "coapicn/sim/fabric.hpp"
#include "coapicn/sim/log.hpp"
#include "coapicn/sim/scheduler.hpp"

namespace coapicn::scenario {

// A check that must hold after every run, regardless of scenario: message
// conservation on the fabric, registration liveness, request liveness.
class RuntimeInvariantViolation : public Error {
public:
  using Error::Error;
};

// Owns one complete simulation: topology, fabric, one NAP per node, the
// resource directory, and all scripted endpoints. Everything is wired at
// construction; run() drains the scheduler and checks invariants.
class ScenarioRun {
public:
  ScenarioRun(ScenarioConfig cfg, nap::NapMode mode)
      : cfg_(validated(std::move(cfg))),
        mode_(mode),
        topo_(buildTopology(cfg_)),
        fabric_(sched_, topo_, log_, cfg_.rv_node, cfg_.control_latency,
                cfg_.anycast) {
    log_.header(cfg_.name, nap::name(mode_), cfg_.seed);

    for (const auto& n : cfg_.nodes)
      naps_.emplace(n, std::make_unique<nap::Nap>(
                           n, mode_, fabric_, sched_, log_, cfg_.seed,
                           cfg_.rd_host, cfg_.rd_nap));

    // The directory is an ordinary server-role endpoint on its NAP; its
    // watch feed fans registrations out to every NAP as control traffic.
    napAt(cfg_.rd_nap)->attachEndpoint(
        {cfg_.rd_host, cfg_.rd_host, {}, true,
         [this](const std::string& from, const coap::CoapMessage& msg) {
           if (!msg.isRequest()) return;
           auto rsp = rd_.handleRequest(msg);
           napAt(cfg_.rd_nap)->fromEndpointTo(cfg_.rd_host, from, rsp);
         }});
    rd_.watch([this](const rd::RdEntry& e) {
      for (auto& [node, np] : naps_) {
        fabric_.control(cfg_.rd_nap, node, "rd_entry ep=" + e.endpoint,
                        [np = np.get(), e] { np->onRdEntry(e); });
      }
    });

    for (const auto& sc : cfg_.servers) {
      auto srv = std::make_unique<endpoints::Server>(sc);
      auto* np = napAt(sc.nap);
      srv->attach(envFor(sc.id, np));
      np->attachEndpoint({sc.id, sc.host, sc.groups, true,
                          [p = srv.get()](const std::string& from,
                                          const coap::CoapMessage& m) {
                            p->deliver(from, m);
                          }});
      serverById_[sc.id] = srv.get();
      servers_.push_back(std::move(srv));
    }

    for (const auto& cc : cfg_.clients) {
      auto cli = std::make_unique<endpoints::Client>(cc);
      auto* np = napAt(cc.nap);
      cli->attach(envFor(cc.id, np));
      np->attachEndpoint({cc.id, "", {}, false,
                          [p = cli.get()](const std::string& from,
                                          const coap::CoapMessage& m) {
                            p->deliver(from, m);
                          }});
      clients_.push_back(std::move(cli));
    }

    for (const auto& u : cfg_.updates) {
      sched_.schedule(u.at, [srv = serverById_.at(u.server), path = u.path,
                             value = u.value] {
        srv->updateResource(path, value);
      });
    }

    for (auto& s : servers_) s->start();
    for (auto& c : clients_) c->start();
  }

  ScenarioRun(const ScenarioRun&) = delete;
  ScenarioRun& operator=(const ScenarioRun&) = delete;

  std::uint64_t run(std::uint64_t eventBudget = 10'000'000) {
    if (ran_) throw Error("scenario already ran");
    ran_ = true;
    executed_ = sched_.runAll(eventBudget);
    checkInvariants();
    return executed_;
  }

  const ScenarioConfig& config() const { return cfg_; }
  nap::NapMode mode() const { return mode_; }
  const sim::EventLog& log() const { return log_; }
  const icn::TopologyGraph& topology() const { return topo_; }
  const sim::Fabric& fabric() const { return fabric_; }
  const rd::ResourceDirectory& directory() const { return rd_; }
  std::uint64_t executedEvents() const { return executed_; }
  Tick finalTick() const { return sched_.now(); }

  const std::map<icn::NodeId, std::unique_ptr<nap::Nap>>& naps() const {
    return naps_;
  }
  const std::vector<std::unique_ptr<endpoints::Server>>& servers() const {
    return servers_;
  }
  const std::vector<std::unique_ptr<endpoints::Client>>& clients() const {
    return clients_;
  }

  const endpoints::Server& server(const std::string& id) const {
    auto it = serverById_.find(id);
    if (it == serverById_.end()) throw Error("no server " + id);
    return *it->second;
  }
  const endpoints::Client& client(const std::string& id) const {
    for (const auto& c : clients_)
      if (c->config().id == id) return *c;
    throw Error("no client " + id);
  }

private:
  static ScenarioConfig validated(ScenarioConfig cfg) {
    cfg.validate();
    return cfg;
  }

  static icn::TopologyGraph buildTopology(const ScenarioConfig& cfg) {
    icn::TopologyGraph topo;
    for (const auto& n : cfg.nodes) topo.addNode(n);
    for (const auto& l : cfg.links) topo.addLink(l.a, l.b, l.latency);
    if (!topo.isConnected())
      throw ConfigError("scenario topology is not connected");
    return topo;
  }

  nap::Nap* napAt(const icn::NodeId& node) {
    auto it = naps_.find(node);
    if (it == naps_.end()) throw Error("no NAP at " + node);
    return it->second.get();
  }

  endpoints::EndpointEnv envFor(const std::string& epId, nap::Nap* np) {
    endpoints::EndpointEnv env;
    env.now = [this] { return sched_.now(); };
    env.schedule = [this](Tick d, std::function<void()> fn) {
      sched_.schedule(d, std::move(fn));
    };
    env.request = [np, epId](const coap::CoapMessage& m) {
      np->fromEndpoint(epId, m);
    };
    env.reply = [np, epId](const std::string& to, const coap::CoapMessage& m) {
      np->fromEndpointTo(epId, to, m);
    };
    env.log = &log_;
    env.log_node = epId;
    return env;
  }

  void checkInvariants() const {
    try {
      fabric_.verifyConservation();
    } catch (const Error& e) {
      throw RuntimeInvariantViolation(e.what());
    }

    std::vector<std::string> problems;
    for (const auto& s : servers_) {
      if (!s->registered())
        problems.push_back("server " + s->config().id + " never registered");
    }
    // Confirmable requests must be answered eventually; group requests go
    // out non-confirmable and silent misses are legitimate there.
    for (const auto& c : clients_) {
      for (const auto& conv : c->conversations()) {
        if (!conv.action.confirmable) continue;
        if (conv.action.kind == endpoints::ClientAction::Kind::GroupGet)
          continue;
        if (conv.responses.empty())
          problems.push_back("client " + c->config().id + " request tok=" +
                             toHex(conv.token) + " got no response");
      }
    }
    if (!problems.empty()) {
      std::string msg = "runtime invariant violated";
      for (const auto& p : problems) msg += "\n  " + p;
      throw RuntimeInvariantViolation(msg);
    }
  }

  ScenarioConfig cfg_;
  nap::NapMode mode_;
  sim::EventScheduler sched_;
  icn::TopologyGraph topo_;
  sim::EventLog log_;
  sim::Fabric fabric_;
  rd::ResourceDirectory rd_;
  std::map<icn::NodeId, std::unique_ptr<nap::Nap>> naps_;
  std::vector<std::unique_ptr<endpoints::Server>> servers_;
  std::vector<std::unique_ptr<endpoints::Client>> clients_;
  std::map<std::string, endpoints::Server*> serverById_;
  bool ran_ = false;
  std::uint64_t executed_ = 0;
};

}  // namespace coapicn::scenario
