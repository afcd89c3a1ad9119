#pragma once

#include <map>
#include <string>
#include <vector>

#include "coapicn/scenario/runner.hpp"

namespace coapicn::scenario {

// Flat, ordered metric rows. Row order is fixed by construction and every
// container walked is sorted, so the CSV is byte-identical for identical
// runs — the determinism tests rely on that.
struct MetricsReport {
  struct Row {
    std::string section;
    std::string key;
    std::string value;
  };
  std::vector<Row> rows;

  void add(std::string section, std::string key, std::string value) {
    rows.push_back({std::move(section), std::move(key), std::move(value)});
  }
  void add(std::string section, std::string key, std::uint64_t value) {
    add(std::move(section), std::move(key), std::to_string(value));
  }

  std::string csv() const {
    std::string out = "section,key,value\n";
    for (const auto& r : rows)
      out += r.section + "," + r.key + "," + r.value + "\n";
    return out;
  }
};

inline MetricsReport collectMetrics(const ScenarioRun& run) {
  MetricsReport m;
  const auto& cfg = run.config();

  m.add("meta", "scenario", cfg.name);
  m.add("meta", "mode", std::string(nap::name(run.mode())));
  m.add("meta", "seed", cfg.seed);

  std::map<icn::MessageKind, std::uint64_t> totals;
  for (const auto& [key, state] : run.topology().links()) {
    for (auto kind : icn::kAllMessageKinds) {
      auto it = state.counters.find(kind);
      std::uint64_t n = it == state.counters.end() ? 0 : it->second;
      totals[kind] += n;
      if (n > 0)
        m.add("link", key.first + "-" + key.second + ":" + icn::name(kind), n);
    }
  }
  for (auto kind : icn::kAllMessageKinds)
    m.add("total", icn::name(kind), totals[kind]);
  m.add("control", "messages", run.fabric().controlMessages());

  for (const auto& [host, kinds] : run.fabric().hostKindMessages()) {
    for (const auto& [kind, n] : kinds)
      if (n > 0) m.add("host", host + ":" + icn::name(kind), n);
  }

  for (const auto& [node, np] : run.naps()) {
    const auto& c = np->counters();
    m.add("nap", node + ":suppressed_requests", c.suppressed_requests);
    m.add("nap", node + ":notices_sent", c.notices_sent);
    m.add("nap", node + ":notices_received", c.notices_received);
    m.add("nap", node + ":orphan_responses", c.orphan_responses);
    m.add("nap", node + ":stale_notices", c.stale_notices);
    m.add("nap", node + ":token_mismatches", c.token_mismatches);
    m.add("nap", node + ":late_drops", c.late_drops);
    m.add("nap", node + ":max_client_entries",
          static_cast<std::uint64_t>(np->maxClientEntries()));
    m.add("nap", node + ":max_server_entries",
          static_cast<std::uint64_t>(np->maxServerEntries()));
    m.add("nap", node + ":max_waiters",
          static_cast<std::uint64_t>(np->maxWaiters()));
  }

  for (const auto& s : run.servers()) {
    const auto& id = s->config().id;
    m.add("server", id + ":requests", s->requestsReceived());
    m.add("server", id + ":max_pending",
          static_cast<std::uint64_t>(s->maxConcurrentPending()));
    m.add("server", id + ":observers",
          static_cast<std::uint64_t>(s->observerCount()));
  }

  for (const auto& c : run.clients()) {
    const auto& id = c->config().id;
    std::uint64_t responses = 0, notifications = 0, acks = 0;
    std::uint64_t latencySum = 0, latencyCount = 0;
    for (const auto& conv : c->conversations()) {
      responses += conv.responses.size();
      notifications += conv.notificationCount();
      acks += conv.acks;
      if (auto first = conv.firstResponseLatency()) {
        latencySum += *first;
        ++latencyCount;
      }
    }
    m.add("client", id + ":conversations",
          static_cast<std::uint64_t>(c->conversations().size()));
    m.add("client", id + ":responses", responses);
    m.add("client", id + ":notifications", notifications);
    m.add("client", id + ":acks", acks);
    m.add("client", id + ":unmatched", c->unmatchedResponses());
    m.add("latency", id + ":first_response_sum", latencySum);
    m.add("latency", id + ":first_response_count", latencyCount);
  }

  m.add("sim", "events", run.executedEvents());
  m.add("sim", "final_tick", run.finalTick());
  return m;
}

}  // namespace coapicn::scenario
