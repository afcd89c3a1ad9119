#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coapicn/bytes.hpp"

namespace coapicn::icn {

class UnknownNode : public Error {
public:
  using Error::Error;
};

class DisconnectedGraph : public Error {
public:
  using Error::Error;
};

using NodeId = std::string;

// Counted message categories, one counter per link per kind.
enum class MessageKind {
  Request,
  Response,
  Notify,  // observe notifications (sequence >= 1)
  Ack,
  Notice,  // pending notices between NAPs
};

inline const char* name(MessageKind k) {
  switch (k) {
    case MessageKind::Request: return "request";
    case MessageKind::Response: return "response";
    case MessageKind::Notify: return "notify";
    case MessageKind::Ack: return "ack";
    case MessageKind::Notice: return "notice";
  }
  return "?";
}

inline constexpr MessageKind kAllMessageKinds[] = {
    MessageKind::Request, MessageKind::Response, MessageKind::Notify,
    MessageKind::Ack, MessageKind::Notice};

// Undirected graph of NAPs, the rendezvous node and internal forwarders.
// Links carry a latency in ticks and per-kind message counters.
class TopologyGraph {
public:
  struct LinkState {
    Tick latency = 1;
    std::map<MessageKind, std::uint64_t> counters;
  };

  using LinkKey = std::pair<NodeId, NodeId>;  // normalized a < b

  static LinkKey linkKey(const NodeId& a, const NodeId& b) {
    return a < b ? LinkKey{a, b} : LinkKey{b, a};
  }

  void addNode(const NodeId& id) {
    nodes_.insert(id);
    adjacency_.try_emplace(id);
  }

  void addLink(const NodeId& a, const NodeId& b, Tick latency) {
    requireNode(a);
    requireNode(b);
    if (latency == 0) throw Error("link latency must be positive");
    if (a == b) throw Error("self links not allowed");
    links_[linkKey(a, b)].latency = latency;
    insertSorted(adjacency_[a], b);
    insertSorted(adjacency_[b], a);
  }

  bool hasNode(const NodeId& id) const { return nodes_.count(id) > 0; }

  bool hasLink(const NodeId& a, const NodeId& b) const {
    return links_.count(linkKey(a, b)) > 0;
  }

  Tick linkLatency(const NodeId& a, const NodeId& b) const {
    return linkAt(a, b).latency;
  }

  void countMessage(const NodeId& a, const NodeId& b, MessageKind kind) {
    ++linkAt(a, b).counters[kind];
  }

  const std::set<NodeId>& nodes() const { return nodes_; }
  const std::map<LinkKey, LinkState>& links() const { return links_; }

  const std::vector<NodeId>& neighbors(const NodeId& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw UnknownNode("unknown node " + id);
    return it->second;
  }

  bool isConnected() const {
    if (nodes_.empty()) return true;
    auto dist = hopDistances(*nodes_.begin());
    for (const auto& n : nodes_)
      if (!dist.count(n)) return false;
    return true;
  }

  // BFS hop distances from `root` to every reachable node.
  std::map<NodeId, std::uint32_t> hopDistances(const NodeId& root) const {
    requireNode(root);
    std::map<NodeId, std::uint32_t> dist;
    std::deque<NodeId> queue;
    dist[root] = 0;
    queue.push_back(root);
    while (!queue.empty()) {
      NodeId cur = queue.front();
      queue.pop_front();
      for (const auto& next : neighbors(cur)) {
        if (!dist.count(next)) {
          dist[next] = dist[cur] + 1;
          queue.push_back(next);
        }
      }
    }
    return dist;
  }

  std::uint32_t hopDistance(const NodeId& from, const NodeId& to) const {
    auto dist = hopDistances(from);
    auto it = dist.find(to);
    if (it == dist.end())
      throw DisconnectedGraph("no path " + from + " -> " + to);
    return it->second;
  }

  // Shortest-path parent map from `root`. Among equal-hop parents the
  // lexicographically smallest node id wins, which makes every path and
  // every tree built from this map reproducible.
  std::map<NodeId, NodeId> shortestPathParents(const NodeId& root) const {
    auto dist = hopDistances(root);
    std::map<NodeId, NodeId> parent;
    for (const auto& [node, d] : dist) {
      if (d == 0) continue;
      for (const auto& nb : neighbors(node)) {  // neighbors sorted
        auto it = dist.find(nb);
        if (it != dist.end() && it->second == d - 1) {
          parent[node] = nb;
          break;
        }
      }
    }
    return parent;
  }

  std::vector<NodeId> shortestPath(const NodeId& from, const NodeId& to) const {
    auto parent = shortestPathParents(from);
    if (to != from && !parent.count(to))
      throw DisconnectedGraph("no path " + from + " -> " + to);
    std::vector<NodeId> path{to};
    NodeId cur = to;
    while (cur != from) {
      cur = parent.at(cur);
      path.push_back(cur);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

private:
  LinkState& linkAt(const NodeId& a, const NodeId& b) {
    auto it = links_.find(linkKey(a, b));
    if (it == links_.end()) throw Error("no link " + a + " - " + b);
    return it->second;
  }
  const LinkState& linkAt(const NodeId& a, const NodeId& b) const {
    return const_cast<TopologyGraph*>(this)->linkAt(a, b);
  }

  void requireNode(const NodeId& id) const {
    if (!nodes_.count(id)) throw UnknownNode("unknown node " + id);
  }

  static void insertSorted(std::vector<NodeId>& v, const NodeId& id) {
    auto it = std::lower_bound(v.begin(), v.end(), id);
    if (it == v.end() || *it != id) v.insert(it, id);
  }

  std::set<NodeId> nodes_;
  std::map<LinkKey, LinkState> links_;
  std::map<NodeId, std::vector<NodeId>> adjacency_;
};

}  // namespace coapicn::icn
