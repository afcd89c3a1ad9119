#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coapicn/icn/forwarding_tree.hpp"
#include "coapicn/icn/name.hpp"
#include "coapicn/icn/topology.hpp"
#include "coapicn/nap/anycast.hpp"
#include "coapicn/sim/log.hpp"
#include "coapicn/sim/scheduler.hpp"

namespace coapicn::sim {

// How a scope-level subscription participates in matching. Anycast scopes
// deliver an advertised object to exactly one member (policy-selected per
// advertiser); multicast scopes deliver to every member.
enum class ScopeMode { Anycast, Multicast };

inline const char* name(ScopeMode m) {
  return m == ScopeMode::Anycast ? "anycast" : "multicast";
}

// Rendezvous state: who advertises and who wants each named object.
// Scope-level subscriptions express interest in every object of a scope;
// request identifiers are fingerprint-specific, so a server-side NAP can
// only subscribe at host-uri scope granularity.
struct RendezvousTable {
  struct ScopeSubscription {
    ScopeMode mode = ScopeMode::Multicast;
    std::vector<icn::NodeId> order;  // subscription order, drives anycast
    std::set<icn::NodeId> members;
  };

  std::map<icn::NamedObjectId, std::vector<icn::NodeId>> publishers;  // advertise order
  std::map<icn::NamedObjectId, std::set<icn::NodeId>> subscribers;
  std::map<std::vector<icn::ScopeSegment>, ScopeSubscription> scope_subscribers;
};

// The ICN core as seen by NAPs: a single logical rendezvous node with a
// configurable control-message latency, a topology manager that builds
// forwarding trees, and counted hop-by-hop delivery of published objects.
class Fabric {
public:
  struct NodeHooks {
    // object delivered to a subscriber (or addressee)
    std::function<void(const icn::NamedObjectId&, const Bytes&,
                       const icn::NodeId& from, icn::MessageKind)>
        onObject;
    // rendezvous handed this publisher a delivery tree
    std::function<void(const icn::NamedObjectId&, const icn::ForwardingTree&)>
        onTree;
    // last subscriber for the object went away
    std::function<void(const icn::NamedObjectId&)> onSubscribersGone;
  };

  Fabric(EventScheduler& sched, icn::TopologyGraph& topo, EventLog& log,
         icn::NodeId rvNode, Tick controlLatency, nap::AnycastPolicy policy)
      : sched_(sched),
        topo_(topo),
        log_(log),
        rvNode_(std::move(rvNode)),
        controlLatency_(controlLatency),
        policy_(policy) {
    if (!topo_.hasNode(rvNode_))
      throw icn::UnknownNode("rendezvous node " + rvNode_ + " not in topology");
  }

  void attachNode(const icn::NodeId& node, NodeHooks hooks) {
    requireNode(node);
    hooks_[node] = std::move(hooks);
  }

  // ---- control plane -------------------------------------------------

  void advertise(const icn::NodeId& node, const icn::NamedObjectId& id) {
    requireNode(node);
    log_.record(sched_.now(), node, "advertise", id.str(), "");
    toRendezvous([this, node, id] { rvAdvertise(node, id); });
  }

  void subscribe(const icn::NodeId& node, const icn::NamedObjectId& id) {
    requireNode(node);
    log_.record(sched_.now(), node, "subscribe", id.str(), "");
    toRendezvous([this, node, id] { rvSubscribe(node, id); });
  }

  void subscribeScope(const icn::NodeId& node,
                      const std::vector<icn::ScopeSegment>& scope,
                      ScopeMode mode) {
    requireNode(node);
    log_.record(sched_.now(), node, "subscribe_scope", scopeStr(scope),
                std::string("mode=") + name(mode));
    toRendezvous([this, node, scope, mode] {
      rvSubscribeScope(node, scope, mode);
    });
  }

  void unsubscribe(const icn::NodeId& node, const icn::NamedObjectId& id) {
    requireNode(node);
    log_.record(sched_.now(), node, "unsubscribe", id.str(), "");
    toRendezvous([this, node, id] { rvUnsubscribe(node, id); });
  }

  // Point-to-point control message outside the rendezvous protocol
  // (resource-directory pushes and similar signalling).
  void control(const icn::NodeId& from, const icn::NodeId& to,
               const std::string& what, std::function<void()> deliver) {
    requireNode(from);
    requireNode(to);
    ++controlMessages_;
    log_.record(sched_.now(), from, "ctl_tx", "", what + " to=" + to);
    sched_.schedule(controlLatency_, std::move(deliver));
  }

  // ---- data plane ----------------------------------------------------

  // Publishes `bytes` from the tree root to every leaf. Each tree edge
  // carries the publication exactly once; arrival at a leaf is the sum of
  // link latencies along its root path.
  void publish(const icn::NodeId& from, const icn::ForwardingTree& tree,
               const icn::NamedObjectId& id, const Bytes& bytes,
               icn::MessageKind kind, const std::string& host) {
    if (from != tree.root) throw icn::InvalidTree("publisher is not tree root");
    tree.validate();
    for (const auto& [a, b] : tree.edges) {
      if (!topo_.hasLink(a, b))
        throw icn::InvalidTree("tree edge " + a + "-" + b + " not in topology");
    }
    log_.record(sched_.now(), from, "publish", id.str(),
                std::string("kind=") + icn::name(kind) +
                    " leaves=" + std::to_string(tree.leaves.size()) +
                    " edges=" + std::to_string(tree.edges.size()));
    publications_.push_back(
        {id, tree.leaves.size(), 0, static_cast<std::uint64_t>(tree.edges.size())});
    std::size_t pubIndex = publications_.size() - 1;
    hostKindMessages_[host][kind] += tree.edges.size();

    auto children = tree.childMap();
    deliverTree(children, tree, id, bytes, from, kind, from, sched_.now(),
                pubIndex);
  }

  // Addressed delivery over the shortest path (pending notices, catch-up
  // copies for late joiners). Shares links, latencies and FIFO ordering
  // with tree publications, so a notice sent before a response on the same
  // route also arrives before it.
  void publishTo(const icn::NodeId& from, const icn::NodeId& to,
                 const icn::NamedObjectId& id, const Bytes& bytes,
                 icn::MessageKind kind, const std::string& host) {
    requireNode(from);
    requireNode(to);
    auto path = topo_.shortestPath(from, to);
    log_.record(sched_.now(), from, "publish_to", id.str(),
                std::string("kind=") + icn::name(kind) + " dst=" + to);
    Tick offset = 0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const auto& a = path[i];
      const auto& b = path[i + 1];
      topo_.countMessage(a, b, kind);
      ++hostKindMessages_[host][kind];
      log_.record(sched_.now(), a, "xmit", id.str(),
                  "link=" + linkName(a, b) + " kind=" + icn::name(kind) +
                      " at=" + std::to_string(sched_.now() + offset));
      offset += topo_.linkLatency(a, b);
    }
    auto& hooks = hooksFor(to);
    sched_.schedule(offset, [this, &hooks, id, bytes, from, kind, to] {
      log_.record(sched_.now(), to, "deliver", id.str(),
                  std::string("kind=") + icn::name(kind) + " from=" + from);
      if (hooks.onObject) hooks.onObject(id, bytes, from, kind);
    });
  }

  // ---- inspection ----------------------------------------------------

  const RendezvousTable& rendezvous() const { return rv_; }
  std::uint64_t controlMessages() const { return controlMessages_; }
  Tick controlLatency() const { return controlLatency_; }

  const std::map<std::string, std::map<icn::MessageKind, std::uint64_t>>&
  hostKindMessages() const {
    return hostKindMessages_;
  }

  std::uint64_t hostMessages(const std::string& host,
                             icn::MessageKind kind) const {
    auto it = hostKindMessages_.find(host);
    if (it == hostKindMessages_.end()) return 0;
    auto kt = it->second.find(kind);
    return kt == it->second.end() ? 0 : kt->second;
  }

  // Per-publication delivery accounting; verified after a run.
  struct PublicationRecord {
    icn::NamedObjectId id;
    std::size_t expected_deliveries;
    std::size_t actual_deliveries;
    std::uint64_t edge_count;
  };
  const std::vector<PublicationRecord>& publications() const {
    return publications_;
  }

  void verifyConservation() const {
    for (const auto& p : publications_) {
      if (p.actual_deliveries != p.expected_deliveries) {
        throw Error("conservation violated for " + p.id.str() + ": " +
                    std::to_string(p.actual_deliveries) + " of " +
                    std::to_string(p.expected_deliveries) + " deliveries");
      }
    }
  }

  static std::string scopeStr(const std::vector<icn::ScopeSegment>& scope) {
    std::string out;
    for (const auto& seg : scope) {
      if (!out.empty()) out += "/";
      out += icn::hex(seg);
    }
    return out + "#*";
  }

private:
  static std::string linkName(const icn::NodeId& a, const icn::NodeId& b) {
    auto key = icn::TopologyGraph::linkKey(a, b);
    return key.first + "-" + key.second;
  }

  void requireNode(const icn::NodeId& node) const {
    if (!topo_.hasNode(node)) throw icn::UnknownNode("unknown node " + node);
  }

  NodeHooks& hooksFor(const icn::NodeId& node) {
    auto it = hooks_.find(node);
    if (it == hooks_.end())
      throw icn::UnknownNode("node " + node + " has no attached handler");
    return it->second;
  }

  void toRendezvous(std::function<void()> fn) {
    ++controlMessages_;
    sched_.schedule(controlLatency_, std::move(fn));
  }

  // ---- rendezvous processing (runs at the rendezvous node) -----------

  // Delivery targets for one publisher of `id`: every exact subscriber,
  // plus scope members - all of them for multicast scopes, exactly one
  // policy-selected member for anycast scopes.
  std::set<icn::NodeId> targetSet(const icn::NamedObjectId& id,
                                  const icn::NodeId& advertiser) const {
    std::set<icn::NodeId> targets;
    if (auto it = rv_.subscribers.find(id); it != rv_.subscribers.end())
      targets.insert(it->second.begin(), it->second.end());
    if (auto it = rv_.scope_subscribers.find(id.scope_path);
        it != rv_.scope_subscribers.end() && !it->second.members.empty()) {
      if (it->second.mode == ScopeMode::Multicast) {
        targets.insert(it->second.members.begin(), it->second.members.end());
      } else {
        targets.insert(
            nap::selectAnycast(it->second.order, topo_, advertiser, policy_));
      }
    }
    return targets;
  }

  void rvAdvertise(const icn::NodeId& node, const icn::NamedObjectId& id) {
    auto& pubs = rv_.publishers[id];
    if (std::find(pubs.begin(), pubs.end(), node) == pubs.end())
      pubs.push_back(node);
    auto targets = targetSet(id, node);
    if (!targets.empty()) notifyPublisher(node, id, targets);
  }

  void rvSubscribe(const icn::NodeId& node, const icn::NamedObjectId& id) {
    rv_.subscribers[id].insert(node);
    auto pit = rv_.publishers.find(id);
    if (pit == rv_.publishers.end() || pit->second.empty()) return;
    // several publishers of one id: the anycast policy picks who serves
    auto chosen = nap::selectAnycast(pit->second, topo_, node, policy_);
    notifyPublisher(chosen, id, targetSet(id, chosen));
  }

  void rvSubscribeScope(const icn::NodeId& node,
                        const std::vector<icn::ScopeSegment>& scope,
                        ScopeMode mode) {
    auto& sub = rv_.scope_subscribers[scope];
    if (!sub.members.empty() && sub.mode != mode)
      throw Error("conflicting scope modes for " + scopeStr(scope));
    sub.mode = mode;
    if (sub.members.insert(node).second) sub.order.push_back(node);
    // re-match everything already advertised under this scope; anycast
    // selections may change, multicast trees grow
    for (const auto& [id, pubs] : rv_.publishers) {
      if (id.scope_path != scope) continue;
      for (const auto& pub : pubs) {
        auto targets = targetSet(id, pub);
        if (!targets.empty()) notifyPublisher(pub, id, targets);
      }
    }
  }

  void rvUnsubscribe(const icn::NodeId& node, const icn::NamedObjectId& id) {
    auto it = rv_.subscribers.find(id);
    if (it == rv_.subscribers.end() || !it->second.erase(node)) return;
    if (it->second.empty()) rv_.subscribers.erase(it);  // no empty sets kept
    auto notified = notified_.find(id);
    if (notified == notified_.end()) return;
    bool anyLeft = false;
    for (const auto& pub : notified->second) {
      auto targets = targetSet(id, pub);
      if (targets.empty()) {
        ++controlMessages_;
        log_.record(sched_.now(), rvNode_, "rv_subs_gone", id.str(),
                    "to=" + pub);
        auto& hooks = hooksFor(pub);
        sched_.schedule(controlLatency_, [&hooks, id] {
          if (hooks.onSubscribersGone) hooks.onSubscribersGone(id);
        });
      } else {
        anyLeft = true;
        notifyPublisher(pub, id, targets);
      }
    }
    if (!anyLeft) notified_.erase(id);
  }

  void notifyPublisher(const icn::NodeId& pub, const icn::NamedObjectId& id,
                       const std::set<icn::NodeId>& targets) {
    auto tree = icn::buildTree(topo_, pub, targets);
    notified_[id].insert(pub);
    ++controlMessages_;
    log_.record(sched_.now(), rvNode_, "rv_notify", id.str(),
                "to=" + pub + " leaves=" + std::to_string(targets.size()));
    auto& hooks = hooksFor(pub);
    sched_.schedule(controlLatency_, [&hooks, id, tree] {
      if (hooks.onTree) hooks.onTree(id, tree);
    });
  }

  // ---- tree delivery -------------------------------------------------

  void deliverTree(const std::map<icn::NodeId, std::vector<icn::NodeId>>& children,
                   const icn::ForwardingTree& tree, const icn::NamedObjectId& id,
                   const Bytes& bytes, const icn::NodeId& origin,
                   icn::MessageKind kind, const icn::NodeId& at, Tick arrival,
                   std::size_t pubIndex) {
    if (tree.leaves.count(at)) {
      auto& hooks = hooksFor(at);
      sched_.scheduleAt(
          arrival, [this, &hooks, id, bytes, origin, kind, at, pubIndex] {
            log_.record(sched_.now(), at, "deliver", id.str(),
                        std::string("kind=") + icn::name(kind) +
                            " from=" + origin);
            ++publications_[pubIndex].actual_deliveries;
            if (hooks.onObject) hooks.onObject(id, bytes, origin, kind);
          });
    }
    auto cit = children.find(at);
    if (cit == children.end()) return;
    for (const auto& child : cit->second) {
      topo_.countMessage(at, child, kind);
      log_.record(sched_.now(), at, "xmit", id.str(),
                  "link=" + linkName(at, child) + " kind=" + icn::name(kind) +
                      " at=" + std::to_string(arrival));
      deliverTree(children, tree, id, bytes, origin, kind, child,
                  arrival + topo_.linkLatency(at, child), pubIndex);
    }
  }

  EventScheduler& sched_;
  icn::TopologyGraph& topo_;
  EventLog& log_;
  icn::NodeId rvNode_;
  Tick controlLatency_;
  nap::AnycastPolicy policy_;

  std::map<icn::NodeId, NodeHooks> hooks_;
  RendezvousTable rv_;
  std::map<icn::NamedObjectId, std::set<icn::NodeId>> notified_;
  std::uint64_t controlMessages_ = 0;
  std::map<std::string, std::map<icn::MessageKind, std::uint64_t>>
      hostKindMessages_;
  std::vector<PublicationRecord> publications_;
};

}  // namespace coapicn::sim
