#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "coapicn/icn/forwarding_tree.hpp"
#include "coapicn/icn/name.hpp"
#include "coapicn/icn/topology.hpp"
#include "coapicn/nap/fingerprint.hpp"

namespace coapicn::nap {

// Conversation lifetime. One-shot entries retire after a single response,
// observe entries stay until the last waiter cancels, group entries stay
// for the run (non-confirmable, any number of member answers).
enum class PendingMode { OneShot, Observe, Group };

inline const char* name(PendingMode m) {
  switch (m) {
    case PendingMode::OneShot: return "oneshot";
    case PendingMode::Observe: return "observe";
    case PendingMode::Group: return "group";
  }
  return "?";
}

// Client-side pending request at the NAP that accepted it. `waiters` maps
// each local client to the token that client used; responses are delivered
// once per waiter with the token rewritten. `network_token` starts as the
// first local waiter's token and is replaced when a pending notice reveals
// the token the response will really carry.
struct ClientPending {
  RequestFingerprint fingerprint;
  icn::NamedObjectId request_id;
  icn::NamedObjectId response_id;  // exact object for one-shot and observe
  Bytes network_token;
  PendingMode mode = PendingMode::OneShot;
  std::map<std::string, Bytes> waiters;  // client id -> client token
  Tick created = 0;
};

// Server-side pending request at the NAP that owns the server(s). One
// entry per fingerprint; group requests can have several local responders.
// `confirmed` holds the requester NAPs whose request publication actually
// arrived; responses are published over the delivery tree pruned to it.
struct ServerPending {
  struct Responder {
    icn::NamedObjectId response_id;
    bool responded = false;
  };

  RequestFingerprint fingerprint;
  icn::NamedObjectId request_id;
  Bytes network_token;  // token of the first forwarded request
  PendingMode mode = PendingMode::OneShot;
  std::set<std::string> confirmed;
  std::map<std::string, Responder> responders;  // server endpoint id -> state
  // Observe teardown. A subscribers-gone signal only *starts* a drain; the
  // deregistration is delayed two control latencies so that a tree
  // re-notification from a subscriber that raced the signal can cancel it.
  bool draining = false;
  bool dereg_sent = false;
  std::uint32_t drain_epoch = 0;  // invalidates scheduled teardowns
  // requests that arrived while draining; replayed after teardown or cancel
  std::vector<std::tuple<icn::NamedObjectId, Bytes, std::string>> deferred;
  Tick created = 0;
};

// Publish intent is decoupled from tree arrival: a NAP queues bytes for an
// object until the rendezvous has supplied a tree covering every node that
// must receive them. The required leaf set is computed by the NAP at flush
// time from the owning pending entry, never stored.
struct Outbox {
  struct Item {
    Bytes bytes;
    icn::MessageKind kind = icn::MessageKind::Request;
    std::string host;
  };

  std::optional<icn::ForwardingTree> tree;
  std::vector<Item> queue;
  // every node that appeared in any tree for this object; a confirmed
  // requester absent from it has a join in flight and is worth waiting for,
  // one present but missing from the current tree has unsubscribed
  std::set<std::string> seen_leaves;

  bool covers(const std::set<std::string>& require) const {
    if (!tree) return false;
    for (const auto& node : require) {
      if (node != tree->root && !tree->leaves.count(node)) return false;
    }
    return true;
  }
};

}  // namespace coapicn::nap
