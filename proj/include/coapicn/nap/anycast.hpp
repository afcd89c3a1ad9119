#pragma once

#include <string>
#include <vector>

#include "coapicn/icn/topology.hpp"

namespace coapicn::nap {

class EmptyCandidates : public Error {
public:
  using Error::Error;
};

enum class AnycastPolicyKind {
  MinHop,           // closest candidate to the requester
  FirstAdvertiser,  // earliest advertiser wins
};

struct AnycastPolicy {
  AnycastPolicyKind kind = AnycastPolicyKind::MinHop;
};

inline const char* name(AnycastPolicyKind k) {
  return k == AnycastPolicyKind::MinHop ? "min_hop" : "first_advertiser";
}

// Picks exactly one candidate, deterministically. `candidates` is expected
// in advertise order (earliest first); ties resolve to the lexicographically
// smaller node id.
inline icn::NodeId selectAnycast(const std::vector<icn::NodeId>& candidates,
                                 const icn::TopologyGraph& graph,
                                 const icn::NodeId& requester,
                                 AnycastPolicy policy) {
  if (candidates.empty()) throw EmptyCandidates("no anycast candidates");

  if (policy.kind == AnycastPolicyKind::FirstAdvertiser) {
    return candidates.front();
  }

  auto dist = graph.hopDistances(requester);
  const icn::NodeId* best = nullptr;
  std::uint32_t bestHops = 0;
  for (const auto& c : candidates) {
    auto it = dist.find(c);
    if (it == dist.end())
      throw icn::DisconnectedGraph("candidate " + c + " unreachable");
    if (!best || it->second < bestHops ||
        (it->second == bestHops && c < *best)) {
      best = &c;
      bestHops = it->second;
    }
  }
  return *best;
}

}  // namespace coapicn::nap
