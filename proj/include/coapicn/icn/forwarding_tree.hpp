#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "coapicn/icn/topology.hpp"

namespace coapicn::icn {

class InvalidTree : public Error {
public:
  using Error::Error;
};

// Explicit multicast delivery tree: directed edges away from the root,
// every leaf is a subscriber reachable from the root.
struct ForwardingTree {
  NodeId root;
  std::set<std::pair<NodeId, NodeId>> edges;  // parent -> child
  std::set<NodeId> leaves;

  bool operator==(const ForwardingTree&) const = default;

  bool empty() const { return leaves.empty(); }

  // Children per parent, each list sorted for reproducible traversal.
  std::map<NodeId, std::vector<NodeId>> childMap() const {
    std::map<NodeId, std::vector<NodeId>> out;
    for (const auto& [parent, child] : edges) out[parent].push_back(child);
    return out;  // std::set iteration already yields sorted children
  }

  void validate() const {
    std::map<NodeId, NodeId> parentOf;
    for (const auto& [parent, child] : edges) {
      if (parentOf.count(child))
        throw InvalidTree("node " + child + " has two parents");
      parentOf[child] = parent;
    }
    if (parentOf.count(root)) throw InvalidTree("root has a parent");
    // every leaf walks up to the root without cycles
    for (const auto& leaf : leaves) {
      NodeId cur = leaf;
      std::set<NodeId> seen{cur};
      while (cur != root) {
        auto it = parentOf.find(cur);
        if (it == parentOf.end())
          throw InvalidTree("leaf " + leaf + " not reachable from root");
        cur = it->second;
        if (!seen.insert(cur).second) throw InvalidTree("cycle in tree");
      }
    }
    // no dangling edges: every edge lies on some root->leaf path
    std::set<NodeId> onPath{root};
    for (const auto& leaf : leaves) {
      NodeId cur = leaf;
      while (cur != root) {
        onPath.insert(cur);
        cur = parentOf.at(cur);
      }
    }
    for (const auto& [parent, child] : edges) {
      if (!onPath.count(parent) || !onPath.count(child))
        throw InvalidTree("edge off every root-leaf path");
    }
  }
};

// Union of minimum-hop paths root -> leaf, one per leaf, using the graph's
// deterministic parent choice.
inline ForwardingTree buildTree(const TopologyGraph& graph, const NodeId& root,
                                const std::set<NodeId>& leaves) {
  for (const auto& leaf : leaves) {
    if (!graph.hasNode(leaf)) throw UnknownNode("unknown leaf " + leaf);
  }
  if (!graph.hasNode(root)) throw UnknownNode("unknown root " + root);

  auto parent = graph.shortestPathParents(root);
  ForwardingTree tree;
  tree.root = root;
  tree.leaves = leaves;
  for (const auto& leaf : leaves) {
    if (leaf == root) continue;
    if (!parent.count(leaf))
      throw DisconnectedGraph("leaf " + leaf + " unreachable from " + root);
    NodeId cur = leaf;
    while (cur != root) {
      const NodeId& up = parent.at(cur);
      tree.edges.insert({up, cur});
      cur = up;
    }
  }
  tree.validate();
  return tree;
}

// Restriction of `tree` to the paths reaching `keep`; used when a publisher
// must deliver only to the subset of subscribers it has confirmed.
inline ForwardingTree pruneTree(const ForwardingTree& tree,
                                const std::set<NodeId>& keep) {
  std::map<NodeId, NodeId> parentOf;
  for (const auto& [parent, child] : tree.edges) parentOf[child] = parent;

  ForwardingTree out;
  out.root = tree.root;
  for (const auto& leaf : keep) {
    if (!tree.leaves.count(leaf))
      throw InvalidTree("kept leaf " + leaf + " not in tree");
    out.leaves.insert(leaf);
    NodeId cur = leaf;
    while (cur != out.root) {
      const NodeId& up = parentOf.at(cur);
      out.edges.insert({up, cur});
      cur = up;
    }
  }
  return out;
}

}  // namespace coapicn::icn
