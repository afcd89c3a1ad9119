#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "coapicn/coap/link_format.hpp"
#include "coapicn/coap/message.hpp"

namespace coapicn::rd {

class DuplicateEndpoint : public Error {
public:
  using Error::Error;
};

class InvalidFilter : public Error {
public:
  using Error::Error;
};

class InvalidRegistration : public Error {
public:
  using Error::Error;
};

struct RdEntry {
  std::string endpoint;  // ep=
  std::string host;      // base=, the host-uri clients address
  std::string nap;       // nap=, attachment point in the topology
  std::vector<std::string> groups;
  std::vector<coap::ResourceLink> resources;
};

// Directory of registered endpoints with lookup filtering and a watch
// feed. A watcher first receives the backlog of existing entries, then
// every registration accepted afterwards; with no watchers the directory
// generates no outbound traffic at all.
class ResourceDirectory {
public:
  using WatchFn = std::function<void(const RdEntry&)>;

  // Re-registering the same endpoint name replaces the stored entry in
  // place. A host claimed by a different endpoint stays claimed.
  const RdEntry& registerEndpoint(RdEntry entry) {
    if (entry.endpoint.empty())
      throw InvalidRegistration("registration without endpoint name");
    if (entry.host.empty())
      throw InvalidRegistration("registration without base host");
    if (entry.nap.empty())
      throw InvalidRegistration("registration without attachment point");
    if (entry.resources.empty())
      throw InvalidRegistration("registration without resource links");
    for (const auto& [ep, existing] : entries_) {
      if (existing.host == entry.host && ep != entry.endpoint)
        throw DuplicateEndpoint("host " + entry.host + " already owned by " +
                                ep);
    }
    if (!entries_.count(entry.endpoint)) order_.push_back(entry.endpoint);
    auto& stored = entries_[entry.endpoint] = std::move(entry);
    for (const auto& w : watchers_) w(stored);
    return stored;
  }

  void watch(WatchFn fn) {
    for (const auto& ep : order_) fn(entries_.at(ep));  // backlog first
    watchers_.push_back(std::move(fn));
  }

  bool hasEndpoint(const std::string& ep) const { return entries_.count(ep); }

  const RdEntry* findEndpoint(const std::string& ep) const {
    auto it = entries_.find(ep);
    return it == entries_.end() ? nullptr : &it->second;
  }

  // Registration order preserved: anycast tie-breaks and deterministic
  // listings depend on it.
  std::vector<const RdEntry*> entries() const {
    std::vector<const RdEntry*> out;
    for (const auto& ep : order_) out.push_back(&entries_.at(ep));
    return out;
  }

  std::vector<const RdEntry*> findHost(const std::string& host) const {
    std::vector<const RdEntry*> out;
    for (const auto& ep : order_) {
      const auto& e = entries_.at(ep);
      if (e.host == host) out.push_back(&e);
    }
    return out;
  }

  std::vector<const RdEntry*> findGroup(const std::string& group) const {
    std::vector<const RdEntry*> out;
    for (const auto& ep : order_) {
      const auto& e = entries_.at(ep);
      for (const auto& g : e.groups)
        if (g == group) {
          out.push_back(&e);
          break;
        }
    }
    return out;
  }

  // Filter keys: base (host), g (group), rt (resource type). Unknown keys
  // are an error rather than an empty result, so a typo in a client script
  // cannot pass silently. Host and group filters are mutually exclusive:
  // an entry's host names one authority, its groups name collections, and
  // intersecting them is always a script mistake.
  std::vector<coap::ResourceLink> lookup(
      const std::map<std::string, std::string>& filters) const {
    for (const auto& [key, value] : filters) {
      (void)value;
      if (key != "base" && key != "g" && key != "rt")
        throw InvalidFilter("unknown lookup filter " + key);
    }
    if (filters.count("base") && filters.count("g"))
      throw InvalidFilter("base and g filters are mutually exclusive");
    std::vector<coap::ResourceLink> out;
    for (const auto& ep : order_) {
      const auto& e = entries_.at(ep);
      if (auto it = filters.find("base");
          it != filters.end() && it->second != e.host)
        continue;
      if (auto it = filters.find("g"); it != filters.end()) {
        bool member = false;
        for (const auto& g : e.groups) member = member || g == it->second;
        if (!member) continue;
      }
      for (const auto& res : e.resources) {
        if (auto it = filters.find("rt"); it != filters.end()) {
          auto rt = res.attributes.find("rt");
          if (rt == res.attributes.end() || rt->second != it->second)
            continue;
        }
        coap::ResourceLink link = res;
        link.uri_path.insert(link.uri_path.begin(), "//" + e.host);
        out.push_back(std::move(link));
      }
    }
    return out;
  }

  // ---- CoAP surface --------------------------------------------------
  //
  // POST /rd?ep=..&base=..&nap=..[&g=..]  payload: link format -> 2.01
  // GET  /rd-lookup?base=..|g=..[&rt=..]             -> 2.05 link format

  coap::CoapMessage handleRequest(const coap::CoapMessage& req) {
    auto path = req.uriPath();
    try {
      if (req.code == coap::codes::Post && path == std::vector<std::string>{"rd"})
        return handleRegister(req);
      if (req.code == coap::codes::Get &&
          path == std::vector<std::string>{"rd-lookup"})
        return handleLookup(req);
    } catch (const Error& e) {
      return errorResponse(req, coap::codes::BadRequest, e.what());
    }
    return errorResponse(req, coap::codes::NotFound, "no such resource");
  }

private:
  coap::CoapMessage handleRegister(const coap::CoapMessage& req) {
    RdEntry entry;
    for (const auto& q : req.uriQuery()) {
      auto eq = q.find('=');
      std::string key = eq == std::string::npos ? q : q.substr(0, eq);
      std::string value = eq == std::string::npos ? "" : q.substr(eq + 1);
      if (key == "ep") entry.endpoint = value;
      else if (key == "base") entry.host = value;
      else if (key == "nap") entry.nap = value;
      else if (key == "g") entry.groups.push_back(value);
      else throw InvalidRegistration("unknown registration parameter " + key);
    }
    entry.resources = coap::parseLinkFormat(toString(req.payload));
    registerEndpoint(std::move(entry));
    coap::CoapMessage rsp;
    rsp.type = coap::MsgType::NonConfirmable;
    rsp.code = coap::codes::Created;
    rsp.token = req.token;
    return rsp;
  }

  coap::CoapMessage handleLookup(const coap::CoapMessage& req) {
    std::map<std::string, std::string> filters;
    for (const auto& q : req.uriQuery()) {
      auto eq = q.find('=');
      if (eq == std::string::npos)
        throw InvalidFilter("lookup filter without value: " + q);
      filters[q.substr(0, eq)] = q.substr(eq + 1);
    }
    auto links = lookup(filters);
    coap::CoapMessage rsp;
    rsp.type = coap::MsgType::NonConfirmable;
    rsp.code = coap::codes::Content;
    rsp.token = req.token;
    rsp.addOption(coap::options::ContentFormat, Bytes{40});  // link format
    rsp.payload = toBytes(coap::serializeLinkFormat(links));
    return rsp;
  }

  coap::CoapMessage errorResponse(const coap::CoapMessage& req,
                                  coap::Code code, const std::string& text) {
    coap::CoapMessage rsp;
    rsp.type = coap::MsgType::NonConfirmable;
    rsp.code = code;
    rsp.token = req.token;
    rsp.payload = toBytes(text);
    return rsp;
  }

  std::map<std::string, RdEntry> entries_;
  std::vector<std::string> order_;
  std::vector<WatchFn> watchers_;
};

}  // namespace coapicn::rd
