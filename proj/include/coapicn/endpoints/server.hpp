#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coapicn/coap/link_format.hpp"
#include "coapicn/coap/message.hpp"
#include "coapicn/digest.hpp"
#include "coapicn/sim/log.hpp"

namespace coapicn::endpoints {

// Glue handed to an endpoint at attach time: its clock, its scheduler, the
// uplink to its NAP and the shared event log. `request` routes by Uri-Host;
// `reply` addresses a specific peer (the NAP in gateway mode, the original
// client in plain-forwarding mode).
struct EndpointEnv {
  std::function<Tick()> now;
  std::function<void(Tick, std::function<void()>)> schedule;
  std::function<void(const coap::CoapMessage&)> request;
  std::function<void(const std::string&, const coap::CoapMessage&)> reply;
  sim::EventLog* log = nullptr;
  std::string log_node;
};

struct ServerResource {
  std::vector<std::string> path;
  std::string rt;
  Bytes value;
  Tick available_at = 0;  // absolute tick before which responses are held
  bool observable = false;
};

struct ServerConfig {
  std::string id;
  std::string nap;
  std::string host;
  std::vector<std::string> groups;
  Tick register_at = 0;
  std::vector<ServerResource> resources;
};

// A CoAP origin server behind one NAP. It registers itself with the
// resource directory, answers GET/POST on its declared resources, keeps an
// observer registry keyed by (peer, token), and emits notifications when a
// resource changes.
class Server {
public:
  explicit Server(ServerConfig cfg) : cfg_(std::move(cfg)) {
    for (auto& res : cfg_.resources) resources_[joinPath(res.path)] = &res;
  }

  const ServerConfig& config() const { return cfg_; }

  void attach(EndpointEnv env) { env_ = std::move(env); }

  // Schedules the registration POST; the runner calls this once at setup.
  void start() {
    env_.schedule(cfg_.register_at, [this] { sendRegistration(); });
  }

  void deliver(const std::string& from, const coap::CoapMessage& msg) {
    if (msg.isEmpty()) return;  // ACK/RST for a separate response
    if (msg.isResponse()) {
      // only response we ever wait for is the registration ack
      if (msg.code == coap::codes::Created && !registered_) {
        registered_ = true;
        logEvent("registered", "");
      }
      return;
    }
    handleRequest(from, msg);
  }

  // Scripted representation change; notifies every observer of the path.
  void updateResource(const std::vector<std::string>& path, Bytes value) {
    auto it = resources_.find(joinPath(path));
    if (it == resources_.end())
      throw Error(cfg_.id + ": update for unknown resource " + joinPath(path));
    it->second->value = std::move(value);
    logEvent("resource_update", joinPath(path));
    for (auto& [key, obs] : observers_) {
      (void)key;
      if (obs.path != joinPath(path)) continue;
      ++obs.seq;
      coap::CoapMessage note;
      note.type = coap::MsgType::NonConfirmable;
      note.code = coap::codes::Content;
      note.message_id = nextMid();
      note.token = obs.token;
      note.setObserve(obs.seq);
      note.payload = it->second->value;
      env_.reply(obs.peer, note);
    }
  }

  bool registered() const { return registered_; }
  std::uint64_t requestsReceived() const { return requests_received_; }
  std::size_t maxConcurrentPending() const { return max_pending_; }
  std::size_t observerCount() const { return observers_.size(); }

private:
  struct ObserverReg {
    std::string peer;
    Bytes token;
    std::string path;
    std::uint32_t seq = 0;
  };

  static std::string joinPath(const std::vector<std::string>& path) {
    std::string out;
    for (const auto& seg : path) {
      if (!out.empty()) out += "/";
      out += seg;
    }
    return out;
  }

  std::uint16_t nextMid() { return mid_counter_++; }

  void logEvent(const std::string& kind, const std::string& detail) {
    if (env_.log) env_.log->record(env_.now(), env_.log_node, kind, "", detail);
  }

  void sendRegistration() {
    coap::CoapMessage req;
    req.type = coap::MsgType::NonConfirmable;
    req.code = coap::codes::Post;
    req.message_id = nextMid();
    req.token = registrationToken();
    req.addOption(coap::options::UriHost, std::string_view("rd"));
    req.addOption(coap::options::UriPath, std::string_view("rd"));
    req.addOption(coap::options::UriQuery, "ep=" + cfg_.id);
    req.addOption(coap::options::UriQuery, "base=" + cfg_.host);
    req.addOption(coap::options::UriQuery, "nap=" + cfg_.nap);
    for (const auto& g : cfg_.groups)
      req.addOption(coap::options::UriQuery, "g=" + g);
    std::vector<coap::ResourceLink> links;
    for (const auto& res : cfg_.resources) {
      coap::ResourceLink link;
      link.uri_path = res.path;
      if (!res.rt.empty()) link.attributes["rt"] = res.rt;
      if (res.observable) link.attributes["obs"] = "";
      links.push_back(std::move(link));
    }
    req.payload = toBytes(coap::serializeLinkFormat(links));
    logEvent("register", "ep=" + cfg_.id + " base=" + cfg_.host);
    env_.request(req);
  }

  Bytes registrationToken() const {
    auto d = sha256(toBytes("reg:" + cfg_.id));
    return Bytes(d.begin(), d.begin() + 4);
  }

  void handleRequest(const std::string& from, const coap::CoapMessage& req) {
    auto host = req.uriHost().value_or("");
    bool addressedToGroup = host != cfg_.host;
    auto pathKey = joinPath(req.uriPath());
    auto it = resources_.find(pathKey);
    if (it == resources_.end()) {
      // a group request for a resource this member does not offer is
      // ignored; a directly addressed miss gets 4.04
      if (addressedToGroup) {
        logEvent("group_miss", pathKey);
        return;
      }
      ++requests_received_;
      respondNow(from, req, coap::codes::NotFound, {}, std::nullopt);
      return;
    }
    ServerResource& res = *it->second;
    ++requests_received_;
    logEvent("request", pathKey + " code=" + req.code.str() +
                            " tok=" + toHex(req.token) + " from=" + from);

    if (req.code == coap::codes::Post) {
      res.value = req.payload;
      respondOrHold(from, req, res, coap::codes::Created, std::nullopt);
      return;
    }

    // GET; observe handling first
    auto obs = req.observeValue();
    if (obs == std::uint32_t{0} && res.observable) {
      auto& reg = observers_[observerKey(from, req.token)];
      reg.peer = from;
      reg.token = req.token;
      reg.path = pathKey;
      respondOrHold(from, req, res, coap::codes::Content, reg.seq);
      return;
    }
    if (obs == std::uint32_t{1}) {
      observers_.erase(observerKey(from, req.token));
      respondNow(from, req, coap::codes::Content, res.value, std::nullopt);
      return;
    }
    respondOrHold(from, req, res, coap::codes::Content, std::nullopt);
  }

  static std::string observerKey(const std::string& peer, const Bytes& token) {
    return peer + ":" + toHex(token);
  }

  // Piggybacked when the resource is ready, otherwise empty ACK now and a
  // separate confirmable response once it becomes available.
  void respondOrHold(const std::string& from, const coap::CoapMessage& req,
                     const ServerResource& res, coap::Code code,
                     std::optional<std::uint32_t> observeSeq) {
    if (env_.now() >= res.available_at) {
      Bytes payload = code == coap::codes::Created ? Bytes{} : res.value;
      respondNow(from, req, code, std::move(payload), observeSeq);
      return;
    }
    Tick waitUntil = res.available_at;
    if (req.type == coap::MsgType::Confirmable)
      env_.reply(from, coap::emptyAck(req.message_id));
    ++pending_;
    max_pending_ = std::max(max_pending_, pending_);
    logEvent("response_held", "until=" + std::to_string(waitUntil));
    coap::CoapMessage reqCopy = req;
    env_.schedule(waitUntil - env_.now(),
                  [this, from, reqCopy, code, observeSeq] {
                    --pending_;
                    coap::CoapMessage rsp;
                    rsp.type = reqCopy.type == coap::MsgType::Confirmable
                                   ? coap::MsgType::Confirmable
                                   : coap::MsgType::NonConfirmable;
                    rsp.code = code;
                    rsp.message_id = nextMid();
                    rsp.token = reqCopy.token;
                    if (observeSeq) rsp.setObserve(*observeSeq);
                    auto pathKey = joinPath(reqCopy.uriPath());
                    if (auto it = resources_.find(pathKey);
                        it != resources_.end() && code != coap::codes::Created)
                      rsp.payload = it->second->value;
                    env_.reply(from, rsp);
                  });
  }

  void respondNow(const std::string& from, const coap::CoapMessage& req,
                  coap::Code code, Bytes payload,
                  std::optional<std::uint32_t> observeSeq) {
    coap::CoapMessage rsp;
    if (req.type == coap::MsgType::Confirmable) {
      rsp.type = coap::MsgType::Acknowledgement;  // piggybacked
      rsp.message_id = req.message_id;
    } else {
      rsp.type = coap::MsgType::NonConfirmable;
      rsp.message_id = nextMid();
    }
    rsp.code = code;
    rsp.token = req.token;
    if (observeSeq) rsp.setObserve(*observeSeq);
    rsp.payload = std::move(payload);
    env_.reply(from, rsp);
  }

  ServerConfig cfg_;
  EndpointEnv env_;
  std::map<std::string, ServerResource*> resources_;  // by joined path
  std::map<std::string, ObserverReg> observers_;      // by peer:token
  bool registered_ = false;
  std::uint16_t mid_counter_ = 1;
  std::uint64_t requests_received_ = 0;
  std::size_t pending_ = 0;
  std::size_t max_pending_ = 0;
};

}  // namespace coapicn::endpoints
