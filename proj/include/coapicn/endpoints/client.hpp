#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coapicn/coap/message.hpp"
#include "coapicn/digest.hpp"
#include "coapicn/endpoints/server.hpp"

namespace coapicn::endpoints {

struct ClientAction {
  enum class Kind { Get, Observe, GroupGet, Cancel };

  Tick at = 0;
  Kind kind = Kind::Get;
  std::string host;
  std::vector<std::string> path;
  std::vector<std::string> query;
  bool confirmable = true;  // group requests always go out non-confirmable
};

inline const char* name(ClientAction::Kind k) {
  switch (k) {
    case ClientAction::Kind::Get: return "get";
    case ClientAction::Kind::Observe: return "observe";
    case ClientAction::Kind::GroupGet: return "group_get";
    case ClientAction::Kind::Cancel: return "cancel";
  }
  return "?";
}

struct ClientConfig {
  std::string id;
  std::string nap;
  std::vector<ClientAction> actions;
};

// A scripted CoAP client. Every request gets a fresh token derived from
// the client id, so tokens are reproducible yet distinct across clients.
// The client records everything it receives; tests and metrics read the
// conversation records afterwards.
class Client {
public:
  struct ResponseRecord {
    Tick at = 0;
    coap::Code code;
    Bytes payload;
    std::optional<std::uint32_t> observe;
  };

  struct Conversation {
    ClientAction action;
    Bytes token;
    Tick sent_at = 0;
    std::vector<ResponseRecord> responses;
    std::uint64_t acks = 0;
    std::uint64_t resets = 0;

    bool completed() const { return !responses.empty(); }
    std::optional<Tick> firstResponseLatency() const {
      if (responses.empty()) return std::nullopt;
      return responses.front().at - sent_at;
    }
    std::uint64_t notificationCount() const {
      std::uint64_t n = 0;
      for (const auto& r : responses)
        if (r.observe && *r.observe >= 1) ++n;
      return n;
    }
  };

  explicit Client(ClientConfig cfg) : cfg_(std::move(cfg)) {}

  const ClientConfig& config() const { return cfg_; }

  void attach(EndpointEnv env) { env_ = std::move(env); }

  void start() {
    for (std::size_t i = 0; i < cfg_.actions.size(); ++i) {
      env_.schedule(cfg_.actions[i].at, [this, i] { fire(cfg_.actions[i]); });
    }
  }

  void deliver(const std::string& from, const coap::CoapMessage& msg) {
    if (msg.isEmpty()) {
      if (msg.type == coap::MsgType::Acknowledgement) recordAck(msg);
      if (msg.type == coap::MsgType::Reset) recordReset(msg);
      return;
    }
    if (!msg.isResponse()) return;  // clients never serve requests
    auto it = byToken_.find(toHex(msg.token));
    if (it == byToken_.end()) {
      ++unmatched_;
      if (env_.log)
        env_.log->record(env_.now(), env_.log_node, "unmatched_response", "",
                         "tok=" + toHex(msg.token));
      return;
    }
    Conversation& conv = conversations_[it->second];
    conv.responses.push_back(
        {env_.now(), msg.code, msg.payload, msg.observeValue()});
    if (env_.log)
      env_.log->record(env_.now(), env_.log_node, "response", "",
                       "code=" + msg.code.str() + " tok=" + toHex(msg.token) +
                           (msg.observeValue()
                                ? " obs=" + std::to_string(*msg.observeValue())
                                : std::string()));
    // a confirmable separate response is acknowledged to its sender
    if (msg.type == coap::MsgType::Confirmable)
      env_.reply(from, coap::emptyAck(msg.message_id));
  }

  const std::vector<Conversation>& conversations() const {
    return conversations_;
  }

  // responses whose token matched no outstanding request of this client
  std::uint64_t unmatchedResponses() const { return unmatched_; }

private:
  void fire(const ClientAction& action) {
    if (action.kind == ClientAction::Kind::Cancel) {
      fireCancel(action);
      return;
    }
    coap::CoapMessage req;
    bool confirmable =
        action.confirmable && action.kind != ClientAction::Kind::GroupGet;
    req.type = confirmable ? coap::MsgType::Confirmable
                           : coap::MsgType::NonConfirmable;
    req.code = coap::codes::Get;
    req.message_id = nextMid();
    req.token = nextToken();
    if (action.kind == ClientAction::Kind::Observe) req.setObserve(0);
    req.addOption(coap::options::UriHost, action.host);
    for (const auto& seg : action.path)
      req.addOption(coap::options::UriPath, seg);
    for (const auto& q : action.query)
      req.addOption(coap::options::UriQuery, q);

    Conversation conv;
    conv.action = action;
    conv.token = req.token;
    conv.sent_at = env_.now();
    byToken_[toHex(req.token)] = conversations_.size();
    byMid_[req.message_id] = conversations_.size();
    conversations_.push_back(std::move(conv));

    if (env_.log)
      env_.log->record(env_.now(), env_.log_node, name(action.kind), "",
                       "host=" + action.host + " tok=" + toHex(req.token));
    env_.request(req);
  }

  // Observe deregistration reuses the token of the matching registration.
  void fireCancel(const ClientAction& action) {
    for (std::size_t i = conversations_.size(); i-- > 0;) {
      const auto& conv = conversations_[i];
      if (conv.action.kind == ClientAction::Kind::Observe &&
          conv.action.host == action.host && conv.action.path == action.path) {
        coap::CoapMessage req;
        req.type = action.confirmable ? coap::MsgType::Confirmable
                                      : coap::MsgType::NonConfirmable;
        req.code = coap::codes::Get;
        req.message_id = nextMid();
        req.token = conv.token;
        req.setObserve(1);
        req.addOption(coap::options::UriHost, action.host);
        for (const auto& seg : action.path)
          req.addOption(coap::options::UriPath, seg);
        for (const auto& q : action.query)
          req.addOption(coap::options::UriQuery, q);
        byMid_[req.message_id] = i;
        if (env_.log)
          env_.log->record(env_.now(), env_.log_node, "cancel", "",
                           "host=" + action.host + " tok=" + toHex(req.token));
        env_.request(req);
        return;
      }
    }
    throw Error(cfg_.id + ": cancel without a matching observe");
  }

  void recordAck(const coap::CoapMessage& msg) {
    auto it = byMid_.find(msg.message_id);
    if (it != byMid_.end()) ++conversations_[it->second].acks;
  }

  void recordReset(const coap::CoapMessage& msg) {
    auto it = byMid_.find(msg.message_id);
    if (it != byMid_.end()) ++conversations_[it->second].resets;
  }

  std::uint16_t nextMid() { return mid_counter_++; }

  Bytes nextToken() {
    auto d = sha256(toBytes("tok:" + cfg_.id));
    Bytes token(d.begin(), d.begin() + 4);
    token.push_back(static_cast<std::uint8_t>(token_seq_++));
    return token;
  }

  ClientConfig cfg_;
  EndpointEnv env_;
  std::vector<Conversation> conversations_;
  std::map<std::string, std::size_t> byToken_;  // token hex -> index
  std::map<std::uint16_t, std::size_t> byMid_;
  std::uint16_t mid_counter_ = 1;
  std::uint8_t token_seq_ = 0;
  std::uint64_t unmatched_ = 0;
};

}  // namespace coapicn::endpoints
