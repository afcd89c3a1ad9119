#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "coapicn/coap/codec.hpp"
#include "coapicn/coap/message.hpp"
#include "coapicn/digest.hpp"
#include "coapicn/nap/fingerprint.hpp"
#include "coapicn/nap/pending.hpp"
#include "coapicn/rd/directory.hpp"
#include "coapicn/sim/fabric.hpp"

namespace coapicn::nap {

enum class NapMode { Icn, Baseline };

inline const char* name(NapMode m) {
  return m == NapMode::Icn ? "icn" : "baseline";
}

// Link accounting category of a CoAP message. Observe notifications
// (sequence >= 1) are kept apart from first responses so fan-out savings
// can be measured without mixing in the registration exchange.
inline icn::MessageKind kindOf(const coap::CoapMessage& m) {
  if (m.isEmpty()) return icn::MessageKind::Ack;
  if (m.isRequest()) return icn::MessageKind::Request;
  auto obs = m.observeValue();
  if (obs && *obs >= 1) return icn::MessageKind::Notify;
  return icn::MessageKind::Response;
}

// Plain-forwarding datagram: the whole CoAP exchange travels end to end,
// NAPs only resolve the destination and relay hop by hop.
struct Datagram {
  std::string src_ep;
  std::string src_nap;
  std::string src_host;  // set on server replies; labels returning acks
  std::string dst_ep;
  std::string dst_nap;
  Bytes coap_bytes;

  Bytes serialize() const {
    Bytes out;
    appendField(out, src_ep);
    appendField(out, src_nap);
    appendField(out, src_host);
    appendField(out, dst_ep);
    appendField(out, dst_nap);
    out.insert(out.end(), coap_bytes.begin(), coap_bytes.end());
    return out;
  }

  static Datagram parse(const Bytes& bytes) {
    Datagram dg;
    std::size_t pos = 0;
    dg.src_ep = readField(bytes, pos);
    dg.src_nap = readField(bytes, pos);
    dg.src_host = readField(bytes, pos);
    dg.dst_ep = readField(bytes, pos);
    dg.dst_nap = readField(bytes, pos);
    dg.coap_bytes.assign(bytes.begin() + pos, bytes.end());
    return dg;
  }

private:
  static void appendField(Bytes& out, const std::string& s) {
    if (s.size() > 0xFFFF) throw Error("datagram field too long");
    out.push_back(static_cast<std::uint8_t>((s.size() >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(s.size() & 0xFF));
    out.insert(out.end(), s.begin(), s.end());
  }
  static std::string readField(const Bytes& bytes, std::size_t& pos) {
    if (pos + 2 > bytes.size()) throw Error("truncated datagram");
    std::size_t len = (bytes[pos] << 8) | bytes[pos + 1];
    pos += 2;
    if (pos + len > bytes.size()) throw Error("truncated datagram");
    std::string s(bytes.begin() + pos, bytes.begin() + pos + len);
    pos += len;
    return s;
  }
};

inline icn::NamedObjectId datagramId(const std::string& dstNap) {
  return {{icn::scopeSegment("ip"), icn::scopeSegment(dstNap)},
          icn::rid(toBytes("dgram:" + dstNap))};
}

struct NapCounters {
  std::uint64_t suppressed_requests = 0;
  std::uint64_t notices_sent = 0;
  std::uint64_t notices_received = 0;
  std::uint64_t orphan_responses = 0;   // response without entry or tombstone
  std::uint64_t stale_notices = 0;      // notice without entry or tombstone
  std::uint64_t token_mismatches = 0;   // delivered token != expected token
  std::uint64_t late_drops = 0;         // arrival for a tombstoned entry
};

// The protocol translation gateway. In gateway mode it turns CoAP requests
// into named-object publications and keeps the pending state that realizes
// suppression, multicast responses and observe fan-out. In plain-forwarding
// mode it routes the unchanged datagrams end to end instead.
class Nap {
public:
  struct EndpointRef {
    std::string id;
    std::string host;                 // server endpoints only
    std::vector<std::string> groups;  // server endpoints only
    bool is_server = false;
    std::function<void(const std::string&, const coap::CoapMessage&)> deliver;
  };

  Nap(icn::NodeId node, NapMode mode, sim::Fabric& fabric,
      sim::EventScheduler& sched, sim::EventLog& log, std::uint64_t seed,
      std::string rdHost, icn::NodeId rdNap)
      : node_(std::move(node)),
        mode_(mode),
        fabric_(fabric),
        sched_(sched),
        log_(log),
        rng_(mixSeed(seed, node_)) {
    fabric_.attachNode(node_, sim::Fabric::NodeHooks{
        [this](const icn::NamedObjectId& id, const Bytes& b,
               const icn::NodeId& f, icn::MessageKind k) { onObject(id, b, f, k); },
        [this](const icn::NamedObjectId& id, const icn::ForwardingTree& t) {
          onTree(id, t);
        },
        [this](const icn::NamedObjectId& id) { onSubscribersGone(id); }});
    // every NAP knows where the directory lives; nothing else is static
    rd::RdEntry rdEntry;
    rdEntry.endpoint = rdHost;
    rdEntry.host = std::move(rdHost);
    rdEntry.nap = std::move(rdNap);
    hostMap_[rdEntry.host].push_back(rdEntry);
  }

  const icn::NodeId& node() const { return node_; }
  NapMode mode() const { return mode_; }
  const NapCounters& counters() const { return counters_; }
  std::size_t maxClientEntries() const { return max_client_entries_; }
  std::size_t maxServerEntries() const { return max_server_entries_; }
  std::size_t maxWaiters() const { return max_waiters_; }

  void attachEndpoint(EndpointRef ref) {
    if (endpoints_.count(ref.id))
      throw Error("endpoint " + ref.id + " attached twice");
    if (ref.is_server && mode_ == NapMode::Icn) {
      if (hostSubscribed_.insert(ref.host).second)
        fabric_.subscribeScope(node_, requestScope(ref.host),
                               sim::ScopeMode::Anycast);
      for (const auto& g : ref.groups) {
        if (hostSubscribed_.insert(g).second)
          fabric_.subscribeScope(node_, requestScope(g),
                                 sim::ScopeMode::Multicast);
      }
    }
    if (ref.is_server) serverOrder_.push_back(ref.id);
    endpoints_[ref.id] = std::move(ref);
  }

  // RD watch feed; also pre-seeded with the directory itself.
  void onRdEntry(const rd::RdEntry& e) {
    hostMap_[e.host].push_back(e);
    for (const auto& g : e.groups) {
      groupMembers_[g].push_back(e);
      knownGroups_.insert(g);
    }
    log_.record(sched_.now(), node_, "rd_push", "",
                "ep=" + e.endpoint + " host=" + e.host + " nap=" + e.nap);
    flushUnknownHost(e.host);
    for (const auto& g : e.groups) flushUnknownHost(g);
  }

  // ---- endpoint ingress ----------------------------------------------

  // Request path: the endpoint does not know where the request goes.
  void fromEndpoint(const std::string& ep, coap::CoapMessage msg) {
    try {
      msg.validate();
      if (!msg.isRequest())
        throw coap::InvalidMessage("endpoint request path needs a request");
      if (!msg.uriHost())
        throw coap::InvalidMessage("request carries no Uri-Host option");
    } catch (const coap::InvalidMessage& err) {
      // out-of-subset traffic is refused at the attachment point
      log_.record(sched_.now(), node_, "reject_request", "", err.what());
      coap::CoapMessage rsp;
      rsp.type = coap::MsgType::NonConfirmable;
      rsp.code = coap::codes::ServiceUnavailable;
      rsp.message_id = freshMid();
      if (msg.token.size() <= 8) rsp.token = msg.token;
      deliverLocal(ep, node_, std::move(rsp));
      return;
    }
    if (mode_ == NapMode::Baseline) {
      baselineRequest(ep, msg);
      return;
    }
    // gateway takes charge of reliability on the client link
    if (msg.type == coap::MsgType::Confirmable)
      deliverLocal(ep, node_, coap::emptyAck(msg.message_id));
    if (msg.observeValue() == std::uint32_t{1} && tryLocalCancel(ep, msg))
      return;
    icnClientRequest(ep, msg);
  }

  // Reply path: addressed to a known peer (the NAP itself in gateway
  // mode; the original requester in plain-forwarding mode).
  void fromEndpointTo(const std::string& ep, const std::string& to,
                      coap::CoapMessage msg) {
    if (mode_ == NapMode::Baseline) {
      baselineReply(ep, to, msg);
      return;
    }
    if (to != node_)
      throw Error("gateway mode replies go to the NAP, not " + to);
    icnServerReply(ep, msg);
  }

private:
  // ---- shared helpers ------------------------------------------------

  static std::uint64_t mixSeed(std::uint64_t seed, const std::string& node) {
    auto d = sha256(toBytes(node + ":" + std::to_string(seed)));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
    return v;
  }

  std::uint16_t freshMid() { return static_cast<std::uint16_t>(rng_()); }

  EndpointRef& endpointAt(const std::string& id) {
    auto it = endpoints_.find(id);
    if (it == endpoints_.end())
      throw Error("no endpoint " + id + " at " + node_);
    return it->second;
  }

  void deliverLocal(const std::string& toEp, const std::string& from,
                    coap::CoapMessage msg) {
    auto& ref = endpointAt(toEp);
    sched_.schedule(0, [deliver = ref.deliver, from, msg] {
      deliver(from, msg);
    });
  }

  void flushUnknownHost(const std::string& host) {
    auto it = unknown_host_queue_.find(host);
    if (it == unknown_host_queue_.end()) return;
    auto queued = std::move(it->second);
    unknown_host_queue_.erase(it);
    for (auto& [ep, msg] : queued) baselineRequest(ep, msg);
  }

  // ---- gateway mode, client side -------------------------------------

  bool tryLocalCancel(const std::string& ep, const coap::CoapMessage& msg) {
    auto key = std::make_pair(ep, toHex(msg.token));
    auto it = byClientToken_.find(key);
    if (it == byClientToken_.end()) return false;
    auto eit = entries_.find(it->second);
    if (eit == entries_.end() || eit->second.mode != PendingMode::Observe)
      return false;
    ClientPending& e = eit->second;
    log_.record(sched_.now(), node_, "cancel_local", e.response_id.str(),
                "client=" + ep);
    // deregistration is confirmed locally; no server round trip
    coap::CoapMessage rsp;
    rsp.type = coap::MsgType::NonConfirmable;
    rsp.code = coap::codes::Content;
    rsp.message_id = freshMid();
    rsp.token = msg.token;
    deliverLocal(ep, node_, std::move(rsp));
    e.waiters.erase(ep);
    byClientToken_.erase(it);
    if (e.waiters.empty()) {
      fabric_.unsubscribe(node_, e.response_id);
      retireClientEntry(eit->first);
    }
    return true;
  }

  void icnClientRequest(const std::string& ep, const coap::CoapMessage& msg) {
    auto fp = RequestFingerprint::fromMessage(msg);
    auto reqId = requestId(fp);
    bool isGroup = knownGroups_.count(fp.host) > 0;

    auto it = entries_.find(fp);
    if (it != entries_.end()) {
      // identical request already in flight: no fabric traffic at all
      ClientPending& e = it->second;
      e.waiters[ep] = msg.token;
      byClientToken_[{ep, toHex(msg.token)}] = fp;
      max_waiters_ = std::max(max_waiters_, e.waiters.size());
      log_.record(sched_.now(), node_, "join_pending", e.request_id.str(),
                  "client=" + ep + " waiters=" +
                      std::to_string(e.waiters.size()));
      return;
    }

    ClientPending e;
    e.fingerprint = fp;
    e.request_id = reqId;
    e.network_token = msg.token;  // first waiter's token names the exchange
    e.created = sched_.now();
    e.waiters[ep] = msg.token;
    if (isGroup) {
      e.mode = PendingMode::Group;
      auto scope = groupResponseScope(fp.host, reqId.rid);
      byScope_[scope] = fp;
      fabric_.subscribeScope(node_, scope, sim::ScopeMode::Multicast);
    } else {
      e.mode = fp.observe ? PendingMode::Observe : PendingMode::OneShot;
      e.response_id = responseId(reqId);
      byResponseRid_[icn::hex(e.response_id.rid)] = fp;
      fabric_.subscribe(node_, e.response_id);
    }
    byClientToken_[{ep, toHex(msg.token)}] = fp;
    byRequestRid_[icn::hex(reqId.rid)] = fp;
    entries_[fp] = std::move(e);
    max_client_entries_ = std::max(max_client_entries_, entries_.size());
    max_waiters_ = std::max<std::size_t>(max_waiters_, 1);
    log_.record(sched_.now(), node_, "entry_created", reqId.str(),
                std::string("mode=") + name(entries_[fp].mode) +
                    " client=" + ep + " tok=" + toHex(msg.token));

    fabric_.advertise(node_, reqId);
    coap::CoapMessage canon = msg;
    canon.type = isGroup ? coap::MsgType::NonConfirmable
                         : coap::MsgType::Confirmable;
    canon.message_id = 0;  // message ids never cross the fabric
    outbox_[reqId].queue.push_back(
        {coap::encode(canon), icn::MessageKind::Request, fp.host});
    flushOutbox(reqId);
  }

  void deliverToWaiter(ClientPending& e, coap::CoapMessage msg,
                       const std::string& ep) {
    msg.token = e.waiters.at(ep);
    msg.message_id = freshMid();
    msg.type = coap::MsgType::NonConfirmable;
    log_.record(sched_.now(), node_, "token_rewrite", e.response_id.str(),
                "net=" + toHex(e.network_token) + " client=" + ep +
                    " tok=" + toHex(msg.token));
    deliverLocal(ep, node_, std::move(msg));
  }

  // by value: callers often hold references into the index maps erased here
  void retireClientEntry(RequestFingerprint fp) {
    auto it = entries_.find(fp);
    if (it == entries_.end()) return;
    ClientPending& e = it->second;
    if (e.mode == PendingMode::Group) {
      auto scope = groupResponseScope(fp.host, e.request_id.rid);
      byScope_.erase(scope);
      tombScopes_.insert(scope);
    } else {
      byResponseRid_.erase(icn::hex(e.response_id.rid));
      tombRids_.insert(icn::hex(e.response_id.rid));
    }
    byRequestRid_.erase(icn::hex(e.request_id.rid));
    tombRids_.insert(icn::hex(e.request_id.rid));
    for (const auto& [ep, tok] : e.waiters)
      byClientToken_.erase({ep, toHex(tok)});
    log_.record(sched_.now(), node_, "entry_retired", e.request_id.str(), "");
    entries_.erase(it);
  }

  void icnClientResponse(const icn::NamedObjectId& id,
                         const coap::CoapMessage& msg) {
    auto ridHex = icn::hex(id.rid);
    const RequestFingerprint* fp = nullptr;
    if (auto it = byResponseRid_.find(ridHex); it != byResponseRid_.end())
      fp = &it->second;
    else if (auto sit = byScope_.find(id.scope_path); sit != byScope_.end())
      fp = &sit->second;
    if (!fp) {
      if (tombRids_.count(ridHex) || tombScopes_.count(id.scope_path)) {
        ++counters_.late_drops;
        log_.record(sched_.now(), node_, "late_drop", id.str(), "");
      } else {
        ++counters_.orphan_responses;
        log_.record(sched_.now(), node_, "orphan_response", id.str(), "");
      }
      return;
    }
    ClientPending& e = entries_.at(*fp);
    // group answers are matched by their per-request scope; their tokens
    // vary with the responder, so only exact-id responses are checked
    if (e.mode != PendingMode::Group && msg.token != e.network_token) {
      ++counters_.token_mismatches;
      log_.record(sched_.now(), node_, "token_mismatch", id.str(),
                  "got=" + toHex(msg.token) +
                      " want=" + toHex(e.network_token));
      return;
    }
    for (const auto& [ep, tok] : e.waiters) {
      (void)tok;
      deliverToWaiter(e, msg, ep);
    }
    if (e.mode == PendingMode::OneShot) {
      fabric_.unsubscribe(node_, e.response_id);
      retireClientEntry(*fp);
    }
  }

  // ---- gateway mode, server side -------------------------------------

  // Local responders for a request host: the first attached server owning
  // the host (anycast within the node), or every attached group member.
  std::vector<std::string> localResponders(const std::string& host,
                                           bool& groupFlow) {
    std::vector<std::string> direct;
    std::vector<std::string> members;
    for (const auto& id : serverOrder_) {
      const auto& ref = endpoints_.at(id);
      if (ref.host == host) direct.push_back(id);
      for (const auto& g : ref.groups)
        if (g == host) members.push_back(id);
    }
    if (!direct.empty()) {
      groupFlow = false;
      return {direct.front()};
    }
    groupFlow = true;
    return members;
  }

  void icnServerRequest(const icn::NamedObjectId& id,
                        const coap::CoapMessage& msg,
                        const icn::NodeId& fromNap) {
    auto fp = RequestFingerprint::fromMessage(msg);

    if (auto it = sentries_.find(fp); it != sentries_.end()) {
      ServerPending& e = it->second;
      if (e.draining) {
        // teardown in progress: hold the request, replay once drained
        log_.record(sched_.now(), node_, "drain_defer", id.str(),
                    "from=" + fromNap);
        e.deferred.push_back({id, coap::encode(msg), fromNap});
        return;
      }
      // identical request already pending: suppress, tell the requester
      // NAP which token the response will carry
      ++counters_.suppressed_requests;
      e.confirmed.insert(fromNap);
      log_.record(sched_.now(), node_, "suppress", id.str(),
                  "from=" + fromNap +
                      " confirmed=" + std::to_string(e.confirmed.size()));
      if (e.mode != PendingMode::Group) {
        // group answers are matched by scope and checked loosely; only
        // exact-id conversations need the token forewarning
        PendingNotice notice{e.request_id.rid, e.network_token, node_};
        fabric_.publishTo(node_, fromNap, noticeId(fp.host, fromNap),
                          notice.serialize(), icn::MessageKind::Notice,
                          fp.host);
        ++counters_.notices_sent;
      }
      // a queued response may already be releasable under the wider set;
      // flushing can retire the entry, so collect ids first
      std::vector<icn::NamedObjectId> rspIds;
      for (const auto& [epId, r] : e.responders) {
        (void)epId;
        rspIds.push_back(r.response_id);
      }
      for (const auto& rspId : rspIds) flushOutbox(rspId);
      return;
    }

    bool groupFlow = false;
    auto responders = localResponders(fp.host, groupFlow);
    if (responders.empty()) {
      if (knownGroups_.count(fp.host)) {
        // group-scoped request at a node with no remaining member
        log_.record(sched_.now(), node_, "no_responder", id.str(),
                    "host=" + fp.host);
        return;
      }
      notFoundObject(id, fp, msg, fromNap);
      return;
    }

    ServerPending e;
    e.fingerprint = fp;
    e.request_id = id;
    e.network_token = msg.token;  // first forwarded request names the exchange
    e.mode = fp.observe ? PendingMode::Observe
                        : (groupFlow ? PendingMode::Group
                                     : PendingMode::OneShot);
    e.confirmed = {fromNap};
    e.created = sched_.now();
    for (const auto& epId : responders) {
      ServerPending::Responder r;
      r.response_id =
          groupFlow
              ? groupResponseId(fp.host, id.rid, endpoints_.at(epId).host)
              : responseId(id);
      byServerRspRid_[icn::hex(r.response_id.rid)] = fp;
      e.responders[epId] = std::move(r);
    }
    if (auto prev = byServerToken_.find(toHex(e.network_token));
        prev != byServerToken_.end() && !(prev->second == fp)) {
      log_.record(sched_.now(), node_, "token_collision", id.str(),
                  "tok=" + toHex(e.network_token));
    }
    byServerToken_[toHex(e.network_token)] = fp;
    sentries_[fp] = std::move(e);
    max_server_entries_ = std::max(max_server_entries_, sentries_.size());
    log_.record(sched_.now(), node_, "sentry_created", id.str(),
                std::string("mode=") + name(sentries_[fp].mode) + " from=" +
                    fromNap + " responders=" +
                    std::to_string(responders.size()));

    for (const auto& [epId, r] : sentries_[fp].responders) {
      fabric_.advertise(node_, r.response_id);
      coap::CoapMessage fwd = msg;
      fwd.message_id = freshMid();
      log_.record(sched_.now(), node_, "forward_to_server", id.str(),
                  "server=" + epId + " tok=" + toHex(fwd.token));
      deliverLocal(epId, node_, std::move(fwd));
    }
  }

  // No server here owns the requested host: answer with a 4.04 object so
  // the requester is not left pending.
  void notFoundObject(const icn::NamedObjectId& id,
                      const RequestFingerprint& fp,
                      const coap::CoapMessage& msg,
                      const icn::NodeId& fromNap) {
    log_.record(sched_.now(), node_, "no_local_server", id.str(),
                "host=" + fp.host);
    ServerPending e;
    e.fingerprint = fp;
    e.request_id = id;
    e.network_token = msg.token;
    e.mode = PendingMode::OneShot;
    e.confirmed = {fromNap};
    e.created = sched_.now();
    auto rspId = responseId(id);
    byServerRspRid_[icn::hex(rspId.rid)] = fp;
    sentries_[fp] = std::move(e);
    max_server_entries_ = std::max(max_server_entries_, sentries_.size());
    fabric_.advertise(node_, rspId);
    coap::CoapMessage rsp;
    rsp.type = coap::MsgType::NonConfirmable;
    rsp.code = coap::codes::NotFound;
    rsp.message_id = 0;
    rsp.token = msg.token;
    rsp.payload = toBytes("no server for " + fp.host);
    outbox_[rspId].queue.push_back(
        {coap::encode(rsp), icn::MessageKind::Response, fp.host});
    flushOutbox(rspId);
  }

  void icnServerReply(const std::string& ep, coap::CoapMessage msg) {
    if (msg.isEmpty()) return;  // server's ack of a relayed confirmable
    if (!msg.isResponse())
      throw coap::InvalidMessage("server reply path needs a response");
    auto it = byServerToken_.find(toHex(msg.token));
    if (it == byServerToken_.end()) {
      ++counters_.orphan_responses;
      log_.record(sched_.now(), node_, "orphan_server_reply", "",
                  "server=" + ep + " tok=" + toHex(msg.token));
      return;
    }
    ServerPending& e = sentries_.at(it->second);
    if (e.draining) {
      // only the deregistration confirmation ends the drain; in-flight
      // notifications are obsolete and dropped quietly
      if (e.dereg_sent && !msg.observeValue()) finalizeDrain(it->second);
      return;
    }
    auto rit = e.responders.find(ep);
    if (rit == e.responders.end())
      throw Error("reply from unexpected responder " + ep);
    ServerPending::Responder& r = rit->second;

    coap::CoapMessage canon = msg;
    canon.type = coap::MsgType::NonConfirmable;
    canon.message_id = 0;
    auto kind = kindOf(canon);
    auto bytes = coap::encode(canon);
    r.responded = true;
    log_.record(sched_.now(), node_, "response_from_server",
                r.response_id.str(),
                "server=" + ep + " kind=" + icn::name(kind));
    outbox_[r.response_id].queue.push_back({bytes, kind, e.fingerprint.host});
    flushOutbox(r.response_id);
  }

  // by value: callers often hold references into the index maps erased here
  void finalizeDrain(RequestFingerprint fp) {
    auto it = sentries_.find(fp);
    if (it == sentries_.end()) return;
    ServerPending& e = it->second;
    for (const auto& [epId, r] : e.responders) {
      (void)epId;
      byServerRspRid_.erase(icn::hex(r.response_id.rid));
      outbox_.erase(r.response_id);
    }
    byServerToken_.erase(toHex(e.network_token));
    auto deferred = std::move(e.deferred);
    log_.record(sched_.now(), node_, "drain_done", e.request_id.str(), "");
    sentries_.erase(it);
    // requests that arrived mid-teardown restart the flow cleanly
    for (const auto& [reqId, bytes, from] : deferred)
      icnServerRequest(reqId, coap::decode(bytes), from);
  }

  // ---- fabric hooks --------------------------------------------------

  void onObject(const icn::NamedObjectId& id, const Bytes& bytes,
                const icn::NodeId& from, icn::MessageKind kind) {
    (void)kind;
    if (mode_ == NapMode::Baseline) {
      onDatagram(bytes);
      return;
    }
    if (!id.scope_path.empty() && id.scope_path[0] == ctlScopeSegment()) {
      onNotice(bytes);
      return;
    }
    auto msg = coap::decode(bytes);
    if (msg.isRequest())
      icnServerRequest(id, msg, from);
    else
      icnClientResponse(id, msg);
  }

  void onNotice(const Bytes& bytes) {
    auto notice = PendingNotice::parse(bytes);
    auto ridHex = icn::hex(notice.request_rid);
    auto it = byRequestRid_.find(ridHex);
    if (it == byRequestRid_.end()) {
      if (tombRids_.count(ridHex)) {
        ++counters_.late_drops;
        log_.record(sched_.now(), node_, "late_drop", "", "notice " + ridHex);
      } else {
        ++counters_.stale_notices;
        log_.record(sched_.now(), node_, "stale_notice", "", ridHex);
      }
      return;
    }
    ClientPending& e = entries_.at(it->second);
    ++counters_.notices_received;
    log_.record(sched_.now(), node_, "notice_rx", e.request_id.str(),
                "from=" + notice.nap + " expect tok=" + toHex(notice.token) +
                    " was=" + toHex(e.network_token));
    e.network_token = notice.token;  // the response carries this token now
  }

  void onTree(const icn::NamedObjectId& id, const icn::ForwardingTree& tree) {
    log_.record(sched_.now(), node_, "tree_rx", id.str(),
                "leaves=" + std::to_string(tree.leaves.size()));
    Outbox& ob = outbox_[id];
    ob.tree = tree;
    ob.seen_leaves.insert(tree.root);
    ob.seen_leaves.insert(tree.leaves.begin(), tree.leaves.end());
    if (auto owner = byServerRspRid_.find(icn::hex(id.rid));
        owner != byServerRspRid_.end()) {
      ServerPending& e = sentries_.at(owner->second);
      if (e.draining && !e.dereg_sent && !tree.leaves.empty()) {
        // subscribers came back before the teardown fired
        e.draining = false;
        log_.record(sched_.now(), node_, "drain_cancel", e.request_id.str(),
                    "");
        auto deferred = std::move(e.deferred);
        e.deferred.clear();
        for (const auto& [reqId, bytes, from] : deferred)
          icnServerRequest(reqId, coap::decode(bytes), from);
      }
    }
    flushOutbox(id);
  }

  void onSubscribersGone(const icn::NamedObjectId& id) {
    log_.record(sched_.now(), node_, "subs_gone", id.str(), "");
    // the cached tree must not outlive interest; seen_leaves survives so
    // past departures are still told apart from in-flight joins
    auto dropTree = [this, &id] {
      if (auto ot = outbox_.find(id); ot != outbox_.end()) {
        ot->second.tree.reset();
        ot->second.queue.clear();
      }
    };
    auto owner = byServerRspRid_.find(icn::hex(id.rid));
    if (owner == byServerRspRid_.end()) {
      dropTree();
      return;
    }
    ServerPending& e = sentries_.at(owner->second);
    if (e.mode == PendingMode::Observe && !e.draining) {
      // The signal can be stale: a new observer whose subscription crossed
      // the zero-crossing at the rendezvous has a tree re-notification at
      // most two control latencies behind it. Delay the deregistration by
      // that bound; an arriving non-empty tree cancels the drain.
      e.draining = true;
      ++e.drain_epoch;
      log_.record(sched_.now(), node_, "drain_start", id.str(),
                  "epoch=" + std::to_string(e.drain_epoch));
      sched_.schedule(2 * fabric_.controlLatency(),
                      [this, fp = owner->second, epoch = e.drain_epoch] {
                        drainFire(fp, epoch);
                      });
    }
    dropTree();
  }

  // Deadline passed with no sign of live subscribers: deregister from the
  // local server(s). Only their non-observe confirmation ends the drain.
  void drainFire(RequestFingerprint fp, std::uint32_t epoch) {
    auto it = sentries_.find(fp);
    if (it == sentries_.end()) return;
    ServerPending& e = it->second;
    if (!e.draining || e.dereg_sent || e.drain_epoch != epoch) return;
    e.dereg_sent = true;
    for (const auto& [epId, r] : e.responders) {
      (void)r;
      coap::CoapMessage dereg;
      dereg.type = coap::MsgType::NonConfirmable;
      dereg.code = coap::codes::Get;
      dereg.message_id = freshMid();
      dereg.token = e.network_token;
      dereg.setObserve(1);
      dereg.addOption(coap::options::UriHost, e.fingerprint.host);
      for (const auto& seg : e.fingerprint.path)
        dereg.addOption(coap::options::UriPath, seg);
      for (const auto& q : e.fingerprint.query)
        dereg.addOption(coap::options::UriQuery, q);
      log_.record(sched_.now(), node_, "drain_dereg", e.request_id.str(),
                  "server=" + epId);
      deliverLocal(epId, node_, std::move(dereg));
    }
  }

  // Publishes queued objects once the cached tree covers every confirmed
  // requester that still has a join in flight. Response trees are pruned to
  // the confirmed requesters the tree can actually reach: a confirmed node
  // never seen in any tree is still joining (wait for it), one seen before
  // but absent now has unsubscribed (skip it).
  void flushOutbox(const icn::NamedObjectId& id) {
    auto it = outbox_.find(id);
    if (it == outbox_.end() || !it->second.tree || it->second.queue.empty())
      return;
    Outbox& ob = it->second;
    std::set<std::string> require;
    const RequestFingerprint* ownerFp = nullptr;
    if (auto owner = byServerRspRid_.find(icn::hex(id.rid));
        owner != byServerRspRid_.end()) {
      ownerFp = &owner->second;
      for (const auto& n : sentries_.at(*ownerFp).confirmed)
        if (!ob.seen_leaves.count(n)) require.insert(n);
    }
    if (!ob.covers(require)) return;
    std::set<std::string> keep;
    if (ownerFp) {
      // A confirmed requester on our own node counts only while its exact
      // subscription keeps the root among the leaves; a stale one must be
      // skipped like any stale remote requester.
      for (const auto& n : sentries_.at(*ownerFp).confirmed)
        if (ob.tree->leaves.count(n)) keep.insert(n);
      if (keep.empty()) {
        // every requester is gone; drop quietly, interest may return later
        ob.queue.clear();
        return;
      }
    }
    auto items = std::move(ob.queue);
    ob.queue.clear();
    for (auto& item : items) {
      auto tree = ownerFp ? icn::pruneTree(*ob.tree, keep) : *ob.tree;
      fabric_.publish(node_, tree, id, item.bytes, item.kind, item.host);
    }
    if (ownerFp) {
      ServerPending& e = sentries_.at(*ownerFp);
      if (e.mode == PendingMode::OneShot) {
        bool allDone = true;
        for (const auto& [epId, r] : e.responders) {
          (void)epId;
          allDone = allDone && r.responded;
        }
        if (allDone) retireServerEntry(*ownerFp);
      }
    }
  }

  // by value: callers often hold references into the index maps erased here
  void retireServerEntry(RequestFingerprint fp) {
    auto it = sentries_.find(fp);
    if (it == sentries_.end()) return;
    ServerPending& e = it->second;
    for (const auto& [epId, r] : e.responders) {
      (void)epId;
      byServerRspRid_.erase(icn::hex(r.response_id.rid));
    }
    byServerRspRid_.erase(icn::hex(responseId(e.request_id).rid));
    byServerToken_.erase(toHex(e.network_token));
    log_.record(sched_.now(), node_, "sentry_retired", e.request_id.str(), "");
    sentries_.erase(it);
  }

  // ---- plain-forwarding mode -----------------------------------------

  void baselineRequest(const std::string& ep, const coap::CoapMessage& msg) {
    auto host = msg.uriHost();
    if (!host) throw coap::InvalidMessage("request carries no Uri-Host");
    if (auto git = groupMembers_.find(*host); git != groupMembers_.end()) {
      // group addressing becomes one unicast per member
      for (const auto& member : git->second) {
        Datagram dg{ep, node_, "", member.endpoint, member.nap,
                    coap::encode(msg)};
        sendDatagram(dg, *host, kindOf(msg));
      }
      return;
    }
    auto hit = hostMap_.find(*host);
    if (hit == hostMap_.end() || hit->second.empty()) {
      if (msg.type == coap::MsgType::Confirmable) {
        unknown_host_queue_[*host].push_back({ep, msg});
        log_.record(sched_.now(), node_, "hold_unknown_host", "",
                    "host=" + *host);
        return;
      }
      coap::CoapMessage rsp;
      rsp.type = coap::MsgType::NonConfirmable;
      rsp.code = coap::codes::NotFound;
      rsp.message_id = freshMid();
      rsp.token = msg.token;
      rsp.payload = toBytes("unknown host " + *host);
      log_.record(sched_.now(), node_, "unknown_host", "", "host=" + *host);
      deliverLocal(ep, node_, std::move(rsp));
      return;
    }
    // replicated hosts resolve to the first registration
    const auto& target = hit->second.front();
    Datagram dg{ep, node_, "", target.endpoint, target.nap, coap::encode(msg)};
    sendDatagram(dg, *host, kindOf(msg));
  }

  void baselineReply(const std::string& ep, const std::string& to,
                     const coap::CoapMessage& msg) {
    auto rc = route_cache_.find(to);
    if (rc == route_cache_.end())
      throw Error(node_ + ": no return route to " + to);
    const auto& ref = endpointAt(ep);
    std::string label = ref.is_server ? ref.host : rc->second.host;
    Datagram dg{ep,          node_, ref.is_server ? ref.host : "",
                to,          rc->second.nap,
                coap::encode(msg)};
    sendDatagram(dg, label, kindOf(msg));
  }

  void sendDatagram(const Datagram& dg, const std::string& hostLabel,
                    icn::MessageKind kind) {
    if (dg.dst_nap == node_) {
      sched_.schedule(0, [this, dg] { onDatagram(dg.serialize()); });
      return;
    }
    fabric_.publishTo(node_, dg.dst_nap, datagramId(dg.dst_nap),
                      dg.serialize(), kind, hostLabel);
  }

  void onDatagram(const Bytes& bytes) {
    auto dg = Datagram::parse(bytes);
    route_cache_[dg.src_ep] = {dg.src_nap, dg.src_host};
    auto msg = coap::decode(dg.coap_bytes);
    deliverLocal(dg.dst_ep, dg.src_ep, std::move(msg));
  }

  // ---- state ---------------------------------------------------------

  icn::NodeId node_;
  NapMode mode_;
  sim::Fabric& fabric_;
  sim::EventScheduler& sched_;
  sim::EventLog& log_;
  std::mt19937_64 rng_;
  NapCounters counters_;

  std::map<std::string, EndpointRef> endpoints_;
  std::vector<std::string> serverOrder_;
  std::set<std::string> hostSubscribed_;

  // gateway state
  std::map<RequestFingerprint, ClientPending> entries_;
  std::map<RequestFingerprint, ServerPending> sentries_;
  std::map<std::string, RequestFingerprint> byRequestRid_;    // rid hex
  std::map<std::string, RequestFingerprint> byResponseRid_;   // rid hex
  std::map<std::vector<icn::ScopeSegment>, RequestFingerprint> byScope_;
  std::map<std::pair<std::string, std::string>, RequestFingerprint>
      byClientToken_;  // (client, token hex)
  std::map<std::string, RequestFingerprint> byServerToken_;   // token hex
  std::map<std::string, RequestFingerprint> byServerRspRid_;  // rid hex
  std::set<std::string> tombRids_;
  std::set<std::vector<icn::ScopeSegment>> tombScopes_;
  std::map<icn::NamedObjectId, Outbox> outbox_;

  // directory knowledge
  std::map<std::string, std::vector<rd::RdEntry>> hostMap_;
  std::map<std::string, std::vector<rd::RdEntry>> groupMembers_;
  std::set<std::string> knownGroups_;

  // plain-forwarding state
  struct Route {
    std::string nap;
    std::string host;
  };
  std::map<std::string, Route> route_cache_;
  std::map<std::string, std::vector<std::pair<std::string, coap::CoapMessage>>>
      unknown_host_queue_;

  std::size_t max_client_entries_ = 0;
  std::size_t max_server_entries_ = 0;
  std::size_t max_waiters_ = 0;
};

}  // namespace coapicn::nap
