#pragma once

#include <algorithm>
#include <compare>
#include <string>
#include <vector>

#include "coapicn/coap/message.hpp"
#include "coapicn/digest.hpp"
#include "coapicn/icn/name.hpp"

namespace coapicn::nap {

// Canonical identity of a request as seen by the fabric. Two requests with
// the same fingerprint name the same request/response objects, which is
// what makes suppression and coincidental multicast possible. The observe
// flag is part of the identity: a plain GET and an observe registration
// for the same resource are different conversations. Payload and
// Content-Format are deliberately not part of the identity.
struct RequestFingerprint {
  std::uint8_t code_raw = 0;
  bool observe = false;
  std::string host;
  std::vector<std::string> path;
  std::vector<std::string> query;

  auto operator<=>(const RequestFingerprint&) const = default;

  // Unambiguous serialization: every variable-length field is prefixed
  // with a 16-bit big-endian length, list fields with an element count.
  Bytes serialize() const {
    Bytes out;
    out.push_back(code_raw);
    out.push_back(observe ? 1 : 0);
    appendField(out, Bytes(host.begin(), host.end()));
    appendList(out, path);
    appendList(out, query);
    return out;
  }

  std::string str() const {
    std::string s = coap::Code::fromRaw(code_raw).str();
    if (observe) s += "+obs";
    s += " " + host;
    for (const auto& seg : path) s += "/" + seg;
    for (std::size_t i = 0; i < query.size(); ++i)
      s += (i == 0 ? "?" : "&") + query[i];
    return s;
  }

  static RequestFingerprint fromMessage(const coap::CoapMessage& msg) {
    auto host = msg.uriHost();
    if (!host)
      throw coap::InvalidMessage("request carries no Uri-Host option");
    RequestFingerprint fp;
    fp.code_raw = msg.code.raw();
    fp.observe = msg.observeValue() == std::uint32_t{0};
    fp.host = *host;
    fp.path = msg.uriPath();
    fp.query = msg.uriQuery();
    return fp;
  }

private:
  static void appendField(Bytes& out, const Bytes& field) {
    out.push_back(static_cast<std::uint8_t>((field.size() >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(field.size() & 0xFF));
    out.insert(out.end(), field.begin(), field.end());
  }

  static void appendList(Bytes& out, const std::vector<std::string>& items) {
    out.push_back(static_cast<std::uint8_t>(items.size()));
    for (const auto& item : items)
      appendField(out, Bytes(item.begin(), item.end()));
  }
};

// ---- object naming ---------------------------------------------------
//
// Requests live under /coap/<host-uri>; the response to a request lives in
// an "rsp" subscope with an identifier derived from the request identifier.
// The subscope matters: server-side NAPs hold an anycast subscription on
// the request scope, and a response published into that same scope would
// count its own publisher as a subscriber - the rendezvous could then
// never report the audience as gone. Group responses get a per-request
// subscope so a client NAP can subscribe to "every member's answer to
// this request" without knowing the members.

inline std::vector<icn::ScopeSegment> requestScope(const std::string& host) {
  return {icn::scopeSegment("coap"), icn::scopeSegment(host)};
}

inline icn::NamedObjectId requestId(const RequestFingerprint& fp) {
  return {requestScope(fp.host), icn::rid(fp.serialize())};
}

inline icn::NamedObjectId responseId(const icn::NamedObjectId& reqId) {
  Bytes material(reqId.rid.begin(), reqId.rid.end());
  auto tag = toBytes("rsp");
  material.insert(material.end(), tag.begin(), tag.end());
  auto scope = reqId.scope_path;
  scope.push_back(icn::scopeSegment("rsp"));
  return {std::move(scope), icn::rid(material)};
}

inline std::vector<icn::ScopeSegment> groupResponseScope(
    const std::string& group, const icn::Rid& reqRid) {
  return {icn::scopeSegment("coap"), icn::scopeSegment(group),
          icn::scopeSegment("rsp"), icn::scopeSegment(icn::hex(reqRid))};
}

inline icn::NamedObjectId groupResponseId(const std::string& group,
                                          const icn::Rid& reqRid,
                                          const std::string& responderHost) {
  Bytes material(reqRid.begin(), reqRid.end());
  auto tag = toBytes("rsp" + responderHost);
  material.insert(material.end(), tag.begin(), tag.end());
  return {groupResponseScope(group, reqRid), icn::rid(material)};
}

// ---- pending notices --------------------------------------------------
//
// "Expect the response for this request to carry token <t>" - sent by a
// server-side NAP to a client-side NAP whose duplicate request was
// suppressed. Carried as a control object scoped by the host-uri and
// addressed to the requesting NAP.

inline icn::ScopeSegment ctlScopeSegment() {
  static const icn::ScopeSegment seg = icn::scopeSegment("coap-ctl");
  return seg;
}

inline icn::NamedObjectId noticeId(const std::string& host,
                                   const std::string& targetNap) {
  return {{ctlScopeSegment(), icn::scopeSegment(host)},
          icn::rid(toBytes("notice:" + targetNap))};
}

struct PendingNotice {
  icn::Rid request_rid{};  // fingerprint digest
  Bytes token;             // the network token the response will carry
  std::string nap;         // issuing (server-side) NAP

  Bytes serialize() const {
    if (token.size() > 8) throw Error("notice token too long");
    Bytes out(request_rid.begin(), request_rid.end());
    out.push_back(static_cast<std::uint8_t>(token.size()));
    out.insert(out.end(), token.begin(), token.end());
    out.push_back(static_cast<std::uint8_t>(nap.size()));
    out.insert(out.end(), nap.begin(), nap.end());
    return out;
  }

  static PendingNotice parse(const Bytes& bytes) {
    if (bytes.size() < 34) throw Error("truncated pending notice");
    PendingNotice n;
    std::copy(bytes.begin(), bytes.begin() + 32, n.request_rid.begin());
    std::size_t tkl = bytes[32];
    if (tkl > 8 || bytes.size() < 34 + tkl)
      throw Error("malformed pending notice");
    n.token.assign(bytes.begin() + 33, bytes.begin() + 33 + tkl);
    std::size_t napLen = bytes[33 + tkl];
    if (bytes.size() != 34 + tkl + napLen)
      throw Error("malformed pending notice");
    n.nap.assign(bytes.begin() + 34 + tkl, bytes.end());
    return n;
  }
};

}  // namespace coapicn::nap
