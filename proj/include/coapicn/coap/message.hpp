#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "coapicn/bytes.hpp"

namespace coapicn::coap {

class InvalidMessage : public Error {
public:
  using Error::Error;
};

enum class MsgType : std::uint8_t {
  Confirmable = 0,
  NonConfirmable = 1,
  Acknowledgement = 2,
  Reset = 3,
};

inline const char* name(MsgType t) {
  switch (t) {
    case MsgType::Confirmable: return "CON";
    case MsgType::NonConfirmable: return "NON";
    case MsgType::Acknowledgement: return "ACK";
    case MsgType::Reset: return "RST";
  }
  return "?";
}

// Request/response code, split into class (3 bits) and detail (5 bits).
struct Code {
  std::uint8_t cls = 0;
  std::uint8_t detail = 0;

  auto operator<=>(const Code&) const = default;

  std::uint8_t raw() const {
    return static_cast<std::uint8_t>((cls << 5) | detail);
  }
  static Code fromRaw(std::uint8_t b) {
    return Code{static_cast<std::uint8_t>(b >> 5),
                static_cast<std::uint8_t>(b & 0x1F)};
  }
  std::string str() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%d.%02d", cls, detail);
    return buf;
  }
};

namespace codes {
inline constexpr Code Empty{0, 0};
inline constexpr Code Get{0, 1};
inline constexpr Code Post{0, 2};
inline constexpr Code Created{2, 1};
inline constexpr Code Content{2, 5};
inline constexpr Code BadRequest{4, 0};
inline constexpr Code NotFound{4, 4};
inline constexpr Code ServiceUnavailable{5, 3};
}  // namespace codes

inline bool isSupportedCode(Code c) {
  using namespace codes;
  return c == Empty || c == Get || c == Post || c == Created || c == Content ||
         c == BadRequest || c == NotFound || c == ServiceUnavailable;
}

namespace options {
inline constexpr std::uint16_t UriHost = 3;
inline constexpr std::uint16_t Observe = 6;
inline constexpr std::uint16_t UriPath = 11;
inline constexpr std::uint16_t ContentFormat = 12;
inline constexpr std::uint16_t UriQuery = 15;
}  // namespace options

struct Option {
  std::uint16_t number = 0;
  Bytes value;

  auto operator<=>(const Option&) const = default;
};

// Maximum value length per supported option (RFC 7252 table 4 / RFC 7641).
inline std::optional<std::size_t> maxOptionLength(std::uint16_t number) {
  switch (number) {
    case options::UriHost: return 255;
    case options::Observe: return 3;
    case options::UriPath: return 255;
    case options::ContentFormat: return 2;
    case options::UriQuery: return 255;
    default: return std::nullopt;  // unsupported
  }
}

// Decoded CoAP PDU for the subset this gateway exercises: GET/POST requests,
// their responses, empty ACK/RST, and the observe option.
struct CoapMessage {
  std::uint8_t version = 1;
  MsgType type = MsgType::Confirmable;
  Code code;
  std::uint16_t message_id = 0;
  Bytes token;
  std::vector<Option> options;  // sorted by number, stable among equals
  Bytes payload;

  bool operator==(const CoapMessage&) const = default;

  bool isEmpty() const { return code == codes::Empty; }
  bool isRequest() const { return code.cls == 0 && !isEmpty(); }
  bool isResponse() const { return code.cls >= 2; }

  // Inserts keeping the list sorted by number; equal numbers keep
  // insertion order (Uri-Path and Uri-Query are order sensitive).
  void addOption(std::uint16_t number, Bytes value) {
    auto pos = std::upper_bound(
        options.begin(), options.end(), number,
        [](std::uint16_t n, const Option& o) { return n < o.number; });
    options.insert(pos, Option{number, std::move(value)});
  }
  void addOption(std::uint16_t number, std::string_view value) {
    addOption(number, toBytes(value));
  }

  std::vector<Bytes> optionValues(std::uint16_t number) const {
    std::vector<Bytes> out;
    for (const auto& o : options)
      if (o.number == number) out.push_back(o.value);
    return out;
  }

  std::optional<Bytes> firstOption(std::uint16_t number) const {
    for (const auto& o : options)
      if (o.number == number) return o.value;
    return std::nullopt;
  }

  std::optional<std::string> uriHost() const {
    if (auto v = firstOption(options::UriHost)) return toString(*v);
    return std::nullopt;
  }

  std::vector<std::string> uriPath() const {
    std::vector<std::string> out;
    for (auto& v : optionValues(options::UriPath)) out.push_back(toString(v));
    return out;
  }

  std::vector<std::string> uriQuery() const {
    std::vector<std::string> out;
    for (auto& v : optionValues(options::UriQuery)) out.push_back(toString(v));
    return out;
  }

  bool hasObserve() const {
    return firstOption(options::Observe).has_value();
  }

  // Observe option value as an integer (0 = register, 1 = deregister,
  // otherwise a notification sequence number).
  std::optional<std::uint32_t> observeValue() const {
    auto v = firstOption(options::Observe);
    if (!v) return std::nullopt;
    std::uint32_t out = 0;
    for (auto b : *v) out = (out << 8) | b;
    return out;
  }

  void setObserve(std::uint32_t value) {
    Bytes enc;
    while (value > 0) {  // shortest big-endian form; 0 encodes as empty
      enc.insert(enc.begin(), static_cast<std::uint8_t>(value & 0xFF));
      value >>= 8;
    }
    for (auto& o : options)
      if (o.number == options::Observe) {
        o.value = enc;
        return;
      }
    addOption(options::Observe, enc);
  }

  void validate() const {
    if (version != 1) throw InvalidMessage("version must be 1");
    if (token.size() > 8) throw InvalidMessage("token longer than 8 bytes");
    if (!isSupportedCode(code))
      throw InvalidMessage("unsupported code " + code.str());
    if (isEmpty() &&
        (!token.empty() || !options.empty() || !payload.empty())) {
      throw InvalidMessage("empty message must carry no token/options/payload");
    }
    std::uint16_t prev = 0;
    for (const auto& o : options) {
      if (o.number < prev) throw InvalidMessage("options not sorted");
      prev = o.number;
      auto max = maxOptionLength(o.number);
      if (!max)
        throw InvalidMessage("unsupported option " + std::to_string(o.number));
      if (o.value.size() > *max)
        throw InvalidMessage("option " + std::to_string(o.number) +
                             " value too long");
    }
  }

  // Canonical one-line rendering; also the format of the golden vector file.
  std::string summary() const {
    std::string s = "type=";
    s += name(type);
    s += " code=" + code.str();
    char mid[16];
    std::snprintf(mid, sizeof mid, " mid=0x%04X", message_id);
    s += mid;
    s += " tok=" + (token.empty() ? std::string("-") : toHex(token));
    s += " opts=[";
    if (options.empty()) {
      s += "-";
    } else {
      bool first = true;
      for (const auto& o : options) {
        if (!first) s += ",";
        first = false;
        s += std::to_string(o.number) + ":" +
             (o.value.empty() ? std::string("-") : toHex(o.value));
      }
    }
    s += "] pay=" + (payload.empty() ? std::string("-") : toHex(payload));
    return s;
  }
};

inline CoapMessage emptyAck(std::uint16_t mid) {
  CoapMessage m;
  m.type = MsgType::Acknowledgement;
  m.code = codes::Empty;
  m.message_id = mid;
  return m;
}

inline CoapMessage reset(std::uint16_t mid) {
  CoapMessage m;
  m.type = MsgType::Reset;
  m.code = codes::Empty;
  m.message_id = mid;
  return m;
}

}  // namespace coapicn::coap
