#pragma once

#include <cstdint>

#include "coapicn/coap/message.hpp"

namespace coapicn::coap {

// Raised by decode() when a datagram cannot be parsed as a message of the
// supported subset. The caller drops or RSTs the datagram per policy.
class MalformedPacket : public Error {
public:
  using Error::Error;
};

namespace detail {

// Option delta / length nibble plus extended bytes per RFC 7252 section 3.1.
inline void putExt(Bytes& out, std::size_t nibblePos, bool high,
                   std::uint32_t value) {
  std::uint8_t nibble;
  if (value <= 12) {
    nibble = static_cast<std::uint8_t>(value);
  } else if (value <= 268) {
    nibble = 13;
    out.push_back(static_cast<std::uint8_t>(value - 13));
  } else {
    nibble = 14;
    out.push_back(static_cast<std::uint8_t>((value - 269) >> 8));
    out.push_back(static_cast<std::uint8_t>((value - 269) & 0xFF));
  }
  out[nibblePos] |= high ? static_cast<std::uint8_t>(nibble << 4) : nibble;
}

class Reader {
public:
  Reader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

  std::uint8_t u8() {
    if (pos_ >= len_) throw MalformedPacket("truncated packet");
    return data_[pos_++];
  }
  Bytes take(std::size_t n) {
    if (len_ - pos_ < n) throw MalformedPacket("truncated packet");
    Bytes out(data_ + pos_, data_ + pos_ + n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == len_; }
  std::uint8_t peek() const { return data_[pos_]; }

private:
  const std::uint8_t* data_;
  std::size_t len_;
  std::size_t pos_ = 0;
};

inline std::uint32_t readExt(Reader& r, std::uint8_t nibble,
                             const char* what) {
  switch (nibble) {
    case 13: return 13u + r.u8();
    case 14: {
      std::uint32_t hi = r.u8();
      return 269u + ((hi << 8) | r.u8());
    }
    case 15: throw MalformedPacket(std::string("reserved ") + what +
                                   " nibble 15");
    default: return nibble;
  }
}

}  // namespace detail

// RFC 7252 section 3 wire encoding. Deterministic: equal messages yield
// identical bytes.
inline Bytes encode(const CoapMessage& msg) {
  msg.validate();
  Bytes out;
  out.reserve(4 + msg.token.size() + msg.payload.size() + 8);
  out.push_back(static_cast<std::uint8_t>(
      (msg.version << 6) | (static_cast<std::uint8_t>(msg.type) << 4) |
      msg.token.size()));
  out.push_back(msg.code.raw());
  out.push_back(static_cast<std::uint8_t>(msg.message_id >> 8));
  out.push_back(static_cast<std::uint8_t>(msg.message_id & 0xFF));
  out.insert(out.end(), msg.token.begin(), msg.token.end());

  std::uint16_t prev = 0;
  for (const auto& opt : msg.options) {
    std::size_t head = out.size();
    out.push_back(0);
    detail::putExt(out, head, true, opt.number - prev);
    detail::putExt(out, head, false,
                   static_cast<std::uint32_t>(opt.value.size()));
    out.insert(out.end(), opt.value.begin(), opt.value.end());
    prev = opt.number;
  }
  if (!msg.payload.empty()) {
    out.push_back(0xFF);
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  }
  return out;
}

// Inverse of encode on valid inputs; throws MalformedPacket otherwise.
inline CoapMessage decode(const std::uint8_t* data, std::size_t len) {
  detail::Reader r(data, len);
  CoapMessage msg;

  std::uint8_t b0 = r.u8();
  msg.version = b0 >> 6;
  if (msg.version != 1) throw MalformedPacket("unknown version");
  msg.type = static_cast<MsgType>((b0 >> 4) & 0x03);
  std::uint8_t tkl = b0 & 0x0F;
  if (tkl > 8) throw MalformedPacket("token length nibble 9..15");
  msg.code = Code::fromRaw(r.u8());
  std::uint16_t hi = r.u8();
  msg.message_id = static_cast<std::uint16_t>((hi << 8) | r.u8());
  msg.token = r.take(tkl);

  std::uint16_t number = 0;
  while (!r.done()) {
    if (r.peek() == 0xFF) {
      r.u8();
      if (r.done()) throw MalformedPacket("payload marker with empty payload");
      while (!r.done()) msg.payload.push_back(r.u8());
      break;
    }
    std::uint8_t head = r.u8();
    std::uint32_t delta = detail::readExt(r, head >> 4, "option delta");
    std::uint32_t vlen = detail::readExt(r, head & 0x0F, "option length");
    number = static_cast<std::uint16_t>(number + delta);
    msg.options.push_back(Option{number, r.take(vlen)});
  }

  try {
    msg.validate();
  } catch (const InvalidMessage& e) {
    throw MalformedPacket(e.what());
  }
  return msg;
}

inline CoapMessage decode(const Bytes& data) {
  return decode(data.data(), data.size());
}

}  // namespace coapicn::coap
