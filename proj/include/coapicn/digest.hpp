#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <openssl/evp.h>

#include "coapicn/bytes.hpp"

namespace coapicn {

// Digest algorithm used for all ICN identifiers. Pinned per build and
// recorded in every event log header so runs are comparable.
inline constexpr const char* kDigestAlgorithm = "sha256";

using Sha256 = std::array<std::uint8_t, 32>;

inline Sha256 sha256(const std::uint8_t* data, std::size_t len) {
  Sha256 out{};
  unsigned int outlen = 0;
  if (EVP_Digest(data, len, out.data(), &outlen, EVP_sha256(), nullptr) != 1 ||
      outlen != out.size()) {
    throw Error("sha256: digest failure");
  }
  return out;
}

inline Sha256 sha256(const Bytes& data) {
  return sha256(data.data(), data.size());
}

inline Sha256 sha256(std::string_view data) {
  return sha256(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
}

}  // namespace coapicn
