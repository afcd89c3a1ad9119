#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "coapicn/digest.hpp"

namespace coapicn::icn {

// Scope segments are fixed 8-byte digests; rendezvous identifiers are flat
// 32-byte digests.
using ScopeSegment = std::array<std::uint8_t, 8>;
using Rid = std::array<std::uint8_t, 32>;

inline ScopeSegment scopeSegment(std::string_view label) {
  auto full = sha256(label);
  ScopeSegment seg{};
  std::copy(full.begin(), full.begin() + seg.size(), seg.begin());
  return seg;
}

inline Rid rid(const Bytes& material) { return sha256(material); }

template <std::size_t N>
std::string hex(const std::array<std::uint8_t, N>& a, std::size_t bytes = N) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bytes && i < N; ++i) {
    out.push_back(kDigits[a[i] >> 4]);
    out.push_back(kDigits[a[i] & 0x0F]);
  }
  return out;
}

// Identity of every object crossing the ICN core: a hierarchical scope path
// plus a flat rendezvous identifier.
struct NamedObjectId {
  std::vector<ScopeSegment> scope_path;
  Rid rid{};

  auto operator<=>(const NamedObjectId&) const = default;

  // Compact display form: full scope segments, truncated rid.
  std::string str() const {
    std::string out;
    for (const auto& seg : scope_path) {
      if (!out.empty()) out += "/";
      out += hex(seg);
    }
    out += "#" + hex(rid, 8);
    return out;
  }
};

}  // namespace coapicn::icn
