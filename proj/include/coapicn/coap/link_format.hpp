#pragma once

#include <map>
#include <string>
#include <vector>

#include "coapicn/bytes.hpp"

namespace coapicn::coap {

class LinkFormatError : public Error {
public:
  using Error::Error;
};

// One entry of a CoRE link-format document (RFC 6690 subset):
// `</a/b>;k=v;k2="v 2"`.
struct ResourceLink {
  std::vector<std::string> uri_path;
  std::map<std::string, std::string> attributes;

  bool operator==(const ResourceLink&) const = default;

  std::string pathString() const {
    std::string s;
    for (const auto& seg : uri_path) s += "/" + seg;
    return s;
  }
};

namespace detail {

inline bool needsQuoting(const std::string& v) {
  if (v.empty()) return true;
  for (char c : v) {
    bool plain = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                 (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_' ||
                 c == '/' || c == ':';
    if (!plain) return true;
  }
  return false;
}

}  // namespace detail

inline std::vector<ResourceLink> parseLinkFormat(const std::string& text) {
  std::vector<ResourceLink> links;
  std::size_t i = 0;
  auto fail = [](const std::string& why) -> void {
    throw LinkFormatError("link format: " + why);
  };

  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i >= text.size()) break;
    if (text[i] != '<') fail("expected '<'");
    auto close = text.find('>', i);
    if (close == std::string::npos) fail("unbalanced '<'");
    std::string uri = text.substr(i + 1, close - i - 1);
    i = close + 1;

    ResourceLink link;
    if (uri.empty() || uri[0] != '/') fail("uri must start with '/'");
    std::size_t p = 1;
    while (p <= uri.size()) {
      auto slash = uri.find('/', p);
      if (slash == std::string::npos) {
        link.uri_path.push_back(uri.substr(p));
        break;
      }
      link.uri_path.push_back(uri.substr(p, slash - p));
      p = slash + 1;
    }
    if (link.uri_path.empty() ||
        (link.uri_path.size() == 1 && link.uri_path[0].empty())) {
      fail("empty uri path");
    }

    // attributes up to the next top-level comma
    while (i < text.size() && text[i] == ';') {
      ++i;
      std::size_t start = i;
      while (i < text.size() && text[i] != '=' && text[i] != ';' &&
             text[i] != ',') {
        ++i;
      }
      std::string key = text.substr(start, i - start);
      if (key.empty()) fail("empty attribute name");
      std::string value;
      if (i < text.size() && text[i] == '=') {
        ++i;
        if (i < text.size() && text[i] == '"') {
          ++i;
          auto end = text.find('"', i);
          if (end == std::string::npos) fail("unbalanced quote");
          value = text.substr(i, end - i);
          i = end + 1;
        } else {
          start = i;
          while (i < text.size() && text[i] != ';' && text[i] != ',') ++i;
          value = text.substr(start, i - start);
        }
      }
      if (link.attributes.count(key)) fail("duplicate attribute " + key);
      link.attributes[key] = value;
    }
    links.push_back(std::move(link));

    if (i < text.size()) {
      if (text[i] != ',') fail("expected ',' between entries");
      ++i;
    }
  }
  return links;
}

inline std::vector<ResourceLink> parseLinkFormat(const Bytes& payload) {
  return parseLinkFormat(toString(payload));
}

inline std::string serializeLinkFormat(const std::vector<ResourceLink>& links) {
  std::string out;
  bool firstLink = true;
  for (const auto& link : links) {
    if (!firstLink) out += ",";
    firstLink = false;
    out += "<";
    for (const auto& seg : link.uri_path) out += "/" + seg;
    out += ">";
    for (const auto& [k, v] : link.attributes) {
      out += ";" + k + "=";
      if (detail::needsQuoting(v)) {
        out += "\"" + v + "\"";
      } else {
        out += v;
      }
    }
  }
  return out;
}

}  // namespace coapicn::coap
