#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coapicn/bytes.hpp"

namespace coapicn::scenario {

class CompareError : public Error {
public:
  using Error::Error;
};

// The two CSVs describe different scenarios; comparing them is meaningless.
class ScenarioMismatch : public Error {
public:
  using Error::Error;
};

struct CsvMetrics {
  std::map<std::string, std::string> meta;      // meta key -> value
  std::map<std::string, std::uint64_t> values;  // "section,key" -> value
  std::vector<std::string> order;               // value keys, file order
};

inline CsvMetrics parseMetricsCsv(const std::string& text) {
  CsvMetrics out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos)
      throw CompareError("line " + std::to_string(lineno) +
                         ": expected section,key,value");
    std::string section = line.substr(0, c1);
    std::string key = line.substr(c1 + 1, c2 - c1 - 1);
    std::string value = line.substr(c2 + 1);
    if (section == "section") continue;  // header row
    if (section == "meta") {
      out.meta[key] = value;
      continue;
    }
    std::uint64_t n = 0;
    for (char ch : value) {
      if (ch < '0' || ch > '9')
        throw CompareError("line " + std::to_string(lineno) +
                           ": non-numeric value " + value);
      n = n * 10 + static_cast<std::uint64_t>(ch - '0');
    }
    std::string full = section + "," + key;
    if (out.values.emplace(full, n).second) out.order.push_back(full);
  }
  if (!out.meta.count("scenario"))
    throw CompareError("metrics file carries no scenario meta row");
  return out;
}

// Side-by-side table of every metric in either file plus the headline
// multicast savings (how many response/notify transmissions the named-object
// side avoided relative to the unicast side). Only defined when the two
// files come from the same scenario in different modes.
inline std::string compareMetrics(const CsvMetrics& a, const CsvMetrics& b) {
  auto metaOr = [](const CsvMetrics& m, const std::string& k) {
    auto it = m.meta.find(k);
    return it == m.meta.end() ? std::string("-") : it->second;
  };
  if (metaOr(a, "scenario") != metaOr(b, "scenario"))
    throw ScenarioMismatch("cannot compare scenario " + metaOr(a, "scenario") +
                           " against " + metaOr(b, "scenario"));

  std::string out;
  out += "scenario " + metaOr(a, "scenario") + "\n";
  out += "  a: mode=" + metaOr(a, "mode") + " seed=" + metaOr(a, "seed") + "\n";
  out += "  b: mode=" + metaOr(b, "mode") + " seed=" + metaOr(b, "seed") + "\n";
  out += "\n";

  char buf[160];
  std::snprintf(buf, sizeof buf, "%-44s %12s %12s %10s\n", "metric", "a", "b",
                "b-a");
  out += buf;

  std::vector<std::string> keys = a.order;
  for (const auto& k : b.order)
    if (!a.values.count(k)) keys.push_back(k);

  for (const auto& k : keys) {
    auto ia = a.values.find(k);
    auto ib = b.values.find(k);
    std::string va = ia == a.values.end() ? "-" : std::to_string(ia->second);
    std::string vb = ib == b.values.end() ? "-" : std::to_string(ib->second);
    std::string delta = "-";
    if (ia != a.values.end() && ib != b.values.end()) {
      auto d = static_cast<long long>(ib->second) -
               static_cast<long long>(ia->second);
      delta = (d > 0 ? "+" : "") + std::to_string(d);
    }
    std::snprintf(buf, sizeof buf, "%-44s %12s %12s %10s\n", k.c_str(),
                  va.c_str(), vb.c_str(), delta.c_str());
    out += buf;
  }

  // savings always read "1 - icn/baseline", whichever column holds which
  const CsvMetrics* icn = nullptr;
  const CsvMetrics* base = nullptr;
  if (metaOr(a, "mode") == "icn" && metaOr(b, "mode") == "baseline") {
    icn = &a;
    base = &b;
  } else if (metaOr(a, "mode") == "baseline" && metaOr(b, "mode") == "icn") {
    icn = &b;
    base = &a;
  }
  if (icn && base) {
    out += "\n";
    for (const std::string kind : {"response", "notify"}) {
      auto ii = icn->values.find("total," + kind);
      auto bi = base->values.find("total," + kind);
      if (ii == icn->values.end() || bi == base->values.end() ||
          bi->second == 0)
        continue;
      double savings =
          1.0 - static_cast<double>(ii->second) /
                    static_cast<double>(bi->second);
      std::snprintf(buf, sizeof buf,
                    "multicast_savings(%s) = %.4f  (icn %llu vs baseline "
                    "%llu link transmissions)\n",
                    kind.c_str(), savings,
                    static_cast<unsigned long long>(ii->second),
                    static_cast<unsigned long long>(bi->second));
      out += buf;
    }
  }
  return out;
}

inline std::string compareCsvTexts(const std::string& a, const std::string& b) {
  return compareMetrics(parseMetricsCsv(a), parseMetricsCsv(b));
}

}  // namespace coapicn::scenario
