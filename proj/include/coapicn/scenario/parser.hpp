#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coapicn/scenario/config.hpp"

namespace coapicn::scenario {

class ParseError : public Error {
public:
  using Error::Error;
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// Everything after the positional arguments: `key=value` pairs (repeatable)
// and bare flags. Splitting happens at the first '=', so values may contain
// further '=' characters (uri queries do).
struct Args {
  std::map<std::string, std::vector<std::string>> kv;
  std::vector<std::string> flags;

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  const std::string& one(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing " + key + "=");
    if (it->second.size() != 1) throw ParseError(key + "= given twice");
    return it->second.front();
  }

  std::string oneOr(const std::string& key, std::string dflt) const {
    return has(key) ? one(key) : dflt;
  }

  bool flag(const std::string& f) const {
    for (const auto& g : flags)
      if (g == f) return true;
    return false;
  }
};

inline Args parseArgs(const std::vector<std::string>& toks, std::size_t from) {
  Args out;
  for (std::size_t i = from; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string::npos)
      out.flags.push_back(toks[i]);
    else
      out.kv[toks[i].substr(0, eq)].push_back(toks[i].substr(eq + 1));
  }
  return out;
}

inline std::uint64_t parseNumber(const std::string& s) {
  if (s.empty()) throw ParseError("empty number");
  std::uint64_t value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw ParseError("bad number " + s);
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return value;
}

inline std::vector<std::string> parsePath(const std::string& s) {
  if (s.empty() || s[0] != '/')
    throw ParseError("path " + s + " must start with /");
  std::vector<std::string> segs;
  std::string cur;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '/') {
      if (cur.empty()) throw ParseError("path " + s + " has an empty segment");
      segs.push_back(cur);
      cur.clear();
    } else {
      cur += s[i];
    }
  }
  return segs;
}

inline std::vector<std::string> splitCsv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += s[i];
    }
  }
  return out;
}

}  // namespace detail

// Parses the scenario text format. One directive per line, `#` comments,
// values are single whitespace-free tokens. Problems are collected and
// reported together with their line numbers.
inline ScenarioConfig parseScenario(const std::string& text) {
  using namespace detail;

  ScenarioConfig cfg;
  std::vector<std::string> errs;
  std::map<std::string, std::size_t> serverIndex;
  std::map<std::string, std::size_t> clientIndex;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = tokenize(line);
    if (toks.empty()) continue;

    try {
      const std::string& dir = toks[0];
      auto need = [&](std::size_t n) {
        if (toks.size() < 1 + n)
          throw ParseError(dir + " needs " + std::to_string(n) + " arguments");
      };

      if (dir == "scenario") {
        need(1);
        cfg.name = toks[1];
      } else if (dir == "seed") {
        need(1);
        cfg.seed = parseNumber(toks[1]);
      } else if (dir == "control_latency") {
        need(1);
        cfg.control_latency = parseNumber(toks[1]);
      } else if (dir == "rv_node") {
        need(1);
        cfg.rv_node = toks[1];
      } else if (dir == "rd_nap") {
        need(1);
        cfg.rd_nap = toks[1];
      } else if (dir == "anycast") {
        need(1);
        if (toks[1] == "min_hop")
          cfg.anycast.kind = nap::AnycastPolicyKind::MinHop;
        else if (toks[1] == "first_advertiser")
          cfg.anycast.kind = nap::AnycastPolicyKind::FirstAdvertiser;
        else
          throw ParseError("unknown anycast policy " + toks[1]);
      } else if (dir == "node") {
        need(1);
        cfg.nodes.push_back(toks[1]);
      } else if (dir == "link") {
        need(3);
        cfg.links.push_back({toks[1], toks[2], parseNumber(toks[3])});
      } else if (dir == "server") {
        need(1);
        auto args = parseArgs(toks, 2);
        endpoints::ServerConfig s;
        s.id = toks[1];
        s.nap = args.one("nap");
        s.host = args.one("host");
        if (args.has("group")) {
          for (const auto& v : args.kv.at("group"))
            for (const auto& g : splitCsv(v)) s.groups.push_back(g);
        }
        s.register_at = parseNumber(args.oneOr("register_at", "0"));
        if (serverIndex.count(s.id))
          throw ParseError("server " + s.id + " declared twice");
        serverIndex[s.id] = cfg.servers.size();
        cfg.servers.push_back(std::move(s));
      } else if (dir == "resource") {
        need(2);
        auto args = parseArgs(toks, 3);
        auto it = serverIndex.find(toks[1]);
        if (it == serverIndex.end())
          throw ParseError("resource for undeclared server " + toks[1]);
        endpoints::ServerResource r;
        r.path = parsePath(toks[2]);
        r.rt = args.oneOr("rt", "");
        r.value = toBytes(args.oneOr("value", ""));
        r.available_at = parseNumber(args.oneOr("available_at", "0"));
        r.observable = args.flag("obs");
        cfg.servers[it->second].resources.push_back(std::move(r));
      } else if (dir == "client") {
        need(1);
        auto args = parseArgs(toks, 2);
        endpoints::ClientConfig c;
        c.id = toks[1];
        c.nap = args.one("nap");
        if (clientIndex.count(c.id))
          throw ParseError("client " + c.id + " declared twice");
        clientIndex[c.id] = cfg.clients.size();
        cfg.clients.push_back(std::move(c));
      } else if (dir == "action") {
        need(2);
        auto it = clientIndex.find(toks[1]);
        if (it == clientIndex.end())
          throw ParseError("action for undeclared client " + toks[1]);
        auto args = parseArgs(toks, 3);
        endpoints::ClientAction a;
        const std::string& kind = toks[2];
        if (kind == "get") a.kind = endpoints::ClientAction::Kind::Get;
        else if (kind == "observe") a.kind = endpoints::ClientAction::Kind::Observe;
        else if (kind == "group_get") a.kind = endpoints::ClientAction::Kind::GroupGet;
        else if (kind == "cancel") a.kind = endpoints::ClientAction::Kind::Cancel;
        else throw ParseError("unknown action kind " + kind);
        a.at = parseNumber(args.one("at"));
        a.host = args.one("host");
        if (args.has("path")) a.path = parsePath(args.one("path"));
        if (args.has("query"))
          for (const auto& q : args.kv.at("query")) a.query.push_back(q);
        a.confirmable = !args.flag("non");
        cfg.clients[it->second].actions.push_back(std::move(a));
      } else if (dir == "update") {
        auto args = parseArgs(toks, 1);
        ResourceUpdate u;
        u.at = parseNumber(args.one("at"));
        u.server = args.one("server");
        u.path = parsePath(args.one("path"));
        u.value = toBytes(args.one("value"));
        cfg.updates.push_back(std::move(u));
      } else {
        throw ParseError("unknown directive " + dir);
      }
    } catch (const ParseError& e) {
      errs.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }

  if (!errs.empty()) {
    std::string msg = "scenario parse failed";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ParseError(msg);
  }
  return cfg;
}

inline ScenarioConfig loadScenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parseScenario(buf.str());
}

}  // namespace coapicn::scenario
