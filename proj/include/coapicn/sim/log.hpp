#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coapicn/bytes.hpp"
#include "coapicn/digest.hpp"

namespace coapicn::sim {

// Line-oriented event log: `time | node | event-kind | object-id | detail`.
// Byte-identical across runs with identical configuration and seed.
class EventLog {
public:
  void header(const std::string& scenario, const std::string& mode,
              std::uint64_t seed) {
    lines_.push_back("# coapicn event log");
    lines_.push_back("# scenario=" + scenario + " mode=" + mode +
                     " seed=" + std::to_string(seed) +
                     " digest=" + kDigestAlgorithm);
  }

  void record(Tick time, const std::string& node, const std::string& kind,
              const std::string& object, const std::string& detail) {
    std::ostringstream os;
    os << time << " | " << node << " | " << kind << " | "
       << (object.empty() ? "-" : object) << " | "
       << (detail.empty() ? "-" : detail);
    lines_.push_back(os.str());
  }

  const std::vector<std::string>& lines() const { return lines_; }

  std::uint64_t countKind(const std::string& kind) const {
    std::uint64_t n = 0;
    for (const auto& line : lines_) {
      if (line.find(" | " + kind + " | ") != std::string::npos) ++n;
    }
    return n;
  }

  std::vector<std::string> grep(const std::string& needle) const {
    std::vector<std::string> out;
    for (const auto& line : lines_) {
      if (line.find(needle) != std::string::npos) out.push_back(line);
    }
    return out;
  }

  std::string str() const {
    std::string out;
    for (const auto& line : lines_) {
      out += line;
      out += "\n";
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open log file " + path);
    f << str();
  }

private:
  std::vector<std::string> lines_;
};

}  // namespace coapicn::sim
