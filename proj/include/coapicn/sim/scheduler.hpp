#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "coapicn/bytes.hpp"

namespace coapicn::sim {

// Single-threaded discrete-event scheduler. Events run in (time, sequence)
// order; the sequence number is assigned at enqueue, so runs with identical
// inputs replay identically.
class EventScheduler {
public:
  void schedule(Tick delay, std::function<void()> fn) {
    scheduleAt(now_ + delay, std::move(fn));
  }

  void scheduleAt(Tick time, std::function<void()> fn) {
    if (time < now_) throw Error("cannot schedule into the past");
    queue_.push(Event{time, nextSeq_++, std::move(fn)});
  }

  Tick now() const { return now_; }

  bool empty() const { return queue_.empty(); }

  // Runs events up to and including `until`. Returns the number executed.
  std::uint64_t runUntil(Tick until) {
    std::uint64_t executed = 0;
    while (!queue_.empty() && queue_.top().time <= until) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      ev.fn();
      ++executed;
    }
    if (now_ < until) now_ = until;
    return executed;
  }

  std::uint64_t runAll(std::uint64_t maxEvents = 10'000'000) {
    std::uint64_t executed = 0;
    while (!queue_.empty()) {
      if (executed >= maxEvents) throw Error("event budget exhausted");
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      ev.fn();
      ++executed;
    }
    return executed;
  }

private:
  struct Event {
    Tick time;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  Tick now_ = 0;
  std::uint64_t nextSeq_ = 0;
};

}  // namespace coapicn::sim
