// Deterministic discrete-event kernel.
//
// Events are ordered by (fire_at, seq) where seq is the insertion counter, so
// a scenario replayed with the same seed dispatches the same events in the
// same order. Every node draws randomness from its own RngStream derived from
// (global seed, node id).

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "lvapsim/core.hpp"

namespace lvapsim {

using NodeId = std::uint32_t;
using EventId = std::uint64_t;

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return gen_(); }
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  /// True with probability p; p <= 0 never draws true, p >= 1 always does.
  bool bernoulli(double p);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 gen_;
};

struct LogEntry {
  SimTime at;
  std::string target;
  std::string kind;
  std::string details;

  /// `<time_us> <target> <kind> <details>`
  std::string line() const;
};

class EventLog {
 public:
  void append(LogEntry entry);
  const std::vector<LogEntry>& entries() const { return entries_; }
  std::string render() const;
  void set_enabled(bool enabled) { enabled_ = enabled; }
  bool enabled() const { return enabled_; }

 private:
  std::vector<LogEntry> entries_;
  bool enabled_ = true;
};

class Kernel {
 public:
  using Handler = std::function<void()>;

  explicit Kernel(std::uint64_t seed);
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  NodeId add_node(std::string name);
  const std::string& node_name(NodeId id) const;
  std::size_t node_count() const { return names_.size(); }

  SimTime now() const { return now_; }
  std::uint64_t seed() const { return seed_; }

  /// Throws PastEvent if `at` is before now(), UnknownNode for a bad target.
  EventId schedule(SimTime at, NodeId target, std::string kind, std::string details, Handler handler);
  EventId schedule_in(SimTime delay, NodeId target, std::string kind, std::string details,
                      Handler handler) {
    return schedule(now_ + delay, target, std::move(kind), std::move(details), std::move(handler));
  }

  /// True iff the event was still pending; it will never fire.
  bool cancel(EventId id);
  bool pending(EventId id) const { return index_.contains(id); }
  std::size_t pending_count() const { return queue_.size(); }

  /// Dispatches every event with fire_at <= t_end and returns how many ran.
  std::size_t run_until(SimTime t_end);

  /// Records a log line at the current time without scheduling anything.
  void note(NodeId target, std::string kind, std::string details);

  RngStream& rng(NodeId id);

  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }

 private:
  struct Key {
    SimTime at;
    std::uint64_t seq;
    auto operator<=>(const Key&) const = default;
  };
  struct Event {
    EventId id;
    NodeId target;
    std::string kind;
    std::string details;
    Handler handler;
  };

  void check_node(NodeId id) const;

  std::uint64_t seed_;
  SimTime now_{0};
  std::uint64_t next_seq_ = 0;
  std::map<Key, Event> queue_;
  std::unordered_map<EventId, Key> index_;
  std::vector<std::string> names_;
  std::vector<RngStream> rngs_;
  EventLog log_;
};

}  // namespace lvapsim
