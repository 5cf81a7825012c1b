#include "lvapsim/engine.hpp"

#include <fmt/format.h>

namespace lvapsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), gen_(splitmix64(seed ^ splitmix64(stream_id + 1))) {}

double RngStream::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

bool RngStream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

std::string LogEntry::line() const {
  if (details.empty()) return fmt::format("{} {} {}", at.count(), target, kind);
  return fmt::format("{} {} {} {}", at.count(), target, kind, details);
}

void EventLog::append(LogEntry entry) {
  if (enabled_) entries_.push_back(std::move(entry));
}

std::string EventLog::render() const {
  std::string out;
  out.reserve(entries_.size() * 64);
  for (const auto& e : entries_) {
    out += e.line();
    out += '\n';
  }
  return out;
}

Kernel::Kernel(std::uint64_t seed) : seed_(seed) {}

NodeId Kernel::add_node(std::string name) {
  const auto id = static_cast<NodeId>(names_.size());
  names_.push_back(std::move(name));
  rngs_.emplace_back(seed_, id);
  return id;
}

const std::string& Kernel::node_name(NodeId id) const {
  check_node(id);
  return names_[id];
}

void Kernel::check_node(NodeId id) const {
  if (id >= names_.size()) throw Error(Errc::UnknownNode, fmt::format("unknown node id {}", id));
}

EventId Kernel::schedule(SimTime at, NodeId target, std::string kind, std::string details,
                         Handler handler) {
  if (at < now_) {
    throw Error(Errc::PastEvent,
                fmt::format("event '{}' scheduled at {} us, now is {} us", kind, at.count(), now_.count()));
  }
  check_node(target);
  const Key key{at, next_seq_++};
  const EventId id = key.seq;
  queue_.emplace(key, Event{id, target, std::move(kind), std::move(details), std::move(handler)});
  index_.emplace(id, key);
  return id;
}

bool Kernel::cancel(EventId id) {
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  queue_.erase(it->second);
  index_.erase(it);
  return true;
}

std::size_t Kernel::run_until(SimTime t_end) {
  std::size_t processed = 0;
  while (!queue_.empty()) {
    auto first = queue_.begin();
    if (first->first.at > t_end) break;
    now_ = first->first.at;
    Event event = std::move(first->second);
    index_.erase(event.id);
    queue_.erase(first);
    if (!event.kind.empty()) {
      log_.append({now_, names_[event.target], std::move(event.kind), std::move(event.details)});
    }
    if (event.handler) event.handler();
    ++processed;
  }
  if (t_end > now_) now_ = t_end;
  return processed;
}

void Kernel::note(NodeId target, std::string kind, std::string details) {
  check_node(target);
  log_.append({now_, names_[target], std::move(kind), std::move(details)});
}

RngStream& Kernel::rng(NodeId id) {
  check_node(id);
  return rngs_[id];
}

}  // namespace lvapsim
