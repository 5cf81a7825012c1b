#include "lvapsim/medium.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace lvapsim {

void validate(const PathLossModel& model) {
  if (!(model.d0_m > 0.0)) throw Error(Errc::InvalidValue, "path loss d0 must be > 0");
  if (!(model.exponent_n >= 2.0)) throw Error(Errc::InvalidValue, "path loss exponent must be >= 2");
}

double rssi_at(double tx_power_dbm, double dist_m, const PathLossModel& model) {
  const double d = std::max(dist_m, model.d0_m);
  return tx_power_dbm - (model.pl0_db + 10.0 * model.exponent_n * std::log10(d / model.d0_m));
}

std::int64_t beacon_airtime_us(int beacon_size_bytes, double phy_rate_mbps) {
  if (!(phy_rate_mbps > 0.0)) throw Error(Errc::InvalidValue, "PHY rate must be > 0");
  const double bits = 8.0 * beacon_size_bytes;
  return static_cast<std::int64_t>(std::ceil(bits / phy_rate_mbps));
}

std::string_view to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Beacon: return "beacon";
    case FrameKind::Data: return "data";
    case FrameKind::NullData: return "null";
  }
  return "?";
}

std::string_view to_string(DropCause cause) {
  switch (cause) {
    case DropCause::ChannelMismatch: return "ChannelMismatch";
    case DropCause::NoReceiver: return "NoReceiver";
    case DropCause::OutOfRange: return "OutOfRange";
    case DropCause::Random: return "Random";
  }
  return "?";
}

Medium::Medium(Kernel& kernel, MediumConfig config) : kernel_(kernel), config_(std::move(config)) {
  validate(config_.path_loss);
  if (!(config_.random_loss_prob >= 0.0 && config_.random_loss_prob <= 1.0)) {
    throw Error(Errc::InvalidValue, "random_loss_prob must be in [0, 1]");
  }
  if (config_.one_way_latency_us < 0) throw Error(Errc::InvalidValue, "latency must be >= 0");
  for (const auto& [index, cond] : config_.per_channel) {
    if (!(cond.random_loss_prob >= 0.0 && cond.random_loss_prob <= 1.0) || cond.one_way_latency_us < 0) {
      throw Error(Errc::InvalidValue, fmt::format("bad conditions for channel {}", index));
    }
  }
}

void Medium::attach(NodeId node, RadioPort port) {
  kernel_.node_name(node);  // validates the id
  ports_.insert_or_assign(node, std::move(port));
}

ChannelConditions Medium::conditions(ChannelId channel) const {
  if (auto it = config_.per_channel.find(channel.index()); it != config_.per_channel.end()) {
    return it->second;
  }
  return {channel, config_.random_loss_prob, config_.one_way_latency_us};
}

const RadioPort& Medium::port(NodeId node) const {
  auto it = ports_.find(node);
  if (it == ports_.end()) throw Error(Errc::UnknownNode, fmt::format("node {} has no radio", node));
  return it->second;
}

double Medium::rssi_between(NodeId tx, NodeId rx) const {
  const auto& a = port(tx);
  const auto& b = port(rx);
  return rssi_at(a.tx_power_dbm, distance(a.position(), b.position()), config_.path_loss);
}

Delivery Medium::deliver_frame(NodeId src, NodeId dst, ChannelId channel, const Frame& frame) {
  if (frame.size_bytes <= 0) throw Error(Errc::InvalidValue, "frame size must be > 0");
  port(src);
  const auto& rx = port(dst);
  const auto tuned = rx.channel ? rx.channel() : std::nullopt;
  if (!tuned || *tuned != channel) return Dropped{DropCause::ChannelMismatch};

  const auto cond = conditions(channel);
  if (kernel_.rng(src).bernoulli(cond.random_loss_prob)) return Dropped{DropCause::Random};

  const double rssi = rssi_between(src, dst);
  if (rssi < config_.noise_floor_dbm) return Dropped{DropCause::OutOfRange};

  const SimTime at = kernel_.now() + SimTime{cond.one_way_latency_us};
  kernel_.schedule(at, dst, "RX",
                   fmt::format("{} src={} seq={}", to_string(frame.kind), frame.src.str(), frame.seq),
                   [this, dst, frame, rssi] {
                     const auto& p = port(dst);
                     if (p.receive) p.receive(frame, rssi);
                   });
  return Delivered{at, dst, rssi};
}

Delivery Medium::transmit(NodeId src, ChannelId channel, const Frame& frame) {
  if (frame.size_bytes <= 0) throw Error(Errc::InvalidValue, "frame size must be > 0");
  port(src);

  // Monitors first, in node-id order, so their draws are independent of the
  // unicast outcome.
  for (const auto& [node, p] : ports_) {
    if (node == src || !p.monitor_channel || !p.overhear) continue;
    const auto mon = p.monitor_channel();
    if (!mon || *mon != channel) continue;
    const auto cond = conditions(channel);
    if (kernel_.rng(src).bernoulli(cond.random_loss_prob)) continue;
    const double rssi = rssi_between(src, node);
    if (rssi < config_.noise_floor_dbm) continue;
    const NodeId monitor = node;
    kernel_.schedule(kernel_.now() + SimTime{cond.one_way_latency_us}, monitor, "",
                     "", [this, monitor, frame, rssi] { port(monitor).overhear(frame, rssi); });
  }

  std::optional<NodeId> fallback;
  for (const auto& [node, p] : ports_) {
    if (node == src || !p.owns || !p.owns(frame.dst)) continue;
    const auto tuned = p.channel ? p.channel() : std::nullopt;
    if (tuned && *tuned == channel) return deliver_frame(src, node, channel, frame);
    if (!fallback) fallback = node;
  }
  if (fallback) return Dropped{DropCause::ChannelMismatch};
  return Dropped{DropCause::NoReceiver};
}

}  // namespace lvapsim
