// Radio channel model.
//
// Frames are delivered only between radios tuned to the same channel. Losses
// are independent Bernoulli draws from the sender's RngStream; there is no
// contention, capture or fading.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lvapsim/core.hpp"
#include "lvapsim/engine.hpp"

namespace lvapsim {

struct PathLossModel {
  double pl0_db = 40.0;
  double d0_m = 1.0;
  double exponent_n = 3.0;
};

void validate(const PathLossModel& model);

/// Log-distance path loss; distances below d0 are clamped to d0.
double rssi_at(double tx_power_dbm, double dist_m, const PathLossModel& model);

/// ceil(8 * size / rate) microseconds.
std::int64_t beacon_airtime_us(int beacon_size_bytes, double phy_rate_mbps);

struct ChannelConditions {
  ChannelId channel{1};
  double random_loss_prob = 0.0;
  std::int64_t one_way_latency_us = 0;
};

struct MediumConfig {
  PathLossModel path_loss;
  double noise_floor_dbm = -95.0;
  double random_loss_prob = 0.0;
  std::int64_t one_way_latency_us = 0;
  std::map<int, ChannelConditions> per_channel;  // overrides keyed by channel index
};

enum class FrameKind { Beacon, Data, NullData };

std::string_view to_string(FrameKind kind);

struct CsaElement {
  ChannelId new_channel;
  int count;
  double interval_ms;  // beacon spacing while the countdown runs
};

struct Frame {
  FrameKind kind = FrameKind::Data;
  MacAddr48 src;
  MacAddr48 dst;
  MacAddr48 bssid;
  int size_bytes = 0;
  std::optional<CsaElement> csa;
  std::int64_t seq = -1;  // uplink data sequence number, -1 otherwise
};

enum class DropCause { ChannelMismatch, NoReceiver, OutOfRange, Random };

std::string_view to_string(DropCause cause);

struct Delivered {
  SimTime at;
  NodeId receiver;
  double rssi_dbm;
};
struct Dropped {
  DropCause cause;
};
using Delivery = std::variant<Delivered, Dropped>;

/// How the medium sees one node's radios.
struct RadioPort {
  std::function<std::optional<ChannelId>()> channel;  // nullopt while deaf
  std::function<Position()> position;
  double tx_power_dbm = 20.0;
  std::function<bool(const MacAddr48&)> owns;  // unicast address filter
  std::function<void(const Frame&, double rssi_dbm)> receive;
  // Optional monitor interface that overhears every frame on its channel.
  std::function<std::optional<ChannelId>()> monitor_channel;
  std::function<void(const Frame&, double rssi_dbm)> overhear;
};

class Medium {
 public:
  Medium(Kernel& kernel, MediumConfig config);

  void attach(NodeId node, RadioPort port);

  ChannelConditions conditions(ChannelId channel) const;
  const MediumConfig& config() const { return config_; }

  /// Point-to-point delivery to a known node. The receive handler runs as a
  /// kernel event at the returned time.
  Delivery deliver_frame(NodeId src, NodeId dst, ChannelId channel, const Frame& frame);

  /// Resolves the receiver from frame.dst among attached radios (preferring
  /// one on `channel`), then delivers. Monitor interfaces on `channel` get an
  /// independent copy.
  Delivery transmit(NodeId src, ChannelId channel, const Frame& frame);

  double rssi_between(NodeId tx, NodeId rx) const;

 private:
  const RadioPort& port(NodeId node) const;

  Kernel& kernel_;
  MediumConfig config_;
  std::map<NodeId, RadioPort> ports_;
};

}  // namespace lvapsim
