// Unmodified 802.11 station.
//
// The station has no AP-selection logic: it only follows CSA countdowns from
// its (single, stable) BSSID. After a channel switch it stays deaf for the
// profile's switch latency, then waits for K beacons before transmitting again.

#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "lvapsim/core.hpp"
#include "lvapsim/engine.hpp"
#include "lvapsim/medium.hpp"

namespace lvapsim {

struct Mobility {
  std::vector<Position> waypoints;  // fewer than two points: static
  double speed_mps = 0.0;

  bool is_static() const { return waypoints.size() < 2 || speed_mps <= 0.0; }
};

/// Position at `elapsed` after departure from waypoints[0], moving at constant
/// speed along the polyline and stopping at the last point.
Position position_along(const Mobility& mobility, SimTime elapsed);

struct ModeActive {
  bool operator==(const ModeActive&) const = default;
};
struct ModeSwitching {
  SimTime until;
  bool operator==(const ModeSwitching&) const = default;
};
struct ModeAwaitingBeacons {
  int heard = 0;
  bool operator==(const ModeAwaitingBeacons&) const = default;
};
using StationMode = std::variant<ModeActive, ModeSwitching, ModeAwaitingBeacons>;

/// Timeline of one channel switch as seen by the station.
struct SwitchRecord {
  SimTime switch_at;   // left the old channel
  SimTime retune_at;   // radio settled on the new channel
  std::optional<SimTime> resume_at;
  ChannelId from;
  ChannelId to;
};

enum class UplinkOutcome { Sent, DroppedIdle };

struct UplinkResult {
  UplinkOutcome outcome;
  std::optional<Delivery> delivery;  // set when Sent
};

struct StationConfig {
  Lvap lvap;
  DeviceProfile profile;
  ChannelId channel{1};
  Position position;
  Mobility mobility;
  double tx_power_dbm = 20.0;
  int null_frame_bytes = 28;
  SimTime move_tick{100'000};
};

class Station {
 public:
  Station(Kernel& kernel, Medium& medium, NodeId self, StationConfig config);
  Station(const Station&) = delete;
  Station& operator=(const Station&) = delete;

  NodeId node() const { return self_; }
  const Lvap& lvap() const { return config_.lvap; }
  const DeviceProfile& profile() const { return config_.profile; }
  const StationMode& mode() const { return mode_; }
  bool active() const { return std::holds_alternative<ModeActive>(mode_); }
  ChannelId tuned_channel() const { return tuned_; }
  /// Radio channel, or nullopt while retuning.
  std::optional<ChannelId> listening_channel() const;
  Position position() const { return position_; }
  const std::vector<SwitchRecord>& switches() const { return switches_; }
  /// BSSIDs seen in beacons addressed to this station; always exactly one.
  const std::vector<MacAddr48>& bssids_seen() const { return bssids_seen_; }

  void on_beacon(const Frame& beacon);
  UplinkResult enqueue_uplink(std::int64_t seq, int payload_bytes);
  /// Recomputes the position at the current time.
  Position move();
  /// Starts the periodic mobility tick (no-op for static stations).
  void start_mobility();

 private:
  void begin_switch(ChannelId new_channel);
  void finish_retune(ChannelId new_channel);
  void resume();

  Kernel& kernel_;
  Medium& medium_;
  NodeId self_;
  StationConfig config_;
  ChannelId tuned_;
  StationMode mode_ = ModeActive{};
  Position position_;
  SimTime mobility_start_{0};
  std::optional<EventId> csa_fallback_;
  bool resume_pending_ = false;
  std::vector<SwitchRecord> switches_;
  std::vector<MacAddr48> bssids_seen_;
};

}  // namespace lvapsim
