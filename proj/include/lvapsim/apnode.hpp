// AP agent: hosts LVAPs, unicasts one beacon stream per hosted station,
// runs CSA countdowns, scans with the auxiliary interface and publishes
// subscription events to the controller.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "lvapsim/control_network.hpp"
#include "lvapsim/core.hpp"
#include "lvapsim/engine.hpp"
#include "lvapsim/medium.hpp"
#include "lvapsim/protocol.hpp"

namespace lvapsim {

struct BeaconNormal {
  bool operator==(const BeaconNormal&) const = default;
};
struct BeaconBurst {
  double interval_ms;
  int remaining;  // burst-spaced beacons still to come after the current one
  bool operator==(const BeaconBurst&) const = default;
};
using BeaconMode = std::variant<BeaconNormal, BeaconBurst>;

struct CsaCountdown {
  ChannelId new_channel;
  int count_remaining;
  double interval_ms;
};

struct LvapSlot {
  Lvap lvap;
  BeaconMode beacon_mode = BeaconNormal{};
  std::optional<CsaCountdown> csa;
  std::optional<EventId> next_beacon;
  std::optional<double> smoothed_rssi;
  SimTime added_at{0};
  std::uint64_t beacons_sent = 0;
  // Set while an ADD_LVAP waits for the station to show up on this AP.
  std::optional<std::pair<NodeId, std::int64_t>> confirm;
};

struct SubscriptionState {
  protocol::Subscribe subscription;
  std::optional<SimTime> last_fired;
  double cooldown_ms = 2000.0;
};

struct BeaconOverhead {
  std::uint64_t beacons = 0;
  double beacons_per_s = 0.0;
  double airtime_fraction = 0.0;
};

struct ApAgentConfig {
  ApDescriptor descriptor;
  BeaconPolicy beacon;
  int beacon_size_bytes = 125;
  double beacon_rate_mbps = 1.0;
  double rssi_alpha = 0.5;
  double subscription_cooldown_ms = 2000.0;
  SimTime backhaul_latency{1000};
};

class ApAgent {
 public:
  enum class BeaconStart { Normal, Burst };
  using UplinkSink = std::function<void(const Frame& frame, SimTime rx_time)>;

  ApAgent(Kernel& kernel, Medium& medium, ControlNetwork& control, NodeId self, NodeId controller,
          ApAgentConfig config);
  ApAgent(const ApAgent&) = delete;
  ApAgent& operator=(const ApAgent&) = delete;

  NodeId node() const { return self_; }
  int id() const { return config_.descriptor.ap_id; }
  const ApDescriptor& descriptor() const { return config_.descriptor; }
  ChannelId channel() const { return config_.descriptor.primary_channel; }

  /// Throws DuplicateLvap. The first beacon goes out at the current time.
  void add_lvap(const Lvap& lvap, ChannelId channel, BeaconStart start);
  /// Throws UnknownLvap. Cancels every pending beacon for the station.
  void remove_lvap(const MacAddr48& sta);
  /// Throws UnknownLvap or CsaInProgress. The AP keeps its own channel.
  void start_csa(const MacAddr48& sta, ChannelId new_channel, int count, double burst_interval_ms);
  /// Tunes the auxiliary interface to `channel` for `duration_ms` and reports
  /// the mean RSSI heard from `sta` (nullopt if nothing was heard). Throws AuxBusy.
  void scan_aux(ChannelId channel, const MacAddr48& sta, double duration_ms,
                std::function<void(std::optional<double>)> done);
  /// Smooths the uplink RSSI and returns the PUBLISH messages that fire.
  std::vector<protocol::Publish> observe_uplink(const Frame& frame, double rssi_dbm);

  void add_subscription(const protocol::Subscribe& sub);

  /// Beacons emitted in (now - window, now].
  BeaconOverhead beacon_overhead(SimTime window) const;
  BeaconOverhead beacon_overhead(SimTime from, SimTime to) const;

  bool hosts(const MacAddr48& sta) const { return slots_.contains(sta); }
  const LvapSlot* slot(const MacAddr48& sta) const;
  std::size_t lvap_count() const { return slots_.size(); }

  /// A failed agent answers every request with ERROR.
  void set_failed(bool failed) { failed_ = failed; }
  void set_uplink_sink(UplinkSink sink) { uplink_sink_ = std::move(sink); }

 private:
  void schedule_beacon(LvapSlot& slot, SimTime delay);
  void emit_beacon(const MacAddr48& sta);
  void on_frame(const Frame& frame, double rssi_dbm);
  void on_overheard(const Frame& frame, double rssi_dbm);
  void on_control(NodeId from, std::int64_t link_seq, const protocol::ControlMessage& msg);
  void reply(NodeId to, const protocol::ControlMessage& msg);
  LvapSlot& require_slot(const MacAddr48& sta);

  Kernel& kernel_;
  Medium& medium_;
  ControlNetwork& control_;
  NodeId self_;
  NodeId controller_;
  ApAgentConfig config_;
  std::map<MacAddr48, LvapSlot> slots_;
  std::vector<SubscriptionState> subscriptions_;
  std::vector<SimTime> beacon_times_;
  std::vector<double> scan_samples_;
  std::optional<MacAddr48> scan_target_;
  bool failed_ = false;
  UplinkSink uplink_sink_;
};

}  // namespace lvapsim
