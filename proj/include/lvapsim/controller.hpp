// Central WLAN controller.
//
// Owns the AP map, installs RSSI subscriptions, fans out scan requests to the
// neighbours of the serving AP, picks a destination and drives the
// CSA -> ADD_LVAP -> REMOVE_LVAP sequence. ADD_LVAP is sent open-loop at the
// predicted end of the CSA countdown since the station cannot confirm anything.

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "lvapsim/control_network.hpp"
#include "lvapsim/core.hpp"
#include "lvapsim/engine.hpp"
#include "lvapsim/protocol.hpp"

namespace lvapsim {

class ApMap {
 public:
  ApMap() = default;
  ApMap(std::vector<ApDescriptor> entries, double neighbor_radius_m);

  /// Throws InvalidValue on a duplicate id.
  void add(ApDescriptor descriptor);
  const ApDescriptor& at(int ap_id) const;
  bool contains(int ap_id) const;
  const std::vector<ApDescriptor>& entries() const { return entries_; }
  double neighbor_radius_m() const { return radius_m_; }
  void set_neighbor_radius_m(double r) { radius_m_ = r; }

  /// APs within the neighbour radius of `ap_id`, excluding it, ascending id.
  std::vector<int> neighbors(int ap_id) const;

 private:
  std::vector<ApDescriptor> entries_;
  double radius_m_ = 50.0;
};

enum class Phase { ScanRequested, Deciding, CsaCountdown, Switching, Complete, Aborted };
enum class AbortReason { None, NoCandidates, NoBetterAp, AgentError, Timeout };

std::string_view to_string(Phase phase);
std::string_view to_string(AbortReason reason);

struct HandoffTransaction {
  std::int64_t txn_id = 0;
  MacAddr48 sta_mac;
  int origin_ap = 0;
  std::optional<int> dest_ap;
  std::optional<ChannelId> target_channel;
  int csa_count = 0;
  bool forced = false;
  Phase phase = Phase::ScanRequested;
  AbortReason abort_reason = AbortReason::None;
  std::map<Phase, SimTime> entered;
  std::optional<double> origin_rssi;
  std::set<int> polled;
  std::map<int, std::optional<double>> responses;
  std::optional<SimTime> cmd_time;     // SEND_CSA sent
  std::optional<SimTime> switch_time;  // predicted end of countdown, ADD_LVAP sent
  std::optional<SimTime> complete_time;
  std::size_t messages_sent = 0;

  bool terminal() const { return phase == Phase::Complete || phase == Phase::Aborted; }
};

struct MaxRssiHysteresis {
  double margin_db = 6.0;
};
struct ForcedAlternate {
  double period_s = 30.0;
};
using DecisionPolicy = std::variant<MaxRssiHysteresis, ForcedAlternate>;

void validate(const DecisionPolicy& policy);

/// Highest-RSSI responder that beats the origin by at least margin_db; ties
/// go to the lowest id and NONE responses never qualify.
std::optional<int> decide_max_rssi(const std::map<int, std::optional<double>>& responses, double origin_rssi_dbm,
                                   double margin_db);

/// Times k * period for k >= 1 up to and including the horizon.
std::vector<SimTime> forced_handoff_times(double period_s, double horizon_s);

struct ControllerConfig {
  DecisionPolicy policy = ForcedAlternate{};
  int csa_count = 4;
  int burst_interval_ms = 10;
  double remove_delay_ms = 50.0;
  int scan_duration_ms = 40;
  double decision_slack_ms = 20.0;
  double rssi_threshold_dbm = -70.0;
  double complete_timeout_ms = 5000.0;
  double horizon_s = 0.0;                   // last instant a forced handoff may start
  std::optional<std::pair<int, int>> forced_pair;  // defaults to the first two APs
};

class Controller {
 public:
  Controller(Kernel& kernel, ControlNetwork& control, NodeId self, ApMap map, ControllerConfig config);
  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;

  NodeId node() const { return self_; }
  const ApMap& ap_map() const { return map_; }
  const ControllerConfig& config() const { return config_; }

  void register_ap(int ap_id, NodeId node);
  /// Records which AP initially hosts the station.
  void register_station(const Lvap& lvap, int hosting_ap);

  /// Installs subscriptions (reactive policy) or the forced schedule.
  void start();

  /// Throws UnknownStation when the station is not hosted anywhere.
  void on_publish(const protocol::Publish& msg);
  void on_scan_response(const protocol::ScanResponse& msg);
  /// Schedules forced handoffs for one station. Throws NotEnoughAps.
  void force_handoff_schedule(double period_s, const MacAddr48& sta);

  const std::deque<HandoffTransaction>& transactions() const { return txns_; }
  std::optional<int> host_of(const MacAddr48& sta) const;
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  HandoffTransaction& new_txn(const MacAddr48& sta, int origin);
  HandoffTransaction* active_txn(const MacAddr48& sta);
  HandoffTransaction* find_txn(std::int64_t txn_id);
  void enter(HandoffTransaction& txn, Phase phase);
  void abort(HandoffTransaction& txn, AbortReason reason);
  void decide(HandoffTransaction& txn);
  void execute_handoff(HandoffTransaction& txn);
  void forced_tick(const MacAddr48& sta);
  void send(HandoffTransaction* txn, int ap_id, const protocol::ControlMessage& msg, std::string_view role = {});
  void on_control(NodeId from, std::int64_t link_seq, const protocol::ControlMessage& msg);
  void cancel_timers(std::int64_t txn_id);

  Kernel& kernel_;
  ControlNetwork& control_;
  NodeId self_;
  ApMap map_;
  ControllerConfig config_;
  std::map<int, NodeId> ap_nodes_;
  std::map<NodeId, int> node_aps_;
  std::map<MacAddr48, Lvap> lvaps_;
  std::map<MacAddr48, int> hosts_;
  std::deque<HandoffTransaction> txns_;
  // (ap node, link seq) -> (txn id, request role)
  std::map<std::pair<NodeId, std::int64_t>, std::pair<std::int64_t, std::string>> pending_replies_;
  std::map<std::int64_t, std::vector<EventId>> timers_;
  std::int64_t next_txn_ = 1;
  std::int64_t next_sub_ = 1;
  std::vector<std::string> warnings_;
};

}  // namespace lvapsim
