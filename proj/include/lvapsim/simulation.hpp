// One complete run: builds the network from a Scenario, drives the traffic
// flow, watches the runtime invariants and turns the traces into reports.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lvapsim/apnode.hpp"
#include "lvapsim/control_network.hpp"
#include "lvapsim/controller.hpp"
#include "lvapsim/engine.hpp"
#include "lvapsim/medium.hpp"
#include "lvapsim/metrics.hpp"
#include "lvapsim/scenario.hpp"
#include "lvapsim/stanode.hpp"

namespace lvapsim {

/// Gap search window: twice the worst-case time from the CSA command until
/// the station transmits again.
double detection_window_ms(const DeviceProfile& profile, int csa_count, double burst_ms);

/// Event-log timestamps of one completed transaction. The order that must
/// hold is switch <= add <= first_beacon <= remove.
struct OrderingRecord {
  std::int64_t txn_id = 0;
  SimTime cmd_time{0};
  std::optional<SimTime> switch_at;  // station left the old channel
  std::optional<SimTime> retune_at;  // radio settled on the new one
  std::optional<SimTime> add_at;
  std::optional<SimTime> first_beacon_at;
  std::optional<SimTime> remove_at;
  bool ok = false;
};

struct HostSampleStats {
  std::int64_t samples = 0;
  std::int64_t inside_window = 0;  // samples taken between ADD and REMOVE
  std::int64_t violations = 0;
};

struct RunResult {
  Scenario scenario;
  std::vector<PacketRecord> records;
  Attribution attribution;
  std::vector<HandoffMeasurement> handoffs;
  std::vector<HandoffTransaction> transactions;
  std::vector<OrderingRecord> ordering;
  HostSampleStats host_samples;
  SummaryRow summary;
  std::vector<GapCdfPoint> cdf;
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  std::vector<SwitchRecord> switches;  // of the traffic station
  double max_delay_in_windows_ms = 0.0;
  double max_delay_outside_ms = 0.0;
  std::int64_t received_in_windows = 0;
  std::string events_log;

  bool ok() const { return violations.empty(); }
};

class Simulation {
 public:
  explicit Simulation(Scenario scenario);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Scenario& scenario() const { return scenario_; }
  Kernel& kernel() { return *kernel_; }
  Medium& medium() { return *medium_; }
  ControlNetwork& control() { return *control_; }
  Controller& controller() { return *controller_; }
  ApAgent& ap(int ap_id);
  Station& station(std::size_t index) { return *stations_.at(index); }
  std::size_t station_count() const { return stations_.size(); }

  /// Runs to the end of the horizon and evaluates everything.
  RunResult run();

 private:
  void send_next_packet(std::size_t index);
  void sample_hosts();
  void scan_new_log_entries();
  std::vector<OrderingRecord> check_ordering(std::vector<std::string>& violations) const;
  void check_beacons(std::vector<std::string>& violations) const;

  Scenario scenario_;
  std::unique_ptr<Kernel> kernel_;
  std::unique_ptr<Medium> medium_;
  std::unique_ptr<ControlNetwork> control_;
  std::map<int, std::unique_ptr<ApAgent>> aps_;
  std::vector<std::unique_ptr<Station>> stations_;
  std::unique_ptr<Controller> controller_;
  NodeId controller_node_ = 0;

  std::size_t traffic_index_ = 0;
  std::vector<OfferedPacket> offered_;
  std::vector<TxEntry> tx_trace_;
  std::vector<RxEntry> rx_trace_;
  std::vector<LossCause> truth_;

  // Live host sampling.
  SimTime sample_period_{10'000};
  std::size_t log_cursor_ = 0;
  std::map<std::pair<std::string, std::string>, SimTime> last_added_;    // (node, sta) -> time
  std::map<std::pair<std::string, std::string>, SimTime> last_removed_;  // (node, sta) -> time
  HostSampleStats host_stats_;
  std::vector<std::string> host_violations_;
};

/// Builds and runs one simulation.
RunResult run_scenario(const Scenario& scenario);

/// One run per (profile, burst) pair, profile-major. Runs execute
/// concurrently when `parallel` is set; results keep the input order.
/// An empty profile list keeps the scenario's profiles.
std::vector<RunResult> sweep(const Scenario& scenario, const std::vector<int>& bursts_ms,
                             const std::vector<std::string>& profiles, bool parallel);

/// packets.csv, handoffs.csv, summary.csv, gap_cdf.csv and events.log.
void emit_reports(const RunResult& result, const std::filesystem::path& dir);

}  // namespace lvapsim
