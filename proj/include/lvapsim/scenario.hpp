// Scenario description and its text format.
//
// The format is line oriented: `key = value` pairs grouped under section
// headers. Keys before the first header belong to the run itself. [ap] and
// [sta] may repeat; [profile NAME] defines or overrides a device profile.
// docs/scenario-format.md has the full grammar.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lvapsim/controller.hpp"
#include "lvapsim/core.hpp"
#include "lvapsim/medium.hpp"
#include "lvapsim/metrics.hpp"
#include "lvapsim/stanode.hpp"

namespace lvapsim {

struct ApSpec {
  int id = 0;
  Position position;
  ChannelId channel{1};
  double tx_power_dbm = 20.0;
};

struct StaSpec {
  MacAddr48 mac;
  std::optional<MacAddr48> bssid;  // allocated from the station index when absent
  Ipv4Addr ip;
  std::string ssid = "lvapnet";
  std::string profile = "slowcard";
  std::optional<int> initial_ap;  // defaults to the strongest AP at the start position
  Position position;
  Mobility mobility;
  double tx_power_dbm = 20.0;
};

struct Scenario {
  std::uint64_t seed = 1;
  double duration_s = 600.0;  // last instant a handoff may start
  double drain_s = 2.0;       // extra simulated time so the last handoff settles
  std::vector<ApSpec> aps;
  std::vector<StaSpec> stas;
  std::map<std::string, DeviceProfile> profiles;  // user-defined, shadowing the built-ins
  BeaconPolicy beacon;
  ControllerConfig controller;
  double neighbor_radius_m = 50.0;
  TrafficSpec traffic;
  std::optional<MacAddr48> traffic_sta;  // defaults to the first station
  double guard_ms = 0.0;
  GapMode gap_mode = GapMode::LastReceived;
  MediumConfig medium;
  SimTime control_latency{1000};
  SimTime backhaul_latency{1000};
  std::vector<int> sweep_burst_ms{5, 10, 20, 30, 40, 50};
  std::vector<std::string> warnings;

  /// Profile lookup: user-defined first, then built-in. Throws ConfigValidation.
  const DeviceProfile& profile(const std::string& name) const;
  SimTime horizon() const { return from_ms((duration_s + drain_s) * 1000.0); }
};

/// Throws ConfigValidation naming the offending field.
void validate(const Scenario& scenario);

/// Parses scenario text. Syntax errors (ConfigSyntax) carry "line N";
/// unknown keys and bad values are ConfigValidation. The result is validated.
Scenario parse_scenario(std::string_view text);
/// Throws Io if the file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);

/// Command-line overrides; each one replaces the scenario value when set.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> burst_interval_ms;
  std::optional<std::string> profile;  // applied to every station
  std::optional<GapMode> gap_mode;
};

Scenario apply_overrides(Scenario scenario, const Overrides& overrides);

}  // namespace lvapsim
