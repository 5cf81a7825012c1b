// Shared domain types for the LVAP WLAN simulator.
//
// Everything here is an immutable value type. Textual forms (MAC, IPv4) are
// the canonical ones used on the control wire and in CSV reports.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace lvapsim {

/// Library-wide error codes. Each failing operation throws an Error carrying
/// one of these so callers (and tests) can branch on the kind.
enum class Errc {
  WrongLength,
  BadHexDigit,
  BadSeparator,
  BadIpv4,
  IndexOverflow,
  InvalidChannel,
  InvalidValue,
  PastEvent,
  UnknownNode,
  DuplicateLvap,
  UnknownLvap,
  CsaInProgress,
  AuxBusy,
  UnknownStation,
  NotEnoughAps,
  UnknownKeyword,
  FieldCount,
  FieldParse,
  WindowBeyondTrace,
  ConfigSyntax,
  ConfigValidation,
  Io,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Simulation time: integer microseconds since the start of a run.
using SimTime = std::chrono::microseconds;

/// Converts milliseconds to simulation time, rounding to the nearest microsecond.
SimTime from_ms(double ms);
double to_ms(SimTime t);

class MacAddr48 {
 public:
  using Octets = std::array<std::uint8_t, 6>;

  constexpr MacAddr48() = default;
  constexpr explicit MacAddr48(Octets octets) : octets_(octets) {}

  /// Accepts six hex pairs separated by ':' in either case.
  static MacAddr48 parse(std::string_view text);

  const Octets& octets() const { return octets_; }
  bool locally_administered() const { return (octets_[0] & 0x02) != 0; }
  bool is_broadcast() const;
  std::string str() const;

  auto operator<=>(const MacAddr48&) const = default;

 private:
  Octets octets_{};
};

inline MacAddr48 parse_mac(std::string_view text) { return MacAddr48::parse(text); }

inline constexpr MacAddr48 kBroadcastMac{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};

class Ipv4Addr {
 public:
  using Octets = std::array<std::uint8_t, 4>;

  constexpr Ipv4Addr() = default;
  constexpr explicit Ipv4Addr(Octets octets) : octets_(octets) {}

  static Ipv4Addr parse(std::string_view text);
  const Octets& octets() const { return octets_; }
  std::string str() const;

  auto operator<=>(const Ipv4Addr&) const = default;

 private:
  Octets octets_{};
};

/// 2.4 GHz channel number, 1..14.
class ChannelId {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 14;

  explicit ChannelId(int index);
  int index() const { return index_; }

  auto operator<=>(const ChannelId&) const = default;

 private:
  int index_;
};

/// Replaces the low three octets of `base` with `sta_index` (big-endian).
MacAddr48 allocate_bssid(std::uint32_t sta_index, const MacAddr48& base);

inline constexpr MacAddr48 kDefaultBssidBase{{0x0a, 0x00, 0x00, 0x00, 0x00, 0x00}};

/// The per-station virtual AP: what the station believes its AP to be.
struct Lvap {
  MacAddr48 sta_mac;
  MacAddr48 bssid;
  Ipv4Addr sta_ip;
  std::string ssid;

  bool operator==(const Lvap&) const = default;
};

/// Throws InvalidValue unless bssid != sta_mac and the SSID is a non-empty
/// word of at most 32 bytes.
void validate(const Lvap& lvap);

struct Position {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Position&) const = default;
};

double distance(const Position& a, const Position& b);

struct AuxIdle {
  bool operator==(const AuxIdle&) const = default;
};
struct AuxScanning {
  ChannelId channel;
  SimTime until;
  bool operator==(const AuxScanning&) const = default;
};
using AuxState = std::variant<AuxIdle, AuxScanning>;

struct ApDescriptor {
  int ap_id = 0;
  Position position;
  ChannelId primary_channel{1};
  double tx_power_dbm = 20.0;
  AuxState aux_state = AuxIdle{};
};

/// Client radio behaviour across a channel switch.
struct DeviceProfile {
  std::string name;
  double switch_latency_ms = 0.0;  // deaf while retuning
  int beacons_required = 0;        // beacons heard on the new channel before resuming
  double resume_jitter_ms = 0.0;   // extra delay after the last required beacon
};

void validate(const DeviceProfile& profile);

/// Built-in profiles: fastcard, midcard, slowcard.
const DeviceProfile* builtin_profile(std::string_view name);

struct BeaconPolicy {
  double interval_normal_ms = 100.0;
  double interval_burst_ms = 10.0;
  int burst_count = 20;

  static BeaconPolicy make(double normal_ms, double burst_ms, int burst_count);
};

void validate(const BeaconPolicy& policy);

}  // namespace lvapsim
