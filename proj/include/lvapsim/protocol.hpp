// Southbound control protocol between the controller and AP agents.
//
// One message per LF-terminated line, space-separated fields, keyword first:
//
//   SUBSCRIBE <sub_id> <sta|*> <metric> <'<'|'>'> <threshold>
//   PUBLISH <ap_id> <sta> <metric> <value> <time_us>
//   SCAN_REQUEST <req_id> <channel> <sta> <duration_ms>
//   SCAN_RESPONSE <req_id> <ap_id> <rssi|NONE>
//   SEND_CSA <ap_id> <sta> <new_channel> <count> <burst_interval_ms>
//   ADD_LVAP <ap_id> <sta> <bssid> <ip> <ssid> <channel>
//   REMOVE_LVAP <ap_id> <sta>
//   ACK <ref_id>
//   ERROR <ref_id> <reason>
//
// Every field has exactly one accepted spelling, so decode() rejects any line
// that encode() would not have produced.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "lvapsim/core.hpp"

namespace lvapsim::protocol {

enum class Relation { Less, Greater };

struct Subscribe {
  std::int64_t sub_id = 0;
  std::optional<MacAddr48> sta_filter;  // nullopt encodes as '*'
  std::string metric;
  Relation relation = Relation::Less;
  double threshold = 0.0;
  bool operator==(const Subscribe&) const = default;
};

struct Publish {
  std::int64_t ap_id = 0;
  MacAddr48 sta_mac;
  std::string metric;
  double value = 0.0;
  SimTime at{0};
  bool operator==(const Publish&) const = default;
};

struct ScanRequest {
  std::int64_t req_id = 0;
  ChannelId channel{1};
  MacAddr48 sta_mac;
  std::int64_t duration_ms = 1;
  bool operator==(const ScanRequest&) const = default;
};

struct ScanResponse {
  std::int64_t req_id = 0;
  std::int64_t ap_id = 0;
  std::optional<double> rssi_dbm;  // nullopt: the AP did not hear the station
  bool operator==(const ScanResponse&) const = default;
};

struct SendCsa {
  std::int64_t ap_id = 0;
  MacAddr48 sta_mac;
  ChannelId new_channel{1};
  std::int64_t count = 1;
  std::int64_t burst_interval_ms = 1;
  bool operator==(const SendCsa&) const = default;
};

struct AddLvap {
  std::int64_t ap_id = 0;
  Lvap lvap;
  ChannelId channel{1};
  bool operator==(const AddLvap&) const = default;
};

struct RemoveLvap {
  std::int64_t ap_id = 0;
  MacAddr48 sta_mac;
  bool operator==(const RemoveLvap&) const = default;
};

struct Ack {
  std::int64_t ref_id = 0;
  bool operator==(const Ack&) const = default;
};

struct ErrorReply {
  std::int64_t ref_id = 0;
  std::string reason;
  bool operator==(const ErrorReply&) const = default;
};

using ControlMessage = std::variant<Subscribe, Publish, ScanRequest, ScanResponse, SendCsa, AddLvap,
                                    RemoveLvap, Ack, ErrorReply>;

std::string_view keyword(const ControlMessage& msg);

/// Throws InvalidValue if a field violates the message invariants.
void validate(const ControlMessage& msg);

/// Single line terminated by '\n'.
std::string encode(const ControlMessage& msg);

/// Accepts a line with or without the trailing '\n'. Throws Error with
/// UnknownKeyword, FieldCount or FieldParse; the message names the token.
ControlMessage decode(std::string_view line);

}  // namespace lvapsim::protocol
