// Traffic generation, dual-trace bookkeeping and the handoff measurements.
//
// The estimators here look only at the transmitted and received traces, the
// way a wired-side sniffer would. Ground-truth loss causes are carried along
// in PacketRecord purely so tests can score the estimators.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvapsim/core.hpp"

namespace lvapsim {

struct TrafficSpec {
  double packet_interval_ms = 10.0;
  int payload_bytes = 80;
  double duration_s = 600.0;
};

void validate(const TrafficSpec& spec);

struct OfferedPacket {
  std::int64_t seq;
  SimTime tx_time;
  int payload_bytes;
};

/// Packets seq 0..N-1 at k * interval for every k * interval < duration.
std::vector<OfferedPacket> generate_traffic(const TrafficSpec& spec);

enum class LossCause { None, Handoff, Random };

std::string_view to_string(LossCause cause);

struct PacketRecord {
  std::int64_t seq = 0;
  SimTime tx_time{0};
  std::optional<SimTime> rx_time;
  LossCause truth_cause = LossCause::None;
  int payload_bytes = 0;

  bool lost() const { return !rx_time.has_value(); }
};

struct TxEntry {
  std::int64_t seq;
  SimTime tx_time;
};
struct RxEntry {
  std::int64_t seq;
  SimTime rx_time;
};

/// Joins the two sniffer traces by sequence number. Packets missing from the
/// received trace are lost; `truth` (indexed like `tx`) supplies their cause.
std::vector<PacketRecord> join_traces(std::span<const TxEntry> tx, std::span<const RxEntry> rx,
                                      std::span<const LossCause> truth);

enum class GapMode { LastReceived, FirstLost };

GapMode parse_gap_mode(std::string_view text);
std::string_view to_string(GapMode mode);

enum class GapStatus { Detected, Undetectable, OpenGap };

std::string_view to_string(GapStatus status);

struct GapEstimate {
  GapStatus status = GapStatus::Undetectable;
  double gap_ms = 0.0;  // meaningful when Detected
  std::int64_t run_length = 0;
  std::int64_t first_lost_seq = -1;
};

/// Longest run of consecutive lost packets among those sent in
/// [cmd_time, cmd_time + window_ms]. LastReceived: the gap runs from the tx
/// time of the last packet received before the run to the rx time of the
/// first packet received after it; FirstLost starts at the first lost packet
/// instead. Throws WindowBeyondTrace if the window ends after the last
/// transmission.
GapEstimate estimate_gap(std::span<const PacketRecord> records, SimTime cmd_time, double window_ms,
                         GapMode mode = GapMode::LastReceived);

struct HandoffWindow {
  SimTime cmd_time;
  SimTime complete_time;
};

struct Attribution {
  std::vector<LossCause> estimated;  // parallel to the records
  std::int64_t est_handoff = 0;
  std::int64_t est_random = 0;
  std::int64_t truth_handoff = 0;
  std::int64_t truth_random = 0;
  std::int64_t divergent = 0;               // lost packets whose estimate differs from truth
  std::int64_t truth_random_in_windows = 0;  // Bernoulli losses falling inside a handoff window
};

/// Lost packets sent in [cmd_time, complete_time + guard_ms] of any window are
/// attributed to the handoff; every other loss is random.
Attribution attribute_losses(std::span<const PacketRecord> records, std::span<const HandoffWindow> windows,
                             double guard_ms);

struct HandoffMeasurement {
  std::int64_t txn_id = 0;
  std::string sta;
  int origin_ap = 0;
  int dest_ap = 0;
  SimTime cmd_time{0};
  std::optional<SimTime> complete_time;
  std::optional<SimTime> retune_time;
  std::optional<SimTime> resume_time;
  GapEstimate gap;
  std::int64_t est_loss_count = 0;
  std::int64_t truth_loss_count = 0;

  bool detected() const { return gap.status == GapStatus::Detected; }
};

struct SummaryRow {
  double burst_ms = 0.0;
  double total_loss_pct = 0.0;
  double handoff_loss_pct = 0.0;
  double random_loss_pct = 0.0;
  double p50_gap_ms = 0.0;
  double p90_gap_ms = 0.0;
  double max_gap_ms = 0.0;
  std::int64_t undetectable = 0;
  // Not part of summary.csv.
  std::int64_t offered = 0;
  std::int64_t lost = 0;
  std::int64_t handoffs = 0;
  double mean_handoff_loss = 0.0;  // estimated handoff losses per handoff
};

/// Accumulated share of all handoffs whose gap is at or below gap_ms.
struct GapCdfPoint {
  double gap_ms;
  double acc_pct;
};

/// Nearest-rank percentile of a non-empty sample.
double percentile(std::vector<double> values, double pct);

SummaryRow summarize(std::span<const PacketRecord> records, std::span<const HandoffMeasurement> handoffs,
                     const Attribution& attribution, double burst_ms);

std::vector<GapCdfPoint> gap_cdf(std::span<const HandoffMeasurement> handoffs);

// ---- report files -----------------------------------------------------------

inline constexpr std::string_view kPacketsHeader = "seq,tx_time_us,rx_time_us,lost,truth_cause,est_cause";
inline constexpr std::string_view kHandoffsHeader =
    "txn_id,sta,origin_ap,dest_ap,cmd_time_us,retune_time_us,resume_time_us,gap_us,detected";
inline constexpr std::string_view kSummaryHeader =
    "burst_ms,total_loss_pct,handoff_loss_pct,random_loss_pct,p50_gap_ms,p90_gap_ms,max_gap_ms,undetectable";

std::string packets_csv(std::span<const PacketRecord> records, std::span<const LossCause> estimated);
std::string handoffs_csv(std::span<const HandoffMeasurement> handoffs);
std::string summary_csv(std::span<const SummaryRow> rows);
std::string summary_csv_row(const SummaryRow& row);
std::string gap_cdf_csv(std::span<const GapCdfPoint> points);

/// Writes `content` to dir/name, creating dir. Throws Io on failure.
void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& content);

}  // namespace lvapsim
