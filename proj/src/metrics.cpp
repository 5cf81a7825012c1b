#include "lvapsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

namespace lvapsim {

void validate(const TrafficSpec& spec) {
  if (!(spec.packet_interval_ms > 0.0)) throw Error(Errc::InvalidValue, "packet interval must be > 0");
  if (spec.payload_bytes <= 0) throw Error(Errc::InvalidValue, "payload must be > 0 bytes");
  if (!(spec.duration_s >= 0.0)) throw Error(Errc::InvalidValue, "traffic duration must be >= 0");
}

std::vector<OfferedPacket> generate_traffic(const TrafficSpec& spec) {
  validate(spec);
  std::vector<OfferedPacket> out;
  const SimTime end = from_ms(spec.duration_s * 1000.0);
  const SimTime step = from_ms(spec.packet_interval_ms);
  std::int64_t seq = 0;
  for (SimTime t{0}; t < end; t += step) out.push_back({seq++, t, spec.payload_bytes});
  return out;
}

std::string_view to_string(LossCause cause) {
  switch (cause) {
    case LossCause::None: return "none";
    case LossCause::Handoff: return "handoff";
    case LossCause::Random: return "random";
  }
  return "?";
}

std::vector<PacketRecord> join_traces(std::span<const TxEntry> tx, std::span<const RxEntry> rx,
                                      std::span<const LossCause> truth) {
  std::map<std::int64_t, SimTime> received;
  for (const auto& r : rx) received.emplace(r.seq, r.rx_time);
  std::vector<PacketRecord> out;
  out.reserve(tx.size());
  for (std::size_t i = 0; i < tx.size(); ++i) {
    PacketRecord rec;
    rec.seq = tx[i].seq;
    rec.tx_time = tx[i].tx_time;
    if (auto it = received.find(rec.seq); it != received.end()) {
      rec.rx_time = it->second;
    } else {
      rec.truth_cause = i < truth.size() ? truth[i] : LossCause::Random;
    }
    out.push_back(rec);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return out;
}

GapMode parse_gap_mode(std::string_view text) {
  if (text == "last-received") return GapMode::LastReceived;
  if (text == "first-lost") return GapMode::FirstLost;
  throw Error(Errc::InvalidValue, fmt::format("unknown gap mode '{}'", text));
}

std::string_view to_string(GapMode mode) {
  return mode == GapMode::LastReceived ? "last-received" : "first-lost";
}

std::string_view to_string(GapStatus status) {
  switch (status) {
    case GapStatus::Detected: return "detected";
    case GapStatus::Undetectable: return "undetectable";
    case GapStatus::OpenGap: return "open";
  }
  return "?";
}

GapEstimate estimate_gap(std::span<const PacketRecord> records, SimTime cmd_time, double window_ms, GapMode mode) {
  const SimTime window_end = cmd_time + from_ms(window_ms);
  if (records.empty() || window_end > records.back().tx_time) {
    throw Error(Errc::WindowBeyondTrace,
                fmt::format("detection window ending at {} us lies beyond the trace", window_end.count()));
  }
  const auto by_tx = [](const PacketRecord& r, SimTime t) { return r.tx_time < t; };
  const auto lo = static_cast<std::size_t>(
      std::lower_bound(records.begin(), records.end(), cmd_time, by_tx) - records.begin());
  std::size_t hi = lo;  // one past the last packet inside the window
  while (hi < records.size() && records[hi].tx_time <= window_end) ++hi;

  std::size_t best_start = 0;
  std::size_t best_len = 0;
  for (std::size_t i = lo; i < hi;) {
    if (!records[i].lost()) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < hi && records[j].lost()) ++j;
    if (j - i > best_len) {
      best_start = i;
      best_len = j - i;
    }
    i = j;
  }

  GapEstimate est;
  if (best_len == 0) return est;
  if (best_len == hi - lo) {
    est.status = GapStatus::OpenGap;
    est.run_length = static_cast<std::int64_t>(best_len);
    est.first_lost_seq = records[best_start].seq;
    return est;
  }

  // The run may continue past either edge of the window.
  std::size_t first = best_start;
  while (first > 0 && records[first - 1].lost()) --first;
  std::size_t last = best_start + best_len - 1;
  while (last + 1 < records.size() && records[last + 1].lost()) ++last;

  est.run_length = static_cast<std::int64_t>(last - first + 1);
  est.first_lost_seq = records[first].seq;
  if (last + 1 >= records.size() || (mode == GapMode::LastReceived && first == 0)) {
    est.status = GapStatus::OpenGap;
    return est;
  }
  const SimTime start = mode == GapMode::LastReceived ? records[first - 1].tx_time : records[first].tx_time;
  est.status = GapStatus::Detected;
  est.gap_ms = to_ms(*records[last + 1].rx_time - start);
  return est;
}

Attribution attribute_losses(std::span<const PacketRecord> records, std::span<const HandoffWindow> windows,
                             double guard_ms) {
  Attribution out;
  out.estimated.assign(records.size(), LossCause::None);
  const SimTime guard = from_ms(guard_ms);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.lost()) continue;
    const bool in_window = std::any_of(windows.begin(), windows.end(), [&](const HandoffWindow& w) {
      return r.tx_time >= w.cmd_time && r.tx_time <= w.complete_time + guard;
    });
    const LossCause est = in_window ? LossCause::Handoff : LossCause::Random;
    out.estimated[i] = est;
    (est == LossCause::Handoff ? out.est_handoff : out.est_random) += 1;
    if (r.truth_cause == LossCause::Handoff) ++out.truth_handoff;
    if (r.truth_cause == LossCause::Random) {
      ++out.truth_random;
      if (in_window) ++out.truth_random_in_windows;
    }
    if (est != r.truth_cause) ++out.divergent;
  }
  return out;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw Error(Errc::InvalidValue, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(pct / 100.0 * n)));
  return values[std::min(rank, values.size()) - 1];
}

SummaryRow summarize(std::span<const PacketRecord> records, std::span<const HandoffMeasurement> handoffs,
                     const Attribution& attribution, double burst_ms) {
  SummaryRow row;
  row.burst_ms = burst_ms;
  row.offered = static_cast<std::int64_t>(records.size());
  row.lost = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.lost(); });
  row.handoffs = static_cast<std::int64_t>(handoffs.size());
  if (row.offered > 0) {
    const double n = static_cast<double>(row.offered);
    row.total_loss_pct = 100.0 * static_cast<double>(row.lost) / n;
    row.handoff_loss_pct = 100.0 * static_cast<double>(attribution.est_handoff) / n;
    row.random_loss_pct = 100.0 * static_cast<double>(attribution.est_random) / n;
  }
  std::vector<double> gaps;
  for (const auto& h : handoffs) {
    if (h.detected()) gaps.push_back(h.gap.gap_ms);
    if (h.gap.status == GapStatus::Undetectable) ++row.undetectable;
  }
  if (!gaps.empty()) {
    row.p50_gap_ms = percentile(gaps, 50.0);
    row.p90_gap_ms = percentile(gaps, 90.0);
    row.max_gap_ms = *std::max_element(gaps.begin(), gaps.end());
  }
  if (row.handoffs > 0) {
    row.mean_handoff_loss = static_cast<double>(attribution.est_handoff) / static_cast<double>(row.handoffs);
  }
  return row;
}

std::vector<GapCdfPoint> gap_cdf(std::span<const HandoffMeasurement> handoffs) {
  std::vector<double> gaps;
  for (const auto& h : handoffs) {
    if (h.detected()) gaps.push_back(h.gap.gap_ms);
  }
  std::sort(gaps.begin(), gaps.end());
  std::vector<GapCdfPoint> out;
  const auto total = static_cast<double>(handoffs.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (i + 1 < gaps.size() && gaps[i + 1] == gaps[i]) continue;
    out.push_back({gaps[i], 100.0 * static_cast<double>(i + 1) / total});
  }
  return out;
}

namespace {

std::string opt_us(const std::optional<SimTime>& t) { return t ? std::to_string(t->count()) : std::string{}; }

}  // namespace

std::string packets_csv(std::span<const PacketRecord> records, std::span<const LossCause> estimated) {
  std::string out{kPacketsHeader};
  out += '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const LossCause est = i < estimated.size() ? estimated[i] : LossCause::None;
    out += fmt::format("{},{},{},{},{},{}\n", r.seq, r.tx_time.count(), opt_us(r.rx_time), r.lost() ? 1 : 0,
                       to_string(r.truth_cause), to_string(est));
  }
  return out;
}

std::string handoffs_csv(std::span<const HandoffMeasurement> handoffs) {
  std::string out{kHandoffsHeader};
  out += '\n';
  for (const auto& h : handoffs) {
    const std::string gap = h.detected() ? std::to_string(std::llround(h.gap.gap_ms * 1000.0)) : std::string{};
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", h.txn_id, h.sta, h.origin_ap, h.dest_ap, h.cmd_time.count(),
                       opt_us(h.retune_time), opt_us(h.resume_time), gap, h.detected() ? 1 : 0);
  }
  return out;
}

std::string summary_csv_row(const SummaryRow& r) {
  return fmt::format("{},{:.2f},{:.2f},{:.2f},{:.3f},{:.3f},{:.3f},{}\n", r.burst_ms, r.total_loss_pct,
                     r.handoff_loss_pct, r.random_loss_pct, r.p50_gap_ms, r.p90_gap_ms, r.max_gap_ms, r.undetectable);
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::string out{kSummaryHeader};
  out += '\n';
  for (const auto& r : rows) out += summary_csv_row(r);
  return out;
}

std::string gap_cdf_csv(std::span<const GapCdfPoint> points) {
  std::string out = "gap_ms,acc_pct\n";
  for (const auto& p : points) out += fmt::format("{:.3f},{:.2f}\n", p.gap_ms, p.acc_pct);
  return out;
}

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, fmt::format("cannot open {} for writing", path.string()));
  out << content;
  if (!out) throw Error(Errc::Io, fmt::format("write to {} failed", path.string()));
}

}  // namespace lvapsim
