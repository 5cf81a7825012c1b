#include "lvapsim/apnode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace lvapsim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

ApAgent::ApAgent(Kernel& kernel, Medium& medium, ControlNetwork& control, NodeId self, NodeId controller,
                 ApAgentConfig config)
    : kernel_(kernel), medium_(medium), control_(control), self_(self), controller_(controller),
      config_(std::move(config)) {
  validate(config_.beacon);
  config_.descriptor.aux_state = AuxIdle{};

  RadioPort port;
  port.channel = [this]() -> std::optional<ChannelId> { return config_.descriptor.primary_channel; };
  port.position = [this] { return config_.descriptor.position; };
  port.tx_power_dbm = config_.descriptor.tx_power_dbm;
  port.owns = [this](const MacAddr48& mac) {
    return std::any_of(slots_.begin(), slots_.end(), [&](const auto& kv) { return kv.second.lvap.bssid == mac; });
  };
  port.receive = [this](const Frame& f, double rssi) { on_frame(f, rssi); };
  port.monitor_channel = [this]() -> std::optional<ChannelId> {
    if (const auto* scan = std::get_if<AuxScanning>(&config_.descriptor.aux_state)) return scan->channel;
    return std::nullopt;
  };
  port.overhear = [this](const Frame& f, double rssi) { on_overheard(f, rssi); };
  medium_.attach(self_, std::move(port));

  control_.attach(self_, [this](NodeId from, std::int64_t seq, const protocol::ControlMessage& msg) {
    on_control(from, seq, msg);
  });
}

LvapSlot& ApAgent::require_slot(const MacAddr48& sta) {
  auto it = slots_.find(sta);
  if (it == slots_.end()) {
    throw Error(Errc::UnknownLvap, fmt::format("AP {} hosts no LVAP for {}", id(), sta.str()));
  }
  return it->second;
}

const LvapSlot* ApAgent::slot(const MacAddr48& sta) const {
  auto it = slots_.find(sta);
  return it == slots_.end() ? nullptr : &it->second;
}

void ApAgent::add_lvap(const Lvap& lvap, ChannelId channel, BeaconStart start) {
  validate(lvap);
  if (slots_.contains(lvap.sta_mac)) {
    throw Error(Errc::DuplicateLvap, fmt::format("AP {} already hosts {}", id(), lvap.sta_mac.str()));
  }
  if (channel != this->channel()) {
    throw Error(Errc::InvalidValue,
                fmt::format("AP {} is on channel {}, not {}", id(), this->channel().index(), channel.index()));
  }
  LvapSlot slot;
  slot.lvap = lvap;
  slot.added_at = kernel_.now();
  const int burst_gaps = config_.beacon.burst_count - 1;
  if (start == BeaconStart::Burst && burst_gaps > 0) {
    slot.beacon_mode = BeaconBurst{config_.beacon.interval_burst_ms, burst_gaps};
  }
  auto& placed = slots_.emplace(lvap.sta_mac, std::move(slot)).first->second;
  kernel_.note(self_, "LVAP_ADDED",
               fmt::format("sta={} bssid={} ch={} mode={}", lvap.sta_mac.str(), lvap.bssid.str(), channel.index(),
                           start == BeaconStart::Burst ? "burst" : "normal"));
  schedule_beacon(placed, SimTime{0});
}

void ApAgent::remove_lvap(const MacAddr48& sta) {
  auto& slot = require_slot(sta);
  if (slot.next_beacon) kernel_.cancel(*slot.next_beacon);
  slots_.erase(sta);
  kernel_.note(self_, "LVAP_REMOVED", fmt::format("sta={}", sta.str()));
}

void ApAgent::start_csa(const MacAddr48& sta, ChannelId new_channel, int count, double burst_interval_ms) {
  auto& slot = require_slot(sta);
  if (slot.csa) {
    throw Error(Errc::CsaInProgress, fmt::format("AP {} already counting down for {}", id(), sta.str()));
  }
  if (count < 1 || !(burst_interval_ms > 0.0)) {
    throw Error(Errc::InvalidValue, "CSA count must be >= 1 and burst interval > 0");
  }
  slot.csa = CsaCountdown{new_channel, count, burst_interval_ms};
  slot.beacon_mode = BeaconBurst{burst_interval_ms, count};
  kernel_.note(self_, "CSA_START",
               fmt::format("sta={} new_ch={} count={} interval_ms={}", sta.str(), new_channel.index(), count,
                           burst_interval_ms));
  if (slot.next_beacon) kernel_.cancel(*slot.next_beacon);
  schedule_beacon(slot, SimTime{0});
}

void ApAgent::schedule_beacon(LvapSlot& slot, SimTime delay) {
  const MacAddr48 sta = slot.lvap.sta_mac;
  slot.next_beacon = kernel_.schedule_in(delay, self_, "", "", [this, sta] { emit_beacon(sta); });
}

void ApAgent::emit_beacon(const MacAddr48& sta) {
  auto it = slots_.find(sta);
  if (it == slots_.end()) return;
  auto& slot = it->second;
  slot.next_beacon.reset();

  Frame frame;
  frame.kind = FrameKind::Beacon;
  frame.src = slot.lvap.bssid;
  frame.dst = slot.lvap.sta_mac;
  frame.bssid = slot.lvap.bssid;
  frame.size_bytes = config_.beacon_size_bytes;
  std::string csa_text;
  if (slot.csa) {
    frame.csa = CsaElement{slot.csa->new_channel, slot.csa->count_remaining, slot.csa->interval_ms};
    csa_text = fmt::format(" csa={}/{}", slot.csa->new_channel.index(), slot.csa->count_remaining);
  }
  const auto result = medium_.transmit(self_, channel(), frame);
  kernel_.note(self_, "BEACON",
               fmt::format("dst={} bssid={} ch={} pch={}{} {}", frame.dst.str(), frame.bssid.str(), channel().index(),
                           config_.descriptor.primary_channel.index(), csa_text,
                           std::holds_alternative<Delivered>(result)
                               ? std::string{"delivered"}
                               : fmt::format("dropped={}", to_string(std::get<Dropped>(result).cause))));
  beacon_times_.push_back(kernel_.now());
  ++slot.beacons_sent;

  if (slot.csa) {
    if (slot.csa->count_remaining == 0) {
      slot.csa.reset();
    } else {
      --slot.csa->count_remaining;
    }
  }

  SimTime delay = from_ms(config_.beacon.interval_normal_ms);
  if (auto* burst = std::get_if<BeaconBurst>(&slot.beacon_mode)) {
    delay = from_ms(burst->interval_ms);
    if (--burst->remaining <= 0) slot.beacon_mode = BeaconNormal{};
  }
  schedule_beacon(slot, delay);
}

void ApAgent::scan_aux(ChannelId channel, const MacAddr48& sta, double duration_ms,
                       std::function<void(std::optional<double>)> done) {
  if (!std::holds_alternative<AuxIdle>(config_.descriptor.aux_state)) {
    throw Error(Errc::AuxBusy, fmt::format("AP {} auxiliary interface is busy", id()));
  }
  if (!(duration_ms > 0.0)) throw Error(Errc::InvalidValue, "scan duration must be > 0");
  const SimTime until = kernel_.now() + from_ms(duration_ms);
  config_.descriptor.aux_state = AuxScanning{channel, until};
  scan_target_ = sta;
  scan_samples_.clear();
  kernel_.note(self_, "AUX_SCAN_START",
               fmt::format("ch={} sta={} until={} pch={}", channel.index(), sta.str(), until.count(),
                           config_.descriptor.primary_channel.index()));
  kernel_.schedule(until, self_, "", "", [this, channel, done = std::move(done)] {
    std::optional<double> mean;
    if (!scan_samples_.empty()) {
      mean = std::accumulate(scan_samples_.begin(), scan_samples_.end(), 0.0) /
             static_cast<double>(scan_samples_.size());
    }
    config_.descriptor.aux_state = AuxIdle{};
    scan_target_.reset();
    kernel_.note(self_, "AUX_SCAN_END",
                 fmt::format("ch={} heard={} rssi={} pch={}", channel.index(), scan_samples_.size(),
                             mean ? fmt::format("{:.2f}", *mean) : std::string{"NONE"},
                             config_.descriptor.primary_channel.index()));
    done(mean);
  });
}

void ApAgent::on_overheard(const Frame& frame, double rssi_dbm) {
  if (!scan_target_ || frame.src != *scan_target_) return;
  if (frame.kind == FrameKind::Beacon) return;
  scan_samples_.push_back(rssi_dbm);
}

void ApAgent::add_subscription(const protocol::Subscribe& sub) {
  subscriptions_.push_back({sub, std::nullopt, config_.subscription_cooldown_ms});
}

std::vector<protocol::Publish> ApAgent::observe_uplink(const Frame& frame, double rssi_dbm) {
  std::vector<protocol::Publish> out;
  auto it = slots_.find(frame.src);
  if (it == slots_.end()) return out;
  auto& slot = it->second;
  const double a = config_.rssi_alpha;
  slot.smoothed_rssi = slot.smoothed_rssi ? a * rssi_dbm + (1.0 - a) * *slot.smoothed_rssi : rssi_dbm;
  const double value = std::round(*slot.smoothed_rssi * 100.0) / 100.0;

  const SimTime now = kernel_.now();
  for (auto& state : subscriptions_) {
    const auto& sub = state.subscription;
    if (sub.metric != "rssi") continue;
    if (sub.sta_filter && *sub.sta_filter != frame.src) continue;
    const bool crossed = sub.relation == protocol::Relation::Less ? value < sub.threshold : value > sub.threshold;
    if (!crossed) continue;
    if (state.last_fired && now - *state.last_fired < from_ms(state.cooldown_ms)) continue;
    state.last_fired = now;
    out.push_back(protocol::Publish{id(), frame.src, "rssi", value, now});
  }
  return out;
}

void ApAgent::on_frame(const Frame& frame, double rssi_dbm) {
  if (frame.kind == FrameKind::Beacon) return;
  auto it = slots_.find(frame.src);
  if (it == slots_.end() || it->second.lvap.bssid != frame.dst) return;

  for (const auto& pub : observe_uplink(frame, rssi_dbm)) reply(controller_, pub);

  auto& slot = it->second;
  if (slot.confirm) {
    const auto [to, ref] = *slot.confirm;
    slot.confirm.reset();
    kernel_.note(self_, "LVAP_CONFIRMED", fmt::format("sta={}", frame.src.str()));
    reply(to, protocol::Ack{ref});
  }
  if (frame.kind == FrameKind::Data && uplink_sink_) uplink_sink_(frame, kernel_.now() + config_.backhaul_latency);
}

void ApAgent::reply(NodeId to, const protocol::ControlMessage& msg) { control_.send(self_, to, msg); }

void ApAgent::on_control(NodeId from, std::int64_t link_seq, const protocol::ControlMessage& msg) {
  auto fail = [&](std::int64_t ref, std::string_view reason) {
    kernel_.note(self_, "AGENT_ERROR", fmt::format("ref={} reason={}", ref, reason));
    reply(from, protocol::ErrorReply{ref, std::string{reason}});
  };
  auto wrong_ap = [&](std::int64_t ap_id) { return ap_id != id(); };

  std::visit(Overloaded{
                 [&](const protocol::Subscribe& m) {
                   if (failed_) return fail(m.sub_id, "AgentFailure");
                   add_subscription(m);
                   reply(from, protocol::Ack{m.sub_id});
                 },
                 [&](const protocol::ScanRequest& m) {
                   if (failed_) return fail(m.req_id, "AgentFailure");
                   try {
                     scan_aux(m.channel, m.sta_mac, static_cast<double>(m.duration_ms),
                              [this, from, req = m.req_id](std::optional<double> rssi) {
                                if (rssi) *rssi = std::round(*rssi * 100.0) / 100.0;
                                reply(from, protocol::ScanResponse{req, id(), rssi});
                              });
                   } catch (const Error& e) {
                     fail(m.req_id, to_string(e.code()));
                   }
                 },
                 [&](const protocol::SendCsa& m) {
                   if (failed_ || wrong_ap(m.ap_id)) return fail(link_seq, failed_ ? "AgentFailure" : "WrongAp");
                   try {
                     start_csa(m.sta_mac, m.new_channel, static_cast<int>(m.count),
                               static_cast<double>(m.burst_interval_ms));
                     reply(from, protocol::Ack{link_seq});
                   } catch (const Error& e) {
                     fail(link_seq, to_string(e.code()));
                   }
                 },
                 [&](const protocol::AddLvap& m) {
                   if (failed_ || wrong_ap(m.ap_id)) return fail(link_seq, failed_ ? "AgentFailure" : "WrongAp");
                   try {
                     add_lvap(m.lvap, m.channel, BeaconStart::Burst);
                     // Acknowledged once the station is heard here.
                     slots_.at(m.lvap.sta_mac).confirm = std::make_pair(from, link_seq);
                   } catch (const Error& e) {
                     fail(link_seq, to_string(e.code()));
                   }
                 },
                 [&](const protocol::RemoveLvap& m) {
                   if (failed_ || wrong_ap(m.ap_id)) return fail(link_seq, failed_ ? "AgentFailure" : "WrongAp");
                   try {
                     remove_lvap(m.sta_mac);
                     reply(from, protocol::Ack{link_seq});
                   } catch (const Error& e) {
                     fail(link_seq, to_string(e.code()));
                   }
                 },
                 [&](const auto&) { kernel_.note(self_, "CTRL_IGNORED", std::string{protocol::keyword(msg)}); },
             },
             msg);
}

BeaconOverhead ApAgent::beacon_overhead(SimTime window) const {
  return beacon_overhead(kernel_.now() - window, kernel_.now());
}

BeaconOverhead ApAgent::beacon_overhead(SimTime from, SimTime to) const {
  if (to <= from) throw Error(Errc::InvalidValue, "beacon overhead window must be > 0");
  BeaconOverhead out;
  out.beacons = static_cast<std::uint64_t>(std::count_if(beacon_times_.begin(), beacon_times_.end(),
                                                         [&](SimTime t) { return t > from && t <= to; }));
  const double window_s = static_cast<double>((to - from).count()) / 1e6;
  out.beacons_per_s = static_cast<double>(out.beacons) / window_s;
  const auto airtime = beacon_airtime_us(config_.beacon_size_bytes, config_.beacon_rate_mbps);
  out.airtime_fraction =
      static_cast<double>(out.beacons) * static_cast<double>(airtime) / static_cast<double>((to - from).count());
  return out;
}

}  // namespace lvapsim
