#include "lvapsim/stanode.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace lvapsim {

Position position_along(const Mobility& mobility, SimTime elapsed) {
  if (mobility.waypoints.empty()) return {};
  if (mobility.is_static()) return mobility.waypoints.front();
  double remaining = mobility.speed_mps * static_cast<double>(elapsed.count()) / 1e6;
  for (std::size_t i = 0; i + 1 < mobility.waypoints.size(); ++i) {
    const auto& a = mobility.waypoints[i];
    const auto& b = mobility.waypoints[i + 1];
    const double leg = distance(a, b);
    if (remaining <= leg) {
      const double f = leg > 0.0 ? remaining / leg : 0.0;
      return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f};
    }
    remaining -= leg;
  }
  return mobility.waypoints.back();
}

Station::Station(Kernel& kernel, Medium& medium, NodeId self, StationConfig config)
    : kernel_(kernel), medium_(medium), self_(self), config_(std::move(config)), tuned_(config_.channel),
      position_(config_.mobility.is_static() ? config_.position : config_.mobility.waypoints.front()) {
  validate(config_.lvap);
  validate(config_.profile);

  RadioPort port;
  port.channel = [this] { return listening_channel(); };
  port.position = [this] { return position_; };
  port.tx_power_dbm = config_.tx_power_dbm;
  port.owns = [this](const MacAddr48& mac) { return mac == config_.lvap.sta_mac; };
  port.receive = [this](const Frame& f, double) {
    if (f.kind == FrameKind::Beacon) on_beacon(f);
  };
  medium_.attach(self_, std::move(port));
}

std::optional<ChannelId> Station::listening_channel() const {
  if (std::holds_alternative<ModeSwitching>(mode_)) return std::nullopt;
  return tuned_;
}

void Station::on_beacon(const Frame& beacon) {
  if (beacon.dst != config_.lvap.sta_mac) return;
  if (std::find(bssids_seen_.begin(), bssids_seen_.end(), beacon.bssid) == bssids_seen_.end()) {
    bssids_seen_.push_back(beacon.bssid);
  }
  if (beacon.bssid != config_.lvap.bssid) {
    kernel_.note(self_, "FOREIGN_BEACON", fmt::format("bssid={}", beacon.bssid.str()));
    return;
  }
  if (std::holds_alternative<ModeSwitching>(mode_)) return;

  if (auto* waiting = std::get_if<ModeAwaitingBeacons>(&mode_)) {
    // A frame starting in the very instant the radio settles is not locked onto.
    if (!switches_.empty() && kernel_.now() <= switches_.back().retune_at) return;
    ++waiting->heard;
    kernel_.note(self_, "BEACON_HEARD", fmt::format("ch={} heard={}", tuned_.index(), waiting->heard));
    if (waiting->heard >= config_.profile.beacons_required && !resume_pending_) {
      resume_pending_ = true;
      kernel_.schedule_in(from_ms(config_.profile.resume_jitter_ms), self_, "", "", [this] { resume(); });
    }
    return;
  }

  if (beacon.csa) {
    const auto& csa = *beacon.csa;
    if (csa.count == 0) {
      begin_switch(csa.new_channel);
      return;
    }
    // Keep the countdown even if the count-0 beacon is lost. When both arrive
    // at the same instant the second one finds the radio switching and is ignored.
    if (csa_fallback_) kernel_.cancel(*csa_fallback_);
    const SimTime due = kernel_.now() + csa.count * from_ms(csa.interval_ms);
    const ChannelId target = csa.new_channel;
    csa_fallback_ = kernel_.schedule(due, self_, "CSA_TIMER", fmt::format("to={}", target.index()), [this, target] {
      csa_fallback_.reset();
      if (active()) begin_switch(target);
    });
  }
}

void Station::begin_switch(ChannelId new_channel) {
  if (csa_fallback_) {
    kernel_.cancel(*csa_fallback_);
    csa_fallback_.reset();
  }
  const SimTime now = kernel_.now();
  const SimTime until = now + from_ms(config_.profile.switch_latency_ms);
  switches_.push_back({now, until, std::nullopt, tuned_, new_channel});
  kernel_.note(self_, "STA_SWITCH", fmt::format("from={} to={}", tuned_.index(), new_channel.index()));
  mode_ = ModeSwitching{until};
  kernel_.schedule(until, self_, "", "", [this, new_channel] { finish_retune(new_channel); });
}

void Station::finish_retune(ChannelId new_channel) {
  tuned_ = new_channel;
  mode_ = ModeAwaitingBeacons{0};
  resume_pending_ = false;
  kernel_.note(self_, "RETUNE", fmt::format("ch={}", tuned_.index()));
  if (config_.profile.beacons_required == 0) {
    resume_pending_ = true;
    kernel_.schedule_in(from_ms(config_.profile.resume_jitter_ms), self_, "", "", [this] { resume(); });
  }
}

void Station::resume() {
  resume_pending_ = false;
  if (!std::holds_alternative<ModeAwaitingBeacons>(mode_)) return;
  mode_ = ModeActive{};
  if (!switches_.empty()) switches_.back().resume_at = kernel_.now();
  kernel_.note(self_, "RESUME", fmt::format("ch={}", tuned_.index()));

  // Null-function frame: lets the serving AP see the station without data.
  Frame null;
  null.kind = FrameKind::NullData;
  null.src = config_.lvap.sta_mac;
  null.dst = config_.lvap.bssid;
  null.bssid = config_.lvap.bssid;
  null.size_bytes = config_.null_frame_bytes;
  medium_.transmit(self_, tuned_, null);
}

UplinkResult Station::enqueue_uplink(std::int64_t seq, int payload_bytes) {
  if (!active()) {
    kernel_.note(self_, "UPLINK", fmt::format("seq={} dropped=idle", seq));
    return {UplinkOutcome::DroppedIdle, std::nullopt};
  }
  Frame frame;
  frame.kind = FrameKind::Data;
  frame.src = config_.lvap.sta_mac;
  frame.dst = config_.lvap.bssid;
  frame.bssid = config_.lvap.bssid;
  frame.size_bytes = payload_bytes;
  frame.seq = seq;
  auto delivery = medium_.transmit(self_, tuned_, frame);
  kernel_.note(self_, "UPLINK",
               fmt::format("seq={} ch={} {}", seq, tuned_.index(),
                           std::holds_alternative<Delivered>(delivery)
                               ? std::string{"delivered"}
                               : fmt::format("dropped={}", to_string(std::get<Dropped>(delivery).cause))));
  return {UplinkOutcome::Sent, delivery};
}

Position Station::move() {
  if (!config_.mobility.is_static()) {
    position_ = position_along(config_.mobility, kernel_.now() - mobility_start_);
  }
  return position_;
}

void Station::start_mobility() {
  if (config_.mobility.is_static()) return;
  mobility_start_ = kernel_.now();
  struct Tick {
    Station* self;
    void operator()() const {
      self->move();
      self->kernel_.schedule_in(self->config_.move_tick, self->self_, "", "", Tick{self});
    }
  };
  kernel_.schedule_in(config_.move_tick, self_, "", "", Tick{this});
}

}  // namespace lvapsim
