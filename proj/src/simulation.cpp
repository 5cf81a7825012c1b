#include "lvapsim/simulation.hpp"

#include <algorithm>
#include <future>
#include <set>

#include <fmt/format.h>

namespace lvapsim {

namespace {

std::string ap_name(int id) { return fmt::format("ap{}", id); }

// Value of `key=` in a log details string, or empty.
std::string_view field(std::string_view details, std::string_view key) {
  std::size_t pos = 0;
  while (pos < details.size()) {
    const auto end = std::min(details.find(' ', pos), details.size());
    const auto token = details.substr(pos, end - pos);
    if (token.size() > key.size() && token.substr(0, key.size()) == key && token[key.size()] == '=') {
      return token.substr(key.size() + 1);
    }
    pos = end + 1;
  }
  return {};
}

LossCause cause_of(const UplinkResult& r) {
  if (r.outcome == UplinkOutcome::DroppedIdle) return LossCause::Handoff;
  if (const auto* d = std::get_if<Dropped>(&*r.delivery)) {
    switch (d->cause) {
      case DropCause::ChannelMismatch:
      case DropCause::NoReceiver: return LossCause::Handoff;
      case DropCause::OutOfRange:
      case DropCause::Random: return LossCause::Random;
    }
  }
  return LossCause::None;
}

}  // namespace

double detection_window_ms(const DeviceProfile& p, int csa_count, double burst_ms) {
  return 2.0 * (csa_count * burst_ms + p.switch_latency_ms + (p.beacons_required + 1) * burst_ms + p.resume_jitter_ms);
}

Simulation::Simulation(Scenario scenario) : scenario_(std::move(scenario)) {
  validate(scenario_);
  const auto& s = scenario_;
  kernel_ = std::make_unique<Kernel>(s.seed);
  medium_ = std::make_unique<Medium>(*kernel_, s.medium);
  control_ = std::make_unique<ControlNetwork>(*kernel_, s.control_latency);

  controller_node_ = kernel_->add_node("controller");
  std::map<int, NodeId> ap_nodes;
  for (const auto& ap : s.aps) ap_nodes[ap.id] = kernel_->add_node(ap_name(ap.id));
  std::vector<NodeId> sta_nodes;
  for (std::size_t i = 0; i < s.stas.size(); ++i) sta_nodes.push_back(kernel_->add_node(fmt::format("sta{}", i + 1)));

  ApMap map;
  map.set_neighbor_radius_m(s.neighbor_radius_m);
  for (const auto& ap : s.aps) {
    ApAgentConfig cfg;
    cfg.descriptor = ApDescriptor{ap.id, ap.position, ap.channel, ap.tx_power_dbm, AuxIdle{}};
    cfg.beacon = s.beacon;
    cfg.backhaul_latency = s.backhaul_latency;
    map.add(cfg.descriptor);
    aps_[ap.id] = std::make_unique<ApAgent>(*kernel_, *medium_, *control_, ap_nodes.at(ap.id), controller_node_, cfg);
  }

  ControllerConfig ccfg = s.controller;
  ccfg.horizon_s = s.duration_s;
  controller_ = std::make_unique<Controller>(*kernel_, *control_, controller_node_, map, ccfg);
  for (const auto& [id, node] : ap_nodes) controller_->register_ap(id, node);

  for (std::size_t i = 0; i < s.stas.size(); ++i) {
    const auto& spec = s.stas[i];
    const Position start = spec.mobility.is_static() ? spec.position : spec.mobility.waypoints.front();
    int host = s.aps.front().id;
    if (spec.initial_ap) {
      host = *spec.initial_ap;
    } else {
      double best = -1e300;
      for (const auto& ap : s.aps) {
        const double rssi = rssi_at(ap.tx_power_dbm, distance(ap.position, start), s.medium.path_loss);
        if (rssi > best) {
          best = rssi;
          host = ap.id;
        }
      }
    }
    StationConfig cfg;
    cfg.lvap = Lvap{spec.mac, spec.bssid.value_or(allocate_bssid(static_cast<std::uint32_t>(i), kDefaultBssidBase)),
                    spec.ip, spec.ssid};
    cfg.profile = s.profile(spec.profile);
    cfg.channel = aps_.at(host)->channel();
    cfg.position = spec.position;
    cfg.mobility = spec.mobility;
    cfg.tx_power_dbm = spec.tx_power_dbm;
    stations_.push_back(std::make_unique<Station>(*kernel_, *medium_, sta_nodes[i], cfg));
    aps_.at(host)->add_lvap(cfg.lvap, cfg.channel, ApAgent::BeaconStart::Normal);
    controller_->register_station(cfg.lvap, host);
    if (s.traffic_sta && *s.traffic_sta == spec.mac) traffic_index_ = i;
  }

  const MacAddr48 traffic_mac = stations_[traffic_index_]->lvap().sta_mac;
  for (auto& [id, ap] : aps_) {
    ap->set_uplink_sink([this, traffic_mac](const Frame& frame, SimTime rx_time) {
      if (frame.src == traffic_mac && frame.seq >= 0) rx_trace_.push_back({frame.seq, rx_time});
    });
  }
}

Simulation::~Simulation() = default;

ApAgent& Simulation::ap(int ap_id) {
  auto it = aps_.find(ap_id);
  if (it == aps_.end()) throw Error(Errc::UnknownNode, fmt::format("no AP {}", ap_id));
  return *it->second;
}

void Simulation::send_next_packet(std::size_t index) {
  if (index >= offered_.size()) return;
  auto& sta = *stations_[traffic_index_];
  kernel_->schedule(offered_[index].tx_time, sta.node(), "", "", [this, index, &sta] {
    const auto& pkt = offered_[index];
    tx_trace_.push_back({pkt.seq, kernel_->now()});
    truth_.push_back(cause_of(sta.enqueue_uplink(pkt.seq, pkt.payload_bytes)));
    send_next_packet(index + 1);
  });
}

void Simulation::scan_new_log_entries() {
  const auto& entries = kernel_->log().entries();
  for (; log_cursor_ < entries.size(); ++log_cursor_) {
    const auto& e = entries[log_cursor_];
    if (e.kind == "LVAP_ADDED") {
      last_added_[{e.target, std::string{field(e.details, "sta")}}] = e.at;
    } else if (e.kind == "LVAP_REMOVED") {
      last_removed_[{e.target, std::string{field(e.details, "sta")}}] = e.at;
    }
  }
}

void Simulation::sample_hosts() {
  scan_new_log_entries();
  const SimTime now = kernel_->now();
  const auto& txns = controller_->transactions();
  for (const auto& sta : stations_) {
    const MacAddr48 mac = sta->lvap().sta_mac;
    const std::string mac_text = mac.str();

    // Window of the most recent transaction that issued a CSA: from the ADD
    // taking effect at the destination to the REMOVE taking effect at the origin.
    bool inside = false;
    for (auto it = txns.rbegin(); it != txns.rend(); ++it) {
      if (it->sta_mac != mac || !it->cmd_time || !it->dest_ap) continue;
      const auto added = last_added_.find({ap_name(*it->dest_ap), mac_text});
      const auto removed = last_removed_.find({ap_name(it->origin_ap), mac_text});
      const bool add_done = added != last_added_.end() && added->second >= *it->cmd_time;
      const bool remove_done = removed != last_removed_.end() && removed->second >= *it->cmd_time;
      inside = add_done && !remove_done;
      break;
    }

    std::vector<int> hosts;
    std::set<int> channels;
    for (const auto& [id, ap] : aps_) {
      if (ap->hosts(mac)) {
        hosts.push_back(id);
        channels.insert(ap->channel().index());
      }
    }
    ++host_stats_.samples;
    if (inside) ++host_stats_.inside_window;
    const bool ok = inside ? (hosts.size() == 2 && channels.size() == 2) : hosts.size() == 1;
    if (!ok) {
      ++host_stats_.violations;
      if (host_violations_.size() < 20) {
        host_violations_.push_back(fmt::format("t={} sta={} hosted by {} AP(s) {} the ADD/REMOVE window", now.count(),
                                               mac_text, hosts.size(), inside ? "inside" : "outside"));
      }
    }
  }
  if (now + sample_period_ <= scenario_.horizon()) {
    kernel_->schedule(now + sample_period_, controller_node_, "", "", [this] { sample_hosts(); });
  }
}

std::vector<OrderingRecord> Simulation::check_ordering(std::vector<std::string>& violations) const {
  const auto& entries = kernel_->log().entries();
  std::map<MacAddr48, std::string> sta_nodes;
  for (const auto& sta : stations_) sta_nodes[sta->lvap().sta_mac] = kernel_->node_name(sta->node());

  auto first = [&](std::string_view target, std::string_view kind, std::string_view key, std::string_view value,
                   SimTime not_before) -> std::optional<SimTime> {
    for (const auto& e : entries) {
      if (e.at < not_before || e.target != target || e.kind != kind) continue;
      if (!key.empty() && field(e.details, key) != value) continue;
      return e.at;
    }
    return std::nullopt;
  };

  std::vector<OrderingRecord> out;
  for (const auto& txn : controller_->transactions()) {
    if (txn.phase != Phase::Complete || !txn.cmd_time) continue;
    const std::string mac = txn.sta_mac.str();
    const std::string sta = sta_nodes.at(txn.sta_mac);
    OrderingRecord r;
    r.txn_id = txn.txn_id;
    r.cmd_time = *txn.cmd_time;
    r.switch_at = first(sta, "STA_SWITCH", "", "", r.cmd_time);
    r.retune_at = first(sta, "RETUNE", "", "", r.cmd_time);
    r.add_at = first(ap_name(*txn.dest_ap), "LVAP_ADDED", "sta", mac, r.cmd_time);
    if (r.add_at) r.first_beacon_at = first(ap_name(*txn.dest_ap), "BEACON", "dst", mac, *r.add_at);
    r.remove_at = first(ap_name(txn.origin_ap), "LVAP_REMOVED", "sta", mac, r.cmd_time);
    r.ok = r.switch_at && r.add_at && r.first_beacon_at && r.remove_at && *r.switch_at <= *r.add_at &&
           *r.add_at <= *r.first_beacon_at && *r.first_beacon_at <= *r.remove_at;
    if (!r.ok) {
      auto t = [](const std::optional<SimTime>& v) { return v ? std::to_string(v->count()) : std::string{"-"}; };
      violations.push_back(fmt::format("txn {} ordering broken: switch={} add={} first_beacon={} remove={}",
                                       txn.txn_id, t(r.switch_at), t(r.add_at), t(r.first_beacon_at),
                                       t(r.remove_at)));
    }
    out.push_back(r);
  }
  return out;
}

void Simulation::check_beacons(std::vector<std::string>& violations) const {
  std::map<std::string, int> channels;
  for (const auto& [id, ap] : aps_) channels[ap_name(id)] = ap->channel().index();
  const std::string broadcast = kBroadcastMac.str();
  std::size_t reported = 0;
  for (const auto& e : kernel_->log().entries()) {
    if (e.kind != "BEACON" || reported >= 20) continue;
    if (field(e.details, "dst") == broadcast) {
      violations.push_back(fmt::format("t={} {} sent a broadcast beacon", e.at.count(), e.target));
      ++reported;
    }
    if (field(e.details, "pch") != std::to_string(channels.at(e.target))) {
      violations.push_back(fmt::format("t={} {} left its primary channel", e.at.count(), e.target));
      ++reported;
    }
  }
}

RunResult Simulation::run() {
  const auto& s = scenario_;
  const SimTime horizon = s.horizon();

  TrafficSpec traffic = s.traffic;
  traffic.duration_s = to_ms(horizon) / 1000.0;
  offered_ = generate_traffic(traffic);
  send_next_packet(0);
  for (auto& sta : stations_) sta->start_mobility();
  controller_->start();
  kernel_->schedule(SimTime{0}, controller_node_, "", "", [this] { sample_hosts(); });
  kernel_->run_until(horizon);

  RunResult r;
  r.scenario = s;
  r.warnings = s.warnings;
  for (const auto& w : controller_->warnings()) r.warnings.push_back(w);

  // Anything delivered over the air but never handed to the backhaul was
  // lost to the handoff (e.g. the LVAP was removed in between).
  std::set<std::int64_t> received;
  for (const auto& e : rx_trace_) received.insert(e.seq);
  for (std::size_t i = 0; i < tx_trace_.size(); ++i) {
    if (truth_[i] == LossCause::None && !received.contains(tx_trace_[i].seq)) truth_[i] = LossCause::Handoff;
  }
  r.records = join_traces(tx_trace_, rx_trace_, truth_);

  const auto& traffic_sta = *stations_[traffic_index_];
  const MacAddr48 traffic_mac = traffic_sta.lvap().sta_mac;
  const double window_ms =
      detection_window_ms(traffic_sta.profile(), s.controller.csa_count, s.controller.burst_interval_ms);

  std::vector<HandoffWindow> windows;
  for (const auto& txn : controller_->transactions()) {
    r.transactions.push_back(txn);
    if (txn.sta_mac != traffic_mac || !txn.cmd_time) continue;
    const SimTime complete = txn.complete_time.value_or(*txn.cmd_time + from_ms(window_ms));
    windows.push_back({*txn.cmd_time, complete});

    HandoffMeasurement m;
    m.txn_id = txn.txn_id;
    m.sta = kernel_->node_name(traffic_sta.node());
    m.origin_ap = txn.origin_ap;
    m.dest_ap = txn.dest_ap.value_or(0);
    m.cmd_time = *txn.cmd_time;
    m.complete_time = txn.complete_time;
    for (const auto& sw : traffic_sta.switches()) {
      if (sw.switch_at >= m.cmd_time) {
        m.retune_time = sw.retune_at;
        m.resume_time = sw.resume_at;
        break;
      }
    }
    try {
      m.gap = estimate_gap(r.records, m.cmd_time, window_ms, s.gap_mode);
    } catch (const Error& e) {
      if (e.code() != Errc::WindowBeyondTrace) throw;
      m.gap.status = GapStatus::OpenGap;
      r.warnings.push_back(fmt::format("txn {}: {}", txn.txn_id, e.what()));
    }
    r.handoffs.push_back(std::move(m));
  }
  r.switches = traffic_sta.switches();

  r.attribution = attribute_losses(r.records, windows, s.guard_ms);
  const SimTime guard = from_ms(s.guard_ms);
  for (std::size_t h = 0; h < r.handoffs.size(); ++h) {
    const auto& w = windows[h];
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      const auto& rec = r.records[i];
      if (rec.tx_time < w.cmd_time || rec.tx_time > w.complete_time + guard) continue;
      if (r.attribution.estimated[i] == LossCause::Handoff) ++r.handoffs[h].est_loss_count;
      if (rec.truth_cause == LossCause::Handoff) ++r.handoffs[h].truth_loss_count;
    }
  }

  for (const auto& rec : r.records) {
    if (rec.lost()) continue;
    const double delay = to_ms(*rec.rx_time - rec.tx_time);
    const bool inside = std::any_of(windows.begin(), windows.end(), [&](const HandoffWindow& w) {
      return rec.tx_time >= w.cmd_time && rec.tx_time <= w.complete_time + guard;
    });
    if (inside) {
      ++r.received_in_windows;
      r.max_delay_in_windows_ms = std::max(r.max_delay_in_windows_ms, delay);
    } else {
      r.max_delay_outside_ms = std::max(r.max_delay_outside_ms, delay);
    }
  }

  r.summary = summarize(r.records, r.handoffs, r.attribution, s.beacon.interval_burst_ms);
  r.cdf = gap_cdf(r.handoffs);

  scan_new_log_entries();
  r.host_samples = host_stats_;
  r.violations = host_violations_;
  if (host_stats_.violations > static_cast<std::int64_t>(host_violations_.size())) {
    r.violations.push_back(fmt::format("{} host-count violations in total", host_stats_.violations));
  }
  r.ordering = check_ordering(r.violations);
  check_beacons(r.violations);
  for (const auto& v : r.violations) kernel_->log().append({horizon, "monitor", "INVARIANT_VIOLATION", v});
  r.events_log = kernel_->log().render();
  return r;
}

RunResult run_scenario(const Scenario& scenario) {
  Simulation sim(scenario);
  return sim.run();
}

std::vector<RunResult> sweep(const Scenario& scenario, const std::vector<int>& bursts_ms,
                             const std::vector<std::string>& profiles, bool parallel) {
  if (bursts_ms.empty()) throw Error(Errc::InvalidValue, "burst list must not be empty");
  std::vector<Scenario> runs;
  const std::vector<std::optional<std::string>> profile_list =
      profiles.empty() ? std::vector<std::optional<std::string>>{std::nullopt}
                       : std::vector<std::optional<std::string>>(profiles.begin(), profiles.end());
  for (const auto& profile : profile_list) {
    for (int b : bursts_ms) {
      Overrides o;
      o.burst_interval_ms = b;
      o.profile = profile;
      runs.push_back(apply_overrides(scenario, o));
    }
  }
  std::vector<RunResult> out;
  if (!parallel) {
    for (const auto& s : runs) out.push_back(run_scenario(s));
    return out;
  }
  std::vector<std::future<RunResult>> futures;
  for (const auto& s : runs) futures.push_back(std::async(std::launch::async, [&s] { return run_scenario(s); }));
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

void emit_reports(const RunResult& r, const std::filesystem::path& dir) {
  write_file(dir, "packets.csv", packets_csv(r.records, r.attribution.estimated));
  write_file(dir, "handoffs.csv", handoffs_csv(r.handoffs));
  write_file(dir, "summary.csv", summary_csv(std::span<const SummaryRow>(&r.summary, 1)));
  write_file(dir, "gap_cdf.csv", gap_cdf_csv(r.cdf));
  write_file(dir, "events.log", r.events_log);
}

}  // namespace lvapsim
