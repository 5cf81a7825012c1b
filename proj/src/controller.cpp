#include "lvapsim/controller.hpp"

#include <algorithm>
#include <cmath>

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

ApMap::ApMap(std::vector<ApDescriptor> entries, double neighbor_radius_m) : radius_m_(neighbor_radius_m) {
  for (auto& e : entries) add(std::move(e));
}

void ApMap::add(ApDescriptor descriptor) {
  if (contains(descriptor.ap_id)) {
    throw Error(Errc::InvalidValue, fmt::format("duplicate AP id {}", descriptor.ap_id));
  }
  entries_.push_back(std::move(descriptor));
}

bool ApMap::contains(int ap_id) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.ap_id == ap_id; });
}

const ApDescriptor& ApMap::at(int ap_id) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.ap_id == ap_id; });
  if (it == entries_.end()) throw Error(Errc::UnknownNode, fmt::format("AP {} is not in the map", ap_id));
  return *it;
}

std::vector<int> ApMap::neighbors(int ap_id) const {
  const auto& origin = at(ap_id);
  std::vector<int> out;
  for (const auto& e : entries_) {
    if (e.ap_id != ap_id && distance(e.position, origin.position) <= radius_m_) out.push_back(e.ap_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::ScanRequested: return "ScanRequested";
    case Phase::Deciding: return "Deciding";
    case Phase::CsaCountdown: return "CsaCountdown";
    case Phase::Switching: return "Switching";
    case Phase::Complete: return "Complete";
    case Phase::Aborted: return "Aborted";
  }
  return "?";
}

std::string_view to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::None: return "None";
    case AbortReason::NoCandidates: return "NoCandidates";
    case AbortReason::NoBetterAp: return "NoBetterAp";
    case AbortReason::AgentError: return "AgentError";
    case AbortReason::Timeout: return "Timeout";
  }
  return "?";
}

void validate(const DecisionPolicy& policy) {
  std::visit(Overloaded{
                 [](const MaxRssiHysteresis& p) {
                   if (!(p.margin_db >= 0.0)) throw Error(Errc::InvalidValue, "margin_db must be >= 0");
                 },
                 [](const ForcedAlternate& p) {
                   if (!(p.period_s > 0.0)) throw Error(Errc::InvalidValue, "period_s must be > 0");
                 },
             },
             policy);
}

std::optional<int> decide_max_rssi(const std::map<int, std::optional<double>>& responses, double origin_rssi_dbm,
                                   double margin_db) {
  std::optional<int> best;
  double best_rssi = 0.0;
  for (const auto& [ap, rssi] : responses) {  // ascending id, so '>' keeps the lowest on ties
    if (!rssi) continue;
    if (!best || *rssi > best_rssi) {
      best = ap;
      best_rssi = *rssi;
    }
  }
  if (!best || best_rssi < origin_rssi_dbm + margin_db) return std::nullopt;
  return best;
}

std::vector<SimTime> forced_handoff_times(double period_s, double horizon_s) {
  if (!(period_s > 0.0)) throw Error(Errc::InvalidValue, "forced handoff period must be > 0");
  std::vector<SimTime> out;
  const SimTime period = from_ms(period_s * 1000.0);
  const SimTime horizon = from_ms(horizon_s * 1000.0);
  for (SimTime t = period; t <= horizon; t += period) out.push_back(t);
  return out;
}

Controller::Controller(Kernel& kernel, ControlNetwork& control, NodeId self, ApMap map, ControllerConfig config)
    : kernel_(kernel), control_(control), self_(self), map_(std::move(map)), config_(std::move(config)) {
  validate(config_.policy);
  if (config_.csa_count < 1) throw Error(Errc::InvalidValue, "csa_count must be >= 1");
  if (config_.burst_interval_ms < 1) throw Error(Errc::InvalidValue, "burst interval must be >= 1 ms");
  control_.attach(self_, [this](NodeId from, std::int64_t seq, const protocol::ControlMessage& msg) {
    on_control(from, seq, msg);
  });
}

void Controller::register_ap(int ap_id, NodeId node) {
  map_.at(ap_id);
  ap_nodes_[ap_id] = node;
  node_aps_[node] = ap_id;
}

void Controller::register_station(const Lvap& lvap, int hosting_ap) {
  map_.at(hosting_ap);
  lvaps_[lvap.sta_mac] = lvap;
  hosts_[lvap.sta_mac] = hosting_ap;
}

std::optional<int> Controller::host_of(const MacAddr48& sta) const {
  auto it = hosts_.find(sta);
  if (it == hosts_.end()) return std::nullopt;
  return it->second;
}

void Controller::start() {
  if (std::holds_alternative<MaxRssiHysteresis>(config_.policy)) {
    const std::int64_t sub_id = next_sub_++;
    for (const auto& [ap_id, node] : ap_nodes_) {
      send(nullptr, ap_id,
           protocol::Subscribe{sub_id, std::nullopt, "rssi", protocol::Relation::Less, config_.rssi_threshold_dbm});
    }
    return;
  }
  const auto& forced = std::get<ForcedAlternate>(config_.policy);
  for (const auto& [sta, lvap] : lvaps_) force_handoff_schedule(forced.period_s, sta);
}

HandoffTransaction& Controller::new_txn(const MacAddr48& sta, int origin) {
  HandoffTransaction txn;
  txn.txn_id = next_txn_++;
  txn.sta_mac = sta;
  txn.origin_ap = origin;
  txn.csa_count = config_.csa_count;
  txns_.push_back(std::move(txn));
  return txns_.back();
}

HandoffTransaction* Controller::active_txn(const MacAddr48& sta) {
  for (auto& t : txns_) {
    if (t.sta_mac == sta && !t.terminal()) return &t;
  }
  return nullptr;
}

HandoffTransaction* Controller::find_txn(std::int64_t txn_id) {
  if (txn_id < 1 || txn_id > static_cast<std::int64_t>(txns_.size())) return nullptr;
  return &txns_[static_cast<std::size_t>(txn_id - 1)];
}

void Controller::enter(HandoffTransaction& txn, Phase phase) {
  txn.phase = phase;
  txn.entered[phase] = kernel_.now();
  kernel_.note(self_, "TXN",
               fmt::format("id={} sta={} phase={} origin={} dest={}{}", txn.txn_id, txn.sta_mac.str(),
                           to_string(phase), txn.origin_ap,
                           txn.dest_ap ? std::to_string(*txn.dest_ap) : std::string{"-"},
                           phase == Phase::Aborted ? fmt::format(" reason={}", to_string(txn.abort_reason))
                                                   : std::string{}));
}

void Controller::cancel_timers(std::int64_t txn_id) {
  auto it = timers_.find(txn_id);
  if (it == timers_.end()) return;
  for (EventId id : it->second) kernel_.cancel(id);
  timers_.erase(it);
}

void Controller::abort(HandoffTransaction& txn, AbortReason reason) {
  txn.abort_reason = reason;
  cancel_timers(txn.txn_id);
  enter(txn, Phase::Aborted);
}

void Controller::send(HandoffTransaction* txn, int ap_id, const protocol::ControlMessage& msg, std::string_view role) {
  const NodeId node = ap_nodes_.at(ap_id);
  const auto seq = control_.send(self_, node, msg);
  if (txn) {
    ++txn->messages_sent;
    if (!role.empty()) pending_replies_[{node, seq}] = {txn->txn_id, std::string{role}};
  }
}

void Controller::on_publish(const protocol::Publish& msg) {
  auto host = hosts_.find(msg.sta_mac);
  if (host == hosts_.end()) {
    throw Error(Errc::UnknownStation, fmt::format("PUBLISH for unhosted station {}", msg.sta_mac.str()));
  }
  if (const auto* existing = active_txn(msg.sta_mac)) {
    kernel_.note(self_, "PUBLISH_IGNORED", fmt::format("sta={} active_txn={}", msg.sta_mac.str(), existing->txn_id));
    return;
  }
  auto& txn = new_txn(msg.sta_mac, host->second);
  txn.origin_rssi = msg.value;
  enter(txn, Phase::ScanRequested);

  const auto neighbors = map_.neighbors(txn.origin_ap);
  if (neighbors.empty()) {
    abort(txn, AbortReason::NoCandidates);
    return;
  }
  const ChannelId channel = map_.at(txn.origin_ap).primary_channel;
  for (int ap : neighbors) {
    txn.polled.insert(ap);
    send(&txn, ap, protocol::ScanRequest{txn.txn_id, channel, txn.sta_mac, config_.scan_duration_ms});
  }
  const auto id = txn.txn_id;
  const SimTime deadline = kernel_.now() + from_ms(config_.scan_duration_ms + config_.decision_slack_ms);
  timers_[id].push_back(kernel_.schedule(deadline, self_, "DECISION_TIMER", fmt::format("txn={}", id), [this, id] {
    auto* t = find_txn(id);
    if (t && t->phase == Phase::ScanRequested) decide(*t);
  }));
}

void Controller::on_scan_response(const protocol::ScanResponse& msg) {
  auto* txn = find_txn(msg.req_id);
  if (!txn || txn->phase != Phase::ScanRequested || !txn->polled.contains(static_cast<int>(msg.ap_id))) {
    kernel_.note(self_, "STALE_SCAN_RESPONSE", fmt::format("req={} ap={}", msg.req_id, msg.ap_id));
    return;
  }
  txn->responses[static_cast<int>(msg.ap_id)] = msg.rssi_dbm;
  if (txn->responses.size() == txn->polled.size()) decide(*txn);
}

void Controller::decide(HandoffTransaction& txn) {
  cancel_timers(txn.txn_id);
  enter(txn, Phase::Deciding);
  const auto& policy = std::get<MaxRssiHysteresis>(config_.policy);
  const auto dest = decide_max_rssi(txn.responses, txn.origin_rssi.value_or(-1e9), policy.margin_db);
  if (!dest) {
    abort(txn, AbortReason::NoBetterAp);
    return;
  }
  txn.dest_ap = *dest;
  execute_handoff(txn);
}

void Controller::execute_handoff(HandoffTransaction& txn) {
  const int dest = txn.dest_ap.value();
  const ChannelId dest_channel = map_.at(dest).primary_channel;
  txn.target_channel = dest_channel;
  const SimTime t0 = kernel_.now();
  txn.cmd_time = t0;
  enter(txn, Phase::CsaCountdown);
  send(&txn, txn.origin_ap,
       protocol::SendCsa{txn.origin_ap, txn.sta_mac, dest_channel, txn.csa_count, config_.burst_interval_ms}, "csa");

  const SimTime t_switch = t0 + txn.csa_count * from_ms(config_.burst_interval_ms);
  const SimTime t_remove = std::max(t0, t_switch + from_ms(config_.remove_delay_ms));
  const auto id = txn.txn_id;
  const Lvap lvap = lvaps_.at(txn.sta_mac);

  timers_[id].push_back(kernel_.schedule(t_switch, self_, "", "", [this, id, dest, dest_channel, lvap] {
    auto* t = find_txn(id);
    if (!t || t->terminal()) return;
    t->switch_time = kernel_.now();
    enter(*t, Phase::Switching);
    send(t, dest, protocol::AddLvap{dest, lvap, dest_channel}, "add");
  }));
  timers_[id].push_back(kernel_.schedule(t_remove, self_, "", "", [this, id] {
    auto* t = find_txn(id);
    if (!t || t->phase == Phase::Aborted) return;
    send(t, t->origin_ap, protocol::RemoveLvap{t->origin_ap, t->sta_mac}, "remove");
    hosts_[t->sta_mac] = *t->dest_ap;
  }));
  const SimTime deadline = std::max(t_switch, t_remove) + from_ms(config_.complete_timeout_ms);
  timers_[id].push_back(kernel_.schedule(deadline, self_, "", "", [this, id] {
    auto* t = find_txn(id);
    if (t && !t->terminal()) abort(*t, AbortReason::Timeout);
  }));
}

void Controller::force_handoff_schedule(double period_s, const MacAddr48& sta) {
  if (map_.entries().size() < 2) {
    throw Error(Errc::NotEnoughAps, "forced handoffs need at least two APs");
  }
  if (!hosts_.contains(sta)) {
    throw Error(Errc::UnknownStation, fmt::format("station {} is not hosted", sta.str()));
  }
  for (SimTime t : forced_handoff_times(period_s, config_.horizon_s)) {
    kernel_.schedule(t, self_, "FORCE_HANDOFF", fmt::format("sta={}", sta.str()), [this, sta] { forced_tick(sta); });
  }
}

void Controller::forced_tick(const MacAddr48& sta) {
  if (const auto* existing = active_txn(sta)) {
    kernel_.note(self_, "FORCE_SKIPPED", fmt::format("sta={} active_txn={}", sta.str(), existing->txn_id));
    return;
  }
  const auto [a, b] = config_.forced_pair.value_or(std::make_pair(map_.entries()[0].ap_id, map_.entries()[1].ap_id));
  const int origin = hosts_.at(sta);
  auto& txn = new_txn(sta, origin);
  txn.forced = true;
  txn.dest_ap = origin == a ? b : a;
  execute_handoff(txn);
}

void Controller::on_control(NodeId from, std::int64_t link_seq, const protocol::ControlMessage& msg) {
  (void)link_seq;
  std::visit(
      Overloaded{
          [&](const protocol::Publish& m) {
            try {
              on_publish(m);
            } catch (const Error& e) {
              warnings_.push_back(e.what());
              kernel_.note(self_, "PUBLISH_REJECTED", fmt::format("{}", e.what()));
            }
          },
          [&](const protocol::ScanResponse& m) { on_scan_response(m); },
          [&](const protocol::Ack& m) {
            auto it = pending_replies_.find({from, m.ref_id});
            if (it == pending_replies_.end()) return;
            const auto [txn_id, role] = it->second;
            pending_replies_.erase(it);
            auto* txn = find_txn(txn_id);
            if (!txn || txn->terminal()) return;
            if (role == "add") {
              txn->complete_time = kernel_.now();
              hosts_[txn->sta_mac] = *txn->dest_ap;
              // Only the timeout is left to cancel; REMOVE_LVAP may still be pending.
              auto& timers = timers_[txn_id];
              if (!timers.empty()) {
                kernel_.cancel(timers.back());
                timers.pop_back();
              }
              enter(*txn, Phase::Complete);
            }
          },
          [&](const protocol::ErrorReply& m) {
            auto it = pending_replies_.find({from, m.ref_id});
            if (it == pending_replies_.end()) {
              // Scan requests are answered by req_id.
              auto* txn = find_txn(m.ref_id);
              auto ap = node_aps_.find(from);
              if (txn && ap != node_aps_.end() && txn->phase == Phase::ScanRequested &&
                  txn->polled.contains(ap->second)) {
                on_scan_response(protocol::ScanResponse{m.ref_id, ap->second, std::nullopt});
              }
              return;
            }
            const auto [txn_id, role] = it->second;
            pending_replies_.erase(it);
            auto* txn = find_txn(txn_id);
            warnings_.push_back(fmt::format("txn {} {} failed: {}", txn_id, role, m.reason));
            if (!txn || txn->terminal() || role == "remove") return;
            const bool add_sent = txn->switch_time.has_value();
            abort(*txn, AbortReason::AgentError);
            if (role == "csa" && add_sent) {
              send(txn, *txn->dest_ap, protocol::RemoveLvap{*txn->dest_ap, txn->sta_mac});
            }
          },
          [&](const auto&) {
            kernel_.note(self_, "CTRL_IGNORED", std::string{protocol::keyword(msg)});
          },
      },
      msg);
}

}  // namespace lvapsim
