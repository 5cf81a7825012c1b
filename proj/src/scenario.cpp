#include "lvapsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace lvapsim {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(Errc::ConfigValidation, fmt::format("{}: {}", field, why));
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

double parse_real(std::string_view text, const std::string& field) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    invalid(field, fmt::format("'{}' is not a number", text));
  }
  return v;
}

std::int64_t parse_int(std::string_view text, const std::string& field) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) invalid(field, fmt::format("'{}' is not an integer", text));
  return v;
}

int parse_small_int(std::string_view text, const std::string& field) {
  const auto v = parse_int(text, field);
  if (v < -1'000'000'000 || v > 1'000'000'000) invalid(field, "out of range");
  return static_cast<int>(v);
}

Position parse_position(std::string_view text, const std::string& field) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) invalid(field, fmt::format("expected 'x,y', got '{}'", text));
  return {parse_real(parts[0], field), parse_real(parts[1], field)};
}

template <typename F>
auto wrap(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigValidation) throw;
    invalid(field, e.what());
  }
}

using Setter = std::function<void(std::string_view)>;

struct Section {
  std::string kind;  // "", "beacon", "ap", ...
  std::string name;  // profile name
  int line = 0;
  std::map<std::string, Setter> keys;
  std::set<std::string> seen;
};

}  // namespace

const DeviceProfile& Scenario::profile(const std::string& name) const {
  if (auto it = profiles.find(name); it != profiles.end()) return it->second;
  if (const auto* builtin = builtin_profile(name)) return *builtin;
  invalid("profile", fmt::format("unknown device profile '{}'", name));
}

void validate(const Scenario& s) {
  if (s.aps.empty()) invalid("ap", "at least one AP is required");
  if (s.stas.empty()) invalid("sta", "at least one station is required");
  if (!(s.duration_s > 0.0)) invalid("duration_s", "must be > 0");
  if (!(s.drain_s >= 0.0)) invalid("drain_s", "must be >= 0");

  std::set<int> ids;
  for (const auto& ap : s.aps) {
    if (ap.id < 1) invalid("ap.id", "must be >= 1");
    if (!ids.insert(ap.id).second) invalid("ap.id", fmt::format("duplicate AP id {}", ap.id));
  }
  std::set<MacAddr48> macs;
  for (std::size_t i = 0; i < s.stas.size(); ++i) {
    const auto& sta = s.stas[i];
    if (!macs.insert(sta.mac).second) invalid("sta.mac", fmt::format("duplicate station {}", sta.mac.str()));
    s.profile(sta.profile);
    if (sta.initial_ap && !ids.contains(*sta.initial_ap)) {
      invalid("sta.ap", fmt::format("station {} refers to unknown AP {}", sta.mac.str(), *sta.initial_ap));
    }
    wrap("sta", [&] {
      Lvap lvap{sta.mac, sta.bssid.value_or(allocate_bssid(static_cast<std::uint32_t>(i), kDefaultBssidBase)),
                sta.ip, sta.ssid};
      validate(lvap);
      return 0;
    });
    if (!sta.mobility.waypoints.empty() && sta.mobility.speed_mps < 0.0) invalid("sta.speed_mps", "must be >= 0");
  }
  for (const auto& [name, p] : s.profiles) {
    wrap(fmt::format("profile {}", name), [&] {
      validate(p);
      return 0;
    });
  }
  wrap("beacon", [&] {
    validate(s.beacon);
    return 0;
  });
  if (s.beacon.interval_burst_ms != static_cast<double>(s.controller.burst_interval_ms)) {
    invalid("beacon.burst_ms", "must be a whole number of milliseconds");
  }
  wrap("controller.policy", [&] {
    validate(s.controller.policy);
    return 0;
  });
  if (s.controller.csa_count < 1) invalid("controller.csa_count", "must be >= 1");
  if (s.controller.scan_duration_ms <= 0) invalid("controller.scan_duration_ms", "must be > 0");
  if (!(s.controller.complete_timeout_ms > 0.0)) invalid("controller.complete_timeout_ms", "must be > 0");
  if (s.controller.forced_pair) {
    const auto [a, b] = *s.controller.forced_pair;
    if (a == b || !ids.contains(a) || !ids.contains(b)) invalid("controller.forced_pair", "needs two distinct known APs");
  }
  if (std::holds_alternative<ForcedAlternate>(s.controller.policy) && s.aps.size() < 2) {
    invalid("controller.policy", "forced handoffs need at least two APs");
  }
  if (!(s.neighbor_radius_m > 0.0)) invalid("controller.neighbor_radius_m", "must be > 0");
  wrap("traffic", [&] {
    validate(s.traffic);
    return 0;
  });
  if (s.traffic_sta && !macs.contains(*s.traffic_sta)) invalid("traffic.sta", "not a configured station");
  if (!(s.guard_ms >= 0.0)) invalid("traffic.guard_ms", "must be >= 0");
  wrap("medium", [&] {
    validate(s.medium.path_loss);
    return 0;
  });
  if (s.medium.random_loss_prob < 0.0 || s.medium.random_loss_prob > 1.0) {
    invalid("medium.random_loss_prob", "must be in [0, 1]");
  }
  if (s.medium.one_way_latency_us < 0) invalid("medium.one_way_latency_us", "must be >= 0");
  if (s.control_latency < SimTime{0}) invalid("control.latency_ms", "must be >= 0");
  if (s.backhaul_latency < SimTime{0}) invalid("control.backhaul_latency_ms", "must be >= 0");
  if (s.sweep_burst_ms.empty()) invalid("sweep_burst_ms", "must not be empty");
  for (int b : s.sweep_burst_ms) {
    if (b <= 0 || b > s.beacon.interval_normal_ms) invalid("sweep_burst_ms", fmt::format("{} ms is out of range", b));
  }
}

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  bool seed_given = false;
  std::optional<double> period_s;
  std::optional<double> margin_db;
  std::string policy = "forced";

  auto make_section = [&](const std::string& kind, const std::string& name, int line) {
    Section sec{kind, name, line, {}, {}};
    auto& k = sec.keys;
    if (kind.empty()) {
      k["seed"] = [&](std::string_view v) {
        const auto seed = parse_int(v, "seed");
        if (seed < 0) invalid("seed", "must be >= 0");
        s.seed = static_cast<std::uint64_t>(seed);
        seed_given = true;
      };
      k["duration_s"] = [&](std::string_view v) { s.duration_s = parse_real(v, "duration_s"); };
      k["drain_s"] = [&](std::string_view v) { s.drain_s = parse_real(v, "drain_s"); };
      k["sweep_burst_ms"] = [&](std::string_view v) {
        s.sweep_burst_ms.clear();
        for (auto part : split(v, ',')) s.sweep_burst_ms.push_back(parse_small_int(part, "sweep_burst_ms"));
      };
    } else if (kind == "beacon") {
      k["normal_ms"] = [&](std::string_view v) { s.beacon.interval_normal_ms = parse_real(v, "beacon.normal_ms"); };
      k["burst_ms"] = [&](std::string_view v) {
        const int b = parse_small_int(v, "beacon.burst_ms");
        s.beacon.interval_burst_ms = b;
        s.controller.burst_interval_ms = b;
      };
      k["burst_count"] = [&](std::string_view v) { s.beacon.burst_count = parse_small_int(v, "beacon.burst_count"); };
    } else if (kind == "controller") {
      k["policy"] = [&](std::string_view v) {
        if (v != "forced" && v != "max-rssi") invalid("controller.policy", fmt::format("unknown policy '{}'", v));
        policy = std::string{v};
      };
      k["period_s"] = [&](std::string_view v) { period_s = parse_real(v, "controller.period_s"); };
      k["margin_db"] = [&](std::string_view v) { margin_db = parse_real(v, "controller.margin_db"); };
      k["csa_count"] = [&](std::string_view v) { s.controller.csa_count = parse_small_int(v, "controller.csa_count"); };
      k["remove_delay_ms"] = [&](std::string_view v) {
        s.controller.remove_delay_ms = parse_real(v, "controller.remove_delay_ms");
      };
      k["scan_duration_ms"] = [&](std::string_view v) {
        s.controller.scan_duration_ms = parse_small_int(v, "controller.scan_duration_ms");
      };
      k["decision_slack_ms"] = [&](std::string_view v) {
        s.controller.decision_slack_ms = parse_real(v, "controller.decision_slack_ms");
      };
      k["rssi_threshold_dbm"] = [&](std::string_view v) {
        s.controller.rssi_threshold_dbm = parse_real(v, "controller.rssi_threshold_dbm");
      };
      k["complete_timeout_ms"] = [&](std::string_view v) {
        s.controller.complete_timeout_ms = parse_real(v, "controller.complete_timeout_ms");
      };
      k["neighbor_radius_m"] = [&](std::string_view v) {
        s.neighbor_radius_m = parse_real(v, "controller.neighbor_radius_m");
      };
      k["forced_pair"] = [&](std::string_view v) {
        const auto parts = split(v, ',');
        if (parts.size() != 2) invalid("controller.forced_pair", "expected 'a,b'");
        s.controller.forced_pair = std::make_pair(parse_small_int(parts[0], "controller.forced_pair"),
                                                  parse_small_int(parts[1], "controller.forced_pair"));
      };
    } else if (kind == "traffic") {
      k["sta"] = [&](std::string_view v) { s.traffic_sta = wrap("traffic.sta", [&] { return parse_mac(v); }); };
      k["packet_interval_ms"] = [&](std::string_view v) {
        s.traffic.packet_interval_ms = parse_real(v, "traffic.packet_interval_ms");
      };
      k["payload_bytes"] = [&](std::string_view v) {
        s.traffic.payload_bytes = parse_small_int(v, "traffic.payload_bytes");
      };
      k["guard_ms"] = [&](std::string_view v) { s.guard_ms = parse_real(v, "traffic.guard_ms"); };
      k["gap_mode"] = [&](std::string_view v) { s.gap_mode = wrap("traffic.gap_mode", [&] { return parse_gap_mode(v); }); };
    } else if (kind == "medium") {
      auto& m = s.medium;
      k["pl0_db"] = [&](std::string_view v) { m.path_loss.pl0_db = parse_real(v, "medium.pl0_db"); };
      k["d0_m"] = [&](std::string_view v) { m.path_loss.d0_m = parse_real(v, "medium.d0_m"); };
      k["exponent_n"] = [&](std::string_view v) { m.path_loss.exponent_n = parse_real(v, "medium.exponent_n"); };
      k["noise_floor_dbm"] = [&](std::string_view v) { m.noise_floor_dbm = parse_real(v, "medium.noise_floor_dbm"); };
      k["random_loss_prob"] = [&](std::string_view v) {
        m.random_loss_prob = parse_real(v, "medium.random_loss_prob");
      };
      k["one_way_latency_us"] = [&](std::string_view v) {
        m.one_way_latency_us = parse_int(v, "medium.one_way_latency_us");
      };
    } else if (kind == "control") {
      k["latency_ms"] = [&](std::string_view v) { s.control_latency = from_ms(parse_real(v, "control.latency_ms")); };
      k["backhaul_latency_ms"] = [&](std::string_view v) {
        s.backhaul_latency = from_ms(parse_real(v, "control.backhaul_latency_ms"));
      };
    } else if (kind == "ap") {
      s.aps.emplace_back();
      const std::size_t i = s.aps.size() - 1;
      k["id"] = [&, i](std::string_view v) { s.aps[i].id = parse_small_int(v, "ap.id"); };
      k["position"] = [&, i](std::string_view v) { s.aps[i].position = parse_position(v, "ap.position"); };
      k["channel"] = [&, i](std::string_view v) {
        s.aps[i].channel = wrap("ap.channel", [&] { return ChannelId{parse_small_int(v, "ap.channel")}; });
      };
      k["tx_power_dbm"] = [&, i](std::string_view v) { s.aps[i].tx_power_dbm = parse_real(v, "ap.tx_power_dbm"); };
    } else if (kind == "sta") {
      s.stas.emplace_back();
      const std::size_t i = s.stas.size() - 1;
      k["mac"] = [&, i](std::string_view v) { s.stas[i].mac = wrap("sta.mac", [&] { return parse_mac(v); }); };
      k["bssid"] = [&, i](std::string_view v) { s.stas[i].bssid = wrap("sta.bssid", [&] { return parse_mac(v); }); };
      k["ip"] = [&, i](std::string_view v) { s.stas[i].ip = wrap("sta.ip", [&] { return Ipv4Addr::parse(v); }); };
      k["ssid"] = [&, i](std::string_view v) { s.stas[i].ssid = std::string{v}; };
      k["profile"] = [&, i](std::string_view v) { s.stas[i].profile = std::string{v}; };
      k["ap"] = [&, i](std::string_view v) { s.stas[i].initial_ap = parse_small_int(v, "sta.ap"); };
      k["position"] = [&, i](std::string_view v) { s.stas[i].position = parse_position(v, "sta.position"); };
      k["waypoints"] = [&, i](std::string_view v) {
        s.stas[i].mobility.waypoints.clear();
        for (auto p : split(v, ';')) s.stas[i].mobility.waypoints.push_back(parse_position(p, "sta.waypoints"));
      };
      k["speed_mps"] = [&, i](std::string_view v) { s.stas[i].mobility.speed_mps = parse_real(v, "sta.speed_mps"); };
      k["tx_power_dbm"] = [&, i](std::string_view v) { s.stas[i].tx_power_dbm = parse_real(v, "sta.tx_power_dbm"); };
    } else if (kind == "profile") {
      auto& p = s.profiles[name];
      p.name = name;
      k["switch_latency_ms"] = [&p](std::string_view v) {
        p.switch_latency_ms = parse_real(v, "profile.switch_latency_ms");
      };
      k["beacons_required"] = [&p](std::string_view v) {
        p.beacons_required = parse_small_int(v, "profile.beacons_required");
      };
      k["resume_jitter_ms"] = [&p](std::string_view v) {
        p.resume_jitter_ms = parse_real(v, "profile.resume_jitter_ms");
      };
    }
    return sec;
  };

  static const std::set<std::string> kSections{"beacon", "controller", "traffic", "medium", "control", "ap", "sta"};
  std::set<std::string> singletons_seen;
  Section current = make_section("", "", 0);

  auto close_section = [](const Section& sec) {
    std::vector<std::string> required;
    if (sec.kind == "ap") required = {"id", "position", "channel"};
    if (sec.kind == "sta") {
      required = {"mac", "ip"};
      if (!sec.seen.contains("waypoints")) required.push_back("position");
    }
    for (const auto& key : required) {
      if (!sec.seen.contains(key)) {
        throw Error(Errc::ConfigValidation,
                    fmt::format("line {}: [{}] needs '{}'", sec.line, sec.kind, key));
      }
    }
  };

  std::istringstream in{std::string{text}};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(Errc::ConfigSyntax, fmt::format("line {}: unterminated section header", line_no));
      }
      const auto words = split(trim(line.substr(1, line.size() - 2)), ' ');
      std::vector<std::string_view> parts;
      for (auto w : words) {
        if (!w.empty()) parts.push_back(w);
      }
      if (parts.empty()) throw Error(Errc::ConfigSyntax, fmt::format("line {}: empty section header", line_no));
      const std::string kind{parts[0]};
      if (kind == "profile") {
        if (parts.size() != 2) {
          throw Error(Errc::ConfigSyntax, fmt::format("line {}: expected [profile NAME]", line_no));
        }
      } else if (!kSections.contains(kind) || parts.size() != 1) {
        throw Error(Errc::ConfigValidation, fmt::format("line {}: unknown section [{}]", line_no, trim(line.substr(1, line.size() - 2))));
      }
      if (kind != "ap" && kind != "sta") {
        const std::string key = kind == "profile" ? "profile " + std::string{parts[1]} : kind;
        if (!singletons_seen.insert(key).second) {
          throw Error(Errc::ConfigSyntax, fmt::format("line {}: section [{}] repeated", line_no, key));
        }
      }
      close_section(current);
      current = make_section(kind, parts.size() > 1 ? std::string{parts[1]} : std::string{}, line_no);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::ConfigSyntax, fmt::format("line {}: expected 'key = value'", line_no));
    }
    const std::string key{trim(line.substr(0, eq))};
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(Errc::ConfigSyntax, fmt::format("line {}: missing key", line_no));
    const std::string where = current.kind.empty() ? key : current.kind + "." + key;
    auto it = current.keys.find(key);
    if (it == current.keys.end()) {
      throw Error(Errc::ConfigValidation, fmt::format("line {}: unknown key '{}'", line_no, where));
    }
    if (!current.seen.insert(key).second) {
      throw Error(Errc::ConfigSyntax, fmt::format("line {}: key '{}' repeated", line_no, where));
    }
    try {
      it->second(value);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("line {}: {}", line_no, e.what()));
    }
  }

  close_section(current);

  if (policy == "forced") {
    s.controller.policy = ForcedAlternate{period_s.value_or(30.0)};
  } else {
    s.controller.policy = MaxRssiHysteresis{margin_db.value_or(6.0)};
  }
  s.controller.horizon_s = s.duration_s;
  if (!seed_given) s.warnings.push_back("seed not given; using 1");
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, fmt::format("cannot read scenario {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Scenario apply_overrides(Scenario s, const Overrides& o) {
  if (o.seed) s.seed = *o.seed;
  if (o.burst_interval_ms) {
    s.beacon.interval_burst_ms = *o.burst_interval_ms;
    s.controller.burst_interval_ms = *o.burst_interval_ms;
  }
  if (o.profile) {
    for (auto& sta : s.stas) sta.profile = *o.profile;
  }
  if (o.gap_mode) s.gap_mode = *o.gap_mode;
  validate(s);
  return s;
}

}  // namespace lvapsim
