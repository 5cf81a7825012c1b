#include "lvapsim/protocol.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include <fmt/format.h>

namespace lvapsim::protocol {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_word(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
  }
  return true;
}

std::string real(double v) { return fmt::format("{}", v); }

void require(bool ok, std::string_view what) {
  if (!ok) throw Error(Errc::InvalidValue, fmt::format("invalid control message: {}", what));
}

// ---- decoding helpers -------------------------------------------------------

[[noreturn]] void bad_field(std::string_view token, std::string_view expected) {
  throw Error(Errc::FieldParse, fmt::format("FieldParse('{}'): expected {}", token, expected));
}

std::int64_t parse_int(std::string_view token, std::int64_t min_value = 0) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || fmt::format("{}", v) != token ||
      v < min_value) {
    bad_field(token, fmt::format("integer >= {}", min_value));
  }
  return v;
}

double parse_real(std::string_view token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v) || real(v) != token) {
    bad_field(token, "real");
  }
  return v;
}

MacAddr48 parse_mac_field(std::string_view token) {
  try {
    auto mac = MacAddr48::parse(token);
    if (mac.str() != token) bad_field(token, "lowercase MAC");
    return mac;
  } catch (const Error& e) {
    if (e.code() == Errc::FieldParse) throw;
    bad_field(token, "MAC address");
  }
}

ChannelId parse_channel(std::string_view token) {
  const auto v = parse_int(token, ChannelId::kMin);
  if (v > ChannelId::kMax) bad_field(token, "channel 1..14");
  return ChannelId{static_cast<int>(v)};
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const auto next = line.find(' ', pos);
    const auto end = next == std::string_view::npos ? line.size() : next;
    tokens.push_back(line.substr(pos, end - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return tokens;
}

}  // namespace

std::string_view keyword(const ControlMessage& msg) {
  return std::visit(Overloaded{
                        [](const Subscribe&) { return std::string_view{"SUBSCRIBE"}; },
                        [](const Publish&) { return std::string_view{"PUBLISH"}; },
                        [](const ScanRequest&) { return std::string_view{"SCAN_REQUEST"}; },
                        [](const ScanResponse&) { return std::string_view{"SCAN_RESPONSE"}; },
                        [](const SendCsa&) { return std::string_view{"SEND_CSA"}; },
                        [](const AddLvap&) { return std::string_view{"ADD_LVAP"}; },
                        [](const RemoveLvap&) { return std::string_view{"REMOVE_LVAP"}; },
                        [](const Ack&) { return std::string_view{"ACK"}; },
                        [](const ErrorReply&) { return std::string_view{"ERROR"}; },
                    },
                    msg);
}

void validate(const ControlMessage& msg) {
  std::visit(Overloaded{
                 [](const Subscribe& m) {
                   require(m.sub_id >= 0, "sub_id");
                   require(is_word(m.metric), "metric");
                   require(std::isfinite(m.threshold), "threshold");
                 },
                 [](const Publish& m) {
                   require(m.ap_id >= 0, "ap_id");
                   require(is_word(m.metric), "metric");
                   require(std::isfinite(m.value), "value");
                   require(m.at.count() >= 0, "time");
                 },
                 [](const ScanRequest& m) {
                   require(m.req_id >= 0, "req_id");
                   require(m.duration_ms > 0, "duration_ms");
                 },
                 [](const ScanResponse& m) {
                   require(m.req_id >= 0 && m.ap_id >= 0, "ids");
                   require(!m.rssi_dbm || std::isfinite(*m.rssi_dbm), "rssi");
                 },
                 [](const SendCsa& m) {
                   require(m.ap_id >= 0, "ap_id");
                   require(m.count >= 1, "count");
                   require(m.burst_interval_ms >= 1, "burst_interval_ms");
                 },
                 [](const AddLvap& m) {
                   require(m.ap_id >= 0, "ap_id");
                   lvapsim::validate(m.lvap);
                 },
                 [](const RemoveLvap& m) { require(m.ap_id >= 0, "ap_id"); },
                 [](const Ack& m) { require(m.ref_id >= 0, "ref_id"); },
                 [](const ErrorReply& m) {
                   require(m.ref_id >= 0, "ref_id");
                   require(is_word(m.reason), "reason");
                 },
             },
             msg);
}

std::string encode(const ControlMessage& msg) {
  validate(msg);
  auto body = std::visit(
      Overloaded{
          [](const Subscribe& m) {
            return fmt::format("SUBSCRIBE {} {} {} {} {}", m.sub_id, m.sta_filter ? m.sta_filter->str() : "*",
                               m.metric, m.relation == Relation::Less ? "<" : ">", real(m.threshold));
          },
          [](const Publish& m) {
            return fmt::format("PUBLISH {} {} {} {} {}", m.ap_id, m.sta_mac.str(), m.metric, real(m.value),
                               m.at.count());
          },
          [](const ScanRequest& m) {
            return fmt::format("SCAN_REQUEST {} {} {} {}", m.req_id, m.channel.index(), m.sta_mac.str(),
                               m.duration_ms);
          },
          [](const ScanResponse& m) {
            return fmt::format("SCAN_RESPONSE {} {} {}", m.req_id, m.ap_id,
                               m.rssi_dbm ? real(*m.rssi_dbm) : std::string{"NONE"});
          },
          [](const SendCsa& m) {
            return fmt::format("SEND_CSA {} {} {} {} {}", m.ap_id, m.sta_mac.str(), m.new_channel.index(), m.count,
                               m.burst_interval_ms);
          },
          [](const AddLvap& m) {
            return fmt::format("ADD_LVAP {} {} {} {} {} {}", m.ap_id, m.lvap.sta_mac.str(), m.lvap.bssid.str(),
                               m.lvap.sta_ip.str(), m.lvap.ssid, m.channel.index());
          },
          [](const RemoveLvap& m) { return fmt::format("REMOVE_LVAP {} {}", m.ap_id, m.sta_mac.str()); },
          [](const Ack& m) { return fmt::format("ACK {}", m.ref_id); },
          [](const ErrorReply& m) { return fmt::format("ERROR {} {}", m.ref_id, m.reason); },
      },
      msg);
  body += '\n';
  return body;
}

ControlMessage decode(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  const auto t = split(line);
  const std::string_view kw = t.front();

  auto expect = [&](std::size_t n) {
    if (t.size() != n) {
      throw Error(Errc::FieldCount,
                  fmt::format("FieldCount('{}'): expected {} fields, got {}", kw, n - 1, t.size() - 1));
    }
  };
  auto word = [](std::string_view token) {
    if (!is_word(token)) bad_field(token, "word");
    return std::string{token};
  };

  if (kw == "SUBSCRIBE") {
    expect(6);
    Subscribe m;
    m.sub_id = parse_int(t[1]);
    if (t[2] != "*") m.sta_filter = parse_mac_field(t[2]);
    m.metric = word(t[3]);
    if (t[4] == "<") {
      m.relation = Relation::Less;
    } else if (t[4] == ">") {
      m.relation = Relation::Greater;
    } else {
      bad_field(t[4], "'<' or '>'");
    }
    m.threshold = parse_real(t[5]);
    return m;
  }
  if (kw == "PUBLISH") {
    expect(6);
    return Publish{parse_int(t[1]), parse_mac_field(t[2]), word(t[3]), parse_real(t[4]), SimTime{parse_int(t[5])}};
  }
  if (kw == "SCAN_REQUEST") {
    expect(5);
    return ScanRequest{parse_int(t[1]), parse_channel(t[2]), parse_mac_field(t[3]), parse_int(t[4], 1)};
  }
  if (kw == "SCAN_RESPONSE") {
    expect(4);
    ScanResponse m{parse_int(t[1]), parse_int(t[2]), std::nullopt};
    if (t[3] != "NONE") m.rssi_dbm = parse_real(t[3]);
    return m;
  }
  if (kw == "SEND_CSA") {
    expect(6);
    return SendCsa{parse_int(t[1]), parse_mac_field(t[2]), parse_channel(t[3]), parse_int(t[4], 1),
                   parse_int(t[5], 1)};
  }
  if (kw == "ADD_LVAP") {
    expect(7);
    AddLvap m;
    m.ap_id = parse_int(t[1]);
    m.lvap.sta_mac = parse_mac_field(t[2]);
    m.lvap.bssid = parse_mac_field(t[3]);
    try {
      m.lvap.sta_ip = Ipv4Addr::parse(t[4]);
    } catch (const Error&) {
      bad_field(t[4], "dotted IPv4");
    }
    m.lvap.ssid = word(t[5]);
    if (m.lvap.ssid.size() > 32) bad_field(t[5], "SSID of at most 32 bytes");
    if (m.lvap.bssid == m.lvap.sta_mac) bad_field(t[3], "BSSID distinct from the station MAC");
    m.channel = parse_channel(t[6]);
    return m;
  }
  if (kw == "REMOVE_LVAP") {
    expect(3);
    return RemoveLvap{parse_int(t[1]), parse_mac_field(t[2])};
  }
  if (kw == "ACK") {
    expect(2);
    return Ack{parse_int(t[1])};
  }
  if (kw == "ERROR") {
    expect(3);
    return ErrorReply{parse_int(t[1]), word(t[2])};
  }
  throw Error(Errc::UnknownKeyword, fmt::format("UnknownKeyword(\"{}\")", kw));
}

}  // namespace lvapsim::protocol
