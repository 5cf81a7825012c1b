#include "lvapsim/core.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace lvapsim {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::WrongLength: return "WrongLength";
    case Errc::BadHexDigit: return "BadHexDigit";
    case Errc::BadSeparator: return "BadSeparator";
    case Errc::BadIpv4: return "BadIpv4";
    case Errc::IndexOverflow: return "IndexOverflow";
    case Errc::InvalidChannel: return "InvalidChannel";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::PastEvent: return "PastEvent";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::DuplicateLvap: return "DuplicateLvap";
    case Errc::UnknownLvap: return "UnknownLvap";
    case Errc::CsaInProgress: return "CsaInProgress";
    case Errc::AuxBusy: return "AuxBusy";
    case Errc::UnknownStation: return "UnknownStation";
    case Errc::NotEnoughAps: return "NotEnoughAps";
    case Errc::UnknownKeyword: return "UnknownKeyword";
    case Errc::FieldCount: return "FieldCount";
    case Errc::FieldParse: return "FieldParse";
    case Errc::WindowBeyondTrace: return "WindowBeyondTrace";
    case Errc::ConfigSyntax: return "ConfigSyntax";
    case Errc::ConfigValidation: return "ConfigValidation";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

SimTime from_ms(double ms) {
  return SimTime{static_cast<std::int64_t>(std::llround(ms * 1000.0))};
}

double to_ms(SimTime t) { return static_cast<double>(t.count()) / 1000.0; }

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

MacAddr48 MacAddr48::parse(std::string_view text) {
  if (text.size() != 17) {
    throw Error(Errc::WrongLength, fmt::format("MAC '{}' must be 17 characters", text));
  }
  Octets octets{};
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t at = i * 3;
    const int hi = hex_value(text[at]);
    const int lo = hex_value(text[at + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(Errc::BadHexDigit, fmt::format("MAC '{}' has a non-hex digit", text));
    }
    if (i < 5 && text[at + 2] != ':') {
      throw Error(Errc::BadSeparator, fmt::format("MAC '{}' must use ':' separators", text));
    }
    octets[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return MacAddr48{octets};
}

bool MacAddr48::is_broadcast() const { return *this == kBroadcastMac; }

std::string MacAddr48::str() const {
  return fmt::format("{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", octets_[0], octets_[1],
                     octets_[2], octets_[3], octets_[4], octets_[5]);
}

Ipv4Addr Ipv4Addr::parse(std::string_view text) {
  Octets octets{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i > 0) {
      if (pos >= text.size() || text[pos] != '.') {
        throw Error(Errc::BadIpv4, fmt::format("bad IPv4 address '{}'", text));
      }
      ++pos;
    }
    const char* first = text.data() + pos;
    const char* last = text.data() + text.size();
    // No leading '+', no leading zeros: keeps the dotted form canonical.
    if (first == last || *first < '0' || *first > '9' ||
        (*first == '0' && first + 1 < last && first[1] >= '0' && first[1] <= '9')) {
      throw Error(Errc::BadIpv4, fmt::format("bad IPv4 address '{}'", text));
    }
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || value > 255) {
      throw Error(Errc::BadIpv4, fmt::format("bad IPv4 address '{}'", text));
    }
    octets[i] = static_cast<std::uint8_t>(value);
    pos = static_cast<std::size_t>(ptr - text.data());
  }
  if (pos != text.size()) {
    throw Error(Errc::BadIpv4, fmt::format("bad IPv4 address '{}'", text));
  }
  return Ipv4Addr{octets};
}

std::string Ipv4Addr::str() const {
  return fmt::format("{}.{}.{}.{}", octets_[0], octets_[1], octets_[2], octets_[3]);
}

ChannelId::ChannelId(int index) : index_(index) {
  if (index < kMin || index > kMax) {
    throw Error(Errc::InvalidChannel, fmt::format("channel {} outside 1..14", index));
  }
}

MacAddr48 allocate_bssid(std::uint32_t sta_index, const MacAddr48& base) {
  if (sta_index >= (1u << 24)) {
    throw Error(Errc::IndexOverflow, fmt::format("station index {} needs more than 24 bits", sta_index));
  }
  if (!base.locally_administered()) {
    throw Error(Errc::InvalidValue,
                fmt::format("BSSID base {} lacks the locally-administered bit", base.str()));
  }
  auto octets = base.octets();
  octets[3] = static_cast<std::uint8_t>(sta_index >> 16);
  octets[4] = static_cast<std::uint8_t>(sta_index >> 8);
  octets[5] = static_cast<std::uint8_t>(sta_index);
  return MacAddr48{octets};
}

void validate(const Lvap& lvap) {
  if (lvap.bssid == lvap.sta_mac) {
    throw Error(Errc::InvalidValue, fmt::format("LVAP bssid equals station MAC {}", lvap.sta_mac.str()));
  }
  if (lvap.ssid.empty() || lvap.ssid.size() > 32) {
    throw Error(Errc::InvalidValue, fmt::format("SSID '{}' must be 1..32 bytes", lvap.ssid));
  }
  for (char c : lvap.ssid) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      throw Error(Errc::InvalidValue, fmt::format("SSID '{}' contains whitespace", lvap.ssid));
    }
  }
}

double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void validate(const DeviceProfile& profile) {
  if (!(profile.switch_latency_ms >= 0.0) || profile.beacons_required < 0 ||
      !(profile.resume_jitter_ms >= 0.0)) {
    throw Error(Errc::InvalidValue, fmt::format("device profile '{}' has a negative field", profile.name));
  }
}

const DeviceProfile* builtin_profile(std::string_view name) {
  // Calibrated by hand to echo three qualitatively different client cards.
  static const std::array<DeviceProfile, 3> kProfiles{{
      {"fastcard", 5.0, 1, 1.0},
      {"midcard", 15.0, 2, 2.0},
      {"slowcard", 50.0, 3, 0.0},
  }};
  for (const auto& p : kProfiles) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

BeaconPolicy BeaconPolicy::make(double normal_ms, double burst_ms, int burst_count) {
  BeaconPolicy policy{normal_ms, burst_ms, burst_count};
  validate(policy);
  return policy;
}

void validate(const BeaconPolicy& policy) {
  if (!(policy.interval_normal_ms >= 50.0 && policy.interval_normal_ms <= 100.0)) {
    throw Error(Errc::InvalidValue,
                fmt::format("normal beacon interval {} ms outside [50, 100]", policy.interval_normal_ms));
  }
  if (!(policy.interval_burst_ms > 0.0 && policy.interval_burst_ms <= policy.interval_normal_ms)) {
    throw Error(Errc::InvalidValue,
                fmt::format("burst beacon interval {} ms must be in (0, {}]", policy.interval_burst_ms,
                            policy.interval_normal_ms));
  }
  if (policy.burst_count < 1) {
    throw Error(Errc::InvalidValue, fmt::format("burst_count {} must be >= 1", policy.burst_count));
  }
}

}  // namespace lvapsim
