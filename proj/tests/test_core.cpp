#include <gtest/gtest.h>

#include <random>
#include <set>

#include "lvapsim/core.hpp"

using namespace lvapsim;

namespace {

template <typename F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::Io;
}

}  // namespace

TEST(MacAddr, ParsesHexPairs) {
  const auto mac = parse_mac("00:1b:b1:00:00:01");
  EXPECT_EQ(mac.octets(), (MacAddr48::Octets{0x00, 0x1b, 0xb1, 0x00, 0x00, 0x01}));
}

TEST(MacAddr, UppercaseRendersLowercase) {
  const auto mac = parse_mac("00:1B:B1:00:00:01");
  EXPECT_EQ(mac, parse_mac("00:1b:b1:00:00:01"));
  EXPECT_EQ(mac.str(), "00:1b:b1:00:00:01");
}

TEST(MacAddr, RejectsMalformedText) {
  EXPECT_EQ(error_of([] { parse_mac("00:1b:b1:00:00"); }), Errc::WrongLength);
  EXPECT_EQ(error_of([] { parse_mac("00:1b:b1:00:00:0g"); }), Errc::BadHexDigit);
  EXPECT_EQ(error_of([] { parse_mac("00-1b-b1-00-00-01"); }), Errc::BadSeparator);
  EXPECT_EQ(error_of([] { parse_mac(""); }), Errc::WrongLength);
}

TEST(MacAddr, RenderParseRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5000; ++i) {
    MacAddr48::Octets o{};
    for (auto& b : o) b = static_cast<std::uint8_t>(rng());
    const MacAddr48 mac{o};
    EXPECT_EQ(parse_mac(mac.str()), mac);
  }
}

TEST(Ipv4, RoundTripAndRejects) {
  EXPECT_EQ(Ipv4Addr::parse("10.0.0.5").str(), "10.0.0.5");
  EXPECT_EQ(Ipv4Addr::parse("255.255.255.0").octets(), (Ipv4Addr::Octets{255, 255, 255, 0}));
  for (const char* bad : {"10.0.0", "10.0.0.256", "10.0.0.05", "a.b.c.d", "10..0.1", "10.0.0.1 "}) {
    EXPECT_EQ(error_of([&] { Ipv4Addr::parse(bad); }), Errc::BadIpv4) << bad;
  }
}

TEST(Channel, ValidRange) {
  EXPECT_EQ(ChannelId{1}.index(), 1);
  EXPECT_EQ(ChannelId{14}.index(), 14);
  EXPECT_EQ(error_of([] { ChannelId{0}; }), Errc::InvalidChannel);
  EXPECT_EQ(error_of([] { ChannelId{15}; }), Errc::InvalidChannel);
}

TEST(Bssid, AllocationExamples) {
  EXPECT_EQ(allocate_bssid(1, kDefaultBssidBase).str(), "0a:00:00:00:00:01");
  EXPECT_EQ(allocate_bssid(0x010203, kDefaultBssidBase).str(), "0a:00:00:01:02:03");
  EXPECT_EQ(error_of([] { allocate_bssid(1u << 24, kDefaultBssidBase); }), Errc::IndexOverflow);
  EXPECT_EQ(error_of([] { allocate_bssid(1, parse_mac("00:11:22:33:44:55")); }), Errc::InvalidValue);
}

TEST(Bssid, AllocationIsInjective) {
  std::set<MacAddr48> seen;
  for (std::uint32_t i = 0; i < 70000; ++i) ASSERT_TRUE(seen.insert(allocate_bssid(i, kDefaultBssidBase)).second);
  std::mt19937 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const std::uint32_t a = rng() & 0xffffff;
    const std::uint32_t b = rng() & 0xffffff;
    if (a != b) EXPECT_NE(allocate_bssid(a, kDefaultBssidBase), allocate_bssid(b, kDefaultBssidBase));
  }
}

TEST(Distance, Examples) {
  EXPECT_DOUBLE_EQ(distance({0, 0}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(distance({2.5, -1}, {2.5, -1}), 0.0);
  EXPECT_NEAR(distance({0, 0}, {1, 1}), 1.41421356, 1e-8);
  EXPECT_DOUBLE_EQ(distance({1, 7}, {-4, 2}), distance({-4, 2}, {1, 7}));
}

TEST(Lvap, Validation) {
  Lvap ok{parse_mac("00:1b:b1:00:00:01"), parse_mac("0a:00:00:00:00:01"), Ipv4Addr::parse("10.0.0.5"), "wi5"};
  EXPECT_NO_THROW(validate(ok));
  auto same = ok;
  same.bssid = same.sta_mac;
  EXPECT_EQ(error_of([&] { validate(same); }), Errc::InvalidValue);
  auto spaced = ok;
  spaced.ssid = "two words";
  EXPECT_EQ(error_of([&] { validate(spaced); }), Errc::InvalidValue);
  auto longname = ok;
  longname.ssid = std::string(33, 'a');
  EXPECT_EQ(error_of([&] { validate(longname); }), Errc::InvalidValue);
  longname.ssid = std::string(32, 'a');
  EXPECT_NO_THROW(validate(longname));
}

TEST(BeaconPolicy, Bounds) {
  EXPECT_NO_THROW(BeaconPolicy::make(100, 10, 20));
  EXPECT_NO_THROW(BeaconPolicy::make(50, 50, 1));
  EXPECT_EQ(error_of([] { BeaconPolicy::make(49, 10, 20); }), Errc::InvalidValue);
  EXPECT_EQ(error_of([] { BeaconPolicy::make(101, 10, 20); }), Errc::InvalidValue);
  EXPECT_EQ(error_of([] { BeaconPolicy::make(100, 0, 20); }), Errc::InvalidValue);
  EXPECT_EQ(error_of([] { BeaconPolicy::make(100, -5, 20); }), Errc::InvalidValue);
  EXPECT_EQ(error_of([] { BeaconPolicy::make(100, 101, 20); }), Errc::InvalidValue);
  EXPECT_EQ(error_of([] { BeaconPolicy::make(100, 10, 0); }), Errc::InvalidValue);
}

TEST(Profiles, BuiltinsAndValidation) {
  const auto* slow = builtin_profile("slowcard");
  ASSERT_NE(slow, nullptr);
  EXPECT_DOUBLE_EQ(slow->switch_latency_ms, 50.0);
  EXPECT_EQ(slow->beacons_required, 3);
  EXPECT_EQ(builtin_profile("fastcard")->beacons_required, 1);
  EXPECT_EQ(builtin_profile("midcard")->beacons_required, 2);
  EXPECT_EQ(builtin_profile("nope"), nullptr);
  EXPECT_EQ(error_of([] { validate(DeviceProfile{"x", -1.0, 0, 0.0}); }), Errc::InvalidValue);
  EXPECT_EQ(error_of([] { validate(DeviceProfile{"x", 1.0, -1, 0.0}); }), Errc::InvalidValue);
}

TEST(Time, MillisecondConversion) {
  EXPECT_EQ(from_ms(1.5), SimTime{1500});
  EXPECT_EQ(from_ms(0.0004), SimTime{0});
  EXPECT_EQ(from_ms(0.0006), SimTime{1});
  EXPECT_DOUBLE_EQ(to_ms(SimTime{72000}), 72.0);
}
