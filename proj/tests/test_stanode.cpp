#include <gtest/gtest.h>

#include "lvapsim/apnode.hpp"
#include "lvapsim/stanode.hpp"

using namespace lvapsim;

namespace {

const MacAddr48 kSta = parse_mac("02:00:00:00:00:01");
const MacAddr48 kBssid = parse_mac("0a:00:00:00:00:01");
const Lvap kLvap{kSta, kBssid, Ipv4Addr::parse("10.0.0.5"), "wi5"};

class StaTest : public ::testing::Test {
 protected:
  Kernel k{5};
  NodeId ctl = k.add_node("controller");
  NodeId n1 = k.add_node("ap1");
  NodeId n2 = k.add_node("ap2");
  NodeId ns = k.add_node("sta1");
  Medium medium{k, MediumConfig{}};
  ControlNetwork net{k, SimTime{1000}};
  std::unique_ptr<ApAgent> ap1, ap2;
  std::unique_ptr<Station> sta;

  void build(DeviceProfile profile) {
    net.attach(ctl, [](NodeId, std::int64_t, const protocol::ControlMessage&) {});
    ApAgentConfig c1;
    c1.descriptor = ApDescriptor{1, {0, 0}, ChannelId{4}, 20.0, AuxIdle{}};
    c1.beacon = BeaconPolicy{100, 10, 20};
    ApAgentConfig c2 = c1;
    c2.descriptor = ApDescriptor{2, {10, 0}, ChannelId{9}, 20.0, AuxIdle{}};
    ap1 = std::make_unique<ApAgent>(k, medium, net, n1, ctl, c1);
    ap2 = std::make_unique<ApAgent>(k, medium, net, n2, ctl, c2);
    StationConfig sc;
    sc.lvap = kLvap;
    sc.profile = profile;
    sc.channel = ChannelId{4};
    sc.position = {5, 0};
    sta = std::make_unique<Station>(k, medium, ns, sc);
    ap1->add_lvap(kLvap, ChannelId{4}, ApAgent::BeaconStart::Normal);
  }

  std::optional<SimTime> first(std::string_view kind) const {
    for (const auto& e : k.log().entries()) {
      if (e.kind == kind) return e.at;
    }
    return std::nullopt;
  }
};

}  // namespace

TEST_F(StaTest, RetunesExactlyLatencyAfterCountZeroBeacon) {
  build({"p", 20.0, 1, 0.0});
  k.run_until(SimTime{10'000});
  ap1->start_csa(kSta, ChannelId{9}, 4, 10);
  k.run_until(SimTime{200'000});
  // Counts 4..0 at 10, 20, 30, 40, 50 ms.
  ASSERT_EQ(sta->switches().size(), 1u);
  const auto& sw = sta->switches()[0];
  EXPECT_EQ(sw.switch_at, SimTime{50'000});
  EXPECT_EQ(sw.retune_at, SimTime{70'000});
  EXPECT_EQ(first("RETUNE"), SimTime{70'000});
  EXPECT_EQ(sw.to, ChannelId{9});
  EXPECT_EQ(sta->tuned_channel(), ChannelId{9});
}

TEST_F(StaTest, ResumesAfterKBeaconsPlusJitter) {
  build({"p", 20.0, 2, 3.0});
  ap1->start_csa(kSta, ChannelId{9}, 1, 10);  // switch at 10 ms, retune at 30 ms
  k.run_until(SimTime{25'000});
  EXPECT_FALSE(sta->listening_channel().has_value());
  ap2->add_lvap(kLvap, ChannelId{9}, ApAgent::BeaconStart::Burst);  // beacons at 25, 35, 45 ...
  k.run_until(SimTime{200'000});
  // Beacon at 25 ms lands while deaf; heard at 35 and 45, resume at 48.
  EXPECT_EQ(sta->switches()[0].resume_at, SimTime{48'000});
  EXPECT_TRUE(sta->active());
}

TEST_F(StaTest, ZeroBeaconsRequiredResumesAtRetune) {
  build({"p", 20.0, 0, 0.0});
  ap1->start_csa(kSta, ChannelId{9}, 1, 10);
  k.run_until(SimTime{100'000});
  EXPECT_EQ(sta->switches()[0].resume_at, SimTime{30'000});
}

TEST_F(StaTest, IdleModesDropUplink) {
  build({"p", 20.0, 1, 0.0});
  ap1->start_csa(kSta, ChannelId{9}, 1, 10);
  k.run_until(SimTime{5'000});
  auto active = sta->enqueue_uplink(1, 80);
  EXPECT_EQ(active.outcome, UplinkOutcome::Sent);
  EXPECT_TRUE(std::holds_alternative<Delivered>(*active.delivery));

  k.run_until(SimTime{15'000});
  EXPECT_TRUE(std::holds_alternative<ModeSwitching>(sta->mode()));
  EXPECT_EQ(sta->enqueue_uplink(2, 80).outcome, UplinkOutcome::DroppedIdle);

  k.run_until(SimTime{35'000});
  EXPECT_TRUE(std::holds_alternative<ModeAwaitingBeacons>(sta->mode()));
  EXPECT_EQ(sta->enqueue_uplink(3, 80).outcome, UplinkOutcome::DroppedIdle);
}

TEST_F(StaTest, LostCountZeroBeaconStillSwitchesOnTime) {
  build({"p", 20.0, 1, 0.0});
  ap1->start_csa(kSta, ChannelId{9}, 3, 10);
  // Remove the LVAP after the count-1 beacon so count 0 is never sent.
  k.schedule(SimTime{25'000}, n1, "", "", [&] { ap1->remove_lvap(kSta); });
  k.run_until(SimTime{100'000});
  ASSERT_EQ(sta->switches().size(), 1u);
  EXPECT_EQ(sta->switches()[0].switch_at, SimTime{30'000});
}

TEST_F(StaTest, BssidOfRecordNeverChanges) {
  build(*builtin_profile("fastcard"));
  ap1->start_csa(kSta, ChannelId{9}, 2, 10);
  k.run_until(SimTime{20'000});
  ap2->add_lvap(kLvap, ChannelId{9}, ApAgent::BeaconStart::Burst);
  k.run_until(SimTime{70'000});
  ap1->remove_lvap(kSta);
  k.run_until(SimTime{1'000'000});
  EXPECT_TRUE(sta->active());
  EXPECT_EQ(sta->bssids_seen(), std::vector<MacAddr48>{kBssid});
  EXPECT_EQ(sta->lvap().bssid, kBssid);
}

TEST_F(StaTest, UplinkOnlyOnTunedChannel) {
  build({"p", 5.0, 1, 0.0});
  ap1->start_csa(kSta, ChannelId{9}, 1, 10);
  ap2->add_lvap(kLvap, ChannelId{9}, ApAgent::BeaconStart::Burst);
  k.run_until(SimTime{100'000});
  const auto r = sta->enqueue_uplink(9, 80);
  ASSERT_EQ(r.outcome, UplinkOutcome::Sent);
  EXPECT_EQ(std::get<Delivered>(*r.delivery).receiver, n2);
}

TEST(Mobility, StraightSegmentAtWalkingSpeed) {
  Mobility m{{{0, 0}, {14, 0}}, 1.4};
  EXPECT_EQ(position_along(m, SimTime{0}), (Position{0, 0}));
  EXPECT_NEAR(position_along(m, SimTime{5'000'000}).x, 7.0, 1e-9);
  EXPECT_NEAR(position_along(m, SimTime{10'000'000}).x, 14.0, 1e-9);
  EXPECT_EQ(position_along(m, SimTime{20'000'000}), (Position{14, 0}));
}

TEST(Mobility, ProceedsToNextWaypoint) {
  Mobility m{{{0, 0}, {3, 0}, {3, 4}}, 1.0};
  const auto p = position_along(m, SimTime{5'000'000});
  EXPECT_NEAR(p.x, 3.0, 1e-9);
  EXPECT_NEAR(p.y, 2.0, 1e-9);
}

TEST(Mobility, StaticStaysPut) {
  Mobility m{{{2, 3}}, 1.0};
  EXPECT_TRUE(m.is_static());
  EXPECT_EQ(position_along(m, SimTime{99'000'000}), (Position{2, 3}));
}

TEST_F(StaTest, MobilityTickUpdatesPosition) {
  build({"p", 5.0, 1, 0.0});
  StationConfig sc;
  sc.lvap = Lvap{parse_mac("02:00:00:00:00:02"), parse_mac("0a:00:00:00:00:02"), Ipv4Addr::parse("10.0.0.6"), "wi5"};
  sc.profile = {"p", 5.0, 1, 0.0};
  sc.channel = ChannelId{4};
  sc.mobility = Mobility{{{0, 0}, {14, 0}}, 1.4};
  Station walker(k, medium, k.add_node("sta2"), sc);
  walker.start_mobility();
  k.run_until(SimTime{10'000'000});
  EXPECT_NEAR(walker.position().x, 14.0, 1e-9);
}
