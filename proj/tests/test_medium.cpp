#include <gtest/gtest.h>

#include <cmath>

#include "lvapsim/medium.hpp"

using namespace lvapsim;

namespace {

struct Radio {
  std::optional<ChannelId> channel;
  Position position;
  MacAddr48 mac;
  std::vector<std::pair<SimTime, Frame>> received;
  std::vector<Frame> overheard;
  std::optional<ChannelId> monitor;
};

RadioPort port_for(Kernel& k, Radio& r) {
  RadioPort p;
  p.channel = [&r] { return r.channel; };
  p.position = [&r] { return r.position; };
  p.owns = [&r](const MacAddr48& m) { return m == r.mac; };
  p.receive = [&k, &r](const Frame& f, double) { r.received.emplace_back(k.now(), f); };
  p.monitor_channel = [&r] { return r.monitor; };
  p.overhear = [&r](const Frame& f, double) { r.overheard.push_back(f); };
  return p;
}

Frame data_to(const MacAddr48& dst) {
  Frame f;
  f.kind = FrameKind::Data;
  f.src = parse_mac("02:00:00:00:00:01");
  f.dst = dst;
  f.bssid = dst;
  f.size_bytes = 80;
  f.seq = 1;
  return f;
}

}  // namespace

TEST(PathLoss, Examples) {
  const PathLossModel m;
  EXPECT_DOUBLE_EQ(rssi_at(20, 1, m), -20.0);
  EXPECT_DOUBLE_EQ(rssi_at(20, 10, m), -50.0);
  // 20 - (40 + 30 * log10(100)) = 20 - 100
  EXPECT_NEAR(rssi_at(20, 100, m), -80.0, 1e-9);
  EXPECT_DOUBLE_EQ(rssi_at(20, 0.2, m), -20.0);
}

TEST(PathLoss, MonotoneInDistance) {
  const PathLossModel m;
  double prev = rssi_at(15, 0, m);
  for (double d = 0.05; d < 500; d *= 1.1) {
    const double r = rssi_at(15, d, m);
    EXPECT_LE(r, prev);
    prev = r;
  }
}

TEST(PathLoss, ModelValidation) {
  EXPECT_THROW(validate(PathLossModel{40, 0, 3}), Error);
  EXPECT_THROW(validate(PathLossModel{40, 1, 1.9}), Error);
  EXPECT_NO_THROW(validate(PathLossModel{40, 1, 2}));
}

TEST(Airtime, Examples) {
  EXPECT_EQ(beacon_airtime_us(125, 1.0), 1000);
  EXPECT_EQ(beacon_airtime_us(125, 10.0), 100);
  EXPECT_EQ(beacon_airtime_us(100, 6.0), 134);  // ceil(800 / 6)
}

class MediumTest : public ::testing::Test {
 protected:
  Kernel k{11};
  NodeId a = k.add_node("a");
  NodeId b = k.add_node("b");
  Radio ra{ChannelId{4}, {0, 0}, parse_mac("02:00:00:00:00:01")};
  Radio rb{ChannelId{4}, {10, 0}, parse_mac("0a:00:00:00:00:01")};

  std::unique_ptr<Medium> make(MediumConfig cfg) {
    auto m = std::make_unique<Medium>(k, cfg);
    m->attach(a, port_for(k, ra));
    m->attach(b, port_for(k, rb));
    return m;
  }
};

TEST_F(MediumTest, ChannelMismatchDrops) {
  auto m = make({});
  rb.channel = ChannelId{9};
  const auto d = m->deliver_frame(a, b, ChannelId{4}, data_to(rb.mac));
  ASSERT_TRUE(std::holds_alternative<Dropped>(d));
  EXPECT_EQ(std::get<Dropped>(d).cause, DropCause::ChannelMismatch);
  k.run_until(SimTime{1000});
  EXPECT_TRUE(rb.received.empty());
}

TEST_F(MediumTest, LosslessDeliveryHonoursLatency) {
  MediumConfig cfg;
  cfg.one_way_latency_us = 2000;
  auto m = make(cfg);
  k.run_until(SimTime{500});
  const auto d = m->deliver_frame(a, b, ChannelId{4}, data_to(rb.mac));
  ASSERT_TRUE(std::holds_alternative<Delivered>(d));
  EXPECT_EQ(std::get<Delivered>(d).at, SimTime{2500});
  EXPECT_DOUBLE_EQ(std::get<Delivered>(d).rssi_dbm, -50.0);
  k.run_until(SimTime{3000});
  ASSERT_EQ(rb.received.size(), 1u);
  EXPECT_EQ(rb.received[0].first, SimTime{2500});
}

TEST_F(MediumTest, CertainLossAtProbabilityOne) {
  MediumConfig cfg;
  cfg.random_loss_prob = 1.0;
  auto m = make(cfg);
  for (int i = 0; i < 100; ++i) {
    const auto d = m->deliver_frame(a, b, ChannelId{4}, data_to(rb.mac));
    ASSERT_TRUE(std::holds_alternative<Dropped>(d));
    EXPECT_EQ(std::get<Dropped>(d).cause, DropCause::Random);
  }
}

TEST_F(MediumTest, EmpiricalLossWithinThreeSigma) {
  MediumConfig cfg;
  cfg.random_loss_prob = 0.05;
  auto m = make(cfg);
  const int n = 20000;
  int drops = 0;
  for (int i = 0; i < n; ++i) drops += std::holds_alternative<Dropped>(m->deliver_frame(a, b, ChannelId{4}, data_to(rb.mac)));
  EXPECT_NEAR(drops, n * 0.05, 3 * std::sqrt(n * 0.05 * 0.95));
}

TEST_F(MediumTest, BelowNoiseFloorIsOutOfRange) {
  auto m = make({});
  rb.position = {2000, 0};
  const auto d = m->deliver_frame(a, b, ChannelId{4}, data_to(rb.mac));
  ASSERT_TRUE(std::holds_alternative<Dropped>(d));
  EXPECT_EQ(std::get<Dropped>(d).cause, DropCause::OutOfRange);
}

TEST_F(MediumTest, TransmitResolvesOwnerAndFeedsMonitors) {
  auto m = make({});
  Radio rc{ChannelId{1}, {5, 0}, parse_mac("0a:00:00:00:00:02")};
  rc.monitor = ChannelId{4};
  const NodeId c = k.add_node("c");
  m->attach(c, port_for(k, rc));

  const auto d = m->transmit(a, ChannelId{4}, data_to(rb.mac));
  ASSERT_TRUE(std::holds_alternative<Delivered>(d));
  EXPECT_EQ(std::get<Delivered>(d).receiver, b);
  k.run_until(SimTime{10});
  EXPECT_EQ(rb.received.size(), 1u);
  EXPECT_EQ(rc.overheard.size(), 1u);
  EXPECT_TRUE(rc.received.empty());

  const auto none = m->transmit(a, ChannelId{4}, data_to(parse_mac("0a:00:00:00:00:99")));
  EXPECT_EQ(std::get<Dropped>(none).cause, DropCause::NoReceiver);
  rb.channel = ChannelId{9};
  const auto away = m->transmit(a, ChannelId{4}, data_to(rb.mac));
  EXPECT_EQ(std::get<Dropped>(away).cause, DropCause::ChannelMismatch);
}

TEST_F(MediumTest, DeafReceiverNeverGetsFrames) {
  auto m = make({});
  rb.channel = std::nullopt;
  const auto d = m->deliver_frame(a, b, ChannelId{4}, data_to(rb.mac));
  EXPECT_EQ(std::get<Dropped>(d).cause, DropCause::ChannelMismatch);
}

TEST_F(MediumTest, UnknownNodeRejected) {
  auto m = make({});
  EXPECT_THROW(m->deliver_frame(a, 77, ChannelId{4}, data_to(rb.mac)), Error);
}
