#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "lvapsim/metrics.hpp"

using namespace lvapsim;

namespace {

// tx every 10 ms, rx 2 ms later, the listed seqs lost with the given cause.
std::vector<PacketRecord> trace(int n, const std::set<int>& lost, LossCause cause = LossCause::Handoff) {
  std::vector<PacketRecord> out;
  for (int i = 0; i < n; ++i) {
    PacketRecord r;
    r.seq = i;
    r.tx_time = SimTime{i * 10'000};
    r.payload_bytes = 80;
    if (lost.count(i)) {
      r.truth_cause = cause;
    } else {
      r.rx_time = r.tx_time + SimTime{2'000};
    }
    out.push_back(r);
  }
  return out;
}

std::set<int> range(int a, int b) {
  std::set<int> s;
  for (int i = a; i <= b; ++i) s.insert(i);
  return s;
}

HandoffMeasurement detected(double gap_ms) {
  HandoffMeasurement h;
  h.gap.status = GapStatus::Detected;
  h.gap.gap_ms = gap_ms;
  return h;
}

}  // namespace

TEST(Traffic, Counts) {
  EXPECT_EQ(generate_traffic({10, 80, 1}).size(), 100u);
  const auto full = generate_traffic({10, 80, 600});
  ASSERT_EQ(full.size(), 60000u);
  EXPECT_EQ(full.back().seq, 59999);
  EXPECT_EQ(full.back().tx_time, SimTime{599'990'000});
  for (const auto& p : full) ASSERT_EQ(p.payload_bytes, 80);
  EXPECT_THROW(validate(TrafficSpec{0, 80, 1}), Error);
  EXPECT_THROW(validate(TrafficSpec{10, 0, 1}), Error);
}

TEST(JoinTraces, LostPacketsTakeTheirTruthTag) {
  const std::vector<TxEntry> tx{{0, SimTime{0}}, {1, SimTime{10}}, {2, SimTime{20}}};
  const std::vector<RxEntry> rx{{2, SimTime{25}}, {0, SimTime{5}}};
  const std::vector<LossCause> truth{LossCause::None, LossCause::Random, LossCause::None};
  const auto r = join_traces(tx, rx, truth);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].rx_time, SimTime{5});
  EXPECT_TRUE(r[1].lost());
  EXPECT_EQ(r[1].truth_cause, LossCause::Random);
  EXPECT_EQ(r[2].truth_cause, LossCause::None);
}

TEST(EstimateGap, HandBuiltTrace) {
  const auto r = trace(60, range(10, 15));
  const auto g = estimate_gap(r, SimTime{80'000}, 200);
  ASSERT_EQ(g.status, GapStatus::Detected);
  EXPECT_DOUBLE_EQ(g.gap_ms, 72.0);  // rx 162 - tx 90
  EXPECT_EQ(g.run_length, 6);
  EXPECT_EQ(g.first_lost_seq, 10);
}

TEST(EstimateGap, FirstLostMode) {
  const auto r = trace(60, range(10, 15));
  const auto g = estimate_gap(r, SimTime{80'000}, 200, GapMode::FirstLost);
  EXPECT_DOUBLE_EQ(g.gap_ms, 62.0);  // rx 162 - tx 100
  EXPECT_EQ(parse_gap_mode("first-lost"), GapMode::FirstLost);
  EXPECT_EQ(parse_gap_mode("last-received"), GapMode::LastReceived);
  EXPECT_THROW(parse_gap_mode("middle"), Error);
}

TEST(EstimateGap, LongestRunWins) {
  const auto r = trace(60, {12, 20, 21, 22, 30});
  const auto g = estimate_gap(r, SimTime{100'000}, 250);
  EXPECT_EQ(g.first_lost_seq, 20);
  EXPECT_DOUBLE_EQ(g.gap_ms, 42.0);  // rx(23) 232 - tx(19) 190
}

TEST(EstimateGap, RunStraddlingTheWindowStart) {
  const auto r = trace(60, range(8, 12));
  const auto g = estimate_gap(r, SimTime{100'000}, 100);
  ASSERT_EQ(g.status, GapStatus::Detected);
  EXPECT_EQ(g.run_length, 5);
  EXPECT_DOUBLE_EQ(g.gap_ms, 62.0);  // rx(13) 132 - tx(7) 70
}

TEST(EstimateGap, NoLossIsUndetectable) {
  const auto r = trace(60, {});
  EXPECT_EQ(estimate_gap(r, SimTime{100'000}, 200).status, GapStatus::Undetectable);
  // A loss outside the window does not count.
  EXPECT_EQ(estimate_gap(trace(60, {50}), SimTime{100'000}, 200).status, GapStatus::Undetectable);
}

TEST(EstimateGap, WholeWindowLostIsOpen) {
  const auto r = trace(60, range(10, 30));
  EXPECT_EQ(estimate_gap(r, SimTime{120'000}, 50).status, GapStatus::OpenGap);
  // Run reaching the end of the trace never closes.
  EXPECT_EQ(estimate_gap(trace(60, range(50, 59)), SimTime{400'000}, 150).status, GapStatus::OpenGap);
}

TEST(EstimateGap, WindowBeyondTrace) {
  const auto r = trace(60, {});
  try {
    estimate_gap(r, SimTime{500'000}, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::WindowBeyondTrace);
  }
}

TEST(Attribution, WindowRule) {
  auto r = trace(1000, {20, 21, 22});
  r[900].rx_time.reset();
  r[900].truth_cause = LossCause::Random;
  const std::vector<HandoffWindow> w{{SimTime{200'000}, SimTime{240'000}}};
  const auto a = attribute_losses(r, w, 0);
  EXPECT_EQ(a.estimated[21], LossCause::Handoff);
  EXPECT_EQ(a.estimated[900], LossCause::Random);  // 9 s, far past Complete
  EXPECT_EQ(a.estimated[5], LossCause::None);
  EXPECT_EQ(a.est_handoff, 3);
  EXPECT_EQ(a.est_random, 1);
  EXPECT_EQ(a.divergent, 0);
}

TEST(Attribution, RandomLossInsideWindowIsMisattributed) {
  auto r = trace(100, {20});
  r[24].rx_time.reset();
  r[24].truth_cause = LossCause::Random;
  const std::vector<HandoffWindow> w{{SimTime{200'000}, SimTime{230'000}}};
  const auto a = attribute_losses(r, w, 0);
  EXPECT_EQ(a.estimated[24], LossCause::Random);  // 240 ms is past complete + 0
  const auto guarded = attribute_losses(r, w, 10);
  EXPECT_EQ(guarded.estimated[24], LossCause::Handoff);
  EXPECT_EQ(guarded.divergent, 1);
  EXPECT_EQ(guarded.truth_random_in_windows, 1);
  EXPECT_LE(guarded.divergent, guarded.truth_random_in_windows);
}

TEST(Summary, LossPercentages) {
  std::vector<PacketRecord> r(60000);
  for (int i = 0; i < 60000; ++i) {
    r[i].seq = i;
    r[i].tx_time = SimTime{i * 10'000};
    if (i >= 198) r[i].rx_time = r[i].tx_time;
  }
  Attribution a;
  a.est_handoff = 186;
  a.est_random = 12;
  const auto row = summarize(r, {}, a, 10);
  EXPECT_EQ(summary_csv_row(row), "10,0.33,0.31,0.02,0.000,0.000,0.000,0\n");
  EXPECT_NEAR(row.total_loss_pct, row.handoff_loss_pct + row.random_loss_pct, 1e-9);
}

TEST(Summary, AccumulatedShare) {
  std::vector<HandoffMeasurement> h;
  for (int i = 0; i < 18; ++i) h.push_back(detected(60.0 + i * 0.8));  // 60 .. 73.6
  h[17].gap.gap_ms = 73.8;
  h.push_back(detected(90.0));
  h.push_back(detected(95.0));
  const auto cdf = gap_cdf(h);
  const auto at = std::find_if(cdf.begin(), cdf.end(), [](const auto& p) { return p.gap_ms == 73.8; });
  ASSERT_NE(at, cdf.end());
  EXPECT_DOUBLE_EQ(at->acc_pct, 90.0);
  EXPECT_DOUBLE_EQ(cdf.back().acc_pct, 100.0);
  const auto row = summarize({}, h, Attribution{}, 10);
  EXPECT_DOUBLE_EQ(row.p90_gap_ms, 73.8);
  EXPECT_DOUBLE_EQ(row.max_gap_ms, 95.0);
}

TEST(Summary, ZeroLossRun) {
  const auto r = trace(60000, {});
  std::vector<HandoffMeasurement> h(20);  // all undetectable
  const auto row = summarize(r, h, attribute_losses(r, {}, 0), 20);
  EXPECT_EQ(row.undetectable, 20);
  EXPECT_EQ(summary_csv_row(row), "20,0.00,0.00,0.00,0.000,0.000,0.000,20\n");
  EXPECT_TRUE(gap_cdf(h).empty());
}

TEST(Summary, NearestRankPercentile) {
  EXPECT_DOUBLE_EQ(percentile({5, 1, 3, 2, 4}, 50), 3);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 50), 2);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 90), 4);
  EXPECT_DOUBLE_EQ(percentile({7}, 0), 7);
  EXPECT_THROW(percentile({}, 50), Error);
}

TEST(Reports, EmptyRunHasHeadersOnly) {
  EXPECT_EQ(packets_csv({}, {}), std::string(kPacketsHeader) + "\n");
  EXPECT_EQ(handoffs_csv({}), std::string(kHandoffsHeader) + "\n");
  EXPECT_EQ(summary_csv({}), std::string(kSummaryHeader) + "\n");
}

TEST(Reports, RowFormats) {
  auto r = trace(3, {1});
  const std::vector<LossCause> est{LossCause::None, LossCause::Handoff, LossCause::None};
  EXPECT_EQ(packets_csv(r, est), std::string(kPacketsHeader) +
                                     "\n0,0,2000,0,none,none\n1,10000,,1,handoff,handoff\n2,20000,22000,0,none,none\n");
  HandoffMeasurement h;
  h.txn_id = 3;
  h.sta = "02:00:00:00:00:01";
  h.origin_ap = 1;
  h.dest_ap = 2;
  h.cmd_time = SimTime{30'000'000};
  h.retune_time = SimTime{30'091'000};
  h.resume_time = SimTime{30'111'000};
  h.gap.status = GapStatus::Detected;
  h.gap.gap_ms = 81.0;
  HandoffMeasurement u = h;
  u.gap = GapEstimate{};
  EXPECT_EQ(handoffs_csv(std::vector{h, u}),
            std::string(kHandoffsHeader) +
                "\n3,02:00:00:00:00:01,1,2,30000000,30091000,30111000,81000,1"
                "\n3,02:00:00:00:00:01,1,2,30000000,30091000,30111000,,0\n");
}

TEST(Reports, WriteFileCreatesDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "lvapsim_metrics_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_file(dir, "x.csv", "a,b\n");
  std::ifstream in(dir / "x.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "a,b");
  std::filesystem::remove_all(dir.parent_path());
  try {
    write_file("/proc/lvapsim_cannot_write", "x.csv", "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Io);
  }
}
