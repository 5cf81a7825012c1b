// lvapsim: run one scenario or a burst-interval sweep and write the reports.
//
// Exit codes: 0 success, 2 configuration error, 3 invariant violation,
// 4 I/O error.

#include <cstdio>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lvapsim/simulation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitIo = 4;

int exit_code_for(const lvapsim::Error& e) {
  return e.code() == lvapsim::Errc::Io ? kExitIo : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace lvapsim;

  CLI::App app{"Discrete-event simulator of LVAP-based seamless WLAN handoffs"};
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<int> burst;
  std::vector<std::string> profiles;
  bool do_sweep = false;
  std::vector<int> burst_list;
  std::string gap_mode;
  bool serial = false;

  app.add_option("--scenario", scenario_path, "Scenario file")->required();
  app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--burst-interval", burst, "Burst beacon interval in ms (overrides the scenario)");
  app.add_option("--profile", profiles, "Device profile for every station; repeat to sweep several")
      ->delimiter(',');
  app.add_flag("--sweep", do_sweep, "Run once per burst interval in the sweep list");
  app.add_option("--burst-list", burst_list, "Sweep list in ms (default: the scenario's sweep_burst_ms)")
      ->delimiter(',');
  app.add_option("--gap-mode", gap_mode, "Gap start point")->check(CLI::IsMember({"last-received", "first-lost"}));
  app.add_flag("--serial", serial, "Run sweep replicas one after another");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  Scenario base;
  try {
    base = load_scenario(scenario_path);
    Overrides o;
    o.seed = seed;
    o.burst_interval_ms = burst;
    if (!gap_mode.empty()) o.gap_mode = parse_gap_mode(gap_mode);
    if (profiles.size() == 1) o.profile = profiles.front();
    base = apply_overrides(std::move(base), o);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_for(e);
  }
  for (const auto& w : base.warnings) fmt::print(stderr, "warning: {}\n", w);

  // Build the run list: profile-major, then burst.
  struct Job {
    Scenario scenario;
    std::string subdir;
  };
  std::vector<Job> jobs;
  try {
    const bool multi_profile = profiles.size() > 1;
    const std::vector<int> bursts =
        do_sweep ? (burst_list.empty() ? base.sweep_burst_ms : burst_list)
                 : std::vector<int>{base.controller.burst_interval_ms};
    const std::vector<std::string> profile_list = multi_profile ? profiles : std::vector<std::string>{""};
    for (const auto& p : profile_list) {
      for (int b : bursts) {
        Overrides o;
        o.burst_interval_ms = b;
        if (!p.empty()) o.profile = p;
        std::string sub;
        if (multi_profile) sub = p + "/";
        if (do_sweep) sub += fmt::format("burst_{}", b);
        jobs.push_back({apply_overrides(base, o), sub});
      }
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_for(e);
  }

  std::vector<std::future<RunResult>> futures;
  for (const auto& job : jobs) {
    futures.push_back(std::async(serial ? std::launch::deferred : std::launch::async,
                                 [&job] { return run_scenario(job.scenario); }));
  }

  const std::filesystem::path out{out_dir};
  std::vector<SummaryRow> rows;
  int rc = kExitOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      const RunResult result = futures[i].get();
      const auto dir = jobs[i].subdir.empty() ? out : out / jobs[i].subdir;
      emit_reports(result, dir);
      rows.push_back(result.summary);
      for (const auto& w : result.warnings) fmt::print(stderr, "warning: {}\n", w);
      for (const auto& v : result.violations) fmt::print(stderr, "invariant violation: {}\n", v);
      if (!result.ok()) {
        rc = kExitInvariant;
        break;
      }
    } catch (const Error& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      rc = exit_code_for(e);
      break;
    }
  }
  for (std::size_t i = rows.size(); i < futures.size(); ++i) {
    if (futures[i].valid() && !serial) futures[i].wait();
  }

  if (jobs.size() > 1 || !jobs.front().subdir.empty()) {
    try {
      write_file(out, "summary.csv", summary_csv(rows));
    } catch (const Error& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return kExitIo;
    }
  }
  if (rc == kExitOk) fmt::print("{}", summary_csv(rows));
  return rc;
}
