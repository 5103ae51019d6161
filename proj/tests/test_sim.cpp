#include <gtest/gtest.h>

#include <filesystem>

#include "roiedge/sim.hpp"

using namespace roiedge;

namespace {

const std::filesystem::path kBundled = std::filesystem::path(ROIEDGE_SOURCE_DIR) / "scenarios" / "bundled";

// The bundled clip is loaded once and its RoIs extracted once; every test
// varies only policy and link settings on top.
struct Bundled {
  SimScenario scenario = load_scenario(load_config(kBundled / "config.json"));
  RoiCache cache;
};

Bundled& bundled() {
  static Bundled b;
  return b;
}

SimResult run_with(const SimScenario& s) {
  LocalEdge edge(s.ground_truth, s.config);
  return run_simulation(s, edge, bundled().cache);
}

std::string reports_text(const SimResult& r) {
  std::string out;
  for (const auto& rep : r.reports) out += report_to_json(rep).dump() + "\n";
  return out;
}

}  // namespace

TEST(Simulation, EmptyClipDecaysToOneFps) {
  const auto cfg = default_config({"scenario.frames=120", "scenario.width=1280", "scenario.height=720",
                                   "cam.weights=\"" + (kBundled / "weights.tensor").string() + "\""});
  const auto s = load_scenario(cfg);
  const auto r = run_simulation(s);
  ASSERT_EQ(r.reports.size(), 120u);
  std::map<int, int> rounds;
  for (const auto& rep : r.reports) {
    EXPECT_TRUE(rep.detections.empty());
    for (const auto& d : rep.parts) {
      if (rounds[d.part] >= 6) {
        EXPECT_EQ(d.frequency, 1) << "part " << d.part << " frame " << rep.frame;
        EXPECT_EQ(d.offloaded, rep.frame % 30 == 0);
      }
      if (d.offloaded) ++rounds[d.part];
    }
  }
  for (int part : {3, 4, 5}) EXPECT_GE(rounds[part], 6);
  EXPECT_LT(r.summary.bytes_ratio, 0.05);
}

TEST(Simulation, SameSeedSameReports) {
  const auto& s = bundled().scenario;
  EXPECT_EQ(reports_text(run_with(s)), reports_text(run_with(s)));
  // A fresh cache must not change anything either.
  EXPECT_EQ(reports_text(run_with(s)), reports_text(run_simulation(s)));
}

TEST(Simulation, ByteAccounting) {
  SimScenario s = bundled().scenario;
  s.config.link.loss_rate = 0.2;
  const auto r = run_with(s);
  double total = 0.0;
  for (const auto& rep : r.reports) {
    double sum = 0.0;
    for (const auto& b : rep.boxes) {
      sum += b.bytes;
      EXPECT_DOUBLE_EQ(b.bytes, s.config.policy.size.bytes(b.box.rect, b.box.rate));
    }
    EXPECT_DOUBLE_EQ(rep.bytes, sum);
    if (rep.feasible) {
      EXPECT_LE(rep.bytes, rep.budget_bytes);
    }
    EXPECT_GE(rep.latency_ms, 0.0);
    total += rep.bytes;
  }
  EXPECT_DOUBLE_EQ(r.summary.total_bytes, total);
  EXPECT_NEAR(r.summary.reduction,
              1.0 - total / (s.config.policy.size.frame_bytes(3840, 2160) * static_cast<double>(r.reports.size())), 1e-12);
}

TEST(Simulation, TightBandwidthShedsAndStaysWithinBudget) {
  SimScenario s = bundled().scenario;
  s.bandwidth = BandwidthTrace::constant(1e6);
  const auto r = run_with(s);
  std::int64_t shed = 0;
  for (const auto& rep : r.reports) {
    shed += rep.shed_boxes;
    EXPECT_LE(rep.bytes, rep.budget_bytes);
  }
  EXPECT_GT(shed, 0);
}

TEST(Simulation, SeedOnlyMovesSeededParts) {
  SimScenario a = bundled().scenario;
  a.config.policy.solver = Solver::kBruteForce;
  SimScenario b = a;
  b.config.seed = a.config.seed + 1;
  // No loss and no random starts: the seed has nothing to act on.
  EXPECT_EQ(reports_text(run_with(a)), reports_text(run_with(b)));

  a.config.link.loss_rate = b.config.link.loss_rate = 0.3;
  const auto ra = run_with(a), rb = run_with(b);
  bool delivery_differs = false;
  for (std::size_t f = 0; f < ra.reports.size(); ++f) {
    // Frequency feedback depends on deliveries, so compare only while the
    // gating still agrees.
    bool same_gate = true;
    for (std::size_t p = 0; p < ra.reports[f].parts.size(); ++p)
      same_gate &= ra.reports[f].parts[p].offloaded == rb.reports[f].parts[p].offloaded;
    if (!same_gate) break;
    ASSERT_EQ(ra.reports[f].boxes.size(), rb.reports[f].boxes.size());
    for (std::size_t k = 0; k < ra.reports[f].boxes.size(); ++k) {
      EXPECT_EQ(ra.reports[f].boxes[k].box.rect, rb.reports[f].boxes[k].box.rect);
      EXPECT_EQ(ra.reports[f].boxes[k].box.rate, rb.reports[f].boxes[k].box.rate);
      delivery_differs |= ra.reports[f].boxes[k].delivered != rb.reports[f].boxes[k].delivered;
    }
  }
  EXPECT_TRUE(delivery_differs);
}

TEST(Simulation, F1NonDecreasingInUniformRate) {
  SimScenario s = bundled().scenario;
  s.config.policy.adaptive_frequency = false;
  double prev = -1.0;
  for (double r : {0.25, 0.5, 0.75, 1.0}) {
    s.config.policy.rate_override = r;
    const double f1 = run_with(s).summary.mean_f1;
    EXPECT_GE(f1, prev) << "rate " << r;
    prev = f1;
  }
}

TEST(Simulation, LossHurtsRecall) {
  SimScenario s = bundled().scenario;
  const auto clean = run_with(s).summary;
  s.config.link.loss_rate = 1.0;
  const auto lost = run_with(s).summary;
  EXPECT_EQ(lost.boxes_delivered, 0);
  EXPECT_EQ(lost.global.counts.tp, 0);
  EXPECT_GT(clean.global.counts.tp, 0);
}

TEST(Simulation, OutputsWritten) {
  const auto r = run_with(bundled().scenario);
  const auto dir = std::filesystem::temp_directory_path() / "roiedge_tests" / "sim_out";
  write_run_outputs(r, bundled().scenario.config, dir);
  for (const char* f : {"reports.jsonl", "summary.csv", "summary.json", "effective_config.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto csv = summary_csv(r.reports);
  EXPECT_EQ(csv.rfind("frame,bytes,f1,utility,latency_ms\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 61);
}

TEST(Simulation, GroundTruthMismatchReportedBeforeRun) {
  auto cfg = load_config(kBundled / "config.json", {"scenario.frames=10"});
  EXPECT_THROW(load_scenario(cfg), Error);
  EXPECT_THROW(load_scenario(load_config(kBundled / "config.json", {"cam.weights=\"missing.tensor\""})), Error);
}
