#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "accident/errors.hpp"
#include "accident/metrics/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace accident;
using namespace accident::metrics;

namespace {

ClipEval clip(std::string id, Label label, std::vector<double> s, std::optional<int> tau = std::nullopt, int fps = 20) {
  ClipEval c;
  c.clip_id = std::move(id);
  c.label = label;
  c.trace.s = std::move(s);
  c.accident_frame = tau;
  c.fps = fps;
  return c;
}

std::vector<std::uint8_t> frame_labels(const EvalBundle& b) {
  std::vector<std::uint8_t> y;
  for (const auto& c : b.clips) y.insert(y.end(), c.trace.s.size(), c.label == Label::positive);
  return y;
}

std::vector<double> frame_scores(const EvalBundle& b) {
  std::vector<double> s;
  for (const auto& c : b.clips) s.insert(s.end(), c.trace.s.begin(), c.trace.s.end());
  return s;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(AveragePrecision, HandExample) {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const std::vector<std::uint8_t> y{1, 1, 0, 1};
  EXPECT_NEAR(average_precision(s, y), (1.0 + 1.0 + 0.75) / 3.0, 1e-15);
  EXPECT_NEAR(average_precision(s, y), 0.916667, 1e-6);
}

TEST(AveragePrecision, PerfectRankingAndErrors) {
  const std::vector<double> s{0.1, 0.9, 0.3, 0.8};
  EXPECT_EQ(average_precision(s, std::vector<std::uint8_t>{0, 1, 0, 1}), 1.0);
  EXPECT_THROW(average_precision(s, std::vector<std::uint8_t>{0, 0, 0, 0}), UndefinedError);
  EXPECT_THROW(average_precision(s, std::vector<std::uint8_t>{0, 1}), ShapeError);
}

TEST(AveragePrecision, TiesKeepInputOrder) {
  const std::vector<double> s{0.5, 0.5};
  EXPECT_EQ(average_precision(s, std::vector<std::uint8_t>{1, 0}), 1.0);
  EXPECT_EQ(average_precision(s, std::vector<std::uint8_t>{0, 1}), 0.5);
}

TEST(AveragePrecision, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(50), t(50);
  std::vector<std::uint8_t> y(50);
  for (int i = 0; i < 50; ++i) {
    s[i] = u(rng);
    t[i] = std::exp(3.0 * s[i]) - 7.0;
    y[i] = u(rng) < 0.4;
  }
  y[0] = 1;
  EXPECT_EQ(average_precision(s, y), average_precision(t, y));
}

TEST(Tta, Examples) {
  const std::vector<double> ones(100, 1.0), zeros(100, 0.0);
  EXPECT_DOUBLE_EQ(tta(ones, 0.5, 90, 20), 4.45);
  EXPECT_EQ(persistent_crossing(ones, 0.5, 90), 1);
  EXPECT_EQ(tta(zeros, 0.1, 90, 20), 0.0);
  EXPECT_EQ(persistent_crossing(zeros, 0.1, 90), 0);
  const std::vector<double> s{0.2, 0.8, 0.4, 0.9, 0.9};
  EXPECT_EQ(persistent_crossing(s, 0.7, 5), 4);
  EXPECT_DOUBLE_EQ(tta(s, 0.7, 5, 20), 1.0 / 20.0);
  EXPECT_THROW(tta(s, 0.7, 6, 20), ValidationError);
  EXPECT_THROW(tta(s, 0.7, 0, 20), ValidationError);
}

TEST(Mtta, Examples) {
  EvalBundle b;
  b.clips = {clip("p", Label::positive, std::vector<double>(100, 1.0), 90)};
  EXPECT_NEAR(mtta(b), 4.45, 1e-12);
  b.clips = {clip("p", Label::positive, std::vector<double>(100, 0.0), 90)};
  EXPECT_EQ(mtta(b), 0.0);

  // Two step traces over a four-point grid, hand-evaluated.
  b.threshold_grid = {0.2, 0.4, 0.6, 0.8};
  b.clips = {clip("a", Label::positive, {0.1, 0.3, 0.5, 0.7, 0.9}, 5, 1),
             clip("b", Label::positive, {0.9, 0.9, 0.5, 0.5, 0.1}, 4, 2),
             clip("n", Label::negative, {0.9, 0.9, 0.9, 0.9, 0.9})};
  // a: theta 0.2 -> t=2 (3 s), 0.4 -> t=3 (2 s), 0.6 -> t=4 (1 s), 0.8 -> t=5 (0 s)
  // b: theta 0.2/0.4 -> t=1 (1.5 s), 0.6/0.8 -> never held through tau (0 s)
  EXPECT_NEAR(mtta(b), (3 + 2 + 1 + 0 + 1.5 + 1.5 + 0 + 0) / 8.0, 1e-12);
}

TEST(Mtta, BoundedOnDefaultGrid) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EvalBundle b;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> s(100);
    for (double& v : s) v = u(rng);
    b.clips.push_back(clip("p" + std::to_string(k), Label::positive, s, 90));
  }
  EXPECT_LE(mtta(b), 89.0 / 20.0);
  EXPECT_EQ(b.threshold_grid.size(), 100u);
  EXPECT_DOUBLE_EQ(b.threshold_grid.front(), 1.0 / 101.0);
  EXPECT_DOUBLE_EQ(b.threshold_grid.back(), 100.0 / 101.0);
}

TEST(TtaAtRecall, PerfectAndZeroScores) {
  EvalBundle b;
  b.clips = {clip("p", Label::positive, std::vector<double>(10, 1.0), 8, 2),
             clip("n", Label::negative, std::vector<double>(10, 0.0))};
  EXPECT_DOUBLE_EQ(tta_at_recall(b), 7.0 / 2.0);
  b.clips[0].trace.s.assign(10, 0.0);
  EXPECT_THROW(tta_at_recall(b), UndefinedError);
}

TEST(Aola, Examples) {
  EvalBundle b;
  ClipEval c = clip("p", Label::positive, {0.5, 0.5}, 2);
  c.mask = {1, 1, 1, 1, 1, 1};
  c.involvement = {1, 0, 0, 1, 1, 0};
  c.localization = heads::make_localization_trace(2, 3, {0.9, 0.1, 0.2, 0.8, 0.3, 0.4}, c.mask, 3);
  b.clips = {c};
  EXPECT_NEAR(aola(b), 5.0 / 6.0, 1e-15);
  b.clips[0].localization = heads::make_localization_trace(2, 3, {0.9, 0.1, 0.2, 0.8, 0.9, 0.4}, c.mask, 3);
  EXPECT_EQ(aola(b), 1.0);
  b.clips[0].localization = heads::make_localization_trace(2, 3, {0.1, 0.9, 0.8, 0.2, 0.1, 0.6}, c.mask, 3);
  EXPECT_EQ(aola(b), 0.0);
  b.clips[0].localization.reset();
  EXPECT_THROW(aola(b), ConfigError);
}

TEST(Aola, IgnoresMaskedSlots) {
  EvalBundle b;
  ClipEval c = clip("p", Label::positive, {0.5}, 1);
  c.mask = {1, 0, 1};
  c.involvement = {1, 0, 0};
  c.localization = heads::make_localization_trace(1, 3, {0.9, 0.9, 0.1}, c.mask, 3);
  b.clips = {c};
  EXPECT_EQ(aola(b), 1.0);
}

TEST(Oracles, ThousandRandomInstancesAgreeExactly) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const EvalBundle b = oracle::random_bundle(rng);
    const auto s = frame_scores(b);
    const auto y = frame_labels(b);
    ASSERT_LE(s.size(), 12u);
    EXPECT_NEAR(bundle_ap(b), oracle::ap(s, y), 1e-12) << trial;
    EXPECT_NEAR(mtta(b), oracle::mtta(b), 1e-12) << trial;
    const auto ref = oracle::tta_at_recall(b);
    if (ref) {
      EXPECT_NEAR(tta_at_recall(b), *ref, 1e-12) << trial;
    } else {
      EXPECT_THROW(tta_at_recall(b), UndefinedError) << trial;
    }
    EXPECT_NEAR(aola(b), oracle::aola(b), 1e-12) << trial;
  }
}

TEST(BundleAp, ClipModeUsesMaxScore) {
  EvalBundle b;
  b.clips = {clip("p", Label::positive, {0.1, 0.7}, 2), clip("n", Label::negative, {0.6, 0.65})};
  EXPECT_EQ(bundle_ap(b, ApMode::clip), 1.0);
  EXPECT_LT(bundle_ap(b, ApMode::frame), 1.0);
}

TEST(Summarize, LeavesUndefinedMetricsEmpty) {
  EvalBundle b;
  b.clips = {clip("n", Label::negative, {0.2, 0.3})};
  const Summary s = summarize(b);
  EXPECT_FALSE(s.ap.has_value());
  EXPECT_FALSE(s.aola.has_value());
}

TEST(Curves, ExportsAndIsDeterministic) {
  testutil::TempDir a("curves"), b2("curves");
  EvalBundle b;
  b.clips = {clip("p", Label::positive, {0.1, 0.7, 0.9}, 3), clip("n", Label::negative, {0.2, 0.3, 0.8})};
  export_curves(b, a.path());
  export_curves(b, b2.path());
  for (const char* f : {"scores.csv", "pr_curve.csv", "tta_sweep.csv"})
    EXPECT_EQ(read_all(a / f), read_all(b2 / f)) << f;

  std::istringstream scores(read_all(a / "scores.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(scores, line)) ++rows;
  EXPECT_EQ(rows, 1 + 6);

  std::istringstream pr(read_all(a / "pr_curve.csv"));
  std::getline(pr, line);
  double last = -1.0;
  while (std::getline(pr, line)) {
    const double r = std::stod(line.substr(0, line.find(',')));
    EXPECT_GE(r, last);
    last = r;
  }
  std::istringstream sweep(read_all(a / "tta_sweep.csv"));
  rows = 0;
  while (std::getline(sweep, line)) ++rows;
  EXPECT_EQ(rows, 1 + 100);
}
