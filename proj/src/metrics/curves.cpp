#include <cstdio>
#include <fstream>

#include "accident/errors.hpp"
#include "accident/metrics/metrics.hpp"

namespace accident::metrics {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

}  // namespace

void export_curves(const EvalBundle& bundle, const std::filesystem::path& out_dir, ApMode mode) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  {
    std::ofstream out = open(out_dir / "scores.csv");
    out << "clip_id,t,s\n";
    for (const ClipEval& c : bundle.clips) {
      for (std::size_t t = 0; t < c.trace.s.size(); ++t) out << c.clip_id << ',' << t + 1 << ',' << fmt(c.trace.s[t]) << '\n';
    }
    if (!out) throw IoError("write failed: scores.csv");
  }
  {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const ClipEval& c : bundle.clips) {
      const std::uint8_t y = c.label == Label::positive ? 1 : 0;
      if (mode == ApMode::frame) {
        scores.insert(scores.end(), c.trace.s.begin(), c.trace.s.end());
        labels.insert(labels.end(), c.trace.s.size(), y);
      } else {
        double m = 0.0;
        for (double v : c.trace.s) m = std::max(m, v);
        scores.push_back(m);
        labels.push_back(y);
      }
    }
    std::ofstream out = open(out_dir / "pr_curve.csv");
    out << "recall,precision\n";
    for (const PrPoint& p : precision_recall_curve(scores, labels)) out << fmt(p.recall) << ',' << fmt(p.precision) << '\n';
    if (!out) throw IoError("write failed: pr_curve.csv");
  }
  {
    std::ofstream out = open(out_dir / "tta_sweep.csv");
    out << "theta,mean_tta\n";
    bool has_positive = false;
    for (const ClipEval& c : bundle.clips) has_positive = has_positive || c.label == Label::positive;
    if (has_positive) {
      for (double theta : bundle.threshold_grid) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const ClipEval& c : bundle.clips) {
          if (c.label != Label::positive || !c.accident_frame) continue;
          sum += tta(c.trace.s, theta, *c.accident_frame, c.fps);
          ++n;
        }
        out << fmt(theta) << ',' << fmt(n == 0 ? 0.0 : sum / static_cast<double>(n)) << '\n';
      }
    }
    if (!out) throw IoError("write failed: tta_sweep.csv");
  }
}

}  // namespace accident::metrics
