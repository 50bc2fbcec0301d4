// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. All tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "accident/alerts/client.hpp"
#include "accident/alerts/prompt.hpp"
#include "accident/cli/commands.hpp"
#include "accident/dataset/manifest.hpp"
#include "accident/errors.hpp"
#include "accident/fusion/dual_vision.hpp"
#include "accident/fusion/routing.hpp"
#include "accident/heads/anticipation.hpp"
#include "accident/heads/localization.hpp"
#include "accident/model.hpp"
#include "accident/training/grad_check.hpp"
#include "accident/training/losses.hpp"
#include "../oracles.hpp"
#include "../test_util.hpp"

namespace fs = std::filesystem;
using namespace accident;
using nlohmann::json;

namespace {

// Pinned tolerances and targets.
constexpr double kLossTol = 1e-9;
constexpr double kGradTol = 1e-4;
constexpr double kOracleTol = 1e-12;
constexpr int kOracleTrials = 1000;
constexpr double kMaskSumTol = 1e-6;
constexpr double kMinAp = 0.90;
constexpr double kMinMtta = 1.0;
constexpr double kMinAola = 0.85;
constexpr double kMaxSweepDrop = 0.08;
constexpr double kMinPositiveAlertRate = 0.90;
constexpr int kMaxNegativeAlerts = 0;

constexpr double kLimitLoss = 1.0;
constexpr double kLimitGrad = 60.0;
constexpr double kLimitOracle = 60.0;
constexpr double kLimitSchedule = 1.0;
constexpr double kLimitMechanism = 10.0;
constexpr double kLimitEndToEnd = 600.0;

// Synthetic end-to-end run: 150 + 150 clips, 80/20 split gives 240 / 60.
// Phase 1 runs on the built-in defaults (10 epochs); phase 2 raises the
// learning rate.
constexpr const char* kDataSeed = "1";
constexpr const char* kTrainSeed = "1";
constexpr const char* kPhase1Config = "{}";
constexpr const char* kPhase2Config = R"({"train":{"learning_rate":3e-3}})";

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      if (!ok) detail << "; ";
      detail << what;
      ok = false;
    }
  }
};

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds, double limit) {
  const bool in_time = seconds < limit;
  const bool pass = ok && in_time;
  if (!pass) ++failures;
  std::printf("criterion %d %-22s %s  (%.2fs, limit %.0fs)  %s%s\n", id, name.c_str(), pass ? "PASS" : "FAIL",
              seconds, limit, detail.c_str(), in_time ? "" : " [over time limit]");
  std::fflush(stdout);
}

template <class F>
double timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string log;
};

CliResult cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "accident");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, log;
  CliResult r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, log);
  r.out = out.str();
  r.log = log.str();
  return r;
}

// ---------------------------------------------------------------------------

void criterion_loss_values() {
  Check c;
  const double seconds = timed([&] {
    using namespace training;
    c.expect(std::abs(score_weight(90, 90, 20.0) - 1.0) <= kLossTol, "weight at tau");
    c.expect(std::abs(score_weight(70, 90, 20.0) - std::exp(-1.0)) <= kLossTol, "weight 20 frames early");
    c.expect(std::abs(score_weight(70, 90, 20.0) - 0.367879441171) <= kLossTol, "weight vs 0.367879441171");
    c.expect(std::abs(score_weight(95, 90, 20.0) - 1.0) <= kLossTol, "weight clamp after tau");

    ad::Tape t(false);
    const double ls = score_loss(t.constant(Matrix(2, 1, {0.5, 0.5})), {Label::positive, 2}, 20.0).scalar();
    const double ls_ref = 0.5 * (std::exp(-1.0 / 20.0) + 1.0) * std::log(2.0);
    c.expect(std::abs(ls - ls_ref) <= kLossTol, "score loss " + fmt(ls, 12));
    c.expect(std::abs(ls - 0.676245) < 5e-7, "score loss vs 0.676245");

    const std::vector<double> la{0.9, 0.2};
    const std::vector<std::uint8_t> y{1, 0};
    const double a = anticipation_loss(la, y);
    c.expect(std::abs(a - (-std::log(0.9) - std::log(0.8)) / 2.0) <= kLossTol, "anticipation loss " + fmt(a, 12));
    c.expect(std::abs(a - 0.164252) < 5e-7, "anticipation loss vs 0.164252");

    const std::vector<LocalizationSample> batch{{2, {0.9, 0.1}, {1, 0}, {1, 1}}};
    const double lm = localization_loss(batch);
    c.expect(std::abs(lm + std::log(0.9)) <= kLossTol, "localization loss " + fmt(lm, 12));
    c.expect(std::abs(lm - 0.105361) < 5e-7, "localization loss vs 0.105361");
  });
  report(1, "analytic-loss-values", c.ok, c.detail.str(), seconds, kLimitLoss);
}

void criterion_grad_check() {
  Check c;
  const double seconds = timed([&] {
    ModelConfig cfg;
    cfg.frame_dim = 4;
    cfg.object_dim = 4;
    cfg.routing_dim = 4;
    cfg.fused_dim = 4;
    cfg.qk_dim = 2;
    cfg.anticipation_hidden = 3;
    cfg.anticipation_mlp = 3;
    cfg.branch_channels = 2;
    cfg.branch_kernels = {2, 3};
    cfg.proj_hidden = 3;
    cfg.d_k = 2;
    cfg.localization_hidden = 3;
    cfg.noise = fusion::NoiseMode::none;
    AccidentModel model(cfg);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 0.5);
    for (std::size_t i = 0; i < model.params().size(); ++i) {
      ad::Parameter& p = model.params()[i];
      if (p.name.ends_with("bias") || p.name.ends_with("gamma") || p.name.ends_with("beta"))
        for (double& v : p.value.values()) v = g(rng);
    }

    const std::size_t T = 6, N = 3;
    ClipTensors clip;
    clip.frames = T;
    clip.objects = N;
    clip.frame_features = testutil::random_matrix(T, 4, rng);
    clip.object_features = testutil::random_matrix(T * N, 4, rng);
    clip.mask = {1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1};
    const std::vector<std::uint8_t> involvement{1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0};

    ForwardOptions opt;
    opt.n_iter = 2;
    const auto r = training::grad_check(model.params(), [&](ad::Tape& t) {
      const ForwardResult f = model.forward(t, clip, opt);
      ad::Var loss = training::score_loss(f.scores, {Label::positive, 5}, 20.0);
      loss = ad::add(loss, ad::scale(training::anticipation_loss(f.clip, Label::positive), 10.0));
      return ad::add(loss, *training::localization_loss(f.obj_scores, N, involvement, clip.mask));
    });
    c.expect(r.checked == model.params().scalar_count(), "not every scalar checked");
    c.expect(r.max_rel_error < kGradTol, "worst " + r.worst_parameter);
    c.detail << (c.ok ? "" : "; ") << "max rel err " << fmt(r.max_rel_error, 3) << " over " << r.checked
             << " scalars";
  });
  report(2, "gradient-check", c.ok, c.detail.str(), seconds, kLimitGrad);
}

void criterion_metric_oracles() {
  Check c;
  const double seconds = timed([&] {
    std::mt19937_64 rng(3);
    double worst = 0.0;
    int undefined_mismatch = 0;
    for (int trial = 0; trial < kOracleTrials; ++trial) {
      const metrics::EvalBundle b = oracle::random_bundle(rng);
      std::vector<double> s;
      std::vector<std::uint8_t> y;
      for (const auto& clip : b.clips) {
        s.insert(s.end(), clip.trace.s.begin(), clip.trace.s.end());
        y.insert(y.end(), clip.trace.s.size(), clip.label == Label::positive);
      }
      worst = std::max(worst, std::abs(metrics::bundle_ap(b) - oracle::ap(s, y)));
      worst = std::max(worst, std::abs(metrics::mtta(b) - oracle::mtta(b)));
      worst = std::max(worst, std::abs(metrics::aola(b) - oracle::aola(b)));
      const auto ref = oracle::tta_at_recall(b);
      try {
        const double v = metrics::tta_at_recall(b);
        if (ref)
          worst = std::max(worst, std::abs(v - *ref));
        else
          ++undefined_mismatch;
      } catch (const UndefinedError&) {
        if (ref) ++undefined_mismatch;
      }
    }
    c.expect(worst <= kOracleTol, "max deviation " + fmt(worst, 3));
    c.expect(undefined_mismatch == 0, std::to_string(undefined_mismatch) + " TTA@R80 definedness mismatches");
    if (c.ok) c.detail << kOracleTrials << " trials, max deviation " << fmt(worst, 3);
  });
  report(3, "metric-oracles", c.ok, c.detail.str(), seconds, kLimitOracle);
}

void criterion_noise_schedule() {
  Check c;
  const double seconds = timed([&] {
    const std::vector<double> b = fusion::noise_betas(1000);
    c.expect(std::abs(b.front() - 1e-4) <= 1e-15, "first beta " + fmt(b.front(), 17));
    c.expect(std::abs(b.back() - 0.02) <= 1e-15, "last beta " + fmt(b.back(), 17));
    for (int n = 1; n <= 32; ++n) {
      const std::vector<double> a = fusion::noise_schedule(n);
      const std::vector<double> ab = fusion::alpha_bar(a);
      const bool in_range = std::all_of(a.begin(), a.end(), [](double v) { return v > 0.0 && v < 1.0; });
      c.expect(in_range && a.size() == static_cast<std::size_t>(n), "alpha outside (0,1) at n_iter " + std::to_string(n));
      for (std::size_t i = 1; i < ab.size(); ++i)
        c.expect(ab[i] < ab[i - 1], "alpha_bar not decreasing at n_iter " + std::to_string(n));
    }
  });
  report(4, "noise-schedule", c.ok, c.detail.str(), seconds, kLimitSchedule);
}

void criterion_mechanisms() {
  Check c;
  const double seconds = timed([&] {
    std::mt19937_64 rng(11);
    {
      ad::ParameterSet ps;
      fusion::DualVisionAttention att(ps, "dv", "stage1", {8, 4, 2}, rng);
      const Matrix x = testutil::random_matrix(10, 8, rng);
      ad::Tape t(false);
      const Matrix y = att(t, t.constant(x)).value();
      bool exact = att.gamma().value[0] == 0.0 && att.beta().value[0] == 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) exact = exact && y[i] == 2.0 * x[i];
      c.expect(exact, "dual attention at zero gates is not 2x input");
    }
    {
      ad::ParameterSet ps;
      fusion::RoutingConfig cfg;
      cfg.object_dim = 3;
      cfg.out_dim = 4;
      cfg.down_factor = 1;
      fusion::DynamicObjectAttention route(ps, "route", "stage1", cfg, rng);
      fusion::RoutingOptions opt;
      opt.n_iter = 0;
      opt.initial_weights = testutil::random_matrix(6, 4, rng);
      ad::Tape t(false);
      const Matrix v = testutil::random_matrix(6, 3, rng);
      c.expect(route(t, t.constant(v), 3, std::vector<std::uint8_t>(6, 1), opt).value() == *opt.initial_weights,
               "routing with zero iterations is not the identity");
    }
    {
      c.expect(fusion::squash({0.0, 0.0, 0.0}) == std::vector<double>(3, 0.0), "squash(0) != 0");
      const std::vector<double> u = fusion::squash({0.6, 0.8});
      c.expect(std::abs(std::hypot(u[0], u[1]) - 0.5) <= 1e-15, "squash of a unit vector");
      std::normal_distribution<double> g(0.0, 10.0);
      bool below_one = true;
      for (int i = 0; i < 1000; ++i) {
        const std::vector<double> s = fusion::squash({g(rng), g(rng), g(rng)});
        below_one = below_one && std::hypot(s[0], s[1], s[2]) < 1.0;
      }
      c.expect(below_one, "squash norm reached 1");
    }
    {
      ad::ParameterSet ps;
      heads::LocalizationConfig cfg;
      cfg.vision_dim = 4;
      cfg.object_dim = 3;
      cfg.fused_dim = 5;
      cfg.proj_hidden = 4;
      cfg.d_k = 2;
      cfg.hidden = 3;
      cfg.top_k = 2;
      heads::LocalizationHead head(ps, "loc", "localization", cfg, rng);
      const std::size_t T = 5, N = 4;
      std::vector<std::uint8_t> mask(T * N, 1);
      mask[1] = mask[6] = mask[7] = mask[19] = 0;
      ad::Tape t(false);
      const auto out = head(t, t.constant(testutil::random_matrix(T, 4, rng)),
                            t.constant(testutil::random_matrix(T * N, 3, rng)),
                            t.constant(testutil::random_matrix(T, 5, rng)), N, mask);
      const Matrix& a = out.attention.value();
      double worst = 0.0;
      bool masked_zero = true;
      for (std::size_t f = 0; f < T; ++f) {
        double sum = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
          sum += a(f, n);
          masked_zero = masked_zero && (mask[f * N + n] || a(f, n) == 0.0);
        }
        worst = std::max(worst, std::abs(sum - 1.0));
      }
      c.expect(worst <= kMaskSumTol, "attention row sum off by " + fmt(worst, 3));
      c.expect(masked_zero, "masked slot received attention");
    }
    {
      ad::ParameterSet ps;
      heads::AnticipationConfig cfg;
      cfg.in_dim = 5;
      cfg.hidden = 4;
      cfg.mlp_dim = 4;
      cfg.channels = 3;
      cfg.branch_kernels = {2, 3};
      heads::AnticipationHead head(ps, "ant", "anticipation", cfg, rng);
      Matrix x = testutil::random_matrix(12, 5, rng);
      ad::Tape t1(false);
      const heads::ScoreTrace before = heads::to_trace(head(t1, t1.constant(x)));
      for (std::size_t d = 0; d < 5; ++d) x(7, d) += 5.0;
      ad::Tape t2(false);
      const heads::ScoreTrace after = heads::to_trace(head(t2, t2.constant(x)));
      bool causal = true;
      for (std::size_t f = 0; f < 7; ++f) causal = causal && before.s[f] == after.s[f];
      c.expect(causal, "earlier scores moved after perturbing a later frame");
      c.expect(before.s[7] != after.s[7], "perturbed frame did not change its own score");
    }
  });
  report(5, "mechanism-identities", c.ok, c.detail.str(), seconds, kLimitMechanism);
}

// ---------------------------------------------------------------------------
// End-to-end criteria share one synthetic dataset and one trained model.

struct Workspace {
  fs::path root;
  fs::path config;  // phase 1, also used for evaluation and alerts
  fs::path config2;
  fs::path manifest;
  fs::path run;
  std::string phase1_ckpt;
  std::string phase2_ckpt;
  std::string eval1_json;
  std::string history1;
  bool ready = false;
};

std::vector<std::string> train_args(const Workspace& w, const fs::path& out, int phase, const std::string& ckpt = {}) {
  const fs::path& config = phase == 1 ? w.config : w.config2;
  std::vector<std::string> a{"train", "--config", config.string(), "--seed", kTrainSeed, "--manifest",
                             w.manifest.string(), "--phase", std::to_string(phase), "--out", out.string()};
  if (!ckpt.empty()) {
    a.push_back("--checkpoint");
    a.push_back(ckpt);
  }
  return a;
}

std::vector<std::string> eval_args(const Workspace& w, const fs::path& out, const std::string& ckpt) {
  return {"eval", "--config", w.config.string(), "--manifest", w.manifest.string(), "--checkpoint", ckpt,
          "--out", out.string()};
}

void criterion_end_to_end(Workspace& w) {
  Check c;
  const double seconds = timed([&] {
    std::ofstream(w.config) << kPhase1Config;
    std::ofstream(w.config2) << kPhase2Config;
    const CliResult synth = cli_run({"synth", "--config", w.config.string(), "--seed", kDataSeed, "--positives", "150",
                                     "--negatives", "150", "--out", (w.root / "data").string()});
    if (synth.code != 0) {
      c.expect(false, "synth failed: " + synth.log);
      return;
    }
    w.manifest = json::parse(synth.out).at("manifest").get<std::string>();
    const DatasetManifest m = read_manifest(w.manifest, Profile::synthetic);
    const auto train = m.split(Split::train).size(), test = m.split(Split::test).size();
    c.expect(train == 240 && test == 60, "split " + std::to_string(train) + "/" + std::to_string(test));

    const CliResult p1 = cli_run(train_args(w, w.run, 1));
    if (p1.code != 0) {
      c.expect(false, "phase 1 failed: " + p1.log);
      return;
    }
    const json j1 = json::parse(p1.out);
    w.phase1_ckpt = j1.at("checkpoint").get<std::string>();
    w.history1 = read_file(j1.at("history").get<std::string>());
    const CliResult e1 = cli_run(eval_args(w, w.run, w.phase1_ckpt));
    if (e1.code != 0) {
      c.expect(false, "phase 1 eval failed: " + e1.log);
      return;
    }
    w.eval1_json = e1.out;
    const json m1 = json::parse(e1.out);
    const double ap = m1.at("AP").is_number() ? m1.at("AP").get<double>() : 0.0;
    const double mtta = m1.at("mTTA").is_number() ? m1.at("mTTA").get<double>() : 0.0;

    const fs::path run2 = w.run / "phase2";
    const CliResult p2 = cli_run(train_args(w, run2, 2, w.phase1_ckpt));
    if (p2.code != 0) {
      c.expect(false, "phase 2 failed: " + p2.log);
      return;
    }
    w.phase2_ckpt = json::parse(p2.out).at("checkpoint").get<std::string>();
    const CliResult e2 = cli_run(eval_args(w, run2, w.phase2_ckpt));
    const json m2 = json::parse(e2.out);
    const double aola = m2.at("AOLA").is_number() ? m2.at("AOLA").get<double>() : 0.0;
    w.ready = true;

    c.expect(ap >= kMinAp, "AP below " + fmt(kMinAp));
    c.expect(mtta >= kMinMtta, "mTTA below " + fmt(kMinMtta));
    c.expect(aola >= kMinAola, "AOLA below " + fmt(kMinAola));
    c.detail << (c.ok ? "" : "; ") << "AP " << fmt(ap, 4) << ", mTTA " << fmt(mtta, 4) << " s, AOLA " << fmt(aola, 4);
  });
  report(6, "end-to-end-synthetic", c.ok, c.detail.str(), seconds, kLimitEndToEnd);
}

void criterion_iteration_sweep(const Workspace& w) {
  Check c;
  const double seconds = timed([&] {
    if (!w.ready) {
      c.expect(false, "no trained model");
      return;
    }
    std::vector<std::string> args = eval_args(w, w.run / "sweep", w.phase1_ckpt);
    args.push_back("--sweep-iters");
    const CliResult r = cli_run(args);
    if (r.code != 0) {
      c.expect(false, "eval failed: " + r.log);
      return;
    }
    std::istringstream csv(read_file(w.run / "sweep" / "iter_sweep.csv"));
    std::string line;
    std::getline(csv, line);
    std::vector<double> ap;
    while (std::getline(csv, line)) {
      const auto a = line.find(','), b = line.find(',', a + 1);
      ap.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    }
    c.expect(ap.size() == 6, "expected 6 sweep rows");
    if (ap.size() != 6) return;
    for (std::size_t n = 1; n < ap.size(); ++n)
      c.expect(ap[n - 1] <= ap[n], "AP rises from " + std::to_string(n + 1) + " to " + std::to_string(n) + " iterations");
    const double drop = ap.back() - ap.front();
    c.expect(drop <= kMaxSweepDrop, "drop 6->1 is " + fmt(drop, 4));
    c.detail << (c.ok ? "" : "; ") << "AP by n_iter 1..6:";
    for (double v : ap) c.detail << ' ' << fmt(v, 4);
  });
  report(7, "iteration-ablation", c.ok, c.detail.str(), seconds, kLimitEndToEnd);
}

void criterion_determinism(const Workspace& w) {
  Check c;
  const double seconds = timed([&] {
    if (!w.ready) {
      c.expect(false, "no trained model");
      return;
    }
    const fs::path again = w.root / "repeat";
    const CliResult p1 = cli_run(train_args(w, again, 1));
    if (p1.code != 0) {
      c.expect(false, "repeat training failed: " + p1.log);
      return;
    }
    const json j = json::parse(p1.out);
    const CliResult e1 = cli_run(eval_args(w, again, j.at("checkpoint").get<std::string>()));
    c.expect(read_file(j.at("history").get<std::string>()) == w.history1, "history CSV differs");
    c.expect(e1.out == w.eval1_json, "metric JSON differs");
    c.expect(read_file(j.at("checkpoint").get<std::string>()) == read_file(w.phase1_ckpt), "checkpoint differs");
    if (c.ok) c.detail << "history, metrics and checkpoint byte-identical";
  });
  report(8, "determinism", c.ok, c.detail.str(), seconds, kLimitEndToEnd);
}

void criterion_alerts(const Workspace& w) {
  Check c;
  const double seconds = timed([&] {
    alerts::SceneAnnotation a;
    a.clip_id = "pos_0001";
    a.current_frame = 72;
    a.accident_probability = 0.87;
    a.predicted_tta_seconds = 1.5;
    a.threshold_used = 0.5;
    a.involved_objects = {{2, {0.1, 0.2, 0.3, 0.4}, 0.91, "car"}};
    const std::string expected =
        "Clip: pos_0001\n"
        "Frame: 72\n"
        "Alert threshold: 0.50\n"
        "Accident probability: 0.87\n"
        "Predicted time to accident: 1.50 s\n"
        "Involved objects:\n"
        "- slot 2, score 0.91, box [0.100, 0.200, 0.300, 0.400], category car\n";
    const alerts::PromptBundle first = alerts::build_prompt(a);
    c.expect(first.user_text == expected, "prompt snapshot changed");
    c.expect(alerts::build_prompt(a) == first, "prompt not stable across builds");
    c.expect(alerts::mock_alert(first) == "Warning: possible accident in 1.50s involving object 2 (p=0.87).",
             "mock alert text changed");

    if (!w.ready) {
      c.expect(false, "no trained model");
      return;
    }
    const DatasetManifest m = read_manifest(w.manifest, Profile::synthetic);
    int pos = 0, pos_alerts = 0, neg = 0, neg_alerts = 0;
    alerts::MockClient mock;
    for (const ManifestEntry& e : m.split(Split::test)) {
      cli::Options opt;
      opt.config_path = w.config.string();
      opt.checkpoint = w.phase2_ckpt;
      opt.clip = m.resolve(e).string();
      std::ostringstream out, log;
      if (cli::cmd_alert(opt, out, log, &mock) != 0) {
        c.expect(false, "alert failed on " + opt.clip);
        return;
      }
      const bool alerted = out.str().starts_with("Warning: possible accident");
      if (e.label == Label::positive) {
        ++pos;
        pos_alerts += alerted;
      } else {
        ++neg;
        neg_alerts += alerted;
      }
    }
    const double rate = pos == 0 ? 0.0 : static_cast<double>(pos_alerts) / pos;
    c.expect(rate >= kMinPositiveAlertRate, "positive alert rate below " + fmt(kMinPositiveAlertRate));
    c.expect(neg_alerts <= kMaxNegativeAlerts, "alerts on negative clips");
    c.detail << (c.ok ? "" : "; ") << "alerts on " << pos_alerts << "/" << pos << " positives, " << neg_alerts << "/"
             << neg << " negatives";
  });
  report(9, "alerts", c.ok, c.detail.str(), seconds, kLimitEndToEnd);
}

}  // namespace

int main() {
  criterion_loss_values();
  criterion_grad_check();
  criterion_metric_oracles();
  criterion_noise_schedule();
  criterion_mechanisms();

  Workspace w;
  w.root = fs::temp_directory_path() / ("accident_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(w.root);
  fs::create_directories(w.root);
  w.config = w.root / "phase1.json";
  w.config2 = w.root / "phase2.json";
  w.run = w.root / "run";
  criterion_end_to_end(w);
  criterion_iteration_sweep(w);
  criterion_determinism(w);
  criterion_alerts(w);
  fs::remove_all(w.root);

  std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
