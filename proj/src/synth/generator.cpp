#include "accident/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "accident/errors.hpp"

namespace accident::synth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Agent {
  double x0, y0;    // position at frame 1
  double vx, vy;    // world units per second
  int stop_frame;   // frames after this keep the position (0 = never stops)
};

void position_at(const Agent& a, int frame, int fps, double& x, double& y) {
  const int f = a.stop_frame > 0 ? std::min(frame, a.stop_frame) : frame;
  const double dt = static_cast<double>(f - 1) / fps;
  x = a.x0 + a.vx * dt;
  y = a.y0 + a.vy * dt;
}

// Minimum distance over the clip and one further clip length.
double min_distance(const Agent& a, const Agent& b, const ScenarioParams& p) {
  double best = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= 2 * p.frames; ++t) {
    double ax, ay, bx, by;
    position_at(a, t, p.fps, ax, ay);
    position_at(b, t, p.fps, bx, by);
    best = std::min(best, std::hypot(ax - bx, ay - by));
  }
  return best;
}

constexpr int kAttemptsPerAgent = 2000;
constexpr int kSceneRestarts = 50;

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xD1B54A32D192ED03ull));
}

void validate(const ScenarioParams& p) {
  if (p.num_agents < 2) throw ValidationError("num_agents", "must be >= 2");
  if (static_cast<std::size_t>(p.num_agents) > p.max_objects)
    throw ValidationError("num_agents", "must not exceed max_objects");
  if (p.frames < 2) throw ValidationError("frames", "must be >= 2");
  if (p.fps <= 0) throw ValidationError("fps", "must be positive");
  if (p.collision && (p.accident_frame < 2 || p.accident_frame > p.frames))
    throw ValidationError("accident_frame", "must lie in [2, T]");
  if (!(p.world_size > 0.0)) throw ValidationError("world_size", "must be positive");
  if (!(p.speed_min > 0.0) || !(p.speed_max >= p.speed_min))
    throw ValidationError("speed_range", "need 0 < min <= max");
  if (!(p.noise_sigma >= 0.0)) throw ValidationError("noise_sigma", "must be >= 0");
  if (p.frame_dim < 1 || p.object_dim < 1) throw ValidationError("feature_dims", "must be >= 1");
  if (!(p.box_half_size > 0.0)) throw ValidationError("box_half_size", "must be positive");
}

double Trajectories::distance(std::size_t t, std::size_t a, std::size_t b) const {
  const double* pa = &position[(t * agents + a) * 2];
  const double* pb = &position[(t * agents + b) * 2];
  return std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
}

Trajectories simulate(std::uint64_t seed, const ScenarioParams& p) {
  validate(p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = p.world_size;
  const std::size_t n = static_cast<std::size_t>(p.num_agents);

  auto random_velocity = [&](double heading) {
    const double speed = p.speed_min + (p.speed_max - p.speed_min) * unit(rng);
    return std::pair{speed * std::cos(heading), speed * std::sin(heading)};
  };

  for (int restart = 0; restart < kSceneRestarts; ++restart) {
    std::vector<Agent> agents(n);
    std::vector<bool> placed(n, false);
    std::optional<std::pair<std::size_t, std::size_t>> pair;

    if (p.collision) {
      std::size_t a = static_cast<std::size_t>(unit(rng) * n) % n;
      std::size_t b = static_cast<std::size_t>(unit(rng) * (n - 1)) % (n - 1);
      if (b >= a) ++b;
      pair = std::pair{std::min(a, b), std::max(a, b)};
      const double cx = w * (0.35 + 0.3 * unit(rng));
      const double cy = w * (0.35 + 0.3 * unit(rng));
      const double ha = 2.0 * std::numbers::pi * unit(rng);
      const double hb = ha + std::numbers::pi * (1.0 / 3.0 + (4.0 / 3.0) * unit(rng));
      const double back = static_cast<double>(p.accident_frame - 1) / p.fps;
      for (auto [idx, heading] : {std::pair{a, ha}, std::pair{b, hb}}) {
        auto [vx, vy] = random_velocity(heading);
        agents[idx] = Agent{cx - vx * back, cy - vy * back, vx, vy, p.accident_frame};
        placed[idx] = true;
      }
    }

    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (placed[i]) continue;
      bool found = false;
      for (int attempt = 0; attempt < kAttemptsPerAgent && !found; ++attempt) {
        auto [vx, vy] = random_velocity(2.0 * std::numbers::pi * unit(rng));
        Agent cand{w * (0.05 + 0.9 * unit(rng)), w * (0.05 + 0.9 * unit(rng)), vx, vy, 0};
        found = true;
        for (std::size_t j = 0; j < n && found; ++j) {
          if (placed[j] && min_distance(cand, agents[j], p) <= p.clearance()) found = false;
        }
        if (found) {
          agents[i] = cand;
          placed[i] = true;
        }
      }
      ok = found;
    }
    if (!ok) continue;

    Trajectories tr;
    tr.frames = static_cast<std::size_t>(p.frames);
    tr.agents = n;
    tr.position.resize(tr.frames * n * 2);
    tr.velocity.resize(tr.frames * n * 2);
    tr.colliding_pair = pair;
    for (int t = 1; t <= p.frames; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t o = ((t - 1) * n + i) * 2;
        position_at(agents[i], t, p.fps, tr.position[o], tr.position[o + 1]);
        const bool stopped = agents[i].stop_frame > 0 && t >= agents[i].stop_frame;
        tr.velocity[o] = stopped ? 0.0 : agents[i].vx;
        tr.velocity[o + 1] = stopped ? 0.0 : agents[i].vy;
      }
    }
    return tr;
  }
  throw ValidationError("num_agents", "could not place non-intersecting agents; scene too crowded");
}

ClipPack generate_scenario(std::uint64_t seed, const ScenarioParams& p) {
  const Trajectories tr = simulate(seed, p);
  const std::size_t frames = tr.frames, n = tr.agents;
  const double w = p.world_size;
  const double horizon = static_cast<double>(p.frames) / p.fps;
  const double band = p.proximity_band();
  // x, y, vx, vy, nearest distance, time until some agent is predicted inside
  // the proximity band (horizon when none is).
  constexpr std::size_t kState = 6;

  // Observation jitter uses its own stream so the trajectory is independent of it.
  std::mt19937_64 noise_rng(derive_seed(seed, 0x6E6F697365ull));
  std::normal_distribution<double> jitter(0.0, 1.0);

  std::mt19937_64 embed_rng(p.embed_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> proj_obj(p.object_dim * kState), proj_frame(p.frame_dim * kState), proj_gmin(p.frame_dim);
  for (double& v : proj_obj) v = gauss(embed_rng);
  for (double& v : proj_frame) v = gauss(embed_rng);
  for (double& v : proj_gmin) v = gauss(embed_rng);

  ClipPack c;
  c.clip_id = std::string(p.collision ? "pos-" : "neg-") + std::to_string(seed);
  c.fps = p.fps;
  c.frames = frames;
  c.objects = n;
  c.frame_dim = p.frame_dim;
  c.object_dim = p.object_dim;
  c.label = p.collision ? Label::positive : Label::negative;
  if (p.collision) c.accident_frame = p.accident_frame;
  c.frame_features.assign(frames * p.frame_dim, 0.0f);
  c.object_features.assign(frames * n * p.object_dim, 0.0f);
  c.boxes.assign(frames * n * 4, 0.0f);
  c.object_mask.assign(frames * n, 0);
  c.involvement.assign(frames * n, 0);

  std::vector<double> obs(n * 2), state(n * kState);
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<bool> in_view(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double* pos = &tr.position[(t * n + i) * 2];
      obs[i * 2] = pos[0] + p.noise_sigma * jitter(noise_rng);
      obs[i * 2 + 1] = pos[1] + p.noise_sigma * jitter(noise_rng);
      in_view[i] = pos[0] >= 0.0 && pos[0] <= w && pos[1] >= 0.0 && pos[1] <= w;
    }

    double gmin = w;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_view[i]) continue;
      const double* vel = &tr.velocity[(t * n + i) * 2];
      double nearest = w, ttca = horizon;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || !in_view[j]) continue;
        const double dx = obs[j * 2] - obs[i * 2], dy = obs[j * 2 + 1] - obs[i * 2 + 1];
        nearest = std::min(nearest, std::hypot(dx, dy));
        const double* vj = &tr.velocity[(t * n + j) * 2];
        const double rvx = vj[0] - vel[0], rvy = vj[1] - vel[1];
        const double rv2 = rvx * rvx + rvy * rvy;
        const double tc = rv2 < 1e-12 ? 0.0 : std::max(0.0, -(dx * rvx + dy * rvy) / rv2);
        const double miss = std::hypot(dx + rvx * tc, dy + rvy * tc);
        if (miss < band) ttca = std::min(ttca, tc);
      }
      gmin = std::min(gmin, nearest);
      double* s = &state[i * kState];
      s[0] = obs[i * 2] / w;
      s[1] = obs[i * 2 + 1] / w;
      s[2] = vel[0] / p.speed_max;
      s[3] = vel[1] / p.speed_max;
      s[4] = std::min(nearest, w) / w;
      s[5] = ttca / horizon;
    }

    std::vector<double> mean_state(kState, 0.0);
    std::size_t occupied = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_view[i]) continue;
      ++occupied;
      const std::size_t slot = t * n + i;
      c.object_mask[slot] = 1;
      const double* s = &state[i * kState];
      for (std::size_t k = 0; k < kState; ++k) mean_state[k] += s[k];
      for (std::size_t d = 0; d < p.object_dim; ++d) {
        double v = 0.0;
        for (std::size_t k = 0; k < kState; ++k) v += proj_obj[d * kState + k] * s[k];
        c.object_features[slot * p.object_dim + d] = static_cast<float>(v);
      }
      const double h = p.box_half_size;
      const double cx = obs[i * 2] / w, cy = obs[i * 2 + 1] / w;
      float* b = &c.boxes[slot * 4];
      b[0] = static_cast<float>(std::clamp(cx - h, 0.0, 1.0));
      b[1] = static_cast<float>(std::clamp(cy - h, 0.0, 1.0));
      b[2] = static_cast<float>(std::clamp(cx + h, 0.0, 1.0));
      b[3] = static_cast<float>(std::clamp(cy + h, 0.0, 1.0));
    }
    if (occupied > 0)
      for (double& v : mean_state) v /= static_cast<double>(occupied);
    for (std::size_t d = 0; d < p.frame_dim; ++d) {
      double v = proj_gmin[d] * (gmin / w);
      for (std::size_t k = 0; k < kState; ++k) v += proj_frame[d * kState + k] * mean_state[k];
      c.frame_features[t * p.frame_dim + d] = static_cast<float>(v);
    }

    if (tr.colliding_pair) {
      const auto [a, b] = *tr.colliding_pair;
      if (tr.distance(t, a, b) < p.proximity_band()) {
        if (in_view[a]) c.involvement[t * n + a] = 1;
        if (in_view[b]) c.involvement[t * n + b] = 1;
      }
    }
  }
  validate(c, p.max_objects);
  return c;
}

DatasetManifest generate_dataset(std::uint64_t seed, std::size_t count_pos, std::size_t count_neg,
                                 ScenarioParams params, const std::filesystem::path& out_dir) {
  validate(params);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.profile = Profile::synthetic;
  manifest.base_dir = out_dir;

  for (int positive = 1; positive >= 0; --positive) {
    const std::size_t count = positive ? count_pos : count_neg;
    // Stratified split: a seeded permutation of this label's indices; the
    // first round(20%) go to test.
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    std::mt19937_64 split_rng(derive_seed(seed, 0x53504C4954ull, static_cast<std::uint64_t>(positive)));
    for (std::size_t i = count; i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(split_rng)]);
    }
    const auto n_test = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(count)));
    std::vector<bool> is_test(count, false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

    params.collision = positive != 0;
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t clip_seed = derive_seed(seed, static_cast<std::uint64_t>(positive), i);
      ClipPack clip = generate_scenario(clip_seed, params);
      char name[32];
      std::snprintf(name, sizeof name, "%s_%04zu", positive ? "pos" : "neg", i);
      clip.clip_id = name;
      const std::string file = std::string(name) + ".clip";
      write_clip_pack(clip, out_dir / file);
      manifest.entries.push_back(
          {file, positive ? Label::positive : Label::negative, is_test[i] ? Split::test : Split::train});
    }
  }
  write_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace accident::synth
