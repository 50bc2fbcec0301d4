#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "accident/dataset/clip_pack.hpp"
#include "accident/dataset/manifest.hpp"

namespace accident::synth {

/// Kinematic scene description. Lengths are in world units, speeds in world
/// units per second, frames 1-indexed.
struct ScenarioParams {
  int num_agents = 5;
  int frames = 100;
  int fps = 20;
  bool collision = false;
  int accident_frame = 90;  // used iff collision
  double world_size = 1.0;
  double speed_min = 0.03;
  double speed_max = 0.08;
  double noise_sigma = 0.002;
  std::uint64_t embed_seed = 1234;
  std::size_t frame_dim = 64;
  std::size_t object_dim = 32;
  std::size_t max_objects = kDefaultMaxObjects;
  double box_half_size = 0.03;  // fraction of world_size

  double collision_eps() const { return 0.02 * world_size; }
  double proximity_band() const { return 0.15 * world_size; }
  /// Separation kept by agents that are not on a collision course.
  double clearance() const { return 0.2 * world_size; }
};

void validate(const ScenarioParams& p);

/// Ground-truth trajectories, exposed so tests can check geometry directly.
struct Trajectories {
  std::size_t frames = 0, agents = 0;
  std::vector<double> position;  // frames x agents x 2
  std::vector<double> velocity;  // frames x agents x 2
  std::optional<std::pair<std::size_t, std::size_t>> colliding_pair;

  double distance(std::size_t t, std::size_t a, std::size_t b) const;
};

Trajectories simulate(std::uint64_t seed, const ScenarioParams& params);

/// Same (seed, params) gives a bit-identical clip.
ClipPack generate_scenario(std::uint64_t seed, const ScenarioParams& params);

/// Writes count_pos positive and count_neg negative clips plus
/// `manifest.jsonl` into out_dir. 80/20 train/test split, stratified by label.
DatasetManifest generate_dataset(std::uint64_t seed, std::size_t count_pos, std::size_t count_neg,
                                 ScenarioParams params, const std::filesystem::path& out_dir);

/// splitmix64-based seed derivation used for per-clip and per-epoch streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace accident::synth
