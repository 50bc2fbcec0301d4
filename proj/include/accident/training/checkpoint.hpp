#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "accident/autodiff.hpp"

namespace accident::training {

inline constexpr std::string_view kCheckpointMagic = "ACCKPT1\n";

/// Checkpoint layout: magic line, one JSON header line
/// {"config", "epoch", "metrics", "dtype": "f64le", "params": [{name, group,
/// shape, offset}]}, then the raw little-endian parameter payload.
struct Checkpoint {
  nlohmann::json config;
  int epoch = 0;
  nlohmann::json metrics = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const ad::ParameterSet& params, const Checkpoint& meta);

/// Reads the header only.
Checkpoint read_checkpoint_header(const std::filesystem::path& path);

/// Copies stored values into `params` by name. Every parameter in `params`
/// must be present with the same shape (CorruptionError / FormatError
/// otherwise). Returns the header.
Checkpoint load_checkpoint(const std::filesystem::path& path, ad::ParameterSet& params);

}  // namespace accident::training
