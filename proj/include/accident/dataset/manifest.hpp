#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "accident/dataset/clip_pack.hpp"

namespace accident {

enum class Profile { dad, ccd, a3d, synthetic };
enum class Split { train, test };

/// Dataset-level constants. Zero means "free" (not constrained by the profile).
struct ProfileSpec {
  Profile profile;
  std::string_view name;
  int frames;
  int fps;
  int accident_frame;
  double train_fraction;
  bool has_involvement;  // only DAD ships per-object annotations
};

const ProfileSpec& profile_spec(Profile p);
Profile parse_profile(std::string_view name);
std::string_view to_string(Split s);
Split parse_split(std::string_view text);

struct ManifestEntry {
  std::string path;  // relative paths resolve against the manifest directory
  Label label = Label::negative;
  Split split = Split::train;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  Profile profile = Profile::synthetic;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  std::vector<ManifestEntry> split(Split s) const;
};

/// JSON Lines: {"path":..., "label":..., "split":...}. Throws FormatError.
DatasetManifest read_manifest(const std::filesystem::path& path, Profile profile);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct ValidationReport {
  enum class Status { pass, fail, missing };
  struct Entry {
    std::string path;
    Status status = Status::pass;
    std::string message;
    std::vector<std::string> warnings;
  };
  std::vector<Entry> entries;
  std::vector<std::string> warnings;  // dataset-level (split fractions)
  std::size_t passed = 0, failed = 0, missing = 0;
  std::size_t positives = 0, negatives = 0;
  std::size_t train_positives = 0, train_negatives = 0, test_positives = 0, test_negatives = 0;

  bool ok() const { return failed == 0 && missing == 0; }
};

/// Reads every referenced clip. Profile mismatches are warnings, broken or
/// missing files are entries with fail/missing status; nothing throws.
ValidationReport validate_manifest(const DatasetManifest& manifest);

}  // namespace accident
