#include "accident/dataset/manifest.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "accident/errors.hpp"

namespace accident {

using nlohmann::json;

const ProfileSpec& profile_spec(Profile p) {
  static const ProfileSpec specs[] = {
      {Profile::dad, "dad", 100, 20, 90, 0.7, true},
      {Profile::ccd, "ccd", 50, 10, 40, 0.8, false},
      {Profile::a3d, "a3d", 100, 20, 80, 0.8, false},
      {Profile::synthetic, "synthetic", 0, 0, 0, 0.8, true},
  };
  return specs[static_cast<int>(p)];
}

Profile parse_profile(std::string_view name) {
  for (Profile p : {Profile::dad, Profile::ccd, Profile::a3d, Profile::synthetic})
    if (profile_spec(p).name == name) return p;
  throw ConfigError("unknown dataset profile \"" + std::string(name) + "\"");
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw FormatError("split must be \"train\" or \"test\", got \"" + std::string(text) + "\"");
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<ManifestEntry> DatasetManifest::split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path, Profile profile) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.profile = profile;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.label = parse_label(j.at("label").get<std::string>());
      e.split = parse_split(j.at("split").get<std::string>());
      m.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const ValidationError& ex) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& e : manifest.entries) {
    json j;
    j["path"] = e.path;
    j["label"] = std::string(to_string(e.label));
    j["split"] = std::string(to_string(e.split));
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

ValidationReport validate_manifest(const DatasetManifest& manifest) {
  const ProfileSpec& spec = profile_spec(manifest.profile);
  ValidationReport report;
  for (const auto& e : manifest.entries) {
    ValidationReport::Entry r;
    r.path = e.path;
    const auto full = manifest.resolve(e);
    if (!std::filesystem::exists(full)) {
      r.status = ValidationReport::Status::missing;
      r.message = "file not found: " + full.string();
      ++report.missing;
      report.entries.push_back(std::move(r));
      continue;
    }
    try {
      const ClipPack clip = read_clip_pack(full);
      if (clip.label != e.label) throw ValidationError("label", "manifest and clip labels disagree");
      if (spec.frames > 0 && clip.frames != static_cast<std::size_t>(spec.frames))
        r.warnings.push_back("profile mismatch: T=" + std::to_string(clip.frames) + ", profile expects " +
                             std::to_string(spec.frames));
      if (spec.fps > 0 && clip.fps != spec.fps)
        r.warnings.push_back("profile mismatch: fps=" + std::to_string(clip.fps) + ", profile expects " +
                             std::to_string(spec.fps));
      if (spec.accident_frame > 0 && clip.accident_frame && *clip.accident_frame != spec.accident_frame)
        r.warnings.push_back("profile mismatch: accident frame " + std::to_string(*clip.accident_frame) +
                             ", profile expects " + std::to_string(spec.accident_frame));
      ++report.passed;
      const bool pos = e.label == Label::positive;
      ++(pos ? report.positives : report.negatives);
      if (e.split == Split::train)
        ++(pos ? report.train_positives : report.train_negatives);
      else
        ++(pos ? report.test_positives : report.test_negatives);
    } catch (const Error& ex) {
      r.status = ValidationReport::Status::fail;
      r.message = ex.what();
      ++report.failed;
    }
    report.entries.push_back(std::move(r));
  }

  const std::size_t total = report.passed;
  if (total > 0) {
    const double train = static_cast<double>(report.train_positives + report.train_negatives) /
                         static_cast<double>(total);
    // Rounding a handful of clips per class can move the fraction a bit.
    if (std::abs(train - spec.train_fraction) > 0.05 + 1.0 / static_cast<double>(total)) {
      report.warnings.push_back("train fraction " + std::to_string(train) + " differs from the " +
                                std::string(spec.name) + " default " + std::to_string(spec.train_fraction));
    }
  }
  return report;
}

}  // namespace accident
