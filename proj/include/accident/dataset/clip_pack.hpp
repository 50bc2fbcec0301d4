#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace accident {

inline constexpr std::size_t kDefaultMaxObjects = 19;
inline constexpr std::string_view kClipPackMagic = "CLIPPACK1\n";

enum class Label { negative, positive };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

/// One clip's precomputed features, detections and labels.
///
/// Rank-3 arrays are flattened frame-major: element (t, n, d) sits at
/// (t * objects + n) * dim + d. Frames are 1-indexed in the domain
/// (accident_frame in [1, frames]) and 0-indexed in storage.
struct ClipPack {
  std::string clip_id;
  int fps = 0;
  std::size_t frames = 0;      // T
  std::size_t objects = 0;     // N
  std::size_t frame_dim = 0;   // D_v
  std::size_t object_dim = 0;  // D_o
  std::vector<float> frame_features;        // T x D_v
  std::vector<float> object_features;       // T x N x D_o
  std::vector<float> boxes;                 // T x N x 4, (x1, y1, x2, y2) in [0, 1]
  std::vector<std::uint8_t> object_mask;    // T x N
  Label label = Label::negative;
  std::optional<int> accident_frame;        // positive clips only
  std::vector<std::uint8_t> involvement;    // T x N
  std::vector<std::string> categories;      // optional, one per slot

  bool occupied(std::size_t t, std::size_t n) const { return object_mask[t * objects + n] != 0; }
  bool involved(std::size_t t, std::size_t n) const { return involvement[t * objects + n] != 0; }

  friend bool operator==(const ClipPack&, const ClipPack&) = default;
};

/// Throws ValidationError naming the first broken invariant.
void validate(const ClipPack& clip, std::size_t max_objects = kDefaultMaxObjects);

/// Serialize to the CLIPPACK byte layout. Validates first.
std::string encode_clip_pack(const ClipPack& clip);
/// Inverse of encode_clip_pack. Throws FormatError, CorruptionError or
/// ValidationError.
ClipPack decode_clip_pack(std::string_view bytes);

void write_clip_pack(const ClipPack& clip, const std::filesystem::path& path);
ClipPack read_clip_pack(const std::filesystem::path& path);

}  // namespace accident
