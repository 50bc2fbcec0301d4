#include "accident/dataset/clip_pack.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "accident/errors.hpp"

namespace accident {

using nlohmann::json;

std::string_view to_string(Label label) {
  return label == Label::positive ? "positive" : "negative";
}

Label parse_label(std::string_view text) {
  if (text == "positive") return Label::positive;
  if (text == "negative") return Label::negative;
  throw ValidationError("label", "expected \"positive\" or \"negative\", got \"" + std::string(text) + "\"");
}

void validate(const ClipPack& c, std::size_t max_objects) {
  if (c.clip_id.empty()) throw ValidationError("clip_id", "must be non-empty");
  if (c.fps <= 0) throw ValidationError("fps", "must be a positive integer");
  if (c.frames < 1) throw ValidationError("frames", "T must be >= 1");
  if (c.objects < 1 || c.objects > max_objects)
    throw ValidationError("objects", "N must be in [1, " + std::to_string(max_objects) + "]");
  if (c.frame_dim < 1) throw ValidationError("frame_features", "D_v must be >= 1");
  if (c.object_dim < 1) throw ValidationError("object_features", "D_o must be >= 1");

  const std::size_t tn = c.frames * c.objects;
  if (c.frame_features.size() != c.frames * c.frame_dim)
    throw ValidationError("frame_features", "length does not match T x D_v");
  if (c.object_features.size() != tn * c.object_dim)
    throw ValidationError("object_features", "length does not match T x N x D_o");
  if (c.boxes.size() != tn * 4) throw ValidationError("boxes", "length does not match T x N x 4");
  if (c.object_mask.size() != tn) throw ValidationError("object_mask", "length does not match T x N");
  if (c.involvement.size() != tn) throw ValidationError("involvement", "length does not match T x N");
  if (!c.categories.empty() && c.categories.size() != c.objects)
    throw ValidationError("categories", "must be empty or have one entry per slot");

  for (float v : c.frame_features)
    if (!std::isfinite(v)) throw ValidationError("frame_features", "non-finite value");
  for (float v : c.object_features)
    if (!std::isfinite(v)) throw ValidationError("object_features", "non-finite value");

  for (std::size_t i = 0; i < tn; ++i) {
    if (c.object_mask[i] > 1) throw ValidationError("object_mask", "values must be 0 or 1");
    if (c.involvement[i] > 1) throw ValidationError("involvement", "values must be 0 or 1");
    if (c.involvement[i] && !c.object_mask[i])
      throw ValidationError("involvement", "true at an unoccupied slot (flat index " + std::to_string(i) + ")");
    if (!c.object_mask[i]) continue;
    const float* b = &c.boxes[i * 4];
    const bool ok = std::isfinite(b[0]) && std::isfinite(b[1]) && std::isfinite(b[2]) &&
                    std::isfinite(b[3]) && 0.0f <= b[0] && b[0] <= b[2] && b[2] <= 1.0f &&
                    0.0f <= b[1] && b[1] <= b[3] && b[3] <= 1.0f;
    if (!ok) {
      throw ValidationError("boxes", "need 0 <= x1 <= x2 <= 1 and 0 <= y1 <= y2 <= 1 (flat slot " +
                                         std::to_string(i) + ")");
    }
  }

  if (c.label == Label::positive) {
    if (!c.accident_frame) throw ValidationError("accident_frame", "required for positive clips");
    if (*c.accident_frame < 1 || static_cast<std::size_t>(*c.accident_frame) > c.frames)
      throw ValidationError("accident_frame", "must lie in [1, T]");
  } else {
    if (c.accident_frame) throw ValidationError("accident_frame", "must be absent for negative clips");
    for (std::uint8_t v : c.involvement)
      if (v) throw ValidationError("involvement", "must be all false for negative clips");
  }
}

namespace {

constexpr const char* kArrayOrder[] = {"frame_features", "object_features", "boxes", "object_mask",
                                       "involvement"};

void append_f32le(std::string& out, const std::vector<float>& values) {
  out.reserve(out.size() + values.size() * 4);
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((bits >> s) & 0xFFu));
  }
}

std::vector<float> read_f32le(std::string_view bytes) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

std::size_t shape_product(const json& shape) {
  std::size_t p = 1;
  for (const auto& d : shape) {
    if (!d.is_number_unsigned()) throw FormatError("shape entries must be non-negative integers");
    p *= d.get<std::size_t>();
  }
  return p;
}

}  // namespace

std::string encode_clip_pack(const ClipPack& c) {
  validate(c);
  const std::size_t tn = c.frames * c.objects;
  json header;
  header["clip_id"] = c.clip_id;
  header["fps"] = c.fps;
  header["label"] = std::string(to_string(c.label));
  header["accident_frame"] = c.accident_frame ? json(*c.accident_frame) : json(nullptr);
  header["dtype"] = "f32le";
  header["shapes"] = {
      {"frame_features", {c.frames, c.frame_dim}},
      {"object_features", {c.frames, c.objects, c.object_dim}},
      {"boxes", {c.frames, c.objects, 4}},
      {"object_mask", {c.frames, c.objects}},
      {"involvement", {c.frames, c.objects}},
  };
  const std::size_t sizes[] = {c.frame_features.size() * 4, c.object_features.size() * 4,
                               c.boxes.size() * 4, tn, tn};
  json offsets;
  std::size_t off = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    offsets[kArrayOrder[i]] = off;
    off += sizes[i];
  }
  header["byte_offsets"] = offsets;
  if (!c.categories.empty()) header["categories"] = c.categories;

  std::string out(kClipPackMagic);
  out += header.dump();
  out += '\n';
  append_f32le(out, c.frame_features);
  append_f32le(out, c.object_features);
  append_f32le(out, c.boxes);
  out.append(reinterpret_cast<const char*>(c.object_mask.data()), c.object_mask.size());
  out.append(reinterpret_cast<const char*>(c.involvement.data()), c.involvement.size());
  return out;
}

ClipPack decode_clip_pack(std::string_view bytes) {
  if (bytes.substr(0, kClipPackMagic.size()) != kClipPackMagic)
    throw FormatError("missing CLIPPACK1 magic");
  const std::size_t header_start = kClipPackMagic.size();
  const std::size_t nl = bytes.find('\n', header_start);
  if (nl == std::string_view::npos) throw CorruptionError("header line is not terminated");

  json header;
  try {
    header = json::parse(bytes.substr(header_start, nl - header_start));
  } catch (const json::exception& e) {
    throw FormatError(std::string("header is not valid JSON: ") + e.what());
  }

  ClipPack c;
  std::size_t sizes[5];
  try {
    if (header.at("dtype").get<std::string>() != "f32le") throw FormatError("unsupported dtype");
    c.clip_id = header.at("clip_id").get<std::string>();
    c.fps = header.at("fps").get<int>();
    c.label = parse_label(header.at("label").get<std::string>());
    if (!header.at("accident_frame").is_null()) c.accident_frame = header.at("accident_frame").get<int>();
    const json& shapes = header.at("shapes");
    const json& ff = shapes.at("frame_features");
    const json& of = shapes.at("object_features");
    if (ff.size() != 2 || of.size() != 3) throw FormatError("feature shapes have the wrong rank");
    c.frames = ff.at(0).get<std::size_t>();
    c.frame_dim = ff.at(1).get<std::size_t>();
    c.objects = of.at(1).get<std::size_t>();
    c.object_dim = of.at(2).get<std::size_t>();
    if (of.at(0).get<std::size_t>() != c.frames) throw CorruptionError("T disagrees between arrays");
    const json expect_boxes = {c.frames, c.objects, 4};
    const json expect_tn = {c.frames, c.objects};
    if (shapes.at("boxes") != expect_boxes || shapes.at("object_mask") != expect_tn ||
        shapes.at("involvement") != expect_tn)
      throw CorruptionError("declared shapes are inconsistent");
    for (std::size_t i = 0; i < 5; ++i) {
      const std::size_t elems = shape_product(shapes.at(kArrayOrder[i]));
      sizes[i] = i < 3 ? elems * 4 : elems;
    }
    std::size_t off = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      if (header.at("byte_offsets").at(kArrayOrder[i]).get<std::size_t>() != off)
        throw CorruptionError(std::string("byte offset of ") + kArrayOrder[i] + " is inconsistent");
      off += sizes[i];
    }
    if (header.contains("categories")) c.categories = header.at("categories").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }

  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  const std::string_view payload = bytes.substr(nl + 1);
  if (payload.size() != total) {
    throw CorruptionError("payload is " + std::to_string(payload.size()) + " bytes, header declares " +
                          std::to_string(total));
  }
  std::size_t off = 0;
  c.frame_features = read_f32le(payload.substr(off, sizes[0]));
  off += sizes[0];
  c.object_features = read_f32le(payload.substr(off, sizes[1]));
  off += sizes[1];
  c.boxes = read_f32le(payload.substr(off, sizes[2]));
  off += sizes[2];
  c.object_mask.assign(payload.begin() + off, payload.begin() + off + sizes[3]);
  off += sizes[3];
  c.involvement.assign(payload.begin() + off, payload.begin() + off + sizes[4]);

  validate(c);
  return c;
}

void write_clip_pack(const ClipPack& clip, const std::filesystem::path& path) {
  const std::string bytes = encode_clip_pack(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ClipPack read_clip_pack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return decode_clip_pack(ss.str());
}

}  // namespace accident
