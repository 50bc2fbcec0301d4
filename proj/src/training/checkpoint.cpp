#include "accident/training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "accident/errors.hpp"

namespace accident::training {

namespace {

void put_f64(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

struct Parsed {
  Checkpoint meta;
  nlohmann::json params;
  std::string payload;
};

Parsed parse(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.compare(0, kCheckpointMagic.size(), kCheckpointMagic) != 0) {
    throw FormatError(path.string() + " is not a checkpoint");
  }
  const std::size_t header_end = bytes.find('\n', kCheckpointMagic.size());
  if (header_end == std::string::npos) throw CorruptionError("checkpoint header is truncated");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(kCheckpointMagic.size(), header_end - kCheckpointMagic.size()));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint header: ") + e.what());
  }
  Parsed p;
  try {
    if (h.at("dtype").get<std::string>() != "f64le") throw FormatError("unsupported checkpoint dtype");
    p.meta.config = h.at("config");
    p.meta.epoch = h.at("epoch").get<int>();
    p.meta.metrics = h.at("metrics");
    p.params = h.at("params");
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint header: ") + e.what());
  }
  p.payload = bytes.substr(header_end + 1);
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ad::ParameterSet& params, const Checkpoint& meta) {
  nlohmann::json entries = nlohmann::json::array();
  std::string payload;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Parameter& p = params[i];
    entries.push_back({{"name", p.name},
                       {"group", p.group},
                       {"shape", {p.value.rows(), p.value.cols()}},
                       {"offset", payload.size()}});
    for (double v : p.value.values()) put_f64(payload, v);
  }
  nlohmann::json header = {{"config", meta.config},
                           {"epoch", meta.epoch},
                           {"metrics", meta.metrics},
                           {"dtype", "f64le"},
                           {"params", entries}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << kCheckpointMagic << header.dump() << '\n' << payload;
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint read_checkpoint_header(const std::filesystem::path& path) { return parse(path).meta; }

Checkpoint load_checkpoint(const std::filesystem::path& path, ad::ParameterSet& params) {
  Parsed p = parse(path);
  std::map<std::string, const nlohmann::json*> by_name;
  for (const auto& e : p.params) by_name[e.at("name").get<std::string>()] = &e;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Parameter& param = params[i];
    auto it = by_name.find(param.name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks parameter " + param.name);
    const nlohmann::json& e = *it->second;
    const auto rows = e.at("shape").at(0).get<std::size_t>();
    const auto cols = e.at("shape").at(1).get<std::size_t>();
    if (rows != param.value.rows() || cols != param.value.cols()) {
      throw FormatError("checkpoint shape mismatch for " + param.name);
    }
    const auto offset = e.at("offset").get<std::size_t>();
    if (offset + rows * cols * 8 > p.payload.size()) throw CorruptionError("checkpoint payload is truncated");
    for (std::size_t k = 0; k < rows * cols; ++k) param.value[k] = get_f64(p.payload.data() + offset + 8 * k);
  }
  return p.meta;
}

}  // namespace accident::training
