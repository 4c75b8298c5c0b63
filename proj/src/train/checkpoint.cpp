#include <fstream>
#include <sstream>

#include "../numerics/binio.hpp"
#include "tspulse/error.hpp"
#include "tspulse/train.hpp"

namespace tspulse {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'P', 'L'};

}  // namespace

void quantize_f32(ParamMap& params) {
  for (auto& [name, t] : params)
    for (auto& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

void save_checkpoint(const Model& model, const std::string& path) {
  check_params(model);
  std::ostringstream os(std::ios::binary);
  binio::put_bytes(os, kMagic, 4);
  binio::put_u32(os, kCheckpointVersion);
  nlohmann::json cfg{{"model", model.cfg.to_json()}, {"mixer_channels", model.mixer_channels}};
  binio::put_string(os, cfg.dump());
  binio::put_u32(os, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& [name, t] : model.params) {
    binio::put_string(os, name);
    binio::put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) binio::put_u64(os, d);
    for (double v : t.data()) binio::put_f32(os, static_cast<float>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  const std::string bytes = os.str();
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  binio::Reader in(f, "checkpoint '" + path + "'");
  char magic[4];
  in.bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4)) throw FormatError("'" + path + "' is not a checkpoint (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported");
  }
  Model m;
  try {
    auto cfg = nlohmann::json::parse(in.string());
    m.cfg = ModelConfig::from_json(cfg.at("model"));
    m.mixer_channels = cfg.at("mixer_channels").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint config block is malformed: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw FormatError("checkpoint config block is invalid: " + std::string(e.what()));
  }
  const std::uint32_t count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = in.string(4096);
    const std::uint32_t rank = in.u32();
    if (rank > 8) throw FormatError("tensor '" + name + "' has implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = in.u64();
    if (shape_size(shape) > (std::size_t{1} << 31)) throw FormatError("tensor '" + name + "' is implausibly large");
    Tensor t(shape);
    for (auto& v : t.data()) v = in.f32();
    if (!m.params.emplace(std::move(name), std::move(t)).second) throw FormatError("duplicate tensor in checkpoint");
  }
  if (!in.at_end()) throw FormatError("trailing bytes after the last tensor");
  try {
    check_params(m);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint tensors do not match its config: ") + e.what());
  }
  return m;
}

}  // namespace tspulse
