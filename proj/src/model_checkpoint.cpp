#include "osda/model/checkpoint.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace osda::model {

namespace {
constexpr char kMagic[4] = {'O', 'S', 'D', 'C'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config, const nn::ParamStore& params) {
  {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open checkpoint for write: " + path);
  f.write(kMagic, 4);
  put<uint32_t>(f, kVersion);
  const std::string cfg = model_config_to_json(config);
  put<uint32_t>(f, static_cast<uint32_t>(cfg.size()));
  f.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put<uint32_t>(f, static_cast<uint32_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) {
    const std::string& name = params.name(i);
    put<uint16_t>(f, static_cast<uint16_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Matrix& v = params.value(i);
    put<uint32_t>(f, static_cast<uint32_t>(v.rows));
    put<uint32_t>(f, static_cast<uint32_t>(v.cols));
    f.write(reinterpret_cast<const char*>(v.data.data()), static_cast<std::streamsize>(v.size() * 8));
  }
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string_view(magic, 4) != std::string_view(kMagic, 4))
    throw std::runtime_error("bad checkpoint magic: " + path);
  uint32_t version = get<uint32_t>(f);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version: " + path);
  uint32_t cfg_len = get<uint32_t>(f);
  std::string cfg(cfg_len, '\0');
  f.read(cfg.data(), cfg_len);
  Checkpoint out;
  out.config = model_config_from_json(cfg);
  uint32_t n = get<uint32_t>(f);
  for (uint32_t i = 0; i < n; ++i) {
    uint16_t name_len = get<uint16_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    uint32_t rows = get<uint32_t>(f);
    uint32_t cols = get<uint32_t>(f);
    Matrix v(static_cast<int>(rows), static_cast<int>(cols));
    f.read(reinterpret_cast<char*>(v.data.data()), static_cast<std::streamsize>(v.size() * 8));
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
    out.params.add(name, std::move(v));
  }
  return out;
}

}  // namespace osda::model
