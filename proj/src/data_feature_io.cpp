#include "osda/data/feature_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

static_assert(std::endian::native == std::endian::little, "feature file I/O assumes a little-endian host");

namespace osda::data {

namespace {
constexpr char kMagic[4] = {'O', 'S', 'D', 'F'};
constexpr uint16_t kVersion = 1;

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

void quantize_to_f32(Matrix& m) {
  for (auto& v : m.data) v = static_cast<double>(static_cast<float>(v));
}

void write_feature_stream(const FeatureStream& stream, const std::string& path) {
  stream.validate();
  {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FeatureFormatError("cannot open for write: " + path);
  f.write(kMagic, 4);
  put<uint16_t>(f, kVersion);
  put<uint16_t>(f, 0);  // reserved
  put<uint32_t>(f, static_cast<uint32_t>(stream.frames.rows));
  put<uint16_t>(f, static_cast<uint16_t>(stream.d_slow));
  put<uint16_t>(f, static_cast<uint16_t>(stream.d_fast));
  for (double v : stream.frames.data) put<float>(f, static_cast<float>(v));
  put<double>(f, stream.feature_fps);
  if (!f) throw FeatureFormatError("write failed: " + path);
}

FeatureStream read_feature_stream(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FeatureFormatError("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) throw FeatureFormatError("bad magic: " + path);
  uint16_t version = get<uint16_t>(f);
  if (version != kVersion) throw FeatureFormatError("unsupported version " + std::to_string(version) + ": " + path);
  get<uint16_t>(f);  // reserved
  uint32_t n = get<uint32_t>(f);
  uint16_t d_slow = get<uint16_t>(f);
  uint16_t d_fast = get<uint16_t>(f);
  if (!f) throw FeatureFormatError("truncated header: " + path);
  const uint32_t d_total = d_slow + d_fast;
  if (d_total == 0) throw FeatureFormatError("inconsistent dims (d_slow + d_fast == 0): " + path);

  const auto expected = 16 + static_cast<uintmax_t>(n) * d_total * 4 + 8;
  if (std::filesystem::file_size(path) != expected) throw FeatureFormatError("truncated payload: " + path);

  FeatureStream s;
  s.video_id = std::filesystem::path(path).stem().string();
  s.d_slow = d_slow;
  s.d_fast = d_fast;
  s.frames = Matrix(static_cast<int>(n), static_cast<int>(d_total));
  std::vector<float> row(d_total);
  for (uint32_t i = 0; i < n; ++i) {
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(d_total) * 4);
    double* dst = s.frames.row_ptr(static_cast<int>(i));
    for (uint32_t j = 0; j < d_total; ++j) dst[j] = static_cast<double>(row[j]);
  }
  s.feature_fps = get<double>(f);
  if (!f) throw FeatureFormatError("truncated payload: " + path);
  s.validate();
  return s;
}

}  // namespace osda::data
