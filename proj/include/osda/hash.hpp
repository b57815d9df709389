#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace osda {

// FNV-1a, used for cache keys, per-video seeds and provenance hashes.
// std::hash is not stable across runs/platforms; this is.
class Fnv64 {
 public:
  Fnv64& update(const void* bytes, size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ULL;
    }
    return *this;
  }
  Fnv64& update(std::string_view s) { return update(s.data(), s.size()); }
  Fnv64& update_u64(uint64_t v) {
    unsigned char b[8];
    std::memcpy(b, &v, 8);
    return update(b, 8);
  }
  uint64_t digest() const { return h_; }

 private:
  uint64_t h_ = 1469598103934665603ULL;
};

inline uint64_t fnv64(std::string_view s) { return Fnv64().update(s).digest(); }

std::string hex64(uint64_t v);

}  // namespace osda
