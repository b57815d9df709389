#pragma once

#include <stdexcept>
#include <string>

#include "osda/data/types.hpp"

namespace osda::data {

// On-disk feature file:
//   16-byte header: magic "OSDF", u16 version, u16 reserved, u32 N, u16 d_slow, u16 d_fast
//   N * (d_slow + d_fast) little-endian float32, row-major
//   trailing float64 feature_fps
// Floats are stored as 32-bit, so write/read round-trips are bit-exact at
// float32 precision; generators quantize accordingly.
struct FeatureFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_feature_stream(const FeatureStream& stream, const std::string& path);
FeatureStream read_feature_stream(const std::string& path);

// Quantize a matrix through float32 so in-memory values match a round-trip.
void quantize_to_f32(Matrix& m);

}  // namespace osda::data
