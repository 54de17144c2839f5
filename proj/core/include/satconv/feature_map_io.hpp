#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <variant>

#include "satconv/feature_map.hpp"

namespace satconv {

// Binary fixture format:
//   "SATFM1" | u32 channels | u32 height | u32 width | u8 dtype | payload
// All integers and scalars little-endian. dtype is the scalar byte width.
enum class DType : std::uint8_t { F32 = 4, F64 = 8 };

inline constexpr char kFeatureMapMagic[6] = {'S', 'A', 'T', 'F', 'M', '1'};

void write_feature_map(std::ostream& out, const FeatureMap& fm);
void write_feature_map(std::ostream& out, const FeatureMapF& fm);

using AnyFeatureMap = std::variant<FeatureMap, FeatureMapF>;

AnyFeatureMap read_any_feature_map(std::istream& in);

// Reads either dtype; 32-bit payloads are widened.
FeatureMap read_feature_map(std::istream& in);

void save_feature_map(const std::filesystem::path& path, const FeatureMap& fm);
FeatureMap load_feature_map(const std::filesystem::path& path);

}  // namespace satconv
