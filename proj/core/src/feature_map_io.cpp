#include "satconv/feature_map_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace satconv {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff),
                         static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

template <typename UInt>
void put_le(std::ostream& out, UInt bits) {
  char bytes[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  }
  out.write(bytes, sizeof(UInt));
}

template <typename UInt>
UInt get_le(std::istream& in) {
  unsigned char bytes[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) {
    throw ParseError("feature map: truncated input");
  }
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[i]) << (8 * i);
  return v;
}

template <typename T>
void write_impl(std::ostream& out, const BasicFeatureMap<T>& fm, DType tag) {
  out.write(kFeatureMapMagic, sizeof(kFeatureMapMagic));
  put_u32(out, static_cast<std::uint32_t>(fm.channels()));
  put_u32(out, static_cast<std::uint32_t>(fm.height()));
  put_u32(out, static_cast<std::uint32_t>(fm.width()));
  out.put(static_cast<char>(tag));
  using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  for (T v : fm.data()) put_le<Bits>(out, std::bit_cast<Bits>(v));
  if (!out) throw ParseError("feature map: write failed");
}

template <typename T>
BasicFeatureMap<T> read_payload(std::istream& in, Shape shape) {
  using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::vector<T> data(shape.size());
  for (auto& v : data) v = std::bit_cast<T>(get_le<Bits>(in));
  return BasicFeatureMap<T>(shape, std::move(data));
}

}  // namespace

void write_feature_map(std::ostream& out, const FeatureMap& fm) {
  write_impl(out, fm, DType::F64);
}

void write_feature_map(std::ostream& out, const FeatureMapF& fm) {
  write_impl(out, fm, DType::F32);
}

AnyFeatureMap read_any_feature_map(std::istream& in) {
  char magic[sizeof(kFeatureMapMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kFeatureMapMagic, sizeof(magic)) != 0) {
    throw ParseError("feature map: bad magic");
  }
  Shape shape;
  shape.channels = get_le<std::uint32_t>(in);
  shape.height = get_le<std::uint32_t>(in);
  shape.width = get_le<std::uint32_t>(in);
  if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
    throw ParseError("feature map: zero dimension in header");
  }
  const auto tag = static_cast<DType>(get_le<std::uint8_t>(in));
  switch (tag) {
    case DType::F64: return read_payload<double>(in, shape);
    case DType::F32: return read_payload<float>(in, shape);
  }
  throw ParseError("feature map: unknown dtype tag " +
                   std::to_string(static_cast<int>(tag)));
}

FeatureMap read_feature_map(std::istream& in) {
  auto any = read_any_feature_map(in);
  if (auto* d = std::get_if<FeatureMap>(&any)) return std::move(*d);
  const auto& f = std::get<FeatureMapF>(any);
  std::vector<double> wide(f.data().begin(), f.data().end());
  return FeatureMap(f.shape(), std::move(wide));
}

void save_feature_map(const std::filesystem::path& path, const FeatureMap& fm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  write_feature_map(out, fm);
}

FeatureMap load_feature_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_feature_map(in);
}

}  // namespace satconv
