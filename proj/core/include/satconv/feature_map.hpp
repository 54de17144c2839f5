#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "satconv/errors.hpp"

namespace satconv {

struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t plane_size() const { return height * width; }
  std::size_t size() const { return channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense channels x height x width array, channel-major and row-major within
/// a channel. Every module in the library assumes this single layout.
template <typename T>
class BasicFeatureMap {
 public:
  using value_type = T;

  BasicFeatureMap() : BasicFeatureMap(1, 1, 1) {}

  BasicFeatureMap(std::size_t channels, std::size_t height, std::size_t width,
                  T fill = T{})
      : shape_{channels, height, width} {
    check_shape(shape_);
    data_.assign(shape_.size(), fill);
  }

  explicit BasicFeatureMap(Shape shape, T fill = T{})
      : BasicFeatureMap(shape.channels, shape.height, shape.width, fill) {}

  BasicFeatureMap(Shape shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_.size()) {
      throw DimensionError("feature map data length " +
                           std::to_string(data_.size()) + " does not match " +
                           to_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  const T& operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  std::span<T> plane(std::size_t c) {
    return {data_.data() + c * shape_.plane_size(), shape_.plane_size()};
  }
  std::span<const T> plane(std::size_t c) const {
    return {data_.data() + c * shape_.plane_size(), shape_.plane_size()};
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& vector() const { return data_; }

  friend bool operator==(const BasicFeatureMap&, const BasicFeatureMap&) = default;

 private:
  static void check_shape(const Shape& s) {
    if (s.channels == 0 || s.height == 0 || s.width == 0) {
      throw DimensionError("feature map dimensions must be positive, got " +
                           to_string(s));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using FeatureMap = BasicFeatureMap<double>;
using FeatureMapF = BasicFeatureMap<float>;

inline std::string to_string(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

}  // namespace satconv
