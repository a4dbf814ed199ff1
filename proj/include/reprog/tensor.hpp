#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace reprog {

// Dense row-major f32 tensor; the universal value carrier. Extents are
// positive and data.size() == product(shape) at all times.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shp);

  static Tensor zeros(std::vector<int> shp) { return Tensor(std::move(shp)); }
  static Tensor full(std::vector<int> shp, float value);
  static Tensor from(std::vector<int> shp, std::vector<float> values);

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }

  float operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }
  float& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }

  // Rank-3 (C,H,W) access used by the image paths.
  float at3(int c, int i, int j) const {
    return data[static_cast<std::size_t>((c * shape[1] + i) * shape[2] + j)];
  }
  float& at3(int c, int i, int j) {
    return data[static_cast<std::size_t>((c * shape[1] + i) * shape[2] + j)];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

std::int64_t shape_product(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

// Throws ShapeError naming `what` when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);
void require_shape(const Tensor& t, const std::vector<int>& expect, const char* what);

int argmax(const Tensor& t);  // ties broken toward the lowest index

}  // namespace reprog
