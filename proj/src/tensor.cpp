#include "reprog/tensor.hpp"

#include <cmath>
#include <sstream>

#include "reprog/errors.hpp"

namespace reprog {

std::int64_t shape_product(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int e : shape) n *= e;
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int> shp) : shape(std::move(shp)) {
  for (int e : shape) {
    if (e <= 0) throw ShapeError("tensor extent must be positive, got " + shape_to_string(shape));
  }
  data.assign(static_cast<std::size_t>(shape_product(shape)), 0.0f);
}

Tensor Tensor::full(std::vector<int> shp, float value) {
  Tensor t(std::move(shp));
  for (float& v : t.data) v = value;
  return t;
}

Tensor Tensor::from(std::vector<int> shp, std::vector<float> values) {
  Tensor t(std::move(shp));
  if (t.data.size() != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not fill shape " +
                     shape_to_string(t.shape));
  }
  t.data = std::move(values);
  return t;
}

bool Tensor::all_finite() const {
  for (float v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
}

void require_shape(const Tensor& t, const std::vector<int>& expect, const char* what) {
  if (t.shape != expect) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_to_string(expect) + ", got " +
                     t.shape_str());
  }
}

int argmax(const Tensor& t) {
  int best = 0;
  for (std::int64_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace reprog
