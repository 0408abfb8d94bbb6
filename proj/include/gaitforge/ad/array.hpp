#pragma once

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gf::ad {

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

inline long shape_size(const std::vector<int>& shape) {
  long n = 1;
  for (int d : shape) n *= d;
  return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

// Dense n-d array. The shape is fixed at construction; data is contiguous.
template <typename T>
struct Array {
  std::vector<int> shape;
  std::vector<T> data;

  Array() = default;
  explicit Array(std::vector<int> s) : shape(std::move(s)) {
    for (int d : shape) check(d > 0, "Array: non-positive dim " + shape_str(shape));
    data.assign(shape_size(shape), T(0));
  }
  Array(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    check(shape_size(shape) == static_cast<long>(data.size()),
          "Array: shape " + shape_str(shape) + " does not match data length");
  }

  static Array zeros(std::vector<int> s) { return Array(std::move(s)); }
  static Array scalar(T v) { return Array({1}, {v}); }

  long size() const { return static_cast<long>(data.size()); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  template <typename U>
  Array<U> cast() const {
    Array<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

}  // namespace gf::ad
