#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace smt {

// Dense row-major tensor. Intentionally minimal: the layers below index raw
// storage directly for the hot loops.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(numel_of(shape), T(0)) {}
  Tensor(std::vector<int> s, T fill) : shape(std::move(s)), v(numel_of(shape), fill) {}

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return v.size(); }
  bool empty() const { return v.empty(); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  T& operator[](std::size_t i) { return v[i]; }
  const T& operator[](std::size_t i) const { return v[i]; }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }

  T min() const { return v.empty() ? T(0) : *std::min_element(v.begin(), v.end()); }
  T max() const { return v.empty() ? T(0) : *std::max_element(v.begin(), v.end()); }

  double sum() const {
    double s = 0.0;
    for (const T& x : v) s += static_cast<double>(x);
    return s;
  }
};

template <typename T>
std::string shape_str(const Tensor<T>& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape[i]);
  }
  return s + ")";
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(where) + ": shape mismatch " + shape_str(a) +
                                " vs " + shape_str(b));
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.v[i]) - static_cast<double>(b.v[i])));
  return m;
}

}  // namespace smt
