#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "treerl/errors.hpp"

namespace treerl {

// Dense row-major double array. Rank 1 (vectors) and rank 2 (matrices) are
// the only shapes the graph ops produce; scalars are rank-1 of size 1.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> values)
      : shape(std::move(s)), v(std::move(values)) {
    assert(v.size() == count(shape));
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    Tensor t;
    t.v.assign(count(s), 0.0);
    t.shape = std::move(s);
    return t;
  }

  static Tensor scalar(double x) { return Tensor({1}, {x}); }

  static Tensor vec(std::vector<double> values) {
    std::vector<std::size_t> s{values.size()};
    return Tensor(std::move(s), std::move(values));
  }

  std::size_t size() const { return v.size(); }
  bool is_scalar() const { return v.size() == 1; }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }

  std::size_t rows() const {
    assert(is_matrix());
    return shape[0];
  }
  std::size_t cols() const {
    assert(is_matrix());
    return shape[1];
  }

  double& at(std::size_t i, std::size_t j) { return v[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * cols() + j]; }

  bool finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) os << 'x';
      os << shape[i];
    }
    os << ']';
    return os.str();
  }
};

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape;
}

}  // namespace treerl
