#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfgs {

/// Axis lengths of a dense array.  State and action spaces keep their
/// original axes; flattening happens only inside the recursions.
using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(shape[i]);
  }
  out += ')';
  return out;
}

/// Multi-index of `flat` under `shape`, rendered as "(i,j)".
inline std::string flat_index_to_string(std::size_t flat, const Shape& shape) {
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t k = shape.size(); k-- > 0;) {
    idx[k] = flat % shape[k];
    flat /= shape[k];
  }
  std::string out = "(";
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k > 0) out += ',';
    out += std::to_string(idx[k]);
  }
  out += ')';
  return out;
}

/// Dense row-major array of doubles with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_))
      throw std::invalid_argument("tensor data size " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }
  std::span<const double> span() const { return data_; }
  std::span<double> span() { return data_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline Shape shape_cat(const Shape& a, const Shape& b) {
  Shape out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Shape shape_cat(std::size_t head, const Shape& a, const Shape& b = {}) {
  Shape out{head};
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace mfgs
