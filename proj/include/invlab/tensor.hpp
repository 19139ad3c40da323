#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace invlab {

inline std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

/// Dense row-major tensor of real scalars. product(shape) == data length,
/// always; extents are positive.
template <class S>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int> shape)
      : shape_(std::move(shape)), data_(checked_count(shape_), S(0)) {}

  TensorT(std::vector<int> shape, std::vector<S> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_count(shape_) != data_.size()) {
      throw std::invalid_argument("tensor shape " + shape_to_string(shape_) +
                                  " does not match data length " +
                                  std::to_string(data_.size()));
    }
  }

  static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

  static TensorT full(std::vector<int> shape, S value) {
    TensorT t(std::move(shape));
    t.fill(value);
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::vector<S>& raw() { return data_; }
  const std::vector<S>& raw() const { return data_; }

  S& operator[](std::size_t i) { return data_[i]; }
  const S& operator[](std::size_t i) const { return data_[i]; }

  void fill(S value) { data_.assign(data_.size(), value); }

  /// Flat offset of a multi-index; rank must match.
  std::size_t index(std::initializer_list<int> idx) const {
    std::size_t off = 0;
    std::size_t d = 0;
    for (int i : idx) {
      off = off * static_cast<std::size_t>(shape_[d]) + static_cast<std::size_t>(i);
      ++d;
    }
    return off;
  }

  S& at(std::initializer_list<int> idx) { return data_[index(idx)]; }
  const S& at(std::initializer_list<int> idx) const { return data_[index(idx)]; }

  template <class T>
  TensorT<T> cast() const {
    TensorT<T> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<T>(data_[i]);
    return out;
  }

  bool same_shape(const std::vector<int>& other) const { return shape_ == other; }

 private:
  static std::size_t checked_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int e : shape) {
      if (e <= 0) throw std::invalid_argument("non-positive tensor extent in " + shape_to_string(shape));
      n *= static_cast<std::size_t>(e);
    }
    return n;
  }

  std::vector<int> shape_;
  std::vector<S> data_;
};

using Tensor = TensorT<float>;

}  // namespace invlab
