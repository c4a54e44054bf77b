#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace afresnet {

using Shape = std::vector<std::size_t>;

// Shape mismatch, bad rank, or any other dimensional inconsistency.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(const Shape& s);

// Dense row-major array of doubles, rank <= 3 (batch x channels x length).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape dims, double fill = 0.0);
  Tensor(Shape dims, std::vector<double> values);

  const Shape& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  const double& at(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * dims_[1] + j) * dims_[2] + k]; }
  const double& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

 private:
  Shape dims_;
  std::vector<double> data_;
};

// Trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.dims()) {}
  void zero_grad() { grad.fill(0.0); }
};

}  // namespace afresnet
