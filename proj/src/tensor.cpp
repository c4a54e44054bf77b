#include "afresnet/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace afresnet {

namespace {

std::size_t element_count(const Shape& dims) {
  if (dims.size() > 3) throw DimensionError("tensor rank " + std::to_string(dims.size()) + " exceeds 3");
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string to_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

Tensor::Tensor(Shape dims, double fill) : dims_(std::move(dims)), data_(element_count(dims_), fill) {}

Tensor::Tensor(Shape dims, std::vector<double> values) : dims_(std::move(dims)), data_(std::move(values)) {
  if (element_count(dims_) != data_.size())
    throw DimensionError("tensor of shape " + to_string(dims_) + " cannot hold " + std::to_string(data_.size()) +
                         " values");
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace afresnet
