#pragma once

#include <span>
#include <vector>

#include "afresnet/tensor.hpp"

// Forward and backward kernels for the layer set of the network. Every
// backward kernel accumulates into its output gradients (+=) so that fan-out
// in the graph sums naturally.
namespace afresnet::ops {

enum class Mode { kTrain, kEval };

// floor((length + 2*padding - kernel) / stride) + 1
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride, std::size_t padding);

// x [B, Cin, L], w [Cout, Cin, K] -> [B, Cout, Lout]. Cross-correlation with
// zero padding and no bias.
Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t padding);
void conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, std::size_t stride, std::size_t padding,
                     Tensor* dx, Tensor* dw);

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

// Per-channel statistics captured by the forward pass for backward.
struct BatchNormCache {
  Mode mode = Mode::kEval;
  std::vector<double> inv_std;
  Tensor normalized;
};

// Train mode normalizes with the biased batch statistics over (B, L) and
// blends them into the running buffers; eval mode reads the running buffers
// only.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                 Tensor& running_var, Mode mode, const BatchNormOptions& opts, BatchNormCache* cache = nullptr);
void batchnorm_backward(const Tensor& dy, const Tensor& gamma, const BatchNormCache& cache, Tensor* dx,
                        Tensor* dgamma, Tensor* dbeta);

Tensor relu(const Tensor& x);
void relu_backward(const Tensor& x, const Tensor& dy, Tensor* dx);

Tensor add(const Tensor& a, const Tensor& b);

// [B, C, L] -> [B, C]
Tensor global_avg_pool(const Tensor& x);
void global_avg_pool_backward(const Tensor& dy, std::size_t length, Tensor* dx);

// x [B, C], w [C, O], bias [O] -> [B, O]
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias);
void dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor* dw, Tensor* dbias);

struct CrossEntropyResult {
  double loss = 0.0;
  Tensor probabilities;  // [B, classes]
};

// Mean negative log-softmax of the true class.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);
// d(loss)/d(logits) = scale * (softmax - onehot) / B
void softmax_cross_entropy_backward(const Tensor& probabilities, std::span<const int> labels, double scale,
                                    Tensor* dlogits);

// Row-wise softmax of [B, classes].
Tensor softmax(const Tensor& logits);

}  // namespace afresnet::ops
