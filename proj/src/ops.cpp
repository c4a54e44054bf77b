#include "afresnet/ops.hpp"

#include <algorithm>
#include <cmath>

namespace afresnet::ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank)
    throw DimensionError(std::string(what) + " must have rank " + std::to_string(rank) + ", got shape " +
                         to_string(t.dims()));
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(what) + ": shape " + to_string(a.dims()) + " vs " + to_string(b.dims()));
}

// Output positions t with 0 <= t*stride + k - padding < length.
struct TapRange {
  std::size_t begin;
  std::size_t end;
};

TapRange tap_range(std::size_t k, std::size_t stride, std::size_t padding, std::size_t length, std::size_t out_len) {
  std::size_t begin = 0;
  if (padding > k) begin = (padding - k + stride - 1) / stride;
  // last valid t: t*stride <= length - 1 + padding - k
  const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(length) - 1 + static_cast<std::ptrdiff_t>(padding) -
                            static_cast<std::ptrdiff_t>(k);
  std::size_t end = 0;
  if (hi >= 0) end = std::min(out_len, static_cast<std::size_t>(hi) / stride + 1);
  if (end < begin) end = begin;
  return {begin, end};
}

}  // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (stride == 0) throw DimensionError("conv1d stride must be positive");
  if (length + 2 * padding < kernel)
    throw DimensionError("conv1d input length " + std::to_string(length) + " shorter than kernel " +
                         std::to_string(kernel));
  return (length + 2 * padding - kernel) / stride + 1;
}

Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t padding) {
  require_rank(x, 3, "conv1d input");
  require_rank(w, 3, "conv1d weight");
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), kernel = w.dim(2);
  if (w.dim(1) != cin)
    throw DimensionError("conv1d weight " + to_string(w.dims()) + " does not match input " + to_string(x.dims()));
  const std::size_t out_len = conv1d_output_length(len, kernel, stride, padding);
  Tensor y({batch, cout, out_len});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      double* yrow = &y.at(b, o, 0);
      for (std::size_t c = 0; c < cin; ++c) {
        const double* xrow = &x.at(b, c, 0);
        const double* wk = &w.at(o, c, 0);
        for (std::size_t k = 0; k < kernel; ++k) {
          const double wv = wk[k];
          const auto [t0, t1] = tap_range(k, stride, padding, len, out_len);
          const double* xs = xrow + (t0 * stride + k - padding);
          if (stride == 1) {
            for (std::size_t t = t0; t < t1; ++t) yrow[t] += wv * xs[t - t0];
          } else {
            for (std::size_t t = t0; t < t1; ++t) yrow[t] += wv * xs[(t - t0) * stride];
          }
        }
      }
    }
  }
  return y;
}

void conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, std::size_t stride, std::size_t padding,
                     Tensor* dx, Tensor* dw) {
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), kernel = w.dim(2);
  const std::size_t out_len = dy.dim(2);
  if (dx) require_same(*dx, x, "conv1d input gradient");
  if (dw) require_same(*dw, w, "conv1d weight gradient");
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      const double* dyrow = &dy.at(b, o, 0);
      for (std::size_t c = 0; c < cin; ++c) {
        const double* xrow = &x.at(b, c, 0);
        double* dxrow = dx ? &dx->at(b, c, 0) : nullptr;
        for (std::size_t k = 0; k < kernel; ++k) {
          const auto [t0, t1] = tap_range(k, stride, padding, len, out_len);
          const std::size_t base = t0 * stride + k - padding;
          if (dw) {
            double acc = 0.0;
            for (std::size_t t = t0; t < t1; ++t) acc += dyrow[t] * xrow[base + (t - t0) * stride];
            dw->at(o, c, k) += acc;
          }
          if (dxrow) {
            const double wv = w.at(o, c, k);
            for (std::size_t t = t0; t < t1; ++t) dxrow[base + (t - t0) * stride] += wv * dyrow[t];
          }
        }
      }
    }
  }
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                 Tensor& running_var, Mode mode, const BatchNormOptions& opts, BatchNormCache* cache) {
  require_rank(x, 3, "batchnorm input");
  const std::size_t batch = x.dim(0), channels = x.dim(1), len = x.dim(2);
  for (const Tensor* t : {&gamma, &beta, static_cast<const Tensor*>(&running_mean), static_cast<const Tensor*>(&running_var)}) {
    if (t->size() != channels)
      throw DimensionError("batchnorm parameter of shape " + to_string(t->dims()) + " does not match " +
                           std::to_string(channels) + " channels");
  }
  if (!(opts.eps > 0.0)) throw std::invalid_argument("batchnorm eps must be positive");
  const std::size_t count = batch * len;
  if (mode == Mode::kTrain && count < 2)
    throw DimensionError("batchnorm in train mode needs at least 2 values per channel, got " + std::to_string(count));

  std::vector<double> mean(channels), inv_std(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* row = &x.at(b, c, 0);
        for (std::size_t t = 0; t < len; ++t) sum += row[t];
      }
      const double m = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* row = &x.at(b, c, 0);
        for (std::size_t t = 0; t < len; ++t) sq += (row[t] - m) * (row[t] - m);
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = m;
      inv_std[c] = 1.0 / std::sqrt(var + opts.eps);
      running_mean[c] = (1.0 - opts.momentum) * running_mean[c] + opts.momentum * m;
      running_var[c] = (1.0 - opts.momentum) * running_var[c] + opts.momentum * var;
    } else {
      mean[c] = running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(running_var[c] + opts.eps);
    }
  }

  Tensor y(x.dims());
  Tensor normalized;
  if (cache) normalized = Tensor(x.dims());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double* row = &x.at(b, c, 0);
      double* out = &y.at(b, c, 0);
      const double m = mean[c], s = inv_std[c], g = gamma[c], be = beta[c];
      if (cache) {
        double* nrow = &normalized.at(b, c, 0);
        for (std::size_t t = 0; t < len; ++t) {
          nrow[t] = (row[t] - m) * s;
          out[t] = g * nrow[t] + be;
        }
      } else {
        for (std::size_t t = 0; t < len; ++t) out[t] = g * ((row[t] - m) * s) + be;
      }
    }
  }
  if (cache) {
    cache->mode = mode;
    cache->inv_std = std::move(inv_std);
    cache->normalized = std::move(normalized);
  }
  return y;
}

void batchnorm_backward(const Tensor& dy, const Tensor& gamma, const BatchNormCache& cache, Tensor* dx,
                        Tensor* dgamma, Tensor* dbeta) {
  const Tensor& xhat = cache.normalized;
  const std::size_t batch = dy.dim(0), channels = dy.dim(1), len = dy.dim(2);
  const double count = static_cast<double>(batch * len);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double* g = &dy.at(b, c, 0);
      const double* h = &xhat.at(b, c, 0);
      for (std::size_t t = 0; t < len; ++t) {
        sum_dy += g[t];
        sum_dy_xhat += g[t] * h[t];
      }
    }
    if (dgamma) (*dgamma)[c] += sum_dy_xhat;
    if (dbeta) (*dbeta)[c] += sum_dy;
    if (!dx) continue;
    const double scale = gamma[c] * cache.inv_std[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const double* g = &dy.at(b, c, 0);
      const double* h = &xhat.at(b, c, 0);
      double* out = &dx->at(b, c, 0);
      if (cache.mode == Mode::kTrain) {
        const double mean_dy = sum_dy / count, mean_dy_xhat = sum_dy_xhat / count;
        for (std::size_t t = 0; t < len; ++t) out[t] += scale * (g[t] - mean_dy - h[t] * mean_dy_xhat);
      } else {
        for (std::size_t t = 0; t < len; ++t) out[t] += scale * g[t];
      }
    }
  }
}

Tensor relu(const Tensor& x) {
  Tensor y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

void relu_backward(const Tensor& x, const Tensor& dy, Tensor* dx) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0) (*dx)[i] += dy[i];
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  Tensor y(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 3, "global_avg_pool input");
  const std::size_t batch = x.dim(0), channels = x.dim(1), len = x.dim(2);
  if (len == 0) throw DimensionError("global_avg_pool over empty length");
  Tensor y({batch, channels});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double* row = &x.at(b, c, 0);
      double sum = 0.0;
      for (std::size_t t = 0; t < len; ++t) sum += row[t];
      y.at(b, c) = sum / static_cast<double>(len);
    }
  }
  return y;
}

void global_avg_pool_backward(const Tensor& dy, std::size_t length, Tensor* dx) {
  const std::size_t batch = dy.dim(0), channels = dy.dim(1);
  const double inv = 1.0 / static_cast<double>(length);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = dy.at(b, c) * inv;
      double* out = &dx->at(b, c, 0);
      for (std::size_t t = 0; t < length; ++t) out[t] += g;
    }
  }
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_rank(x, 2, "dense input");
  require_rank(w, 2, "dense weight");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  if (w.dim(0) != in || bias.size() != out)
    throw DimensionError("dense weight " + to_string(w.dims()) + " / bias " + to_string(bias.dims()) +
                         " do not match input " + to_string(x.dims()));
  Tensor y({batch, out});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += x.at(b, i) * w.at(i, o);
      y.at(b, o) = acc;
    }
  }
  return y;
}

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor* dw, Tensor* dbias) {
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy.at(b, o);
      if (dbias) (*dbias)[o] += g;
      for (std::size_t i = 0; i < in; ++i) {
        if (dw) dw->at(i, o) += x.at(b, i) * g;
        if (dx) dx->at(b, i) += w.at(i, o) * g;
      }
    }
  }
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax input");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  Tensor p(logits.dims());
  for (std::size_t b = 0; b < batch; ++b) {
    double mx = logits.at(b, 0);
    for (std::size_t k = 1; k < classes; ++k) mx = std::max(mx, logits.at(b, k));
    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += std::exp(logits.at(b, k) - mx);
    for (std::size_t k = 0; k < classes; ++k) p.at(b, k) = std::exp(logits.at(b, k) - mx) / z;
  }
  return p;
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross-entropy logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (batch == 0) throw DimensionError("cross-entropy over empty batch");
  if (labels.size() != batch)
    throw DimensionError("cross-entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(batch));
  for (double v : logits.values())
    if (!std::isfinite(v)) throw NumericError("cross-entropy received non-finite logits");
  CrossEntropyResult r;
  r.probabilities = Tensor(logits.dims());
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes)
      throw std::invalid_argument("cross-entropy label " + std::to_string(label) + " out of range");
    std::size_t arg = 0;
    for (std::size_t k = 1; k < classes; ++k)
      if (logits.at(b, k) > logits.at(b, arg)) arg = k;
    const double mx = logits.at(b, arg);
    // log(1 + rest) keeps precision for confident rows.
    double rest = 0.0;
    for (std::size_t k = 0; k < classes; ++k)
      if (k != arg) rest += std::exp(logits.at(b, k) - mx);
    const double log_z = std::log1p(rest);
    for (std::size_t k = 0; k < classes; ++k) r.probabilities.at(b, k) = std::exp(logits.at(b, k) - mx - log_z);
    total += log_z - (logits.at(b, label) - mx);
  }
  r.loss = total / static_cast<double>(batch);
  return r;
}

void softmax_cross_entropy_backward(const Tensor& probabilities, std::span<const int> labels, double scale,
                                    Tensor* dlogits) {
  const std::size_t batch = probabilities.dim(0), classes = probabilities.dim(1);
  const double s = scale / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < classes; ++k) {
      const double onehot = static_cast<int>(k) == labels[b] ? 1.0 : 0.0;
      dlogits->at(b, k) += s * (probabilities.at(b, k) - onehot);
    }
  }
}

}  // namespace afresnet::ops
