#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "afresnet/tensor.hpp"

namespace afresnet {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

AdamState make_adam_state(std::span<const Parameter> params, const AdamOptions& options = {});

// One bias-corrected Adam update using params[i].grad. The step counter is
// incremented before bias correction. Throws NumericError naming the
// parameter when a gradient is non-finite; in that case nothing is updated.
void adam_step(std::span<Parameter> params, AdamState& state);

}  // namespace afresnet
