#include "afresnet/adam.hpp"

#include <cmath>
#include <string>

namespace afresnet {

AdamState make_adam_state(std::span<const Parameter> params, const AdamOptions& options) {
  AdamState state;
  state.options = options;
  for (const Parameter& p : params) {
    state.first_moment.emplace_back(p.value.dims());
    state.second_moment.emplace_back(p.value.dims());
  }
  return state;
}

void adam_step(std::span<Parameter> params, AdamState& state) {
  if (params.size() != state.first_moment.size())
    throw DimensionError("adam state tracks " + std::to_string(state.first_moment.size()) + " parameters, got " +
                         std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    if (!p.grad.same_shape(p.value) || !state.first_moment[i].same_shape(p.value))
      throw DimensionError("adam: shape mismatch for parameter '" + p.name + "'");
    for (double g : p.grad.values())
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
  }

  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g;
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p.value[j] -= o.lr * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace afresnet
