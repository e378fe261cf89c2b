#include "nslf/numerics/adam.hpp"

#include <cmath>

namespace nslf {

template <typename T>
void adam_step(AdamState<T>& state, const ParamBlocks<T>& params, GradBundle<T>& grads) {
  grads.check_shape(params);
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam: state does not match parameter bundle");
  for (std::size_t b = 0; b < params.size(); ++b)
    if (state.m[b].size() != params[b].size() || state.v[b].size() != params[b].size())
      throw ShapeError("adam: moment shape does not match parameter block");
  if (!grads.all_finite()) throw NumericError("adam: non-finite gradient, step rejected");

  const auto& cfg = state.config;
  grads.clamp(static_cast<T>(cfg.grad_clip));
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T one_minus_b1 = static_cast<T>(1.0 - cfg.beta1);
  const T one_minus_b2 = static_cast<T>(1.0 - cfg.beta2);
  const T inv_bc1 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta1, t)));
  const T inv_bc2 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta2, t)));
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);

  for (std::size_t b = 0; b < params.size(); ++b) {
    T* p = params[b].data();
    const T* g = grads.blocks[b].data();
    T* m = state.m[b].data();
    T* v = state.v[b].data();
    const std::size_t n = params[b].size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + one_minus_b1 * g[i];
      v[i] = b2 * v[i] + one_minus_b2 * g[i] * g[i];
      const T m_hat = m[i] * inv_bc1;
      const T v_hat = v[i] * inv_bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template void adam_step(AdamState<float>&, const ParamBlocks<float>&, GradBundle<float>&);
template void adam_step(AdamState<double>&, const ParamBlocks<double>&, GradBundle<double>&);

}  // namespace nslf
