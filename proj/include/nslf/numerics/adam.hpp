#pragma once

#include <cstdint>
#include <vector>

#include "nslf/numerics/grad_bundle.hpp"

namespace nslf {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Per-component clamp applied to gradients before the update (L-infinity guard).
  double grad_clip = 1e3;
};

/// First/second moment estimates for one parameter bundle.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  AdamState() = default;

  template <typename Blocks>
  static AdamState for_params(const Blocks& params, AdamConfig cfg = {}) {
    AdamState s;
    s.config = cfg;
    for (const auto& b : params) {
      s.m.emplace_back(b.size(), T(0));
      s.v.emplace_back(b.size(), T(0));
    }
    return s;
  }
};

/// One bias-corrected Adam update. The step counter is incremented before bias correction.
/// Non-finite gradients leave params and state untouched and throw NumericError.
template <typename T>
void adam_step(AdamState<T>& state, const ParamBlocks<T>& params, GradBundle<T>& grads);

extern template void adam_step(AdamState<float>&, const ParamBlocks<float>&, GradBundle<float>&);
extern template void adam_step(AdamState<double>&, const ParamBlocks<double>&, GradBundle<double>&);

}  // namespace nslf
