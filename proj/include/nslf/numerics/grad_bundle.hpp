#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nslf/core/errors.hpp"

namespace nslf {

/// Ordered list of mutable parameter arrays belonging to one trainable bundle.
template <typename T>
using ParamBlocks = std::vector<std::span<T>>;

template <typename T>
using ConstParamBlocks = std::vector<std::span<const T>>;

/// Gradient arrays shaped exactly like a parameter bundle's blocks.
template <typename T>
struct GradBundle {
  std::vector<std::vector<T>> blocks;

  template <typename Blocks>
  static GradBundle shaped_like(const Blocks& params) {
    GradBundle g;
    g.blocks.reserve(params.size());
    for (const auto& b : params) g.blocks.emplace_back(b.size(), T(0));
    return g;
  }

  void zero() {
    for (auto& b : blocks) std::fill(b.begin(), b.end(), T(0));
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& b : blocks)
      for (T v : b)
        if (!std::isfinite(v)) return false;
    return true;
  }

  T max_abs() const {
    T m = 0;
    for (const auto& b : blocks)
      for (T v : b) m = std::max(m, std::abs(v));
    return m;
  }

  void clamp(T limit) {
    for (auto& b : blocks)
      for (T& v : b) v = std::clamp(v, -limit, limit);
  }

  template <typename Blocks>
  void check_shape(const Blocks& params) const {
    if (params.size() != blocks.size())
      throw ShapeError("gradient bundle block count does not match parameters");
    for (std::size_t i = 0; i < blocks.size(); ++i)
      if (params[i].size() != blocks[i].size())
        throw ShapeError("gradient block size does not match parameter block");
  }
};

}  // namespace nslf
